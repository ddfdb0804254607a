//! Sprays: symmetric second-order vector fields given in a chart by their
//! acceleration term, together with projective transforms, automorphisms,
//! and pushforwards.
//!
//! A spray is determined by `accel(x, v)`, the second derivative of its
//! geodesics, which must be quadratically homogeneous in v:
//! accel(x, s v) = s^2 accel(x, v). Geodesics solve x' = v,
//! v' = accel(x, v). Where a spray has an elementary solution the closed
//! form is attached and preferred by the integrator; a two-point connector
//! (when one exists) feeds the geodesic-convexity check.

mod integrate;

pub use integrate::{
    geodesic_flow, integrate_geodesic, integrate_with_captures, reparametrize_check, Method,
    ReparametrizeReport, Trajectory,
};

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::space::{shift_grid_data, ModelSpace, Vector};

pub type AccelFn = Arc<dyn Fn(&Vector, &Vector) -> Vector + Send + Sync>;
/// t, x0, v0 -> (x(t), v(t))
pub type GeodesicFn = Arc<dyn Fn(f64, &Vector, &Vector) -> Result<(Vector, Vector)> + Send + Sync>;
/// p, q, s in [0,1] -> point on the connecting geodesic
pub type TwoPointFn = Arc<dyn Fn(&Vector, &Vector, f64) -> Vector + Send + Sync>;
pub type PointMapFn = Arc<dyn Fn(&Vector) -> Vector + Send + Sync>;
/// x, u -> derivative (or second-derivative diagonal) at x applied to u
pub type DerivMapFn = Arc<dyn Fn(&Vector, &Vector) -> Vector + Send + Sync>;

#[derive(Clone)]
pub struct Spray {
    label: String,
    accel: AccelFn,
    closed_form: Option<GeodesicFn>,
    two_point: Option<TwoPointFn>,
}

impl Spray {
    pub fn new(label: &str, accel: AccelFn) -> Spray {
        Spray {
            label: label.to_string(),
            accel,
            closed_form: None,
            two_point: None,
        }
    }

    pub fn with_closed_form(mut self, f: GeodesicFn) -> Spray {
        self.closed_form = Some(f);
        self
    }

    pub fn with_two_point(mut self, f: TwoPointFn) -> Spray {
        self.two_point = Some(f);
        self
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn accel(&self, x: &Vector, v: &Vector) -> Vector {
        (self.accel)(x, v)
    }

    pub fn has_closed_form(&self) -> bool {
        self.closed_form.is_some()
    }

    pub fn closed_form(&self, t: f64, x0: &Vector, v0: &Vector) -> Option<Result<(Vector, Vector)>> {
        self.closed_form.as_ref().map(|f| f(t, x0, v0))
    }

    pub fn two_point(&self, p: &Vector, q: &Vector, s: f64) -> Option<Vector> {
        self.two_point.as_ref().map(|f| f(p, q, s))
    }

    pub fn has_two_point(&self) -> bool {
        self.two_point.is_some()
    }
}

/// The flat spray: zero acceleration, affine geodesics, segment connector.
pub fn flat_spray() -> Spray {
    Spray::new("flat", Arc::new(|_x, v| Vector::zeros(v.dim())))
        .with_closed_form(Arc::new(|t, x0, v0| Ok((x0.add_scaled(t, v0), v0.clone()))))
        .with_two_point(Arc::new(|p, q, s| p.add_scaled(s, &q.sub(p))))
}

/// Trapezoid quadrature weights of a smooth bump supported in
/// (-eps/2, eps/2), so that dotting with grid samples integrates v against
/// the bump.
pub fn bump_weights(space: &ModelSpace, eps: f64) -> Result<Vector> {
    let spec = space
        .grid_spec()
        .ok_or_else(|| Error::Unsupported("bump_weights needs a grid space".into()))?;
    if spec.codomain_dim != 1 {
        return Err(Error::Unsupported("bump_weights needs a scalar grid".into()));
    }
    if eps < 2.0 * spec.step {
        return Err(Error::Config(format!(
            "bump width {} under-resolved by grid step {}",
            eps, spec.step
        )));
    }
    if -spec.min < eps / 2.0 || spec.max < eps / 2.0 {
        return Err(Error::Config(format!(
            "bump of width {} does not fit inside [{}, {}]",
            eps, spec.min, spec.max
        )));
    }
    let n = spec.n_points();
    let mut w = Vector::zeros(space.dim());
    for i in 0..n {
        let u = 2.0 * spec.point(i) / eps;
        if u.abs() < 1.0 {
            let weight = if i == 0 || i + 1 == n { 0.5 } else { 1.0 };
            w[i] = weight * spec.step * (1.0 - 1.0 / (1.0 - u * u)).exp();
        }
    }
    Ok(w)
}

fn log1p_ratio(z: f64) -> f64 {
    // ln(1 + z) / z, stable near z = 0
    if z.abs() < 1e-8 {
        1.0 - z / 2.0 + z * z / 3.0
    } else {
        z.ln_1p() / z
    }
}

/// Projective perturbation of the flat spray by a localized linear
/// functional: accel(x, v) = -2 alpha(v) v where alpha integrates v against
/// a bump of width eps at the origin. Geodesics are logarithmic
/// reparametrizations of rays: with u0 = alpha(v0),
///
/// ```text
/// x(t) = x0 + v0 ln(1 + 2 u0 t) / (2 u0),   v(t) = v0 / (1 + 2 u0 t),
/// ```
///
/// defined while 1 + 2 u0 t > 0.
pub fn bump_perturbed_spray(space: &ModelSpace, eps: f64) -> Result<Spray> {
    let weights = bump_weights(space, eps)?;
    let alpha = {
        let weights = weights.clone();
        move |v: &Vector| -> f64 {
            v.as_slice()
                .iter()
                .zip(weights.as_slice())
                .map(|(a, b)| a * b)
                .sum()
        }
    };
    let accel = {
        let alpha = alpha.clone();
        Arc::new(move |_x: &Vector, v: &Vector| v.scaled(-2.0 * alpha(v)))
    };
    let closed = Arc::new(move |t: f64, x0: &Vector, v0: &Vector| {
        let u0 = alpha(v0);
        let denom = 1.0 + 2.0 * u0 * t;
        if denom <= 0.0 {
            return Err(Error::DomainBoundary {
                t_limit: -1.0 / (2.0 * u0),
            });
        }
        let phi = t * log1p_ratio(2.0 * u0 * t);
        Ok((x0.add_scaled(phi, v0), v0.scaled(1.0 / denom)))
    });
    Ok(Spray::new(&format!("bump:{eps}"), accel).with_closed_form(closed))
}

/// The projective factor P(x, v) = -2 alpha(v) relating the bump-perturbed
/// spray to the flat one.
pub fn bump_factor(space: &ModelSpace, eps: f64) -> Result<ProjectiveFactor> {
    let weights = bump_weights(space, eps)?;
    Ok(ProjectiveFactor::new(
        &format!("bump-factor:{eps}"),
        Arc::new(move |_x, v: &Vector| {
            -2.0 * v
                .as_slice()
                .iter()
                .zip(weights.as_slice())
                .map(|(a, b)| a * b)
                .sum::<f64>()
        }),
    ))
}

/// Pointwise unit-sphere spray on loops into R^3:
/// accel(x, v)(theta) = -<v(theta), v(theta)> x(theta). Each loop point
/// follows an independent great circle; the closed form requires the base
/// loop on the sphere and the velocity pointwise tangent.
pub fn sphere_pointwise_spray(space: &ModelSpace) -> Result<Spray> {
    let spec = space
        .grid_spec()
        .ok_or_else(|| Error::Unsupported("sphere spray needs a grid space".into()))?;
    if spec.codomain_dim != 3 {
        return Err(Error::Unsupported("sphere spray needs loops into R^3".into()));
    }
    let n = spec.n_points();
    let accel = Arc::new(move |x: &Vector, v: &Vector| {
        let mut out = Vector::zeros(x.dim());
        for i in 0..n {
            let b = i * 3;
            let speed_sq = v[b] * v[b] + v[b + 1] * v[b + 1] + v[b + 2] * v[b + 2];
            out[b] = -speed_sq * x[b];
            out[b + 1] = -speed_sq * x[b + 1];
            out[b + 2] = -speed_sq * x[b + 2];
        }
        out
    });
    let closed = Arc::new(move |t: f64, x0: &Vector, v0: &Vector| {
        let mut worst_radius = 0.0_f64;
        let mut worst_tangent = 0.0_f64;
        for i in 0..n {
            let b = i * 3;
            let r = (x0[b] * x0[b] + x0[b + 1] * x0[b + 1] + x0[b + 2] * x0[b + 2]).sqrt();
            worst_radius = worst_radius.max((r - 1.0).abs());
            let dot = x0[b] * v0[b] + x0[b + 1] * v0[b + 1] + x0[b + 2] * v0[b + 2];
            worst_tangent = worst_tangent.max(dot.abs());
        }
        if worst_radius > 1e-9 {
            return Err(Error::OffSphere {
                deviation: worst_radius,
            });
        }
        if worst_tangent > 1e-9 {
            return Err(Error::NotTangentToSphere {
                deviation: worst_tangent,
            });
        }
        let mut x = Vector::zeros(x0.dim());
        let mut v = Vector::zeros(v0.dim());
        for i in 0..n {
            let b = i * 3;
            let omega =
                (v0[b] * v0[b] + v0[b + 1] * v0[b + 1] + v0[b + 2] * v0[b + 2]).sqrt();
            if omega < 1e-300 {
                for c in 0..3 {
                    x[b + c] = x0[b + c];
                }
                continue;
            }
            let (sin, cos) = (omega * t).sin_cos();
            for c in 0..3 {
                x[b + c] = cos * x0[b + c] + sin * v0[b + c] / omega;
                v[b + c] = -omega * sin * x0[b + c] + cos * v0[b + c];
            }
        }
        Ok((x, v))
    });
    let two_point = Arc::new(move |p: &Vector, q: &Vector, s: f64| {
        let mut out = Vector::zeros(p.dim());
        for i in 0..n {
            let b = i * 3;
            let dot = (p[b] * q[b] + p[b + 1] * q[b + 1] + p[b + 2] * q[b + 2])
                .clamp(-1.0, 1.0);
            let angle = dot.acos();
            if angle < 1e-12 {
                for c in 0..3 {
                    out[b + c] = p[b + c];
                }
            } else {
                let denom = angle.sin();
                let (a, bq) = (((1.0 - s) * angle).sin() / denom, (s * angle).sin() / denom);
                for c in 0..3 {
                    out[b + c] = a * p[b + c] + bq * q[b + c];
                }
            }
        }
        out
    });
    Ok(Spray::new("sphere", accel)
        .with_closed_form(closed)
        .with_two_point(two_point))
}

pub type FactorFn = Arc<dyn Fn(&Vector, &Vector) -> f64 + Send + Sync>;

/// Degree-one homogeneous scalar factor P(x, v) for projective transforms.
#[derive(Clone)]
pub struct ProjectiveFactor {
    label: String,
    f: FactorFn,
}

impl ProjectiveFactor {
    pub fn new(label: &str, f: FactorFn) -> Self {
        ProjectiveFactor {
            label: label.to_string(),
            f,
        }
    }

    pub fn eval(&self, x: &Vector, v: &Vector) -> f64 {
        (self.f)(x, v)
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn negated(&self) -> ProjectiveFactor {
        let f = self.f.clone();
        ProjectiveFactor {
            label: format!("-({})", self.label),
            f: Arc::new(move |x, v| -f(x, v)),
        }
    }
}

/// The projectively equivalent spray accel + P(x, v) v. Closed forms do not
/// transfer (the geodesics are reparametrized), so the result integrates
/// numerically unless a closed form is attached by the caller.
pub fn projective_transform(spray: &Spray, factor: &ProjectiveFactor) -> Spray {
    let base = spray.clone();
    let p = factor.clone();
    Spray::new(
        &format!("{}+{}", spray.label(), factor.label()),
        Arc::new(move |x, v| base.accel(x, v).add_scaled(p.eval(x, v), v)),
    )
}

/// Chart automorphism with enough derivative data to push sprays forward:
/// the map, its inverse, both first derivatives, and the diagonal of both
/// second derivatives.
#[derive(Clone)]
pub struct Automorphism {
    label: String,
    forward: PointMapFn,
    inverse: PointMapFn,
    d_forward: DerivMapFn,
    d_inverse: DerivMapFn,
    d2_forward: DerivMapFn,
    d2_inverse: DerivMapFn,
}

impl Automorphism {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        label: &str,
        forward: PointMapFn,
        inverse: PointMapFn,
        d_forward: DerivMapFn,
        d_inverse: DerivMapFn,
        d2_forward: DerivMapFn,
        d2_inverse: DerivMapFn,
    ) -> Self {
        Automorphism {
            label: label.to_string(),
            forward,
            inverse,
            d_forward,
            d_inverse,
            d2_forward,
            d2_inverse,
        }
    }

    /// Linear automorphism: derivative is the map itself, second derivative
    /// vanishes.
    pub fn linear(label: &str, forward: PointMapFn, inverse: PointMapFn) -> Self {
        let df = forward.clone();
        let di = inverse.clone();
        Automorphism {
            label: label.to_string(),
            forward,
            inverse,
            d_forward: Arc::new(move |_x, u| df(u)),
            d_inverse: Arc::new(move |_x, u| di(u)),
            d2_forward: Arc::new(|_x, u| Vector::zeros(u.dim())),
            d2_inverse: Arc::new(|_x, u| Vector::zeros(u.dim())),
        }
    }

    pub fn identity() -> Self {
        Automorphism::linear(
            "identity",
            Arc::new(|x: &Vector| x.clone()),
            Arc::new(|x: &Vector| x.clone()),
        )
    }

    /// Translation f(.) -> f(. - a) on a grid space; a must be grid aligned.
    /// Non-periodic grids zero-fill at the exposed boundary.
    pub fn grid_translation(space: &ModelSpace, a: f64) -> Result<Self> {
        let spec = space
            .grid_spec()
            .ok_or_else(|| Error::Unsupported("grid_translation needs a grid space".into()))?
            .clone();
        let raw = a / spec.step;
        if (raw - raw.round()).abs() > 1e-9 {
            return Err(Error::UnalignedShift {
                shift: a,
                step: spec.step,
            });
        }
        let cells = raw.round() as isize;
        let shift = move |v: &Vector, c: isize| {
            Vector(shift_grid_data(
                spec.n_points(),
                spec.codomain_dim,
                spec.periodic,
                v.as_slice(),
                c,
            ))
        };
        let bwd = shift.clone();
        Ok(Automorphism::linear(
            &format!("translate:{a}"),
            Arc::new(move |x: &Vector| shift(x, cells)),
            Arc::new(move |x: &Vector| bwd(x, -cells)),
        ))
    }

    pub fn scaling(c: f64) -> Result<Self> {
        if c == 0.0 || !c.is_finite() {
            return Err(Error::Config("scaling factor must be nonzero".into()));
        }
        Ok(Automorphism::linear(
            &format!("scale:{c}"),
            Arc::new(move |x: &Vector| x.scaled(c)),
            Arc::new(move |x: &Vector| x.scaled(1.0 / c)),
        ))
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn forward(&self, x: &Vector) -> Vector {
        (self.forward)(x)
    }

    pub fn inverse(&self, x: &Vector) -> Vector {
        (self.inverse)(x)
    }

    pub fn d_forward(&self, x: &Vector, u: &Vector) -> Vector {
        (self.d_forward)(x, u)
    }

    pub fn d_inverse(&self, x: &Vector, u: &Vector) -> Vector {
        (self.d_inverse)(x, u)
    }

    pub fn d2_forward(&self, x: &Vector, u: &Vector) -> Vector {
        (self.d2_forward)(x, u)
    }

    /// The inverse automorphism as a first-class object.
    pub fn inverted(&self) -> Automorphism {
        Automorphism {
            label: format!("inv:{}", self.label),
            forward: self.inverse.clone(),
            inverse: self.forward.clone(),
            d_forward: self.d_inverse.clone(),
            d_inverse: self.d_forward.clone(),
            d2_forward: self.d2_inverse.clone(),
            d2_inverse: self.d2_forward.clone(),
        }
    }
}

/// Pushforward of a spray along an automorphism phi:
///
/// ```text
/// Z(x, y) = d2phi(z)(w, w) + dphi(z)(accel(z, w)),
///     z = phi^{-1}(x),  w = dphi^{-1}(x)(y).
/// ```
///
/// Geodesics of the result are the phi-images of the original geodesics, so
/// a closed form transfers by conjugation.
pub fn pushforward_spray(spray: &Spray, phi: &Automorphism) -> Spray {
    let base = spray.clone();
    let phi_a = phi.clone();
    let accel = Arc::new(move |x: &Vector, y: &Vector| {
        let z = phi_a.inverse(x);
        let w = phi_a.d_inverse(x, y);
        let bent = phi_a.d2_forward(&z, &w);
        let carried = phi_a.d_forward(&z, &base.accel(&z, &w));
        bent.add(&carried)
    });
    let mut out = Spray::new(&format!("push:{}:{}", phi.label(), spray.label()), accel);
    if spray.has_closed_form() {
        let base = spray.clone();
        let phi_c = phi.clone();
        out = out.with_closed_form(Arc::new(move |t, x0: &Vector, v0: &Vector| {
            let z0 = phi_c.inverse(x0);
            let w0 = phi_c.d_inverse(x0, v0);
            let (g, dg) = base
                .closed_form(t, &z0, &w0)
                .expect("base closed form present")?;
            Ok((phi_c.forward(&g), phi_c.d_forward(&g, &dg)))
        }));
    }
    if spray.has_two_point() {
        let base = spray.clone();
        let phi_t = phi.clone();
        out = out.with_two_point(Arc::new(move |p: &Vector, q: &Vector, s| {
            let seg = base
                .two_point(&phi_t.inverse(p), &phi_t.inverse(q), s)
                .expect("base connector present");
            phi_t.forward(&seg)
        }));
    }
    out
}

#[derive(Clone, Debug)]
pub struct HomogeneityReport {
    pub samples: usize,
    pub scales: Vec<f64>,
    pub max_relative_error: f64,
}

pub const HOMOGENEITY_SCALES: [f64; 4] = [-2.0, -1.0, 0.5, 3.0];

/// Quadratic homogeneity of the acceleration: accel(x, s v) = s^2
/// accel(x, v), reported as the worst relative sup-norm discrepancy.
pub fn check_homogeneity(
    spray: &Spray,
    samples: &[(Vector, Vector)],
    scales: &[f64],
) -> HomogeneityReport {
    let mut worst: f64 = 0.0;
    for (x, v) in samples {
        let base = spray.accel(x, v);
        for &s in scales {
            let scaled = spray.accel(x, &v.scaled(s));
            let expected = base.scaled(s * s);
            let num = scaled.sub(&expected).sup_norm();
            let den = expected.sup_norm().max(1e-30);
            worst = worst.max(num / den);
        }
    }
    HomogeneityReport {
        samples: samples.len(),
        scales: scales.to_vec(),
        max_relative_error: worst,
    }
}

#[derive(Clone, Debug)]
pub struct AutomorphismReport {
    pub samples: usize,
    pub max_discrepancy: f64,
}

/// Whether phi maps the spray to itself: sup-norm gap between the pushed
/// acceleration and the original over the sample pairs.
pub fn check_automorphism(
    spray: &Spray,
    phi: &Automorphism,
    samples: &[(Vector, Vector)],
) -> AutomorphismReport {
    let pushed = pushforward_spray(spray, phi);
    let mut worst: f64 = 0.0;
    for (x, v) in samples {
        let gap = pushed.accel(x, v).sub(&spray.accel(x, v)).sup_norm();
        worst = worst.max(gap);
    }
    AutomorphismReport {
        samples: samples.len(),
        max_discrepancy: worst,
    }
}
