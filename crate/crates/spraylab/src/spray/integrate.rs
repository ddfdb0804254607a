//! Geodesic integration: classical RK4 on the first-order system
//! (x, v)' = (v, accel(x, v)), closed forms when a spray carries one, and
//! the reparametrization check for projectively related sprays.

use std::io::Write;

use crate::error::{Error, Result};
use crate::space::Vector;
use crate::spray::{ProjectiveFactor, Spray};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Method {
    /// Closed form when the spray has one, RK4 otherwise.
    Auto,
    Rk4,
    ClosedForm,
}

impl Method {
    pub(crate) fn resolve(self, spray: &Spray) -> Result<Method> {
        match self {
            Method::Auto => {
                if spray.has_closed_form() {
                    Ok(Method::ClosedForm)
                } else {
                    Ok(Method::Rk4)
                }
            }
            Method::Rk4 => Ok(Method::Rk4),
            Method::ClosedForm => {
                if spray.has_closed_form() {
                    Ok(Method::ClosedForm)
                } else {
                    Err(Error::Unsupported(format!(
                        "spray '{}' has no closed-form geodesics",
                        spray.label()
                    )))
                }
            }
        }
    }
}

impl std::fmt::Display for Method {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Method::Auto => write!(f, "auto"),
            Method::Rk4 => write!(f, "rk4"),
            Method::ClosedForm => write!(f, "closed-form"),
        }
    }
}

/// A geodesic sampled at increasing times.
#[derive(Clone, Debug)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub positions: Vec<Vector>,
    pub velocities: Vec<Vector>,
    pub method: Method,
    /// RK4 step bound the samples were produced with.
    pub step: f64,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn state(&self, i: usize) -> (f64, &Vector, &Vector) {
        (self.times[i], &self.positions[i], &self.velocities[i])
    }

    /// Index of the sample closest to t.
    pub fn nearest(&self, t: f64) -> usize {
        let mut best = 0;
        let mut gap = f64::INFINITY;
        for (i, &s) in self.times.iter().enumerate() {
            if (s - t).abs() < gap {
                gap = (s - t).abs();
                best = i;
            }
        }
        best
    }

    /// Plain CSV: header t,x_0..x_{d-1},v_0..v_{d-1}, one row per sample,
    /// values round-trippable through f64.
    pub fn write_csv<W: Write>(&self, out: &mut W) -> Result<()> {
        let dim = self.positions.first().map_or(0, Vector::dim);
        write!(out, "t")?;
        for i in 0..dim {
            write!(out, ",x_{i}")?;
        }
        for i in 0..dim {
            write!(out, ",v_{i}")?;
        }
        writeln!(out)?;
        for i in 0..self.len() {
            write!(out, "{:.16e}", self.times[i])?;
            for c in self.positions[i].as_slice() {
                write!(out, ",{c:.16e}")?;
            }
            for c in self.velocities[i].as_slice() {
                write!(out, ",{c:.16e}")?;
            }
            writeln!(out)?;
        }
        Ok(())
    }
}

const BLOWUP_LIMIT: f64 = 1e12;

fn check_state(t: f64, x: &Vector, v: &Vector) -> Result<()> {
    if !x.is_finite() || !v.is_finite() || x.sup_norm() > BLOWUP_LIMIT || v.sup_norm() > BLOWUP_LIMIT
    {
        return Err(Error::BlowUp { t });
    }
    Ok(())
}

/// One classical RK4 step of size h from (x, v).
pub fn rk4_step(spray: &Spray, x: &Vector, v: &Vector, h: f64) -> (Vector, Vector) {
    let a1 = spray.accel(x, v);
    let x2 = x.add_scaled(0.5 * h, v);
    let v2 = v.add_scaled(0.5 * h, &a1);
    let a2 = spray.accel(&x2, &v2);
    let x3 = x.add_scaled(0.5 * h, &v2);
    let v3 = v.add_scaled(0.5 * h, &a2);
    let a3 = spray.accel(&x3, &v3);
    let x4 = x.add_scaled(h, &v3);
    let v4 = v.add_scaled(h, &a3);
    let a4 = spray.accel(&x4, &v4);
    let sixth = h / 6.0;
    let new_x = x
        .add_scaled(sixth, v)
        .add_scaled(2.0 * sixth, &v2)
        .add_scaled(2.0 * sixth, &v3)
        .add_scaled(sixth, &v4);
    let new_v = v
        .add_scaled(sixth, &a1)
        .add_scaled(2.0 * sixth, &a2)
        .add_scaled(2.0 * sixth, &a3)
        .add_scaled(sixth, &a4);
    (new_x, new_v)
}

/// RK4 from (x, v) at time t0 to time t1, landing exactly: the interval is
/// cut into uniform steps no longer than `step`.
fn rk4_leg(
    spray: &Spray,
    mut x: Vector,
    mut v: Vector,
    t0: f64,
    t1: f64,
    step: f64,
) -> Result<(Vector, Vector)> {
    let span = t1 - t0;
    if span == 0.0 {
        return Ok((x, v));
    }
    let n = (span.abs() / step).ceil().max(1.0) as usize;
    let h = span / n as f64;
    for k in 0..n {
        let (nx, nv) = rk4_step(spray, &x, &v, h);
        x = nx;
        v = nv;
        check_state(t0 + h * (k + 1) as f64, &x, &v)?;
    }
    Ok((x, v))
}

fn validate_step(step: f64) -> Result<()> {
    if !(step.is_finite() && step > 0.0) {
        return Err(Error::Config(format!("integration step {step} must be positive")));
    }
    Ok(())
}

/// Sample the geodesic through (x0, v0) at the given times (any signs, any
/// order; duplicates collapse). RK4 marches out from t = 0 in both
/// directions, landing exactly on every requested time.
pub fn integrate_with_captures(
    spray: &Spray,
    x0: &Vector,
    v0: &Vector,
    captures: &[f64],
    step: f64,
    method: Method,
) -> Result<Trajectory> {
    validate_step(step)?;
    if x0.dim() != v0.dim() {
        return Err(Error::DimensionMismatch {
            expected: x0.dim(),
            got: v0.dim(),
        });
    }
    if captures.iter().any(|t| !t.is_finite()) {
        return Err(Error::Config("capture times must be finite".into()));
    }
    let mut times: Vec<f64> = captures.to_vec();
    times.sort_by(|a, b| a.partial_cmp(b).unwrap());
    times.dedup_by(|a, b| (*a - *b).abs() <= step * 1e-9);
    let resolved = method.resolve(spray)?;

    let mut out = Trajectory {
        times: times.clone(),
        positions: Vec::with_capacity(times.len()),
        velocities: Vec::with_capacity(times.len()),
        method: resolved,
        step,
    };
    if resolved == Method::ClosedForm {
        for &t in &times {
            let (x, v) = spray.closed_form(t, x0, v0).expect("resolved closed form")?;
            check_state(t, &x, &v)?;
            out.positions.push(x);
            out.velocities.push(v);
        }
        return Ok(out);
    }

    let split = times.partition_point(|&t| t < 0.0);
    let mut states: Vec<Option<(Vector, Vector)>> = vec![None; times.len()];
    // Backward sweep over the negative captures, nearest first.
    let mut x = x0.clone();
    let mut v = v0.clone();
    let mut t_prev = 0.0;
    for i in (0..split).rev() {
        let (nx, nv) = rk4_leg(spray, x, v, t_prev, times[i], step)?;
        states[i] = Some((nx.clone(), nv.clone()));
        x = nx;
        v = nv;
        t_prev = times[i];
    }
    // Forward sweep over the rest.
    x = x0.clone();
    v = v0.clone();
    t_prev = 0.0;
    for i in split..times.len() {
        let (nx, nv) = rk4_leg(spray, x, v, t_prev, times[i], step)?;
        states[i] = Some((nx.clone(), nv.clone()));
        x = nx;
        v = nv;
        t_prev = times[i];
    }
    for s in states {
        let (x, v) = s.expect("every capture visited");
        out.positions.push(x);
        out.velocities.push(v);
    }
    Ok(out)
}

/// Integrate over a span containing 0, sampling every multiple of `step`
/// plus both endpoints.
pub fn integrate_geodesic(
    spray: &Spray,
    x0: &Vector,
    v0: &Vector,
    t_span: (f64, f64),
    step: f64,
    method: Method,
) -> Result<Trajectory> {
    validate_step(step)?;
    let (t_min, t_max) = t_span;
    if !(t_min <= 0.0 && 0.0 <= t_max && t_min < t_max) {
        return Err(Error::Config(format!(
            "time span [{t_min}, {t_max}] must contain 0"
        )));
    }
    let k_min = (t_min / step).ceil() as i64;
    let k_max = (t_max / step).floor() as i64;
    let mut captures = Vec::with_capacity((k_max - k_min) as usize + 3);
    captures.push(t_min);
    for k in k_min..=k_max {
        captures.push(k as f64 * step);
    }
    captures.push(t_max);
    integrate_with_captures(spray, x0, v0, &captures, step, method)
}

/// Endpoint of the geodesic through (x0, v0) at time t.
pub fn geodesic_flow(
    spray: &Spray,
    x0: &Vector,
    v0: &Vector,
    t: f64,
    step: f64,
    method: Method,
) -> Result<(Vector, Vector)> {
    let traj = integrate_with_captures(spray, x0, v0, &[t], step, method)?;
    Ok((traj.positions[0].clone(), traj.velocities[0].clone()))
}

#[derive(Clone, Debug)]
pub struct ReparametrizeSample {
    pub t: f64,
    pub t_bar: f64,
    pub position_gap: f64,
    pub velocity_gap: f64,
}

#[derive(Clone, Debug)]
pub struct ReparametrizeReport {
    pub samples: Vec<ReparametrizeSample>,
    pub max_position_gap: f64,
    pub max_velocity_gap: f64,
}

/// Check that two sprays related by accel_b = accel_a + P(x, v) v have the
/// same geodesic paths up to reparametrization.
///
/// Along the a-geodesic g through (x0, v0) the time change t_bar solves
///
/// ```text
/// t_bar'' = -P(g(t), g'(t)) t_bar',   t_bar(0) = 0,  t_bar'(0) = 1,
/// ```
///
/// and then the b-geodesic through the same initial data satisfies
/// g_b(t_bar(t)) = g(t) and g_b'(t_bar(t)) t_bar'(t) = g'(t). The report
/// holds the sup-norm gaps at the requested sample times (nonnegative,
/// increasing).
pub fn reparametrize_check(
    spray_a: &Spray,
    spray_b: &Spray,
    factor: &ProjectiveFactor,
    x0: &Vector,
    v0: &Vector,
    sample_times: &[f64],
    step: f64,
) -> Result<ReparametrizeReport> {
    validate_step(step)?;
    let mut times: Vec<f64> = sample_times.to_vec();
    times.sort_by(|a, b| a.partial_cmp(b).unwrap());
    if times.first().is_some_and(|&t| t < 0.0) {
        return Err(Error::Config("sample times must be nonnegative".into()));
    }

    // Augmented state (x, v, t_bar, t_bar'); RK4 on the whole bundle keeps
    // the time change locked to the geodesic it rides along.
    let rhs = |x: &Vector, v: &Vector, sigma: f64| -> (Vector, f64) {
        (spray_a.accel(x, v), -factor.eval(x, v) * sigma)
    };
    let mut x = x0.clone();
    let mut v = v0.clone();
    let mut tau = 0.0_f64;
    let mut sigma = 1.0_f64;
    let mut t_prev = 0.0_f64;

    let mut report = ReparametrizeReport {
        samples: Vec::with_capacity(times.len()),
        max_position_gap: 0.0,
        max_velocity_gap: 0.0,
    };

    for &t in &times {
        let span = t - t_prev;
        if span > 0.0 {
            let n = (span / step).ceil().max(1.0) as usize;
            let h = span / n as f64;
            for k in 0..n {
                let (a1, s1) = rhs(&x, &v, sigma);
                let x2 = x.add_scaled(0.5 * h, &v);
                let v2 = v.add_scaled(0.5 * h, &a1);
                let g2 = sigma + 0.5 * h * s1;
                let (a2, s2) = rhs(&x2, &v2, g2);
                let x3 = x.add_scaled(0.5 * h, &v2);
                let v3 = v.add_scaled(0.5 * h, &a2);
                let g3 = sigma + 0.5 * h * s2;
                let (a3, s3) = rhs(&x3, &v3, g3);
                let x4 = x.add_scaled(h, &v3);
                let v4 = v.add_scaled(h, &a3);
                let g4 = sigma + h * s3;
                let (a4, s4) = rhs(&x4, &v4, g4);
                let sixth = h / 6.0;
                tau += sixth * (sigma + 2.0 * g2 + 2.0 * g3 + g4);
                let nx = x
                    .add_scaled(sixth, &v)
                    .add_scaled(2.0 * sixth, &v2)
                    .add_scaled(2.0 * sixth, &v3)
                    .add_scaled(sixth, &v4);
                let nv = v
                    .add_scaled(sixth, &a1)
                    .add_scaled(2.0 * sixth, &a2)
                    .add_scaled(2.0 * sixth, &a3)
                    .add_scaled(sixth, &a4);
                sigma += sixth * (s1 + 2.0 * s2 + 2.0 * s3 + s4);
                x = nx;
                v = nv;
                check_state(t_prev + h * (k + 1) as f64, &x, &v)?;
            }
            t_prev = t;
        }
        let (bx, bv) = geodesic_flow(spray_b, x0, v0, tau, step, Method::Auto)?;
        let position_gap = bx.sub(&x).sup_norm();
        let velocity_gap = bv.scaled(sigma).sub(&v).sup_norm();
        report.max_position_gap = report.max_position_gap.max(position_gap);
        report.max_velocity_gap = report.max_velocity_gap.max(velocity_gap);
        report.samples.push(ReparametrizeSample {
            t,
            t_bar: tau,
            position_gap,
            velocity_gap,
        });
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::space::ModelSpace;
    use crate::spray::{
        bump_factor, bump_perturbed_spray, bump_weights, flat_spray, projective_transform,
        sphere_pointwise_spray, Spray,
    };
    use std::sync::Arc;

    fn bump_profile(space: &ModelSpace, eps: f64, scale: f64) -> Vector {
        space
            .sample_scalar(|x| {
                let u = 2.0 * x / eps;
                if u.abs() < 1.0 {
                    scale * (1.0 - 1.0 / (1.0 - u * u)).exp()
                } else {
                    0.0
                }
            })
            .unwrap()
    }

    #[test]
    fn flat_rk4_reproduces_lines() {
        let spray = flat_spray();
        let x0 = Vector(vec![1.0, -2.0]);
        let v0 = Vector(vec![0.5, 3.0]);
        let traj =
            integrate_geodesic(&spray, &x0, &v0, (-1.0, 1.0), 0.01, Method::Rk4).unwrap();
        assert_eq!(traj.method, Method::Rk4);
        for i in 0..traj.len() {
            let (t, x, v) = traj.state(i);
            assert!(x.sub(&x0.add_scaled(t, &v0)).sup_norm() <= 1e-13);
            assert!(v.sub(&v0).sup_norm() <= 1e-13);
        }
    }

    #[test]
    fn auto_prefers_closed_form() {
        let spray = flat_spray();
        let x0 = Vector(vec![0.0]);
        let v0 = Vector(vec![1.0]);
        let traj =
            integrate_geodesic(&spray, &x0, &v0, (0.0, 1.0), 0.1, Method::Auto).unwrap();
        assert_eq!(traj.method, Method::ClosedForm);
    }

    #[test]
    fn closed_form_demanded_but_missing() {
        let spray = Spray::new("bare", Arc::new(|_: &Vector, v: &Vector| v.scaled(0.0)));
        let x0 = Vector(vec![0.0]);
        let v0 = Vector(vec![1.0]);
        assert!(matches!(
            integrate_geodesic(&spray, &x0, &v0, (0.0, 1.0), 0.1, Method::ClosedForm),
            Err(Error::Unsupported(_))
        ));
    }

    #[test]
    fn span_grid_contains_zero_and_endpoints() {
        let spray = flat_spray();
        let x0 = Vector(vec![0.0]);
        let v0 = Vector(vec![1.0]);
        let traj =
            integrate_geodesic(&spray, &x0, &v0, (-0.55, 1.25), 0.1, Method::Rk4).unwrap();
        assert_eq!(traj.times.first().copied(), Some(-0.55));
        assert_eq!(traj.times.last().copied(), Some(1.25));
        assert!(traj.times.contains(&0.0));
        for w in traj.times.windows(2) {
            assert!(w[0] < w[1]);
        }
        let i0 = traj.nearest(0.0);
        assert_eq!(traj.positions[i0][0], 0.0);
        assert_eq!(traj.velocities[i0][0], 1.0);
    }

    #[test]
    fn bump_rk4_tracks_closed_form() {
        let space = ModelSpace::default_grid();
        let spray = bump_perturbed_spray(&space, 0.5).unwrap();
        let x0 = bump_profile(&space, 1.0, 0.3);
        let v0 = bump_profile(&space, 0.25, 1.0);
        for &t in &[-0.4, 0.1, 0.8] {
            let (rx, rv) = geodesic_flow(&spray, &x0, &v0, t, 0.01, Method::Rk4).unwrap();
            let (cx, cv) =
                geodesic_flow(&spray, &x0, &v0, t, 0.01, Method::ClosedForm).unwrap();
            assert!(rx.sub(&cx).sup_norm() <= 1e-8, "t={t}");
            assert!(rv.sub(&cv).sup_norm() <= 1e-8, "t={t}");
        }
    }

    #[test]
    fn sphere_rk4_tracks_closed_form() {
        let space = ModelSpace::circle_grid(32, 3).unwrap();
        let spray = sphere_pointwise_spray(&space).unwrap();
        let x0 = space.sample_r3(|_| [1.0, 0.0, 0.0]).unwrap();
        let v0 = space
            .sample_r3(|theta| [0.0, theta.cos() * 0.5 + 1.0, 0.4])
            .unwrap();
        let (rx, _) = geodesic_flow(&spray, &x0, &v0, 1.0, 0.005, Method::Rk4).unwrap();
        let (cx, _) = geodesic_flow(&spray, &x0, &v0, 1.0, 0.005, Method::ClosedForm).unwrap();
        assert!(rx.sub(&cx).sup_norm() <= 1e-9);
    }

    /// Flying forward, flipping the velocity, and flying the same time again
    /// must land back at the start with the velocity still flipped: the
    /// acceleration is even in v, so these flows are reversible.
    #[test]
    fn time_reversal_retraces_flat_and_sphere_flows() {
        let grid = ModelSpace::default_grid();
        let loops = ModelSpace::circle_grid(32, 3).unwrap();
        let cases: Vec<(Spray, Vector, Vector)> = vec![
            (
                flat_spray(),
                grid.sample_scalar(|x| (x * 1.3).sin()).unwrap(),
                grid.sample_scalar(|x| 0.4 * x.cos()).unwrap(),
            ),
            (
                sphere_pointwise_spray(&loops).unwrap(),
                loops.sample_r3(|_| [1.0, 0.0, 0.0]).unwrap(),
                loops
                    .sample_r3(|theta| [0.0, theta.cos() * 0.5 + 1.0, 0.4])
                    .unwrap(),
            ),
        ];
        for (spray, x0, v0) in &cases {
            let (x1, v1) = geodesic_flow(spray, x0, v0, 0.7, 1e-3, Method::Rk4).unwrap();
            let (x2, v2) =
                geodesic_flow(spray, &x1, &v1.scaled(-1.0), 0.7, 1e-3, Method::Rk4).unwrap();
            assert!(x2.sub(x0).sup_norm() <= 1e-8, "{}", spray.label());
            assert!(v2.add(v0).sup_norm() <= 1e-8, "{}", spray.label());
        }
    }

    #[test]
    fn rk4_error_drops_sixteenfold_per_halving() {
        let space = ModelSpace::circle_grid(32, 3).unwrap();
        let spray = sphere_pointwise_spray(&space).unwrap();
        let x0 = space.sample_r3(|_| [1.0, 0.0, 0.0]).unwrap();
        let v0 = space.sample_r3(|theta| [0.0, 1.0 + 0.3 * theta.sin(), 0.0]).unwrap();
        let (exact, _) = geodesic_flow(&spray, &x0, &v0, 2.0, 0.01, Method::ClosedForm).unwrap();
        let mut errs = Vec::new();
        for &h in &[0.1, 0.05] {
            let (rx, _) = geodesic_flow(&spray, &x0, &v0, 2.0, h, Method::Rk4).unwrap();
            errs.push(rx.sub(&exact).sup_norm());
        }
        let ratio = errs[0] / errs[1];
        assert!(ratio > 12.0, "order ratio {ratio}, errs {errs:?}");
    }

    #[test]
    fn quadratic_growth_blows_up() {
        // v' = v^2 in one dimension has a pole; RK4 past it must report the
        // blow-up rather than return garbage.
        let spray = Spray::new(
            "one-dim-pole",
            Arc::new(|_: &Vector, v: &Vector| Vector(vec![v[0] * v[0]])),
        );
        let x0 = Vector(vec![0.0]);
        let v0 = Vector(vec![1.0]);
        let err = integrate_geodesic(&spray, &x0, &v0, (0.0, 2.0), 0.01, Method::Rk4);
        assert!(matches!(err, Err(Error::BlowUp { .. })), "{err:?}");
    }

    #[test]
    fn capture_times_land_exactly() {
        let space = ModelSpace::default_grid();
        let spray = bump_perturbed_spray(&space, 0.5).unwrap();
        let x0 = Vector::zeros(space.dim());
        let v0 = bump_profile(&space, 0.25, 1.0);
        let captures = [0.37, -0.113, 0.0, 0.9241, 0.37];
        let traj =
            integrate_with_captures(&spray, &x0, &v0, &captures, 0.01, Method::Rk4).unwrap();
        assert_eq!(traj.times, vec![-0.113, 0.0, 0.37, 0.9241]);
        for i in 0..traj.len() {
            let (t, x, _) = traj.state(i);
            let (cx, _) = spray.closed_form(t, &x0, &v0).unwrap().unwrap();
            assert!(x.sub(&cx).sup_norm() <= 1e-9, "t={t}");
        }
    }

    #[test]
    fn csv_round_trips_states() {
        let spray = flat_spray();
        let x0 = Vector(vec![0.25, -1.5]);
        let v0 = Vector(vec![1.0 / 3.0, 0.7]);
        let traj =
            integrate_geodesic(&spray, &x0, &v0, (0.0, 0.5), 0.1, Method::Rk4).unwrap();
        let mut buf = Vec::new();
        traj.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next(), Some("t,x_0,x_1,v_0,v_1"));
        for (i, line) in lines.enumerate() {
            let cells: Vec<f64> = line.split(',').map(|c| c.parse().unwrap()).collect();
            assert_eq!(cells.len(), 5);
            assert_eq!(cells[0], traj.times[i]);
            assert_eq!(cells[1], traj.positions[i][0]);
            assert_eq!(cells[4], traj.velocities[i][1]);
        }
    }

    #[test]
    fn reparametrize_flat_against_bump() {
        let space = ModelSpace::default_grid();
        let eps = 0.5;
        let flat = flat_spray();
        let bump = bump_perturbed_spray(&space, eps).unwrap();
        let factor = bump_factor(&space, eps).unwrap();
        let x0 = Vector::zeros(space.dim());
        let v0 = bump_profile(&space, 0.25, 1.0);
        let w = bump_weights(&space, eps).unwrap();
        let u0: f64 = v0
            .as_slice()
            .iter()
            .zip(w.as_slice())
            .map(|(a, b)| a * b)
            .sum();
        assert!(u0 > 0.0);
        let times = [0.1, 0.25, 0.5];
        let report =
            reparametrize_check(&flat, &bump, &factor, &x0, &v0, &times, 0.005).unwrap();
        assert!(
            report.max_position_gap <= 1e-7,
            "gap {}",
            report.max_position_gap
        );
        assert!(report.max_velocity_gap <= 1e-6);
        for s in &report.samples {
            // t_bar'' = 2 u0 t_bar' along a straight flat geodesic, so
            // t_bar(t) = (e^{2 u0 t} - 1) / (2 u0).
            let exact = ((2.0 * u0 * s.t).exp() - 1.0) / (2.0 * u0);
            assert!(
                (s.t_bar - exact).abs() <= 1e-8,
                "t={} t_bar={} exact={exact}",
                s.t,
                s.t_bar
            );
        }
    }

    #[test]
    fn reparametrize_sphere_against_projective_kin() {
        // No closed form on the transformed side: every sample forces a
        // fresh numerical integration of the partner spray.
        let space = ModelSpace::circle_grid(16, 3).unwrap();
        let sphere = sphere_pointwise_spray(&space).unwrap();
        let dim = space.dim();
        let factor = ProjectiveFactor::new(
            "mean-y",
            Arc::new(move |_x: &Vector, v: &Vector| {
                let mut s = 0.0;
                for i in 0..dim / 3 {
                    s += v[i * 3 + 1];
                }
                0.3 * s / (dim / 3) as f64
            }),
        );
        let kin = projective_transform(&sphere, &factor);
        let x0 = space.sample_r3(|_| [1.0, 0.0, 0.0]).unwrap();
        let v0 = space.sample_r3(|_| [0.0, 0.8, 0.0]).unwrap();
        let report =
            reparametrize_check(&sphere, &kin, &factor, &x0, &v0, &[0.2, 0.6], 0.005).unwrap();
        assert!(
            report.max_position_gap <= 1e-6,
            "gap {}",
            report.max_position_gap
        );
    }
}
