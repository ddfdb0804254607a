//! The library of example sets: half-support unions, the non-negative
//! orthant, constant functions, the parabola graph, trigonometric
//! subspaces, finite-sequence strata, and constant loops on a great circle.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::oracle::{require_scalar_grid, Exactness, OracleRef, SetOracle, UnionOracle};
use crate::space::{ModelSpace, SeminormSpec, SpaceKind, Vector};

/// One half of the half-support union: functions whose grid values vanish
/// strictly left of 0 (positive side) or strictly right of 0 (negative
/// side). The value at a grid point equal to 0 is unconstrained.
pub struct HalfSupportSide {
    space: ModelSpace,
    positive: bool,
    label: String,
}

impl HalfSupportSide {
    fn residual(&self, f: &Vector) -> Vector {
        let spec = self.space.grid_spec().expect("grid-backed");
        let half = spec.step / 2.0;
        let mut res = Vector::zeros(f.dim());
        for i in 0..spec.n_points() {
            let x = spec.point(i);
            let zeroed = if self.positive { x < -half } else { x > half };
            if zeroed {
                res[i] = f[i];
            }
        }
        res
    }
}

impl SetOracle for HalfSupportSide {
    fn space(&self) -> &ModelSpace {
        &self.space
    }

    fn label(&self) -> &str {
        &self.label
    }

    fn exactness(&self) -> Exactness {
        Exactness::Exact
    }

    fn distance(&self, n: usize, x: &Vector) -> Result<f64> {
        self.space.seminorm(n, &self.residual(x))
    }

    fn project(&self, x: &Vector) -> Option<Vector> {
        Some(x.sub(&self.residual(x)))
    }
}

pub fn half_support_side(space: &ModelSpace, positive: bool) -> Result<OracleRef> {
    let spec = require_scalar_grid(space, "half_support_side")?;
    if !(spec.min < 0.0 && spec.max > 0.0) {
        return Err(Error::InvalidSpace(
            "half-support sets need a grid straddling 0".into(),
        ));
    }
    let label = if positive { "half-support:+" } else { "half-support:-" };
    Ok(Arc::new(HalfSupportSide {
        space: space.clone(),
        positive,
        label: label.into(),
    }))
}

/// S = S+ u S-, the functions supported in [0, inf) or in (-inf, 0].
pub fn half_support_union(space: &ModelSpace) -> Result<OracleRef> {
    let plus = half_support_side(space, true)?;
    let minus = half_support_side(space, false)?;
    UnionOracle::with_label(vec![plus, minus], "half-support")
}

/// The non-negative orthant of a truncated sequence space.
pub struct NonnegOrthant {
    space: ModelSpace,
}

pub fn nonneg_orthant(space: &ModelSpace) -> Result<OracleRef> {
    match space.kind() {
        SpaceKind::Sequences { .. } => Ok(Arc::new(NonnegOrthant {
            space: space.clone(),
        })),
        _ => Err(Error::Unsupported(
            "nonneg_orthant needs a sequence space".into(),
        )),
    }
}

impl SetOracle for NonnegOrthant {
    fn space(&self) -> &ModelSpace {
        &self.space
    }

    fn label(&self) -> &str {
        "orthant"
    }

    fn exactness(&self) -> Exactness {
        Exactness::Exact
    }

    fn distance(&self, n: usize, x: &Vector) -> Result<f64> {
        if x.dim() != self.space.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.space.dim(),
                got: x.dim(),
            });
        }
        match self.space.seminorm_specs().get(n) {
            Some(SeminormSpec::Coordinate { index }) => Ok((-x[*index]).max(0.0)),
            _ => Err(Error::SeminormIndex {
                index: n,
                count: self.space.seminorm_count(),
            }),
        }
    }

    fn project(&self, x: &Vector) -> Option<Vector> {
        Some(Vector(x.as_slice().iter().map(|a| a.max(0.0)).collect()))
    }
}

/// Constant functions on a grid.
pub struct ConstantFunctions {
    space: ModelSpace,
}

pub fn constant_functions(space: &ModelSpace) -> Result<OracleRef> {
    require_scalar_grid(space, "constant_functions")?;
    Ok(Arc::new(ConstantFunctions {
        space: space.clone(),
    }))
}

impl ConstantFunctions {
    /// Min and max of f over the grid points inside [-window, window].
    fn window_range(&self, f: &Vector, window: f64) -> (f64, f64) {
        let spec = self.space.grid_spec().expect("grid-backed");
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for i in 0..spec.n_points() {
            if spec.point(i).abs() <= window + 1e-12 {
                lo = lo.min(f[i]);
                hi = hi.max(f[i]);
            }
        }
        (lo, hi)
    }
}

impl SetOracle for ConstantFunctions {
    fn space(&self) -> &ModelSpace {
        &self.space
    }

    fn label(&self) -> &str {
        "constants"
    }

    fn exactness(&self) -> Exactness {
        Exactness::Exact
    }

    fn distance(&self, n: usize, x: &Vector) -> Result<f64> {
        if x.dim() != self.space.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.space.dim(),
                got: x.dim(),
            });
        }
        match self.space.seminorm_specs().get(n) {
            // Best constant for a windowed sup norm is the midrange; the
            // infimum is half the spread.
            Some(SeminormSpec::SupDerivative { window, order: 0 }) => {
                let (lo, hi) = self.window_range(x, *window);
                Ok((hi - lo) / 2.0)
            }
            // Constants have identically zero finite differences, so every
            // constant is optimal for derivative seminorms.
            Some(SeminormSpec::SupDerivative { .. }) => self.space.seminorm(n, x),
            _ => Err(Error::SeminormIndex {
                index: n,
                count: self.space.seminorm_count(),
            }),
        }
    }

    /// The constant minimizing the governing sup seminorm (the order-0
    /// seminorm with the largest window).
    fn project(&self, x: &Vector) -> Option<Vector> {
        let spec = self.space.grid_spec().expect("grid-backed");
        let governing = self
            .space
            .seminorm_specs()
            .iter()
            .filter_map(|s| match s {
                SeminormSpec::SupDerivative { window, order: 0 } => Some(*window),
                _ => None,
            })
            .fold(f64::NEG_INFINITY, f64::max);
        let window = if governing.is_finite() {
            governing
        } else {
            spec.max.abs().max(spec.min.abs())
        };
        let (lo, hi) = self.window_range(x, window);
        let c = (lo + hi) / 2.0;
        Some(Vector(vec![c; x.dim()]))
    }
}

/// The graph {(h, h^2)} inside a product of two identical scalar grids.
///
/// Distances are surrogate upper bounds: the candidate nearest point for
/// (a, b) is the section point (a, a^2), so the reported distance is the
/// seminorm of (0, b - a^2). This is tight to second order along the
/// tangent probes the cone tests use.
pub struct ParabolaGraph {
    space: ModelSpace,
}

pub fn parabola_graph(space: &ModelSpace) -> Result<OracleRef> {
    let factors = space.factors();
    if factors.len() != 2 {
        return Err(Error::Unsupported(
            "parabola_graph needs a product of two grid spaces".into(),
        ));
    }
    let a = require_scalar_grid(&factors[0], "parabola_graph")?;
    let b = require_scalar_grid(&factors[1], "parabola_graph")?;
    if a != b {
        return Err(Error::InvalidSpace(
            "parabola_graph factors must share one grid".into(),
        ));
    }
    Ok(Arc::new(ParabolaGraph {
        space: space.clone(),
    }))
}

impl ParabolaGraph {
    fn residual(&self, x: &Vector) -> Vector {
        let ranges = self.space.factor_ranges();
        let a = &x.as_slice()[ranges[0].clone()];
        let b = &x.as_slice()[ranges[1].clone()];
        let mut res = Vector::zeros(x.dim());
        for (i, (ai, bi)) in a.iter().zip(b).enumerate() {
            res[ranges[1].start + i] = bi - ai * ai;
        }
        res
    }
}

impl SetOracle for ParabolaGraph {
    fn space(&self) -> &ModelSpace {
        &self.space
    }

    fn label(&self) -> &str {
        "parabola"
    }

    fn exactness(&self) -> Exactness {
        Exactness::UpperBound
    }

    fn distance(&self, n: usize, x: &Vector) -> Result<f64> {
        self.space.seminorm(n, &self.residual(x))
    }

    fn project(&self, x: &Vector) -> Option<Vector> {
        Some(x.sub(&self.residual(x)))
    }
}

/// Trigonometric polynomials of degree at most N on a periodic grid,
/// queried through least-squares projection. On a uniform periodic grid the
/// sampled basis is orthogonal in the discrete inner product as long as the
/// grid resolves degree 2N, so the projection is the exact discrete
/// least-squares fit; distances are seminorms of the residual.
pub struct FourierSubspace {
    space: ModelSpace,
    basis: Vec<(Vector, f64)>,
    label: String,
}

pub fn fourier_subspace(space: &ModelSpace, degree: usize) -> Result<OracleRef> {
    let spec = require_scalar_grid(space, "fourier_subspace")?;
    if !spec.periodic {
        return Err(Error::Unsupported(
            "fourier_subspace needs a periodic grid".into(),
        ));
    }
    if spec.n_points() <= 2 * degree + 1 {
        return Err(Error::InvalidSpace(format!(
            "{} grid points cannot resolve trigonometric degree {}",
            spec.n_points(),
            degree
        )));
    }
    let mut basis = Vec::with_capacity(2 * degree + 1);
    let mut push = |f: &dyn Fn(f64) -> f64| {
        let v = Vector(
            (0..spec.n_points())
                .map(|i| f(spec.point(i)))
                .collect::<Vec<_>>(),
        );
        let norm_sq: f64 = v.as_slice().iter().map(|a| a * a).sum();
        basis.push((v, norm_sq));
    };
    push(&|_| 1.0);
    for k in 1..=degree {
        push(&move |t: f64| (k as f64 * t).cos());
        push(&move |t: f64| (k as f64 * t).sin());
    }
    Ok(Arc::new(FourierSubspace {
        space: space.clone(),
        basis,
        label: format!("fourier:{degree}"),
    }))
}

impl FourierSubspace {
    fn fit(&self, f: &Vector) -> Vector {
        let mut out = Vector::zeros(f.dim());
        for (phi, norm_sq) in &self.basis {
            let dot: f64 = f
                .as_slice()
                .iter()
                .zip(phi.as_slice())
                .map(|(a, b)| a * b)
                .sum();
            let c = dot / norm_sq;
            for (o, b) in out.0.iter_mut().zip(phi.as_slice()) {
                *o += c * b;
            }
        }
        out
    }
}

impl SetOracle for FourierSubspace {
    fn space(&self) -> &ModelSpace {
        &self.space
    }

    fn label(&self) -> &str {
        &self.label
    }

    fn exactness(&self) -> Exactness {
        Exactness::Exact
    }

    fn distance(&self, n: usize, x: &Vector) -> Result<f64> {
        let fit = self.fit(x);
        self.space.seminorm(n, &x.sub(&fit))
    }

    fn project(&self, x: &Vector) -> Option<Vector> {
        Some(self.fit(x))
    }
}

/// Closure stratum H_k = span(e_1 .. e_k) of a sequence space: coordinates
/// beyond the k-th vanish.
pub struct SpanPrefix {
    space: ModelSpace,
    k: usize,
    label: String,
}

impl SetOracle for SpanPrefix {
    fn space(&self) -> &ModelSpace {
        &self.space
    }

    fn label(&self) -> &str {
        &self.label
    }

    fn exactness(&self) -> Exactness {
        Exactness::Exact
    }

    fn distance(&self, n: usize, x: &Vector) -> Result<f64> {
        if x.dim() != self.space.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.space.dim(),
                got: x.dim(),
            });
        }
        match self.space.seminorm_specs().get(n) {
            Some(SeminormSpec::Coordinate { index }) => {
                if *index >= self.k {
                    Ok(x[*index].abs())
                } else {
                    Ok(0.0)
                }
            }
            _ => Err(Error::SeminormIndex {
                index: n,
                count: self.space.seminorm_count(),
            }),
        }
    }

    fn project(&self, x: &Vector) -> Option<Vector> {
        let mut out = x.clone();
        for i in self.k..out.dim() {
            out[i] = 0.0;
        }
        Some(out)
    }
}

/// Open stratum S_k = H_k \ H_{k-1}: membership additionally requires the
/// k-th coordinate to be nonzero beyond tol. Distances are measured to the
/// closure H_k, which is the closure of S_k, so they remain exact infima.
pub struct OpenStratum {
    closure: SpanPrefix,
    k: usize,
    label: String,
}

impl SetOracle for OpenStratum {
    fn space(&self) -> &ModelSpace {
        self.closure.space()
    }

    fn label(&self) -> &str {
        &self.label
    }

    fn exactness(&self) -> Exactness {
        Exactness::Exact
    }

    fn distance(&self, n: usize, x: &Vector) -> Result<f64> {
        self.closure.distance(n, x)
    }

    fn contains(&self, x: &Vector, tol: f64) -> Result<bool> {
        Ok(self.closure.contains(x, tol)? && x[self.k - 1].abs() > tol)
    }
}

pub struct Stratum {
    /// 1-based stratum index k.
    pub id: usize,
    pub closure: OracleRef,
    pub stratum: OracleRef,
}

pub struct Stratification {
    space: ModelSpace,
    pub strata: Vec<Stratum>,
}

impl Stratification {
    pub fn space(&self) -> &ModelSpace {
        &self.space
    }
}

/// H_k = span(e_1 .. e_k) and S_k = H_k \ H_{k-1} for k = 1 .. N.
pub fn finite_sequence_strata(space: &ModelSpace) -> Result<Stratification> {
    let len = match space.kind() {
        SpaceKind::Sequences { len } => *len,
        _ => {
            return Err(Error::Unsupported(
                "finite_sequence_strata needs a sequence space".into(),
            ))
        }
    };
    let mut strata = Vec::with_capacity(len);
    for k in 1..=len {
        let closure = SpanPrefix {
            space: space.clone(),
            k,
            label: format!("strata:H{k}"),
        };
        let stratum = OpenStratum {
            closure: SpanPrefix {
                space: space.clone(),
                k,
                label: format!("strata:H{k}"),
            },
            k,
            label: format!("strata:S{k}"),
        };
        strata.push(Stratum {
            id: k,
            closure: Arc::new(closure),
            stratum: Arc::new(stratum),
        });
    }
    Ok(Stratification {
        space: space.clone(),
        strata,
    })
}

/// Constant loops taking values on a fixed great circle of the unit sphere.
/// The circle is the intersection of the sphere with the plane through the
/// origin orthogonal to `normal`.
pub struct GreatCircleConstantLoops {
    space: ModelSpace,
    normal: [f64; 3],
    /// A fixed point of the circle, used when the in-plane mean degenerates.
    fallback: [f64; 3],
}

fn great_circle_inner(space: &ModelSpace, normal: [f64; 3]) -> Result<GreatCircleConstantLoops> {
    let spec = space
        .grid_spec()
        .ok_or_else(|| Error::Unsupported("great_circle_constant_loops needs a grid".into()))?;
    if spec.codomain_dim != 3 || !spec.periodic {
        return Err(Error::Unsupported(
            "great_circle_constant_loops needs a periodic grid into R^3".into(),
        ));
    }
    let norm = (normal[0].powi(2) + normal[1].powi(2) + normal[2].powi(2)).sqrt();
    if norm < 1e-12 {
        return Err(Error::InvalidSpace("zero normal vector".into()));
    }
    let n = [normal[0] / norm, normal[1] / norm, normal[2] / norm];
    // Any axis mostly orthogonal to n, projected into the plane, gives a
    // deterministic fallback point on the circle.
    let axis = if n[0].abs() <= n[1].abs() && n[0].abs() <= n[2].abs() {
        [1.0, 0.0, 0.0]
    } else if n[1].abs() <= n[2].abs() {
        [0.0, 1.0, 0.0]
    } else {
        [0.0, 0.0, 1.0]
    };
    let dot = axis[0] * n[0] + axis[1] * n[1] + axis[2] * n[2];
    let mut fb = [axis[0] - dot * n[0], axis[1] - dot * n[1], axis[2] - dot * n[2]];
    let fb_norm = (fb[0].powi(2) + fb[1].powi(2) + fb[2].powi(2)).sqrt();
    for c in fb.iter_mut() {
        *c /= fb_norm;
    }
    Ok(GreatCircleConstantLoops {
        space: space.clone(),
        normal: n,
        fallback: fb,
    })
}

pub fn great_circle_constant_loops(space: &ModelSpace, normal: [f64; 3]) -> Result<OracleRef> {
    Ok(Arc::new(great_circle_inner(space, normal)?))
}

impl GreatCircleConstantLoops {
    /// Mean of the loop over the grid, per component.
    fn mean(&self, f: &Vector) -> [f64; 3] {
        let spec = self.space.grid_spec().expect("grid-backed");
        let n = spec.n_points();
        let mut m = [0.0; 3];
        for i in 0..n {
            for c in 0..3 {
                m[c] += f[i * 3 + c];
            }
        }
        for c in m.iter_mut() {
            *c /= n as f64;
        }
        m
    }

    /// Nearest circle point to the mean of the loop.
    pub fn anchor(&self, f: &Vector) -> [f64; 3] {
        let m = self.mean(f);
        let dot = m[0] * self.normal[0] + m[1] * self.normal[1] + m[2] * self.normal[2];
        let mut p = [
            m[0] - dot * self.normal[0],
            m[1] - dot * self.normal[1],
            m[2] - dot * self.normal[2],
        ];
        let norm = (p[0].powi(2) + p[1].powi(2) + p[2].powi(2)).sqrt();
        if norm < 1e-9 {
            return self.fallback;
        }
        for c in p.iter_mut() {
            *c /= norm;
        }
        p
    }

    fn constant_loop(&self, p: [f64; 3]) -> Vector {
        let spec = self.space.grid_spec().expect("grid-backed");
        let mut v = Vector::zeros(self.space.dim());
        for i in 0..spec.n_points() {
            for c in 0..3 {
                v[i * 3 + c] = p[c];
            }
        }
        v
    }
}

impl SetOracle for GreatCircleConstantLoops {
    fn space(&self) -> &ModelSpace {
        &self.space
    }

    fn label(&self) -> &str {
        "circle-loops"
    }

    fn exactness(&self) -> Exactness {
        Exactness::UpperBound
    }

    fn distance(&self, n: usize, x: &Vector) -> Result<f64> {
        let anchor = self.constant_loop(self.anchor(x));
        self.space.seminorm(n, &x.sub(&anchor))
    }

    fn project(&self, x: &Vector) -> Option<Vector> {
        Some(self.constant_loop(self.anchor(x)))
    }

    fn contains(&self, x: &Vector, tol: f64) -> Result<bool> {
        if x.dim() != self.space.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.space.dim(),
                got: x.dim(),
            });
        }
        if self.max_distance(x)? > tol {
            return Ok(false);
        }
        let spec = self.space.grid_spec().expect("grid-backed");
        for i in 0..spec.n_points() {
            let p = [x[i * 3], x[i * 3 + 1], x[i * 3 + 2]];
            let r = (p[0].powi(2) + p[1].powi(2) + p[2].powi(2)).sqrt();
            let plane = p[0] * self.normal[0] + p[1] * self.normal[1] + p[2] * self.normal[2];
            if (r - 1.0).abs() > tol || plane.abs() > tol {
                return Ok(false);
            }
        }
        Ok(true)
    }
}

/// Tangent-bundle surrogate for the circle loops: pairs (x, u) where x lies
/// in the loop set and u is a constant loop along the circle's tangent line
/// at the anchor of x. Elements live in the product of the loop space with
/// itself, with u decomposed against T = normal x anchor(x).
pub struct CircleLoopTangentBundle {
    space: ModelSpace,
    base: GreatCircleConstantLoops,
}

pub fn circle_loop_tangent_bundle(space: &ModelSpace, normal: [f64; 3]) -> Result<OracleRef> {
    let base = great_circle_inner(space, normal)?;
    let product = crate::space::product_space(space.clone(), space.clone())?;
    Ok(Arc::new(CircleLoopTangentBundle {
        space: product,
        base,
    }))
}

impl CircleLoopTangentBundle {
    fn split(&self, xy: &Vector) -> (Vector, Vector) {
        let d = self.base.space.dim();
        (
            Vector(xy.as_slice()[..d].to_vec()),
            Vector(xy.as_slice()[d..].to_vec()),
        )
    }

    /// Tangent direction of the circle at the anchor of x, and the component
    /// of u along it.
    fn fiber_parts(&self, x: &Vector, u: &Vector) -> (Vector, f64) {
        let q = self.base.anchor(x);
        let n = self.base.normal;
        let t = [
            n[1] * q[2] - n[2] * q[1],
            n[2] * q[0] - n[0] * q[2],
            n[0] * q[1] - n[1] * q[0],
        ];
        let m = self.base.mean(u);
        let coef = m[0] * t[0] + m[1] * t[1] + m[2] * t[2];
        let nearest = self
            .base
            .constant_loop([coef * t[0], coef * t[1], coef * t[2]]);
        (u.sub(&nearest), coef)
    }
}

impl SetOracle for CircleLoopTangentBundle {
    fn space(&self) -> &ModelSpace {
        &self.space
    }

    fn label(&self) -> &str {
        "circle-loop-tangent-bundle"
    }

    fn exactness(&self) -> Exactness {
        Exactness::UpperBound
    }

    fn distance(&self, n: usize, xy: &Vector) -> Result<f64> {
        if xy.dim() != self.space.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.space.dim(),
                got: xy.dim(),
            });
        }
        let (x, u) = self.split(xy);
        let dx = self.base.distance(n, &x)?;
        let (residual, _) = self.fiber_parts(&x, &u);
        let du = self.base.space.seminorm(n, &residual)?;
        Ok(dx.max(du))
    }

    fn project(&self, xy: &Vector) -> Option<Vector> {
        let (x, u) = self.split(xy);
        let base_point = self.base.project(&x)?;
        let (residual, _) = self.fiber_parts(&x, &u);
        let fiber_point = u.sub(&residual);
        Some(Vector::concat(&[&base_point, &fiber_point]))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle::{translate_set, DEFAULT_MEMBERSHIP_TOL};
    use crate::rng::SplitMix64;
    use approx::assert_abs_diff_eq;

    fn bump(center: f64, halfwidth: f64) -> impl Fn(f64) -> f64 {
        move |x: f64| {
            let u = (x - center) / halfwidth;
            if u.abs() < 1.0 {
                (1.0 - 1.0 / (1.0 - u * u)).exp()
            } else {
                0.0
            }
        }
    }

    #[test]
    fn half_support_accepts_one_sided_functions() {
        let space = ModelSpace::default_grid();
        let oracle = half_support_union(&space).unwrap();
        let f = space.sample_scalar(bump(0.75, 0.25)).unwrap();
        assert!(oracle.contains(&f, DEFAULT_MEMBERSHIP_TOL).unwrap());
        for n in 0..space.seminorm_count() {
            assert_eq!(oracle.distance(n, &f).unwrap(), 0.0);
        }
    }

    #[test]
    fn half_support_zero_function_is_member() {
        let space = ModelSpace::default_grid();
        let oracle = half_support_union(&space).unwrap();
        let zero = Vector::zeros(space.dim());
        assert!(oracle.contains(&zero, DEFAULT_MEMBERSHIP_TOL).unwrap());
    }

    #[test]
    fn half_support_two_sided_bump_distance_is_half_sup() {
        let space = ModelSpace::default_grid();
        let oracle = half_support_union(&space).unwrap();
        let f = space.sample_scalar(bump(0.0, 0.25)).unwrap();
        // Distance under the windowed sup seminorm is the sup of |f| over
        // one zeroed half; the bump is symmetric, so both sides agree and
        // equal the largest strictly one-sided sample.
        let spec = space.grid_spec().unwrap();
        let mut expected: f64 = 0.0;
        for i in 0..spec.n_points() {
            if spec.point(i) < -spec.step / 2.0 {
                expected = expected.max(f[i].abs());
            }
        }
        assert!(expected > 0.5, "bump should have one-sided mass");
        assert_abs_diff_eq!(oracle.distance(0, &f).unwrap(), expected, epsilon = 1e-15);
        assert!(!oracle.contains(&f, 1e-6).unwrap());
    }

    #[test]
    fn half_support_two_sided_support_has_positive_distance() {
        let space = ModelSpace::default_grid();
        let oracle = half_support_union(&space).unwrap();
        let mut rng = SplitMix64::new(5);
        for _ in 0..50 {
            let c = 0.3 + 0.5 * rng.unit();
            let a = 0.5 + rng.unit();
            let b = 0.5 + rng.unit();
            let left = bump(-c, 0.2);
            let right = bump(c, 0.2);
            let f = space.sample_scalar(|x| a * left(x) + b * right(x)).unwrap();
            assert!(oracle.distance(0, &f).unwrap() > 0.0);
            assert!(!oracle.contains(&f, 1e-6).unwrap());
        }
    }

    #[test]
    fn orthant_distance_and_projection() {
        let space = ModelSpace::sequences(4).unwrap();
        let oracle = nonneg_orthant(&space).unwrap();
        let x = Vector(vec![1.0, -2.0, 3.0, 0.0]);
        assert_eq!(oracle.distance(1, &x).unwrap(), 2.0);
        assert_eq!(oracle.distance(0, &x).unwrap(), 0.0);
        let nonneg = Vector(vec![0.5, 0.0, 2.0, 7.0]);
        for n in 0..4 {
            assert_eq!(oracle.distance(n, &nonneg).unwrap(), 0.0);
        }
        let p = oracle.project(&Vector(vec![-1.0, 4.0])).unwrap();
        assert_eq!(p, Vector(vec![0.0, 4.0]));
    }

    #[test]
    fn constants_contain_constants_and_measure_spread() {
        let space = ModelSpace::default_grid();
        let oracle = constant_functions(&space).unwrap();
        let c = space.sample_scalar(|_| 3.7).unwrap();
        assert!(oracle.contains(&c, DEFAULT_MEMBERSHIP_TOL).unwrap());

        let f = space.sample_scalar(|x| x).unwrap();
        // Window [-1, 1], order 0: best constant 0, sup |x| = 1.
        assert_abs_diff_eq!(oracle.distance(0, &f).unwrap(), 1.0, epsilon = 1e-12);
        // Order 1: constants cannot change the derivative; sup |f'| = 1.
        assert_abs_diff_eq!(oracle.distance(2, &f).unwrap(), 1.0, epsilon = 1e-10);
    }

    #[test]
    fn constants_projection_is_governing_midrange() {
        let space = ModelSpace::default_grid();
        let oracle = constant_functions(&space).unwrap();
        let f = space.sample_scalar(|x| x + 1.0).unwrap();
        let p = oracle.project(&f).unwrap();
        // Midrange over [-2, 2] of x + 1 is 1.
        assert_abs_diff_eq!(p[0], 1.0, epsilon = 1e-12);
        let d = space.seminorm(1, &f.sub(&p)).unwrap();
        assert_abs_diff_eq!(d, oracle.distance(1, &f).unwrap(), epsilon = 1e-12);
    }

    fn parabola_space() -> ModelSpace {
        let g = ModelSpace::default_grid();
        crate::space::product_space(g.clone(), g).unwrap()
    }

    #[test]
    fn parabola_section_points_are_members() {
        let space = parabola_space();
        let oracle = parabola_graph(&space).unwrap();
        let g = &space.factors()[0];
        let h = g.sample_scalar(|x| (x * 0.7).sin()).unwrap();
        let h2 = Vector(h.as_slice().iter().map(|a| a * a).collect());
        let point = Vector::concat(&[&h, &h2]);
        assert!(oracle.contains(&point, DEFAULT_MEMBERSHIP_TOL).unwrap());
    }

    #[test]
    fn parabola_surrogate_residual_values() {
        let space = parabola_space();
        let oracle = parabola_graph(&space).unwrap();
        let g = &space.factors()[0];
        let dim = g.dim();

        // (0, 1): residual 1 - 0^2 under the windowed sup.
        let a = Vector::zeros(dim);
        let b = Vector(vec![1.0; dim]);
        let point = Vector::concat(&[&a, &b]);
        assert_abs_diff_eq!(oracle.distance(0, &point).unwrap(), 1.0, epsilon = 1e-15);

        // Flat-geodesic probe (h + tu, h^2 + 2htu): residual is -t^2 u^2.
        let h = g.sample_scalar(|x| 0.5 * x).unwrap();
        let u = g.sample_scalar(|_| 1.0).unwrap();
        let t = 0.125;
        let a = h.add_scaled(t, &u);
        let mut b = Vector::zeros(dim);
        for i in 0..dim {
            b[i] = h[i] * h[i] + 2.0 * h[i] * u[i] * t;
        }
        let probe = Vector::concat(&[&a, &b]);
        assert_abs_diff_eq!(
            oracle.distance(0, &probe).unwrap(),
            t * t,
            epsilon = 1e-12
        );
    }

    #[test]
    fn fourier_in_span_and_out_of_span() {
        let space = ModelSpace::circle_grid(64, 1).unwrap();
        let oracle = fourier_subspace(&space, 3).unwrap();
        let inside = space.sample_scalar(|t| (2.0 * t).cos()).unwrap();
        assert!(oracle.max_distance(&inside).unwrap() <= 1e-8);
        let zero = Vector::zeros(space.dim());
        assert_eq!(oracle.max_distance(&zero).unwrap(), 0.0);
        let outside = space.sample_scalar(|t| (5.0 * t).cos()).unwrap();
        let d = oracle.distance(0, &outside).unwrap();
        assert_abs_diff_eq!(d, 1.0, epsilon = 0.05);
    }

    #[test]
    fn strata_membership_and_distances() {
        let space = ModelSpace::sequences(4).unwrap();
        let strata = finite_sequence_strata(&space).unwrap();
        let x = Vector(vec![1.0, 2.0, 0.0, 0.0]);
        let tol = DEFAULT_MEMBERSHIP_TOL;

        let h2 = &strata.strata[1];
        assert!(h2.closure.contains(&x, tol).unwrap());
        assert!(h2.stratum.contains(&x, tol).unwrap());

        let h1 = &strata.strata[0];
        assert!(!h1.closure.contains(&x, tol).unwrap());
        assert_eq!(h1.closure.distance(1, &x).unwrap(), 2.0);

        let zero = Vector::zeros(4);
        for s in &strata.strata {
            assert!(s.closure.contains(&zero, tol).unwrap());
            assert!(!s.stratum.contains(&zero, tol).unwrap());
        }
    }

    #[test]
    fn strata_frontier_on_samples() {
        // No point of S_j comes within tol of H_i when i < j: its j-th
        // coordinate alone keeps the distance at least that coordinate.
        let space = ModelSpace::sequences(6).unwrap();
        let strata = finite_sequence_strata(&space).unwrap();
        let mut rng = SplitMix64::new(99);
        for j in 2..=6usize {
            for _ in 0..20 {
                let mut x = Vector::zeros(6);
                for c in 0..j {
                    x[c] = rng.symmetric();
                }
                x[j - 1] = 0.5 + rng.unit();
                assert!(strata.strata[j - 1].stratum.contains(&x, 1e-9).unwrap());
                for i in 0..j - 1 {
                    assert!(strata.strata[i].closure.max_distance(&x).unwrap() > 0.5);
                }
                // ... while H_j does contain every point of S_i for i <= j.
                for i in 0..j {
                    let mut y = Vector::zeros(6);
                    for c in 0..=i {
                        y[c] = rng.symmetric();
                    }
                    assert!(strata.strata[j - 1].closure.contains(&y, 1e-9).unwrap());
                }
            }
        }
    }

    #[test]
    fn circle_loops_members_and_outliers() {
        let space = ModelSpace::circle_grid(64, 3).unwrap();
        let oracle = great_circle_constant_loops(&space, [0.0, 0.0, 1.0]).unwrap();

        let equatorial = space.sample_r3(|_| [1.0, 0.0, 0.0]).unwrap();
        assert!(oracle.contains(&equatorial, DEFAULT_MEMBERSHIP_TOL).unwrap());
        assert_eq!(oracle.max_distance(&equatorial).unwrap(), 0.0);

        let pole = space.sample_r3(|_| [0.0, 0.0, 1.0]).unwrap();
        assert!(oracle.distance(0, &pole).unwrap() >= 1.0 - 1e-12);
        assert!(!oracle.contains(&pole, 0.5).unwrap());

        let full_loop = space.sample_r3(|t| [t.cos(), t.sin(), 0.0]).unwrap();
        assert!(oracle.distance(0, &full_loop).unwrap() > 0.9);
        assert!(!oracle.contains(&full_loop, 0.5).unwrap());
    }

    #[test]
    fn translate_recognizes_shifted_members() {
        let space = ModelSpace::default_grid();
        let base = half_support_union(&space).unwrap();
        let shifted = translate_set(base.clone(), 0.5).unwrap();

        let f = space.sample_scalar(bump(0.75, 0.25)).unwrap();
        let spec = space.grid_spec().unwrap();
        let moved = Vector(crate::oracle::shift_grid_data(
            spec.n_points(),
            1,
            false,
            f.as_slice(),
            50,
        ));
        assert!(shifted.contains(&moved, DEFAULT_MEMBERSHIP_TOL).unwrap());
        for n in 0..space.seminorm_count() {
            assert_abs_diff_eq!(
                shifted.distance(n, &moved).unwrap(),
                base.distance(n, &f).unwrap(),
                epsilon = 1e-15
            );
        }
    }

    #[test]
    fn translate_rejects_unaligned_shift() {
        let space = ModelSpace::default_grid();
        let base = half_support_union(&space).unwrap();
        assert!(matches!(
            translate_set(base, 0.005),
            Err(Error::UnalignedShift { .. })
        ));
    }

    #[test]
    fn translate_zero_is_identity() {
        let space = ModelSpace::default_grid();
        let base = half_support_union(&space).unwrap();
        let id = translate_set(base.clone(), 0.0).unwrap();
        let mut rng = SplitMix64::new(3);
        for _ in 0..100 {
            let c = rng.symmetric();
            let w = 0.15 + 0.3 * rng.unit();
            let amp = rng.symmetric();
            let b = bump(c, w);
            let f = space.sample_scalar(|x| amp * b(x)).unwrap();
            for n in 0..space.seminorm_count() {
                assert_eq!(
                    id.distance(n, &f).unwrap(),
                    base.distance(n, &f).unwrap()
                );
            }
            assert_eq!(
                id.contains(&f, 1e-9).unwrap(),
                base.contains(&f, 1e-9).unwrap()
            );
        }
    }

    #[test]
    fn exact_oracles_report_zero_on_members() {
        let grid = ModelSpace::default_grid();
        let seqs = ModelSpace::sequences(8).unwrap();
        let mut rng = SplitMix64::new(17);

        let half = half_support_union(&grid).unwrap();
        let consts = constant_functions(&grid).unwrap();
        let orth = nonneg_orthant(&seqs).unwrap();

        for _ in 0..50 {
            let side = rng.unit() < 0.5;
            let c = 0.3 + rng.unit();
            let amp = rng.symmetric();
            let b = bump(if side { c } else { -c }, 0.25);
            let f = grid.sample_scalar(|x| amp * b(x)).unwrap();
            assert!(half.max_distance(&f).unwrap() <= 1e-12);

            let k = rng.symmetric() * 10.0;
            let g = grid.sample_scalar(|_| k).unwrap();
            assert!(consts.max_distance(&g).unwrap() <= 1e-12);

            let x = Vector((0..8).map(|_| rng.unit()).collect());
            assert!(orth.max_distance(&x).unwrap() <= 1e-12);
        }
    }

    #[test]
    fn projection_does_not_beat_reported_distance() {
        let grid = ModelSpace::default_grid();
        let seqs = ModelSpace::sequences(8).unwrap();
        let mut rng = SplitMix64::new(29);

        let oracles: Vec<OracleRef> = vec![
            half_support_union(&grid).unwrap(),
            constant_functions(&grid).unwrap(),
        ];
        for oracle in &oracles {
            for _ in 0..100 {
                let c = rng.symmetric();
                let w = 0.15 + 0.3 * rng.unit();
                let amp = 2.0 * rng.symmetric();
                let b = bump(c, w);
                let f = grid.sample_scalar(|x| amp * b(x)).unwrap();
                let p = oracle.project(&f).unwrap();
                assert!(oracle.contains(&p, 1e-9).unwrap(), "{}", oracle.label());
                for n in 0..grid.seminorm_count() {
                    let norm = grid.seminorm(n, &f.sub(&p)).unwrap();
                    let dist = oracle.distance(n, &f).unwrap();
                    assert!(
                        norm >= dist - 1e-9,
                        "{}: projection closer than reported infimum",
                        oracle.label()
                    );
                }
            }
        }

        // Orthant and strata projections attain every per-seminorm distance.
        let orth = nonneg_orthant(&seqs).unwrap();
        let strata = finite_sequence_strata(&seqs).unwrap();
        for _ in 0..200 {
            let x = Vector((0..8).map(|_| 3.0 * rng.symmetric()).collect());
            let p = orth.project(&x).unwrap();
            for n in 0..8 {
                let norm = seqs.seminorm(n, &x.sub(&p)).unwrap();
                assert_abs_diff_eq!(norm, orth.distance(n, &x).unwrap(), epsilon = 1e-9);
            }
            let h3 = &strata.strata[2].closure;
            let p = h3.project(&x).unwrap();
            for n in 0..8 {
                let norm = seqs.seminorm(n, &x.sub(&p)).unwrap();
                assert_abs_diff_eq!(norm, h3.distance(n, &x).unwrap(), epsilon = 1e-9);
            }
        }
    }

    #[test]
    fn loop_bundle_separates_tangent_from_transverse_fibers() {
        let space = ModelSpace::circle_grid(64, 3).unwrap();
        let bundle = circle_loop_tangent_bundle(&space, [0.0, 0.0, 1.0]).unwrap();
        let loop_at = |p: [f64; 3]| {
            space
                .sample_r3(|_| p)
                .expect("constant loop samples on the grid")
        };
        // Base on the equator, fiber along the tangent at that point.
        let x = loop_at([1.0, 0.0, 0.0]);
        let u = loop_at([0.0, 0.7, 0.0]);
        let on = Vector::concat(&[&x, &u]);
        assert!(bundle.max_distance(&on).unwrap() <= 1e-12);
        assert!(bundle.contains(&on, 1e-9).unwrap());
        // A radial fiber component is picked up by the fiber residual even
        // though the base point is unchanged.
        let w = loop_at([0.4, 0.7, 0.0]);
        let off = Vector::concat(&[&x, &w]);
        assert!(bundle.max_distance(&off).unwrap() >= 0.39);
        let projected = bundle.project(&off).unwrap();
        assert!(bundle.contains(&projected, 1e-9).unwrap());
        // A normal component also counts as leaving the fiber.
        let z = loop_at([0.0, 0.7, 0.3]);
        let off_plane = Vector::concat(&[&x, &z]);
        assert!(bundle.max_distance(&off_plane).unwrap() >= 0.29);
    }
}
