//! Model spaces: finite-dimensional stand-ins for Frechet spaces, carrying an
//! ordered family of seminorms and the bounded metric they induce.
//!
//! Two base kinds are supported. `Grid` holds real or vector-valued functions
//! sampled on a uniform grid; its seminorms are sups of finite-difference
//! derivatives over symmetric windows. `Sequences` holds truncated real
//! sequences; its seminorms are coordinate absolute values. Products combine
//! factors coordinate-wise, and the n-th product seminorm is the max of the
//! factors' n-th seminorms (a factor that has run out of seminorms
//! contributes zero).
//!
//! The metric is
//!
//! ```text
//! m(x, y) = sum_n 2^{-(n+1)} s_n(x - y) / (1 + s_n(x - y))
//! ```
//!
//! with n counting seminorms from zero. It is translation invariant and
//! bounded by 1, and two points agree exactly when the metric vanishes.

use crate::error::{Error, Result};

/// Dense coordinate vector. For grid spaces the layout is point-major:
/// component c of grid point i lives at index `i * codomain_dim + c`.
/// Product elements are the concatenation of their factor elements.
#[derive(Clone, Debug, PartialEq)]
pub struct Vector(pub Vec<f64>);

/// Points and tangent vectors share a representation.
pub type Point = Vector;

impl Vector {
    pub fn zeros(dim: usize) -> Self {
        Vector(vec![0.0; dim])
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn scaled(&self, s: f64) -> Vector {
        Vector(self.0.iter().map(|a| s * a).collect())
    }

    /// self + s * other
    pub fn add_scaled(&self, s: f64, other: &Vector) -> Vector {
        debug_assert_eq!(self.dim(), other.dim());
        Vector(
            self.0
                .iter()
                .zip(&other.0)
                .map(|(a, b)| a + s * b)
                .collect(),
        )
    }

    pub fn add(&self, other: &Vector) -> Vector {
        self.add_scaled(1.0, other)
    }

    pub fn sub(&self, other: &Vector) -> Vector {
        self.add_scaled(-1.0, other)
    }

    pub fn sup_norm(&self) -> f64 {
        self.0.iter().fold(0.0, |m, a| m.max(a.abs()))
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|a| a.is_finite())
    }

    pub fn concat(parts: &[&Vector]) -> Vector {
        let mut data = Vec::with_capacity(parts.iter().map(|p| p.dim()).sum());
        for p in parts {
            data.extend_from_slice(&p.0);
        }
        Vector(data)
    }
}

impl std::ops::Index<usize> for Vector {
    type Output = f64;
    fn index(&self, i: usize) -> &f64 {
        &self.0[i]
    }
}

impl std::ops::IndexMut<usize> for Vector {
    fn index_mut(&mut self, i: usize) -> &mut f64 {
        &mut self.0[i]
    }
}

/// Uniform grid on [min, max]. Non-periodic grids include both endpoints;
/// periodic grids cover [min, max) and finite differences wrap around.
#[derive(Clone, Debug, PartialEq)]
pub struct GridSpec {
    pub min: f64,
    pub max: f64,
    pub step: f64,
    pub codomain_dim: usize,
    pub periodic: bool,
}

impl GridSpec {
    pub fn n_points(&self) -> usize {
        let cells = ((self.max - self.min) / self.step).round() as usize;
        if self.periodic {
            cells
        } else {
            cells + 1
        }
    }

    pub fn point(&self, i: usize) -> f64 {
        self.min + i as f64 * self.step
    }

    /// Index of the grid point nearest to x, or None if x is off the grid
    /// by more than a relative sliver.
    pub fn index_of(&self, x: f64) -> Option<usize> {
        let raw = (x - self.min) / self.step;
        let i = raw.round();
        if (raw - i).abs() > 1e-9 {
            return None;
        }
        let i = i as isize;
        if i < 0 || i >= self.n_points() as isize {
            return None;
        }
        Some(i as usize)
    }
}

/// One seminorm of a base space.
#[derive(Clone, Debug, PartialEq)]
pub enum SeminormSpec {
    /// sup over grid points in [-window, window] of the absolute value of the
    /// order-th finite-difference derivative (componentwise max for
    /// vector-valued grids). order = 0 is a plain windowed sup norm.
    SupDerivative { window: f64, order: usize },
    /// Absolute value of a single coordinate of a truncated sequence.
    Coordinate { index: usize },
}

#[derive(Clone, Debug)]
pub enum SpaceKind {
    Grid(GridSpec),
    Sequences { len: usize },
    Product(Vec<ModelSpace>),
}

#[derive(Clone, Debug)]
pub struct ModelSpace {
    kind: SpaceKind,
    /// Empty exactly for products, whose seminorms are derived from the
    /// factors by the max rule.
    seminorms: Vec<SeminormSpec>,
}

impl ModelSpace {
    pub fn grid(spec: GridSpec, seminorms: Vec<SeminormSpec>) -> Result<Self> {
        if spec.step <= 0.0 || !spec.step.is_finite() {
            return Err(Error::InvalidSpace(format!(
                "grid step must be positive, got {}",
                spec.step
            )));
        }
        if spec.max <= spec.min {
            return Err(Error::InvalidSpace(format!(
                "grid bounds [{}, {}] are empty",
                spec.min, spec.max
            )));
        }
        let cells = (spec.max - spec.min) / spec.step;
        if (cells - cells.round()).abs() > 1e-9 {
            return Err(Error::InvalidSpace(format!(
                "grid step {} does not divide [{}, {}] evenly",
                spec.step, spec.min, spec.max
            )));
        }
        if spec.n_points() < 3 {
            return Err(Error::InvalidSpace(format!(
                "grid needs at least 3 points, got {}",
                spec.n_points()
            )));
        }
        if spec.codomain_dim == 0 {
            return Err(Error::InvalidSpace("codomain dimension is zero".into()));
        }
        if seminorms.is_empty() {
            return Err(Error::InvalidSpace("seminorm list is empty".into()));
        }
        let half_extent = (spec.max - spec.min) / 2.0;
        for s in &seminorms {
            match *s {
                SeminormSpec::SupDerivative { window, order } => {
                    if window <= 0.0 || window.is_nan() || window > half_extent + 1e-9 {
                        return Err(Error::InvalidSpace(format!(
                            "window {} outside (0, {}]",
                            window, half_extent
                        )));
                    }
                    if order >= spec.n_points() {
                        return Err(Error::InvalidSpace(format!(
                            "derivative order {} too high for {} grid points",
                            order,
                            spec.n_points()
                        )));
                    }
                }
                SeminormSpec::Coordinate { .. } => {
                    return Err(Error::InvalidSpace(
                        "coordinate seminorm on a grid space".into(),
                    ));
                }
            }
        }
        Ok(ModelSpace {
            kind: SpaceKind::Grid(spec),
            seminorms,
        })
    }

    /// Scalar functions on [-2, 2] at step 0.01 with windowed sup and first
    /// finite-difference-derivative seminorms on [-1, 1] and [-2, 2].
    pub fn default_grid() -> ModelSpace {
        let spec = GridSpec {
            min: -2.0,
            max: 2.0,
            step: 0.01,
            codomain_dim: 1,
            periodic: false,
        };
        let seminorms = vec![
            SeminormSpec::SupDerivative { window: 1.0, order: 0 },
            SeminormSpec::SupDerivative { window: 2.0, order: 0 },
            SeminormSpec::SupDerivative { window: 1.0, order: 1 },
            SeminormSpec::SupDerivative { window: 2.0, order: 1 },
        ];
        ModelSpace::grid(spec, seminorms).expect("default grid is valid")
    }

    /// Periodic grid on [-pi, pi) for loops, with full-circle sup and first
    /// derivative seminorms.
    pub fn circle_grid(n_points: usize, codomain_dim: usize) -> Result<ModelSpace> {
        use std::f64::consts::PI;
        let step = 2.0 * PI / n_points as f64;
        let spec = GridSpec {
            min: -PI,
            max: PI,
            step,
            codomain_dim,
            periodic: true,
        };
        let seminorms = vec![
            SeminormSpec::SupDerivative { window: PI, order: 0 },
            SeminormSpec::SupDerivative { window: PI, order: 1 },
        ];
        ModelSpace::grid(spec, seminorms)
    }

    /// Truncated real sequences of length `len`, one coordinate seminorm per
    /// entry.
    pub fn sequences(len: usize) -> Result<ModelSpace> {
        if len == 0 {
            return Err(Error::InvalidSpace("sequence truncation is zero".into()));
        }
        let seminorms = (0..len)
            .map(|index| SeminormSpec::Coordinate { index })
            .collect();
        Ok(ModelSpace {
            kind: SpaceKind::Sequences { len },
            seminorms,
        })
    }

    pub fn product(factors: Vec<ModelSpace>) -> Result<ModelSpace> {
        if factors.len() < 2 {
            return Err(Error::InvalidSpace(
                "product needs at least two factors".into(),
            ));
        }
        Ok(ModelSpace {
            kind: SpaceKind::Product(factors),
            seminorms: Vec::new(),
        })
    }

    pub fn kind(&self) -> &SpaceKind {
        &self.kind
    }

    pub fn grid_spec(&self) -> Option<&GridSpec> {
        match &self.kind {
            SpaceKind::Grid(spec) => Some(spec),
            _ => None,
        }
    }

    pub fn factors(&self) -> &[ModelSpace] {
        match &self.kind {
            SpaceKind::Product(fs) => fs,
            _ => &[],
        }
    }

    /// Coordinate ranges of the factors inside a product element.
    pub fn factor_ranges(&self) -> Vec<std::ops::Range<usize>> {
        let mut out = Vec::new();
        let mut offset = 0;
        for f in self.factors() {
            let d = f.dim();
            out.push(offset..offset + d);
            offset += d;
        }
        out
    }

    pub fn dim(&self) -> usize {
        match &self.kind {
            SpaceKind::Grid(spec) => spec.n_points() * spec.codomain_dim,
            SpaceKind::Sequences { len } => *len,
            SpaceKind::Product(fs) => fs.iter().map(|f| f.dim()).sum(),
        }
    }

    pub fn seminorm_count(&self) -> usize {
        match &self.kind {
            SpaceKind::Product(fs) => fs.iter().map(|f| f.seminorm_count()).max().unwrap_or(0),
            _ => self.seminorms.len(),
        }
    }

    pub fn seminorm_specs(&self) -> &[SeminormSpec] {
        &self.seminorms
    }

    fn check_dim(&self, x: &Vector) -> Result<()> {
        if x.dim() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: x.dim(),
            });
        }
        Ok(())
    }

    pub fn seminorm(&self, index: usize, x: &Vector) -> Result<f64> {
        self.check_dim(x)?;
        if index >= self.seminorm_count() {
            return Err(Error::SeminormIndex {
                index,
                count: self.seminorm_count(),
            });
        }
        Ok(self.seminorm_unchecked(index, x.as_slice()))
    }

    /// Same as `seminorm` but on a pre-validated slice; used on factor slices
    /// of product elements.
    pub(crate) fn seminorm_unchecked(&self, index: usize, x: &[f64]) -> f64 {
        match &self.kind {
            SpaceKind::Grid(spec) => match self.seminorms[index] {
                SeminormSpec::SupDerivative { window, order } => {
                    grid_sup_derivative(spec, x, window, order)
                }
                SeminormSpec::Coordinate { .. } => unreachable!("validated at construction"),
            },
            SpaceKind::Sequences { .. } => match self.seminorms[index] {
                SeminormSpec::Coordinate { index: c } => x[c].abs(),
                SeminormSpec::SupDerivative { .. } => unreachable!("validated at construction"),
            },
            SpaceKind::Product(fs) => {
                let mut best: f64 = 0.0;
                let mut offset = 0;
                for f in fs {
                    let d = f.dim();
                    if index < f.seminorm_count() {
                        best = best.max(f.seminorm_unchecked(index, &x[offset..offset + d]));
                    }
                    offset += d;
                }
                best
            }
        }
    }

    /// All seminorms of x, in order.
    pub fn seminorms_of(&self, x: &Vector) -> Result<Vec<f64>> {
        self.check_dim(x)?;
        Ok((0..self.seminorm_count())
            .map(|n| self.seminorm_unchecked(n, x.as_slice()))
            .collect())
    }

    pub fn metric(&self, x: &Vector, y: &Vector) -> Result<f64> {
        self.check_dim(x)?;
        self.check_dim(y)?;
        let diff = x.sub(y);
        let mut total = 0.0;
        let mut weight = 0.5;
        for n in 0..self.seminorm_count() {
            let s = self.seminorm_unchecked(n, diff.as_slice());
            total += weight * s / (1.0 + s);
            weight *= 0.5;
        }
        Ok(total)
    }

    /// Sample a scalar function on a grid space.
    pub fn sample_scalar(&self, f: impl Fn(f64) -> f64) -> Result<Vector> {
        let spec = self
            .grid_spec()
            .ok_or_else(|| Error::Unsupported("sample_scalar on non-grid space".into()))?;
        if spec.codomain_dim != 1 {
            return Err(Error::Unsupported(
                "sample_scalar on vector-valued grid".into(),
            ));
        }
        Ok(Vector(
            (0..spec.n_points()).map(|i| f(spec.point(i))).collect(),
        ))
    }

    /// Sample an R^3-valued function on a grid space with codomain_dim = 3.
    pub fn sample_r3(&self, f: impl Fn(f64) -> [f64; 3]) -> Result<Vector> {
        let spec = self
            .grid_spec()
            .ok_or_else(|| Error::Unsupported("sample_r3 on non-grid space".into()))?;
        if spec.codomain_dim != 3 {
            return Err(Error::Unsupported("sample_r3 needs codomain_dim 3".into()));
        }
        let mut data = Vec::with_capacity(self.dim());
        for i in 0..spec.n_points() {
            data.extend_from_slice(&f(spec.point(i)));
        }
        Ok(Vector(data))
    }
}

/// Build the product of two spaces. The product seminorm count is the max of
/// the factor counts and the n-th product seminorm of (u, w) is
/// max(s_n(u), s_n(w)), factors without an n-th seminorm contributing zero.
pub fn product_space(a: ModelSpace, b: ModelSpace) -> Result<ModelSpace> {
    ModelSpace::product(vec![a, b])
}

/// Shift grid data by whole cells. Positive `cells` moves content toward
/// larger coordinates (the translated function f(. - a) with a =
/// cells * step). Non-periodic grids zero-fill at the exposed boundary;
/// periodic grids wrap.
pub fn shift_grid_data(
    n_points: usize,
    codomain_dim: usize,
    periodic: bool,
    data: &[f64],
    cells: isize,
) -> Vec<f64> {
    let mut out = vec![0.0; data.len()];
    for i in 0..n_points as isize {
        let src = i - cells;
        let src = if periodic {
            src.rem_euclid(n_points as isize)
        } else if src < 0 || src >= n_points as isize {
            continue;
        } else {
            src
        };
        for c in 0..codomain_dim {
            out[i as usize * codomain_dim + c] = data[src as usize * codomain_dim + c];
        }
    }
    out
}

/// First finite-difference derivative of one component array: centered in the
/// interior, one-sided at non-periodic boundaries, wrapping when periodic.
fn fd_first_derivative(values: &[f64], step: f64, periodic: bool) -> Vec<f64> {
    let n = values.len();
    let mut out = vec![0.0; n];
    if periodic {
        for i in 0..n {
            let prev = values[(i + n - 1) % n];
            let next = values[(i + 1) % n];
            out[i] = (next - prev) / (2.0 * step);
        }
    } else {
        out[0] = (values[1] - values[0]) / step;
        out[n - 1] = (values[n - 1] - values[n - 2]) / step;
        for i in 1..n - 1 {
            out[i] = (values[i + 1] - values[i - 1]) / (2.0 * step);
        }
    }
    out
}

/// m-th finite-difference derivative by repeated first differences.
pub fn fd_derivative(values: &[f64], step: f64, order: usize, periodic: bool) -> Vec<f64> {
    let mut cur = values.to_vec();
    for _ in 0..order {
        cur = fd_first_derivative(&cur, step, periodic);
    }
    cur
}

fn grid_sup_derivative(spec: &GridSpec, x: &[f64], window: f64, order: usize) -> f64 {
    let n = spec.n_points();
    let d = spec.codomain_dim;
    let mut sup: f64 = 0.0;
    let mut component = vec![0.0; n];
    for c in 0..d {
        for i in 0..n {
            component[i] = x[i * d + c];
        }
        let deriv = if order == 0 {
            component.clone()
        } else {
            fd_derivative(&component, spec.step, order, spec.periodic)
        };
        for (i, d) in deriv.iter().enumerate() {
            if spec.point(i).abs() <= window + 1e-12 {
                sup = sup.max(d.abs());
            }
        }
    }
    sup
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn seq(coords: &[f64]) -> Vector {
        Vector(coords.to_vec())
    }

    #[test]
    fn sequence_seminorm_is_coordinate_abs() {
        let space = ModelSpace::sequences(4).unwrap();
        let x = seq(&[1.0, -2.0, 3.0, 0.0]);
        assert_eq!(space.seminorm(1, &x).unwrap(), 2.0);
        assert_eq!(space.seminorm(3, &x).unwrap(), 0.0);
    }

    #[test]
    fn zero_function_has_zero_seminorms() {
        let space = ModelSpace::default_grid();
        let zero = Vector::zeros(space.dim());
        for n in 0..space.seminorm_count() {
            assert_eq!(space.seminorm(n, &zero).unwrap(), 0.0);
        }
    }

    #[test]
    fn derivative_seminorm_of_quadratic() {
        // f(x) = x^2 has f'(x) = 2x; the sup over [-1, 1] is 2 and centered
        // differences are exact on quadratics.
        let space = ModelSpace::default_grid();
        let f = space.sample_scalar(|x| x * x).unwrap();
        let got = space.seminorm(2, &f).unwrap();
        assert_abs_diff_eq!(got, 2.0, epsilon = 0.02);
    }

    #[test]
    fn window_limits_the_sup() {
        let space = ModelSpace::default_grid();
        let f = space.sample_scalar(|x| x).unwrap();
        // sup |x| over [-1, 1] vs over [-2, 2]
        assert_abs_diff_eq!(space.seminorm(0, &f).unwrap(), 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(space.seminorm(1, &f).unwrap(), 2.0, epsilon = 1e-12);
    }

    #[test]
    fn metric_single_seminorm_value() {
        let space = ModelSpace::sequences(1).unwrap();
        let x = seq(&[1.0]);
        let y = seq(&[0.0]);
        // 2^{-1} * 1 / (1 + 1)
        assert_abs_diff_eq!(space.metric(&x, &y).unwrap(), 0.25, epsilon = 1e-15);
    }

    #[test]
    fn metric_identical_points_is_zero() {
        let space = ModelSpace::default_grid();
        let f = space.sample_scalar(|x| x.sin()).unwrap();
        assert_eq!(space.metric(&f, &f).unwrap(), 0.0);
    }

    #[test]
    fn metric_is_translation_invariant_and_bounded() {
        let space = ModelSpace::sequences(8).unwrap();
        let mut rng = crate::rng::SplitMix64::new(11);
        for _ in 0..200 {
            let x = Vector((0..8).map(|_| 10.0 * rng.symmetric()).collect());
            let y = Vector((0..8).map(|_| 10.0 * rng.symmetric()).collect());
            let z = Vector((0..8).map(|_| 10.0 * rng.symmetric()).collect());
            let d = space.metric(&x, &y).unwrap();
            let d_shifted = space.metric(&x.add(&z), &y.add(&z)).unwrap();
            assert_abs_diff_eq!(d, d_shifted, epsilon = 1e-12);
            assert!(d < 1.0);
            assert_abs_diff_eq!(d, space.metric(&y, &x).unwrap(), epsilon = 1e-15);
        }
    }

    #[test]
    fn metric_triangle_inequality_random_triples() {
        let space = ModelSpace::sequences(6).unwrap();
        let mut rng = crate::rng::SplitMix64::new(23);
        for _ in 0..1000 {
            let draw = |rng: &mut crate::rng::SplitMix64| {
                Vector((0..6).map(|_| 5.0 * rng.symmetric()).collect())
            };
            let x = draw(&mut rng);
            let y = draw(&mut rng);
            let z = draw(&mut rng);
            let xy = space.metric(&x, &y).unwrap();
            let yz = space.metric(&y, &z).unwrap();
            let xz = space.metric(&x, &z).unwrap();
            assert!(xz <= xy + yz + 1e-12);
        }
    }

    #[test]
    fn product_seminorm_takes_factor_max() {
        let a = ModelSpace::sequences(2).unwrap();
        let b = ModelSpace::sequences(2).unwrap();
        let p = product_space(a, b).unwrap();
        let x = seq(&[1.0, 0.0, -3.0, 0.0]);
        assert_eq!(p.seminorm(0, &x).unwrap(), 3.0);
        assert_eq!(p.seminorm(1, &x).unwrap(), 0.0);
    }

    #[test]
    fn product_with_uneven_factor_counts() {
        let a = ModelSpace::sequences(3).unwrap();
        let b = ModelSpace::sequences(1).unwrap();
        let p = product_space(a, b).unwrap();
        assert_eq!(p.seminorm_count(), 3);
        let x = seq(&[0.0, 0.0, 4.0, 9.0]);
        // factor b has no seminorm index 2, so only factor a contributes
        assert_eq!(p.seminorm(2, &x).unwrap(), 4.0);
        assert_eq!(p.seminorm(0, &x).unwrap(), 9.0);
    }

    #[test]
    fn fd_convergence_under_grid_refinement() {
        // Halving the grid step must at least halve the derivative error for
        // polynomials up to the stencil order. On a quadratic the centered
        // interior stencil is exact and the one-sided boundary error is
        // exactly step * |f''| / 2.
        let err_for = |step: f64| {
            let spec = GridSpec {
                min: -2.0,
                max: 2.0,
                step,
                codomain_dim: 1,
                periodic: false,
            };
            let space = ModelSpace::grid(
                spec.clone(),
                vec![SeminormSpec::SupDerivative { window: 2.0, order: 1 }],
            )
            .unwrap();
            let f = space.sample_scalar(|x| x * x).unwrap();
            let fd = fd_derivative(f.as_slice(), step, 1, false);
            let mut worst: f64 = 0.0;
            for (i, v) in fd.iter().enumerate() {
                let exact = 2.0 * spec.point(i);
                worst = worst.max((v - exact).abs());
            }
            worst
        };
        let coarse = err_for(0.02);
        let fine = err_for(0.01);
        assert!(fine <= coarse / 2.0 + 1e-12, "coarse {coarse} fine {fine}");
    }

    #[test]
    fn seminorm_index_out_of_range_errors() {
        let space = ModelSpace::sequences(3).unwrap();
        let x = seq(&[0.0, 0.0, 0.0]);
        assert!(matches!(
            space.seminorm(3, &x),
            Err(Error::SeminormIndex { .. })
        ));
    }

    #[test]
    fn dimension_mismatch_errors() {
        let space = ModelSpace::sequences(3).unwrap();
        let x = seq(&[1.0, 2.0]);
        assert!(matches!(
            space.seminorm(0, &x),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn degenerate_grids_are_rejected() {
        let bad = GridSpec {
            min: -1.0,
            max: 1.0,
            step: 2.0,
            codomain_dim: 1,
            periodic: false,
        };
        assert!(ModelSpace::grid(
            bad,
            vec![SeminormSpec::SupDerivative { window: 1.0, order: 0 }]
        )
        .is_err());
        let empty = GridSpec {
            min: -1.0,
            max: 1.0,
            step: 0.1,
            codomain_dim: 1,
            periodic: false,
        };
        assert!(ModelSpace::grid(empty, vec![]).is_err());
    }

    #[test]
    fn periodic_derivative_wraps() {
        let space = ModelSpace::circle_grid(64, 1).unwrap();
        let f = space.sample_scalar(|t| t.sin()).unwrap();
        let spec = space.grid_spec().unwrap();
        let deriv = fd_derivative(f.as_slice(), spec.step, 1, true);
        for (i, d) in deriv.iter().enumerate() {
            let exact = spec.point(i).cos();
            assert_abs_diff_eq!(*d, exact, epsilon = 2e-3);
        }
    }
}
