//! Set oracles: candidate invariant sets S presented through membership,
//! per-seminorm distances d_n(x, S), and optional nearest points.
//!
//! An oracle never enumerates its set. Everything downstream (cone
//! estimation, invariance verdicts) consumes only the distance interface, so
//! a set is exactly as good as the distances it reports. Oracles advertise
//! whether those distances are exact infima or certified upper bounds.

mod library;

pub use library::{
    circle_loop_tangent_bundle, constant_functions, finite_sequence_strata, fourier_subspace,
    great_circle_constant_loops, half_support_side, half_support_union, nonneg_orthant,
    parabola_graph, Stratification, Stratum,
};

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::space::{ModelSpace, SpaceKind, Vector};

/// Default membership tolerance across the set library.
pub const DEFAULT_MEMBERSHIP_TOL: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Exactness {
    /// Reported distances are the per-seminorm infima (up to rounding).
    Exact,
    /// Reported distances are certified upper bounds (typically via an
    /// explicit surrogate point in S).
    UpperBound,
}

pub trait SetOracle: Send + Sync {
    fn space(&self) -> &ModelSpace;

    fn label(&self) -> &str;

    fn exactness(&self) -> Exactness;

    /// Distance from x to the set under seminorm `n`.
    fn distance(&self, n: usize, x: &Vector) -> Result<f64>;

    /// A nearest (or near-nearest) point of the set, when the oracle can
    /// produce one.
    fn project(&self, x: &Vector) -> Option<Vector> {
        let _ = x;
        None
    }

    /// Membership within tol: by default, every seminorm distance at most
    /// tol. Oracles with extra side conditions override this.
    fn contains(&self, x: &Vector, tol: f64) -> Result<bool> {
        Ok(self.max_distance(x)? <= tol)
    }

    /// Max of the per-seminorm distances.
    fn max_distance(&self, x: &Vector) -> Result<f64> {
        let mut worst: f64 = 0.0;
        for n in 0..self.space().seminorm_count() {
            worst = worst.max(self.distance(n, x)?);
        }
        Ok(worst)
    }
}

pub type OracleRef = Arc<dyn SetOracle>;

/// Cartesian product B x C on the product of the factor spaces. The n-th
/// product seminorm is a factor max, so d_n((u, w), B x C) =
/// max(d_n(u, B), d_n(w, C)) and the product of exact oracles stays exact.
pub struct ProductOracle {
    space: ModelSpace,
    parts: Vec<OracleRef>,
    label: String,
}

impl ProductOracle {
    #[allow(clippy::new_ret_no_self)]
    pub fn new(parts: Vec<OracleRef>) -> Result<OracleRef> {
        let label = parts
            .iter()
            .map(|p| p.label().to_string())
            .collect::<Vec<_>>()
            .join(" x ");
        Self::with_label(parts, &label)
    }

    pub fn with_label(parts: Vec<OracleRef>, label: &str) -> Result<OracleRef> {
        if parts.len() < 2 {
            return Err(Error::Unsupported("product of fewer than two sets".into()));
        }
        let space = ModelSpace::product(parts.iter().map(|p| p.space().clone()).collect())?;
        Ok(Arc::new(ProductOracle {
            space,
            parts,
            label: label.to_string(),
        }))
    }

    fn split(&self, x: &Vector) -> Vec<Vector> {
        self.space
            .factor_ranges()
            .into_iter()
            .map(|r| Vector(x.as_slice()[r].to_vec()))
            .collect()
    }
}

impl SetOracle for ProductOracle {
    fn space(&self) -> &ModelSpace {
        &self.space
    }

    fn label(&self) -> &str {
        &self.label
    }

    fn exactness(&self) -> Exactness {
        if self
            .parts
            .iter()
            .all(|p| p.exactness() == Exactness::Exact)
        {
            Exactness::Exact
        } else {
            Exactness::UpperBound
        }
    }

    fn distance(&self, n: usize, x: &Vector) -> Result<f64> {
        if n >= self.space.seminorm_count() {
            return Err(Error::SeminormIndex {
                index: n,
                count: self.space.seminorm_count(),
            });
        }
        let mut worst: f64 = 0.0;
        for (part, slice) in self.parts.iter().zip(self.split(x)) {
            if n < part.space().seminorm_count() {
                worst = worst.max(part.distance(n, &slice)?);
            }
        }
        Ok(worst)
    }

    fn project(&self, x: &Vector) -> Option<Vector> {
        let mut pieces = Vec::with_capacity(self.parts.len());
        for (part, slice) in self.parts.iter().zip(self.split(x)) {
            pieces.push(part.project(&slice)?);
        }
        Some(Vector::concat(&pieces.iter().collect::<Vec<_>>()))
    }

    fn contains(&self, x: &Vector, tol: f64) -> Result<bool> {
        for (part, slice) in self.parts.iter().zip(self.split(x)) {
            if !part.contains(&slice, tol)? {
                return Ok(false);
            }
        }
        Ok(true)
    }
}

/// Union of sets sharing one space: per-seminorm distance is the min over
/// members, membership is membership in some member.
pub struct UnionOracle {
    space: ModelSpace,
    parts: Vec<OracleRef>,
    label: String,
}

impl UnionOracle {
    #[allow(clippy::new_ret_no_self)]
    pub fn new(parts: Vec<OracleRef>) -> Result<OracleRef> {
        let label = parts
            .iter()
            .map(|p| p.label().to_string())
            .collect::<Vec<_>>()
            .join(" u ");
        Self::with_label(parts, &label)
    }

    pub fn with_label(parts: Vec<OracleRef>, label: &str) -> Result<OracleRef> {
        if parts.len() < 2 {
            return Err(Error::Unsupported("union of fewer than two sets".into()));
        }
        let space = parts[0].space().clone();
        for p in &parts {
            if p.space().dim() != space.dim() {
                return Err(Error::DimensionMismatch {
                    expected: space.dim(),
                    got: p.space().dim(),
                });
            }
        }
        Ok(Arc::new(UnionOracle {
            space,
            parts,
            label: label.to_string(),
        }))
    }
}

impl SetOracle for UnionOracle {
    fn space(&self) -> &ModelSpace {
        &self.space
    }

    fn label(&self) -> &str {
        &self.label
    }

    fn exactness(&self) -> Exactness {
        if self
            .parts
            .iter()
            .all(|p| p.exactness() == Exactness::Exact)
        {
            Exactness::Exact
        } else {
            Exactness::UpperBound
        }
    }

    fn distance(&self, n: usize, x: &Vector) -> Result<f64> {
        let mut best = f64::INFINITY;
        for part in &self.parts {
            best = best.min(part.distance(n, x)?);
        }
        Ok(best)
    }

    fn project(&self, x: &Vector) -> Option<Vector> {
        let mut best: Option<(f64, Vector)> = None;
        for part in &self.parts {
            let proj = part.project(x)?;
            let score = part.max_distance(x).ok()?;
            if best.as_ref().map(|(s, _)| score < *s).unwrap_or(true) {
                best = Some((score, proj));
            }
        }
        best.map(|(_, p)| p)
    }

    fn contains(&self, x: &Vector, tol: f64) -> Result<bool> {
        for part in &self.parts {
            if part.contains(x, tol)? {
                return Ok(true);
            }
        }
        Ok(false)
    }
}

/// The singleton {0}: distances are the seminorms of the point itself.
pub struct ZeroSetOracle {
    space: ModelSpace,
}

impl ZeroSetOracle {
    #[allow(clippy::new_ret_no_self)]
    pub fn new(space: ModelSpace) -> OracleRef {
        Arc::new(ZeroSetOracle { space })
    }
}

impl SetOracle for ZeroSetOracle {
    fn space(&self) -> &ModelSpace {
        &self.space
    }

    fn label(&self) -> &str {
        "zero"
    }

    fn exactness(&self) -> Exactness {
        Exactness::Exact
    }

    fn distance(&self, n: usize, x: &Vector) -> Result<f64> {
        self.space.seminorm(n, x)
    }

    fn project(&self, x: &Vector) -> Option<Vector> {
        Some(Vector::zeros(x.dim()))
    }
}

pub use crate::space::shift_grid_data;

/// The translated set { f(. - a) : f in S }. Queries shift their argument
/// back by `a` and delegate, so distances are equivariant: the translated
/// oracle's distance at f(. - a) equals the base oracle's at f.
pub struct TranslatedOracle {
    base: OracleRef,
    cells: isize,
    label: String,
}

pub fn translate_set(base: OracleRef, a: f64) -> Result<OracleRef> {
    let spec = base
        .space()
        .grid_spec()
        .ok_or_else(|| Error::Unsupported("translate_set on non-grid space".into()))?
        .clone();
    let raw = a / spec.step;
    if (raw - raw.round()).abs() > 1e-9 {
        return Err(Error::UnalignedShift {
            shift: a,
            step: spec.step,
        });
    }
    let cells = raw.round() as isize;
    let label = format!("translate:{}:{}", base.label(), a);
    Ok(Arc::new(TranslatedOracle { base, cells, label }))
}

impl TranslatedOracle {
    fn shift(&self, x: &Vector, cells: isize) -> Vector {
        let spec = self.base.space().grid_spec().expect("grid-backed");
        Vector(shift_grid_data(
            spec.n_points(),
            spec.codomain_dim,
            spec.periodic,
            x.as_slice(),
            cells,
        ))
    }
}

impl SetOracle for TranslatedOracle {
    fn space(&self) -> &ModelSpace {
        self.base.space()
    }

    fn label(&self) -> &str {
        &self.label
    }

    fn exactness(&self) -> Exactness {
        self.base.exactness()
    }

    fn distance(&self, n: usize, x: &Vector) -> Result<f64> {
        self.base.distance(n, &self.shift(x, -self.cells))
    }

    fn project(&self, x: &Vector) -> Option<Vector> {
        let proj = self.base.project(&self.shift(x, -self.cells))?;
        Some(self.shift(&proj, self.cells))
    }

    fn contains(&self, x: &Vector, tol: f64) -> Result<bool> {
        self.base.contains(&self.shift(x, -self.cells), tol)
    }
}

/// Doubled copy of a space, used for admissible-set oracles living on
/// (point, direction) pairs.
pub fn doubled_space(space: &ModelSpace) -> Result<ModelSpace> {
    crate::space::product_space(space.clone(), space.clone())
}

/// Guard used by library constructors that need a scalar non-periodic grid.
pub(crate) fn require_scalar_grid<'a>(
    space: &'a ModelSpace,
    what: &str,
) -> Result<&'a crate::space::GridSpec> {
    match space.kind() {
        SpaceKind::Grid(spec) if spec.codomain_dim == 1 => Ok(spec),
        _ => Err(Error::Unsupported(format!(
            "{what} needs a scalar grid space"
        ))),
    }
}
