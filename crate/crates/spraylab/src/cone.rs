//! Adjacent-cone, second-order cone, and admissibility decisions by
//! limit-quotient estimation.
//!
//! A direction f is adjacent-tangent to a set S at s when the per-seminorm
//! quotients d_n(s + t f, S) / t all vanish as t shrinks; second-order
//! membership of e (with associated direction f) asks the same of
//! d_n(s + t f + t^2 e / 2, S) / t^2. The quotients are sampled over a
//! geometric schedule and classified with two thresholds plus a
//! divergence detector, so a verdict is Member, NonMember, or an honest
//! Inconclusive. Verdicts are always relative to the configured seminorm
//! family of the oracle's space.

use crate::error::{Error, Result};
use crate::oracle::SetOracle;
use crate::space::Vector;
use crate::spray::Spray;

/// Geometric step schedule and decision thresholds for quotient traces.
#[derive(Clone, Copy, Debug)]
pub struct QuotientSchedule {
    pub t0: f64,
    pub ratio: f64,
    pub steps: usize,
    /// Final quotient at or below this classifies a trace as vanishing.
    pub member_threshold: f64,
    /// Traces pinned at or above this over their tail classify as bounded
    /// below.
    pub nonmember_threshold: f64,
    /// Distances at or below this are treated as exact zeros; keeps oracle
    /// round-off from masquerading as divergence once divided by t^2.
    pub distance_floor: f64,
    /// Tolerance for the base-point membership precondition.
    pub membership_tol: f64,
}

impl Default for QuotientSchedule {
    fn default() -> Self {
        QuotientSchedule {
            t0: 1e-1,
            ratio: 0.5,
            steps: 14,
            member_threshold: 1e-6,
            nonmember_threshold: 1e-3,
            distance_floor: 1e-11,
            membership_tol: 1e-9,
        }
    }
}

impl QuotientSchedule {
    /// Default thresholds with the stepping triple replaced.
    pub fn with_steps(t0: f64, ratio: f64, steps: usize) -> Self {
        QuotientSchedule {
            t0,
            ratio,
            steps,
            ..QuotientSchedule::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.t0.is_finite() && self.t0 > 0.0) {
            return Err(Error::Config(format!("schedule t0 {} must be positive", self.t0)));
        }
        if !(self.ratio > 0.0 && self.ratio < 1.0) {
            return Err(Error::Config(format!(
                "schedule ratio {} must lie in (0, 1)",
                self.ratio
            )));
        }
        if self.steps < 4 {
            return Err(Error::Config(format!(
                "schedule needs at least 4 steps, got {}",
                self.steps
            )));
        }
        if !(self.member_threshold > 0.0 && self.member_threshold < self.nonmember_threshold) {
            return Err(Error::Config(format!(
                "member threshold {} must be positive and below nonmember threshold {}",
                self.member_threshold, self.nonmember_threshold
            )));
        }
        Ok(())
    }

    pub fn times(&self) -> Vec<f64> {
        let mut t = self.t0;
        let mut out = Vec::with_capacity(self.steps);
        for _ in 0..self.steps {
            out.push(t);
            t *= self.ratio;
        }
        out
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Verdict {
    Member,
    NonMember,
    Inconclusive,
}

impl std::fmt::Display for Verdict {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Verdict::Member => write!(f, "Member"),
            Verdict::NonMember => write!(f, "NonMember"),
            Verdict::Inconclusive => write!(f, "Inconclusive"),
        }
    }
}

/// Quotient trace of one seminorm over the schedule.
#[derive(Clone, Debug)]
pub struct SeminormTrace {
    pub seminorm: usize,
    pub times: Vec<f64>,
    pub quotients: Vec<f64>,
    pub verdict: Verdict,
    /// Final quotient: the best available estimate of the limit.
    pub limit_estimate: f64,
}

#[derive(Clone, Debug)]
pub struct ConeVerdict {
    pub verdict: Verdict,
    pub traces: Vec<SeminormTrace>,
    /// Worst final quotient across seminorms.
    pub limit_estimate: f64,
}

impl ConeVerdict {
    pub fn trace(&self, seminorm: usize) -> &SeminormTrace {
        &self.traces[seminorm]
    }
}

/// A c/t trace exactly doubles under halving; demand slightly less than
/// doubling so rounding in the distances cannot hide the divergence.
const DIVERGENCE_FACTOR: f64 = 1.95;

fn classify(quotients: &[f64], sched: &QuotientSchedule) -> Verdict {
    let k = quotients.len();
    let tail = &quotients[k - 4..];
    if tail.iter().all(|&q| q >= sched.nonmember_threshold) {
        return Verdict::NonMember;
    }
    for w in quotients.windows(3) {
        if w[1] > DIVERGENCE_FACTOR * w[0]
            && w[2] > DIVERGENCE_FACTOR * w[1]
            && w[2] >= sched.nonmember_threshold
        {
            return Verdict::NonMember;
        }
    }
    if quotients[k - 1] <= sched.member_threshold {
        let settled = tail.windows(2).all(|w| w[1] <= 1.1 * w[0] + 1e-15);
        if settled {
            return Verdict::Member;
        }
    }
    Verdict::Inconclusive
}

fn run_quotient<C>(
    oracle: &dyn SetOracle,
    sched: &QuotientSchedule,
    power: i32,
    curve: C,
) -> Result<ConeVerdict>
where
    C: Fn(f64) -> Vector,
{
    let times = sched.times();
    let n_seminorms = oracle.space().seminorm_count();
    let mut quotients = vec![Vec::with_capacity(times.len()); n_seminorms];
    for &t in &times {
        let point = curve(t);
        let scale = t.powi(power);
        for (n, trace) in quotients.iter_mut().enumerate() {
            let mut d = oracle.distance(n, &point)?;
            if d <= sched.distance_floor {
                d = 0.0;
            }
            trace.push(d / scale);
        }
    }
    let mut traces = Vec::with_capacity(n_seminorms);
    let mut worst = Verdict::Member;
    let mut limit = 0.0_f64;
    for (n, q) in quotients.into_iter().enumerate() {
        let verdict = classify(&q, sched);
        let estimate = *q.last().expect("non-empty schedule");
        limit = limit.max(estimate);
        worst = match (worst, verdict) {
            (_, Verdict::NonMember) | (Verdict::NonMember, _) => Verdict::NonMember,
            (Verdict::Inconclusive, _) | (_, Verdict::Inconclusive) => Verdict::Inconclusive,
            (Verdict::Member, Verdict::Member) => Verdict::Member,
        };
        traces.push(SeminormTrace {
            seminorm: n,
            times: times.clone(),
            quotients: q,
            verdict,
            limit_estimate: estimate,
        });
    }
    Ok(ConeVerdict {
        verdict: worst,
        traces,
        limit_estimate: limit,
    })
}

fn require_in_set(oracle: &dyn SetOracle, x: &Vector, sched: &QuotientSchedule) -> Result<()> {
    if !oracle.contains(x, sched.membership_tol)? {
        return Err(Error::NotInSet {
            distance: oracle.max_distance(x)?,
            tol: sched.membership_tol,
        });
    }
    Ok(())
}

/// Adjacent-cone membership of direction f at base point s: quotients
/// d_n(s + t f, S) / t over the schedule. The base point must belong to the
/// set within the schedule's membership tolerance.
pub fn adjacent_member(
    oracle: &dyn SetOracle,
    s: &Vector,
    f: &Vector,
    sched: &QuotientSchedule,
) -> Result<ConeVerdict> {
    sched.validate()?;
    require_in_set(oracle, s, sched)?;
    run_quotient(oracle, sched, 1, |t| s.add_scaled(t, f))
}

/// Second-order cone membership of e with associated adjacent direction f:
/// quotients d_n(s + t f + t^2 e / 2, S) / t^2. The associated direction is
/// verified first: a demonstrated first-order NonMember is an error, not a
/// NonMember answer. (An Inconclusive first-order trace passes the gate:
/// directions tangent to curved sets have quotients that vanish like t and
/// legitimately sit between the thresholds at the schedule's end.)
pub fn second_order_member(
    oracle: &dyn SetOracle,
    s: &Vector,
    f: &Vector,
    e: &Vector,
    sched: &QuotientSchedule,
) -> Result<ConeVerdict> {
    sched.validate()?;
    require_in_set(oracle, s, sched)?;
    let first = run_quotient(oracle, sched, 1, |t| s.add_scaled(t, f))?;
    if first.verdict == Verdict::NonMember {
        return Err(Error::NotAdjacent {
            quotient: first.limit_estimate,
        });
    }
    run_quotient(oracle, sched, 2, |t| {
        s.add_scaled(t, f).add_scaled(0.5 * t * t, e)
    })
}

/// Admissibility of (x, v) for a spray: second-order membership of the
/// spray's acceleration with associated direction v, run directly on the
/// t^2 quotient. No adjacency gate here: a v that is not even
/// adjacent-tangent surfaces as a divergent quotient, which is exactly the
/// NonMember answer the admissible-set question wants.
pub fn admissible(
    spray: &Spray,
    oracle: &dyn SetOracle,
    x: &Vector,
    v: &Vector,
    sched: &QuotientSchedule,
) -> Result<ConeVerdict> {
    sched.validate()?;
    require_in_set(oracle, x, sched)?;
    let e = spray.accel(x, v);
    run_quotient(oracle, sched, 2, |t| {
        x.add_scaled(t, v).add_scaled(0.5 * t * t, &e)
    })
}

/// First-order tangency of the field direction (v, accel(x, v)) to a set A
/// in the doubled space, at base point (x, v): quotients
/// d_n((x, v) + t (v, accel(x, v)), A) / t.
///
/// Deliberately lenient about (x, v) ∈ A: for probes off the set the
/// distance stalls at a positive constant and the divided trace diverges,
/// so the verdict itself reports the failure.
pub fn first_order_tangent_on_bundle(
    a_oracle: &dyn SetOracle,
    spray: &Spray,
    x: &Vector,
    v: &Vector,
    sched: &QuotientSchedule,
) -> Result<ConeVerdict> {
    sched.validate()?;
    let point = Vector::concat(&[x, v]);
    let direction = Vector::concat(&[v, &spray.accel(x, v)]);
    run_quotient(a_oracle, sched, 1, |t| point.add_scaled(t, &direction))
}
