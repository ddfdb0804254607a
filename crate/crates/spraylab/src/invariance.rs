//! Invariance verdicts: does the geodesic flow of a spray keep a set's
//! points inside the set, and do the pointwise tangency criteria agree with
//! what the flow actually does?
//!
//! The central routine integrates sampled initial data across a time span,
//! measures per-capture distances to the set, and classifies the batch as
//! Invariant, Violated, or Inconclusive. Violation is decided by a growth
//! rule on the distance profile, never by a single noisy sample: the
//! distance must exceed a threshold and grow over three consecutive
//! captures moving away from t = 0. The companion checks reuse the same
//! machinery for total geodesy, convexity, tangency reformulation, flow and
//! orbit invariance, and stratifications.

use std::fmt;
use std::sync::Arc;

use crate::cone::{
    admissible, first_order_tangent_on_bundle, QuotientSchedule, Verdict,
};
use crate::error::{Error, Result};
use crate::oracle::{SetOracle, Stratification};
use crate::rng::SplitMix64;
use crate::sampler::{stratum_pairs, AdmissibleSampler, PairSampler};
use crate::space::Vector;
use crate::spray::{
    check_automorphism, geodesic_flow, Automorphism, Method, Spray, Trajectory,
};

/// Batch parameters for invariance verification.
#[derive(Clone, Copy, Debug)]
pub struct InvarianceConfig {
    pub trials: usize,
    pub t_span: (f64, f64),
    pub step: f64,
    /// Number of capture times across the span (endpoints included).
    pub captures: usize,
    /// Max distance an in-set trajectory may show before the batch stops
    /// being clean.
    pub in_set_tol: f64,
    /// Distance that, combined with growth over three consecutive captures,
    /// demonstrates a violation.
    pub violation_threshold: f64,
    pub method: Method,
    pub sched: QuotientSchedule,
}

impl Default for InvarianceConfig {
    fn default() -> Self {
        InvarianceConfig {
            trials: 20,
            t_span: (-2.0, 2.0),
            step: 1e-2,
            captures: 81,
            in_set_tol: 1e-7,
            violation_threshold: 1e-4,
            method: Method::Auto,
            sched: QuotientSchedule::default(),
        }
    }
}

impl InvarianceConfig {
    fn validate(&self) -> Result<()> {
        let (a, b) = self.t_span;
        if !(a <= 0.0 && 0.0 <= b && a < b) {
            return Err(Error::Config(format!(
                "time span [{a}, {b}] must contain 0"
            )));
        }
        if self.captures < 5 {
            return Err(Error::Config("need at least 5 capture times".into()));
        }
        if self.step <= 0.0 || self.step.is_nan() {
            return Err(Error::Config("step must be positive".into()));
        }
        Ok(())
    }

    fn capture_times(&self) -> Vec<f64> {
        let (a, b) = self.t_span;
        let n = self.captures;
        (0..n)
            .map(|k| a + (b - a) * k as f64 / (n - 1) as f64)
            .collect()
    }
}

/// Admissibility of a state revisited mid-flight.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum InteriorCheck {
    /// Base point still in the set; the cone verdict for (x(t), v(t)).
    Admissible(Verdict),
    /// Base point has left the set by the reported distance.
    OffSet { distance: f64 },
}

impl InteriorCheck {
    /// True unless the state demonstrably fails admissibility.
    pub fn acceptable(&self) -> bool {
        !matches!(
            self,
            InteriorCheck::Admissible(Verdict::NonMember) | InteriorCheck::OffSet { .. }
        )
    }
}

#[derive(Clone, Debug)]
pub struct TrialRecord {
    pub index: usize,
    /// Cone verdict for the initial data.
    pub admissibility: Verdict,
    pub max_distance: f64,
    pub max_distance_time: f64,
    /// Time at which integration stopped early, if it did.
    pub boundary: Option<f64>,
    pub violated: bool,
    /// First capture time at which the growth rule fired.
    pub violation_onset: Option<f64>,
    /// Admissibility revisited at three interior times.
    pub interior_checks: Vec<(f64, InteriorCheck)>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum OverallVerdict {
    Invariant,
    Violated,
    Inconclusive,
}

impl fmt::Display for OverallVerdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            OverallVerdict::Invariant => write!(f, "Invariant"),
            OverallVerdict::Violated => write!(f, "Violated"),
            OverallVerdict::Inconclusive => write!(f, "Inconclusive"),
        }
    }
}

#[derive(Clone, Debug)]
pub struct InvarianceReport {
    pub set_label: String,
    pub spray_label: String,
    pub sampler_label: String,
    pub overall: OverallVerdict,
    pub trials: Vec<TrialRecord>,
    /// Trial index and trajectory of the first violation, if any.
    pub counterexample: Option<(usize, Trajectory)>,
}

impl InvarianceReport {
    pub fn max_distance(&self) -> f64 {
        self.trials
            .iter()
            .map(|t| t.max_distance)
            .fold(0.0, f64::max)
    }
}

/// One integrated trial: capture states chained with geodesic_flow so a
/// domain edge or blow-up yields a usable partial profile.
struct TrialFlight {
    times: Vec<f64>,
    states: Vec<(Vector, Vector)>,
    boundary: Option<f64>,
}

fn fly(
    spray: &Spray,
    x0: &Vector,
    v0: &Vector,
    capture_times: &[f64],
    step: f64,
    method: Method,
) -> TrialFlight {
    let mut times = Vec::new();
    let mut states = Vec::new();
    let mut boundary = None;

    let forward: Vec<f64> = capture_times.iter().cloned().filter(|&t| t >= 0.0).collect();
    let mut backward: Vec<f64> = capture_times.iter().cloned().filter(|&t| t < 0.0).collect();
    backward.sort_by(|a, b| b.partial_cmp(a).unwrap());

    for leg in [backward, forward] {
        let mut prev_t = 0.0;
        let mut state = (x0.clone(), v0.clone());
        for t in leg {
            match geodesic_flow(spray, &state.0, &state.1, t - prev_t, step, method) {
                Ok(next) => {
                    state = next;
                    prev_t = t;
                    times.push(t);
                    states.push(state.clone());
                }
                Err(Error::BlowUp { t: t_local }) => {
                    boundary = Some(prev_t + t_local);
                    break;
                }
                Err(Error::DomainBoundary { t_limit }) => {
                    boundary = Some(prev_t + t_limit);
                    break;
                }
                Err(_) => {
                    boundary = Some(prev_t);
                    break;
                }
            }
        }
    }

    let mut order: Vec<usize> = (0..times.len()).collect();
    order.sort_by(|&i, &j| times[i].partial_cmp(&times[j]).unwrap());
    TrialFlight {
        times: order.iter().map(|&i| times[i]).collect(),
        states: order.iter().map(|&i| states[i].clone()).collect(),
        boundary,
    }
}

/// Growth-rule scan over one half of the profile, ordered away from t = 0.
/// Returns the time at which the rule first fires.
fn violation_onset(profile: &[(f64, f64)], threshold: f64) -> Option<f64> {
    let mut halves: Vec<Vec<(f64, f64)>> = vec![Vec::new(), Vec::new()];
    for &(t, d) in profile {
        if t >= 0.0 {
            halves[0].push((t, d));
        } else {
            halves[1].push((t, d));
        }
    }
    halves[0].sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
    halves[1].sort_by(|a, b| b.0.partial_cmp(&a.0).unwrap());
    for half in &halves {
        for w in half.windows(3) {
            let (d0, d1, d2) = (w[0].1, w[1].1, w[2].1);
            if d2 > threshold && d2 > d1 && d1 > d0 {
                return Some(w[2].0);
            }
        }
    }
    None
}

/// Integrate sampled initial data and classify the set as Invariant,
/// Violated, or Inconclusive for this spray.
///
/// Every trial records the cone admissibility of its initial data, the
/// worst distance along the trajectory, and admissibility re-checks at
/// three interior times. Invariant requires every admissible trial to stay
/// within in_set_tol with no early boundary; a single demonstrated growth
/// past violation_threshold decides Violated regardless of how the other
/// trials behave.
pub fn verify_invariance(
    spray: &Spray,
    oracle: &dyn SetOracle,
    sampler: &AdmissibleSampler,
    config: &InvarianceConfig,
    rng: &mut SplitMix64,
) -> Result<InvarianceReport> {
    config.validate()?;
    let capture_times = config.capture_times();
    let (a, b) = config.t_span;
    let interior_times: Vec<f64> = [0.25, 0.5, 0.75]
        .iter()
        .map(|q| a + q * (b - a))
        .collect();

    let mut trials = Vec::with_capacity(config.trials);
    let mut counterexample = None;

    for index in 0..config.trials {
        let (x0, v0) = sampler.sample(rng)?;
        let admissibility = match admissible(spray, oracle, &x0, &v0, &config.sched) {
            Ok(cv) => cv.verdict,
            Err(Error::NotInSet { .. }) => {
                return Err(Error::Config(format!(
                    "sampler '{}' produced a base point outside '{}'",
                    sampler.label(),
                    oracle.label()
                )))
            }
            Err(e) => return Err(e),
        };

        let flight = fly(spray, &x0, &v0, &capture_times, config.step, config.method);
        let mut profile = Vec::with_capacity(flight.times.len());
        for (t, (x, _)) in flight.times.iter().zip(&flight.states) {
            profile.push((*t, oracle.max_distance(x)?));
        }
        let (mut max_distance, mut max_distance_time) = (0.0, 0.0);
        for &(t, d) in &profile {
            if d > max_distance {
                max_distance = d;
                max_distance_time = t;
            }
        }
        let onset = violation_onset(&profile, config.violation_threshold);

        let mut interior_checks = Vec::new();
        for &tq in &interior_times {
            let Some(i) = nearest_index(&flight.times, tq) else {
                continue;
            };
            let (x, v) = &flight.states[i];
            let check = if oracle.contains(x, config.sched.membership_tol)? {
                InteriorCheck::Admissible(admissible(spray, oracle, x, v, &config.sched)?.verdict)
            } else {
                InteriorCheck::OffSet {
                    distance: oracle.max_distance(x)?,
                }
            };
            interior_checks.push((flight.times[i], check));
        }

        let violated = onset.is_some();
        if violated && counterexample.is_none() {
            let trajectory = Trajectory {
                times: flight.times.clone(),
                positions: flight.states.iter().map(|(x, _)| x.clone()).collect(),
                velocities: flight.states.iter().map(|(_, v)| v.clone()).collect(),
                method: config.method.resolve(spray)?,
                step: config.step,
            };
            counterexample = Some((index, trajectory));
        }

        trials.push(TrialRecord {
            index,
            admissibility,
            max_distance,
            max_distance_time,
            boundary: flight.boundary,
            violated,
            violation_onset: onset,
            interior_checks,
        });
    }

    let any_violated = trials.iter().any(|t| t.violated);
    let overall = if any_violated {
        OverallVerdict::Violated
    } else {
        let admissible_trials: Vec<&TrialRecord> = trials
            .iter()
            .filter(|t| t.admissibility == Verdict::Member)
            .collect();
        let clean = !admissible_trials.is_empty()
            && admissible_trials
                .iter()
                .all(|t| t.max_distance <= config.in_set_tol && t.boundary.is_none());
        let stray = trials
            .iter()
            .any(|t| t.admissibility != Verdict::Member && t.max_distance > config.in_set_tol);
        if clean && !stray {
            OverallVerdict::Invariant
        } else {
            OverallVerdict::Inconclusive
        }
    };

    Ok(InvarianceReport {
        set_label: oracle.label().to_string(),
        spray_label: spray.label().to_string(),
        sampler_label: sampler.label().to_string(),
        overall,
        trials,
        counterexample,
    })
}

fn nearest_index(times: &[f64], t: f64) -> Option<usize> {
    let mut best = None;
    let mut gap = f64::INFINITY;
    for (i, &s) in times.iter().enumerate() {
        if (s - t).abs() < gap {
            gap = (s - t).abs();
            best = Some(i);
        }
    }
    best
}

pub type TangentPredicate = Arc<dyn Fn(&Vector, &Vector) -> bool + Send + Sync>;

#[derive(Clone, Debug)]
pub struct TotallyGeodesicReport {
    pub set_label: String,
    pub spray_label: String,
    pub tangent_trials: usize,
    pub ambient_trials: usize,
    /// Tangent draws whose admissibility verdict was not Member.
    pub tangent_not_admissible: usize,
    /// Ambient draws that were admissible yet failed the tangency predicate.
    pub admissible_not_tangent: usize,
}

impl TotallyGeodesicReport {
    pub fn holds(&self) -> bool {
        self.tangent_not_admissible == 0 && self.admissible_not_tangent == 0
    }
}

/// Two-sided total-geodesy check: tangent data must be admissible, and
/// admissible data must be tangent. The tangency predicate encodes the
/// set's tangent fibers analytically.
#[allow(clippy::too_many_arguments)]
pub fn check_totally_geodesic(
    spray: &Spray,
    oracle: &dyn SetOracle,
    tangent_sampler: &AdmissibleSampler,
    ambient_sampler: &AdmissibleSampler,
    is_tangent: &TangentPredicate,
    trials: usize,
    sched: &QuotientSchedule,
    rng: &mut SplitMix64,
) -> Result<TotallyGeodesicReport> {
    let mut tangent_not_admissible = 0;
    let mut admissible_not_tangent = 0;
    for _ in 0..trials {
        let (x, v) = tangent_sampler.sample(rng)?;
        let cv = admissible(spray, oracle, &x, &v, sched)?;
        if cv.verdict != Verdict::Member {
            tangent_not_admissible += 1;
        }
    }
    for _ in 0..trials {
        let (x, v) = ambient_sampler.sample(rng)?;
        let cv = admissible(spray, oracle, &x, &v, sched)?;
        if cv.verdict == Verdict::Member && !is_tangent(&x, &v) {
            admissible_not_tangent += 1;
        }
    }
    Ok(TotallyGeodesicReport {
        set_label: oracle.label().to_string(),
        spray_label: spray.label().to_string(),
        tangent_trials: trials,
        ambient_trials: trials,
        tangent_not_admissible,
        admissible_not_tangent,
    })
}

#[derive(Clone, Debug)]
pub struct ConvexityReport {
    pub set_label: String,
    pub spray_label: String,
    pub pairs: usize,
    pub skipped: usize,
    pub interior_points: usize,
    pub max_distance: f64,
}

/// Geodesic convexity by sampling: connect point pairs of the set with the
/// spray's two-point solver and measure how far the interior of the
/// connecting geodesic strays from the set. Degenerate pairs are skipped.
pub fn check_geodesic_convexity(
    spray: &Spray,
    oracle: &dyn SetOracle,
    pairs: &PairSampler,
    trials: usize,
    interior_points: usize,
    rng: &mut SplitMix64,
) -> Result<ConvexityReport> {
    if !spray.has_two_point() {
        return Err(Error::Unsupported(format!(
            "spray '{}' has no two-point solver",
            spray.label()
        )));
    }
    let mut skipped = 0;
    let mut max_distance: f64 = 0.0;
    let mut sampled = 0;
    while sampled < trials {
        let (p, q) = pairs.sample(rng);
        sampled += 1;
        if p.sub(&q).sup_norm() < 1e-14 {
            skipped += 1;
            continue;
        }
        for j in 1..=interior_points {
            let s = j as f64 / (interior_points + 1) as f64;
            let point = spray.two_point(&p, &q, s).expect("checked two-point solver");
            max_distance = max_distance.max(oracle.max_distance(&point)?);
        }
    }
    Ok(ConvexityReport {
        set_label: oracle.label().to_string(),
        spray_label: spray.label().to_string(),
        pairs: trials,
        skipped,
        interior_points,
        max_distance,
    })
}

#[derive(Clone, Debug)]
pub struct TangencyAgreement {
    pub set_label: String,
    pub spray_label: String,
    pub samples: usize,
    pub members: usize,
    pub non_members: usize,
    pub inconclusive: usize,
    pub invariance_overall: OverallVerdict,
    pub agree: bool,
}

/// Compare pointwise first-order tangency verdicts on the bundle surrogate
/// A against an already-computed invariance verdict: an invariant set must
/// show tangency everywhere sampled, a violated one must expose at least
/// one non-tangent state.
pub fn check_tangency_reformulation(
    spray: &Spray,
    bundle_oracle: &dyn SetOracle,
    sampler: &AdmissibleSampler,
    trials: usize,
    sched: &QuotientSchedule,
    invariance_overall: OverallVerdict,
    rng: &mut SplitMix64,
) -> Result<TangencyAgreement> {
    let (mut members, mut non_members, mut inconclusive) = (0, 0, 0);
    for _ in 0..trials {
        let (x, v) = sampler.sample(rng)?;
        let cv = first_order_tangent_on_bundle(bundle_oracle, spray, &x, &v, sched)?;
        match cv.verdict {
            Verdict::Member => members += 1,
            Verdict::NonMember => non_members += 1,
            Verdict::Inconclusive => inconclusive += 1,
        }
    }
    let agree = match invariance_overall {
        OverallVerdict::Invariant => non_members == 0 && inconclusive == 0,
        OverallVerdict::Violated => non_members > 0,
        OverallVerdict::Inconclusive => true,
    };
    Ok(TangencyAgreement {
        set_label: bundle_oracle.label().to_string(),
        spray_label: spray.label().to_string(),
        samples: trials,
        members,
        non_members,
        inconclusive,
        invariance_overall,
        agree,
    })
}

#[derive(Clone, Debug)]
pub struct FlowCheckRecord {
    pub trial: usize,
    pub time: f64,
    pub verdict: Verdict,
}

#[derive(Clone, Debug)]
pub struct FlowReport {
    pub set_label: String,
    pub spray_label: String,
    pub records: Vec<FlowCheckRecord>,
    pub pass: bool,
}

/// Push sampled data through the geodesic flow for each listed time and
/// demand that the flowed state is again admissible.
#[allow(clippy::too_many_arguments)]
pub fn check_flow_invariance(
    spray: &Spray,
    oracle: &dyn SetOracle,
    sampler: &AdmissibleSampler,
    times: &[f64],
    trials: usize,
    step: f64,
    sched: &QuotientSchedule,
    rng: &mut SplitMix64,
) -> Result<FlowReport> {
    let mut records = Vec::with_capacity(trials * times.len());
    let mut pass = true;
    for trial in 0..trials {
        let (x0, v0) = sampler.sample(rng)?;
        for &t in times {
            let (x, v) = geodesic_flow(spray, &x0, &v0, t, step, Method::Auto)?;
            let verdict = admissible(spray, oracle, &x, &v, sched)?.verdict;
            pass &= verdict == Verdict::Member;
            records.push(FlowCheckRecord {
                trial,
                time: t,
                verdict,
            });
        }
    }
    Ok(FlowReport {
        set_label: oracle.label().to_string(),
        spray_label: spray.label().to_string(),
        records,
        pass,
    })
}

#[derive(Debug)]
pub struct OrbitReport {
    pub automorphism_samples: usize,
    pub automorphism_discrepancy: f64,
    /// Invariance of the transformed set under the same spray, checked with
    /// initial data pushed through the map.
    pub transformed: InvarianceReport,
    pub pass: bool,
}

/// Orbit invariance: the map must commute with the spray (pushforward
/// discrepancy ~ 0) and the transformed set must be invariant when seeded
/// with pushed-forward data. The base sampler must be analytic; its draws
/// are mapped through phi.
pub fn check_orbit_invariance(
    spray: &Spray,
    phi: &Automorphism,
    transformed_oracle: &dyn SetOracle,
    base_sampler: AdmissibleSampler,
    config: &InvarianceConfig,
    automorphism_samples: usize,
    rng: &mut SplitMix64,
) -> Result<OrbitReport> {
    let mut pairs = Vec::with_capacity(automorphism_samples);
    for _ in 0..automorphism_samples {
        pairs.push(base_sampler.sample(rng)?);
    }
    let auto_report = check_automorphism(spray, phi, &pairs);

    let phi_map = phi.clone();
    let label = format!("{}>{}", phi.label(), base_sampler.label());
    let pushed = AdmissibleSampler::analytic(
        &label,
        Arc::new(move |rng| {
            let (x, v) = base_sampler
                .sample(rng)
                .expect("analytic base sampler cannot fail");
            (phi_map.forward(&x), phi_map.d_forward(&x, &v))
        }),
    );
    let transformed = verify_invariance(spray, transformed_oracle, &pushed, config, rng)?;
    let pass = auto_report.max_discrepancy <= 1e-10
        && transformed.overall == OverallVerdict::Invariant;
    Ok(OrbitReport {
        automorphism_samples,
        automorphism_discrepancy: auto_report.max_discrepancy,
        transformed,
        pass,
    })
}

#[derive(Clone, Debug)]
pub struct StratumTrial {
    pub stratum: usize,
    pub closure_max_distance: f64,
    /// Sign changes of the stratum's pivot coordinate along the trajectory.
    pub exit_events: usize,
}

#[derive(Clone, Debug)]
pub struct StratificationReport {
    pub spray_label: String,
    pub trials: Vec<StratumTrial>,
    /// Every trajectory stayed in the closure of its starting stratum.
    pub closure_invariant: bool,
    pub max_exit_events: usize,
    /// Points of lower strata belong to the closures of higher ones.
    pub frontier_ok: bool,
}

/// Flow data sampled inside each stratum and verify (a) trajectories never
/// leave the stratum closure, (b) the pivot coordinate changes sign at most
/// finitely often (for affine flows: at most once), and (c) the frontier
/// ordering of the strata closures.
pub fn check_stratification(
    strata: &Stratification,
    spray: &Spray,
    config: &InvarianceConfig,
    trials_per_stratum: usize,
    rng: &mut SplitMix64,
) -> Result<StratificationReport> {
    config.validate()?;
    let capture_times = config.capture_times();
    let mut trials = Vec::new();
    let mut closure_invariant = true;
    let mut max_exit_events = 0;

    for stratum in &strata.strata {
        let k = stratum.id;
        let sampler = stratum_pairs(strata.space(), k)?;
        for _ in 0..trials_per_stratum {
            let (x0, v0) = sampler.sample(rng)?;
            let flight = fly(spray, &x0, &v0, &capture_times, config.step, config.method);
            let mut worst: f64 = 0.0;
            let mut exits = 0;
            let mut last_sign = 0i8;
            for (x, _) in &flight.states {
                worst = worst.max(stratum.closure.max_distance(x)?);
                let c = x[k - 1];
                let sign = if c > 0.0 {
                    1
                } else if c < 0.0 {
                    -1
                } else {
                    0
                };
                if sign != 0 {
                    if last_sign != 0 && sign != last_sign {
                        exits += 1;
                    }
                    last_sign = sign;
                }
            }
            closure_invariant &= worst == 0.0 || worst <= config.in_set_tol;
            max_exit_events = max_exit_events.max(exits);
            trials.push(StratumTrial {
                stratum: k,
                closure_max_distance: worst,
                exit_events: exits,
            });
        }
    }

    // Frontier: sampled points of stratum j must lie in every closure i >= j.
    let mut frontier_ok = true;
    for stratum in &strata.strata {
        let sampler = stratum_pairs(strata.space(), stratum.id)?;
        for _ in 0..trials_per_stratum {
            let (x, _) = sampler.sample(rng)?;
            for higher in strata.strata.iter().filter(|s| s.id >= stratum.id) {
                frontier_ok &= higher.closure.max_distance(&x)? == 0.0;
            }
        }
    }

    Ok(StratificationReport {
        spray_label: spray.label().to_string(),
        trials,
        closure_invariant,
        max_exit_events,
        frontier_ok,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle::{
        circle_loop_tangent_bundle, constant_functions, finite_sequence_strata, fourier_subspace,
        great_circle_constant_loops, half_support_union, parabola_graph, translate_set,
    };
    use crate::sampler::{
        circle_loop_ambient, circle_loop_tangent_pairs, constant_ambient, constant_pairs,
        constant_point_pairs, fourier_pairs, half_support_pairs, parabola_tangent_pairs,
        parabola_zero_section, probe_pairs,
    };
    use crate::space::{product_space, ModelSpace};
    use crate::spray::{bump_perturbed_spray, flat_spray, sphere_pointwise_spray};

    fn quick_config() -> InvarianceConfig {
        InvarianceConfig {
            trials: 5,
            captures: 41,
            ..InvarianceConfig::default()
        }
    }

    #[test]
    fn flat_spray_keeps_half_support_invariant() {
        let space = ModelSpace::default_grid();
        let set = half_support_union(&space).unwrap();
        let sampler = half_support_pairs(&space).unwrap();
        let mut rng = SplitMix64::new(211);
        let report = verify_invariance(
            &flat_spray(),
            set.as_ref(),
            &sampler,
            &quick_config(),
            &mut rng,
        )
        .unwrap();
        assert_eq!(report.overall, OverallVerdict::Invariant);
        assert!(report.max_distance() <= 1e-9);
        for trial in &report.trials {
            assert_eq!(trial.admissibility, Verdict::Member);
            assert!(trial.interior_checks.iter().all(|(_, c)| c.acceptable()));
        }
    }

    #[test]
    fn perturbed_spray_violates_half_support() {
        let space = ModelSpace::default_grid();
        let set = half_support_union(&space).unwrap();
        let sampler = probe_pairs(&space, 0.25).unwrap();
        let spray = bump_perturbed_spray(&space, 0.5).unwrap();
        let mut rng = SplitMix64::new(223);
        let config = InvarianceConfig {
            trials: 3,
            t_span: (0.0, 1.0),
            captures: 41,
            ..InvarianceConfig::default()
        };
        let report =
            verify_invariance(&spray, set.as_ref(), &sampler, &config, &mut rng).unwrap();
        assert_eq!(report.overall, OverallVerdict::Violated);
        let (_, trajectory) = report.counterexample.as_ref().unwrap();
        assert!(trajectory.len() > 10);
        for trial in &report.trials {
            assert_eq!(trial.admissibility, Verdict::NonMember);
            assert!(trial.violated);
            // After the violation onset the state is demonstrably off-set.
            let onset = trial.violation_onset.unwrap();
            for (t, check) in &trial.interior_checks {
                if *t >= onset {
                    assert!(!check.acceptable());
                }
            }
        }
    }

    #[test]
    fn constants_are_totally_geodesic_for_flat() {
        let space = ModelSpace::default_grid();
        let set = constant_functions(&space).unwrap();
        let tangent = constant_pairs(&space).unwrap();
        let ambient = constant_ambient(&space, 0.05).unwrap();
        let set_for_predicate = set.clone();
        let is_tangent: TangentPredicate = Arc::new(move |_, v| {
            set_for_predicate.max_distance(v).map(|d| d <= 1e-9).unwrap_or(false)
        });
        let mut rng = SplitMix64::new(227);
        let report = check_totally_geodesic(
            &flat_spray(),
            set.as_ref(),
            &tangent,
            &ambient,
            &is_tangent,
            10,
            &QuotientSchedule::default(),
            &mut rng,
        )
        .unwrap();
        assert!(report.holds());
    }

    #[test]
    fn parabola_is_not_totally_geodesic_for_flat() {
        let grid = ModelSpace::default_grid();
        let space = product_space(grid.clone(), grid).unwrap();
        let set = parabola_graph(&space).unwrap();
        let tangent = parabola_tangent_pairs(&space).unwrap();
        let ambient = parabola_zero_section(&space).unwrap();
        let is_tangent: TangentPredicate = Arc::new(|_, _| true);
        let mut rng = SplitMix64::new(229);
        let report = check_totally_geodesic(
            &flat_spray(),
            set.as_ref(),
            &tangent,
            &ambient,
            &is_tangent,
            8,
            &QuotientSchedule::default(),
            &mut rng,
        )
        .unwrap();
        assert!(!report.holds());
        assert!(report.tangent_not_admissible > 0);
        assert_eq!(report.admissible_not_tangent, 0);
    }

    #[test]
    fn constants_are_geodesically_convex_for_flat() {
        let space = ModelSpace::default_grid();
        let set = constant_functions(&space).unwrap();
        let pairs = constant_point_pairs(&space).unwrap();
        let mut rng = SplitMix64::new(233);
        let report = check_geodesic_convexity(
            &flat_spray(),
            set.as_ref(),
            &pairs,
            20,
            7,
            &mut rng,
        )
        .unwrap();
        assert_eq!(report.max_distance, 0.0);
        assert_eq!(report.skipped, 0);
    }

    #[test]
    fn convexity_requires_a_two_point_solver() {
        let space = ModelSpace::default_grid();
        let set = constant_functions(&space).unwrap();
        let pairs = constant_point_pairs(&space).unwrap();
        let bare = Spray::new("bare", Arc::new(|_x, v: &Vector| Vector::zeros(v.dim())));
        let mut rng = SplitMix64::new(239);
        assert!(matches!(
            check_geodesic_convexity(&bare, set.as_ref(), &pairs, 5, 3, &mut rng),
            Err(Error::Unsupported(_))
        ));
    }

    #[test]
    fn sphere_keeps_circle_loops_invariant_and_totally_geodesic() {
        let space = ModelSpace::circle_grid(64, 3).unwrap();
        let normal = [0.0, 0.0, 1.0];
        let set = great_circle_constant_loops(&space, normal).unwrap();
        let spray = sphere_pointwise_spray(&space).unwrap();
        let tangent = circle_loop_tangent_pairs(&space, normal).unwrap();
        let ambient = circle_loop_ambient(&space, normal).unwrap();
        let mut rng = SplitMix64::new(241);

        let report = verify_invariance(
            &spray,
            set.as_ref(),
            &tangent,
            &quick_config(),
            &mut rng,
        )
        .unwrap();
        assert_eq!(report.overall, OverallVerdict::Invariant);

        let toward = crate::sampler::plane_basis(normal);
        let is_tangent: TangentPredicate = Arc::new(move |x, v| {
            // Constant loop along the circle tangent at the loop's point:
            // orthogonal to both the normal and the base direction.
            let n = toward.0;
            let dim = x.dim();
            let pts = dim / 3;
            let mut mean_v = [0.0; 3];
            let mut mean_x = [0.0; 3];
            for i in 0..pts {
                for c in 0..3 {
                    mean_v[c] += v[i * 3 + c] / pts as f64;
                    mean_x[c] += x[i * 3 + c] / pts as f64;
                }
            }
            let vn = mean_v[0] * n[0] + mean_v[1] * n[1] + mean_v[2] * n[2];
            let vx = mean_v[0] * mean_x[0] + mean_v[1] * mean_x[1] + mean_v[2] * mean_x[2];
            let mut constant = true;
            for i in 0..pts {
                for c in 0..3 {
                    constant &= (v[i * 3 + c] - mean_v[c]).abs() <= 1e-9;
                }
            }
            constant && vn.abs() <= 1e-9 && vx.abs() <= 1e-9
        });
        let tg = check_totally_geodesic(
            &spray,
            set.as_ref(),
            &tangent,
            &ambient,
            &is_tangent,
            8,
            &QuotientSchedule::default(),
            &mut rng,
        )
        .unwrap();
        assert!(tg.holds());
    }

    #[test]
    fn tangency_agreement_on_invariant_and_violated_cases() {
        let space = ModelSpace::default_grid();
        let set_bundle = {
            use crate::oracle::{ProductOracle, UnionOracle};
            use crate::oracle::half_support_side;
            let plus = half_support_side(&space, true).unwrap();
            let minus = half_support_side(&space, false).unwrap();
            UnionOracle::with_label(
                vec![
                    ProductOracle::new(vec![plus.clone(), plus]).unwrap(),
                    ProductOracle::new(vec![minus.clone(), minus]).unwrap(),
                ],
                "half-support-bundle",
            )
            .unwrap()
        };
        let sched = QuotientSchedule::default();
        let mut rng = SplitMix64::new(251);

        let sampler = half_support_pairs(&space).unwrap();
        let agree = check_tangency_reformulation(
            &flat_spray(),
            set_bundle.as_ref(),
            &sampler,
            10,
            &sched,
            OverallVerdict::Invariant,
            &mut rng,
        )
        .unwrap();
        assert!(agree.agree, "members {} of {}", agree.members, agree.samples);

        let probe = probe_pairs(&space, 0.25).unwrap();
        let spray = bump_perturbed_spray(&space, 0.5).unwrap();
        let disagree_case = check_tangency_reformulation(
            &spray,
            set_bundle.as_ref(),
            &probe,
            5,
            &sched,
            OverallVerdict::Violated,
            &mut rng,
        )
        .unwrap();
        assert!(disagree_case.agree);
        assert!(disagree_case.non_members > 0);
    }

    #[test]
    fn sphere_tangency_agreement_via_bundle_surrogate() {
        let space = ModelSpace::circle_grid(64, 3).unwrap();
        let normal = [0.0, 0.0, 1.0];
        let bundle = circle_loop_tangent_bundle(&space, normal).unwrap();
        let spray = sphere_pointwise_spray(&space).unwrap();
        let tangent = circle_loop_tangent_pairs(&space, normal).unwrap();
        let mut rng = SplitMix64::new(257);
        // The tangency quotient on a curved set decays linearly in t, so the
        // default 14-step schedule stalls between the thresholds. Probing
        // deeper lets the quadratic base distance drop below the floor.
        let sched = QuotientSchedule::with_steps(0.1, 0.5, 24);
        let agree = check_tangency_reformulation(
            &spray,
            bundle.as_ref(),
            &tangent,
            8,
            &sched,
            OverallVerdict::Invariant,
            &mut rng,
        )
        .unwrap();
        assert!(agree.agree, "members {} of {}", agree.members, agree.samples);
    }

    #[test]
    fn flow_invariance_of_fourier_span_under_flat() {
        let space = ModelSpace::circle_grid(64, 1).unwrap();
        let set = fourier_subspace(&space, 3).unwrap();
        let sampler = fourier_pairs(&space, 3).unwrap();
        let mut rng = SplitMix64::new(263);
        let report = check_flow_invariance(
            &flat_spray(),
            set.as_ref(),
            &sampler,
            &[-1.0, -0.5, 0.5, 1.0],
            6,
            1e-2,
            &QuotientSchedule::default(),
            &mut rng,
        )
        .unwrap();
        assert!(report.pass);
        assert_eq!(report.records.len(), 24);
    }

    #[test]
    fn orbit_invariance_under_grid_translation() {
        let space = ModelSpace::default_grid();
        let set = half_support_union(&space).unwrap();
        let shifted = translate_set(set, 0.5).unwrap();
        let phi = Automorphism::grid_translation(&space, 0.5).unwrap();
        let sampler = half_support_pairs(&space).unwrap();
        let mut rng = SplitMix64::new(269);
        let report = check_orbit_invariance(
            &flat_spray(),
            &phi,
            shifted.as_ref(),
            sampler,
            &quick_config(),
            10,
            &mut rng,
        )
        .unwrap();
        assert!(report.pass);
        assert_eq!(report.automorphism_discrepancy, 0.0);
    }

    #[test]
    fn orbit_invariance_fails_for_the_perturbed_spray() {
        // The bump functional is anchored at 0, so translation does not
        // commute with the perturbed spray and the discrepancy is visible.
        let space = ModelSpace::default_grid();
        let set = half_support_union(&space).unwrap();
        let shifted = translate_set(set, 0.5).unwrap();
        let phi = Automorphism::grid_translation(&space, 0.5).unwrap();
        let sampler = probe_pairs(&space, 0.25).unwrap();
        let spray = bump_perturbed_spray(&space, 0.5).unwrap();
        let mut rng = SplitMix64::new(271);
        let report = check_orbit_invariance(
            &spray,
            &phi,
            shifted.as_ref(),
            sampler,
            &InvarianceConfig {
                trials: 2,
                captures: 21,
                t_span: (0.0, 1.0),
                ..InvarianceConfig::default()
            },
            10,
            &mut rng,
        )
        .unwrap();
        assert!(!report.pass);
        assert!(report.automorphism_discrepancy > 1e-3);
    }

    #[test]
    fn strata_closures_trap_affine_flow() {
        let space = ModelSpace::sequences(16).unwrap();
        let strata = finite_sequence_strata(&space).unwrap();
        let mut rng = SplitMix64::new(277);
        let report = check_stratification(
            &strata,
            &flat_spray(),
            &InvarianceConfig {
                trials: 1,
                captures: 41,
                ..InvarianceConfig::default()
            },
            3,
            &mut rng,
        )
        .unwrap();
        assert!(report.closure_invariant);
        assert!(report.frontier_ok);
        assert!(report.max_exit_events <= 1);
        for trial in &report.trials {
            assert_eq!(trial.closure_max_distance, 0.0);
        }
    }

    #[test]
    fn invariance_config_rejects_bad_spans() {
        let config = InvarianceConfig {
            t_span: (0.5, 1.0),
            ..InvarianceConfig::default()
        };
        assert!(config.validate().is_err());
    }
}
