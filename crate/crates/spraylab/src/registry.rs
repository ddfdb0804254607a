//! Named, reproducible experiments. Each entry wires a model space, a set
//! oracle, a spray, and samplers together, runs a fixed list of checks, and
//! compares every outcome against its expected value. A run is summarized
//! as a structured-text document whose body is byte-identical across runs
//! with the same seed.

use std::f64::consts::PI;
use std::fs;
use std::io::BufWriter;
use std::path::PathBuf;
use std::sync::Arc;
use std::time::Instant;

use crate::cone::{adjacent_member, admissible, second_order_member, QuotientSchedule, Verdict};
use crate::error::{Error, Result};
use crate::invariance::{
    check_flow_invariance, check_geodesic_convexity, check_orbit_invariance,
    check_stratification, check_tangency_reformulation, check_totally_geodesic,
    verify_invariance, InvarianceConfig, OverallVerdict, TangentPredicate,
};
use crate::oracle::{
    constant_functions, finite_sequence_strata, fourier_subspace, great_circle_constant_loops,
    half_support_union, nonneg_orthant, parabola_graph, translate_set, ProductOracle,
};
use crate::report::{fmt_f64, Document, Section};
use crate::rng::SplitMix64;
use crate::sampler::{
    circle_loop_ambient, circle_loop_tangent_pairs, constant_ambient, constant_pairs,
    constant_point_pairs, fourier_pairs, half_support_pairs, parabola_tangent_pairs,
    parabola_zero_section, plane_basis, probe_pairs, two_sided_probe, PairSampler,
};
use crate::space::{product_space, ModelSpace, Vector};
use crate::spray::{
    bump_perturbed_spray, check_automorphism, flat_spray, geodesic_flow, integrate_with_captures,
    sphere_pointwise_spray, Automorphism, Method, Trajectory,
};

pub const EXAMPLE_IDS: [&str; 9] = [
    "adjacent-cone",
    "ex1-flat",
    "ex1-perturbed",
    "ex2-parabola",
    "ex-crit-constants",
    "ex9-translate",
    "ex-nonneg-fourier",
    "ex-hi-sphere",
    "ex-stra",
];

#[derive(Clone, Debug)]
pub struct RunOptions {
    pub seed: u64,
    /// Where to write the report document and CSV artifacts; nothing is
    /// written when absent.
    pub out_dir: Option<PathBuf>,
    pub schedule: QuotientSchedule,
    /// Override for the invariance growth threshold; a fault-injection hook
    /// for testing the registry itself.
    pub violation_threshold: Option<f64>,
}

impl Default for RunOptions {
    fn default() -> Self {
        RunOptions {
            seed: 17,
            out_dir: None,
            schedule: QuotientSchedule::default(),
            violation_threshold: None,
        }
    }
}

#[derive(Clone, Debug)]
pub struct CheckOutcome {
    pub name: String,
    pub got: String,
    pub expected: String,
    pub pass: bool,
}

#[derive(Clone, Debug)]
pub struct RunReport {
    pub id: &'static str,
    pub checks: Vec<CheckOutcome>,
    pub document: Document,
    pub artifacts: Vec<PathBuf>,
}

impl RunReport {
    pub fn pass(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }

    /// One table row per check: example, check name, got, expected, status.
    pub fn table_rows(&self) -> Vec<String> {
        self.checks
            .iter()
            .map(|c| {
                format!(
                    "{:<18} {:<34} {:<26} {:<26} {}",
                    self.id,
                    c.name,
                    c.got,
                    c.expected,
                    if c.pass { "PASS" } else { "FAIL" }
                )
            })
            .collect()
    }
}

struct Runner {
    id: &'static str,
    opts: RunOptions,
    body: Section,
    checks: Vec<CheckOutcome>,
    artifacts: Vec<PathBuf>,
    started: Instant,
}

impl Runner {
    fn new(id: &'static str, opts: &RunOptions) -> Runner {
        let mut body = Section::new();
        body.put("example", id);
        body.put("seed", opts.seed);
        let sched = body.child("schedule");
        sched.put_f64("t0", opts.schedule.t0);
        sched.put_f64("ratio", opts.schedule.ratio);
        sched.put("steps", opts.schedule.steps);
        Runner {
            id,
            opts: opts.clone(),
            body,
            checks: Vec::new(),
            artifacts: Vec::new(),
            started: Instant::now(),
        }
    }

    fn rng(&self) -> SplitMix64 {
        SplitMix64::new(self.opts.seed)
    }

    /// Invariance defaults with the run's schedule and threshold override
    /// applied.
    fn invariance_config(&self) -> InvarianceConfig {
        let mut config = InvarianceConfig {
            sched: self.opts.schedule,
            ..InvarianceConfig::default()
        };
        if let Some(v) = self.opts.violation_threshold {
            config.violation_threshold = v;
        }
        config
    }

    fn record_check(&mut self, name: &str, got: String, expected: String, pass: bool) {
        self.checks.push(CheckOutcome {
            name: name.to_string(),
            got,
            expected,
            pass,
        });
    }

    fn check_eq(&mut self, name: &str, got: impl std::fmt::Display, expected: impl std::fmt::Display) {
        let got = got.to_string();
        let expected = expected.to_string();
        let pass = got == expected;
        self.record_check(name, got, expected, pass);
    }

    fn check_at_most(&mut self, name: &str, value: f64, bound: f64) {
        self.record_check(
            name,
            fmt_f64(value),
            format!("<= {}", fmt_f64(bound)),
            value <= bound,
        );
    }

    fn check_above(&mut self, name: &str, value: f64, bound: f64) {
        self.record_check(
            name,
            fmt_f64(value),
            format!("> {}", fmt_f64(bound)),
            value > bound,
        );
    }

    fn check_true(&mut self, name: &str, pass: bool) {
        self.record_check(name, pass.to_string(), "true".to_string(), pass);
    }

    fn save_trajectory(&mut self, name: &str, traj: &Trajectory) -> Result<()> {
        let Some(dir) = self.opts.out_dir.clone() else {
            return Ok(());
        };
        fs::create_dir_all(&dir)?;
        let path = dir.join(name);
        let mut out = BufWriter::new(fs::File::create(&path)?);
        traj.write_csv(&mut out)?;
        self.artifacts.push(path);
        Ok(())
    }

    fn finish(mut self) -> Result<RunReport> {
        for check in &self.checks {
            let rec = self.body.record("checks");
            rec.put("name", &check.name);
            rec.put("got", &check.got);
            rec.put("expected", &check.expected);
            rec.put("pass", check.pass);
        }
        for path in &self.artifacts {
            self.body.record("artifacts").put("path", path.display());
        }
        let document = Document::new(self.body, self.started.elapsed().as_millis());
        if let Some(dir) = &self.opts.out_dir {
            document.write_to(dir, &format!("{}.txt", self.id))?;
        }
        Ok(RunReport {
            id: self.id,
            checks: self.checks,
            document,
            artifacts: self.artifacts,
        })
    }
}

pub fn run_example(id: &str, opts: &RunOptions) -> Result<RunReport> {
    match id {
        "adjacent-cone" => adjacent_cone(opts),
        "ex1-flat" => ex1_flat(opts),
        "ex1-perturbed" => ex1_perturbed(opts),
        "ex2-parabola" => ex2_parabola(opts),
        "ex-crit-constants" => ex_crit_constants(opts),
        "ex9-translate" => ex9_translate(opts),
        "ex-nonneg-fourier" => ex_nonneg_fourier(opts),
        "ex-hi-sphere" => ex_hi_sphere(opts),
        "ex-stra" => ex_stra(opts),
        other => Err(Error::UnknownId(other.to_string())),
    }
}

/// Run the listed examples in order. The boolean is true iff every check of
/// every report passed; an empty list passes vacuously.
pub fn run_ids(ids: &[&str], opts: &RunOptions) -> Result<(Vec<RunReport>, bool)> {
    let mut reports = Vec::with_capacity(ids.len());
    let mut all_pass = true;
    for id in ids {
        let report = run_example(id, opts)?;
        all_pass &= report.pass();
        reports.push(report);
    }
    Ok((reports, all_pass))
}

pub fn run_all(opts: &RunOptions) -> Result<(Vec<RunReport>, bool)> {
    run_ids(&EXAMPLE_IDS, opts)
}

/// Direction sampler for the orthant example. Coordinates are uniform in
/// [-1, 1]; negative draws inside (-2e-3, 0) are redrawn because such a
/// coordinate's limiting quotient sits between the two classification
/// thresholds and the verdict would be legitimately Inconclusive rather
/// than matching the closed form. Even-indexed trials flip every
/// coordinate nonnegative so both verdict classes are exercised.
fn orthant_direction(dim: usize, nonneg: bool, rng: &mut SplitMix64) -> Vector {
    loop {
        let mut f = Vector::zeros(dim);
        let mut any_negative = false;
        for i in 0..dim {
            let mut c = rng.symmetric();
            while c < 0.0 && c > -2e-3 {
                c = rng.symmetric();
            }
            if nonneg {
                c = c.abs();
            }
            any_negative |= c < 0.0;
            f[i] = c;
        }
        if nonneg || any_negative {
            return f;
        }
    }
}

/// Membership in the nonnegative orthant has a closed-form adjacent cone:
/// at the origin a direction is adjacent exactly when every coordinate is
/// nonnegative, and each coordinate's limiting quotient is max(0, -f_n).
fn adjacent_cone(opts: &RunOptions) -> Result<RunReport> {
    let mut r = Runner::new("adjacent-cone", opts);
    let space = ModelSpace::sequences(16)?;
    let oracle = nonneg_orthant(&space)?;
    let sched = opts.schedule;
    let trials = 50usize;
    {
        let c = r.body.child("config");
        c.put("space", "sequences");
        c.put("length", 16);
        c.put("trials", trials);
    }

    let mut rng = r.rng();
    let s = Vector::zeros(space.dim());
    let mut agree = 0usize;
    let mut members = 0usize;
    let mut worst_gap: f64 = 0.0;
    for trial in 0..trials {
        let f = orthant_direction(space.dim(), trial % 2 == 0, &mut rng);
        let cv = adjacent_member(oracle.as_ref(), &s, &f, &sched)?;
        let min = f.as_slice().iter().cloned().fold(f64::INFINITY, f64::min);
        let expected = if min >= 0.0 {
            Verdict::Member
        } else {
            Verdict::NonMember
        };
        if cv.verdict == expected {
            agree += 1;
        }
        if expected == Verdict::Member {
            members += 1;
        }
        for (n, trace) in cv.traces.iter().enumerate() {
            worst_gap = worst_gap.max((trace.limit_estimate - (-f[n]).max(0.0)).abs());
        }
        let rec = r.body.record("trials");
        rec.put("index", trial);
        rec.put("verdict", cv.verdict);
        rec.put_f64("limit_estimate", cv.limit_estimate);
    }
    r.check_eq(
        "closed-form verdict agreement",
        format!("{agree}/{trials}"),
        format!("{trials}/{trials}"),
    );
    r.check_at_most("per-coordinate limit gap", worst_gap, 1e-6);
    r.check_eq("member draws", members, trials / 2);
    r.finish()
}

/// The union of the two half-support sets is invariant under the straight
/// flow: both halves are linear subspaces, so lines launched inside one
/// stay inside it.
fn ex1_flat(opts: &RunOptions) -> Result<RunReport> {
    let mut r = Runner::new("ex1-flat", opts);
    let space = ModelSpace::default_grid();
    let set = half_support_union(&space)?;
    let sampler = half_support_pairs(&space)?;
    let config = InvarianceConfig {
        trials: 100,
        ..r.invariance_config()
    };
    echo_invariance(&mut r.body, &config);
    let mut rng = r.rng();
    let report = verify_invariance(&flat_spray(), set.as_ref(), &sampler, &config, &mut rng)?;
    r.body.put("overall", report.overall);
    r.body.put_f64("max_distance", report.max_distance());
    r.check_eq("invariance verdict", report.overall, OverallVerdict::Invariant);
    r.check_at_most("max seminorm distance", report.max_distance(), 1e-9);
    r.finish()
}

/// Perturbing the flat spray by a projective bump factor breaks the
/// invariance of the half-support union: a geodesic launched with velocity
/// inside the bump's window curves off the set. The perturbed spray has
/// logarithmic closed-form geodesics, so RK4 can be cross-checked exactly.
fn ex1_perturbed(opts: &RunOptions) -> Result<RunReport> {
    let mut r = Runner::new("ex1-perturbed", opts);
    let space = ModelSpace::default_grid();
    let set = half_support_union(&space)?;
    let spray = bump_perturbed_spray(&space, 0.5)?;
    let sampler = probe_pairs(&space, 0.25)?;
    let config = InvarianceConfig {
        trials: 6,
        t_span: (0.0, 1.0),
        captures: 41,
        ..r.invariance_config()
    };
    echo_invariance(&mut r.body, &config);

    let mut rng = r.rng();
    let report = verify_invariance(&spray, set.as_ref(), &sampler, &config, &mut rng)?;
    r.body.put("overall", report.overall);
    if let Some(onset) = report.trials.iter().find_map(|t| t.violation_onset) {
        r.body.put_f64("first_onset", onset);
    }
    r.check_eq("invariance verdict", report.overall, OverallVerdict::Violated);

    let (f, v) = two_sided_probe(&space, 0.25)?;
    let (x_exit, _) = geodesic_flow(&spray, &f, &v, 0.1, config.step, Method::ClosedForm)?;
    let exit_distance = set.max_distance(&x_exit)?;
    r.body.put_f64("distance_at_0p1", exit_distance);
    r.check_above("distance at t = 0.1", exit_distance, 1e-3);

    let mut rk4_gap: f64 = 0.0;
    for &t in &[0.1, 0.5, 1.0] {
        let (xc, vc) = geodesic_flow(&spray, &f, &v, t, 1e-3, Method::ClosedForm)?;
        let (xr, vr) = geodesic_flow(&spray, &f, &v, t, 1e-3, Method::Rk4)?;
        rk4_gap = rk4_gap
            .max(xc.sub(&xr).sup_norm())
            .max(vc.sub(&vr).sup_norm());
    }
    r.body.put_f64("rk4_closed_form_gap", rk4_gap);
    r.check_at_most("rk4 vs closed form", rk4_gap, 1e-8);

    if let Some((index, traj)) = &report.counterexample {
        r.body.put("counterexample_trial", index);
        r.save_trajectory("ex1-perturbed-counterexample.csv", traj)?;
        r.check_true("counterexample recorded", true);
    } else {
        r.check_true("counterexample recorded", false);
    }
    r.finish()
}

fn parabola_point(space: &ModelSpace, h: f64) -> Result<Vector> {
    let grid = &space.factors()[0];
    let a = grid.sample_scalar(|_| h)?;
    let b = grid.sample_scalar(|_| h * h)?;
    Ok(Vector::concat(&[&a, &b]))
}

/// The parabola graph: its admissible set under the straight flow contains
/// only zero velocities, so the set is invariant yet not totally geodesic,
/// and the straight probe along a nonzero tangent has a second-order
/// quotient converging to the curvature value 1.
fn ex2_parabola(opts: &RunOptions) -> Result<RunReport> {
    let mut r = Runner::new("ex2-parabola", opts);
    let grid = ModelSpace::default_grid();
    let space = product_space(grid.clone(), grid)?;
    let set = parabola_graph(&space)?;
    let zero_section = parabola_zero_section(&space)?;
    let tangent = parabola_tangent_pairs(&space)?;
    let flat = flat_spray();
    let sched = opts.schedule;
    let mut rng = r.rng();

    let mut member = 0usize;
    let section_draws = 50usize;
    for _ in 0..section_draws {
        let (x, v) = zero_section.sample(&mut rng)?;
        let cv = admissible(&flat, set.as_ref(), &x, &v, &sched)?;
        if cv.verdict == Verdict::Member {
            member += 1;
        }
    }
    r.check_eq(
        "zero-section admissibility",
        format!("{member}/{section_draws}"),
        format!("{section_draws}/{section_draws}"),
    );

    let mut straight_nonmember = true;
    let mut estimate_gap: f64 = 0.0;
    for _ in 0..8 {
        let h = rng.symmetric();
        let s = parabola_point(&space, h)?;
        let a = space.factors()[0].sample_scalar(|_| 1.0)?;
        let b = space.factors()[0].sample_scalar(|_| 2.0 * h)?;
        let f = Vector::concat(&[&a, &b]);
        let e = Vector::zeros(space.dim());
        let cv = second_order_member(set.as_ref(), &s, &f, &e, &sched)?;
        straight_nonmember &= cv.verdict == Verdict::NonMember;
        estimate_gap = estimate_gap.max((cv.limit_estimate - 1.0).abs());
    }
    r.body.put_f64("straight_probe_gap", estimate_gap);
    r.check_true("straight probe rejected", straight_nonmember);
    r.check_at_most("straight-probe estimate vs 1", estimate_gap, 1e-3);

    let always: TangentPredicate = Arc::new(|_, _| true);
    let tg = check_totally_geodesic(
        &flat,
        set.as_ref(),
        &tangent,
        &zero_section,
        &always,
        8,
        &sched,
        &mut rng,
    )?;
    r.body.put("tangent_not_admissible", tg.tangent_not_admissible);
    r.check_eq("totally geodesic", tg.holds(), false);

    let config = InvarianceConfig {
        trials: 20,
        ..r.invariance_config()
    };
    echo_invariance(&mut r.body, &config);
    let inv = verify_invariance(&flat, set.as_ref(), &zero_section, &config, &mut rng)?;
    r.body.put("overall", inv.overall);
    r.check_eq("invariance verdict", inv.overall, OverallVerdict::Invariant);

    let endpoints = {
        let space = space.clone();
        PairSampler::new(
            "parabola-endpoints",
            Arc::new(move |_rng: &mut SplitMix64| {
                let p = parabola_point(&space, 0.0).expect("constant section");
                let q = parabola_point(&space, 1.0).expect("constant section");
                (p, q)
            }),
        )
    };
    let conv = check_geodesic_convexity(&flat, set.as_ref(), &endpoints, 1, 1, &mut rng)?;
    r.check_eq(
        "chord midpoint defect",
        fmt_f64(conv.max_distance),
        fmt_f64(0.25),
    );
    r.finish()
}

/// Constant functions form a line-closed subspace: both the totally
/// geodesic check and geodesic convexity hold with distance exactly zero.
fn ex_crit_constants(opts: &RunOptions) -> Result<RunReport> {
    let mut r = Runner::new("ex-crit-constants", opts);
    let space = ModelSpace::default_grid();
    let set = constant_functions(&space)?;
    let tangent = constant_pairs(&space)?;
    let ambient = constant_ambient(&space, 0.3)?;
    let flat = flat_spray();
    let sched = opts.schedule;
    let mut rng = r.rng();

    let is_constant: TangentPredicate = Arc::new(|_, v| {
        let mean = v.as_slice().iter().sum::<f64>() / v.dim() as f64;
        v.as_slice().iter().all(|c| (c - mean).abs() <= 1e-9)
    });
    let tg = check_totally_geodesic(
        &flat,
        set.as_ref(),
        &tangent,
        &ambient,
        &is_constant,
        12,
        &sched,
        &mut rng,
    )?;
    r.body.put("tangent_not_admissible", tg.tangent_not_admissible);
    r.body.put("admissible_not_tangent", tg.admissible_not_tangent);
    r.check_eq("totally geodesic", tg.holds(), true);

    let pairs = constant_point_pairs(&space)?;
    let conv = check_geodesic_convexity(&flat, set.as_ref(), &pairs, 20, 3, &mut rng)?;
    r.body.put("convexity_pairs", conv.pairs);
    r.check_eq("convexity defect", fmt_f64(conv.max_distance), fmt_f64(0.0));
    r.finish()
}

/// Grid translation commutes with the straight flow exactly, so the
/// translated half-support union is again invariant. The same translation
/// does not commute with the bump-perturbed spray because the bump window
/// is anchored in the coordinate: the discrepancy is visibly nonzero.
fn ex9_translate(opts: &RunOptions) -> Result<RunReport> {
    let mut r = Runner::new("ex9-translate", opts);
    let space = ModelSpace::default_grid();
    let set = half_support_union(&space)?;
    let shifted = translate_set(set, 0.5)?;
    let phi = Automorphism::grid_translation(&space, 0.5)?;
    let sampler = half_support_pairs(&space)?;
    let config = InvarianceConfig {
        trials: 10,
        ..r.invariance_config()
    };
    echo_invariance(&mut r.body, &config);
    let mut rng = r.rng();

    let orbit = check_orbit_invariance(
        &flat_spray(),
        &phi,
        shifted.as_ref(),
        sampler,
        &config,
        10,
        &mut rng,
    )?;
    r.body.put_f64("flat_discrepancy", orbit.automorphism_discrepancy);
    r.body.put("translated_overall", orbit.transformed.overall);
    r.check_eq(
        "flat spray commutes",
        fmt_f64(orbit.automorphism_discrepancy),
        fmt_f64(0.0),
    );
    r.check_eq(
        "translated set verdict",
        orbit.transformed.overall,
        OverallVerdict::Invariant,
    );
    r.check_true("orbit invariance", orbit.pass);

    let bump = bump_perturbed_spray(&space, 0.5)?;
    let probes = probe_pairs(&space, 0.25)?;
    let mut pairs = Vec::with_capacity(10);
    for _ in 0..10 {
        pairs.push(probes.sample(&mut rng)?);
    }
    let control = check_automorphism(&bump, &phi, &pairs);
    r.body.put_f64("bump_discrepancy", control.max_discrepancy);
    r.check_above("bump spray discrepancy", control.max_discrepancy, 1e-3);
    r.finish()
}

/// Trigonometric polynomials of bounded degree form a linear subspace of
/// loops, invariant under the straight flow; pointwise tangency on the
/// doubled space agrees, and pushing draws through the flow map keeps them
/// admissible.
fn ex_nonneg_fourier(opts: &RunOptions) -> Result<RunReport> {
    let mut r = Runner::new("ex-nonneg-fourier", opts);
    let space = ModelSpace::circle_grid(64, 1)?;
    let degree = 3;
    let set = fourier_subspace(&space, degree)?;
    let sampler = fourier_pairs(&space, degree)?;
    let flat = flat_spray();
    let sched = opts.schedule;
    let config = InvarianceConfig {
        trials: 20,
        ..r.invariance_config()
    };
    r.body.put("degree", degree);
    echo_invariance(&mut r.body, &config);
    let mut rng = r.rng();

    let inv = verify_invariance(&flat, set.as_ref(), &sampler, &config, &mut rng)?;
    r.body.put("overall", inv.overall);
    r.body.put_f64("max_distance", inv.max_distance());
    r.check_eq("invariance verdict", inv.overall, OverallVerdict::Invariant);
    r.check_at_most("max seminorm distance", inv.max_distance(), 1e-9);

    let bundle = ProductOracle::with_label(
        vec![fourier_subspace(&space, degree)?, fourier_subspace(&space, degree)?],
        "fourier-bundle",
    )?;
    let agreement = check_tangency_reformulation(
        &flat,
        bundle.as_ref(),
        &sampler,
        12,
        &sched,
        inv.overall,
        &mut rng,
    )?;
    r.body.put("bundle_members", agreement.members);
    r.body.put("bundle_non_members", agreement.non_members);
    r.check_true("tangency agreement", agreement.agree);
    r.check_eq("bundle non-members", agreement.non_members, 0);

    let flow = check_flow_invariance(
        &flat,
        set.as_ref(),
        &sampler,
        &[0.5, 1.0, 2.0],
        8,
        config.step,
        &sched,
        &mut rng,
    )?;
    r.body.put("flow_records", flow.records.len());
    r.check_true("flow keeps membership", flow.pass);
    r.finish()
}

/// Constant loops on a great circle under the pointwise sphere spray: the
/// set is invariant and totally geodesic, and the equator geodesic admits
/// both a closed form and a machine-checkable radius bound.
fn ex_hi_sphere(opts: &RunOptions) -> Result<RunReport> {
    let mut r = Runner::new("ex-hi-sphere", opts);
    let space = ModelSpace::circle_grid(64, 3)?;
    let normal = [0.0, 0.0, 1.0];
    let set = great_circle_constant_loops(&space, normal)?;
    let spray = sphere_pointwise_spray(&space)?;
    let tangent = circle_loop_tangent_pairs(&space, normal)?;
    let ambient = circle_loop_ambient(&space, normal)?;
    let sched = opts.schedule;
    let config = InvarianceConfig {
        trials: 12,
        ..r.invariance_config()
    };
    echo_invariance(&mut r.body, &config);
    let mut rng = r.rng();

    let inv = verify_invariance(&spray, set.as_ref(), &tangent, &config, &mut rng)?;
    r.body.put("overall", inv.overall);
    r.body.put_f64("max_distance", inv.max_distance());
    r.check_eq("invariance verdict", inv.overall, OverallVerdict::Invariant);

    let frame = plane_basis(normal);
    let is_tangent: TangentPredicate = Arc::new(move |x, v| {
        let n = frame.0;
        let pts = x.dim() / 3;
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
        &sched,
        &mut rng,
    )?;
    r.body.put("tangent_not_admissible", tg.tangent_not_admissible);
    r.body.put("admissible_not_tangent", tg.admissible_not_tangent);
    r.check_eq("totally geodesic", tg.holds(), true);

    let omega = 1.0;
    let p = space.sample_r3(|_| [1.0, 0.0, 0.0])?;
    let v = space.sample_r3(|_| [0.0, omega, 0.0])?;
    let captures: Vec<f64> = (0..=40).map(|k| -2.0 + 0.1 * k as f64).collect();
    let rk4 = integrate_with_captures(&spray, &p, &v, &captures, 1e-3, Method::Rk4)?;
    let mut radius_drift: f64 = 0.0;
    let mut closed_gap: f64 = 0.0;
    for i in 0..rk4.len() {
        let (t, x, vel) = rk4.state(i);
        for chunk in x.as_slice().chunks_exact(3) {
            let radius = (chunk[0] * chunk[0] + chunk[1] * chunk[1] + chunk[2] * chunk[2]).sqrt();
            radius_drift = radius_drift.max((radius - 1.0).abs());
        }
        let (xc, vc) = spray.closed_form(t, &p, &v).expect("sphere closed form")?;
        closed_gap = closed_gap
            .max(xc.sub(x).sup_norm())
            .max(vc.sub(vel).sup_norm());
    }
    r.body.put_f64("radius_drift", radius_drift);
    r.body.put_f64("rk4_closed_form_gap", closed_gap);
    r.check_at_most("equator radius drift", radius_drift, 1e-6);
    r.check_at_most("rk4 vs closed form", closed_gap, 1e-8);

    let flow = check_flow_invariance(
        &spray,
        set.as_ref(),
        &tangent,
        &[PI, 2.0 * PI],
        6,
        1e-2,
        &sched,
        &mut rng,
    )?;
    r.check_true("flow keeps membership", flow.pass);
    r.finish()
}

/// Finite sequences stratified by the index of the last nonzero entry: the
/// straight flow preserves each stratum closure exactly, pivot coordinates
/// change sign at most once on affine data, and lower strata sit in the
/// closures of higher ones.
fn ex_stra(opts: &RunOptions) -> Result<RunReport> {
    let mut r = Runner::new("ex-stra", opts);
    let space = ModelSpace::sequences(16)?;
    let strata = finite_sequence_strata(&space)?;
    let config = r.invariance_config();
    echo_invariance(&mut r.body, &config);
    let mut rng = r.rng();

    let report = check_stratification(&strata, &flat_spray(), &config, 3, &mut rng)?;
    let worst_closure = report
        .trials
        .iter()
        .map(|t| t.closure_max_distance)
        .fold(0.0_f64, f64::max);
    r.body.put("strata_trials", report.trials.len());
    r.body.put("max_exit_events", report.max_exit_events);
    r.check_eq("closure distance", fmt_f64(worst_closure), fmt_f64(0.0));
    r.check_true("closure invariance", report.closure_invariant);
    r.check_true("frontier containment", report.frontier_ok);
    r.check_at_most("exit events", report.max_exit_events as f64, 1.0);
    r.finish()
}

fn echo_invariance(body: &mut Section, config: &InvarianceConfig) {
    let c = body.child("invariance_config");
    c.put("trials", config.trials);
    c.put_floats("t_span", &[config.t_span.0, config.t_span.1]);
    c.put("captures", config.captures);
    c.put_f64("step", config.step);
    c.put_f64("in_set_tol", config.in_set_tol);
    c.put_f64("violation_threshold", config.violation_threshold);
}
