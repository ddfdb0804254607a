//! Command-line front end: reproduce registered examples, run individual
//! cone/invariance/spray checks on named components, and dump geodesic
//! trajectories. Exit codes: 0 when every stated expectation holds, 1 when
//! a verdict misses an expectation, 2 on configuration or construction
//! errors.

use std::env;
use std::fs;
use std::io::BufWriter;
use std::path::PathBuf;
use std::process::ExitCode;
use std::sync::Arc;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Parser, Subcommand};

use spraylab::cone::{
    adjacent_member, admissible, first_order_tangent_on_bundle, QuotientSchedule,
};
use spraylab::config::{parse_schedule, parse_vector, KeyValues, SpaceConfig};
use spraylab::invariance::{
    check_flow_invariance, check_geodesic_convexity, check_orbit_invariance,
    check_stratification, check_tangency_reformulation, check_totally_geodesic,
    verify_invariance, InvarianceConfig, TangentPredicate,
};
use spraylab::oracle::{
    circle_loop_tangent_bundle, constant_functions, finite_sequence_strata, fourier_subspace,
    great_circle_constant_loops, half_support_side, half_support_union, nonneg_orthant,
    parabola_graph, translate_set, OracleRef, ProductOracle, UnionOracle,
};
use spraylab::registry::{run_all, run_example, RunOptions};
use spraylab::rng::SplitMix64;
use spraylab::sampler::{
    circle_loop_ambient, circle_loop_tangent_pairs, constant_ambient, constant_pairs,
    constant_point_pairs, fourier_ambient, fourier_pairs, half_support_pairs,
    bump_on_grid, parabola_tangent_pairs, parabola_zero_section, AdmissibleSampler, PairSampler,
};
use spraylab::spray::{
    bump_perturbed_spray, check_automorphism, check_homogeneity, flat_spray,
    integrate_with_captures, pushforward_spray, sphere_pointwise_spray, Automorphism, Method,
    Spray, HOMOGENEITY_SCALES,
};
use spraylab::{ModelSpace, Vector};

#[derive(Parser)]
#[command(name = "spraylab", version, about = "Numerical laboratory for spray geometry")]
struct Cli {
    /// Space configuration file (key = value lines). Each set has a
    /// sensible default space when this is absent.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Seed for all random sampling; recorded in reports.
    #[arg(long, global = true, default_value_t = 17)]
    seed: u64,

    /// Directory for report documents and CSV artifacts. Falls back to the
    /// SPRAYLAB_OUT environment variable; nothing is written when neither
    /// is set.
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// Quotient schedule as t0,ratio,K (default 0.1,0.5,14).
    #[arg(long, global = true)]
    schedule: Option<String>,

    /// Tolerance override: membership tolerance for cone commands, the
    /// pass bound for check-convexity / check-spray / pushforward.
    #[arg(long, global = true)]
    tol: Option<f64>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Re-run a registered example by id (or "all") and compare every check
    /// against its expected outcome.
    Reproduce {
        /// Example id, or "all".
        target: String,
    },
    /// Adjacent-cone membership of a direction at a base point of a set.
    CheckCone {
        #[arg(long)]
        set: String,
        /// Base point spec (zero | const:c | bump:c,w | raw:... | ...).
        #[arg(long)]
        base: String,
        /// Direction spec, same grammar as the base point.
        #[arg(long)]
        direction: String,
        /// Expected verdict: member | non-member | inconclusive.
        #[arg(long)]
        expect: Option<String>,
    },
    /// Admissibility of initial data (x, v) for a spray on a set.
    CheckAdmissible {
        #[arg(long)]
        set: String,
        #[arg(long)]
        spray: String,
        #[arg(long)]
        base: String,
        #[arg(long)]
        velocity: String,
        #[arg(long)]
        expect: Option<String>,
    },
    /// Integrate a geodesic and print (optionally dump to CSV) the samples.
    Integrate {
        #[arg(long)]
        spray: String,
        #[arg(long)]
        x0: String,
        #[arg(long)]
        v0: String,
        /// Time span as a,b with a <= 0 <= b.
        #[arg(long, default_value = "-1,1", allow_hyphen_values = true)]
        t_span: String,
        #[arg(long, default_value_t = 1e-2)]
        step: f64,
        /// auto | rk4 | closed-form
        #[arg(long, default_value = "auto")]
        method: String,
        /// Trajectory CSV path; relative paths land inside the output
        /// directory when one is set.
        #[arg(long)]
        csv: Option<String>,
    },
    /// Batch invariance verification with sampled admissible data.
    VerifyInvariance {
        #[arg(long)]
        set: String,
        #[arg(long)]
        spray: String,
        #[arg(long, default_value_t = 20)]
        trials: usize,
        /// Expected overall verdict: invariant | violated | inconclusive.
        #[arg(long)]
        expect: Option<String>,
    },
    /// Compare the admissible set against the full tangent data of a set.
    CheckTotallyGeodesic {
        #[arg(long)]
        set: String,
        #[arg(long)]
        spray: String,
        #[arg(long, default_value_t = 10)]
        trials: usize,
        /// Expected outcome: holds | fails.
        #[arg(long)]
        expect: Option<String>,
    },
    /// Geodesic convexity by connecting sampled point pairs of a set.
    CheckConvexity {
        #[arg(long)]
        set: String,
        #[arg(long)]
        spray: String,
        #[arg(long, default_value_t = 10)]
        pairs: usize,
        #[arg(long, default_value_t = 3)]
        interior: usize,
    },
    /// Agreement between pointwise tangency on the doubled space and the
    /// batch invariance verdict.
    CheckTangency {
        #[arg(long)]
        set: String,
        #[arg(long)]
        spray: String,
        #[arg(long, default_value_t = 10)]
        trials: usize,
    },
    /// Push sampled data through the geodesic flow and re-check
    /// admissibility at each listed time.
    CheckFlow {
        #[arg(long)]
        set: String,
        #[arg(long)]
        spray: String,
        /// Comma-separated flow times.
        #[arg(long, default_value = "0.5,1,2", allow_hyphen_values = true)]
        times: String,
        #[arg(long, default_value_t = 8)]
        trials: usize,
    },
    /// Invariance of a translated set, seeded through the translation map.
    CheckOrbit {
        #[arg(long)]
        set: String,
        #[arg(long)]
        spray: String,
        /// Grid translation offset (must align with the grid step).
        #[arg(long, default_value_t = 0.5, allow_hyphen_values = true)]
        shift: f64,
        #[arg(long, default_value_t = 10)]
        trials: usize,
    },
    /// Stratified invariance of finite sequences under a spray.
    CheckStrata {
        #[arg(long, default_value = "flat")]
        spray: String,
        #[arg(long, default_value_t = 3)]
        trials: usize,
    },
    /// Push a spray forward along a grid translation and report the
    /// roundtrip discrepancy.
    Pushforward {
        #[arg(long)]
        spray: String,
        #[arg(long, default_value_t = 0.5, allow_hyphen_values = true)]
        shift: f64,
        #[arg(long, default_value_t = 50)]
        samples: usize,
    },
    /// Quadratic homogeneity of a spray's acceleration.
    CheckSpray {
        #[arg(long)]
        spray: String,
        #[arg(long, default_value_t = 200)]
        samples: usize,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(2)
        }
    }
}

/// Everything the subcommands share, resolved from the global flags.
struct Env {
    space_config: Option<SpaceConfig>,
    seed: u64,
    out_dir: Option<PathBuf>,
    sched: QuotientSchedule,
    tol: Option<f64>,
}

impl Env {
    fn resolve(cli: &Cli) -> Result<Env> {
        let space_config = match &cli.config {
            None => None,
            Some(path) => {
                let text = fs::read_to_string(path)
                    .with_context(|| format!("reading {}", path.display()))?;
                Some(SpaceConfig::from_keys(&KeyValues::parse(&text)?)?)
            }
        };
        let mut sched = match &cli.schedule {
            None => QuotientSchedule::default(),
            Some(text) => parse_schedule(text)?,
        };
        if let Some(tol) = cli.tol {
            if !(tol.is_finite() && tol > 0.0) {
                bail!("--tol must be a positive real, got {tol}");
            }
            sched.membership_tol = tol;
        }
        let out_dir = cli
            .out
            .clone()
            .or_else(|| env::var_os("SPRAYLAB_OUT").map(PathBuf::from));
        Ok(Env {
            space_config,
            seed: cli.seed,
            out_dir,
            sched,
            tol: cli.tol,
        })
    }

    fn rng(&self) -> SplitMix64 {
        SplitMix64::new(self.seed)
    }

    /// The configured space, or the given default when no --config was
    /// passed.
    fn space_or(&self, default: fn() -> spraylab::Result<ModelSpace>) -> Result<ModelSpace> {
        match &self.space_config {
            Some(cfg) => Ok(cfg.build()?),
            None => Ok(default()?),
        }
    }

    fn invariance_config(&self, trials: usize) -> InvarianceConfig {
        InvarianceConfig {
            trials,
            sched: self.sched,
            ..InvarianceConfig::default()
        }
    }
}

/// A set wired to the samplers and surrogates its checks need. Entries are
/// present only where the set supports the corresponding check.
struct SetKit {
    space: ModelSpace,
    oracle: OracleRef,
    data: AdmissibleSampler,
    tangent: Option<AdmissibleSampler>,
    ambient: Option<AdmissibleSampler>,
    predicate: Option<TangentPredicate>,
    point_pairs: Option<PairSampler>,
    bundle: Option<OracleRef>,
}

const SET_IDS: &str = "half-support | orthant | constants | parabola | fourier[:degree] | circle-loops";

fn build_set(env: &Env, id: &str) -> Result<SetKit> {
    let (kind, arg) = match id.split_once(':') {
        Some((k, a)) => (k, Some(a)),
        None => (id, None),
    };
    match kind {
        "half-support" => {
            let space = env.space_or(|| Ok(ModelSpace::default_grid()))?;
            let plus = half_support_side(&space, true)?;
            let minus = half_support_side(&space, false)?;
            let bundle = UnionOracle::with_label(
                vec![
                    ProductOracle::new(vec![plus.clone(), plus])?,
                    ProductOracle::new(vec![minus.clone(), minus])?,
                ],
                "half-support-bundle",
            )?;
            Ok(SetKit {
                oracle: half_support_union(&space)?,
                data: half_support_pairs(&space)?,
                tangent: None,
                ambient: None,
                predicate: None,
                point_pairs: None,
                bundle: Some(bundle),
                space,
            })
        }
        "orthant" => {
            let space = env.space_or(|| ModelSpace::sequences(16))?;
            Ok(SetKit {
                oracle: nonneg_orthant(&space)?,
                data: half_support_pairs(&space).or_else(|_| orthant_pairs(&space))?,
                tangent: None,
                ambient: None,
                predicate: None,
                point_pairs: None,
                bundle: None,
                space,
            })
        }
        "constants" => {
            let space = env.space_or(|| Ok(ModelSpace::default_grid()))?;
            let predicate: TangentPredicate = Arc::new(|_, v: &Vector| {
                let mean = v.as_slice().iter().sum::<f64>() / v.dim() as f64;
                v.as_slice().iter().all(|c| (c - mean).abs() <= 1e-9)
            });
            Ok(SetKit {
                oracle: constant_functions(&space)?,
                data: constant_pairs(&space)?,
                tangent: Some(constant_pairs(&space)?),
                ambient: Some(constant_ambient(&space, 0.3)?),
                predicate: Some(predicate),
                point_pairs: Some(constant_point_pairs(&space)?),
                bundle: Some(ProductOracle::with_label(
                    vec![constant_functions(&space)?, constant_functions(&space)?],
                    "constants-bundle",
                )?),
                space,
            })
        }
        "parabola" => {
            let space = match &env.space_config {
                Some(cfg) => cfg.build()?,
                None => {
                    let grid = ModelSpace::default_grid();
                    spraylab::space::product_space(grid.clone(), grid)?
                }
            };
            Ok(SetKit {
                oracle: parabola_graph(&space)?,
                data: parabola_zero_section(&space)?,
                tangent: Some(parabola_tangent_pairs(&space)?),
                ambient: Some(parabola_zero_section(&space)?),
                predicate: Some(Arc::new(|_, _| true)),
                point_pairs: None,
                bundle: None,
                space,
            })
        }
        "fourier" => {
            let degree: usize = match arg {
                None => 3,
                Some(a) => a.parse().with_context(|| format!("bad degree '{a}'"))?,
            };
            let space = env.space_or(|| ModelSpace::circle_grid(64, 1))?;
            Ok(SetKit {
                oracle: fourier_subspace(&space, degree)?,
                data: fourier_pairs(&space, degree)?,
                tangent: Some(fourier_pairs(&space, degree)?),
                ambient: Some(fourier_ambient(&space, degree)?),
                predicate: None,
                point_pairs: None,
                bundle: Some(ProductOracle::with_label(
                    vec![
                        fourier_subspace(&space, degree)?,
                        fourier_subspace(&space, degree)?,
                    ],
                    "fourier-bundle",
                )?),
                space,
            })
        }
        "circle-loops" => {
            let normal = [0.0, 0.0, 1.0];
            let space = env.space_or(|| ModelSpace::circle_grid(64, 3))?;
            Ok(SetKit {
                oracle: great_circle_constant_loops(&space, normal)?,
                data: circle_loop_tangent_pairs(&space, normal)?,
                tangent: Some(circle_loop_tangent_pairs(&space, normal)?),
                ambient: Some(circle_loop_ambient(&space, normal)?),
                predicate: None,
                point_pairs: None,
                bundle: Some(circle_loop_tangent_bundle(&space, normal)?),
                space,
            })
        }
        other => Err(anyhow!("unknown set '{other}' (expected {SET_IDS})")),
    }
}

/// Coordinate-wise nonnegative data for the orthant when the half-support
/// sampler does not apply (sequence spaces have no grid structure).
fn orthant_pairs(space: &ModelSpace) -> spraylab::Result<AdmissibleSampler> {
    let dim = space.dim();
    Ok(AdmissibleSampler::analytic(
        "orthant-pairs",
        Arc::new(move |rng: &mut SplitMix64| {
            let x = Vector((0..dim).map(|_| rng.unit()).collect());
            let v = Vector((0..dim).map(|_| rng.symmetric().abs()).collect());
            (x, v)
        }),
    ))
}

fn build_spray(id: &str, space: &ModelSpace) -> Result<Spray> {
    let (kind, arg) = match id.split_once(':') {
        Some((k, a)) => (k, Some(a)),
        None => (id, None),
    };
    match kind {
        "flat" => Ok(flat_spray()),
        "bump" => {
            let eps: f64 = match arg {
                None => 0.5,
                Some(a) => a.parse().with_context(|| format!("bad bump width '{a}'"))?,
            };
            Ok(bump_perturbed_spray(space, eps)?)
        }
        "sphere" => Ok(sphere_pointwise_spray(space)?),
        other => Err(anyhow!("unknown spray '{other}' (expected flat | bump[:eps] | sphere)")),
    }
}

fn parse_method(text: &str) -> Result<Method> {
    match text {
        "auto" => Ok(Method::Auto),
        "rk4" => Ok(Method::Rk4),
        "closed-form" => Ok(Method::ClosedForm),
        other => Err(anyhow!("unknown method '{other}'")),
    }
}

fn parse_reals(text: &str) -> Result<Vec<f64>> {
    text.split(',')
        .map(|s| {
            s.trim()
                .parse::<f64>()
                .map_err(|_| anyhow!("bad real '{s}' in '{text}'"))
        })
        .collect()
}

/// Case-insensitive verdict comparison, tolerant of an optional hyphen.
fn verdict_matches(got: impl std::fmt::Display, expected: &str) -> bool {
    let norm = |s: &str| s.to_lowercase().replace('-', "");
    norm(&got.to_string()) == norm(expected)
}

fn run(cli: Cli) -> Result<bool> {
    let env = Env::resolve(&cli)?;
    match &cli.command {
        Command::Reproduce { target } => reproduce(&env, target),
        Command::CheckCone {
            set,
            base,
            direction,
            expect,
        } => {
            let kit = build_set(&env, set)?;
            let s = parse_vector(&kit.space, base)?;
            let f = parse_vector(&kit.space, direction)?;
            let cv = adjacent_member(kit.oracle.as_ref(), &s, &f, &env.sched)?;
            println!("set = {}", kit.oracle.label());
            println!("verdict = {}", cv.verdict);
            println!("limit_estimate = {:.16e}", cv.limit_estimate);
            for trace in &cv.traces {
                println!(
                    "seminorm {} verdict = {} estimate = {:.16e}",
                    trace.seminorm, trace.verdict, trace.limit_estimate
                );
            }
            Ok(match expect {
                None => true,
                Some(e) => verdict_matches(cv.verdict, e),
            })
        }
        Command::CheckAdmissible {
            set,
            spray,
            base,
            velocity,
            expect,
        } => {
            let kit = build_set(&env, set)?;
            let spray = build_spray(spray, &kit.space)?;
            let x = parse_vector(&kit.space, base)?;
            let v = parse_vector(&kit.space, velocity)?;
            let cv = admissible(&spray, kit.oracle.as_ref(), &x, &v, &env.sched)?;
            println!("set = {}", kit.oracle.label());
            println!("spray = {}", spray.label());
            println!("verdict = {}", cv.verdict);
            println!("limit_estimate = {:.16e}", cv.limit_estimate);
            Ok(match expect {
                None => true,
                Some(e) => verdict_matches(cv.verdict, e),
            })
        }
        Command::Integrate {
            spray,
            x0,
            v0,
            t_span,
            step,
            method,
            csv,
        } => {
            let space = env.space_or(|| Ok(ModelSpace::default_grid()))?;
            let spray = build_spray(spray, &space)?;
            let x = parse_vector(&space, x0)?;
            let v = parse_vector(&space, v0)?;
            let span = parse_reals(t_span)?;
            if span.len() != 2 {
                bail!("--t-span must be a,b");
            }
            let method = parse_method(method)?;
            let n = 41;
            let times: Vec<f64> = (0..n)
                .map(|k| span[0] + (span[1] - span[0]) * k as f64 / (n - 1) as f64)
                .collect();
            let traj = integrate_with_captures(&spray, &x, &v, &times, *step, method)?;
            println!("spray = {}", spray.label());
            println!("method = {}", traj.method);
            println!("samples = {}", traj.len());
            let (t_last, x_last, v_last) = traj.state(traj.len() - 1);
            println!("final t = {t_last}");
            println!("final |x| = {:.16e}", x_last.sup_norm());
            println!("final |v| = {:.16e}", v_last.sup_norm());
            if let Some(name) = csv {
                let name = PathBuf::from(name);
                let path = match (&env.out_dir, name.is_absolute()) {
                    (Some(dir), false) => dir.join(name),
                    _ => name,
                };
                if let Some(parent) = path.parent() {
                    if !parent.as_os_str().is_empty() {
                        fs::create_dir_all(parent)?;
                    }
                }
                let mut out = BufWriter::new(fs::File::create(&path)?);
                traj.write_csv(&mut out)?;
                println!("csv = {}", path.display());
            }
            Ok(true)
        }
        Command::VerifyInvariance {
            set,
            spray,
            trials,
            expect,
        } => {
            let kit = build_set(&env, set)?;
            let spray = build_spray(spray, &kit.space)?;
            let config = env.invariance_config(*trials);
            let mut rng = env.rng();
            let report = verify_invariance(&spray, kit.oracle.as_ref(), &kit.data, &config, &mut rng)?;
            println!("set = {}", report.set_label);
            println!("spray = {}", report.spray_label);
            println!("trials = {}", report.trials.len());
            println!("max_distance = {:.16e}", report.max_distance());
            println!("overall = {}", report.overall);
            Ok(match expect {
                None => true,
                Some(e) => verdict_matches(report.overall, e),
            })
        }
        Command::CheckTotallyGeodesic {
            set,
            spray,
            trials,
            expect,
        } => {
            let kit = build_set(&env, set)?;
            let spray = build_spray(spray, &kit.space)?;
            let (tangent, ambient, predicate) = match (&kit.tangent, &kit.ambient, &kit.predicate) {
                (Some(t), Some(a), Some(p)) => (t, a, p),
                _ => bail!("set '{set}' has no tangent/ambient samplers for this check"),
            };
            let mut rng = env.rng();
            let report = check_totally_geodesic(
                &spray,
                kit.oracle.as_ref(),
                tangent,
                ambient,
                predicate,
                *trials,
                &env.sched,
                &mut rng,
            )?;
            println!("tangent_not_admissible = {}", report.tangent_not_admissible);
            println!("admissible_not_tangent = {}", report.admissible_not_tangent);
            let outcome = if report.holds() { "holds" } else { "fails" };
            println!("totally_geodesic = {outcome}");
            Ok(match expect {
                None => true,
                Some(e) => e.eq_ignore_ascii_case(outcome),
            })
        }
        Command::CheckConvexity {
            set,
            spray,
            pairs,
            interior,
        } => {
            let kit = build_set(&env, set)?;
            let spray = build_spray(spray, &kit.space)?;
            let point_pairs = kit
                .point_pairs
                .as_ref()
                .ok_or_else(|| anyhow!("set '{set}' has no point-pair sampler"))?;
            let mut rng = env.rng();
            let report = check_geodesic_convexity(
                &spray,
                kit.oracle.as_ref(),
                point_pairs,
                *pairs,
                *interior,
                &mut rng,
            )?;
            println!("pairs = {} (skipped {})", report.pairs, report.skipped);
            println!("max_distance = {:.16e}", report.max_distance);
            let bound = env.tol.unwrap_or(1e-9);
            println!("bound = {bound:.16e}");
            Ok(report.max_distance <= bound)
        }
        Command::CheckTangency { set, spray, trials } => {
            let kit = build_set(&env, set)?;
            let spray = build_spray(spray, &kit.space)?;
            let bundle = kit
                .bundle
                .as_ref()
                .ok_or_else(|| anyhow!("set '{set}' has no doubled-space oracle"))?;
            let config = env.invariance_config(*trials);
            let mut rng = env.rng();
            let inv = verify_invariance(&spray, kit.oracle.as_ref(), &kit.data, &config, &mut rng)?;
            let agreement = check_tangency_reformulation(
                &spray,
                bundle.as_ref(),
                &kit.data,
                *trials,
                &env.sched,
                inv.overall,
                &mut rng,
            )?;
            println!("invariance = {}", inv.overall);
            println!(
                "bundle verdicts: member {} / non-member {} / inconclusive {}",
                agreement.members, agreement.non_members, agreement.inconclusive
            );
            println!("agree = {}", agreement.agree);
            // Also show one pointwise verdict so the command is useful on a
            // single draw.
            let mut probe_rng = env.rng();
            let (x, v) = kit.data.sample(&mut probe_rng)?;
            let cv = first_order_tangent_on_bundle(bundle.as_ref(), &spray, &x, &v, &env.sched)?;
            println!("sample tangency verdict = {}", cv.verdict);
            Ok(agreement.agree)
        }
        Command::CheckFlow {
            set,
            spray,
            times,
            trials,
        } => {
            let kit = build_set(&env, set)?;
            let spray = build_spray(spray, &kit.space)?;
            let times = parse_reals(times)?;
            let mut rng = env.rng();
            let report = check_flow_invariance(
                &spray,
                kit.oracle.as_ref(),
                &kit.data,
                &times,
                *trials,
                1e-2,
                &env.sched,
                &mut rng,
            )?;
            println!("records = {}", report.records.len());
            println!("pass = {}", report.pass);
            Ok(report.pass)
        }
        Command::CheckOrbit {
            set,
            spray,
            shift,
            trials,
        } => {
            let kit = build_set(&env, set)?;
            let spray = build_spray(spray, &kit.space)?;
            let shifted = translate_set(kit.oracle.clone(), *shift)?;
            let phi = Automorphism::grid_translation(&kit.space, *shift)?;
            let config = env.invariance_config(*trials);
            let mut rng = env.rng();
            let report = check_orbit_invariance(
                &spray,
                &phi,
                shifted.as_ref(),
                kit.data,
                &config,
                10,
                &mut rng,
            )?;
            println!("automorphism_discrepancy = {:.16e}", report.automorphism_discrepancy);
            println!("translated overall = {}", report.transformed.overall);
            println!("pass = {}", report.pass);
            Ok(report.pass)
        }
        Command::CheckStrata { spray, trials } => {
            let space = env.space_or(|| ModelSpace::sequences(16))?;
            let strata = finite_sequence_strata(&space)?;
            let spray = build_spray(spray, &space)?;
            let config = env.invariance_config(3);
            let mut rng = env.rng();
            let report = check_stratification(&strata, &spray, &config, *trials, &mut rng)?;
            println!("trials = {}", report.trials.len());
            println!("closure_invariant = {}", report.closure_invariant);
            println!("max_exit_events = {}", report.max_exit_events);
            println!("frontier_ok = {}", report.frontier_ok);
            Ok(report.closure_invariant && report.frontier_ok)
        }
        Command::Pushforward {
            spray,
            shift,
            samples,
        } => {
            let space = env.space_or(|| Ok(ModelSpace::default_grid()))?;
            let spray = build_spray(spray, &space)?;
            let phi = Automorphism::grid_translation(&space, *shift)?;
            let pushed = pushforward_spray(&spray, &phi);
            let back = pushforward_spray(&pushed, &phi.inverted());
            let mut rng = env.rng();
            let mut roundtrip: f64 = 0.0;
            let mut pairs = Vec::with_capacity(*samples);
            // Bump data held away from the grid boundary: the roundtrip is
            // only an identity on functions whose support stays in range
            // under one shift each way.
            let margin = shift.abs() + 0.3;
            let grid = space
                .grid_spec()
                .ok_or_else(|| anyhow!("pushforward needs a grid space"))?;
            let (lo, hi) = (grid.min + margin, grid.max - margin);
            if lo >= hi {
                bail!("shift {shift} leaves no room on the grid [{}, {}]", grid.min, grid.max);
            }
            let central_bump = |rng: &mut SplitMix64| -> Result<Vector> {
                let center = rng.range(lo, hi);
                let amp = rng.symmetric();
                Ok(bump_on_grid(&space, center, 0.4)?.scaled(amp))
            };
            for _ in 0..*samples {
                let x = central_bump(&mut rng)?;
                let v = central_bump(&mut rng)?;
                let gap = back.accel(&x, &v).sub(&spray.accel(&x, &v)).sup_norm();
                roundtrip = roundtrip.max(gap);
                pairs.push((x, v));
            }
            let direct = check_automorphism(&spray, &phi, &pairs);
            println!("spray = {}", spray.label());
            println!("pushforward = {}", pushed.label());
            println!("roundtrip_gap = {roundtrip:.16e}");
            println!("automorphism_discrepancy = {:.16e}", direct.max_discrepancy);
            let bound = env.tol.unwrap_or(1e-8);
            println!("bound = {bound:.16e}");
            Ok(roundtrip <= bound)
        }
        Command::CheckSpray { spray, samples } => {
            let space = env.space_or(|| Ok(ModelSpace::default_grid()))?;
            let spray = build_spray(spray, &space)?;
            let mut rng = env.rng();
            let dim = space.dim();
            let draws: Vec<(Vector, Vector)> = (0..*samples)
                .map(|_| {
                    let x = Vector((0..dim).map(|_| rng.symmetric()).collect());
                    let v = Vector((0..dim).map(|_| rng.symmetric()).collect());
                    (x, v)
                })
                .collect();
            let report = check_homogeneity(&spray, &draws, &HOMOGENEITY_SCALES);
            println!("spray = {}", spray.label());
            println!("samples = {}", report.samples);
            println!("max_relative_error = {:.16e}", report.max_relative_error);
            let bound = env.tol.unwrap_or(1e-10);
            println!("bound = {bound:.16e}");
            Ok(report.max_relative_error <= bound)
        }
    }
}

fn reproduce(env: &Env, target: &str) -> Result<bool> {
    let opts = RunOptions {
        seed: env.seed,
        out_dir: env.out_dir.clone(),
        schedule: env.sched,
        violation_threshold: None,
    };
    let reports = if target == "all" {
        run_all(&opts)?.0
    } else {
        vec![run_example(target, &opts)?]
    };
    println!(
        "{:<18} {:<34} {:<26} {:<26} status",
        "example", "check", "got", "expected"
    );
    let mut all_pass = true;
    for report in &reports {
        for row in report.table_rows() {
            println!("{row}");
        }
        all_pass &= report.pass();
    }
    let verdict = if all_pass { "PASS" } else { "FAIL" };
    println!("{} examples, overall {verdict}", reports.len());
    Ok(all_pass)
}
