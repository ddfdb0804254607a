//! Samplers for initial data (x, v) with x in a candidate invariant set,
//! plus point-pair samplers for the geodesic-convexity check.
//!
//! Analytic samplers draw uniform coefficients over a set's natural
//! parameters (bump dictionaries, constants, Fourier coefficients, stratum
//! coordinates). A numeric sampler wraps any proposal distribution with the
//! admissibility test and resamples until it passes.

use std::sync::Arc;

use crate::cone::{admissible, QuotientSchedule, Verdict};
use crate::error::{Error, Result};
use crate::oracle::OracleRef;
use crate::rng::SplitMix64;
use crate::space::{ModelSpace, Vector};
use crate::spray::Spray;

pub type SampleFn = Arc<dyn Fn(&mut SplitMix64) -> (Vector, Vector) + Send + Sync>;

enum Mode {
    Analytic,
    Numeric {
        spray: Spray,
        oracle: OracleRef,
        sched: QuotientSchedule,
        max_attempts: usize,
    },
}

pub struct AdmissibleSampler {
    label: String,
    draw: SampleFn,
    mode: Mode,
}

impl AdmissibleSampler {
    pub fn analytic(label: &str, draw: SampleFn) -> AdmissibleSampler {
        AdmissibleSampler {
            label: label.to_string(),
            draw,
            mode: Mode::Analytic,
        }
    }

    /// Resamples the proposal until the admissibility verdict is Member.
    pub fn numeric(
        label: &str,
        proposal: SampleFn,
        spray: Spray,
        oracle: OracleRef,
        sched: QuotientSchedule,
    ) -> AdmissibleSampler {
        AdmissibleSampler {
            label: label.to_string(),
            draw: proposal,
            mode: Mode::Numeric {
                spray,
                oracle,
                sched,
                max_attempts: 64,
            },
        }
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn sample(&self, rng: &mut SplitMix64) -> Result<(Vector, Vector)> {
        match &self.mode {
            Mode::Analytic => Ok((self.draw)(rng)),
            Mode::Numeric {
                spray,
                oracle,
                sched,
                max_attempts,
            } => {
                for _ in 0..*max_attempts {
                    let (x, v) = (self.draw)(rng);
                    match admissible(spray, oracle.as_ref(), &x, &v, sched) {
                        Ok(cv) if cv.verdict == Verdict::Member => return Ok((x, v)),
                        Ok(_) | Err(Error::NotInSet { .. }) => continue,
                        Err(e) => return Err(e),
                    }
                }
                Err(Error::SamplerExhausted {
                    label: self.label.clone(),
                    attempts: *max_attempts,
                })
            }
        }
    }
}

/// Point pairs (p, q) inside a set, for two-point geodesic checks.
pub struct PairSampler {
    label: String,
    draw: SampleFn,
}

impl PairSampler {
    pub fn new(label: &str, draw: SampleFn) -> Self {
        PairSampler {
            label: label.to_string(),
            draw,
        }
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn sample(&self, rng: &mut SplitMix64) -> (Vector, Vector) {
        (self.draw)(rng)
    }
}

/// Peak-one smooth bump supported in (center - width/2, center + width/2),
/// sampled on the grid.
pub fn bump_on_grid(space: &ModelSpace, center: f64, width: f64) -> Result<Vector> {
    space.sample_scalar(|x| {
        let u = 2.0 * (x - center) / width;
        if u.abs() < 1.0 {
            (1.0 - 1.0 / (1.0 - u * u)).exp()
        } else {
            0.0
        }
    })
}

const BUMP_CENTERS: [f64; 4] = [0.4, 0.8, 1.2, 1.6];
const BUMP_WIDTH: f64 = 0.35;

fn one_sided_dictionary(space: &ModelSpace, positive: bool) -> Result<Vec<Vector>> {
    BUMP_CENTERS
        .iter()
        .map(|&c| bump_on_grid(space, if positive { c } else { -c }, BUMP_WIDTH))
        .collect()
}

fn mix(dict: &[Vector], rng: &mut SplitMix64, amplitude: f64) -> Vector {
    let mut out = Vector::zeros(dict[0].dim());
    for b in dict {
        out = out.add_scaled(amplitude * rng.symmetric(), b);
    }
    out
}

/// (f, v) with both functions supported strictly on one common side of 0;
/// the side flips randomly per draw.
pub fn half_support_pairs(space: &ModelSpace) -> Result<AdmissibleSampler> {
    let plus = one_sided_dictionary(space, true)?;
    let minus = one_sided_dictionary(space, false)?;
    Ok(AdmissibleSampler::analytic(
        "half-support-one-sided",
        Arc::new(move |rng| {
            let dict = if rng.below(2) == 0 { &plus } else { &minus };
            (mix(dict, rng, 1.0), mix(dict, rng, 1.0))
        }),
    ))
}

/// The probe pair for the perturbed spray: base supported in (0, 2) and a
/// velocity bump of width delta straddling 0, which meets the support of
/// the perturbation functional.
pub fn two_sided_probe(space: &ModelSpace, delta: f64) -> Result<(Vector, Vector)> {
    let f = bump_on_grid(space, 0.8, 0.5)?;
    let v = bump_on_grid(space, 0.0, delta)?;
    Ok((f, v))
}

/// Randomized variant of the probe: random one-sided base, fixed two-sided
/// velocity bump.
pub fn probe_pairs(space: &ModelSpace, delta: f64) -> Result<AdmissibleSampler> {
    let dict = one_sided_dictionary(space, true)?;
    let v = bump_on_grid(space, 0.0, delta)?;
    Ok(AdmissibleSampler::analytic(
        "half-support-two-sided-probe",
        Arc::new(move |rng| {
            let mut f = mix(&dict, rng, 0.5);
            f = f.add_scaled(1.0, &dict[1]);
            (f, v.clone())
        }),
    ))
}

/// (x, v) both constant functions.
pub fn constant_pairs(space: &ModelSpace) -> Result<AdmissibleSampler> {
    let ones = space.sample_scalar(|_| 1.0)?;
    Ok(AdmissibleSampler::analytic(
        "constants",
        Arc::new(move |rng| (ones.scaled(rng.symmetric()), ones.scaled(rng.symmetric()))),
    ))
}

/// Constant base point with a velocity that is genuinely non-constant: a
/// two-sided bump mix kept away from the constants by at least min_residual
/// in sup norm over the widest window.
pub fn constant_ambient(space: &ModelSpace, min_residual: f64) -> Result<AdmissibleSampler> {
    let ones = space.sample_scalar(|_| 1.0)?;
    let mut dict = one_sided_dictionary(space, true)?;
    dict.extend(one_sided_dictionary(space, false)?);
    Ok(AdmissibleSampler::analytic(
        "constants-ambient",
        Arc::new(move |rng| {
            let x = ones.scaled(rng.symmetric());
            loop {
                let v = mix(&dict, rng, 1.0);
                let lo = v.as_slice().iter().cloned().fold(f64::INFINITY, f64::min);
                let hi = v.as_slice().iter().cloned().fold(f64::NEG_INFINITY, f64::max);
                if (hi - lo) / 2.0 >= min_residual {
                    return (x, v);
                }
            }
        }),
    ))
}

fn section_dictionary(space: &ModelSpace) -> Result<Vec<Vector>> {
    Ok(vec![
        space.sample_scalar(|_| 1.0)?,
        space.sample_scalar(|x| x)?,
        space.sample_scalar(|x| x * x)?,
    ])
}

/// Points ((h, h^2), 0) on the parabola graph with the zero vector. The
/// space must be the product of two identical scalar grids.
pub fn parabola_zero_section(space: &ModelSpace) -> Result<AdmissibleSampler> {
    let grid = space.factors()[0].clone();
    let dict = section_dictionary(&grid)?;
    Ok(AdmissibleSampler::analytic(
        "parabola-zero-section",
        Arc::new(move |rng| {
            let h = mix(&dict, rng, 0.3);
            let h_sq = Vector(h.as_slice().iter().map(|a| a * a).collect());
            let x = Vector::concat(&[&h, &h_sq]);
            let v = Vector::zeros(x.dim());
            (x, v)
        }),
    ))
}

/// Points ((h, h^2), (u, 2hu)): base on the parabola graph, velocity in its
/// tangent space.
pub fn parabola_tangent_pairs(space: &ModelSpace) -> Result<AdmissibleSampler> {
    let grid = space.factors()[0].clone();
    let dict = section_dictionary(&grid)?;
    Ok(AdmissibleSampler::analytic(
        "parabola-tangent",
        Arc::new(move |rng| {
            let h = mix(&dict, rng, 0.3);
            let u = mix(&dict, rng, 0.3);
            let h_sq = Vector(h.as_slice().iter().map(|a| a * a).collect());
            let hu2 = Vector(
                h.as_slice()
                    .iter()
                    .zip(u.as_slice())
                    .map(|(a, b)| 2.0 * a * b)
                    .collect(),
            );
            (Vector::concat(&[&h, &h_sq]), Vector::concat(&[&u, &hu2]))
        }),
    ))
}

fn fourier_dictionary(space: &ModelSpace, degree: usize) -> Result<Vec<Vector>> {
    let mut dict = vec![space.sample_scalar(|_| 1.0)?];
    for k in 1..=degree {
        dict.push(space.sample_scalar(|th| (k as f64 * th).cos())?);
        dict.push(space.sample_scalar(|th| (k as f64 * th).sin())?);
    }
    Ok(dict)
}

/// (x, v) both trigonometric polynomials of degree at most `degree`.
pub fn fourier_pairs(space: &ModelSpace, degree: usize) -> Result<AdmissibleSampler> {
    let dict = fourier_dictionary(space, degree)?;
    Ok(AdmissibleSampler::analytic(
        &format!("fourier-span:{degree}"),
        Arc::new(move |rng| (mix(&dict, rng, 1.0), mix(&dict, rng, 1.0))),
    ))
}

/// In-span base point with a velocity carrying a guaranteed out-of-span
/// harmonic of degree `degree + 2`.
pub fn fourier_ambient(space: &ModelSpace, degree: usize) -> Result<AdmissibleSampler> {
    let dict = fourier_dictionary(space, degree)?;
    let alien = space.sample_scalar(|th| ((degree + 2) as f64 * th).cos())?;
    Ok(AdmissibleSampler::analytic(
        &format!("fourier-ambient:{degree}"),
        Arc::new(move |rng| {
            let x = mix(&dict, rng, 1.0);
            let amp = (0.3 + rng.unit()) * if rng.below(2) == 0 { 1.0 } else { -1.0 };
            let v = mix(&dict, rng, 0.5).add_scaled(amp, &alien);
            (x, v)
        }),
    ))
}

pub(crate) fn plane_basis(normal: [f64; 3]) -> ([f64; 3], [f64; 3], [f64; 3]) {
    let norm = (normal[0].powi(2) + normal[1].powi(2) + normal[2].powi(2)).sqrt();
    let n = [normal[0] / norm, normal[1] / norm, normal[2] / norm];
    let seed = if n[0].abs() <= n[1].abs() && n[0].abs() <= n[2].abs() {
        [1.0, 0.0, 0.0]
    } else if n[1].abs() <= n[2].abs() {
        [0.0, 1.0, 0.0]
    } else {
        [0.0, 0.0, 1.0]
    };
    let dot = seed[0] * n[0] + seed[1] * n[1] + seed[2] * n[2];
    let mut e1 = [seed[0] - dot * n[0], seed[1] - dot * n[1], seed[2] - dot * n[2]];
    let e1n = (e1[0].powi(2) + e1[1].powi(2) + e1[2].powi(2)).sqrt();
    for c in e1.iter_mut() {
        *c /= e1n;
    }
    let e2 = [
        n[1] * e1[2] - n[2] * e1[1],
        n[2] * e1[0] - n[0] * e1[2],
        n[0] * e1[1] - n[1] * e1[0],
    ];
    (n, e1, e2)
}

fn constant_loop(space: &ModelSpace, p: [f64; 3]) -> Vector {
    let spec = space.grid_spec().expect("loop space is grid backed");
    let mut v = Vector::zeros(space.dim());
    for i in 0..spec.n_points() {
        for c in 0..3 {
            v[i * 3 + c] = p[c];
        }
    }
    v
}

/// Constant loops p(psi) on the great circle with the given plane normal,
/// paired with constant tangent velocities omega * T(psi).
pub fn circle_loop_tangent_pairs(
    space: &ModelSpace,
    normal: [f64; 3],
) -> Result<AdmissibleSampler> {
    let (_, e1, e2) = plane_basis(normal);
    let space = space.clone();
    Ok(AdmissibleSampler::analytic(
        "circle-loop-tangent",
        Arc::new(move |rng| {
            let psi = rng.range(-std::f64::consts::PI, std::f64::consts::PI);
            let omega = rng.range(0.3, 1.5) * if rng.below(2) == 0 { 1.0 } else { -1.0 };
            let (s, c) = psi.sin_cos();
            let p = [
                c * e1[0] + s * e2[0],
                c * e1[1] + s * e2[1],
                c * e1[2] + s * e2[2],
            ];
            let t = [
                -s * e1[0] + c * e2[0],
                -s * e1[1] + c * e2[1],
                -s * e1[2] + c * e2[2],
            ];
            let x = constant_loop(&space, p);
            let v = constant_loop(&space, [omega * t[0], omega * t[1], omega * t[2]]);
            (x, v)
        }),
    ))
}

/// Constant loop on the circle with a velocity that has a guaranteed
/// component out of the circle's tangent line (along the plane normal),
/// while staying tangent to the sphere.
pub fn circle_loop_ambient(space: &ModelSpace, normal: [f64; 3]) -> Result<AdmissibleSampler> {
    let (n, e1, e2) = plane_basis(normal);
    let space = space.clone();
    Ok(AdmissibleSampler::analytic(
        "circle-loop-ambient",
        Arc::new(move |rng| {
            let psi = rng.range(-std::f64::consts::PI, std::f64::consts::PI);
            let (s, c) = psi.sin_cos();
            let p = [
                c * e1[0] + s * e2[0],
                c * e1[1] + s * e2[1],
                c * e1[2] + s * e2[2],
            ];
            let t = [
                -s * e1[0] + c * e2[0],
                -s * e1[1] + c * e2[1],
                -s * e1[2] + c * e2[2],
            ];
            let a = rng.symmetric();
            let b = (0.3 + rng.unit()) * if rng.below(2) == 0 { 1.0 } else { -1.0 };
            // a * T + b * n is tangent to the sphere at p but leaves TC.
            let w = [
                a * t[0] + b * n[0],
                a * t[1] + b * n[1],
                a * t[2] + b * n[2],
            ];
            (constant_loop(&space, p), constant_loop(&space, w))
        }),
    ))
}

/// (x, v) with x in the open stratum k (1-based: exactly k leading
/// coordinates active) and v in its closure span.
pub fn stratum_pairs(space: &ModelSpace, k: usize) -> Result<AdmissibleSampler> {
    let n = space.dim();
    if k == 0 || k > n {
        return Err(Error::Config(format!(
            "stratum index {k} out of range for {n} coordinates"
        )));
    }
    Ok(AdmissibleSampler::analytic(
        &format!("stratum:{k}"),
        Arc::new(move |rng| {
            let mut x = Vector::zeros(n);
            let mut v = Vector::zeros(n);
            for i in 0..k {
                x[i] = rng.symmetric();
                v[i] = rng.symmetric();
            }
            let sign = if rng.below(2) == 0 { 1.0 } else { -1.0 };
            x[k - 1] = sign * (0.2 + rng.unit());
            (x, v)
        }),
    ))
}

/// Pairs of constant functions for segment convexity.
pub fn constant_point_pairs(space: &ModelSpace) -> Result<PairSampler> {
    let ones = space.sample_scalar(|_| 1.0)?;
    Ok(PairSampler::new(
        "constants",
        Arc::new(move |rng| (ones.scaled(rng.symmetric()), ones.scaled(rng.symmetric()))),
    ))
}

/// Pairs of nearby constant loops on the great circle.
pub fn circle_point_pairs(space: &ModelSpace, normal: [f64; 3]) -> Result<PairSampler> {
    let (_, e1, e2) = plane_basis(normal);
    let space = space.clone();
    Ok(PairSampler::new(
        "circle-loops",
        Arc::new(move |rng| {
            let psi = rng.range(-std::f64::consts::PI, std::f64::consts::PI);
            let gap = rng.range(0.05, 0.6) * if rng.below(2) == 0 { 1.0 } else { -1.0 };
            let at = |a: f64| {
                let (s, c) = a.sin_cos();
                constant_loop(
                    &space,
                    [
                        c * e1[0] + s * e2[0],
                        c * e1[1] + s * e2[1],
                        c * e1[2] + s * e2[2],
                    ],
                )
            };
            (at(psi), at(psi + gap))
        }),
    ))
}
