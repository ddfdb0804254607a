//! Plain-text configuration: `key = value` lines with `#` comments. Covers
//! model-space construction, quotient schedules, and the small vector
//! grammar used to specify initial data on the command line.

use std::collections::BTreeMap;

use crate::cone::QuotientSchedule;
use crate::error::{Error, Result};
use crate::space::{GridSpec, ModelSpace, SeminormSpec, Vector};

/// Ordered key-value pairs from a config document. Duplicate keys are
/// rejected so a config cannot silently contradict itself.
#[derive(Clone, Debug, Default)]
pub struct KeyValues {
    pairs: BTreeMap<String, String>,
}

impl KeyValues {
    pub fn parse(text: &str) -> Result<KeyValues> {
        let mut pairs = BTreeMap::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                return Err(Error::Config(format!(
                    "line {}: expected 'key = value', got '{raw}'",
                    lineno + 1
                )));
            };
            let key = key.trim().to_string();
            let value = value.trim().to_string();
            if pairs.insert(key.clone(), value).is_some() {
                return Err(Error::Config(format!("duplicate key '{key}'")));
            }
        }
        Ok(KeyValues { pairs })
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.pairs.get(key).map(String::as_str)
    }

    fn f64_or(&self, key: &str, default: f64) -> Result<f64> {
        match self.get(key) {
            None => Ok(default),
            Some(s) => s
                .parse()
                .map_err(|_| Error::Config(format!("key '{key}': bad real '{s}'"))),
        }
    }

    fn usize_or(&self, key: &str, default: usize) -> Result<usize> {
        match self.get(key) {
            None => Ok(default),
            Some(s) => s
                .parse()
                .map_err(|_| Error::Config(format!("key '{key}': bad integer '{s}'"))),
        }
    }

    fn bool_or(&self, key: &str, default: bool) -> Result<bool> {
        match self.get(key) {
            None => Ok(default),
            Some("true") => Ok(true),
            Some("false") => Ok(false),
            Some(s) => Err(Error::Config(format!("key '{key}': bad bool '{s}'"))),
        }
    }
}

/// A seminorm token: `j<window>m<order>`, window in grid units ('pi'
/// allowed), e.g. j1m0, j2m1, jpim0.
pub fn parse_seminorm_token(token: &str) -> Result<SeminormSpec> {
    let rest = token
        .strip_prefix('j')
        .ok_or_else(|| Error::Config(format!("seminorm token '{token}' must start with 'j'")))?;
    let (win, ord) = rest
        .split_once('m')
        .ok_or_else(|| Error::Config(format!("seminorm token '{token}' is missing 'm'")))?;
    let window = if win == "pi" {
        std::f64::consts::PI
    } else {
        win.parse()
            .map_err(|_| Error::Config(format!("seminorm token '{token}': bad window")))?
    };
    let order = ord
        .parse()
        .map_err(|_| Error::Config(format!("seminorm token '{token}': bad order")))?;
    Ok(SeminormSpec::SupDerivative { window, order })
}

#[derive(Clone, Debug, PartialEq)]
pub enum SpaceConfig {
    Grid {
        min: f64,
        max: f64,
        step: f64,
        codomain: usize,
        periodic: bool,
        seminorms: Vec<SeminormSpec>,
        /// Product of two copies instead of the single grid.
        paired: bool,
    },
    Circle {
        n: usize,
        codomain: usize,
    },
    Sequences {
        n: usize,
    },
}

impl SpaceConfig {
    pub fn default_grid() -> SpaceConfig {
        SpaceConfig::Grid {
            min: -2.0,
            max: 2.0,
            step: 0.01,
            codomain: 1,
            periodic: false,
            seminorms: vec![
                SeminormSpec::SupDerivative { window: 1.0, order: 0 },
                SeminormSpec::SupDerivative { window: 2.0, order: 0 },
                SeminormSpec::SupDerivative { window: 1.0, order: 1 },
                SeminormSpec::SupDerivative { window: 2.0, order: 1 },
            ],
            paired: false,
        }
    }

    pub fn from_keys(keys: &KeyValues) -> Result<SpaceConfig> {
        match keys.get("kind").unwrap_or("grid") {
            "grid" | "grid-product" => {
                let seminorms = match keys.get("seminorms") {
                    None => match Self::default_grid() {
                        SpaceConfig::Grid { seminorms, .. } => seminorms,
                        _ => unreachable!(),
                    },
                    Some(tokens) => tokens
                        .split_whitespace()
                        .map(parse_seminorm_token)
                        .collect::<Result<Vec<_>>>()?,
                };
                Ok(SpaceConfig::Grid {
                    min: keys.f64_or("min", -2.0)?,
                    max: keys.f64_or("max", 2.0)?,
                    step: keys.f64_or("step", 0.01)?,
                    codomain: keys.usize_or("codomain", 1)?,
                    periodic: keys.bool_or("periodic", false)?,
                    seminorms,
                    paired: keys.get("kind") == Some("grid-product"),
                })
            }
            "circle" => Ok(SpaceConfig::Circle {
                n: keys.usize_or("n", 64)?,
                codomain: keys.usize_or("codomain", 1)?,
            }),
            "sequences" => Ok(SpaceConfig::Sequences {
                n: keys.usize_or("n", 16)?,
            }),
            other => Err(Error::Config(format!("unknown space kind '{other}'"))),
        }
    }

    pub fn build(&self) -> Result<ModelSpace> {
        match self {
            SpaceConfig::Grid {
                min,
                max,
                step,
                codomain,
                periodic,
                seminorms,
                paired,
            } => {
                let spec = GridSpec {
                    min: *min,
                    max: *max,
                    step: *step,
                    codomain_dim: *codomain,
                    periodic: *periodic,
                };
                let grid = ModelSpace::grid(spec, seminorms.clone())?;
                if *paired {
                    crate::space::product_space(grid.clone(), grid)
                } else {
                    Ok(grid)
                }
            }
            SpaceConfig::Circle { n, codomain } => ModelSpace::circle_grid(*n, *codomain),
            SpaceConfig::Sequences { n } => ModelSpace::sequences(*n),
        }
    }

    /// Echo the resolved configuration into a report section.
    pub fn echo(&self, section: &mut crate::report::Section) {
        match self {
            SpaceConfig::Grid {
                min,
                max,
                step,
                codomain,
                periodic,
                seminorms,
                paired,
            } => {
                section.put("kind", if *paired { "grid-product" } else { "grid" });
                section.put_f64("min", *min);
                section.put_f64("max", *max);
                section.put_f64("step", *step);
                section.put("codomain", codomain);
                section.put("periodic", periodic);
                let tokens = seminorms
                    .iter()
                    .map(|s| match s {
                        SeminormSpec::SupDerivative { window, order } => {
                            if (*window - std::f64::consts::PI).abs() < 1e-12 {
                                format!("jpim{order}")
                            } else {
                                format!("j{window}m{order}")
                            }
                        }
                        SeminormSpec::Coordinate { index } => format!("c{index}"),
                    })
                    .collect::<Vec<_>>()
                    .join(" ");
                section.put("seminorms", tokens);
            }
            SpaceConfig::Circle { n, codomain } => {
                section.put("kind", "circle");
                section.put("n", n);
                section.put("codomain", codomain);
            }
            SpaceConfig::Sequences { n } => {
                section.put("kind", "sequences");
                section.put("n", n);
            }
        }
    }
}

/// `t0,ratio,K` with the default thresholds.
pub fn parse_schedule(text: &str) -> Result<QuotientSchedule> {
    let parts: Vec<&str> = text.split(',').map(str::trim).collect();
    if parts.len() != 3 {
        return Err(Error::Config(format!(
            "schedule '{text}' must be t0,ratio,K"
        )));
    }
    let t0: f64 = parts[0]
        .parse()
        .map_err(|_| Error::Config(format!("schedule t0 '{}' is not a real", parts[0])))?;
    let ratio: f64 = parts[1]
        .parse()
        .map_err(|_| Error::Config(format!("schedule ratio '{}' is not a real", parts[1])))?;
    let steps: usize = parts[2]
        .parse()
        .map_err(|_| Error::Config(format!("schedule K '{}' is not an integer", parts[2])))?;
    let sched = QuotientSchedule::with_steps(t0, ratio, steps);
    sched.validate()?;
    Ok(sched)
}

/// Initial-data grammar for the CLI:
///   zero                     the zero vector
///   const:c[,c2,c3]          constant function (per codomain component)
///   bump:center,width[,amp]  smooth bump on a scalar grid
///   fourier:a0[,a1,b1,...]   trigonometric polynomial on a scalar grid
///   loop:psi                 constant loop at angle psi on the equator
///   looptan:psi,omega        constant equator-tangent loop, speed omega
///   raw:v0,v1,...            explicit coordinates (dimension-checked)
pub fn parse_vector(space: &ModelSpace, spec: &str) -> Result<Vector> {
    let (form, args) = match spec.split_once(':') {
        Some((f, a)) => (f, a),
        None => (spec, ""),
    };
    let reals = || -> Result<Vec<f64>> {
        args.split(',')
            .filter(|s| !s.trim().is_empty())
            .map(|s| {
                s.trim()
                    .parse::<f64>()
                    .map_err(|_| Error::Config(format!("bad real '{s}' in '{spec}'")))
            })
            .collect()
    };
    match form {
        "zero" => Ok(Vector::zeros(space.dim())),
        "const" => {
            let c = reals()?;
            let grid = space
                .grid_spec()
                .ok_or_else(|| Error::Config("const needs a grid space".into()))?;
            if c.len() != grid.codomain_dim {
                return Err(Error::Config(format!(
                    "const needs {} components, got {}",
                    grid.codomain_dim,
                    c.len()
                )));
            }
            if grid.codomain_dim == 1 {
                space.sample_scalar(|_| c[0])
            } else {
                space.sample_r3(|_| [c[0], c[1], c[2]])
            }
        }
        "bump" => {
            let a = reals()?;
            if a.len() < 2 || a.len() > 3 {
                return Err(Error::Config("bump needs center,width[,amp]".into()));
            }
            let amp = a.get(2).copied().unwrap_or(1.0);
            let base = crate::sampler::bump_on_grid(space, a[0], a[1])?;
            Ok(base.scaled(amp))
        }
        "fourier" => {
            let a = reals()?;
            if a.is_empty() {
                return Err(Error::Config("fourier needs at least a0".into()));
            }
            space.sample_scalar(|th| {
                let mut acc = a[0];
                let mut k = 1usize;
                let mut i = 1usize;
                while i < a.len() {
                    acc += a[i] * (k as f64 * th).cos();
                    if i + 1 < a.len() {
                        acc += a[i + 1] * (k as f64 * th).sin();
                    }
                    i += 2;
                    k += 1;
                }
                acc
            })
        }
        "loop" => {
            let a = reals()?;
            if a.len() != 1 {
                return Err(Error::Config("loop needs one angle".into()));
            }
            let (s, c) = a[0].sin_cos();
            space.sample_r3(|_| [c, s, 0.0])
        }
        "looptan" => {
            let a = reals()?;
            if a.len() != 2 {
                return Err(Error::Config("looptan needs psi,omega".into()));
            }
            let (s, c) = a[0].sin_cos();
            space.sample_r3(|_| [-a[1] * s, a[1] * c, 0.0])
        }
        "raw" => {
            let v = Vector(reals()?);
            if v.dim() != space.dim() {
                return Err(Error::Config(format!(
                    "raw vector has {} coordinates, space needs {}",
                    v.dim(),
                    space.dim()
                )));
            }
            Ok(v)
        }
        other => Err(Error::Config(format!("unknown vector form '{other}'"))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn key_values_parse_and_reject_duplicates() {
        let kv = KeyValues::parse("a = 1\n# note\nb = x y  # trailing\n").unwrap();
        assert_eq!(kv.get("a"), Some("1"));
        assert_eq!(kv.get("b"), Some("x y"));
        assert!(KeyValues::parse("a = 1\na = 2\n").is_err());
        assert!(KeyValues::parse("just words\n").is_err());
    }

    #[test]
    fn grid_config_round_trips_the_default_space() {
        let kv = KeyValues::parse("kind = grid\n").unwrap();
        let cfg = SpaceConfig::from_keys(&kv).unwrap();
        assert_eq!(cfg, SpaceConfig::default_grid());
        let space = cfg.build().unwrap();
        assert_eq!(space.dim(), 401);
        assert_eq!(space.seminorm_count(), 4);
    }

    #[test]
    fn explicit_grid_keys_override_defaults() {
        let text = "kind = grid\nmin = -1\nmax = 1\nstep = 0.1\nseminorms = j1m0 j0.5m1\n";
        let cfg = SpaceConfig::from_keys(&KeyValues::parse(text).unwrap()).unwrap();
        let space = cfg.build().unwrap();
        assert_eq!(space.dim(), 21);
        assert_eq!(space.seminorm_count(), 2);
    }

    #[test]
    fn circle_and_sequence_kinds_build() {
        let circle = SpaceConfig::from_keys(
            &KeyValues::parse("kind = circle\nn = 32\ncodomain = 3\n").unwrap(),
        )
        .unwrap();
        assert_eq!(circle.build().unwrap().dim(), 96);
        let seqs =
            SpaceConfig::from_keys(&KeyValues::parse("kind = sequences\nn = 8\n").unwrap())
                .unwrap();
        assert_eq!(seqs.build().unwrap().dim(), 8);
    }

    #[test]
    fn paired_grid_builds_the_product() {
        let cfg =
            SpaceConfig::from_keys(&KeyValues::parse("kind = grid-product\n").unwrap()).unwrap();
        let space = cfg.build().unwrap();
        assert_eq!(space.dim(), 802);
        assert_eq!(space.factors().len(), 2);
    }

    #[test]
    fn seminorm_tokens_parse() {
        assert_eq!(
            parse_seminorm_token("j1m0").unwrap(),
            SeminormSpec::SupDerivative { window: 1.0, order: 0 }
        );
        assert_eq!(
            parse_seminorm_token("jpim1").unwrap(),
            SeminormSpec::SupDerivative {
                window: std::f64::consts::PI,
                order: 1
            }
        );
        assert!(parse_seminorm_token("k1m0").is_err());
        assert!(parse_seminorm_token("j1").is_err());
    }

    #[test]
    fn schedule_string_parses_and_validates() {
        let sched = parse_schedule("0.1, 0.5, 14").unwrap();
        assert_eq!(sched.steps, 14);
        assert!(parse_schedule("0.1,0.5").is_err());
        assert!(parse_schedule("0.1,1.5,14").is_err());
    }

    #[test]
    fn vector_grammar_builds_initial_data() {
        let grid = ModelSpace::default_grid();
        assert_eq!(parse_vector(&grid, "zero").unwrap().sup_norm(), 0.0);
        let c = parse_vector(&grid, "const:0.75").unwrap();
        assert_eq!(c[0], 0.75);
        assert_eq!(c[400], 0.75);
        let b = parse_vector(&grid, "bump:0.8,0.5,2").unwrap();
        assert_eq!(b.sup_norm(), 2.0);

        let circle = ModelSpace::circle_grid(64, 3).unwrap();
        let p = parse_vector(&circle, "loop:0").unwrap();
        assert_eq!(p[0], 1.0);
        let t = parse_vector(&circle, "looptan:0,0.5").unwrap();
        assert_eq!(t[1], 0.5);

        let seqs = ModelSpace::sequences(4).unwrap();
        let r = parse_vector(&seqs, "raw:1,-2,0,3").unwrap();
        assert_eq!(r[1], -2.0);
        assert!(parse_vector(&seqs, "raw:1,2").is_err());
        assert!(parse_vector(&grid, "mystery:1").is_err());
    }

    mod parser_properties {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn arbitrary_text_errors_instead_of_panicking(s in ".{0,256}") {
                let _ = KeyValues::parse(&s);
                let _ = parse_schedule(&s);
                let _ = parse_seminorm_token(&s);
                let seqs = ModelSpace::sequences(4).unwrap();
                let _ = parse_vector(&seqs, &s);
            }

            #[test]
            fn schedule_strings_round_trip(
                t0 in 1e-3..1.0f64,
                ratio in 0.05..0.95f64,
                steps in 4usize..32,
            ) {
                let sched = parse_schedule(&format!("{t0},{ratio},{steps}")).unwrap();
                prop_assert_eq!(sched.steps, steps);
                prop_assert!((sched.t0 - t0).abs() <= 1e-12 * t0);
                prop_assert!((sched.ratio - ratio).abs() <= 1e-12);
                prop_assert!(sched.validate().is_ok());
            }

            #[test]
            fn seminorm_tokens_round_trip(window in 0.1..8.0f64, order in 0usize..4) {
                let spec = parse_seminorm_token(&format!("j{window}m{order}")).unwrap();
                prop_assert_eq!(
                    spec,
                    SeminormSpec::SupDerivative { window, order }
                );
            }
        }
    }
}
