//! `--error` event strings.
//!
//! | string | meaning |
//! |---|---|
//! | `standard:a=3` | the standard error with syndrome 3; `a=all` (or no `a`) cycles through syndromes by trial |
//! | `coherent:seed=5` | a random superposition of all standard errors, reseeded per trial |
//! | `mixture:seed=5,terms=3` | a random mixture of up to 4 coherent errors |
//! | `mixture:file=m.json` | a fixed mixture read from a JSON list of `{probability, coefficients}` |
//! | `env:qubit=2,dim=2,seed=9` | a Haar-random interaction of qubit 2 with a `dim`-level environment |
//! | `env:qubit=all,v=identity` | an interaction that does nothing; `qubit=all` cycles qubits by trial |
//!
//! Omitted seeds fall back to the trial seed; omitted `dim` to `--env-dim`.

use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use anyhow::{anyhow, bail, Context};
use codeword::codes::QuantumCode;
use codeword::errors::{EnvironmentSpec, ErrorEvent, MixtureTerm, MAX_ENV_DIM};
use codeword::hilbert::{mix_seed, random_coefficients, seeded_rng};
use rand::Rng;

pub const MAX_MIXTURE_TERMS: usize = 4;

#[derive(Clone, Debug, PartialEq)]
pub enum ErrorSpec {
    Standard { syndrome: Option<usize> },
    Coherent { seed: Option<u64> },
    MixtureSeeded { seed: Option<u64>, terms: usize },
    MixtureFile { path: PathBuf, terms: Vec<MixtureTerm> },
    Environment { qubit: Option<usize>, dim: Option<usize>, seed: Option<u64>, identity: bool },
}

fn parse_pairs(body: &str) -> anyhow::Result<Vec<(String, String)>> {
    if body.is_empty() {
        return Ok(Vec::new());
    }
    body.split(',')
        .map(|kv| {
            let (k, v) = kv.split_once('=').ok_or_else(|| anyhow!("expected key=value, found `{kv}`"))?;
            Ok((k.trim().to_string(), v.trim().to_string()))
        })
        .collect()
}

fn number<T: FromStr>(key: &str, value: &str) -> anyhow::Result<T> {
    value.parse().map_err(|_| anyhow!("`{key}` must be a non-negative integer, found `{value}`"))
}

fn index_or_all(key: &str, value: &str) -> anyhow::Result<Option<usize>> {
    if value == "all" {
        Ok(None)
    } else {
        number(key, value).map(Some)
    }
}

fn reject_unknown(kind: &str, key: &str) -> anyhow::Error {
    anyhow!("unknown parameter `{key}` for `{kind}` errors")
}

/// Reads a mixture file: a JSON list of `{"probability": p, "coefficients": [[re, im], …]}`.
pub fn read_mixture_file(path: &std::path::Path) -> anyhow::Result<Vec<MixtureTerm>> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading mixture file {}", path.display()))?;
    serde_json::from_str(&text).with_context(|| format!("parsing mixture file {}", path.display()))
}

impl FromStr for ErrorSpec {
    type Err = anyhow::Error;

    fn from_str(s: &str) -> anyhow::Result<Self> {
        let (kind, body) = s.split_once(':').unwrap_or((s, ""));
        let pairs = parse_pairs(body).with_context(|| format!("in error event `{s}`"))?;
        let spec = match kind {
            "standard" => {
                let mut syndrome = None;
                for (k, v) in &pairs {
                    match k.as_str() {
                        "a" => syndrome = index_or_all(k, v)?,
                        _ => return Err(reject_unknown(kind, k)),
                    }
                }
                Self::Standard { syndrome }
            }
            "coherent" => {
                let mut seed = None;
                for (k, v) in &pairs {
                    match k.as_str() {
                        "seed" => seed = Some(number(k, v)?),
                        _ => return Err(reject_unknown(kind, k)),
                    }
                }
                Self::Coherent { seed }
            }
            "mixture" => {
                let (mut seed, mut terms, mut file) = (None, MAX_MIXTURE_TERMS, None);
                for (k, v) in &pairs {
                    match k.as_str() {
                        "seed" => seed = Some(number(k, v)?),
                        "terms" => terms = number(k, v)?,
                        "file" => file = Some(PathBuf::from(v)),
                        _ => return Err(reject_unknown(kind, k)),
                    }
                }
                match file {
                    Some(path) => {
                        if seed.is_some() {
                            bail!("`mixture` takes either `file` or `seed`, not both");
                        }
                        let terms = read_mixture_file(&path)?;
                        Self::MixtureFile { path, terms }
                    }
                    None => {
                        if !(1..=MAX_MIXTURE_TERMS).contains(&terms) {
                            bail!("`terms` must be in 1..={MAX_MIXTURE_TERMS}, got {terms}");
                        }
                        Self::MixtureSeeded { seed, terms }
                    }
                }
            }
            "env" => {
                let (mut qubit, mut dim, mut seed, mut identity) = (None, None, None, false);
                for (k, v) in &pairs {
                    match k.as_str() {
                        "qubit" => qubit = index_or_all(k, v)?,
                        "dim" => dim = Some(number(k, v)?),
                        "seed" => seed = Some(number(k, v)?),
                        "v" => {
                            identity = match v.as_str() {
                                "identity" => true,
                                "random" => false,
                                other => bail!("`v` must be identity or random, found `{other}`"),
                            }
                        }
                        _ => return Err(reject_unknown(kind, k)),
                    }
                }
                let spec = Self::Environment { qubit, dim, seed, identity };
                spec.validate_dims()?;
                spec
            }
            other => bail!("unknown error kind `{other}` (expected standard, coherent, mixture or env)"),
        };
        Ok(spec)
    }
}

impl fmt::Display for ErrorSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let opt = |x: Option<usize>| x.map_or("all".to_string(), |v| v.to_string());
        match self {
            Self::Standard { syndrome } => write!(f, "standard:a={}", opt(*syndrome)),
            Self::Coherent { seed: Some(s) } => write!(f, "coherent:seed={s}"),
            Self::Coherent { seed: None } => write!(f, "coherent"),
            Self::MixtureSeeded { seed, terms } => {
                write!(f, "mixture:")?;
                if let Some(s) = seed {
                    write!(f, "seed={s},")?;
                }
                write!(f, "terms={terms}")
            }
            Self::MixtureFile { path, .. } => write!(f, "mixture:file={}", path.display()),
            Self::Environment { qubit, dim, seed, identity } => {
                write!(f, "env:qubit={}", opt(*qubit))?;
                if let Some(d) = dim {
                    write!(f, ",dim={d}")?;
                }
                if let Some(s) = seed {
                    write!(f, ",seed={s}")?;
                }
                if *identity {
                    write!(f, ",v=identity")?;
                }
                Ok(())
            }
        }
    }
}

impl ErrorSpec {
    pub fn validate_dims(&self) -> anyhow::Result<()> {
        if let Self::Environment { dim: Some(d), .. } = self {
            if !(2..=MAX_ENV_DIM).contains(d) {
                bail!("environment dim must be in 2..={MAX_ENV_DIM}, got {d}");
            }
        }
        Ok(())
    }

    /// The concrete event for trial `t`. `trial_seed` is the per-trial seed
    /// derived from the run seed.
    pub fn event_for_trial(&self, code: &QuantumCode, env_dim: usize, trial_seed: u64, t: usize) -> anyhow::Result<ErrorEvent> {
        let seed_for = |own: Option<u64>| own.map_or(mix_seed(trial_seed, 1), |s| mix_seed(s, t as u64));
        let event = match self {
            Self::Standard { syndrome } => {
                ErrorEvent::Standard { syndrome: syndrome.unwrap_or(t % code.syndrome_count()) }
            }
            Self::Coherent { seed } => {
                let mut rng = seeded_rng(seed_for(*seed));
                ErrorEvent::Coherent { coefficients: random_coefficients(code.syndrome_count(), &mut rng) }
            }
            Self::MixtureSeeded { seed, terms } => {
                let mut rng = seeded_rng(seed_for(*seed));
                let count = rng.random_range(1..=*terms);
                let weights: Vec<f64> = (0..count).map(|_| rng.random_range(0.05..1.0)).collect();
                let total: f64 = weights.iter().sum();
                let terms = weights
                    .into_iter()
                    .map(|w| MixtureTerm {
                        probability: w / total,
                        coefficients: random_coefficients(code.syndrome_count(), &mut rng),
                    })
                    .collect();
                ErrorEvent::Mixture { terms }
            }
            Self::MixtureFile { terms, .. } => ErrorEvent::Mixture { terms: terms.clone() },
            Self::Environment { qubit, dim, seed, identity } => {
                let dim = dim.unwrap_or(env_dim);
                let model = if *identity {
                    EnvironmentSpec::Identity { dim }
                } else {
                    EnvironmentSpec::Seeded { dim, seed: seed_for(*seed) }
                };
                ErrorEvent::Environment { qubit: qubit.unwrap_or(t % code.n_physical()), model }
            }
        };
        event.validate(code).with_context(|| format!("error event `{self}` on trial {t}"))?;
        Ok(event)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use codeword::codes::{build_builtin, BuiltinCode};

    #[test]
    fn parses_documented_forms() {
        assert_eq!("standard:a=3".parse::<ErrorSpec>().unwrap(), ErrorSpec::Standard { syndrome: Some(3) });
        assert_eq!("standard".parse::<ErrorSpec>().unwrap(), ErrorSpec::Standard { syndrome: None });
        assert_eq!("coherent:seed=5".parse::<ErrorSpec>().unwrap(), ErrorSpec::Coherent { seed: Some(5) });
        assert_eq!(
            "env:qubit=2,dim=2,seed=9".parse::<ErrorSpec>().unwrap(),
            ErrorSpec::Environment { qubit: Some(2), dim: Some(2), seed: Some(9), identity: false }
        );
        assert_eq!(
            "mixture:seed=1,terms=2".parse::<ErrorSpec>().unwrap(),
            ErrorSpec::MixtureSeeded { seed: Some(1), terms: 2 }
        );
    }

    #[test]
    fn display_round_trips() {
        for s in ["standard:a=3", "standard:a=all", "coherent:seed=5", "mixture:seed=2,terms=4", "env:qubit=all,dim=4,seed=1,v=identity"] {
            let parsed: ErrorSpec = s.parse().unwrap();
            assert_eq!(parsed.to_string(), s);
            assert_eq!(parsed.to_string().parse::<ErrorSpec>().unwrap(), parsed);
        }
    }

    #[test]
    fn rejects_bad_parameters() {
        for s in ["laser", "standard:b=1", "standard:a=x", "env:dim=9", "env:v=maybe", "mixture:terms=5", "coherent:seed"] {
            assert!(s.parse::<ErrorSpec>().is_err(), "{s}");
        }
        assert!("mixture:file=/definitely/not/here.json".parse::<ErrorSpec>().is_err());
    }

    #[test]
    fn trial_events() {
        let p5 = build_builtin(BuiltinCode::Perfect5);
        let spec: ErrorSpec = "standard:a=99".parse().unwrap();
        assert!(spec.event_for_trial(&p5, 2, 0, 0).is_err());
        let spec: ErrorSpec = "standard".parse().unwrap();
        assert_eq!(spec.event_for_trial(&p5, 2, 0, 17).unwrap(), ErrorEvent::Standard { syndrome: 1 });
        let spec: ErrorSpec = "env".parse().unwrap();
        let ErrorEvent::Environment { qubit, model } = spec.event_for_trial(&p5, 3, 0, 7).unwrap() else { panic!() };
        assert_eq!(qubit, 2);
        assert!(matches!(model, EnvironmentSpec::Seeded { dim: 3, .. }));
        let spec: ErrorSpec = "coherent:seed=5".parse().unwrap();
        let a = spec.event_for_trial(&p5, 2, 11, 0).unwrap();
        let b = spec.event_for_trial(&p5, 2, 99, 0).unwrap();
        let c = spec.event_for_trial(&p5, 2, 11, 1).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
        let spec: ErrorSpec = "mixture:seed=3".parse().unwrap();
        let ErrorEvent::Mixture { terms } = spec.event_for_trial(&p5, 2, 0, 0).unwrap() else { panic!() };
        assert!((1..=4).contains(&terms.len()));
        assert!((terms.iter().map(|t| t.probability).sum::<f64>() - 1.0).abs() < 1e-12);
    }
}
