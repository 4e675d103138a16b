//! Experiment configuration files.
//!
//! Each verb reads a flat TOML file. Unknown keys are rejected.

use std::ops::Range;
use std::path::Path;

use ringform::dynamics::SimConfig;
use ringform::linearization::DEFAULT_ZERO_TOL;
use ringform::search::SphereSearch;
use ringform::topology::RingGraph;
use serde::{Deserialize, Serialize};

use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Parity {
    Even,
    Odd,
}

impl Parity {
    pub fn of(n: usize) -> Self {
        if n.is_multiple_of(2) {
            Parity::Even
        } else {
            Parity::Odd
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EquilibriumConfig {
    pub n: usize,
    /// Angular step between consecutive agents, radians.
    pub alpha: f64,
    #[serde(default)]
    pub directed: bool,
    #[serde(default = "default_zero_tol")]
    pub zero_tol: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AuditConfig {
    pub n: usize,
    /// Must agree with `n` when given.
    #[serde(default)]
    pub parity: Option<Parity>,
    #[serde(default = "default_samples")]
    pub samples: usize,
    #[serde(default)]
    pub seed: u64,
    /// Finest lattice size used by the exact distance search.
    #[serde(default = "default_resolution")]
    pub resolution: usize,
}

fn default_zero_tol() -> f64 {
    DEFAULT_ZERO_TOL
}

fn default_samples() -> usize {
    1000
}

fn default_resolution() -> usize {
    SphereSearch::default().resolution
}

impl AuditConfig {
    pub fn search(&self) -> SphereSearch {
        SphereSearch {
            resolution: self.resolution,
            ..SphereSearch::default()
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum ExperimentSpec {
    Simulate(SimConfig),
    /// One run of `template` per seed; the template's own seed is ignored.
    Sweep {
        template: SimConfig,
        seeds: Range<u64>,
    },
    ClassifyEquilibrium(EquilibriumConfig),
    BoundAudit(AuditConfig),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verb {
    Simulate,
    Sweep,
    ClassifyEq,
    BoundAudit,
}

fn config_error(e: impl std::fmt::Display) -> CliError {
    CliError::Config(e.to_string())
}

impl ExperimentSpec {
    /// Parses the config text for `verb`. `seed` overrides the file's seed
    /// (the first seed for sweeps).
    pub fn parse(verb: Verb, text: &str, seed: Option<u64>) -> Result<Self, CliError> {
        let spec = match verb {
            Verb::Simulate => {
                let mut cfg: SimConfig = toml::from_str(text).map_err(config_error)?;
                if let Some(s) = seed {
                    cfg.seed = s;
                }
                ExperimentSpec::Simulate(cfg)
            }
            Verb::Sweep => {
                // a sweep file is a simulate file plus the number of seeds
                let mut table: toml::Table = toml::from_str(text).map_err(config_error)?;
                let count = match table.remove("seeds") {
                    Some(toml::Value::Integer(c)) if c > 0 => c as u64,
                    Some(other) => {
                        return Err(config_error(format!(
                            "seeds must be a positive integer, got {other}"
                        )))
                    }
                    None => return Err(config_error("sweep config needs a `seeds` count")),
                };
                let template: SimConfig = table.try_into().map_err(config_error)?;
                let start = seed.unwrap_or(template.seed);
                let end = start
                    .checked_add(count)
                    .ok_or_else(|| config_error("seed range overflows u64"))?;
                ExperimentSpec::Sweep {
                    template,
                    seeds: start..end,
                }
            }
            Verb::ClassifyEq => {
                if seed.is_some() {
                    return Err(config_error("classify-eq takes no seed"));
                }
                ExperimentSpec::ClassifyEquilibrium(toml::from_str(text).map_err(config_error)?)
            }
            Verb::BoundAudit => {
                let mut cfg: AuditConfig = toml::from_str(text).map_err(config_error)?;
                if let Some(s) = seed {
                    cfg.seed = s;
                }
                ExperimentSpec::BoundAudit(cfg)
            }
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn load(verb: Verb, path: &Path, seed: Option<u64>) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| config_error(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(verb, &text, seed)
    }

    pub fn validate(&self) -> Result<(), CliError> {
        match self {
            ExperimentSpec::Simulate(cfg) => cfg.validate().map_err(config_error),
            ExperimentSpec::Sweep { template, seeds } => {
                if seeds.is_empty() {
                    return Err(config_error("sweep seed range is empty"));
                }
                template.validate().map_err(config_error)
            }
            ExperimentSpec::ClassifyEquilibrium(cfg) => {
                RingGraph::new(cfg.n, cfg.directed).map_err(config_error)?;
                if cfg.directed {
                    return Err(config_error("classify-eq needs an undirected ring"));
                }
                if !cfg.alpha.is_finite() {
                    return Err(config_error("alpha must be finite"));
                }
                if !(cfg.zero_tol > 0.0 && cfg.zero_tol.is_finite()) {
                    return Err(config_error("zero_tol must be positive"));
                }
                Ok(())
            }
            ExperimentSpec::BoundAudit(cfg) => {
                RingGraph::undirected(cfg.n).map_err(config_error)?;
                if cfg.n < 3 {
                    return Err(config_error("bound-audit needs n >= 3"));
                }
                if let Some(p) = cfg.parity {
                    if p != Parity::of(cfg.n) {
                        return Err(config_error(format!(
                            "parity {p:?} does not match n = {}",
                            cfg.n
                        )));
                    }
                }
                if cfg.samples == 0 {
                    return Err(config_error("samples must be at least 1"));
                }
                if cfg.resolution < 32 {
                    return Err(config_error("resolution must be at least 32"));
                }
                Ok(())
            }
        }
    }
}
