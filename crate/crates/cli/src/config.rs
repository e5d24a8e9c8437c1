//! Scenario configuration files and the bundled presets.

use std::fs;
use std::path::{Path, PathBuf};

use reqcontract::{AgentParams, ModelError, OptimizerOptions, Scenario};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read `{path}`: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("cannot parse `{origin}`: {message}")]
    Parse { origin: String, message: String },
    #[error("{key}: {message}")]
    Invalid { key: String, message: String },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AgentConfig {
    pub a: f64,
    pub sigma: f64,
    pub c: f64,
    pub r: f64,
}

/// Optional overrides of [`OptimizerOptions`]; absent keys keep defaults.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OptimizerConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_restarts: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_iterations: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub feasibility_tolerance: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub convergence_tolerance: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub v0: f64,
    pub agents: Vec<AgentConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub optimizer: Option<OptimizerConfig>,
}

fn invalid(key: String, err: ModelError) -> ConfigError {
    let message = match err {
        ModelError::InvalidParameter { value, reason, .. } => format!("{reason} (got {value})"),
        other => other.to_string(),
    };
    ConfigError::Invalid { key, message }
}

impl ScenarioConfig {
    pub fn parse(text: &str, origin: &str) -> Result<Self, ConfigError> {
        toml::from_str(text).map_err(|e| ConfigError::Parse {
            origin: origin.to_string(),
            message: e.to_string(),
        })
    }

    /// Validates every field, naming the offending key path on failure.
    pub fn scenario(&self) -> Result<Scenario, ConfigError> {
        if !(self.v0.is_finite() && self.v0 >= 0.0) {
            return Err(ConfigError::Invalid {
                key: "v0".into(),
                message: format!("must be finite and >= 0 (got {})", self.v0),
            });
        }
        if self.agents.is_empty() {
            return Err(ConfigError::Invalid {
                key: "agents".into(),
                message: "need at least one agent".into(),
            });
        }
        let agents = self
            .agents
            .iter()
            .enumerate()
            .map(|(i, ag)| {
                AgentParams::new(ag.a, ag.sigma, ag.c, ag.r).map_err(|e| {
                    let field = match &e {
                        ModelError::InvalidParameter { field, .. } => *field,
                        _ => "",
                    };
                    invalid(format!("agents[{i}].{field}"), e)
                })
            })
            .collect::<Result<Vec<_>, _>>()?;
        Scenario::new(self.v0, agents).map_err(|e| invalid("scenario".into(), e))
    }

    pub fn optimizer_options(&self) -> Result<OptimizerOptions, ConfigError> {
        let mut opts = OptimizerOptions::default();
        if let Some(o) = &self.optimizer {
            if let Some(v) = o.n_restarts {
                opts.n_restarts = v;
            }
            if let Some(v) = o.max_iterations {
                opts.max_iterations = v;
            }
            if let Some(v) = o.feasibility_tolerance {
                opts.feasibility_tolerance = v;
            }
            if let Some(v) = o.convergence_tolerance {
                opts.convergence_tolerance = v;
            }
            if let Some(v) = o.seed {
                opts.seed = v;
            }
        }
        opts.validate().map_err(|e| {
            let field = match &e {
                ModelError::InvalidParameter { field, .. } => *field,
                _ => "",
            };
            invalid(format!("optimizer.{field}"), e)
        })?;
        Ok(opts)
    }
}

macro_rules! presets {
    ($($name:literal),* $(,)?) => {
        /// Twelve bundled scenarios: {hard, easy} x {low, high} cost x three sigmas.
        pub const PRESETS: &[(&str, &str)] = &[
            $(($name, include_str!(concat!("../presets/", $name, ".toml")))),*
        ];
    };
}

presets!(
    "hard_lowc_s005",
    "hard_lowc_s010",
    "hard_lowc_s020",
    "hard_highc_s005",
    "hard_highc_s010",
    "hard_highc_s020",
    "easy_lowc_s005",
    "easy_lowc_s010",
    "easy_lowc_s020",
    "easy_highc_s005",
    "easy_highc_s010",
    "easy_highc_s020",
);

pub fn preset(name: &str) -> Option<&'static str> {
    PRESETS.iter().find(|(n, _)| *n == name).map(|(_, t)| *t)
}

/// Loads a config from a file, falling back to a bundled preset name when no
/// such file exists.
pub fn load(arg: &Path) -> Result<ScenarioConfig, ConfigError> {
    if !arg.exists() {
        if let Some(text) = arg.to_str().and_then(preset) {
            return ScenarioConfig::parse(text, &format!("preset {}", arg.display()));
        }
    }
    let text = fs::read_to_string(arg).map_err(|source| ConfigError::Io {
        path: arg.to_path_buf(),
        source,
    })?;
    ScenarioConfig::parse(&text, &arg.display().to_string())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn all_presets_parse() {
        assert_eq!(PRESETS.len(), 12);
        for (name, text) in PRESETS {
            let cfg = ScenarioConfig::parse(text, name).unwrap();
            let s = cfg.scenario().unwrap();
            assert_eq!(s.n_agents(), 2);
            assert_eq!(cfg.optimizer_options().unwrap().n_restarts, 32);
        }
    }

    #[test]
    fn unknown_keys_rejected() {
        let text = "v0 = 1.0\n[[agents]]\na = 2.0\nsigma = 0.1\nc = 0.01\nr = 1.0\nextra = 3\n";
        assert!(matches!(ScenarioConfig::parse(text, "t"), Err(ConfigError::Parse { .. })));
        let text = "v0 = 1.0\nagents = []\n[optimizer]\nrestarts = 3\n";
        assert!(matches!(ScenarioConfig::parse(text, "t"), Err(ConfigError::Parse { .. })));
    }

    #[test]
    fn invalid_values_name_their_key() {
        let text = "v0 = 1.0\n[[agents]]\na = 2.0\nsigma = 0.1\nc = 0.01\nr = 1.0\n[[agents]]\na = 2.0\nsigma = -0.1\nc = 0.01\nr = 1.0\n";
        let err = ScenarioConfig::parse(text, "t").unwrap().scenario().unwrap_err();
        assert!(err.to_string().starts_with("agents[1].sigma:"), "{err}");

        let text = "v0 = 1.0\n[[agents]]\na = 2.0\nsigma = 0.1\nc = 0.01\nr = 1.0\n[optimizer]\nconvergence_tolerance = 0.0\n";
        let err = ScenarioConfig::parse(text, "t").unwrap().optimizer_options().unwrap_err();
        assert!(err.to_string().starts_with("optimizer.convergence_tolerance:"), "{err}");
    }

    #[test]
    fn overrides_apply() {
        let text = "v0 = 1.0\n[[agents]]\na = 2.0\nsigma = 0.1\nc = 0.01\nr = 1.0\n[optimizer]\nseed = 9\nn_restarts = 4\n";
        let o = ScenarioConfig::parse(text, "t").unwrap().optimizer_options().unwrap();
        assert_eq!((o.seed, o.n_restarts, o.max_iterations), (9, 4, 2000));
    }
}
