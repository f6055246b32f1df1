//! Run configuration.
//!
//! Configs are TOML: a `[scheme]` block (fixed parameters) or a `[preset]`
//! block (scaling family), an `[experiment]` block and an optional
//! `[output]` block. Unknown keys are rejected.

use std::path::{Path, PathBuf};

use keygraph::scaling::{PoolRule, ScalingPreset};
use keygraph::{validate_scheme, SchemeParams};
use serde::Deserialize;

use crate::CliError;

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub scheme: Option<SchemeBlock>,
    pub preset: Option<PresetBlock>,
    #[serde(default)]
    pub experiment: ExperimentBlock,
    #[serde(default)]
    pub output: OutputBlock,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SchemeBlock {
    pub classes: Option<usize>,
    pub probs: Vec<f64>,
    pub ring_sizes: Vec<u64>,
    pub pool_size: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PoolRuleName {
    Linear,
    Nlogn,
    Fixed,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PresetBlock {
    pub pool_rule: PoolRuleName,
    pub sigma: Option<f64>,
    pub pool_size: Option<u64>,
    pub ring_shape: Vec<f64>,
    pub probs: Vec<f64>,
    pub target_c: f64,
}

/// A single value or a list.
#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
pub enum OneOrMany<T> {
    One(T),
    Many(Vec<T>),
}

impl<T: Clone> OneOrMany<T> {
    pub fn to_vec(&self) -> Vec<T> {
        match self {
            OneOrMany::One(v) => vec![v.clone()],
            OneOrMany::Many(v) => v.clone(),
        }
    }
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentBlock {
    pub n: Option<u64>,
    pub n_grid: Option<Vec<u64>>,
    pub c_grid: Option<Vec<f64>>,
    pub trials: Option<u64>,
    pub master_seed: Option<u64>,
    pub beta: Option<f64>,
    pub gamma: Option<f64>,
    pub s: Option<OneOrMany<u64>>,
    /// Pool growth constant for the `P_n >= σ n` check.
    pub sigma: Option<f64>,
    /// Trial index for `dump-graph`.
    pub trial: Option<u64>,
    pub prefix_cap: Option<usize>,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    #[default]
    Csv,
    Jsonl,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputBlock {
    pub path: Option<PathBuf>,
    #[serde(default)]
    pub format: OutputFormat,
}

fn config_err(msg: impl Into<String>) -> CliError {
    CliError::Config(msg.into())
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| config_err(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self, CliError> {
        let config: RunConfig =
            toml::from_str(text).map_err(|e| config_err(format!("invalid config: {e}")))?;
        match (&config.scheme, &config.preset) {
            (Some(_), Some(_)) => Err(config_err(
                "exactly one of [scheme] and [preset] must be present, found both",
            )),
            (None, None) => Err(config_err(
                "exactly one of [scheme] and [preset] must be present, found neither",
            )),
            _ => Ok(config),
        }
    }

    pub fn master_seed(&self) -> u64 {
        self.experiment.master_seed.unwrap_or(0)
    }

    /// Fixed `n`: `experiment.n`, or the single entry of `n_grid`.
    pub fn fixed_n(&self) -> Result<u64, CliError> {
        if let Some(n) = self.experiment.n {
            return Ok(n);
        }
        match self.experiment.n_grid.as_deref() {
            Some([n]) => Ok(*n),
            _ => Err(config_err("experiment.n is required")),
        }
    }

    /// `n_grid`, or `[n]`.
    pub fn n_grid(&self) -> Result<Vec<u64>, CliError> {
        match (&self.experiment.n_grid, self.experiment.n) {
            (Some(grid), _) if !grid.is_empty() => Ok(grid.clone()),
            (_, Some(n)) => Ok(vec![n]),
            _ => Err(config_err(
                "experiment.n_grid (or experiment.n) is required",
            )),
        }
    }

    pub fn trials(&self) -> Result<u64, CliError> {
        match self.experiment.trials {
            Some(0) => Err(config_err("experiment.trials must be at least 1")),
            Some(t) => Ok(t),
            None => Err(config_err("experiment.trials is required")),
        }
    }

    pub fn preset(&self) -> Result<ScalingPreset, CliError> {
        let block = self
            .preset
            .as_ref()
            .ok_or_else(|| config_err("this command needs a [preset] block"))?;
        let rule = match block.pool_rule {
            PoolRuleName::Nlogn => PoolRule::NLogN,
            PoolRuleName::Linear => PoolRule::Linear {
                sigma: block.sigma.ok_or_else(|| {
                    config_err("preset.sigma is required for the linear pool rule")
                })?,
            },
            PoolRuleName::Fixed => PoolRule::Fixed {
                pool: block.pool_size.ok_or_else(|| {
                    config_err("preset.pool_size is required for the fixed pool rule")
                })?,
            },
        };
        ScalingPreset::new(
            rule,
            block.ring_shape.clone(),
            block.probs.clone(),
            block.target_c,
        )
        .map_err(|e| config_err(format!("invalid preset: {e}")))
    }

    /// Scheme parameters at node count `n`: the `[scheme]` block as given, or
    /// the preset instantiated at `n`.
    pub fn scheme_at(&self, n: u64) -> Result<SchemeParams, CliError> {
        if let Some(block) = &self.scheme {
            let classes = block.classes.unwrap_or(block.probs.len());
            return validate_scheme(classes, &block.probs, &block.ring_sizes, block.pool_size)
                .map_err(|e| config_err(format!("invalid scheme: {e}")));
        }
        let preset = self.preset()?;
        keygraph::scaling::instantiate(&preset, n).map_err(|e| match e {
            keygraph::Error::Infeasible { .. } => CliError::Infeasible(e.to_string()),
            other => config_err(format!("invalid preset: {other}")),
        })
    }
}
