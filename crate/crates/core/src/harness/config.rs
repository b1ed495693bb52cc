use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sparse::EngineConfig;

/// Overrides of [`EngineConfig`] fields; unset fields keep their
/// dimension-dependent defaults.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EngineOverrides {
    pub lambda: Option<f64>,
    pub max_depth: Option<usize>,
    pub rings: Option<usize>,
    pub eta_target: Option<f64>,
    pub stopping_slack: Option<f64>,
    pub tail_tolerance: Option<f64>,
}

/// One experiment, as read from TOML.
///
/// ```toml
/// operator = "hilbert"
/// corpus = "all"
/// dim = 1
/// grid = 4096
/// seed = 42
/// out = "runs/hilbert"
///
/// [engine]
/// rings = 6
/// ```
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default = "default_operator")]
    pub operator: String,
    /// `"all"` or a comma-separated list of corpus member names.
    #[serde(default = "default_corpus")]
    pub corpus: String,
    #[serde(default = "default_dim")]
    pub dim: usize,
    /// Cells per axis; 0 picks the suite default.
    #[serde(default)]
    pub grid: usize,
    #[serde(default = "default_seed")]
    pub seed: u64,
    #[serde(default = "default_out")]
    pub out: PathBuf,
    #[serde(default)]
    pub engine: EngineOverrides,
}

fn default_operator() -> String {
    "hilbert".into()
}

fn default_corpus() -> String {
    "all".into()
}

fn default_dim() -> usize {
    1
}

fn default_seed() -> u64 {
    42
}

fn default_out() -> PathBuf {
    PathBuf::from("oscdom-out")
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            operator: default_operator(),
            corpus: default_corpus(),
            dim: default_dim(),
            grid: 0,
            seed: default_seed(),
            out: default_out(),
            engine: EngineOverrides::default(),
        }
    }
}

impl ExperimentConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let cfg: ExperimentConfig = toml::from_str(text).map_err(|e| Error::config("config", e.message().to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::config("config", format!("{}: {e}", path.display())))?;
        Self::from_toml_str(&text)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<()> {
        if !(1..=2).contains(&self.dim) {
            return Err(Error::config("dim", format!("{} is not 1 or 2", self.dim)));
        }
        if self.grid != 0 && (self.grid < 16 || !self.grid.is_power_of_two()) {
            return Err(Error::config("grid", format!("{} is not a power of two ≥ 16", self.grid)));
        }
        self.engine_config(self.dim)?;
        Ok(())
    }

    /// Cells per axis, or `fallback` when unset.
    pub fn grid_or(&self, fallback: usize) -> usize {
        if self.grid == 0 {
            fallback
        } else {
            self.grid
        }
    }

    /// Engine parameters for dimension `dim` with the overrides applied.
    pub fn engine_config(&self, dim: usize) -> Result<EngineConfig> {
        let mut c = EngineConfig::new(dim);
        let o = &self.engine;
        if let Some(v) = o.lambda {
            c.lambda = v;
        }
        if let Some(v) = o.max_depth {
            c.max_depth = v;
        }
        if let Some(v) = o.rings {
            c.rings = v;
        }
        if let Some(v) = o.eta_target {
            c.target_eta = v;
        }
        if let Some(v) = o.stopping_slack {
            c.stopping_slack = v;
        }
        if let Some(v) = o.tail_tolerance {
            c.tail_tolerance = v;
        }
        c.validate()?;
        Ok(c)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_and_defaults() {
        let c = ExperimentConfig::from_toml_str("operator = \"riesz1\"\ndim = 2\n[engine]\nrings = 3\n").unwrap();
        assert_eq!(c.operator, "riesz1");
        assert_eq!(c.seed, 42);
        let e = c.engine_config(2).unwrap();
        assert_eq!(e.rings, 3);
        assert_eq!(e.lambda, 1.0 / 32.0);
        let back = ExperimentConfig::from_toml_str(&c.to_toml()).unwrap();
        assert_eq!(back, c);
    }

    #[test]
    fn bad_fields_name_themselves() {
        let e = ExperimentConfig::from_toml_str("dim = 3").unwrap_err();
        assert!(matches!(e, Error::Config { ref field, .. } if field == "dim"));
        let e = ExperimentConfig::from_toml_str("[engine]\nlambda = 2.0").unwrap_err();
        assert!(matches!(e, Error::LambdaOutOfRange(_)));
        assert!(ExperimentConfig::from_toml_str("colour = 1").is_err());
    }
}
