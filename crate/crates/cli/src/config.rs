//! Versioned JSON run configuration.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use ulacov::estimators::SymMatrix;
use ulacov::harness::DEFAULT_MAX_GRADIENT_EVALS;
use ulacov::potentials::PotentialConfig;
use ulacov::sampler::Mode;
use ulacov::{Error, Result};

pub const SCHEMA_VERSION: u32 = 1;

/// Environment variable naming the default output directory.
pub const OUTPUT_DIR_ENV: &str = "ULACOV_OUTPUT_DIR";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub schema: u32,
    pub potential: PotentialConfig,
    /// Planner inputs; mutually exclusive with `chain`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub plan: Option<PlanSection>,
    /// Explicit sampler settings; mutually exclusive with `plan`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub chain: Option<ChainSection>,
    #[serde(default = "one")]
    pub replications: u64,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_cap")]
    pub max_gradient_evals: u128,
    #[serde(default)]
    pub record_wall_time: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reference_covariance: Option<SymMatrix>,
    #[serde(default)]
    pub outputs: OutputSection,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep: Option<SweepSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub compare: Option<CompareSection>,
}

fn one() -> u64 {
    1
}

fn default_cap() -> u128 {
    DEFAULT_MAX_GRADIENT_EVALS
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlanSection {
    pub mode: Mode,
    pub epsilon: f64,
    pub delta: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eta: Option<f64>,
    /// Scale on `n` (or `N`); 1 runs the certified plan.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub relax: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChainSection {
    pub mode: Mode,
    pub eta: f64,
    pub burn_in: u64,
    pub count: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub init: Option<Vec<f64>>,
    /// Enables coverage in the summary.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub epsilon: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dir: Option<PathBuf>,
    #[serde(default = "default_csv")]
    pub csv: PathBuf,
    #[serde(default = "default_summary")]
    pub summary: PathBuf,
}

impl Default for OutputSection {
    fn default() -> Self {
        OutputSection {
            dir: None,
            csv: default_csv(),
            summary: default_summary(),
        }
    }
}

fn default_csv() -> PathBuf {
    PathBuf::from("records.csv")
}

fn default_summary() -> PathBuf {
    PathBuf::from("summary.json")
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSection {
    pub eta: f64,
    pub burn_in: u64,
    pub n_grid: Vec<u64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CompareSection {
    pub epsilon: f64,
    pub delta: f64,
    pub gamma: f64,
}

fn bad(msg: impl Into<String>) -> Error {
    Error::Config(msg.into())
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)
            .map_err(|e| bad(format!("cannot read config {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self> {
        let cfg: RunConfig =
            serde_json::from_str(text).map_err(|e| bad(format!("invalid config: {e}")))?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Structural checks; numeric ranges are enforced by the library.
    pub fn validate(&self) -> Result<()> {
        if self.schema != SCHEMA_VERSION {
            return Err(bad(format!(
                "unsupported schema {}, expected {SCHEMA_VERSION}",
                self.schema
            )));
        }
        if self.plan.is_some() && self.chain.is_some() {
            return Err(bad("config may contain `plan` or `chain`, not both"));
        }
        if self.replications == 0 {
            return Err(bad("replications must be at least 1"));
        }
        Ok(())
    }

    /// Output directory: flag, then config, then environment, then the working directory.
    pub fn output_dir(&self, flag: Option<&Path>) -> PathBuf {
        flag.map(Path::to_path_buf)
            .or_else(|| self.outputs.dir.clone())
            .or_else(|| std::env::var_os(OUTPUT_DIR_ENV).map(PathBuf::from))
            .unwrap_or_else(|| PathBuf::from("."))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"{
        "schema": 1,
        "potential": {"kind": "gaussian_iso", "alpha": 1.0, "dim": 1},
        "chain": {"mode": "single", "eta": 0.1, "burn_in": 10, "count": 100}
    }"#;

    #[test]
    fn minimal_config_defaults() {
        let c = RunConfig::parse(MINIMAL).unwrap();
        assert_eq!(c.replications, 1);
        assert_eq!(c.max_gradient_evals, DEFAULT_MAX_GRADIENT_EVALS);
        assert_eq!(c.outputs.csv, PathBuf::from("records.csv"));
        let back = RunConfig::parse(&serde_json::to_string(&c).unwrap()).unwrap();
        assert_eq!(back, c);
    }

    #[test]
    fn unknown_keys_and_versions_rejected() {
        let extra = MINIMAL.replacen("\"schema\": 1,", "\"schema\": 1, \"sead\": 3,", 1);
        assert!(RunConfig::parse(&extra).is_err());
        let v2 = MINIMAL.replacen("\"schema\": 1", "\"schema\": 2", 1);
        assert!(RunConfig::parse(&v2).is_err());
        let nested = MINIMAL.replacen("\"count\": 100", "\"count\": 100, \"n\": 5", 1);
        assert!(RunConfig::parse(&nested).is_err());
    }

    #[test]
    fn plan_and_chain_are_exclusive() {
        let both = MINIMAL.replacen(
            "\"chain\"",
            "\"plan\": {\"mode\": \"single\", \"epsilon\": 1.0, \"delta\": 0.1}, \"chain\"",
            1,
        );
        assert!(RunConfig::parse(&both).is_err());
    }
}
