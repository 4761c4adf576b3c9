//! Run configuration files.
//!
//! A config is a JSON object with `"schema": 1`. Unknown keys are rejected
//! everywhere. Relative paths are resolved against the config's directory.
//!
//! Randomness: every random choice (instance generation, δ-oracle noise,
//! curvature sampling) uses ChaCha8 seeded with `ChaCha8Rng::seed_from_u64`
//! on the seed given in the config, so traces are reproducible across
//! platforms.

use std::path::{Path, PathBuf};

use fw_core::oracles::InexactnessSpec;
use fw_core::problems::{ProblemSpec, StartSpec};
use fw_core::solver::{OtherBound, RunSettings, RunSpec, Tolerances};
use fw_core::steprules::StepRule;
use serde::{Deserialize, Serialize};

use crate::CliError;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputPaths {
    /// Trace CSV; defaults to `<config stem>.trace.csv` next to the config.
    #[serde(default)]
    pub trace: Option<PathBuf>,
    /// Summary JSON; defaults to `<config stem>.summary.json`.
    #[serde(default)]
    pub summary: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub schema: u32,
    pub problem: ProblemSpec,
    pub rule: StepRule,
    #[serde(default)]
    pub inexactness: InexactnessSpec,
    pub iters: usize,
    #[serde(default)]
    pub tolerances: Tolerances,
    #[serde(default)]
    pub prestart: bool,
    #[serde(default)]
    pub b_prior: Option<f64>,
    #[serde(default)]
    pub other_bound: OtherBound,
    #[serde(default)]
    pub start: StartSpec,
    #[serde(default)]
    pub output: OutputPaths,
}

impl RunConfig {
    /// Parses and validates a config. `base` resolves relative paths.
    pub fn parse(text: &str, origin: &str, base: &Path) -> Result<Self, CliError> {
        let mut cfg: RunConfig = serde_json::from_str(text).map_err(|e| {
            CliError::config(format!("{origin}:{}:{}: {}", e.line(), e.column(), strip_location(&e.to_string())))
        })?;
        if cfg.schema != SCHEMA_VERSION {
            return Err(CliError::config(format!(
                "{origin}: field `schema`: unsupported version {}, expected {SCHEMA_VERSION}",
                cfg.schema
            )));
        }
        let field = |name: &str, e: fw_core::Error| CliError::config(format!("{origin}: field `{name}`: {e}"));
        cfg.rule.validate().map_err(|e| field("rule", e))?;
        cfg.inexactness.validate().map_err(|e| field("inexactness", e))?;
        if let ProblemSpec::File { path } = &mut cfg.problem {
            *path = resolve(base, Path::new(path)).to_string_lossy().into_owned();
        }
        for p in [&mut cfg.output.trace, &mut cfg.output.summary].into_iter().flatten() {
            *p = resolve(base, p);
        }
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::config(format!("cannot read {}: {e}", path.display())))?;
        let base = path.parent().unwrap_or(Path::new("."));
        Self::parse(&text, &path.display().to_string(), base)
    }

    pub fn run_spec(&self) -> RunSpec {
        RunSpec {
            rule: self.rule.clone(),
            inexactness: self.inexactness,
            settings: RunSettings {
                iters: self.iters,
                tolerances: self.tolerances,
                prestart: self.prestart,
                b_prior: self.b_prior,
                other_bound: self.other_bound,
            },
        }
    }
}

fn resolve(base: &Path, p: &Path) -> PathBuf {
    if p.is_absolute() {
        p.to_path_buf()
    } else {
        base.join(p)
    }
}

/// serde_json appends " at line L column C"; the location is reported
/// separately.
fn strip_location(msg: &str) -> &str {
    msg.rfind(" at line ").map_or(msg, |i| &msg[..i])
}
