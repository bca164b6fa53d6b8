//! Experiment orchestration: configs, seeded parallel trials and JSON reports.

mod config;
mod experiments;
mod identities;

pub use config::{Experiment, ExperimentConfig, CONFIG_SCHEMA};
pub use experiments::{mp_fixed_point_check, FixedPointCheck};
pub use identities::{check_matrix, identity_sweep, IdentityStat, IdentitySweep};

use std::cell::RefCell;
use std::collections::BTreeSet;
use std::path::Path;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::serde_ext::f64_or_sentinel;

/// Schema tag of the JSON report.
pub const REPORT_SCHEMA: &str = "rmtlab.report/1";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Comparison {
    AtMost,
    AtLeast,
    /// `threshold <= value <= upper`.
    Within,
}

/// One pass/fail verdict against a declared threshold.
#[derive(Debug, Clone, Serialize)]
pub struct Check {
    pub name: String,
    #[serde(serialize_with = "f64_or_sentinel")]
    pub value: f64,
    pub comparison: Comparison,
    pub threshold: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub upper: Option<f64>,
    pub passed: bool,
}

impl Check {
    pub fn at_most(name: impl Into<String>, value: f64, threshold: f64) -> Self {
        Check { name: name.into(), value, comparison: Comparison::AtMost, threshold, upper: None, passed: value <= threshold }
    }

    pub fn at_least(name: impl Into<String>, value: f64, threshold: f64) -> Self {
        Check { name: name.into(), value, comparison: Comparison::AtLeast, threshold, upper: None, passed: value >= threshold }
    }

    pub fn within(name: impl Into<String>, value: f64, lo: f64, hi: f64) -> Self {
        Check {
            name: name.into(),
            value,
            comparison: Comparison::Within,
            threshold: lo,
            upper: Some(hi),
            passed: value >= lo && value <= hi,
        }
    }
}

/// Result of [`run_experiment`].
#[derive(Debug, Clone, Serialize)]
pub struct RunReport {
    pub schema: &'static str,
    pub version: &'static str,
    pub config_schema: &'static str,
    pub config_hash: String,
    pub experiment: Experiment,
    pub config: ExperimentConfig,
    pub aggregates: serde_json::Value,
    pub checks: Vec<Check>,
    pub passed: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub per_trial: Option<serde_json::Value>,
    pub wall_time_seconds: f64,
}

impl RunReport {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    /// JSON with the wall time zeroed, for reproducibility comparisons.
    pub fn deterministic_json(&self) -> Result<String> {
        let mut r = self.clone();
        r.wall_time_seconds = 0.0;
        r.to_json()
    }

    pub fn check(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.name == name)
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json()? + "\n")?;
        Ok(())
    }
}

/// Threshold lookup that remembers which names an experiment consulted, so
/// overrides that match nothing can be rejected.
pub(crate) struct Thresholds<'a> {
    cfg: &'a ExperimentConfig,
    used: RefCell<BTreeSet<String>>,
}

impl<'a> Thresholds<'a> {
    fn new(cfg: &'a ExperimentConfig) -> Self {
        Thresholds { cfg, used: RefCell::new(BTreeSet::new()) }
    }

    pub(crate) fn get(&self, name: &str, default: f64) -> f64 {
        self.used.borrow_mut().insert(name.to_string());
        self.cfg.thresholds.get(name).copied().unwrap_or(default)
    }

    fn unused(&self) -> Option<String> {
        let used = self.used.borrow();
        self.cfg.thresholds.keys().find(|k| !used.contains(*k)).cloned()
    }
}

/// What an experiment body hands back to [`run_experiment`].
pub(crate) struct Outcome {
    pub aggregates: serde_json::Value,
    pub checks: Vec<Check>,
    pub per_trial: Option<serde_json::Value>,
}

/// Runs the experiment described by `cfg`, writing the report to
/// `cfg.output` when set. Trial `i` of each ensemble draws from
/// `derive_seed(sub_master, i)`; results are reduced in trial order.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<RunReport> {
    cfg.validate()?;
    let start = Instant::now();
    let th = Thresholds::new(cfg);
    let outcome = experiments::dispatch(cfg, &th)?;
    if let Some(name) = th.unused() {
        return Err(Error::config(
            format!("threshold.{name}"),
            format!("not a threshold of the {} experiment", cfg.experiment),
        ));
    }
    let passed = outcome.checks.iter().all(|c| c.passed);
    let report = RunReport {
        schema: REPORT_SCHEMA,
        version: env!("CARGO_PKG_VERSION"),
        config_schema: CONFIG_SCHEMA,
        config_hash: cfg.hash(),
        experiment: cfg.experiment,
        config: cfg.clone(),
        aggregates: outcome.aggregates,
        checks: outcome.checks,
        passed,
        per_trial: outcome.per_trial,
        wall_time_seconds: start.elapsed().as_secs_f64(),
    };
    if let Some(path) = &cfg.output {
        report.write(path)?;
    }
    Ok(report)
}
