//! Experiment reports and their JSON / CSV renderings.

use serde::Serialize;
use serde_json::{Map, Value};

use crate::config::{ExperimentConfig, ExperimentKind};

pub const SCHEMA_VERSION: u32 = 1;

/// One reported number with its Monte Carlo uncertainty. `stderr` is `None`
/// for exact reference values and for test outcomes such as p-values.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Statistic {
    pub name: String,
    pub value: f64,
    pub stderr: Option<f64>,
    pub samples: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct ExperimentReport {
    pub schema_version: u32,
    pub experiment: ExperimentKind,
    pub config: ExperimentConfig,
    pub statistics: Vec<Statistic>,
    /// Structured extras (grids, histograms, fits, kept trees).
    pub details: Map<String, Value>,
    /// Warnings such as `partial` or `insufficient-tail-samples:…`.
    pub flags: Vec<String>,
    /// Wall-clock figures and the worker count; excluded from any
    /// reproducibility comparison.
    pub timing: Map<String, Value>,
}

impl ExperimentReport {
    pub fn new(experiment: ExperimentKind, config: &ExperimentConfig) -> Self {
        Self {
            schema_version: SCHEMA_VERSION,
            experiment,
            config: config.clone(),
            statistics: Vec::new(),
            details: Map::new(),
            flags: Vec::new(),
            timing: Map::new(),
        }
    }

    pub fn push(&mut self, name: impl Into<String>, value: f64, stderr: Option<f64>, samples: usize) {
        self.statistics.push(Statistic {
            name: name.into(),
            value,
            stderr: stderr.filter(|s| s.is_finite()),
            samples,
        });
    }

    pub fn push_exact(&mut self, name: impl Into<String>, value: f64) {
        self.push(name, value, None, 0);
    }

    pub fn detail(&mut self, key: &str, value: impl Serialize) {
        self.details
            .insert(key.to_string(), serde_json::to_value(value).expect("serializable detail"));
    }

    pub fn time(&mut self, key: &str, value: impl Serialize) {
        self.timing
            .insert(key.to_string(), serde_json::to_value(value).expect("serializable timing"));
    }

    pub fn stat(&self, name: &str) -> Option<&Statistic> {
        self.statistics.iter().find(|s| s.name == name)
    }

    /// Value of a statistic; panics if absent, for use in tests and checks.
    pub fn value(&self, name: &str) -> f64 {
        self.stat(name)
            .unwrap_or_else(|| panic!("report has no statistic {name}"))
            .value
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    /// Same as [`Self::to_json`] without the timing object.
    pub fn to_json_without_timing(&self) -> String {
        let mut value = serde_json::to_value(self).expect("report serializes");
        value.as_object_mut().expect("object").remove("timing");
        serde_json::to_string_pretty(&value).expect("report serializes")
    }

    /// One row per statistic: `name,value,stderr,samples`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("name,value,stderr,samples\n");
        for s in &self.statistics {
            let stderr = s.stderr.map(|e| e.to_string()).unwrap_or_default();
            out.push_str(&format!("{},{},{},{}\n", s.name, s.value, stderr, s.samples));
        }
        out
    }
}
