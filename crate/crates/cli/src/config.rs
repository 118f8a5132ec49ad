//! Experiment configuration. A TOML file and command-line flags fill the same
//! [`ConfigLayer`]; flags override the file and defaults fill the rest.

use std::path::PathBuf;

use clap::{Args, ValueEnum};
use polya::enumerate::DEFAULT_ORDER;
use polya::DegreeSet;
use serde::{Deserialize, Serialize};

use crate::error::{HarnessError, Result};

pub const DEFAULT_MEAN_TOLERANCE: f64 = 0.07;
pub const DEFAULT_KS_THRESHOLD: f64 = 0.05;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentKind {
    Height,
    Tails,
    Structure,
    Uniformity,
    Bench,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    #[default]
    Exact,
    Window,
}

/// How copies of a subtree attached through a long cycle are produced.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum CopyMode {
    /// `ℓ` identical copies for a cycle of length `ℓ` (the correct sampler).
    #[default]
    Identical,
    /// One copy only; a deliberately broken sampler for audits.
    SingleCopy,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Format {
    #[default]
    Json,
    Csv,
}

/// One layer of settings; every field optional so layers can be merged.
#[derive(Debug, Clone, Default, Serialize, Deserialize, Args)]
#[serde(deny_unknown_fields)]
pub struct ConfigLayer {
    /// Degree set, e.g. `0,2` or `0,3+`.
    #[arg(long)]
    pub omega: Option<DegreeSet>,
    /// Target size.
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long)]
    pub samples: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long, value_enum)]
    pub mode: Option<Mode>,
    /// Relative half-width of the size window.
    #[arg(long)]
    pub epsilon: Option<f64>,
    #[arg(long)]
    pub workers: Option<usize>,
    /// Sizes for the benchmark sweep, comma separated.
    #[arg(long, value_delimiter = ',')]
    pub sizes: Option<Vec<usize>>,
    #[arg(long)]
    pub max_attempts: Option<u64>,
    /// Number of exact coefficients behind the numerics.
    #[arg(long)]
    pub coeffs: Option<usize>,
    #[arg(long, value_enum)]
    pub copy_mode: Option<CopyMode>,
    /// Largest accepted relative error of the scaled mean height.
    #[arg(long)]
    pub mean_tolerance: Option<f64>,
    /// Largest accepted Kolmogorov distance of the scaled height.
    #[arg(long)]
    pub ks_threshold: Option<f64>,
    /// Also write every sampled tree (Newick) into the report.
    #[arg(long)]
    #[serde(default)]
    pub keep_trees: bool,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub format: Option<Format>,
}

impl ConfigLayer {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| HarnessError::Config(e.to_string()))
    }

    /// `self` with every unset field taken from `lower`.
    pub fn over(self, lower: ConfigLayer) -> ConfigLayer {
        ConfigLayer {
            omega: self.omega.or(lower.omega),
            n: self.n.or(lower.n),
            samples: self.samples.or(lower.samples),
            seed: self.seed.or(lower.seed),
            mode: self.mode.or(lower.mode),
            epsilon: self.epsilon.or(lower.epsilon),
            workers: self.workers.or(lower.workers),
            sizes: self.sizes.or(lower.sizes),
            max_attempts: self.max_attempts.or(lower.max_attempts),
            coeffs: self.coeffs.or(lower.coeffs),
            copy_mode: self.copy_mode.or(lower.copy_mode),
            mean_tolerance: self.mean_tolerance.or(lower.mean_tolerance),
            ks_threshold: self.ks_threshold.or(lower.ks_threshold),
            keep_trees: self.keep_trees || lower.keep_trees,
            out: self.out.or(lower.out),
            format: self.format.or(lower.format),
        }
    }

    pub fn resolve(self) -> Result<ExperimentConfig> {
        let cfg = ExperimentConfig {
            omega: self
                .omega
                .ok_or_else(|| HarnessError::Config("missing degree set (omega)".into()))?,
            n: self.n.ok_or_else(|| HarnessError::Config("missing target size (n)".into()))?,
            samples: self.samples.unwrap_or(1000),
            seed: self.seed.unwrap_or(0),
            mode: self.mode.unwrap_or_default(),
            epsilon: self.epsilon,
            workers: self.workers.unwrap_or(1),
            sizes: self.sizes.unwrap_or_default(),
            max_attempts: self.max_attempts.unwrap_or(u64::MAX),
            coeffs: self.coeffs.unwrap_or(DEFAULT_ORDER),
            copy_mode: self.copy_mode.unwrap_or_default(),
            mean_tolerance: self.mean_tolerance.unwrap_or(DEFAULT_MEAN_TOLERANCE),
            ks_threshold: self.ks_threshold.unwrap_or(DEFAULT_KS_THRESHOLD),
            keep_trees: self.keep_trees,
            out: self.out,
            format: self.format.unwrap_or_default(),
        };
        cfg.validate()?;
        Ok(cfg)
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ExperimentConfig {
    pub omega: DegreeSet,
    pub n: usize,
    pub samples: usize,
    pub seed: u64,
    pub mode: Mode,
    pub epsilon: Option<f64>,
    /// Threads; results never depend on it.
    #[serde(skip)]
    pub workers: usize,
    pub sizes: Vec<usize>,
    pub max_attempts: u64,
    pub coeffs: usize,
    pub copy_mode: CopyMode,
    pub mean_tolerance: f64,
    pub ks_threshold: f64,
    pub keep_trees: bool,
    #[serde(skip)]
    pub out: Option<PathBuf>,
    #[serde(skip)]
    pub format: Format,
}

impl ExperimentConfig {
    pub fn new(omega: DegreeSet, n: usize, samples: usize, seed: u64) -> Self {
        Self {
            omega,
            n,
            samples,
            seed,
            mode: Mode::Exact,
            epsilon: None,
            workers: 1,
            sizes: Vec::new(),
            max_attempts: u64::MAX,
            coeffs: DEFAULT_ORDER,
            copy_mode: CopyMode::Identical,
            mean_tolerance: DEFAULT_MEAN_TOLERANCE,
            ks_threshold: DEFAULT_KS_THRESHOLD,
            keep_trees: false,
            out: None,
            format: Format::Json,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(HarnessError::Config(m));
        if self.samples == 0 {
            return bad("samples must be at least 1".into());
        }
        if self.n == 0 {
            return bad("target size must be at least 1".into());
        }
        if self.workers == 0 {
            return bad("workers must be at least 1".into());
        }
        if self.mode == Mode::Window {
            match self.epsilon {
                Some(e) if e > 0.0 && e < 1.0 => {}
                _ => return bad("window mode needs epsilon in (0, 1)".into()),
            }
        }
        if !(self.mean_tolerance > 0.0 && self.ks_threshold > 0.0) {
            return bad("tolerances must be positive".into());
        }
        if self.coeffs < 32 {
            return bad("at least 32 coefficients are needed".into());
        }
        Ok(())
    }

    /// Sizes swept by the benchmark: `sizes` if given, else just `n`.
    pub fn sweep(&self) -> Vec<usize> {
        if self.sizes.is_empty() {
            vec![self.n]
        } else {
            self.sizes.clone()
        }
    }
}
