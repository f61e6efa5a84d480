//! Run configuration for `loadbal replay`.
//!
//! ```toml
//! [scenario]
//! preset = "settling-box"   # or "hopper"
//! scale = 1.0               # (0, 1]
//! seed = 0
//! # steps = 4000            # default: the preset's duration
//! # block_size = 32
//! # diameter = 10.0
//!
//! [balance]
//! strategy = "hilbert"      # none | morton | hilbert | diffusive | refine
//! n_procs = 8
//! interval = 100
//! tolerance = 1.05
//! diffusive_iterations = 100
//! weight_floor = 1e-6
//!
//! [coefficients]
//! source = "builtin-table"  # or "fitted-from-file"
//! # path = "coefficients.toml"
//!
//! [evaluation]
//! loads = "predicted"       # or "synthesized"
//! noise_sigma = 0.05
//! seed = 0
//!
//! [output]
//! report = "report.csv"
//! # summary = "summary.toml"
//! ```
//!
//! Every key is optional. Unknown keys are rejected. Relative paths are
//! resolved against the directory holding the config file.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::distribution::DEFAULT_TOLERANCE;
use crate::error::{Error, Result};
use crate::estimator::{EstimatorCoefficients, DEFAULT_WEIGHT_FLOOR};
use crate::replay::{LoadSource, ReplayOptions, Strategy};
use crate::scenario::{build_preset, ScenarioConfig};

#[derive(Debug, Clone, PartialEq, Default, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub scenario: ScenarioSection,
    pub balance: BalanceSection,
    pub coefficients: CoefficientsSection,
    pub evaluation: EvaluationSection,
    pub output: OutputSection,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ScenarioSection {
    pub preset: String,
    pub scale: f64,
    pub seed: u64,
    pub steps: Option<u64>,
    pub block_size: Option<usize>,
    pub diameter: Option<f64>,
}

impl Default for ScenarioSection {
    fn default() -> Self {
        ScenarioSection {
            preset: "settling-box".into(),
            scale: 1.0,
            seed: 0,
            steps: None,
            block_size: None,
            diameter: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BalanceSection {
    pub strategy: String,
    pub n_procs: usize,
    pub interval: u64,
    pub tolerance: f64,
    pub diffusive_iterations: usize,
    pub weight_floor: f64,
}

impl Default for BalanceSection {
    fn default() -> Self {
        BalanceSection {
            strategy: "hilbert".into(),
            n_procs: 8,
            interval: 100,
            tolerance: DEFAULT_TOLERANCE,
            diffusive_iterations: 100,
            weight_floor: DEFAULT_WEIGHT_FLOOR,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CoefficientSource {
    #[default]
    BuiltinTable,
    FittedFromFile,
}

#[derive(Debug, Clone, PartialEq, Default, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CoefficientsSection {
    pub source: CoefficientSource,
    pub path: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LoadKind {
    #[default]
    Predicted,
    /// Noisy timings from the built-in coefficient table.
    Synthesized,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EvaluationSection {
    pub loads: LoadKind,
    pub noise_sigma: f64,
    pub seed: u64,
}

impl Default for EvaluationSection {
    fn default() -> Self {
        EvaluationSection {
            loads: LoadKind::Predicted,
            noise_sigma: 0.05,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputSection {
    pub report: PathBuf,
    pub summary: Option<PathBuf>,
}

impl Default for OutputSection {
    fn default() -> Self {
        OutputSection {
            report: "report.csv".into(),
            summary: None,
        }
    }
}

/// Command-line overrides of config keys.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub steps: Option<u64>,
    pub strategy: Option<String>,
    pub interval: Option<u64>,
}

/// Everything a replay needs, with paths resolved.
#[derive(Debug, Clone)]
pub struct ResolvedRun {
    pub scenario: ScenarioConfig,
    pub strategy: Strategy,
    pub options: ReplayOptions,
    pub report: PathBuf,
    pub summary: Option<PathBuf>,
}

/// A calibrated coefficient file as written by `loadbal calibrate`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CoefficientsFile {
    pub coefficients: EstimatorCoefficients,
    pub quality: Option<Quality>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ErrorSummary {
    pub median: f64,
    pub mad: f64,
}

/// Fit quality: median and MAD of the relative error per part and for the
/// total, plus the fraction of samples whose total error is below 10%.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Quality {
    pub samples: usize,
    pub fraction_within_10_percent: f64,
    pub lbm: ErrorSummary,
    pub bh: ErrorSummary,
    pub coup1: ErrorSummary,
    pub coup2: ErrorSummary,
    pub rb: ErrorSummary,
    pub total: ErrorSummary,
}

pub fn read_coefficients_file(path: &Path) -> Result<EstimatorCoefficients> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let file: CoefficientsFile =
        toml::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
    if !file.coefficients.is_finite() {
        return Err(Error::Config(format!("{}: coefficients must be finite", path.display())));
    }
    Ok(file.coefficients)
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text).map_err(|e| match e {
            Error::Config(m) => Error::Config(format!("{}: {m}", path.display())),
            other => other,
        })
    }

    /// Applies overrides, builds the scenario and replay options, and
    /// resolves relative paths against `base`.
    pub fn resolve(&self, base: &Path, overrides: &Overrides) -> Result<ResolvedRun> {
        let config_err = |e: Error| match e {
            Error::InvalidArgument(m) => Error::Config(m),
            other => other,
        };
        let sc = &self.scenario;
        let mut scenario = build_preset(&sc.preset, sc.scale, sc.block_size, sc.diameter).map_err(config_err)?;
        scenario.seed = overrides.seed.unwrap_or(sc.seed);
        if let Some(steps) = overrides.steps.or(sc.steps) {
            scenario.duration = steps;
        }

        let strategy: Strategy = overrides
            .strategy
            .as_deref()
            .unwrap_or(&self.balance.strategy)
            .parse()
            .map_err(config_err)?;

        let resolve = |p: &Path| if p.is_absolute() { p.to_path_buf() } else { base.join(p) };
        let coefficients = match self.coefficients.source {
            CoefficientSource::BuiltinTable => EstimatorCoefficients::reference_profile(),
            CoefficientSource::FittedFromFile => {
                let p = self.coefficients.path.as_deref().ok_or_else(|| {
                    Error::Config("coefficients.source = \"fitted-from-file\" needs coefficients.path".into())
                })?;
                read_coefficients_file(&resolve(p))?
            }
        };
        let loads = match self.evaluation.loads {
            LoadKind::Predicted => LoadSource::Predicted,
            LoadKind::Synthesized => LoadSource::Synthesized {
                truth: EstimatorCoefficients::reference_profile(),
                sigma: self.evaluation.noise_sigma,
                seed: self.evaluation.seed,
            },
        };
        if !(self.evaluation.noise_sigma.is_finite() && self.evaluation.noise_sigma >= 0.0) {
            return Err(Error::Config("evaluation.noise_sigma must be >= 0".into()));
        }
        let options = ReplayOptions {
            n_procs: self.balance.n_procs,
            interval: overrides.interval.unwrap_or(self.balance.interval),
            tolerance: self.balance.tolerance,
            diffusive_iters: self.balance.diffusive_iterations,
            weight_floor: self.balance.weight_floor,
            coefficients,
            loads,
        };
        options.validate().map_err(config_err)?;
        Ok(ResolvedRun {
            scenario,
            strategy,
            options,
            report: resolve(&self.output.report),
            summary: self.output.summary.as_deref().map(resolve),
        })
    }
}
