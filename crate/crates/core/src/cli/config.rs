use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::bispatial::{BispatialConfig, Calibration};
use crate::error::{IoiError, Result};
use crate::fiducial::{DataSummary, PriorKnowledge};
use crate::gibbs::{LinearNormalConditional, ScanOrder, WorkingBox};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    Fiducial,
    Bayes,
    Bispatial,
    ComposePipeline,
    Gibbs,
    ScanSensitivity,
}

impl Mode {
    pub fn is_stochastic(self) -> bool {
        matches!(self, Mode::Gibbs | Mode::ScanSensitivity)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum PriorSpec {
    Normal {
        mean: f64,
        variance: f64,
    },
    /// Grid prior; omitted weights mean a flat prior on `n_points` nodes.
    Grid {
        lo: f64,
        hi: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        weights: Option<Vec<f64>>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        n_points: Option<usize>,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BispatialBlock {
    pub epsilon: f64,
    pub pre_data_mass: f64,
    #[serde(default = "default_calibration")]
    pub calibration: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_p_value: Option<f64>,
}

fn default_calibration() -> String {
    "odds-default".into()
}

impl BispatialBlock {
    pub fn to_config(&self) -> Result<BispatialConfig> {
        let cfg = BispatialConfig::new(self.epsilon, self.pre_data_mass, Calibration::from_name(&self.calibration)?)?;
        match self.max_p_value {
            Some(t) => cfg.with_max_p_value(t),
            None => Ok(cfg),
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelBlock {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sigma2: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub applicability: Option<PriorKnowledge>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub prior: Option<PriorSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bispatial: Option<BispatialBlock>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub conditionals: Option<Vec<LinearNormalConditional>>,
    #[serde(default, rename = "box", skip_serializing_if = "Option::is_none")]
    pub working_box: Option<WorkingBox>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid_n: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scans: Option<Vec<ScanOrder>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub init: Option<Vec<f64>>,
}

/// Batch analysis description. Relative paths resolve against the config file's directory.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnalysisConfig {
    pub mode: Mode,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub data_path: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub data: Option<DataSummary>,
    #[serde(default)]
    pub model: ModelBlock,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_path: Option<String>,
    /// Chain CSV for gibbs mode; defaults to the report path with a `.csv` extension.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub draws_path: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub iterations: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub burn_in: Option<usize>,
}

pub const DEFAULT_COMPAT_GRID: usize = 201;
pub const DEFAULT_BOX_HALF_WIDTH: f64 = 6.0;

fn missing(mode: Mode, what: &str) -> IoiError {
    IoiError::Validation(format!("mode {mode:?} requires {what}"))
}

impl AnalysisConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|source| IoiError::Io {
            path: path.display().to_string(),
            source,
        })?;
        serde_json::from_str(&text).map_err(|e| IoiError::Validation(format!("config {}: {e}", path.display())))
    }

    pub fn resolve(&self, base: &Path, p: &str) -> PathBuf {
        let p = Path::new(p);
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            base.join(p)
        }
    }

    pub fn knowledge(&self) -> PriorKnowledge {
        self.model.applicability.unwrap_or(PriorKnowledge::NoneOrVeryLittle)
    }

    pub fn working_box(&self) -> WorkingBox {
        self.model.working_box.unwrap_or(WorkingBox {
            lo: [-DEFAULT_BOX_HALF_WIDTH; 2],
            hi: [DEFAULT_BOX_HALF_WIDTH; 2],
        })
    }

    pub fn scans(&self) -> Vec<ScanOrder> {
        self.model
            .scans
            .clone()
            .unwrap_or_else(|| vec![ScanOrder::Sweep(vec![1, 2]), ScanOrder::Sweep(vec![2, 1])])
    }

    /// Checks that every field the mode needs is present and every referenced file exists.
    pub fn validate(&self, base: &Path) -> Result<()> {
        let mode = self.mode;
        if self.output_path.is_none() {
            return Err(missing(mode, "output_path (or --out)"));
        }
        match mode {
            Mode::Fiducial | Mode::Bayes | Mode::Bispatial | Mode::ComposePipeline => {
                match (&self.data, &self.data_path) {
                    (Some(_), Some(_)) => {
                        return Err(IoiError::Validation("give either data or data_path, not both".into()))
                    }
                    (None, None) => return Err(missing(mode, "data or data_path")),
                    (None, Some(p)) => {
                        if self.model.sigma2.is_none() {
                            return Err(missing(mode, "model.sigma2 when reading data_path"));
                        }
                        let full = self.resolve(base, p);
                        if !full.is_file() {
                            return Err(IoiError::Validation(format!("data file {} does not exist", full.display())));
                        }
                    }
                    (Some(_), None) => {}
                }
            }
            Mode::Gibbs | Mode::ScanSensitivity => {}
        }
        match mode {
            Mode::Bayes => {
                self.model.prior.as_ref().ok_or_else(|| missing(mode, "model.prior"))?;
            }
            Mode::Bispatial | Mode::ComposePipeline => {
                self.model
                    .bispatial
                    .as_ref()
                    .ok_or_else(|| missing(mode, "model.bispatial"))?
                    .to_config()?;
            }
            Mode::Gibbs | Mode::ScanSensitivity => {
                let conds = self.model.conditionals.as_ref().ok_or_else(|| missing(mode, "model.conditionals"))?;
                if conds.len() != 2 {
                    return Err(IoiError::Validation(format!("model.conditionals needs 2 entries, got {}", conds.len())));
                }
                if self.seed.is_none() {
                    return Err(missing(mode, "seed"));
                }
                let iterations = self.iterations.ok_or_else(|| missing(mode, "iterations"))?;
                if let Some(b) = self.burn_in {
                    if b >= iterations {
                        return Err(IoiError::Validation(format!("burn_in {b} must be below iterations {iterations}")));
                    }
                }
                if iterations < 2 {
                    return Err(IoiError::Validation("iterations must be at least 2".into()));
                }
                if let Some(init) = &self.model.init {
                    if init.len() != 2 || init.iter().any(|v| !v.is_finite()) {
                        return Err(IoiError::Validation("model.init needs 2 finite values".into()));
                    }
                }
                let b = self.working_box();
                WorkingBox::new(b.lo, b.hi)?;
                if self.model.grid_n.is_some_and(|n| n < 3) {
                    return Err(IoiError::Validation("model.grid_n must be at least 3".into()));
                }
                for scan in self.scans() {
                    scan.validate(2)?;
                }
                if mode == Mode::ScanSensitivity && self.scans().len() < 2 {
                    return Err(missing(mode, "at least 2 scans"));
                }
            }
            Mode::Fiducial => {}
        }
        if let Some(s) = self.model.sigma2 {
            if !(s > 0.0 && s.is_finite()) {
                return Err(IoiError::Validation(format!("model.sigma2 must be positive, got {s}")));
            }
        }
        Ok(())
    }

    pub fn data_summary(&self, base: &Path) -> Result<DataSummary> {
        match (&self.data, &self.data_path) {
            (Some(d), _) => Ok(*d),
            (None, Some(p)) => {
                let sigma2 = self.model.sigma2.ok_or_else(|| missing(self.mode, "model.sigma2"))?;
                super::ingest::ingest_csv(&self.resolve(base, p), sigma2)
            }
            (None, None) => Err(missing(self.mode, "data or data_path")),
        }
    }
}
