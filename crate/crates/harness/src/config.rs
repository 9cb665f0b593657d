//! Experiment configuration, read from TOML with every field optional.

use std::path::{Path, PathBuf};

use lrsr_core::external::ExternalConfig;
use lrsr_core::fusion::GodecConfig;
use lrsr_core::internal::{InternalConfig, ROTATIONS};
use serde::{Deserialize, Serialize};

use crate::error::{HarnessError, Result};

/// How many members of each method enter the fusion bank.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BankConfig {
    pub internal: usize,
    pub external: usize,
}

impl Default for BankConfig {
    fn default() -> Self {
        Self { internal: 18, external: 18 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NoiseConfig {
    /// Standard deviations in gray levels.
    pub sigmas: Vec<f64>,
}

impl Default for NoiseConfig {
    fn default() -> Self {
        Self { sigmas: vec![4.0, 8.0, 12.0, 16.0, 20.0] }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CurveConfig {
    pub j_values: Vec<usize>,
}

impl Default for CurveConfig {
    fn default() -> Self {
        Self { j_values: vec![4, 12, 20, 28, 36, 40] }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AnalysisConfig {
    /// Significance threshold in gray levels.
    pub threshold: f64,
    pub bins: usize,
}

impl Default for AnalysisConfig {
    fn default() -> Self {
        Self { threshold: lrsr_core::metrics::DEFAULT_THRESHOLD, bins: 10 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub seed: u64,
    /// Integer magnification.
    pub scale: usize,
    pub test_dir: PathBuf,
    pub train_dir: PathBuf,
    /// Trained dictionaries; when absent they are trained from `train_dir`.
    pub model_dir: Option<PathBuf>,
    pub out_dir: PathBuf,
    /// Worker threads, 0 for all cores.
    pub threads: usize,
    /// Fill `wall_ms`; off by default so reports are byte-reproducible.
    pub record_timing: bool,
    pub bank: BankConfig,
    pub internal: InternalConfig,
    pub external: ExternalConfig,
    pub fusion: GodecConfig,
    pub noise: NoiseConfig,
    pub curve: CurveConfig,
    pub analysis: AnalysisConfig,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            scale: 2,
            test_dir: PathBuf::from("data/test"),
            train_dir: PathBuf::from("data/train"),
            model_dir: None,
            out_dir: PathBuf::from("out"),
            threads: 0,
            record_timing: false,
            bank: BankConfig::default(),
            internal: InternalConfig { k_max: 5, ..Default::default() },
            external: ExternalConfig { groups: 5, ..Default::default() },
            fusion: GodecConfig::default(),
            noise: NoiseConfig::default(),
            curve: CurveConfig::default(),
            analysis: AnalysisConfig::default(),
        }
    }
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        Ok(toml::from_str(text)?)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_toml(&std::fs::read_to_string(path)?)
    }

    pub fn to_toml(&self) -> Result<String> {
        Ok(toml::to_string(self)?)
    }

    /// Propagates the shared scale and seed into the per-module sections and
    /// checks cross-field constraints.
    pub fn resolved(mut self) -> Result<Self> {
        if self.scale < 2 {
            return Err(HarnessError::Config(format!("scale {} must be at least 2", self.scale)));
        }
        self.internal.target_scale = self.scale as f64;
        self.external.scale = self.scale;
        self.external.train.seed = self.seed;
        self.fusion.seed = self.seed;
        self.internal
            .validate()
            .map_err(|e| HarnessError::Config(e.to_string()))?;
        self.check_bank(self.bank.internal, self.bank.external)?;
        if self.bank.internal + self.bank.external == 0 {
            return Err(HarnessError::Config("bank must hold at least one member".into()));
        }
        if self.noise.sigmas.iter().any(|s| !(*s >= 0.0 && s.is_finite())) {
            return Err(HarnessError::Config("noise sigmas must be finite and non-negative".into()));
        }
        Ok(self)
    }

    /// Largest internal and external member counts the generators support.
    pub fn available(&self) -> (usize, usize) {
        (self.internal.k_max * ROTATIONS.len(), self.external.groups * ROTATIONS.len())
    }

    pub fn check_bank(&self, n_int: usize, n_ext: usize) -> Result<()> {
        let (max_int, max_ext) = self.available();
        if n_int > max_int || n_ext > max_ext {
            return Err(HarnessError::Config(format!(
                "bank {n_int} internal + {n_ext} external exceeds the {max_int} + {max_ext} available"
            )));
        }
        Ok(())
    }
}
