//! The run configuration: one TOML file mirroring every module's
//! parameters, with documented defaults and unknown keys rejected.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::classifiers::Hyperparams;
use crate::dataset::FeatureMode;
use crate::error::{Error, Result};
use crate::inject::{AttackConfig, AttackScenario, SignPolicy, VictimSelect};
use crate::sweep::SweepSpec;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PowerSynthesisConfig {
    pub n_samples: usize,
    pub p_min: f64,
    pub p_max: f64,
    pub mean_dwell: f64,
}

impl Default for PowerSynthesisConfig {
    fn default() -> Self {
        PowerSynthesisConfig {
            n_samples: 10_000,
            p_min: 1.0,
            p_max: 2.5,
            mean_dwell: 20.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AttackSectionConfig {
    pub scenario: AttackScenario,
    pub rate: f64,
    pub delta_t_error: f64,
    pub victim: VictimSelect,
    pub sign_policy: SignPolicy,
}

impl Default for AttackSectionConfig {
    fn default() -> Self {
        AttackSectionConfig {
            scenario: AttackScenario::Elevation,
            rate: 0.8,
            delta_t_error: 1.0,
            victim: VictimSelect::Random,
            sign_policy: SignPolicy::RandomPerSample,
        }
    }
}

impl AttackSectionConfig {
    pub fn to_attack_config(&self, seed: u64) -> AttackConfig {
        AttackConfig {
            scenario: self.scenario,
            attack_rate: self.rate,
            delta_t_error: self.delta_t_error,
            victim: self.victim,
            seed,
            sign_policy: self.sign_policy,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DatasetSectionConfig {
    pub feature_mode: FeatureMode,
}

impl Default for DatasetSectionConfig {
    fn default() -> Self {
        DatasetSectionConfig {
            feature_mode: FeatureMode::RawTemps,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BaselineSectionConfig {
    pub k: f64,
}

impl Default for BaselineSectionConfig {
    fn default() -> Self {
        BaselineSectionConfig { k: 8.0 }
    }
}

/// Full run configuration. Every field has a default, so an empty file
/// is a valid config; unknown keys are rejected.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub seed: Option<u64>,
    pub output_dir: Option<PathBuf>,
    pub floorplan: Option<PathBuf>,
    pub thermal: crate::thermal::ThermalModelParams,
    pub power: PowerSynthesisConfig,
    pub attack: AttackSectionConfig,
    pub dataset: DatasetSectionConfig,
    pub hyperparams: Hyperparams,
    pub baseline: BaselineSectionConfig,
    pub sweep: SweepSpec,
}

pub const DEFAULT_SEED: u64 = 42;

impl RunConfig {
    pub fn seed(&self) -> u64 {
        self.seed.unwrap_or(DEFAULT_SEED)
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: RunConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string_pretty(self).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    pub fn validate(&self) -> Result<()> {
        self.thermal.validate()?;
        self.hyperparams.validate()?;
        self.sweep.validate()?;
        if !(self.power.p_min >= 0.0 && self.power.p_max >= self.power.p_min) {
            return Err(Error::Config(
                "power range must satisfy 0 <= p_min <= p_max".into(),
            ));
        }
        if self.power.n_samples == 0 {
            return Err(Error::Config("power.n_samples must be >= 1".into()));
        }
        if !(self.power.mean_dwell >= 1.0) {
            return Err(Error::Config("power.mean_dwell must be >= 1".into()));
        }
        if !(self.baseline.k > 0.0) {
            return Err(Error::Config("baseline.k must be > 0".into()));
        }
        Ok(())
    }
}
