//! Pipeline configuration: one TOML file with a section per stage.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::compose::NormalizationConfig;
use crate::error::{Error, Result};
use crate::frame::DEFAULT_RANGE_SCALE_MM;
use crate::projection::ProjectionConfig;
use crate::tracker::TrackerConfig;

/// Environment variable naming a config file to use when none is given.
pub const CONFIG_ENV: &str = "LICAR_CONFIG";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FrameConfig {
    /// Millimetres per unit of a 16-bit range PNG.
    pub range_scale_mm: u32,
}

impl Default for FrameConfig {
    fn default() -> Self {
        Self {
            range_scale_mm: DEFAULT_RANGE_SCALE_MM,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SplitConfig {
    /// Percentages for train, val and test.
    pub ratios: [u32; 3],
    pub seed: u64,
}

impl Default for SplitConfig {
    fn default() -> Self {
        Self {
            ratios: [85, 10, 5],
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(default, deny_unknown_fields)]
pub struct IoConfig {
    /// Directory holding one sub-directory of channel PNGs per frame.
    pub frames_dir: Option<PathBuf>,
    pub detections: Option<PathBuf>,
    pub output_dir: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TimingConfig {
    pub warmup: usize,
    pub repetitions: usize,
}

impl Default for TimingConfig {
    fn default() -> Self {
        Self {
            warmup: 5,
            repetitions: 100,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    pub projection: ProjectionConfig,
    pub normalization: NormalizationConfig,
    pub tracker: TrackerConfig,
    pub frame: FrameConfig,
    pub split: SplitConfig,
    pub io: IoConfig,
    pub timing: TimingConfig,
}

impl PipelineConfig {
    pub fn validate(&self) -> Result<()> {
        self.projection.validate()?;
        self.normalization.validate()?;
        self.tracker.validate()?;
        if self.frame.range_scale_mm == 0 {
            return Err(Error::Config("frame.range_scale_mm must be positive".into()));
        }
        if self.split.ratios.iter().sum::<u32>() != 100 {
            return Err(Error::Config(format!(
                "split.ratios must sum to 100, got {:?}",
                self.split.ratios
            )));
        }
        if self.timing.repetitions == 0 {
            return Err(Error::Config("timing.repetitions must be positive".into()));
        }
        Ok(())
    }

    pub fn from_toml_str(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("config always serialises")
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml_str(&text)
    }

    /// Loads `explicit`, else the file named by `LICAR_CONFIG`, else defaults.
    pub fn resolve(explicit: Option<&Path>) -> Result<Self> {
        if let Some(p) = explicit {
            return Self::load(p);
        }
        match std::env::var_os(CONFIG_ENV) {
            Some(p) if !p.is_empty() => Self::load(Path::new(&p)),
            _ => Ok(Self::default()),
        }
    }
}
