//! Pipeline configuration file (TOML).

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::envelope::{Envelope, InputDim};
use crate::error::{Error, Result};
use crate::simulator::OutputDim;
use crate::surrogate::HyperParams;

/// Training set for the pre-downsampling baseline.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum PreAlMode {
    /// The whole dense set.
    Full,
    /// A random subsample of the dense set sized like the downsampled set.
    Matched,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PipelineConfig {
    pub output_dir: PathBuf,
    /// Relative-error criterion the surrogate is expected to meet.
    pub target_re: f64,
    pub pre_al_mode: PreAlMode,
    #[serde(default)]
    pub envelope: Envelope,
    pub sampling: SamplingConfig,
    pub split: SplitConfig,
    pub downsample: DownsampleConfig,
    pub training: TrainingConfig,
    pub boundary: BoundaryConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SamplingConfig {
    pub dense_size: usize,
    pub test_size: usize,
    pub seed: u64,
    pub test_seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SplitConfig {
    pub ratio: f64,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DownsampleConfig {
    pub candidates: usize,
    pub seed: u64,
    /// Seed of the size-matched baseline subsample.
    pub baseline_seed: u64,
}

/// The hyperparameter grid is the product of the three lists.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrainingConfig {
    pub seed: u64,
    pub batch_size: usize,
    pub epochs: usize,
    pub hidden_widths: Vec<usize>,
    pub depths: Vec<usize>,
    pub learning_rates: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoundaryConfig {
    pub threshold: f64,
    pub cut_dim: InputDim,
    /// Fraction of the cut dimension's span kept, measured from its lower end.
    pub retained_fraction: f64,
    /// `all` for the worst output per point, or one output column name.
    pub output: String,
}

impl BoundaryConfig {
    pub fn output_dim(&self) -> Result<Option<OutputDim>> {
        match self.output.as_str() {
            "all" => Ok(None),
            name => name.parse().map(Some),
        }
    }
}

impl TrainingConfig {
    pub fn grid(&self) -> Vec<HyperParams> {
        let mut grid = Vec::new();
        for &hidden_width in &self.hidden_widths {
            for &depth in &self.depths {
                for &learning_rate in &self.learning_rates {
                    grid.push(HyperParams {
                        hidden_width,
                        depth,
                        learning_rate,
                        batch_size: self.batch_size,
                        epochs: self.epochs,
                        seed: self.seed,
                    });
                }
            }
        }
        grid
    }
}

/// Configuration shipped with the project (`configs/default.toml`).
pub const DEFAULT_CONFIG: &str = include_str!("../configs/default.toml");
/// Small configuration for smoke runs (`configs/minimal.toml`).
pub const MINIMAL_CONFIG: &str = include_str!("../configs/minimal.toml");

impl PipelineConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let config: Self = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml(&text)
    }

    pub fn shipped_default() -> Self {
        Self::from_toml(DEFAULT_CONFIG).expect("shipped default config is valid")
    }

    pub fn minimal() -> Self {
        Self::from_toml(MINIMAL_CONFIG).expect("shipped minimal config is valid")
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    /// Replaces every seed with one derived from `base`.
    pub fn override_seeds(&mut self, base: u64) {
        self.sampling.seed = base;
        self.sampling.test_seed = base.wrapping_add(1);
        self.split.seed = base.wrapping_add(2);
        self.downsample.seed = base.wrapping_add(3);
        self.downsample.baseline_seed = base.wrapping_add(4);
        self.training.seed = base.wrapping_add(5);
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        self.envelope
            .validate()
            .map_err(|e| Error::Config(format!("envelope: {e}")))?;
        for (name, v) in [
            ("sampling.dense_size", self.sampling.dense_size),
            ("sampling.test_size", self.sampling.test_size),
            ("downsample.candidates", self.downsample.candidates),
            ("training.batch_size", self.training.batch_size),
            ("training.epochs", self.training.epochs),
        ] {
            if v == 0 {
                return bad(format!("{name} must be at least 1"));
            }
        }
        if !(self.split.ratio > 0.0 && self.split.ratio < 1.0) {
            return bad(format!("split.ratio must lie in (0, 1), got {}", self.split.ratio));
        }
        if !(self.target_re > 0.0) {
            return bad(format!("target_re must be positive, got {}", self.target_re));
        }
        if self.training.hidden_widths.is_empty()
            || self.training.depths.is_empty()
            || self.training.learning_rates.is_empty()
        {
            return bad("training grid lists must be non-empty".into());
        }
        for h in self.training.grid() {
            h.validate().map_err(|e| Error::Config(e.to_string()))?;
        }
        if !(self.boundary.retained_fraction > 0.0 && self.boundary.retained_fraction <= 1.0) {
            return bad(format!(
                "boundary.retained_fraction must lie in (0, 1], got {}",
                self.boundary.retained_fraction
            ));
        }
        if !(self.boundary.threshold >= 0.0) {
            return bad("boundary.threshold must be non-negative".into());
        }
        self.boundary.output_dim()?;
        Ok(())
    }
}
