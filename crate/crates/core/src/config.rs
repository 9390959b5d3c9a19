//! Flat dotted-key = value configuration shared by all pipeline stages.
//! Command-line flags override file values; file values override defaults.

use crate::cnn::Variant;
use crate::features::SplitMode;
use crate::market::SyntheticMarketConfig;
use crate::qrm::QrmConfig;
use std::path::Path;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("config: {0}")]
    Parse(String),
    #[error("config io: {0}")]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, PartialEq)]
pub struct QrmSettings {
    pub solver: QrmConfig,
    pub workers: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FeatureSettings {
    pub split_seed: u64,
    pub split_mode: SplitMode,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CnnSettings {
    pub variant: Variant,
    pub epochs: usize,
    pub lr: f64,
    pub channels: Option<Vec<usize>>,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PipelineConfig {
    pub qrm: QrmSettings,
    pub features: FeatureSettings,
    pub cnn: CnnSettings,
    pub synth: SyntheticMarketConfig,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            qrm: QrmSettings { solver: QrmConfig::default(), workers: 1 },
            features: FeatureSettings { split_seed: 0, split_mode: SplitMode::Random },
            cnn: CnnSettings {
                variant: Variant::Approach11,
                epochs: 100,
                lr: 0.05,
                channels: None,
                seed: 0,
            },
            synth: SyntheticMarketConfig::default(),
        }
    }
}

fn parse<T: std::str::FromStr>(key: &str, value: &str) -> Result<T, ConfigError>
where
    T::Err: std::fmt::Display,
{
    value
        .parse::<T>()
        .map_err(|e| ConfigError::Parse(format!("key {key}: bad value {value:?}: {e}")))
}

impl PipelineConfig {
    pub fn set(&mut self, key: &str, value: &str) -> Result<(), ConfigError> {
        let value = value.trim();
        match key {
            "qrm.beta" => self.qrm.solver.beta = Some(parse(key, value)?),
            "qrm.n_s" => self.qrm.solver.n_s = Some(parse(key, value)?),
            "qrm.n_t" => self.qrm.solver.n_t = Some(parse(key, value)?),
            "qrm.cg_tol" => self.qrm.solver.cg_tol = parse(key, value)?,
            "qrm.cg_max_iter" => self.qrm.solver.cg_max_iter = parse(key, value)?,
            "qrm.workers" => self.qrm.workers = parse(key, value)?,
            "features.split_seed" => self.features.split_seed = parse(key, value)?,
            "features.split_mode" => {
                self.features.split_mode = match value {
                    "random" => SplitMode::Random,
                    "chronological" => SplitMode::Chronological,
                    other => {
                        return Err(ConfigError::Parse(format!(
                            "features.split_mode must be random or chronological, got {other:?}"
                        )))
                    }
                }
            }
            "cnn.variant" => {
                self.cnn.variant = value.parse::<Variant>().map_err(ConfigError::Parse)?
            }
            "cnn.epochs" => self.cnn.epochs = parse(key, value)?,
            "cnn.lr" => self.cnn.lr = parse(key, value)?,
            "cnn.channels" => {
                let channels: Result<Vec<usize>, _> =
                    value.split(',').map(|v| v.trim().parse::<usize>()).collect();
                self.cnn.channels = Some(channels.map_err(|e| {
                    ConfigError::Parse(format!("cnn.channels: bad list {value:?}: {e}"))
                })?);
            }
            "cnn.seed" => self.cnn.seed = parse(key, value)?,
            "synth.n_options" => self.synth.n_options = parse(key, value)?,
            "synth.seed" => self.synth.seed = parse(key, value)?,
            "synth.drift" => self.synth.drift = parse(key, value)?,
            "synth.true_vol" => self.synth.true_vol = parse(key, value)?,
            "synth.spread_frac" => self.synth.spread_frac = parse(key, value)?,
            "synth.strike_lo" => self.synth.strike_band.0 = parse(key, value)?,
            "synth.strike_hi" => self.synth.strike_band.1 = parse(key, value)?,
            "synth.maturity_days" => self.synth.maturity_days = parse(key, value)?,
            "synth.rate" => self.synth.rate = parse(key, value)?,
            other => return Err(ConfigError::Parse(format!("unknown key {other:?}"))),
        }
        Ok(())
    }

    pub fn parse_text(text: &str) -> Result<PipelineConfig, ConfigError> {
        let mut config = PipelineConfig::default();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                return Err(ConfigError::Parse(format!(
                    "line {}: expected key = value, got {raw:?}",
                    lineno + 1
                )));
            };
            config.set(key.trim(), value)?;
        }
        Ok(config)
    }

    pub fn load(path: &Path) -> Result<PipelineConfig, ConfigError> {
        Self::parse_text(&std::fs::read_to_string(path)?)
    }
}
