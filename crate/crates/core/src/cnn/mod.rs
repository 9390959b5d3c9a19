//! Small 1-D convolutional binary classifier over the 13-element input
//! vector, trained by full-batch gradient descent with manual
//! backpropagation. Two variants: the 6-layer original and the 5-layer
//! revision with the sigmoid head.

mod net;

pub use net::{backward, forward, forward_logit, loss, train, Gradients, LayerGrad, TrainingTrace};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use serde::{Deserialize, Serialize};
use std::io::{Read, Write};
use thiserror::Error;

/// Input sequence length; reflective padding keeps it constant through
/// every convolution layer.
pub const SEQ_LEN: usize = 13;
pub const KERNEL_WIDTH: usize = 3;

const MODEL_FORMAT_VERSION: u32 = 1;

/// One training sample: input vector and binary label.
pub type Sample = ([f64; SEQ_LEN], u8);

#[derive(Debug, Error)]
pub enum CnnError {
    #[error("invalid config: {0}")]
    InvalidConfig(String),
    #[error("training loss became non-finite at epoch {epoch}")]
    DivergenceDetected { epoch: usize },
    #[error("io failure: {0}")]
    Io(#[from] std::io::Error),
    #[error("model file: {0}")]
    BadModelFile(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Variant {
    Approach10,
    Approach11,
}

impl Variant {
    pub fn n_conv_layers(&self) -> usize {
        match self {
            Variant::Approach10 => 6,
            Variant::Approach11 => 5,
        }
    }
}

impl std::str::FromStr for Variant {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "approach_1_0" | "1.0" => Ok(Variant::Approach10),
            "approach_1_1" | "1.1" => Ok(Variant::Approach11),
            other => Err(format!("unknown variant {other:?}")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CnnConfig {
    pub variant: Variant,
    /// Output channels per conv layer; length must match the variant.
    pub channels: Vec<usize>,
    pub learning_rate: f64,
    pub epochs: usize,
    pub seed: u64,
}

impl CnnConfig {
    pub fn new(variant: Variant) -> CnnConfig {
        CnnConfig {
            variant,
            channels: vec![8; variant.n_conv_layers()],
            learning_rate: 0.05,
            epochs: 100,
            seed: 0,
        }
    }

    pub fn validate(&self) -> Result<(), CnnError> {
        if self.channels.len() != self.variant.n_conv_layers() {
            return Err(CnnError::InvalidConfig(format!(
                "variant wants {} conv layers, channels has {}",
                self.variant.n_conv_layers(),
                self.channels.len()
            )));
        }
        if self.channels.contains(&0) {
            return Err(CnnError::InvalidConfig("zero-channel layer".to_string()));
        }
        if self.learning_rate.is_nan() || self.learning_rate <= 0.0 {
            return Err(CnnError::InvalidConfig("learning_rate must be positive".to_string()));
        }
        Ok(())
    }
}

/// Width-3 convolution layer; weights are row-major
/// `[out_ch][in_ch][kernel]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvLayer {
    pub in_ch: usize,
    pub out_ch: usize,
    pub weights: Vec<f64>,
    pub bias: Vec<f64>,
}

impl ConvLayer {
    pub fn w(&self, oc: usize, ic: usize, t: usize) -> f64 {
        self.weights[(oc * self.in_ch + ic) * KERNEL_WIDTH + t]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CnnModel {
    pub config: CnnConfig,
    pub layers: Vec<ConvLayer>,
    /// Linear head over per-channel pooled maxima.
    pub head_w: Vec<f64>,
    pub head_b: f64,
    /// Validation-tuned decision threshold, when tuned.
    pub threshold: Option<f64>,
}

/// Fan-in scaled uniform initialization, deterministic by seed. Biases
/// start at zero.
pub fn init(config: &CnnConfig, seed: u64) -> Result<CnnModel, CnnError> {
    config.validate()?;
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    let mut layers = Vec::with_capacity(config.channels.len());
    let mut in_ch = 1usize;
    for &out_ch in &config.channels {
        let fan_in = in_ch * KERNEL_WIDTH;
        let scale = (1.0 / fan_in as f64).sqrt();
        let weights = (0..out_ch * in_ch * KERNEL_WIDTH)
            .map(|_| rng.gen_range(-scale..scale))
            .collect();
        layers.push(ConvLayer { in_ch, out_ch, weights, bias: vec![0.0; out_ch] });
        in_ch = out_ch;
    }
    let scale = (1.0 / in_ch as f64).sqrt();
    let head_w = (0..in_ch).map(|_| rng.gen_range(-scale..scale)).collect();
    Ok(CnnModel { config: config.clone(), layers, head_w, head_b: 0.0, threshold: None })
}

/// 1 iff the model output reaches the threshold (the boundary counts as a
/// buy).
pub fn predict(model: &CnnModel, x: &[f64; SEQ_LEN], threshold: f64) -> u8 {
    u8::from(forward(model, x) >= threshold)
}

/// Accuracy of thresholded predictions over precomputed outputs.
fn accuracy_at(outputs: &[f64], labels: &[u8], c: f64) -> f64 {
    let correct = outputs
        .iter()
        .zip(labels)
        .filter(|(p, &y)| u8::from(**p >= c) == y)
        .count();
    correct as f64 / outputs.len() as f64
}

/// Sweeps c over {0.01, ..., 0.99} and returns the accuracy-maximizing
/// threshold; ties break toward the value closest to 0.5, then smaller.
pub fn tune_threshold(model: &CnnModel, validation: &[Sample]) -> f64 {
    let outputs: Vec<f64> = validation.iter().map(|(x, _)| forward(model, x)).collect();
    let labels: Vec<u8> = validation.iter().map(|&(_, y)| y).collect();
    let mut best = (f64::NEG_INFINITY, f64::INFINITY, 0.5);
    for k in 1..=99u32 {
        let c = k as f64 / 100.0;
        let acc = accuracy_at(&outputs, &labels, c);
        let dist = (c - 0.5).abs();
        if acc > best.0 || (acc == best.0 && dist < best.1) {
            best = (acc, dist, c);
        }
    }
    best.2
}

pub fn save_model<W: Write>(model: &CnnModel, writer: W) -> Result<(), CnnError> {
    #[derive(Serialize)]
    struct Doc<'a> {
        format_version: u32,
        model: &'a CnnModel,
    }
    serde_json::to_writer_pretty(writer, &Doc { format_version: MODEL_FORMAT_VERSION, model })
        .map_err(|e| CnnError::BadModelFile(e.to_string()))
}

pub fn load_model<R: Read>(reader: R) -> Result<CnnModel, CnnError> {
    #[derive(Deserialize)]
    struct Doc {
        format_version: u32,
        model: CnnModel,
    }
    let doc: Doc =
        serde_json::from_reader(reader).map_err(|e| CnnError::BadModelFile(e.to_string()))?;
    if doc.format_version != MODEL_FORMAT_VERSION {
        return Err(CnnError::BadModelFile(format!(
            "unsupported format version {}",
            doc.format_version
        )));
    }
    doc.model.config.validate().map_err(|e| CnnError::BadModelFile(e.to_string()))?;
    Ok(doc.model)
}
