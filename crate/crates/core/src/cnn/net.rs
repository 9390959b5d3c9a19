//! Forward pass, binary cross-entropy loss, exact backpropagation, and the
//! full-batch gradient-descent training loop.

use super::{CnnError, CnnModel, ConvLayer, Sample, KERNEL_WIDTH, SEQ_LEN};

/// Probability clamp for the cross-entropy loss.
const P_CLAMP: f64 = 1e-7;

fn sigmoid(z: f64) -> f64 {
    1.0 / (1.0 + (-z).exp())
}

/// Reflective padding: mirror the neighbors of each edge without repeating
/// the edge itself, so [a, b, c, ...] becomes [b, a, b, c, ..., y, z, y].
fn reflect_pad(x: &[f64]) -> Vec<f64> {
    let n = x.len();
    let mut out = Vec::with_capacity(n + 2);
    out.push(x[1]);
    out.extend_from_slice(x);
    out.push(x[n - 2]);
    out
}

/// Per-layer channel-major activations, length SEQ_LEN each.
struct Activations {
    /// Pre-activation output of every conv layer.
    pre: Vec<Vec<Vec<f64>>>,
    /// Input fed to every conv layer (post-activation of the previous one).
    inputs: Vec<Vec<Vec<f64>>>,
    pooled: Vec<f64>,
    argmax: Vec<usize>,
    logit: f64,
    prob: f64,
}

// indexed loops here mirror the kernel arithmetic
#[allow(clippy::needless_range_loop)]
fn conv_forward(layer: &ConvLayer, input: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let padded: Vec<Vec<f64>> = input.iter().map(|ch| reflect_pad(ch)).collect();
    let mut out = vec![vec![0.0; SEQ_LEN]; layer.out_ch];
    for oc in 0..layer.out_ch {
        for pos in 0..SEQ_LEN {
            let mut acc = layer.bias[oc];
            for (ic, pad) in padded.iter().enumerate() {
                for t in 0..KERNEL_WIDTH {
                    acc += layer.w(oc, ic, t) * pad[pos + t];
                }
            }
            out[oc][pos] = acc;
        }
    }
    out
}

fn run_forward(model: &CnnModel, x: &[f64; SEQ_LEN]) -> Activations {
    let n_layers = model.layers.len();
    let mut inputs = Vec::with_capacity(n_layers);
    let mut pre = Vec::with_capacity(n_layers);
    let mut current = vec![x.to_vec()];
    for (l, layer) in model.layers.iter().enumerate() {
        inputs.push(current.clone());
        let z = conv_forward(layer, &current);
        // rectifier between conv layers, none after the last
        current = if l + 1 < n_layers {
            z.iter().map(|ch| ch.iter().map(|&v| v.max(0.0)).collect()).collect()
        } else {
            z.clone()
        };
        pre.push(z);
    }
    // global max pool over positions, first index wins ties
    let mut pooled = Vec::with_capacity(current.len());
    let mut argmax = Vec::with_capacity(current.len());
    for ch in &current {
        let (mut best_i, mut best_v) = (0usize, ch[0]);
        for (i, &v) in ch.iter().enumerate().skip(1) {
            if v > best_v {
                best_i = i;
                best_v = v;
            }
        }
        pooled.push(best_v);
        argmax.push(best_i);
    }
    let logit =
        model.head_b + model.head_w.iter().zip(&pooled).map(|(w, p)| w * p).sum::<f64>();
    Activations { pre, inputs, pooled, argmax, logit, prob: sigmoid(logit) }
}

/// Sigmoid output in (0, 1) for one input vector.
pub fn forward(model: &CnnModel, x: &[f64; SEQ_LEN]) -> f64 {
    run_forward(model, x).prob
}

/// Pre-sigmoid logit, exposed for diagnostics.
pub fn forward_logit(model: &CnnModel, x: &[f64; SEQ_LEN]) -> f64 {
    run_forward(model, x).logit
}

fn clamp_p(p: f64) -> f64 {
    p.clamp(P_CLAMP, 1.0 - P_CLAMP)
}

/// Mean binary cross-entropy over a batch, probability clamped away from
/// the log singularities.
pub fn loss(model: &CnnModel, batch: &[Sample]) -> f64 {
    let total: f64 = batch
        .iter()
        .map(|(x, y)| {
            let p = clamp_p(forward(model, x));
            if *y == 1 {
                -p.ln()
            } else {
                -(1.0 - p).ln()
            }
        })
        .sum();
    total / batch.len() as f64
}

#[derive(Debug, Clone, PartialEq)]
pub struct LayerGrad {
    pub weights: Vec<f64>,
    pub bias: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    pub layers: Vec<LayerGrad>,
    pub head_w: Vec<f64>,
    pub head_b: f64,
}

impl Gradients {
    fn zeros_like(model: &CnnModel) -> Gradients {
        Gradients {
            layers: model
                .layers
                .iter()
                .map(|l| LayerGrad {
                    weights: vec![0.0; l.weights.len()],
                    bias: vec![0.0; l.bias.len()],
                })
                .collect(),
            head_w: vec![0.0; model.head_w.len()],
            head_b: 0.0,
        }
    }
}

/// Exact analytic gradients of the mean batch loss. Max pool routes
/// gradient only to the argmax position; the clamp zeroes gradient on its
/// plateaus.
#[allow(clippy::needless_range_loop)]
pub fn backward(model: &CnnModel, batch: &[Sample]) -> Gradients {
    let mut grads = Gradients::zeros_like(model);
    let inv_n = 1.0 / batch.len() as f64;
    let n_layers = model.layers.len();

    for (x, y) in batch {
        let acts = run_forward(model, x);
        let p = acts.prob;
        // d(mean loss)/d(logit); zero when the clamp is active
        let g_logit = if p <= P_CLAMP || p >= 1.0 - P_CLAMP {
            0.0
        } else {
            (p - *y as f64) * inv_n
        };

        for (c, &pooled) in acts.pooled.iter().enumerate() {
            grads.head_w[c] += g_logit * pooled;
        }
        grads.head_b += g_logit;

        // gradient wrt the last layer's (unactivated) output
        let last = &acts.pre[n_layers - 1];
        let mut g_out = vec![vec![0.0; SEQ_LEN]; last.len()];
        for (c, &pos) in acts.argmax.iter().enumerate() {
            g_out[c][pos] = g_logit * model.head_w[c];
        }

        for l in (0..n_layers).rev() {
            let layer = &model.layers[l];
            // through the rectifier (absent after the last layer)
            let g_pre: Vec<Vec<f64>> = if l + 1 < n_layers {
                g_out
                    .iter()
                    .zip(&acts.pre[l])
                    .map(|(g, z)| {
                        g.iter().zip(z).map(|(&gv, &zv)| if zv > 0.0 { gv } else { 0.0 }).collect()
                    })
                    .collect()
            } else {
                g_out
            };

            let padded: Vec<Vec<f64>> =
                acts.inputs[l].iter().map(|ch| reflect_pad(ch)).collect();
            let lg = &mut grads.layers[l];
            let mut g_padded = vec![vec![0.0; SEQ_LEN + 2]; layer.in_ch];
            for oc in 0..layer.out_ch {
                for pos in 0..SEQ_LEN {
                    let g = g_pre[oc][pos];
                    if g == 0.0 {
                        continue;
                    }
                    lg.bias[oc] += g;
                    for ic in 0..layer.in_ch {
                        for t in 0..KERNEL_WIDTH {
                            lg.weights[(oc * layer.in_ch + ic) * KERNEL_WIDTH + t] +=
                                g * padded[ic][pos + t];
                            g_padded[ic][pos + t] += g * layer.w(oc, ic, t);
                        }
                    }
                }
            }
            // adjoint of the reflective padding
            let mut g_in = vec![vec![0.0; SEQ_LEN]; layer.in_ch];
            for ic in 0..layer.in_ch {
                for pos in 0..SEQ_LEN {
                    g_in[ic][pos] = g_padded[ic][pos + 1];
                }
                g_in[ic][1] += g_padded[ic][0];
                g_in[ic][SEQ_LEN - 2] += g_padded[ic][SEQ_LEN + 1];
            }
            g_out = g_in;
        }
    }
    grads
}

fn apply_step(model: &mut CnnModel, grads: &Gradients, lr: f64) {
    for (layer, lg) in model.layers.iter_mut().zip(&grads.layers) {
        for (w, g) in layer.weights.iter_mut().zip(&lg.weights) {
            *w -= lr * g;
        }
        for (b, g) in layer.bias.iter_mut().zip(&lg.bias) {
            *b -= lr * g;
        }
    }
    for (w, g) in model.head_w.iter_mut().zip(&grads.head_w) {
        *w -= lr * g;
    }
    model.head_b -= lr * grads.head_b;
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct TrainingTrace {
    /// Loss on the training set at the start of each epoch.
    pub train_loss: Vec<f64>,
    /// Matching validation loss when a validation set was supplied.
    pub validation_loss: Vec<f64>,
}

/// Full-batch gradient descent for `model.config.epochs` epochs.
/// Deterministic: the outcome depends only on the initial model and data.
pub fn train(
    mut model: CnnModel,
    train_set: &[Sample],
    validation_set: Option<&[Sample]>,
    epochs: usize,
) -> Result<(CnnModel, TrainingTrace), CnnError> {
    let mut trace = TrainingTrace::default();
    if train_set.is_empty() {
        return Err(CnnError::InvalidConfig("empty training set".to_string()));
    }
    let lr = model.config.learning_rate;
    for epoch in 0..epochs {
        let l = loss(&model, train_set);
        if !l.is_finite() {
            return Err(CnnError::DivergenceDetected { epoch });
        }
        trace.train_loss.push(l);
        if let Some(val) = validation_set {
            trace.validation_loss.push(loss(&model, val));
        }
        let grads = backward(&model, train_set);
        apply_step(&mut model, &grads, lr);
    }
    Ok((model, trace))
}
