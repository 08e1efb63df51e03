//! Dense multilayer perceptrons with exact reverse-mode gradients, Adam and
//! soft target updates.
//!
//! Batched operations take one sample per row. Weight matrices are stored as
//! `(out, in)`, so a layer computes `z = x · Wᵀ + b`.

use ndarray::{Array1, Array2, ArrayView2, Axis, Zip};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const MLP_FORMAT: &str = "energaize-mlp/1";

#[derive(Debug, Error, PartialEq)]
pub enum NeuralError {
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("malformed checkpoint: {0}")]
    Checkpoint(String),
}

fn mismatch(what: impl Into<String>) -> NeuralError {
    NeuralError::ShapeMismatch(what.into())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Activation {
    Relu,
    Tanh,
    Identity,
}

impl Activation {
    fn apply(self, z: &mut Array2<f64>) {
        match self {
            Activation::Relu => z.mapv_inplace(|v| v.max(0.0)),
            Activation::Tanh => z.mapv_inplace(f64::tanh),
            Activation::Identity => {}
        }
    }

    /// Multiplies `grad` in place by the derivative, expressed through the
    /// post-activation output `y`.
    fn backprop(self, grad: &mut Array2<f64>, y: &Array2<f64>) {
        match self {
            Activation::Relu => Zip::from(grad).and(y).for_each(|g, &y| {
                if y <= 0.0 {
                    *g = 0.0;
                }
            }),
            Activation::Tanh => Zip::from(grad).and(y).for_each(|g, &y| *g *= 1.0 - y * y),
            Activation::Identity => {}
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dense {
    pub weights: Array2<f64>,
    pub bias: Array1<f64>,
    pub activation: Activation,
}

impl Dense {
    pub fn in_width(&self) -> usize {
        self.weights.ncols()
    }

    pub fn out_width(&self) -> usize {
        self.weights.nrows()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Mlp {
    pub layers: Vec<Dense>,
}

/// Per-layer inputs and post-activation outputs of a batched forward pass.
#[derive(Debug, Clone)]
pub struct ForwardCache {
    inputs: Vec<Array2<f64>>,
    outputs: Vec<Array2<f64>>,
}

impl ForwardCache {
    pub fn output(&self) -> &Array2<f64> {
        self.outputs.last().expect("at least one layer")
    }

    pub fn batch_size(&self) -> usize {
        self.inputs[0].nrows()
    }
}

/// Parameter gradients with the same shapes as the network.
#[derive(Debug, Clone, PartialEq)]
pub struct MlpGrads {
    pub weights: Vec<Array2<f64>>,
    pub biases: Vec<Array1<f64>>,
}

impl MlpGrads {
    pub fn zeros_like(net: &Mlp) -> Self {
        Self {
            weights: net.layers.iter().map(|l| Array2::zeros(l.weights.raw_dim())).collect(),
            biases: net.layers.iter().map(|l| Array1::zeros(l.bias.raw_dim())).collect(),
        }
    }

    pub fn scale(&mut self, k: f64) {
        self.weights.iter_mut().for_each(|w| *w *= k);
        self.biases.iter_mut().for_each(|b| *b *= k);
    }

    pub fn max_abs(&self) -> f64 {
        self.weights
            .iter()
            .flat_map(|w| w.iter())
            .chain(self.biases.iter().flat_map(|b| b.iter()))
            .fold(0.0, |m, v| m.max(v.abs()))
    }
}

/// Initializes weights uniformly in `±1/√fan_in` and biases at zero.
pub fn init_mlp(widths: &[usize], activations: &[Activation], seed: u64) -> Mlp {
    assert!(widths.len() >= 2, "an MLP needs an input and an output width");
    assert_eq!(activations.len(), widths.len() - 1, "one activation per layer");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let layers = widths
        .windows(2)
        .zip(activations)
        .map(|(w, &activation)| {
            let bound = 1.0 / (w[0] as f64).sqrt();
            let weights = Array2::from_shape_simple_fn((w[1], w[0]), || rng.random_range(-bound..=bound));
            Dense {
                weights,
                bias: Array1::zeros(w[1]),
                activation,
            }
        })
        .collect();
    Mlp { layers }
}

impl Mlp {
    pub fn zeros(widths: &[usize], activations: &[Activation]) -> Mlp {
        assert!(widths.len() >= 2 && activations.len() == widths.len() - 1);
        Mlp {
            layers: widths
                .windows(2)
                .zip(activations)
                .map(|(w, &activation)| Dense {
                    weights: Array2::zeros((w[1], w[0])),
                    bias: Array1::zeros(w[1]),
                    activation,
                })
                .collect(),
        }
    }

    pub fn input_width(&self) -> usize {
        self.layers[0].in_width()
    }

    pub fn output_width(&self) -> usize {
        self.layers.last().expect("at least one layer").out_width()
    }

    pub fn widths(&self) -> Vec<usize> {
        std::iter::once(self.input_width())
            .chain(self.layers.iter().map(Dense::out_width))
            .collect()
    }

    pub fn activations(&self) -> Vec<Activation> {
        self.layers.iter().map(|l| l.activation).collect()
    }

    pub fn param_count(&self) -> usize {
        self.layers.iter().map(|l| l.weights.len() + l.bias.len()).sum()
    }

    pub fn is_finite(&self) -> bool {
        self.layers
            .iter()
            .all(|l| l.weights.iter().all(|v| v.is_finite()) && l.bias.iter().all(|v| v.is_finite()))
    }

    fn check_shape(&self, other: &Mlp) -> Result<(), NeuralError> {
        if self.widths() != other.widths() {
            return Err(mismatch(format!("widths {:?} vs {:?}", self.widths(), other.widths())));
        }
        Ok(())
    }

    fn check_input(&self, x: &ArrayView2<f64>) -> Result<(), NeuralError> {
        if x.ncols() != self.input_width() {
            return Err(mismatch(format!("input width {} != {}", x.ncols(), self.input_width())));
        }
        Ok(())
    }

    pub fn forward(&self, x: &[f64]) -> Result<(Vec<f64>, ForwardCache), NeuralError> {
        let x = ArrayView2::from_shape((1, x.len()), x).expect("row vector");
        let (y, cache) = self.forward_batch(x)?;
        Ok((y.into_raw_vec_and_offset().0, cache))
    }

    pub fn forward_batch(&self, x: ArrayView2<f64>) -> Result<(Array2<f64>, ForwardCache), NeuralError> {
        self.check_input(&x)?;
        let mut inputs = Vec::with_capacity(self.layers.len());
        let mut outputs: Vec<Array2<f64>> = Vec::with_capacity(self.layers.len());
        for (k, layer) in self.layers.iter().enumerate() {
            let input = if k == 0 { x.to_owned() } else { outputs[k - 1].clone() };
            let mut z = input.dot(&layer.weights.t());
            z += &layer.bias;
            layer.activation.apply(&mut z);
            inputs.push(input);
            outputs.push(z);
        }
        let y = outputs.last().expect("at least one layer").clone();
        Ok((y, ForwardCache { inputs, outputs }))
    }

    /// Forward pass without keeping a cache.
    pub fn predict_batch(&self, x: ArrayView2<f64>) -> Result<Array2<f64>, NeuralError> {
        self.check_input(&x)?;
        let mut h: Option<Array2<f64>> = None;
        for layer in &self.layers {
            let mut z = match &h {
                None => x.dot(&layer.weights.t()),
                Some(prev) => prev.dot(&layer.weights.t()),
            };
            z += &layer.bias;
            layer.activation.apply(&mut z);
            h = Some(z);
        }
        Ok(h.expect("at least one layer"))
    }

    pub fn predict(&self, x: &[f64]) -> Result<Vec<f64>, NeuralError> {
        let x = ArrayView2::from_shape((1, x.len()), x).expect("row vector");
        Ok(self.predict_batch(x)?.into_raw_vec_and_offset().0)
    }

    pub fn backward(&self, cache: &ForwardCache, dl_dy: &[f64]) -> Result<(MlpGrads, Vec<f64>), NeuralError> {
        let dy = ArrayView2::from_shape((1, dl_dy.len()), dl_dy).expect("row vector");
        let (g, dx) = self.backward_batch(cache, dy)?;
        Ok((g, dx.into_raw_vec_and_offset().0))
    }

    /// Reverse pass; parameter gradients are summed over the batch rows.
    pub fn backward_batch(&self, cache: &ForwardCache, dl_dy: ArrayView2<f64>) -> Result<(MlpGrads, Array2<f64>), NeuralError> {
        self.reverse(cache, dl_dy, true)
            .map(|(g, dx)| (g.expect("requested"), dx))
    }

    /// Input gradient only, skipping parameter gradients.
    pub fn input_gradient_batch(&self, cache: &ForwardCache, dl_dy: ArrayView2<f64>) -> Result<Array2<f64>, NeuralError> {
        self.reverse(cache, dl_dy, false).map(|(_, dx)| dx)
    }

    fn reverse(
        &self,
        cache: &ForwardCache,
        dl_dy: ArrayView2<f64>,
        param_grads: bool,
    ) -> Result<(Option<MlpGrads>, Array2<f64>), NeuralError> {
        if cache.inputs.len() != self.layers.len() {
            return Err(mismatch("cache does not belong to this network"));
        }
        let out = cache.output();
        if dl_dy.dim() != out.dim() {
            return Err(mismatch(format!("output gradient {:?} != output {:?}", dl_dy.dim(), out.dim())));
        }
        for (layer, input) in self.layers.iter().zip(&cache.inputs) {
            if input.ncols() != layer.in_width() {
                return Err(mismatch("cache does not belong to this network"));
            }
        }
        let mut grads = param_grads.then(|| MlpGrads::zeros_like(self));
        let mut delta = dl_dy.to_owned();
        for k in (0..self.layers.len()).rev() {
            let layer = &self.layers[k];
            layer.activation.backprop(&mut delta, &cache.outputs[k]);
            if let Some(g) = grads.as_mut() {
                g.weights[k] = delta.t().dot(&cache.inputs[k]);
                g.biases[k] = delta.sum_axis(Axis(0));
            }
            delta = delta.dot(&layer.weights);
        }
        Ok((grads, delta))
    }

    /// Blends `online` into `self`: `θ ← τ·θ_online + (1-τ)·θ`.
    pub fn soft_update(&mut self, online: &Mlp, tau: f64) -> Result<(), NeuralError> {
        self.check_shape(online)?;
        if tau == 1.0 {
            self.layers.clone_from(&online.layers);
            return Ok(());
        }
        // Written as a step toward the online value so equal nets stay bit-identical.
        for (t, o) in self.layers.iter_mut().zip(&online.layers) {
            Zip::from(&mut t.weights).and(&o.weights).for_each(|t, &o| *t += tau * (o - *t));
            Zip::from(&mut t.bias).and(&o.bias).for_each(|t, &o| *t += tau * (o - *t));
        }
        Ok(())
    }

    /// Largest absolute parameter difference, `‖θ_a − θ_b‖∞`.
    pub fn max_abs_diff(&self, other: &Mlp) -> Result<f64, NeuralError> {
        self.check_shape(other)?;
        let mut m: f64 = 0.0;
        for (a, b) in self.layers.iter().zip(&other.layers) {
            Zip::from(&a.weights).and(&b.weights).for_each(|a, b| m = m.max((a - b).abs()));
            Zip::from(&a.bias).and(&b.bias).for_each(|a, b| m = m.max((a - b).abs()));
        }
        Ok(m)
    }

    pub fn to_checkpoint(&self) -> MlpCheckpoint {
        MlpCheckpoint {
            format: MLP_FORMAT.to_string(),
            widths: self.widths(),
            activations: self.activations(),
            layers: self
                .layers
                .iter()
                .map(|l| LayerParams {
                    weights: l.weights.iter().copied().collect(),
                    bias: l.bias.to_vec(),
                })
                .collect(),
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(&self.to_checkpoint()).expect("checkpoint serializes")
    }

    pub fn from_json(text: &str) -> Result<Mlp, NeuralError> {
        let ck: MlpCheckpoint = serde_json::from_str(text).map_err(|e| NeuralError::Checkpoint(e.to_string()))?;
        Mlp::from_checkpoint(ck)
    }

    pub fn from_checkpoint(ck: MlpCheckpoint) -> Result<Mlp, NeuralError> {
        let bad = |m: String| NeuralError::Checkpoint(m);
        if ck.format != MLP_FORMAT {
            return Err(bad(format!("unsupported format `{}`", ck.format)));
        }
        // The output may be empty: a dwelling without devices has no actions.
        if ck.widths.len() < 2 || ck.widths[..ck.widths.len() - 1].contains(&0) {
            return Err(bad("need at least two widths, all but the output positive".into()));
        }
        if ck.activations.len() != ck.widths.len() - 1 || ck.layers.len() != ck.widths.len() - 1 {
            return Err(bad("layer count does not match widths".into()));
        }
        let layers = ck
            .widths
            .windows(2)
            .zip(ck.activations)
            .zip(ck.layers)
            .enumerate()
            .map(|(k, ((w, activation), p))| {
                let expected = w[0].checked_mul(w[1]).ok_or_else(|| bad("width overflow".into()))?;
                if p.weights.len() != expected || p.bias.len() != w[1] {
                    return Err(bad(format!("layer {k} parameter count does not match widths")));
                }
                if p.weights.iter().chain(&p.bias).any(|v| !v.is_finite()) {
                    return Err(bad(format!("layer {k} has non-finite parameters")));
                }
                Ok(Dense {
                    weights: Array2::from_shape_vec((w[1], w[0]), p.weights).expect("length checked"),
                    bias: Array1::from(p.bias),
                    activation,
                })
            })
            .collect::<Result<Vec<_>, NeuralError>>()?;
        Ok(Mlp { layers })
    }
}

/// Serialized network: widths, activation tags and row-major parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MlpCheckpoint {
    pub format: String,
    pub widths: Vec<usize>,
    pub activations: Vec<Activation>,
    pub layers: Vec<LayerParams>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LayerParams {
    /// `(out, in)` matrix in row-major order.
    pub weights: Vec<f64>,
    pub bias: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdamConfig {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl AdamConfig {
    pub fn with_lr(lr: f64) -> Self {
        Self {
            lr,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AdamState {
    pub config: AdamConfig,
    pub step: u64,
    pub m: MlpGrads,
    pub v: MlpGrads,
}

impl AdamState {
    pub fn new(net: &Mlp, config: AdamConfig) -> Self {
        Self {
            config,
            step: 0,
            m: MlpGrads::zeros_like(net),
            v: MlpGrads::zeros_like(net),
        }
    }

    pub fn to_checkpoint(&self) -> AdamCheckpoint {
        let flat = |g: &MlpGrads| -> Vec<LayerParams> {
            g.weights
                .iter()
                .zip(&g.biases)
                .map(|(w, b)| LayerParams {
                    weights: w.iter().copied().collect(),
                    bias: b.to_vec(),
                })
                .collect()
        };
        AdamCheckpoint {
            config: self.config,
            step: self.step,
            m: flat(&self.m),
            v: flat(&self.v),
        }
    }

    pub fn from_checkpoint(ck: AdamCheckpoint, net: &Mlp) -> Result<Self, NeuralError> {
        let unflat = |layers: Vec<LayerParams>| -> Result<MlpGrads, NeuralError> {
            if layers.len() != net.layers.len() {
                return Err(NeuralError::Checkpoint("optimizer layer count mismatch".into()));
            }
            let mut g = MlpGrads::zeros_like(net);
            for (k, p) in layers.into_iter().enumerate() {
                let shape = net.layers[k].weights.raw_dim();
                g.weights[k] = Array2::from_shape_vec(shape, p.weights)
                    .map_err(|_| NeuralError::Checkpoint(format!("optimizer layer {k} shape mismatch")))?;
                if p.bias.len() != net.layers[k].bias.len() {
                    return Err(NeuralError::Checkpoint(format!("optimizer layer {k} shape mismatch")));
                }
                g.biases[k] = Array1::from(p.bias);
            }
            Ok(g)
        };
        Ok(Self {
            config: ck.config,
            step: ck.step,
            m: unflat(ck.m)?,
            v: unflat(ck.v)?,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AdamCheckpoint {
    pub config: AdamConfig,
    pub step: u64,
    pub m: Vec<LayerParams>,
    pub v: Vec<LayerParams>,
}

/// One bias-corrected Adam descent step on `net`.
pub fn adam_step(net: &mut Mlp, grads: &MlpGrads, state: &mut AdamState) -> Result<(), NeuralError> {
    if grads.weights.len() != net.layers.len()
        || state.m.weights.len() != net.layers.len()
        || net
            .layers
            .iter()
            .zip(grads.weights.iter().zip(&grads.biases))
            .zip(&state.m.weights)
            .any(|((l, (gw, gb)), mw)| l.weights.dim() != gw.dim() || l.bias.dim() != gb.dim() || mw.dim() != gw.dim())
    {
        return Err(mismatch("gradient or optimizer shapes do not match the network"));
    }
    state.step += 1;
    let AdamConfig { lr, beta1, beta2, eps } = state.config;
    let t = state.step as i32;
    let c1 = 1.0 - beta1.powi(t);
    let c2 = 1.0 - beta2.powi(t);
    let update = |p: &mut f64, g: f64, m: &mut f64, v: &mut f64| {
        *m = beta1 * *m + (1.0 - beta1) * g;
        *v = beta2 * *v + (1.0 - beta2) * g * g;
        let m_hat = *m / c1;
        let v_hat = *v / c2;
        *p -= lr * m_hat / (v_hat.sqrt() + eps);
    };
    for k in 0..net.layers.len() {
        let layer = &mut net.layers[k];
        Zip::from(&mut layer.weights)
            .and(&grads.weights[k])
            .and(&mut state.m.weights[k])
            .and(&mut state.v.weights[k])
            .for_each(|p, &g, m, v| update(p, g, m, v));
        Zip::from(&mut layer.bias)
            .and(&grads.biases[k])
            .and(&mut state.m.biases[k])
            .and(&mut state.v.biases[k])
            .for_each(|p, &g, m, v| update(p, g, m, v));
    }
    Ok(())
}
