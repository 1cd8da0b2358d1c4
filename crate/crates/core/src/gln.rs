//! Gated linear networks.
//!
//! Every neuron owns one weight row per gating signature. A forward pass
//! feeds `(β, squash(x))` into layer 1; each later layer sees `β` followed by
//! the previous layer's outputs. Neurons geometrically mix their inputs with
//! the row picked by their own gate and clip the result into `[ε, 1-ε]`.
//! Learning is a single pass of local online gradient descent on the log
//! loss of each neuron, projected back onto the box `[-b, b]`.

use serde::{Deserialize, Serialize};

use crate::error::{check_dim, GlcbError, Result};
use crate::gating::Signature;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GlnConfig {
    pub layer_widths: Vec<usize>,
    /// Prediction clipping ε.
    pub eps: f64,
    /// Bias input β, prepended to every layer's inputs.
    pub beta: f64,
    /// Weight box half-width b.
    pub weight_bound: f64,
    pub input_dim: usize,
}

impl GlnConfig {
    pub const DEFAULT_LAYER_WIDTHS: [usize; 3] = [100, 10, 1];

    pub fn new(input_dim: usize) -> Self {
        Self {
            layer_widths: Self::DEFAULT_LAYER_WIDTHS.to_vec(),
            eps: 0.01,
            beta: 0.2,
            weight_bound: 50.0,
            input_dim,
        }
    }

    pub fn with_layer_widths(mut self, widths: Vec<usize>) -> Self {
        self.layer_widths = widths;
        self
    }

    /// Number of neurons, which is also the number of gating units needed.
    pub fn num_units(&self) -> usize {
        self.layer_widths.iter().sum()
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(GlcbError::Config(m.to_string()));
        if self.input_dim == 0 {
            return bad("GLN input_dim must be >= 1");
        }
        if self.layer_widths.is_empty() || self.layer_widths.contains(&0) {
            return bad("GLN layer widths must be nonempty and positive");
        }
        if self.layer_widths.last() != Some(&1) {
            return bad("GLN output layer must have exactly one neuron");
        }
        if !(self.eps > 0.0 && self.eps < 0.5) {
            return bad("GLN eps must lie in (0, 0.5)");
        }
        if !(self.beta >= self.eps && self.beta <= 1.0 - self.eps) || self.beta == 0.5 {
            return bad("GLN beta must lie in [eps, 1-eps] and differ from 0.5");
        }
        if !(self.weight_bound.is_finite() && self.weight_bound > 0.0) {
            return bad("GLN weight_bound must be positive");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct Layer {
    width: usize,
    fan_in: usize,
    /// `width × num_signatures × fan_in`, row-major.
    weights: Vec<f64>,
}

impl Layer {
    #[inline]
    fn row_range(&self, neuron: usize, sig: u32, num_signatures: usize) -> std::ops::Range<usize> {
        let start = (neuron * num_signatures + sig as usize) * self.fan_in;
        start..start + self.fan_in
    }
}

/// The gated weights of one network.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Gln {
    config: GlnConfig,
    num_signatures: usize,
    layers: Vec<Layer>,
}

/// Counters collected during one pass.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct PassStats {
    pub neuron_evaluations: usize,
}

#[inline]
pub fn sigmoid(z: f64) -> f64 {
    1.0 / (1.0 + (-z).exp())
}

#[inline]
pub fn logit(p: f64) -> f64 {
    (p / (1.0 - p)).ln()
}

#[inline]
fn clip(v: f64, lo: f64, hi: f64) -> f64 {
    v.max(lo).min(hi)
}

/// Clipped geometric mixture `clip(σ(w · logit(p)))`.
pub fn geometric_mix(w: &[f64], p: &[f64], eps: f64) -> Result<f64> {
    check_dim(w.len(), p.len())?;
    let z: f64 = w.iter().zip(p).map(|(wk, pk)| wk * logit(*pk)).sum();
    Ok(clip(sigmoid(z), eps, 1.0 - eps))
}

/// Projected gradient step `w <- clip(w - lr * residual * logits, -b, b)`.
#[inline]
fn descend(row: &mut [f64], input_logits: &[f64], residual: f64, lr: f64, bound: f64) {
    let step = -lr * residual;
    for (w, l) in row.iter_mut().zip(input_logits) {
        *w = clip(*w + step * l, -bound, bound);
    }
}

impl Gln {
    /// Fresh network whose rows are all `1 / fan_in`.
    pub fn new(config: GlnConfig, num_signatures: usize) -> Result<Self> {
        config.validate()?;
        if num_signatures == 0 {
            return Err(GlcbError::Config("num_signatures must be >= 1".into()));
        }
        let mut fan_in = config.input_dim + 1;
        let layers = config
            .layer_widths
            .iter()
            .map(|&width| {
                let init = 1.0 / fan_in as f64;
                let layer = Layer {
                    width,
                    fan_in,
                    weights: vec![init; width * num_signatures * fan_in],
                };
                fan_in = width + 1;
                layer
            })
            .collect();
        Ok(Self {
            config,
            num_signatures,
            layers,
        })
    }

    pub fn config(&self) -> &GlnConfig {
        &self.config
    }

    pub fn num_signatures(&self) -> usize {
        self.num_signatures
    }

    pub fn num_units(&self) -> usize {
        self.config.num_units()
    }

    fn locate(&self, unit: usize) -> Result<(usize, usize)> {
        let mut rest = unit;
        for (i, layer) in self.layers.iter().enumerate() {
            if rest < layer.width {
                return Ok((i, rest));
            }
            rest -= layer.width;
        }
        Err(GlcbError::Config(format!("unit {unit} out of range")))
    }

    /// Weight row of `unit` (layer-major numbering) under signature `sig`.
    pub fn weights(&self, unit: usize, sig: u32) -> Result<&[f64]> {
        let (i, j) = self.locate(unit)?;
        self.check_sig_value(sig)?;
        let layer = &self.layers[i];
        Ok(&layer.weights[layer.row_range(j, sig, self.num_signatures)])
    }

    /// Overwrites a weight row; values are clamped into `[-b, b]`.
    pub fn set_weights(&mut self, unit: usize, sig: u32, row: &[f64]) -> Result<()> {
        let (i, j) = self.locate(unit)?;
        self.check_sig_value(sig)?;
        let b = self.config.weight_bound;
        let ns = self.num_signatures;
        let layer = &mut self.layers[i];
        check_dim(layer.fan_in, row.len())?;
        let range = layer.row_range(j, sig, ns);
        for (w, v) in layer.weights[range].iter_mut().zip(row) {
            *w = clip(*v, -b, b);
        }
        Ok(())
    }

    /// Iterates over every weight in a fixed order.
    pub fn all_weights(&self) -> impl Iterator<Item = f64> + '_ {
        self.layers.iter().flat_map(|l| l.weights.iter().copied())
    }

    fn check_sig_value(&self, s: u32) -> Result<()> {
        if (s as usize) < self.num_signatures {
            Ok(())
        } else {
            Err(GlcbError::Config(format!(
                "signature {s} exceeds signature space {}",
                self.num_signatures
            )))
        }
    }

    fn check_inputs(&self, sig: &Signature, x: &[f64]) -> Result<()> {
        check_dim(self.num_units(), sig.len())?;
        check_dim(self.config.input_dim, x.len())?;
        sig.0.iter().try_for_each(|&s| self.check_sig_value(s))
    }

    /// Logits of the layer-0 vector `(β, clip(x))`.
    fn base_logits(&self, x: &[f64]) -> Vec<f64> {
        let eps = self.config.eps;
        std::iter::once(logit(self.config.beta))
            .chain(x.iter().map(|v| logit(clip(*v, eps, 1.0 - eps))))
            .collect()
    }

    /// Probability that the target is 1. Leaves the weights untouched.
    pub fn predict(&self, sig: &Signature, x: &[f64]) -> Result<f64> {
        self.check_inputs(sig, x)?;
        let eps = self.config.eps;
        let beta_logit = logit(self.config.beta);
        let mut inputs = self.base_logits(x);
        let mut unit = 0;
        let mut out = 0.5;
        for layer in &self.layers {
            let mut next = Vec::with_capacity(layer.width + 1);
            next.push(beta_logit);
            for j in 0..layer.width {
                let row = &layer.weights[layer.row_range(j, sig.0[unit], self.num_signatures)];
                let z: f64 = row.iter().zip(&inputs).map(|(w, l)| w * l).sum();
                out = clip(sigmoid(z), eps, 1.0 - eps);
                next.push(logit(out));
                unit += 1;
            }
            inputs = next;
        }
        Ok(out)
    }

    /// One forward pass that also applies the local gradient step to every
    /// active row. Returns the prediction made before any weight changed.
    pub fn learn(&mut self, sig: &Signature, x: &[f64], target: bool, lr: f64) -> Result<f64> {
        self.learn_with_stats(sig, x, target, lr).map(|(p, _)| p)
    }

    pub(crate) fn learn_with_stats(
        &mut self,
        sig: &Signature,
        x: &[f64],
        target: bool,
        lr: f64,
    ) -> Result<(f64, PassStats)> {
        self.check_inputs(sig, x)?;
        if !(lr.is_finite() && lr > 0.0) {
            return Err(GlcbError::Config(format!("learning rate must be positive, got {lr}")));
        }
        let r = if target { 1.0 } else { 0.0 };
        let eps = self.config.eps;
        let b = self.config.weight_bound;
        let beta_logit = logit(self.config.beta);
        let ns = self.num_signatures;
        let mut stats = PassStats::default();
        let mut inputs = self.base_logits(x);
        let mut unit = 0;
        let mut out = 0.5;
        for layer in &mut self.layers {
            let mut next = Vec::with_capacity(layer.width + 1);
            next.push(beta_logit);
            for j in 0..layer.width {
                let range = layer.row_range(j, sig.0[unit], ns);
                let row = &mut layer.weights[range];
                let z: f64 = row.iter().zip(&inputs).map(|(w, l)| w * l).sum();
                out = clip(sigmoid(z), eps, 1.0 - eps);
                stats.neuron_evaluations += 1;
                descend(row, &inputs, out - r, lr, b);
                next.push(logit(out));
                unit += 1;
            }
            inputs = next;
        }
        Ok((out, stats))
    }
}
