//! Trainable rating head: mask-aware mean pooling over hidden states, a
//! two-layer MLP (Linear → ReLU → Linear) with inverted dropout, and a
//! scaled sigmoid mapping the scalar logit into the rating interval (1, 5).
//! Backward passes are hand-derived and exact — no autodiff, no
//! approximation — so they can be held to finite-difference oracles at
//! tight tolerances.
//!
//! The head runs in f64 even though the backbone is f32: gradient checks
//! at 1e-5 relative error leave no room for single-precision noise.

use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use crate::backbone::HiddenStates;
use crate::blob::{Blob, Tensor};
use crate::rng::SplitMix64;
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct HeadParams {
    pub dim: usize,
    pub hidden: usize,
    /// dim × hidden, row per input channel.
    pub w1: Vec<f64>,
    pub b1: Vec<f64>,
    pub w2: Vec<f64>,
    pub b2: f64,
    pub dropout_p: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Prediction {
    pub logit: f64,
    pub rating: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct HeadGrads {
    pub w1: Vec<f64>,
    pub b1: Vec<f64>,
    pub w2: Vec<f64>,
    pub b2: f64,
    pub d_pool: Vec<f64>,
}

impl HeadParams {
    /// All-zero parameters: predicts the rating midpoint 3.0 for any input.
    pub fn zeros(dim: usize) -> Self {
        let hidden = dim / 2;
        Self {
            dim,
            hidden,
            w1: vec![0.0; dim * hidden],
            b1: vec![0.0; hidden],
            w2: vec![0.0; hidden],
            b2: 0.0,
            dropout_p: 0.1,
        }
    }

    /// Seeded init, uniform ±1/sqrt(fan_in), drawn in the order w1, b1, w2,
    /// b2 from a single splitmix64 stream. A zero init would never train:
    /// the ReLU layer's gradient is gated by w2, so everything except b2
    /// starts dead.
    pub fn seeded(dim: usize, seed: u64) -> Self {
        let hidden = dim / 2;
        let mut rng = SplitMix64::new(seed);
        let mut draw = |n: usize, fan_in: usize| -> Vec<f64> {
            let bound = 1.0 / libm::sqrt(fan_in as f64);
            (0..n).map(|_| rng.uniform_f64(-bound, bound)).collect()
        };
        let w1 = draw(dim * hidden, dim);
        let b1 = draw(hidden, dim);
        let w2 = draw(hidden, hidden);
        let b2 = draw(1, hidden)[0];
        Self { dim, hidden, w1, b1, w2, b2, dropout_p: 0.1 }
    }

    pub fn validate(&self) -> Result<()> {
        if self.dim < 2 || self.dim % 2 != 0 || self.hidden != self.dim / 2 {
            return Err(Error::InvalidConfig("head dims must satisfy hidden == dim/2"));
        }
        if self.w1.len() != self.dim * self.hidden
            || self.b1.len() != self.hidden
            || self.w2.len() != self.hidden
        {
            return Err(Error::InvalidConfig("head parameter shapes inconsistent"));
        }
        if !(0.0..1.0).contains(&self.dropout_p) {
            return Err(Error::InvalidConfig("dropout_p must lie in [0, 1)"));
        }
        let finite = self.w1.iter().chain(&self.b1).chain(&self.w2).all(|v| v.is_finite());
        if !finite || !self.b2.is_finite() {
            return Err(Error::InvalidConfig("head parameters must be finite"));
        }
        Ok(())
    }

    pub fn to_blob(&self) -> Blob {
        Blob {
            meta: vec![
                (String::from("dim"), self.dim as u64),
                (String::from("hidden"), self.hidden as u64),
            ],
            tensors: vec![
                Tensor::f64("w1", &[self.dim as u32, self.hidden as u32], self.w1.clone()),
                Tensor::f64("b1", &[self.hidden as u32], self.b1.clone()),
                Tensor::f64("w2", &[self.hidden as u32], self.w2.clone()),
                Tensor::f64("b2", &[1], vec![self.b2]),
                Tensor::f64("dropout_p", &[1], vec![self.dropout_p]),
            ],
        }
    }

    pub fn from_blob(blob: &Blob) -> Result<Self> {
        let dim = blob.meta_value("dim").ok_or(Error::InvalidBlob("missing head dim"))? as usize;
        let hidden =
            blob.meta_value("hidden").ok_or(Error::InvalidBlob("missing head hidden"))? as usize;
        let tensor = |name: &str, want: usize| -> Result<Vec<f64>> {
            let t = blob.tensor(name).ok_or(Error::InvalidBlob("missing head tensor"))?;
            let v = t.data.as_f64().ok_or(Error::InvalidBlob("head tensor dtype"))?;
            if v.len() != want {
                return Err(Error::InvalidBlob("head tensor shape"));
            }
            Ok(v.to_vec())
        };
        let params = Self {
            dim,
            hidden,
            w1: tensor("w1", dim * hidden)?,
            b1: tensor("b1", hidden)?,
            w2: tensor("w2", hidden)?,
            b2: tensor("b2", 1)?[0],
            dropout_p: tensor("dropout_p", 1)?[0],
        };
        params.validate().map_err(|_| Error::InvalidBlob("invalid head parameters"))?;
        Ok(params)
    }
}

impl HeadGrads {
    pub fn zeros(dim: usize, hidden: usize) -> Self {
        Self {
            w1: vec![0.0; dim * hidden],
            b1: vec![0.0; hidden],
            w2: vec![0.0; hidden],
            b2: 0.0,
            d_pool: vec![0.0; dim],
        }
    }

    pub fn accumulate(&mut self, other: &HeadGrads) {
        for (a, b) in self.w1.iter_mut().zip(&other.w1) {
            *a += b;
        }
        for (a, b) in self.b1.iter_mut().zip(&other.b1) {
            *a += b;
        }
        for (a, b) in self.w2.iter_mut().zip(&other.w2) {
            *a += b;
        }
        self.b2 += other.b2;
        for (a, b) in self.d_pool.iter_mut().zip(&other.d_pool) {
            *a += b;
        }
    }

    pub fn scale(&mut self, s: f64) {
        for v in self
            .w1
            .iter_mut()
            .chain(self.b1.iter_mut())
            .chain(self.w2.iter_mut())
            .chain(self.d_pool.iter_mut())
        {
            *v *= s;
        }
        self.b2 *= s;
    }
}

/// Mean of the hidden-state rows whose mask bit is set; padding rows
/// contribute nothing by construction. Accumulates in f64.
pub fn masked_mean_pool(h: &HiddenStates) -> Result<Vec<f64>> {
    let live = h.mask.iter().filter(|&&m| m == 1).count();
    if live == 0 {
        return Err(Error::NoValidTokens);
    }
    let mut pooled = vec![0.0f64; h.dim];
    for (pos, &m) in h.mask.iter().enumerate() {
        if m == 1 {
            let row = &h.values[pos * h.dim..(pos + 1) * h.dim];
            for (acc, &v) in pooled.iter_mut().zip(row) {
                *acc += v as f64;
            }
        }
    }
    let inv = 1.0 / live as f64;
    for v in &mut pooled {
        *v *= inv;
    }
    Ok(pooled)
}

/// Numerically stable logistic function.
pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + libm::exp(-x))
    } else {
        let e = libm::exp(x);
        e / (1.0 + e)
    }
}

/// Map a logit to the rating scale: ŷ = 1 + 4σ(x). Mathematically the open
/// interval (1, 5); in floating point, |x| ≳ 37 saturates σ to exactly 0 or
/// 1, so extreme logits round to the boundary. Documented, not clamped.
pub fn scale_to_rating(logit: f64) -> f64 {
    1.0 + 4.0 * sigmoid(logit)
}

fn hidden_pre_activations(h_pool: &[f64], params: &HeadParams) -> Vec<f64> {
    let mut z = params.b1.clone();
    for (i, &x) in h_pool.iter().enumerate() {
        let row = &params.w1[i * params.hidden..(i + 1) * params.hidden];
        for (zj, &w) in z.iter_mut().zip(row) {
            *zj += x * w;
        }
    }
    z
}

fn check_input(h_pool: &[f64], params: &HeadParams, dropout: Option<&[f64]>) -> Result<()> {
    if h_pool.len() != params.dim {
        return Err(Error::DimensionMismatch(alloc::format!(
            "pooled vector dim {} does not match head dim {}",
            h_pool.len(),
            params.dim
        )));
    }
    if let Some(mask) = dropout {
        if mask.len() != params.hidden {
            return Err(Error::LengthMismatch);
        }
    }
    if h_pool.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFiniteActivation);
    }
    Ok(())
}

/// Forward pass. `dropout` carries the per-unit keep mask for a training
/// step (entries 0 or 1/(1−p), produced by [`dropout_mask`]); `None` means
/// evaluation mode, which is deterministic.
pub fn head_forward(
    h_pool: &[f64],
    params: &HeadParams,
    dropout: Option<&[f64]>,
) -> Result<Prediction> {
    check_input(h_pool, params, dropout)?;
    let z = hidden_pre_activations(h_pool, params);
    let mut logit = params.b2;
    for (j, &zj) in z.iter().enumerate() {
        let mut a = if zj > 0.0 { zj } else { 0.0 };
        if let Some(mask) = dropout {
            a *= mask[j];
        }
        logit += params.w2[j] * a;
    }
    Ok(Prediction { logit, rating: scale_to_rating(logit) })
}

/// Inverted-dropout keep mask: each unit is dropped (0.0) with probability
/// p, kept with weight 1/(1−p) otherwise, so eval needs no rescaling.
pub fn dropout_mask(rng: &mut SplitMix64, hidden: usize, p: f64) -> Vec<f64> {
    debug_assert!((0.0..1.0).contains(&p));
    let keep = 1.0 / (1.0 - p);
    (0..hidden).map(|_| if rng.next_unit_f64() < p { 0.0 } else { keep }).collect()
}

/// Exact gradients of the per-sample squared error L = (ŷ − y)² with
/// respect to every head parameter and to the pooled input. Must be called
/// with the same dropout mask as the paired forward. ReLU's derivative at
/// exactly zero is taken as 0.
pub fn head_backward(
    h_pool: &[f64],
    params: &HeadParams,
    target: f64,
    dropout: Option<&[f64]>,
) -> Result<(Prediction, HeadGrads)> {
    check_input(h_pool, params, dropout)?;
    let z = hidden_pre_activations(h_pool, params);
    let mut a = vec![0.0f64; params.hidden];
    for (j, &zj) in z.iter().enumerate() {
        let mut v = if zj > 0.0 { zj } else { 0.0 };
        if let Some(mask) = dropout {
            v *= mask[j];
        }
        a[j] = v;
    }
    let mut logit = params.b2;
    for (w, &aj) in params.w2.iter().zip(&a) {
        logit += w * aj;
    }
    let s = sigmoid(logit);
    let rating = 1.0 + 4.0 * s;

    // dL/dx = 2(ŷ − y) · dŷ/dx, with dŷ/dx = 4σ(x)(1 − σ(x))
    let dl_dx = 2.0 * (rating - target) * 4.0 * s * (1.0 - s);

    let mut grads = HeadGrads::zeros(params.dim, params.hidden);
    grads.b2 = dl_dx;
    for (gj, &aj) in grads.w2.iter_mut().zip(&a) {
        *gj = dl_dx * aj;
    }
    // gradient at the pre-activation: gated by ReLU and the dropout mask
    let mut gz = vec![0.0f64; params.hidden];
    for j in 0..params.hidden {
        if z[j] > 0.0 {
            let keep = dropout.map_or(1.0, |m| m[j]);
            gz[j] = dl_dx * params.w2[j] * keep;
        }
    }
    for (i, &xi) in h_pool.iter().enumerate() {
        let wrow = &params.w1[i * params.hidden..(i + 1) * params.hidden];
        let grow = &mut grads.w1[i * params.hidden..(i + 1) * params.hidden];
        let mut dxi = 0.0;
        for j in 0..params.hidden {
            grow[j] = gz[j] * xi;
            dxi += gz[j] * wrow[j];
        }
        grads.d_pool[i] = dxi;
    }
    grads.b1.copy_from_slice(&gz);

    Ok((Prediction { logit, rating }, grads))
}
