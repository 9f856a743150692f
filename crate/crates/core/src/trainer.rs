//! Regression-head training loop: MSE objective, decoupled-weight-decay
//! adaptive optimizer with bias correction, linear warmup → linear decay
//! schedule, and early stopping on validation Pearson correlation.
//!
//! The backbone is frozen, so each sample's pooled feature vector is
//! constant across the whole run. Training therefore operates on
//! precomputed [`PooledSample`]s — encode once, train many epochs — which
//! is also what keeps the end-to-end tests fast.
//!
//! Everything is f64, single-threaded, and seeded: two runs with the same
//! config and data produce identical history and identical parameters.

use alloc::vec::Vec;

use crate::metrics;
use crate::reghead::{head_backward, head_forward, dropout_mask, HeadGrads, HeadParams};
use crate::rng::{derive_seed, shuffle, SplitMix64};
use crate::{Error, Result};

const BETA1: f64 = 0.9;
const BETA2: f64 = 0.999;
const EPS: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub peak_lr: f64,
    pub warmup_frac: f64,
    pub batch_size: usize,
    pub max_epochs: usize,
    /// Epochs without a validation-PLCC improvement before stopping.
    pub patience: usize,
    pub weight_decay: f64,
    pub dropout_p: f64,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            peak_lr: 4e-4,
            warmup_frac: 0.03,
            batch_size: 64,
            max_epochs: 5,
            patience: 1,
            weight_decay: 0.01,
            dropout_p: 0.1,
            seed: 42,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.peak_lr > 0.0) {
            return Err(Error::InvalidConfig("peak_lr must be positive"));
        }
        if !(self.warmup_frac > 0.0 && self.warmup_frac < 1.0) {
            return Err(Error::InvalidConfig("warmup_frac must lie in (0, 1)"));
        }
        if self.batch_size == 0 {
            return Err(Error::InvalidConfig("batch_size must be positive"));
        }
        if self.patience == 0 {
            return Err(Error::InvalidConfig("patience must be at least 1"));
        }
        if !(0.0..1.0).contains(&self.dropout_p) {
            return Err(Error::InvalidConfig("dropout_p must lie in [0, 1)"));
        }
        if !(self.weight_decay >= 0.0) {
            return Err(Error::InvalidConfig("weight_decay must be non-negative"));
        }
        Ok(())
    }
}

/// One precomputed training example: pooled backbone features and the
/// target rating.
#[derive(Debug, Clone, PartialEq)]
pub struct PooledSample {
    pub features: Vec<f64>,
    pub target: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpochStats {
    pub epoch: usize,
    pub train_mse: f64,
    pub val_rmse: f64,
    pub val_plcc: f64,
    pub val_srcc: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainOutcome {
    pub best: HeadParams,
    pub best_epoch: usize,
    pub history: Vec<EpochStats>,
}

pub fn mse_loss(preds: &[f64], targets: &[f64]) -> Result<f64> {
    if preds.len() != targets.len() {
        return Err(Error::LengthMismatch);
    }
    if preds.is_empty() {
        return Err(Error::EmptyBatch);
    }
    let sum: f64 = preds.iter().zip(targets).map(|(p, t)| (p - t) * (p - t)).sum();
    Ok(sum / preds.len() as f64)
}

/// Linear warmup to `peak_lr` over W = ceil(warmup_frac·total) steps, then
/// linear decay to zero at `total_steps`. The warmup endpoint (step W−1)
/// and the first decay step both evaluate to exactly peak_lr, so the
/// schedule is continuous at the junction.
pub fn lr_at(step: usize, total_steps: usize, cfg: &TrainConfig) -> f64 {
    debug_assert!(total_steps >= 1 && step <= total_steps);
    let w = libm::ceil(cfg.warmup_frac * total_steps as f64) as usize;
    if step < w {
        cfg.peak_lr * (step + 1) as f64 / w as f64
    } else {
        let denom = (total_steps - w).max(1);
        cfg.peak_lr * (total_steps - step) as f64 / denom as f64
    }
}

#[derive(Debug, Clone, PartialEq)]
struct Moments {
    w1: Vec<f64>,
    b1: Vec<f64>,
    w2: Vec<f64>,
    b2: f64,
}

impl Moments {
    fn zeros(dim: usize, hidden: usize) -> Self {
        Self {
            w1: alloc::vec![0.0; dim * hidden],
            b1: alloc::vec![0.0; hidden],
            w2: alloc::vec![0.0; hidden],
            b2: 0.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AdamState {
    m: Moments,
    v: Moments,
    step: u64,
}

impl AdamState {
    pub fn new(dim: usize, hidden: usize) -> Self {
        Self { m: Moments::zeros(dim, hidden), v: Moments::zeros(dim, hidden), step: 0 }
    }

    pub fn step_count(&self) -> u64 {
        self.step
    }
}

fn adamw_tensor(
    params: &mut [f64],
    grads: &[f64],
    m: &mut [f64],
    v: &mut [f64],
    lr: f64,
    wd: f64,
    bc1: f64,
    bc2: f64,
) {
    for i in 0..params.len() {
        // decoupled weight decay first, then the adaptive step
        if wd != 0.0 {
            params[i] *= 1.0 - lr * wd;
        }
        let g = grads[i];
        m[i] = BETA1 * m[i] + (1.0 - BETA1) * g;
        v[i] = BETA2 * v[i] + (1.0 - BETA2) * g * g;
        let mh = m[i] / bc1;
        let vh = v[i] / bc2;
        params[i] -= lr * mh / (libm::sqrt(vh) + EPS);
    }
}

/// One optimizer step over all head tensors. Weight decay touches the
/// weight matrices only; biases are exempt. Moments carry bias correction
/// with the shared step counter.
pub fn optimizer_step(
    params: &mut HeadParams,
    grads: &HeadGrads,
    state: &mut AdamState,
    lr: f64,
    cfg: &TrainConfig,
) -> Result<()> {
    if grads.w1.len() != params.w1.len()
        || grads.b1.len() != params.b1.len()
        || grads.w2.len() != params.w2.len()
    {
        return Err(Error::LengthMismatch);
    }
    let finite = grads.w1.iter().chain(&grads.b1).chain(&grads.w2).all(|g| g.is_finite());
    if !finite || !grads.b2.is_finite() {
        return Err(Error::Diverged);
    }
    state.step += 1;
    let t = state.step as f64;
    let bc1 = 1.0 - libm::pow(BETA1, t);
    let bc2 = 1.0 - libm::pow(BETA2, t);
    let wd = cfg.weight_decay;
    adamw_tensor(&mut params.w1, &grads.w1, &mut state.m.w1, &mut state.v.w1, lr, wd, bc1, bc2);
    adamw_tensor(&mut params.w2, &grads.w2, &mut state.m.w2, &mut state.v.w2, lr, wd, bc1, bc2);
    // biases: no decay
    adamw_tensor(&mut params.b1, &grads.b1, &mut state.m.b1, &mut state.v.b1, lr, 0.0, bc1, bc2);
    let mut b2 = [params.b2];
    adamw_tensor(
        &mut b2,
        &[grads.b2],
        core::slice::from_mut(&mut state.m.b2),
        core::slice::from_mut(&mut state.v.b2),
        lr,
        0.0,
        bc1,
        bc2,
    );
    params.b2 = b2[0];
    Ok(())
}

/// Evaluation-mode predictions for a batch of pooled samples.
pub fn predict_all(params: &HeadParams, samples: &[PooledSample]) -> Result<Vec<f64>> {
    samples
        .iter()
        .map(|s| head_forward(&s.features, params, None).map(|p| p.rating))
        .collect()
}

// Validation correlations distinguish two degenerate situations: constant
// *targets* mean the validation set cannot rank anything and the run is
// misconfigured (hard error), while constant *predictions* are an honest
// (bad) model state recorded as NaN — NaN never wins best-epoch selection.
fn val_correlation(
    result: Result<f64>,
    targets_constant: bool,
    tolerate_degenerate_targets: bool,
) -> Result<f64> {
    match result {
        Ok(v) => Ok(v),
        Err(Error::ZeroVariance) | Err(Error::ZeroRankVariance) => {
            if targets_constant && !tolerate_degenerate_targets {
                Err(Error::DegenerateValidationSet)
            } else {
                Ok(f64::NAN)
            }
        }
        Err(e) => Err(e),
    }
}

/// Train the head on precomputed pooled features. Returns the parameters
/// from the epoch with the best (finite) validation PLCC plus the full
/// epoch history. Stops early after `patience` epochs without improvement,
/// or immediately once an epoch's training MSE reaches exactly zero (the
/// gradient is identically zero from then on, so later epochs cannot
/// change anything).
pub fn train(
    train_set: &[PooledSample],
    val_set: &[PooledSample],
    init: HeadParams,
    cfg: &TrainConfig,
) -> Result<TrainOutcome> {
    cfg.validate()?;
    init.validate()?;
    if cfg.max_epochs == 0 {
        return Err(Error::NothingToTrain);
    }
    if train_set.is_empty() || val_set.is_empty() {
        return Err(Error::EmptyBatch);
    }
    for s in train_set.iter().chain(val_set) {
        if s.features.len() != init.dim {
            return Err(Error::DimensionMismatch(alloc::format!(
                "sample feature dim {} does not match head dim {}",
                s.features.len(),
                init.dim
            )));
        }
    }

    let val_targets: Vec<f64> = val_set.iter().map(|s| s.target).collect();
    let val_targets_constant = metrics::is_constant(&val_targets);

    let n = train_set.len();
    let batches_per_epoch = n.div_ceil(cfg.batch_size);
    let total_steps = batches_per_epoch * cfg.max_epochs;

    let mut params = init;
    let mut state = AdamState::new(params.dim, params.hidden);
    let mut shuffle_rng = SplitMix64::new(derive_seed(cfg.seed, "shuffle"));
    let mut dropout_rng = SplitMix64::new(derive_seed(cfg.seed, "dropout"));

    let mut history: Vec<EpochStats> = Vec::new();
    let mut best: Option<(HeadParams, usize, f64)> = None;
    let mut fallback: Option<(HeadParams, usize)> = None;
    let mut since_improve = 0usize;
    let mut global_step = 0usize;
    let mut order: Vec<usize> = (0..n).collect();

    for epoch in 1..=cfg.max_epochs {
        shuffle(&mut shuffle_rng, &mut order);
        let mut sq_err_sum = 0.0f64;
        for chunk in order.chunks(cfg.batch_size) {
            let mut grads = HeadGrads::zeros(params.dim, params.hidden);
            for &idx in chunk {
                let sample = &train_set[idx];
                let mask = dropout_mask(&mut dropout_rng, params.hidden, cfg.dropout_p);
                let (pred, g) = head_backward(&sample.features, &params, sample.target, Some(&mask))?;
                sq_err_sum += (pred.rating - sample.target) * (pred.rating - sample.target);
                grads.accumulate(&g);
            }
            grads.scale(1.0 / chunk.len() as f64);
            let lr = lr_at(global_step, total_steps, cfg);
            optimizer_step(&mut params, &grads, &mut state, lr, cfg)?;
            global_step += 1;
        }
        let train_mse = sq_err_sum / n as f64;
        let fitted_exactly = train_mse == 0.0;

        let preds = predict_all(&params, val_set)?;
        let val_rmse = metrics::rmse(&preds, &val_targets)?;
        let val_plcc =
            val_correlation(metrics::plcc(&preds, &val_targets), val_targets_constant, fitted_exactly)?;
        let val_srcc =
            val_correlation(metrics::srcc(&preds, &val_targets), val_targets_constant, fitted_exactly)?;

        history.push(EpochStats { epoch, train_mse, val_rmse, val_plcc, val_srcc });
        if fallback.is_none() {
            fallback = Some((params.clone(), epoch));
        }

        let improved = val_plcc.is_finite()
            && best.as_ref().map_or(true, |&(_, _, best_plcc)| val_plcc > best_plcc);
        if improved {
            best = Some((params.clone(), epoch, val_plcc));
            since_improve = 0;
        } else {
            since_improve += 1;
        }

        if fitted_exactly || since_improve >= cfg.patience {
            break;
        }
    }

    let (best_params, best_epoch) = match best {
        Some((p, e, _)) => (p, e),
        // no epoch produced a finite validation PLCC; fall back to the
        // earliest parameters so the outcome is still deterministic
        None => fallback.expect("at least one epoch ran"),
    };
    Ok(TrainOutcome { best: best_params, best_epoch, history })
}
