//! Evaluation metrics: RMSE, Pearson correlation (PLCC), Spearman rank
//! correlation (SRCC) with average-rank tie handling, and the 0.1-wide
//! density grid over the rating square [1,5]×[1,5].
//!
//! Everything here is pure f64 and deterministic; correlation uses the
//! two-pass population-covariance form, which keeps small integer/dyadic
//! fixtures exact enough to compare against closed-form oracles bit for bit.

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec::Vec;

use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EvalReport {
    pub rmse: f64,
    pub plcc: f64,
    pub srcc: f64,
    pub n: usize,
}

fn check_pair(preds: &[f64], targets: &[f64]) -> Result<()> {
    if preds.len() != targets.len() {
        return Err(Error::LengthMismatch);
    }
    if preds.is_empty() {
        return Err(Error::EmptyBatch);
    }
    Ok(())
}

/// True when every element equals every other (min == max). Distinguishes
/// genuinely constant vectors from merely low-variance ones, which matters
/// for the "zero variance" error contract.
pub fn is_constant(xs: &[f64]) -> bool {
    match xs.split_first() {
        None => true,
        Some((first, rest)) => rest.iter().all(|x| x == first),
    }
}

pub fn rmse(preds: &[f64], targets: &[f64]) -> Result<f64> {
    Ok(libm::sqrt(crate::trainer::mse_loss(preds, targets)?))
}

fn pearson_checked(xs: &[f64], ys: &[f64]) -> Result<f64> {
    let n = xs.len();
    let mx = xs.iter().sum::<f64>() / n as f64;
    let my = ys.iter().sum::<f64>() / n as f64;
    let mut sxy = 0.0;
    let mut sxx = 0.0;
    let mut syy = 0.0;
    for (&x, &y) in xs.iter().zip(ys) {
        let dx = x - mx;
        let dy = y - my;
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    // |r| ≤ 1 mathematically; rounding can overshoot by an ulp, so clamp.
    Ok((sxy / libm::sqrt(sxx * syy)).clamp(-1.0, 1.0))
}

/// Pearson linear correlation. Errors on constant input because the
/// correlation is undefined there, not merely unstable.
pub fn plcc(preds: &[f64], targets: &[f64]) -> Result<f64> {
    check_pair(preds, targets)?;
    if preds.len() < 2 {
        return Err(Error::TooFewSamples);
    }
    if is_constant(preds) || is_constant(targets) {
        return Err(Error::ZeroVariance);
    }
    pearson_checked(preds, targets)
}

/// Average ranks, 1-based; a tie group spanning sorted slots i..=j gets
/// rank (i+j)/2 + 1 for every member. Sorting is stable on the original
/// index order (irrelevant for the ranks themselves, but deterministic).
pub fn average_ranks(xs: &[f64]) -> Vec<f64> {
    let n = xs.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| xs[a].total_cmp(&xs[b]));
    let mut ranks = alloc::vec![0.0f64; n];
    let mut i = 0;
    while i < n {
        let mut j = i;
        while j + 1 < n && xs[order[j + 1]] == xs[order[i]] {
            j += 1;
        }
        let r = (i + j) as f64 / 2.0 + 1.0;
        for &idx in &order[i..=j] {
            ranks[idx] = r;
        }
        i = j + 1;
    }
    ranks
}

/// Spearman rank correlation: Pearson over average ranks.
pub fn srcc(preds: &[f64], targets: &[f64]) -> Result<f64> {
    check_pair(preds, targets)?;
    if preds.len() < 2 {
        return Err(Error::TooFewSamples);
    }
    let rp = average_ranks(preds);
    let rt = average_ranks(targets);
    if is_constant(&rp) || is_constant(&rt) {
        return Err(Error::ZeroRankVariance);
    }
    pearson_checked(&rp, &rt)
}

/// One cell of the rating density grid. Bin indices are the rating times
/// ten after half-up rounding to one decimal, so they run 10..=50.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DensityCell {
    pub pred_bin: u8,
    pub target_bin: u8,
    pub count: u64,
}

/// Decimal label for a bin index, e.g. 31 → "3.1".
pub fn bin_label(idx: u8) -> String {
    alloc::format!("{}.{}", idx / 10, idx % 10)
}

// Half-up rounding to one decimal, as a bin index. The 1e-9 nudge keeps
// decimal literals that sit on a .x5 boundary (whose nearest double is a
// hair below it, like 3.05) rounding up as intended.
fn bin_index(x: f64) -> u8 {
    libm::floor(x * 10.0 + 0.5 + 1e-9) as u8
}

/// Count (pred, target) pairs per 0.1×0.1 cell after half-up rounding to
/// one decimal. Output is sparse (zero cells omitted) and sorted by
/// (pred_bin, target_bin); counts always sum to the input length.
pub fn density_grid(preds: &[f64], targets: &[f64]) -> Result<Vec<DensityCell>> {
    if preds.len() != targets.len() {
        return Err(Error::LengthMismatch);
    }
    let in_range = |x: f64| (1.0 - 1e-9..=5.0 + 1e-9).contains(&x);
    let mut cells: BTreeMap<(u8, u8), u64> = BTreeMap::new();
    for (i, (&p, &t)) in preds.iter().zip(targets).enumerate() {
        if !in_range(p) || !in_range(t) {
            return Err(Error::OutOfRange(i));
        }
        *cells.entry((bin_index(p), bin_index(t))).or_insert(0) += 1;
    }
    Ok(cells
        .into_iter()
        .map(|((pred_bin, target_bin), count)| DensityCell { pred_bin, target_bin, count })
        .collect())
}

/// Full report: RMSE plus both correlations over the same pairs.
pub fn evaluate(preds: &[f64], targets: &[f64]) -> Result<EvalReport> {
    check_pair(preds, targets)?;
    if preds.len() < 2 {
        return Err(Error::TooFewSamples);
    }
    Ok(EvalReport {
        rmse: rmse(preds, targets)?,
        plcc: plcc(preds, targets)?,
        srcc: srcc(preds, targets)?,
        n: preds.len(),
    })
}
