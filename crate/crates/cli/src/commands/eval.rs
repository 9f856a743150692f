//! `eval`: checkpoint + prepared dataset → metrics CSV and a rounded
//! prediction/target density grid CSV. Refuses to evaluate under a config
//! that differs from the one the checkpoint was trained with — metrics
//! from mismatched preprocessing would be quietly meaningless.

use std::path::Path;

use anyhow::{anyhow, bail, Context, Result};
use boundedreg_core::metrics::{bin_label, density_grid, evaluate};
use boundedreg_core::trainer::predict_all;

use crate::config::RunConfig;
use crate::report::fmt_float;
use crate::{checkpoint, encode, ingest, report};

pub fn run(ckpt_path: &Path, data: &Path, out: &Path, rc: &RunConfig, hash: &str) -> Result<()> {
    let ck = checkpoint::load(ckpt_path)?;
    let current_encode = crate::config::encode_hash(rc);
    if ck.encode_hash != current_encode {
        bail!(
            "config hash mismatch: checkpoint {} encodes features under {} but the current config encodes under {}",
            ckpt_path.display(),
            ck.encode_hash,
            current_encode
        );
    }

    // accept either a prepared directory (evaluates its validation split)
    // or a single JSONL file
    let dataset = if data.is_dir() { data.join("val.jsonl") } else { data.to_path_buf() };
    let records = ingest::read_prepared(&dataset)?;
    let base_dir = dataset.parent().unwrap_or_else(|| Path::new("."));

    let backbone = rc.pipeline.build_backbone().map_err(|e| anyhow!(e))?;
    let samples = encode::encode_records(&records, &backbone, &rc.pipeline, base_dir)?;
    let targets: Vec<f64> = samples.iter().map(|s| s.target).collect();
    let preds = predict_all(&ck.head, &samples).map_err(|e| anyhow!(e))?;

    let summary = evaluate(&preds, &targets).context("computing evaluation metrics")?;
    let grid = density_grid(&preds, &targets).context("computing density grid")?;

    std::fs::create_dir_all(out)
        .with_context(|| format!("creating output directory {}", out.display()))?;
    report::write_csv(
        &out.join("metrics.csv"),
        hash,
        rc.seed,
        "n,rmse,plcc,srcc",
        &[format!(
            "{},{},{},{}",
            summary.n,
            fmt_float(summary.rmse),
            fmt_float(summary.plcc),
            fmt_float(summary.srcc)
        )],
    )?;
    let rows: Vec<String> = grid
        .iter()
        .map(|c| format!("{},{},{}", bin_label(c.pred_bin), bin_label(c.target_bin), c.count))
        .collect();
    report::write_csv(&out.join("density.csv"), hash, rc.seed, "pred_bin,target_bin,count", &rows)?;

    log::info!(
        "eval: n={} rmse={} plcc={} srcc={}",
        summary.n,
        fmt_float(summary.rmse),
        fmt_float(summary.plcc),
        fmt_float(summary.srcc)
    );
    Ok(())
}
