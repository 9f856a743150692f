//! `train`: prepared dataset directory → checkpoint + per-epoch history
//! CSV. Features are encoded once up front through the frozen backbone;
//! the optimization loop then runs entirely on pooled vectors.

use std::path::Path;

use anyhow::{anyhow, Context, Result};
use boundedreg_core::reghead::HeadParams;
use boundedreg_core::rng::derive_seed;
use boundedreg_core::trainer::train;

use crate::checkpoint::{self, Checkpoint};
use crate::config::RunConfig;
use crate::report::fmt_float;
use crate::{encode, ingest, report};

pub fn run(data_dir: &Path, out: &Path, rc: &RunConfig, hash: &str) -> Result<()> {
    let train_records = ingest::read_prepared(&data_dir.join("train.jsonl"))?;
    let val_records = ingest::read_prepared(&data_dir.join("val.jsonl"))?;
    log::info!(
        "train: {} training / {} validation records",
        train_records.len(),
        val_records.len()
    );

    let backbone = rc.pipeline.build_backbone().map_err(|e| anyhow!(e))?;
    let train_set = encode::encode_records(&train_records, &backbone, &rc.pipeline, data_dir)?;
    let val_set = encode::encode_records(&val_records, &backbone, &rc.pipeline, data_dir)?;

    let mut init = HeadParams::seeded(rc.pipeline.d_model, derive_seed(rc.seed, "head-init"));
    init.dropout_p = rc.train.dropout_p;
    let outcome = train(&train_set, &val_set, init, &rc.train).context("training failed")?;

    std::fs::create_dir_all(out)
        .with_context(|| format!("creating output directory {}", out.display()))?;
    let rows: Vec<String> = outcome
        .history
        .iter()
        .map(|r| {
            format!(
                "{},{},{},{},{}",
                r.epoch,
                fmt_float(r.train_mse),
                fmt_float(r.val_rmse),
                fmt_float(r.val_plcc),
                fmt_float(r.val_srcc)
            )
        })
        .collect();
    report::write_csv(
        &out.join("history.csv"),
        hash,
        rc.seed,
        "epoch,train_mse,val_rmse,val_plcc,val_srcc",
        &rows,
    )?;

    let best_row = outcome
        .history
        .iter()
        .find(|r| r.epoch == outcome.best_epoch)
        .expect("best epoch always has a history row");
    checkpoint::save(
        &out.join("checkpoint.blob"),
        &Checkpoint {
            head: outcome.best,
            config_hash: hash.to_string(),
            encode_hash: crate::config::encode_hash(rc),
            seed: rc.seed,
            best_epoch: outcome.best_epoch as u64,
            val_rmse: best_row.val_rmse,
            val_plcc: best_row.val_plcc,
            val_srcc: best_row.val_srcc,
        },
    )?;

    log::info!(
        "train: best epoch {} (val_plcc {}, val_rmse {})",
        outcome.best_epoch,
        fmt_float(best_row.val_plcc),
        fmt_float(best_row.val_rmse)
    );
    Ok(())
}
