//! `prepare`: raw JSONL → filtered, stratified, split dataset directory.
//! Writes `train.jsonl`, `val.jsonl` and `rejects.csv` into the output
//! directory; nothing else, nowhere else.

use std::path::Path;

use anyhow::{Context, Result};
use boundedreg_core::datapipe::{filter_items, split_holdout, stratified_sample, ItemRecord};

use crate::config::RunConfig;
use crate::{ingest, report};

/// Relative image references in the raw file point next to that file; the
/// prepared files live elsewhere and may be consumed from any working
/// directory, so pin such references to an absolute location before
/// writing them out. URLs and already-absolute paths pass through
/// untouched.
fn anchor_image_paths(records: &mut [ItemRecord], raw_file: &Path) -> Result<()> {
    let raw_dir = match raw_file.parent() {
        Some(p) if !p.as_os_str().is_empty() => p.to_path_buf(),
        _ => std::path::PathBuf::from("."),
    };
    let raw_dir = std::path::absolute(&raw_dir)
        .with_context(|| format!("resolving data directory {}", raw_dir.display()))?;
    for record in records {
        if let Some(image) = &record.resolved_image {
            let is_url = image.starts_with("http://") || image.starts_with("https://");
            if !is_url && !Path::new(image).is_absolute() {
                record.resolved_image =
                    Some(raw_dir.join(image).to_string_lossy().into_owned());
            }
        }
    }
    Ok(())
}

pub fn run(data: &Path, out: &Path, rc: &RunConfig, hash: &str) -> Result<()> {
    let (records, rejects) = ingest::read_jsonl(data)?;
    let ingested = records.len();

    let mut filtered = filter_items(records, &rc.sampling);
    anchor_image_paths(&mut filtered, data)?;
    let sampled = stratified_sample(filtered, &rc.sampling);
    let kept = sampled.len();
    let (train, val) = split_holdout(sampled, &rc.sampling)
        .with_context(|| format!("splitting {kept} records with holdout {}", rc.sampling.holdout_n))?;

    std::fs::create_dir_all(out)
        .with_context(|| format!("creating output directory {}", out.display()))?;
    ingest::write_jsonl(&out.join("train.jsonl"), &train, hash, rc.seed)?;
    ingest::write_jsonl(&out.join("val.jsonl"), &val, hash, rc.seed)?;
    report::write_csv(
        &out.join("rejects.csv"),
        hash,
        rc.seed,
        "line,reason",
        &ingest::reject_rows(&rejects),
    )?;

    log::info!(
        "prepare: {ingested} records in, {} rejected lines, {} train / {} val out",
        rejects.len(),
        train.len(),
        val.len()
    );
    Ok(())
}
