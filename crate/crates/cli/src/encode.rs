//! Shared path from prepared records to pooled feature vectors: load each
//! record's resolved image, render its metadata prompt, run both through
//! the frozen backbone and pool. Train and eval must agree byte-for-byte
//! on this step, which is why it lives in one place.

use std::path::Path;

use anyhow::{bail, Context, Result};
use boundedreg_core::backbone::Backbone;
use boundedreg_core::datapipe::ItemRecord;
use boundedreg_core::pipeline::{encode_sample, PipelineConfig};
use boundedreg_core::textprep::MetadataFields;
use boundedreg_core::trainer::PooledSample;

use crate::ppm;

/// Relative image paths resolve against `base_dir` (the dataset file's
/// directory), so prepared datasets stay relocatable.
pub fn encode_records(
    records: &[ItemRecord],
    backbone: &Backbone,
    cfg: &PipelineConfig,
    base_dir: &Path,
) -> Result<Vec<PooledSample>> {
    let mut samples = Vec::with_capacity(records.len());
    for record in records {
        let rel = match &record.resolved_image {
            Some(path) => path,
            None => bail!("record {} has no resolved image", record.id),
        };
        let image_path = if Path::new(rel).is_absolute() {
            Path::new(rel).to_path_buf()
        } else {
            base_dir.join(rel)
        };
        let image = ppm::read_ppm(&image_path)
            .with_context(|| format!("record {}", record.id))?;
        let fields = MetadataFields {
            title: record.title.clone(),
            description: record.description.clone(),
            features: record.features.clone(),
            main_category: record.main_category.clone(),
        };
        let features = encode_sample(backbone, &image, &fields, cfg)
            .with_context(|| format!("encoding record {}", record.id))?;
        samples.push(PooledSample { features, target: record.average_rating });
    }
    Ok(samples)
}
