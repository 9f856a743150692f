//! Checkpoint file: the trained head's tensor blob plus bookkeeping meta —
//! producing config hash, root seed, best epoch and that epoch's
//! validation metrics. Encoding is canonical, so equal checkpoints are
//! equal bytes.

use std::path::Path;

use anyhow::{bail, Context, Result};
use boundedreg_core::blob::Blob;
use boundedreg_core::reghead::HeadParams;

#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    pub head: HeadParams,
    /// Full config hash of the training run, for provenance.
    pub config_hash: String,
    /// Hash of the feature-determining settings only; evaluation refuses
    /// to run when this doesn't match the current config.
    pub encode_hash: String,
    pub seed: u64,
    pub best_epoch: u64,
    pub val_rmse: f64,
    pub val_plcc: f64,
    pub val_srcc: f64,
}

/// 64 hex chars ↔ four little-endian u64 words, so the hash rides in the
/// blob's numeric metadata.
fn hash_to_words(hex: &str) -> Result<[u64; 4]> {
    if hex.len() != 64 {
        bail!("config hash must be 64 hex chars, got {}", hex.len());
    }
    let mut words = [0u64; 4];
    for (i, word) in words.iter_mut().enumerate() {
        let chunk = &hex[i * 16..(i + 1) * 16];
        *word = u64::from_str_radix(chunk, 16).context("config hash is not hex")?;
    }
    Ok(words)
}

fn words_to_hash(words: [u64; 4]) -> String {
    words.map(|w| format!("{w:016x}")).join("")
}

pub fn save(path: &Path, ck: &Checkpoint) -> Result<()> {
    let mut blob = ck.head.to_blob();
    let words = hash_to_words(&ck.config_hash)?;
    for (i, w) in words.iter().enumerate() {
        blob.meta.push((format!("ck.hash{i}"), *w));
    }
    let enc_words = hash_to_words(&ck.encode_hash)?;
    for (i, w) in enc_words.iter().enumerate() {
        blob.meta.push((format!("ck.enc{i}"), *w));
    }
    blob.meta.push((String::from("ck.seed"), ck.seed));
    blob.meta.push((String::from("ck.best_epoch"), ck.best_epoch));
    blob.meta.push((String::from("ck.val_rmse"), ck.val_rmse.to_bits()));
    blob.meta.push((String::from("ck.val_plcc"), ck.val_plcc.to_bits()));
    blob.meta.push((String::from("ck.val_srcc"), ck.val_srcc.to_bits()));
    std::fs::write(path, blob.encode())
        .with_context(|| format!("writing checkpoint {}", path.display()))?;
    Ok(())
}

pub fn load(path: &Path) -> Result<Checkpoint> {
    let bytes =
        std::fs::read(path).with_context(|| format!("reading checkpoint {}", path.display()))?;
    let blob = Blob::decode(&bytes)
        .with_context(|| format!("decoding checkpoint {}", path.display()))?;
    let meta = |name: &str| {
        blob.meta_value(name)
            .with_context(|| format!("checkpoint {} lacks {name}", path.display()))
    };
    let words = [
        meta("ck.hash0")?,
        meta("ck.hash1")?,
        meta("ck.hash2")?,
        meta("ck.hash3")?,
    ];
    let enc_words = [
        meta("ck.enc0")?,
        meta("ck.enc1")?,
        meta("ck.enc2")?,
        meta("ck.enc3")?,
    ];
    Ok(Checkpoint {
        head: HeadParams::from_blob(&blob)
            .with_context(|| format!("checkpoint {} head parameters", path.display()))?,
        config_hash: words_to_hash(words),
        encode_hash: words_to_hash(enc_words),
        seed: meta("ck.seed")?,
        best_epoch: meta("ck.best_epoch")?,
        val_rmse: f64::from_bits(meta("ck.val_rmse")?),
        val_plcc: f64::from_bits(meta("ck.val_plcc")?),
        val_srcc: f64::from_bits(meta("ck.val_srcc")?),
    })
}
