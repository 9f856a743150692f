//! Run configuration: defaults, optional TOML file, flag overrides — in
//! that order, flags winning. The merged result is hashed (sha256 over a
//! canonical key=value listing) and that hash is embedded in every output
//! file, so artifacts can be traced back to the exact settings that
//! produced them. Paths are deliberately excluded from the hash: moving a
//! dataset must not change what the run "is".

use std::fmt::Write as _;
use std::path::Path;

use anyhow::{bail, Context, Result};
use boundedreg_core::datapipe::SamplingConfig;
use boundedreg_core::effscore::{
    ArchSpec, CesConfig, ConnectorSpec, DecoderSpec, FlopConvention, TextBudget, VisionSpec,
};
use boundedreg_core::pipeline::PipelineConfig;
use boundedreg_core::trainer::TrainConfig;
use serde::Deserialize;
use sha2::{Digest, Sha256};

/// Everything a command needs to know, fully resolved.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub pipeline: PipelineConfig,
    pub train: TrainConfig,
    pub sampling: SamplingConfig,
    pub ces: CesConfig,
    /// Root seed; every random stream in every command derives from it.
    pub seed: u64,
}

/// Flag-level overrides; `None` means "not given on the command line".
#[derive(Debug, Default, Clone, Copy)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub resolution: Option<usize>,
    pub char_limit: Option<usize>,
    pub k: Option<usize>,
    pub holdout: Option<usize>,
    pub max_epochs: Option<usize>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct FileConfig {
    seed: Option<u64>,
    prompt: Option<PromptSection>,
    image: Option<ImageSection>,
    backbone: Option<BackboneSection>,
    train: Option<TrainSection>,
    sampling: Option<SamplingSection>,
    ces: Option<CesSection>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct PromptSection {
    char_limit: Option<usize>,
    max_text_tokens: Option<usize>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct ImageSection {
    resolution: Option<usize>,
    patch: Option<usize>,
    shuffle: Option<usize>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct BackboneSection {
    d_model: Option<usize>,
    n_mix_layers: Option<usize>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct TrainSection {
    peak_lr: Option<f64>,
    warmup_frac: Option<f64>,
    batch_size: Option<usize>,
    max_epochs: Option<usize>,
    patience: Option<usize>,
    weight_decay: Option<f64>,
    dropout_p: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct SamplingSection {
    k: Option<usize>,
    min_reviews: Option<u64>,
    holdout_n: Option<usize>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct CesSection {
    param_target: Option<f64>,
    flop_target: Option<f64>,
    bonus_slope: Option<f64>,
    bonus_cap: Option<f64>,
    penalty_slope: Option<f64>,
}

fn set<T>(slot: &mut T, value: Option<T>) {
    if let Some(v) = value {
        *slot = v;
    }
}

/// Defaults → file → flags, then the root seed is pushed into every
/// component that consumes randomness.
pub fn load_run_config(config_path: Option<&Path>, ov: &Overrides) -> Result<RunConfig> {
    let file: FileConfig = match config_path {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .with_context(|| format!("reading config file {}", path.display()))?;
            toml::from_str(&text)
                .with_context(|| format!("parsing config file {}", path.display()))?
        }
        None => FileConfig::default(),
    };

    let mut rc = RunConfig {
        pipeline: PipelineConfig::default(),
        train: TrainConfig::default(),
        sampling: SamplingConfig::default(),
        ces: CesConfig::default(),
        seed: 42,
    };

    set(&mut rc.seed, file.seed);
    if let Some(p) = file.prompt {
        set(&mut rc.pipeline.prompt.char_limit, p.char_limit);
        set(&mut rc.pipeline.prompt.max_text_tokens, p.max_text_tokens);
    }
    if let Some(i) = file.image {
        set(&mut rc.pipeline.image.resolution, i.resolution);
        set(&mut rc.pipeline.image.patch, i.patch);
        set(&mut rc.pipeline.image.shuffle, i.shuffle);
    }
    if let Some(b) = file.backbone {
        set(&mut rc.pipeline.d_model, b.d_model);
        set(&mut rc.pipeline.n_mix_layers, b.n_mix_layers);
    }
    if let Some(t) = file.train {
        set(&mut rc.train.peak_lr, t.peak_lr);
        set(&mut rc.train.warmup_frac, t.warmup_frac);
        set(&mut rc.train.batch_size, t.batch_size);
        set(&mut rc.train.max_epochs, t.max_epochs);
        set(&mut rc.train.patience, t.patience);
        set(&mut rc.train.weight_decay, t.weight_decay);
        set(&mut rc.train.dropout_p, t.dropout_p);
    }
    if let Some(s) = file.sampling {
        set(&mut rc.sampling.k, s.k);
        set(&mut rc.sampling.min_reviews, s.min_reviews);
        set(&mut rc.sampling.holdout_n, s.holdout_n);
    }
    if let Some(c) = file.ces {
        set(&mut rc.ces.param_target, c.param_target);
        set(&mut rc.ces.flop_target, c.flop_target);
        set(&mut rc.ces.bonus_slope, c.bonus_slope);
        set(&mut rc.ces.bonus_cap, c.bonus_cap);
        set(&mut rc.ces.penalty_slope, c.penalty_slope);
    }

    // flags win
    set(&mut rc.seed, ov.seed);
    set(&mut rc.pipeline.image.resolution, ov.resolution);
    set(&mut rc.pipeline.prompt.char_limit, ov.char_limit);
    set(&mut rc.sampling.k, ov.k);
    set(&mut rc.sampling.holdout_n, ov.holdout);
    set(&mut rc.train.max_epochs, ov.max_epochs);

    // one root seed feeds everything
    rc.pipeline.root_seed = rc.seed;
    rc.train.seed = rc.seed;
    rc.sampling.seed = rc.seed;

    rc.pipeline.validate().context("invalid pipeline configuration")?;
    rc.train.validate().context("invalid training configuration")?;
    rc.sampling.validate().context("invalid sampling configuration")?;
    rc.ces.validate().context("invalid efficiency-score configuration")?;
    Ok(rc)
}

fn hash_lines(mut lines: Vec<String>) -> String {
    lines.sort();
    let mut canon = String::new();
    for line in &lines {
        let _ = writeln!(canon, "{line}");
    }
    let digest = Sha256::digest(canon.as_bytes());
    let mut hex = String::with_capacity(64);
    for byte in digest {
        let _ = write!(hex, "{byte:02x}");
    }
    hex
}

/// The settings that determine what features a sample encodes to. Two runs
/// with equal encode hashes see identical backbone weights and identical
/// preprocessing; anything trained under one is evaluable under the other.
fn encode_lines(rc: &RunConfig) -> Vec<String> {
    vec![
        format!("image.patch={}", rc.pipeline.image.patch),
        format!("image.resolution={}", rc.pipeline.image.resolution),
        format!("image.shuffle={}", rc.pipeline.image.shuffle),
        format!("pipeline.d_model={}", rc.pipeline.d_model),
        format!("pipeline.n_mix_layers={}", rc.pipeline.n_mix_layers),
        format!("prompt.char_limit={}", rc.pipeline.prompt.char_limit),
        format!("prompt.max_text_tokens={}", rc.pipeline.prompt.max_text_tokens),
        format!("seed={}", rc.seed),
    ]
}

/// Canonical settings listing → sha256 hex. Two configs hash equal exactly
/// when every semantic knob is equal; file paths never participate.
pub fn config_hash(rc: &RunConfig) -> String {
    let mut lines = encode_lines(rc);
    lines.extend([
        format!("ces.bonus_cap={:?}", rc.ces.bonus_cap),
        format!("ces.bonus_slope={:?}", rc.ces.bonus_slope),
        format!("ces.flop_target={:?}", rc.ces.flop_target),
        format!("ces.param_target={:?}", rc.ces.param_target),
        format!("ces.penalty_slope={:?}", rc.ces.penalty_slope),
        format!("sampling.holdout_n={}", rc.sampling.holdout_n),
        format!("sampling.k={}", rc.sampling.k),
        format!("sampling.min_reviews={}", rc.sampling.min_reviews),
        format!("train.batch_size={}", rc.train.batch_size),
        format!("train.dropout_p={:?}", rc.train.dropout_p),
        format!("train.max_epochs={}", rc.train.max_epochs),
        format!("train.patience={}", rc.train.patience),
        format!("train.peak_lr={:?}", rc.train.peak_lr),
        format!("train.warmup_frac={:?}", rc.train.warmup_frac),
        format!("train.weight_decay={:?}", rc.train.weight_decay),
    ]);
    hash_lines(lines)
}

/// Hash of just the feature-determining settings; see [`encode_lines`].
pub fn encode_hash(rc: &RunConfig) -> String {
    hash_lines(encode_lines(rc))
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ArchFile {
    vision: VisionSection,
    connector: ConnectorSection,
    decoder: DecoderSection,
    text: TextSection,
    flops: FlopsSection,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct VisionSection {
    layers: u64,
    width: u64,
    patch: u64,
    mlp_ratio: f64,
    heads: u64,
    native_resolution: u64,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ConnectorSection {
    shuffle: u64,
    out_dim: u64,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct DecoderSection {
    layers: u64,
    width: u64,
    heads: u64,
    mlp_ratio: f64,
    vocab: u64,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct TextSection {
    chars_per_token: f64,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct FlopsSection {
    convention: String,
}

/// Architecture description from a TOML file; validated before use.
pub fn load_archspec(path: &Path) -> Result<ArchSpec> {
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("reading architecture spec {}", path.display()))?;
    let file: ArchFile = toml::from_str(&text)
        .with_context(|| format!("parsing architecture spec {}", path.display()))?;
    let convention = match file.flops.convention.as_str() {
        "mac" => FlopConvention::MacCounted,
        "two-per-mac" => FlopConvention::TwoPerMac,
        other => bail!("unknown flops convention {other:?} (expected \"mac\" or \"two-per-mac\")"),
    };
    let spec = ArchSpec {
        vision: VisionSpec {
            layers: file.vision.layers,
            width: file.vision.width,
            patch: file.vision.patch,
            mlp_ratio: file.vision.mlp_ratio,
            heads: file.vision.heads,
            native_resolution: file.vision.native_resolution,
        },
        connector: ConnectorSpec { shuffle: file.connector.shuffle, out_dim: file.connector.out_dim },
        decoder: DecoderSpec {
            layers: file.decoder.layers,
            width: file.decoder.width,
            heads: file.decoder.heads,
            mlp_ratio: file.decoder.mlp_ratio,
            vocab: file.decoder.vocab,
        },
        text: TextBudget { chars_per_token: file.text.chars_per_token },
        convention,
    };
    spec.validate().with_context(|| format!("invalid architecture spec {}", path.display()))?;
    Ok(spec)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_without_a_file() {
        let rc = load_run_config(None, &Overrides::default()).unwrap();
        assert_eq!(rc.seed, 42);
        assert_eq!(rc.pipeline.image.resolution, 384);
        assert_eq!(rc.pipeline.root_seed, 42);
        assert_eq!(rc.train.seed, 42);
        assert_eq!(rc.sampling.seed, 42);
    }

    #[test]
    fn flags_override_file() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("cfg.toml");
        // 768 keeps the 16-pixel patch grid divisible by the shuffle factor
        std::fs::write(&path, "seed = 7\n[image]\nresolution = 768\n").unwrap();
        let ov = Overrides { seed: Some(9), ..Overrides::default() };
        let rc = load_run_config(Some(&path), &ov).unwrap();
        assert_eq!(rc.seed, 9, "flag beats file");
        assert_eq!(rc.pipeline.image.resolution, 768, "file beats default");
    }

    #[test]
    fn hash_tracks_semantics_not_provenance() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("cfg.toml");
        // a file that spells out the defaults must hash like no file at all
        std::fs::write(&path, "seed = 42\n[image]\nresolution = 384\n").unwrap();
        let a = config_hash(&load_run_config(None, &Overrides::default()).unwrap());
        let b = config_hash(&load_run_config(Some(&path), &Overrides::default()).unwrap());
        assert_eq!(a, b);

        let ov = Overrides { seed: Some(43), ..Overrides::default() };
        let c = config_hash(&load_run_config(None, &ov).unwrap());
        assert_ne!(a, c, "different seed, different hash");
        assert_eq!(a.len(), 64);
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("cfg.toml");
        std::fs::write(&path, "[image]\nresolutoin = 384\n").unwrap();
        assert!(load_run_config(Some(&path), &Overrides::default()).is_err());
    }
}
