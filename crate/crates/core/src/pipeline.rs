//! End-to-end sample encoding: image → visual tokens, metadata → padded
//! text tokens, both through the frozen backbone, pooled to one feature
//! vector per sample. At a fixed configuration every sample produces the
//! same sequence length and therefore the same compute, no matter how
//! large the source image or how long the metadata is — that is the
//! property the rest of the system (FLOP accounting, constant-memory
//! training) relies on.

use alloc::vec::Vec;

use crate::backbone::{init_backbone, Backbone, BackboneConfig};
use crate::imageprep::{visual_pipeline, ImageConfig, ImageTensor};
use crate::reghead::masked_mean_pool;
use crate::rng::derive_seed;
use crate::textprep::{
    build_prompt, pad_to, tokenize, MetadataFields, PromptConfig, TokenSequence,
};
use crate::Result;

#[derive(Debug, Clone, PartialEq)]
pub struct PipelineConfig {
    pub prompt: PromptConfig,
    pub image: ImageConfig,
    pub d_model: usize,
    pub n_mix_layers: usize,
    /// Single root seed; all per-purpose streams derive from it by label.
    pub root_seed: u64,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            prompt: PromptConfig::default(),
            image: ImageConfig::default(),
            d_model: 576,
            n_mix_layers: 2,
            root_seed: 42,
        }
    }
}

impl PipelineConfig {
    pub fn validate(&self) -> Result<()> {
        self.prompt.validate()?;
        self.image.validate()?;
        self.backbone_config().validate()
    }

    /// Backbone wiring implied by the rest of the config: visual dimension
    /// from the image pipeline, weights seeded from the root seed under a
    /// fixed label.
    pub fn backbone_config(&self) -> BackboneConfig {
        BackboneConfig {
            d_model: self.d_model,
            n_mix_layers: self.n_mix_layers,
            seed: derive_seed(self.root_seed, "backbone"),
            vocab_size: crate::textprep::VOCAB_SIZE,
            visual_dim: self.image.token_dim(),
        }
    }

    /// Hidden-state sequence length for every sample: all visual tokens
    /// plus the fully padded text budget. Input-independent by design.
    pub fn sequence_len(&self) -> usize {
        self.image.token_count() + self.prompt.max_text_tokens
    }

    pub fn build_backbone(&self) -> Result<Backbone> {
        self.validate()?;
        init_backbone(&self.backbone_config())
    }
}

/// Render, tokenize, and right-pad the metadata prompt to the fixed text
/// budget, so every sample contributes exactly `max_text_tokens` positions.
pub fn assemble_tokens(fields: &MetadataFields, cfg: &PromptConfig) -> TokenSequence {
    let prompt = build_prompt(fields, cfg);
    let seq = tokenize(&prompt, cfg);
    pad_to(&seq, cfg.max_text_tokens)
}

/// Full deterministic path from raw sample to pooled feature vector.
pub fn encode_sample(
    backbone: &Backbone,
    image: &ImageTensor,
    fields: &MetadataFields,
    cfg: &PipelineConfig,
) -> Result<Vec<f64>> {
    let visual = visual_pipeline(image, &cfg.image)?;
    let tokens = assemble_tokens(fields, &cfg.prompt);
    let hidden = backbone.encode(&visual, &tokens.ids, &tokens.mask)?;
    masked_mean_pool(&hidden)
}
