//! Prompt construction and byte-level tokenization with hard length bounds.
//!
//! Metadata fields are truncated per field (counted in Unicode scalar values,
//! never splitting a character), rendered into one fixed template, and encoded
//! with a byte tokenizer: id = byte + 2, with 0 reserved for padding and 1 for
//! the `<image>` placeholder. Output length never exceeds `max_text_tokens`,
//! which is what makes downstream compute input-independent.

use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use crate::{Error, Result};

pub const PAD_ID: u32 = 0;
pub const IMAGE_SENTINEL_ID: u32 = 1;
pub const BYTE_ID_OFFSET: u32 = 2;
/// 256 byte values plus the two reserved ids.
pub const VOCAB_SIZE: usize = 258;

const IMAGE_TAG: &str = "<image>";

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct MetadataFields {
    pub title: String,
    pub description: String,
    pub features: String,
    pub main_category: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PromptConfig {
    /// Per-field character budget (Unicode scalar values).
    pub char_limit: usize,
    /// Hard cap on the tokenized prompt length.
    pub max_text_tokens: usize,
}

impl Default for PromptConfig {
    fn default() -> Self {
        Self { char_limit: 100, max_text_tokens: 512 }
    }
}

impl PromptConfig {
    pub fn validate(&self) -> Result<()> {
        if self.char_limit == 0 {
            return Err(Error::InvalidConfig("char_limit must be at least 1"));
        }
        // The cap must at least admit the empty-field template, or every
        // prompt would lose template structure to truncation.
        if self.max_text_tokens < template_char_count() {
            return Err(Error::InvalidConfig(
                "max_text_tokens smaller than the rendered empty template",
            ));
        }
        Ok(())
    }
}

/// First `limit` characters of `text`, counted in Unicode scalar values.
/// Total function: shorter inputs pass through untouched.
pub fn truncate_field(text: &str, limit: usize) -> &str {
    match text.char_indices().nth(limit) {
        Some((byte_idx, _)) => &text[..byte_idx],
        None => text,
    }
}

/// Render the fixed prompt template with each slot truncated to the
/// configured budget. Byte-identical output for identical input.
pub fn build_prompt(fields: &MetadataFields, cfg: &PromptConfig) -> String {
    let l = cfg.char_limit;
    alloc::format!(
        "<image> The average user rating for this product. Text metadata: \
         Title: {}, Description: {}, Features: {}, Main Category: {}",
        truncate_field(&fields.title, l),
        truncate_field(&fields.description, l),
        truncate_field(&fields.features, l),
        truncate_field(&fields.main_category, l),
    )
}

/// Character count of the template rendered with empty fields — the fixed
/// prompt overhead. Used for config validation and the analytic cost model.
pub fn template_char_count() -> usize {
    let cfg = PromptConfig { char_limit: 1, max_text_tokens: usize::MAX };
    build_prompt(&MetadataFields::default(), &cfg).chars().count()
}

/// Token ids with a binary attention mask. Padding, when present, is always
/// a suffix: the mask is a run of 1s followed by a run of 0s.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TokenSequence {
    pub ids: Vec<u32>,
    pub mask: Vec<u8>,
}

impl TokenSequence {
    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }
}

/// Byte-level encoding of a prompt, hard-truncated to `max_text_tokens`.
/// A leading `<image>` tag becomes the sentinel id 1; everything else is
/// byte + 2. The mask is all 1s (no padding is introduced here).
pub fn tokenize(prompt: &str, cfg: &PromptConfig) -> TokenSequence {
    let mut ids = Vec::with_capacity(cfg.max_text_tokens.min(prompt.len() + 1));
    let rest = match prompt.strip_prefix(IMAGE_TAG) {
        Some(rest) => {
            ids.push(IMAGE_SENTINEL_ID);
            rest
        }
        None => prompt,
    };
    for &b in rest.as_bytes() {
        if ids.len() == cfg.max_text_tokens {
            break;
        }
        ids.push(u32::from(b) + BYTE_ID_OFFSET);
    }
    let mask = vec![1u8; ids.len()];
    TokenSequence { ids, mask }
}

/// Right-pad a sequence with PAD/mask-0 up to `len`. The fixed-length
/// deployment path pads every prompt to `max_text_tokens` so the multimodal
/// sequence length never varies with the input.
pub fn pad_to(seq: &TokenSequence, len: usize) -> TokenSequence {
    debug_assert!(len >= seq.len(), "pad_to cannot shorten a sequence");
    let mut ids = seq.ids.clone();
    let mut mask = seq.mask.clone();
    ids.resize(len.max(seq.len()), PAD_ID);
    mask.resize(len.max(seq.len()), 0);
    TokenSequence { ids, mask }
}

/// B×T ids and mask, flattened row-major.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BatchedTokens {
    pub batch: usize,
    pub len: usize,
    pub ids: Vec<u32>,
    pub mask: Vec<u8>,
}

/// Right-pad a batch to its longest member.
pub fn pad_batch(seqs: &[TokenSequence]) -> Result<BatchedTokens> {
    if seqs.is_empty() {
        return Err(Error::EmptyBatch);
    }
    let len = seqs.iter().map(TokenSequence::len).max().unwrap_or(0);
    let mut ids = Vec::with_capacity(seqs.len() * len);
    let mut mask = Vec::with_capacity(seqs.len() * len);
    for seq in seqs {
        let padded = pad_to(seq, len);
        ids.extend_from_slice(&padded.ids);
        mask.extend_from_slice(&padded.mask);
    }
    Ok(BatchedTokens { batch: seqs.len(), len, ids, mask })
}
