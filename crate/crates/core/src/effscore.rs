//! Efficiency accounting: analytic parameter and FLOP models for the
//! vision-tower + connector + decoder + head architecture, the geometric
//! resource cost C, the bounded efficiency multiplier E(C), and the
//! correlation-times-efficiency score.
//!
//! FLOPs here are *analytic worst-case* counts at a fixed configuration —
//! the whole point of the bounded-compute design is that they do not
//! depend on the input image or the metadata length. Counting convention
//! (multiply-accumulate = 1 vs 2) is an explicit flag because published
//! GFLOP figures rarely state theirs.

use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct CesConfig {
    pub param_target: f64,
    pub flop_target: f64,
    pub bonus_slope: f64,
    pub bonus_cap: f64,
    pub penalty_slope: f64,
}

impl Default for CesConfig {
    fn default() -> Self {
        Self {
            param_target: 1e9,
            flop_target: 2e10,
            bonus_slope: 0.05,
            bonus_cap: 1.10,
            penalty_slope: 2.0,
        }
    }
}

impl CesConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = self.param_target > 0.0
            && self.flop_target > 0.0
            && self.bonus_slope > 0.0
            && self.penalty_slope > 0.0;
        if !positive {
            return Err(Error::InvalidConfig("efficiency targets and slopes must be positive"));
        }
        if !(self.bonus_cap >= 1.0) {
            return Err(Error::InvalidConfig("bonus_cap must be at least 1"));
        }
        Ok(())
    }
}

/// Absolute resource footprint of one model forward pass.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ResourceProfile {
    pub params: u64,
    pub flops: f64,
}

/// Geometric mean of the normalized parameter and FLOP ratios:
/// C = sqrt(params/param_target) · sqrt(flops/flop_target).
pub fn cost_c(profile: &ResourceProfile, cfg: &CesConfig) -> f64 {
    libm::sqrt(profile.params as f64 / cfg.param_target)
        * libm::sqrt(profile.flops / cfg.flop_target)
}

/// Efficiency multiplier: a capped logarithmic bonus below the target
/// point and a harsher logarithmic penalty above it. Continuous at C = 1
/// (both branches give exactly 1), strictly decreasing for C > 1, and
/// never above the cap.
pub fn efficiency_e(c: f64, cfg: &CesConfig) -> f64 {
    if c <= 1.0 {
        let bonus = 1.0 + cfg.bonus_slope * libm::log(1.0 / c);
        if bonus < cfg.bonus_cap {
            bonus
        } else {
            cfg.bonus_cap
        }
    } else {
        1.0 / (1.0 + cfg.penalty_slope * libm::log(c))
    }
}

/// Final score: negatively correlated predictors are clipped to zero, so
/// no efficiency bonus can rescue a model that ranks items backwards.
pub fn ces(plcc: f64, profile: &ResourceProfile, cfg: &CesConfig) -> f64 {
    plcc.max(0.0) * efficiency_e(cost_c(profile, cfg), cfg)
}

#[derive(Debug, Clone, PartialEq)]
pub struct VisionSpec {
    pub layers: u64,
    pub width: u64,
    pub patch: u64,
    pub mlp_ratio: f64,
    pub heads: u64,
    /// Input resolution the tower's position table is sized for.
    pub native_resolution: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConnectorSpec {
    /// Pixel-shuffle factor r: r² spatial tokens merge into one.
    pub shuffle: u64,
    /// Projection output width; must equal the decoder width.
    pub out_dim: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DecoderSpec {
    pub layers: u64,
    pub width: u64,
    pub heads: u64,
    pub mlp_ratio: f64,
    pub vocab: u64,
}

/// Calibration for converting character budgets to token counts: the
/// prompt template length is fixed by the text pipeline, and truncated
/// metadata contributes 4·char_limit characters at worst case.
#[derive(Debug, Clone, PartialEq)]
pub struct TextBudget {
    pub chars_per_token: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FlopConvention {
    /// One multiply-accumulate counts as one operation.
    MacCounted,
    /// One multiply-accumulate counts as two operations.
    TwoPerMac,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ArchSpec {
    pub vision: VisionSpec,
    pub connector: ConnectorSpec,
    pub decoder: DecoderSpec,
    pub text: TextBudget,
    pub convention: FlopConvention,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ParamCounts {
    pub vision: u64,
    pub connector: u64,
    pub decoder: u64,
    pub head: u64,
    pub total: u64,
    /// Decoder + head: the parts gradient updates may touch.
    pub trainable: u64,
}

impl ArchSpec {
    pub fn validate(&self) -> Result<()> {
        let v = &self.vision;
        let d = &self.decoder;
        if v.layers == 0 && d.layers == 0 {
            return Err(Error::InvalidArchSpec("at least one tower must have layers"));
        }
        if v.width == 0 || v.patch == 0 || d.width == 0 || d.vocab == 0 {
            return Err(Error::InvalidArchSpec("widths, patch and vocab must be positive"));
        }
        if v.heads == 0 || v.width % v.heads != 0 {
            return Err(Error::InvalidArchSpec("vision width must divide evenly over heads"));
        }
        if d.heads == 0 || d.width % d.heads != 0 {
            return Err(Error::InvalidArchSpec("decoder width must divide evenly over heads"));
        }
        if !(v.mlp_ratio > 0.0) || !(d.mlp_ratio > 0.0) {
            return Err(Error::InvalidArchSpec("mlp ratios must be positive"));
        }
        if self.connector.shuffle == 0 {
            return Err(Error::InvalidArchSpec("connector shuffle must be positive"));
        }
        if self.connector.out_dim != d.width {
            return Err(Error::InvalidArchSpec("connector output must match decoder width"));
        }
        if v.native_resolution % v.patch != 0 {
            return Err(Error::InvalidArchSpec("native resolution must be a patch multiple"));
        }
        if (v.native_resolution / v.patch) % self.connector.shuffle != 0 {
            return Err(Error::InvalidArchSpec("patch grid must be a shuffle multiple"));
        }
        if !(self.text.chars_per_token > 0.0) {
            return Err(Error::InvalidArchSpec("chars_per_token must be positive"));
        }
        Ok(())
    }

    fn mlp_width(width: u64, ratio: f64) -> u64 {
        libm::round(ratio * width as f64) as u64
    }

    /// Closed-form parameter counts. Per transformer layer: 4·w² attention
    /// projection weights, 2·w·m MLP weights, and 4·w for the two norm
    /// affine pairs; biases on the big projections are omitted (they are
    /// sub-0.1% and published totals are rounded far more coarsely). Each
    /// tower with at least one layer adds a final norm.
    pub fn param_count(&self) -> Result<ParamCounts> {
        self.validate()?;
        let v = &self.vision;
        let d = &self.decoder;
        let m_v = Self::mlp_width(v.width, v.mlp_ratio) as u128;
        let m_d = Self::mlp_width(d.width, d.mlp_ratio) as u128;
        let (vw, vl, vp) = (v.width as u128, v.layers as u128, v.patch as u128);
        let (dw, dl) = (d.width as u128, d.layers as u128);

        let grid = (v.native_resolution / v.patch) as u128;
        let mut vision = 3 * vp * vp * vw + vw   // patch embedding + bias
            + grid * grid * vw                   // learned position table
            + vl * (4 * vw * vw + 2 * vw * m_v + 4 * vw);
        if vl > 0 {
            vision += 2 * vw;
        }
        let r2 = (self.connector.shuffle * self.connector.shuffle) as u128;
        let connector = vw * r2 * self.connector.out_dim as u128 + self.connector.out_dim as u128;
        let mut decoder = d.vocab as u128 * dw + dl * (4 * dw * dw + 2 * dw * m_d + 4 * dw);
        if dl > 0 {
            decoder += 2 * dw;
        }
        let half = dw / 2;
        let head = dw * half + half + half + 1;

        let to64 = |x: u128| u64::try_from(x).map_err(|_| Error::InvalidArchSpec("parameter count overflow"));
        let vision = to64(vision)?;
        let connector = to64(connector)?;
        let decoder = to64(decoder)?;
        let head = to64(head)?;
        Ok(ParamCounts {
            vision,
            connector,
            decoder,
            head,
            total: vision + connector + decoder + head,
            trainable: decoder + head,
        })
    }

    /// Visual tokens reaching the decoder at a given input resolution:
    /// (resolution/patch)² patch tokens, merged by the shuffle factor.
    pub fn visual_token_count(&self, resolution: u64) -> Result<u64> {
        if resolution == 0 || resolution % self.vision.patch != 0 {
            return Err(Error::ResolutionPatchMismatch);
        }
        let grid = resolution / self.vision.patch;
        if grid % self.connector.shuffle != 0 {
            return Err(Error::ShuffleFactorMismatch);
        }
        let merged = grid / self.connector.shuffle;
        Ok(merged * merged)
    }

    /// Worst-case text tokens for a per-field character limit: the fixed
    /// template plus four fully saturated fields, at the calibrated
    /// characters-per-token rate, rounded up.
    pub fn text_token_count(&self, char_limit: u64) -> u64 {
        let chars = crate::textprep::template_char_count() as u64 + 4 * char_limit;
        libm::ceil(chars as f64 / self.text.chars_per_token) as u64
    }

    /// Analytic per-forward FLOP estimate. Per layer and token: 4·w² for
    /// the attention projections plus 2·T·w for score and value mixing
    /// (the quadratic term), and 2·w·m for the MLP; plus patch embedding,
    /// connector projection, and the regression head. Strictly monotone in
    /// both token counts.
    pub fn flop_estimate(&self, visual_tokens: u64, text_tokens: u64) -> u64 {
        debug_assert!(visual_tokens > 0 && text_tokens > 0);
        let v = &self.vision;
        let d = &self.decoder;
        let m_v = Self::mlp_width(v.width, v.mlp_ratio) as u128;
        let m_d = Self::mlp_width(d.width, d.mlp_ratio) as u128;
        let (vw, vp) = (v.width as u128, v.patch as u128);
        let dw = d.width as u128;
        let r2 = (self.connector.shuffle * self.connector.shuffle) as u128;

        // the tower sees every patch token; merging happens after it
        let p_v = visual_tokens as u128 * r2;
        let vision = p_v * 3 * vp * vp * vw
            + v.layers as u128 * (p_v * (4 * vw * vw + 2 * vw * m_v) + 2 * p_v * p_v * vw);
        let connector = p_v * vw * self.connector.out_dim as u128;
        let t_d = (visual_tokens + text_tokens) as u128;
        let decoder =
            d.layers as u128 * (t_d * (4 * dw * dw + 2 * dw * m_d) + 2 * t_d * t_d * dw);
        let head = dw * (dw / 2) + dw / 2;

        let macs = vision + connector + decoder + head;
        let scaled = match self.convention {
            FlopConvention::MacCounted => macs,
            FlopConvention::TwoPerMac => macs * 2,
        };
        u64::try_from(scaled).unwrap_or(u64::MAX)
    }

    /// Parameter total and FLOP estimate bundled for scoring.
    pub fn profile_for(&self, resolution: u64, char_limit: u64) -> Result<ResourceProfile> {
        let params = self.param_count()?.total;
        let visual = self.visual_token_count(resolution)?;
        let text = self.text_token_count(char_limit);
        Ok(ResourceProfile { params, flops: self.flop_estimate(visual, text) as f64 })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    // The shipped architecture profile for the 256M-class model (kept in
    // sync with configs/arch-256m.toml by the end-to-end suite).
    fn spec_256m() -> ArchSpec {
        ArchSpec {
            vision: VisionSpec {
                layers: 12,
                width: 768,
                patch: 16,
                mlp_ratio: 4.0,
                heads: 12,
                native_resolution: 512,
            },
            connector: ConnectorSpec { shuffle: 4, out_dim: 576 },
            decoder: DecoderSpec {
                layers: 30,
                width: 576,
                heads: 9,
                mlp_ratio: 10.0 / 3.0,
                vocab: 49152,
            },
            text: TextBudget { chars_per_token: 2.25 },
            convention: FlopConvention::MacCounted,
        }
    }

    #[test]
    fn cost_at_reference_and_target_points() {
        let cfg = CesConfig::default();
        let c = cost_c(&ResourceProfile { params: 228_000_000, flops: 68e9 }, &cfg);
        assert!((c - 0.8804544281222056).abs() < 1e-15, "got {c}");

        assert_eq!(cost_c(&ResourceProfile { params: 1_000_000_000, flops: 2e10 }, &cfg), 1.0);
        assert_eq!(cost_c(&ResourceProfile { params: 4_000_000_000, flops: 2e10 }, &cfg), 2.0);
    }

    #[test]
    fn cost_scales_as_square_root() {
        let cfg = CesConfig::default();
        let base = cost_c(&ResourceProfile { params: 250_000_000, flops: 1e10 }, &cfg);
        let quad = cost_c(&ResourceProfile { params: 1_000_000_000, flops: 1e10 }, &cfg);
        assert!((quad - 2.0 * base).abs() < 1e-12, "quadrupling params doubles C");
    }

    #[test]
    fn efficiency_boundary_suite() {
        let cfg = CesConfig::default();
        assert_eq!(efficiency_e(1.0, &cfg), 1.0);
        // continuity across the branch point
        assert!((efficiency_e(1.0 - 1e-12, &cfg) - 1.0).abs() < 1e-10);
        assert!((efficiency_e(1.0 + 1e-12, &cfg) - 1.0).abs() < 1e-10);
        // penalty branch at C = e: 1/(1 + 2·1), exact because log(e) == 1
        assert_eq!(efficiency_e(core::f64::consts::E, &cfg), 1.0 / 3.0);
        // cap region: every C at or below e^(−2·cap-gap) saturates
        for c in [0.13, 0.05, 1e-3, 1e-6] {
            assert_eq!(efficiency_e(c, &cfg), 1.10, "C={c} must hit the cap");
        }
        let reference = efficiency_e(0.8804544281222056, &cfg);
        assert!((reference - 1.0063658554601396).abs() < 1e-15, "got {reference}");
    }

    #[test]
    fn efficiency_monotone_decreasing_above_one() {
        let cfg = CesConfig::default();
        let mut prev = efficiency_e(1.0, &cfg);
        for i in 1..=1000 {
            let c = 1.0 + i as f64 * 0.01;
            let e = efficiency_e(c, &cfg);
            assert!(e < prev, "E must strictly decrease past C=1 (C={c})");
            assert!(e <= 1.10);
            prev = e;
        }
    }

    #[test]
    fn ces_reference_and_clipping() {
        let cfg = CesConfig::default();
        let profile = ResourceProfile { params: 228_000_000, flops: 68e9 };
        let score = ces(0.39, &profile, &cfg);
        assert!((score - 0.39248268362945443).abs() < 1e-15, "got {score}");

        assert_eq!(ces(-0.5, &profile, &cfg), 0.0);
        assert_eq!(ces(0.0, &profile, &cfg), 0.0);
        let target = ResourceProfile { params: 1_000_000_000, flops: 2e10 };
        assert_eq!(ces(1.0, &target, &cfg), 1.0);
    }

    #[test]
    fn parameter_counts_for_shipped_spec() {
        let counts = spec_256m().param_count().unwrap();
        assert_eq!(counts.vision, 86_350_080);
        assert_eq!(counts.connector, 7_078_464);
        assert_eq!(counts.decoder, 134_550_144);
        assert_eq!(counts.head, 166_465);
        assert_eq!(counts.total, 228_145_153);
        assert_eq!(counts.trainable, 134_716_609);
        // within 10% of the published 228M / 135M totals
        assert!((counts.total as f64 / 228e6 - 1.0).abs() < 0.10);
        assert!((counts.trainable as f64 / 135e6 - 1.0).abs() < 0.10);
    }

    #[test]
    fn head_params_closed_form() {
        let d = 576u64;
        let counts = spec_256m().param_count().unwrap();
        assert_eq!(counts.head, d * (d / 2) + (d / 2) + (d / 2) + 1);
        assert_eq!(counts.head, 166_465);
    }

    #[test]
    fn zero_layer_decoder_is_embeddings_only() {
        let mut spec = spec_256m();
        spec.decoder.layers = 0;
        let counts = spec.param_count().unwrap();
        assert_eq!(counts.decoder, spec.decoder.vocab * spec.decoder.width);
    }

    #[test]
    fn token_counts() {
        let spec = spec_256m();
        assert_eq!(spec.visual_token_count(384).unwrap(), 36);
        assert_eq!(spec.visual_token_count(512).unwrap(), 64);
        assert_eq!(spec.visual_token_count(100), Err(Error::ResolutionPatchMismatch));

        assert_eq!(spec.text_token_count(50), 141);
        assert_eq!(spec.text_token_count(100), 230);
        assert_eq!(spec.text_token_count(200), 408);
    }

    // FLOP totals frozen from an independent evaluation of the closed
    // forms. Absolute values and orderings feed the acceptance suite.
    #[test]
    fn flop_estimates_match_frozen_values() {
        let spec = spec_256m();
        let at = |res: u64, limit: u64| {
            spec.flop_estimate(
                spec.visual_token_count(res).unwrap(),
                spec.text_token_count(limit),
            )
        };
        assert_eq!(at(384, 100), 86_318_466_336);
        assert_eq!(at(512, 100), 141_558_285_600);
        assert_eq!(at(384, 50), 75_506_888_736);
        assert_eq!(at(384, 200), 109_584_120_096);

        let ratio = at(512, 100) as f64 / at(384, 100) as f64;
        assert!((1.49..=1.65).contains(&ratio), "512/384 ratio {ratio}");
        assert!(at(384, 50) < at(384, 100) && at(384, 100) < at(384, 200));
    }

    #[test]
    fn flop_convention_doubles() {
        let mut spec = spec_256m();
        let mac = spec.flop_estimate(36, 230);
        spec.convention = FlopConvention::TwoPerMac;
        assert_eq!(spec.flop_estimate(36, 230), 2 * mac);
    }

    #[test]
    fn flops_monotone_in_tokens() {
        let spec = spec_256m();
        let mut prev = spec.flop_estimate(36, 1);
        for tt in 2..200 {
            let cur = spec.flop_estimate(36, tt);
            assert!(cur > prev);
            prev = cur;
        }
        assert!(spec.flop_estimate(64, 100) > spec.flop_estimate(36, 100));
    }

    #[test]
    fn profile_bundles_params_and_flops() {
        let spec = spec_256m();
        let p = spec.profile_for(384, 100).unwrap();
        assert_eq!(p.params, 228_145_153);
        assert_eq!(p.flops, 86_318_466_336.0);
    }

    #[test]
    fn spec_validation_rejects_inconsistencies() {
        let mut bad = spec_256m();
        bad.connector.out_dim = 575;
        assert_eq!(bad.param_count(), Err(Error::InvalidArchSpec("connector output must match decoder width")));

        let mut bad = spec_256m();
        bad.vision.heads = 7;
        assert!(bad.validate().is_err());

        let mut bad = spec_256m();
        bad.vision.native_resolution = 500;
        assert!(bad.validate().is_err());

        assert!(spec_256m().validate().is_ok());
    }

    #[test]
    fn ces_config_validation() {
        assert!(CesConfig::default().validate().is_ok());
        let bad = CesConfig { bonus_cap: 0.9, ..CesConfig::default() };
        assert!(bad.validate().is_err());
        let bad = CesConfig { flop_target: 0.0, ..CesConfig::default() };
        assert!(bad.validate().is_err());
    }
}
