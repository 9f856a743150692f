//! Seeded, platform-independent randomness.
//!
//! Every stochastic choice in the pipeline (weight init, dropout, shuffles,
//! holdout splits) draws from a splitmix64 stream, so a single root seed
//! reproduces a run bit-for-bit on any platform. Purpose-labelled substreams
//! come from [`derive_seed`] to keep consumers independent of each other.

/// The splitmix64 generator: a 64-bit counter passed through a finalizer.
/// Small state, full 2^64 period, and no platform entropy anywhere.
#[derive(Debug, Clone)]
pub struct SplitMix64 {
    state: u64,
}

impl SplitMix64 {
    pub fn new(seed: u64) -> Self {
        Self { state: seed }
    }

    pub fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(0x9E37_79B9_7F4A_7C15);
        let mut z = self.state;
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^ (z >> 31)
    }

    /// Uniform in [0, 1) using the top 24 bits, so the value is exact in f32.
    pub fn next_unit_f32(&mut self) -> f32 {
        (self.next_u64() >> 40) as f32 * (1.0 / 16_777_216.0)
    }

    /// Uniform in [0, 1) using the top 53 bits, exact in f64.
    pub fn next_unit_f64(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / 9_007_199_254_740_992.0)
    }

    pub fn uniform_f32(&mut self, lo: f32, hi: f32) -> f32 {
        lo + self.next_unit_f32() * (hi - lo)
    }

    pub fn uniform_f64(&mut self, lo: f64, hi: f64) -> f64 {
        lo + self.next_unit_f64() * (hi - lo)
    }
}

/// FNV-1a over the label bytes; folds a purpose string into a seed.
fn fnv1a64(label: &str) -> u64 {
    let mut h = 0xCBF2_9CE4_8422_2325u64;
    for &b in label.as_bytes() {
        h ^= b as u64;
        h = h.wrapping_mul(0x0000_0100_0000_01B3);
    }
    h
}

/// Derive the seed of an independent substream from the root seed and a
/// purpose label (e.g. "backbone", "dropout"). One finalizer pass on top of
/// the XOR keeps related roots from producing related streams.
pub fn derive_seed(root: u64, label: &str) -> u64 {
    SplitMix64::new(root ^ fnv1a64(label)).next_u64()
}

/// Fisher–Yates shuffle driven by the seeded stream. The `% (i + 1)` draw has
/// modulo bias below 2^-60 for any in-memory slice; we accept that in exchange
/// for a branch-free, platform-stable implementation.
pub fn shuffle<T>(rng: &mut SplitMix64, items: &mut [T]) {
    for i in (1..items.len()).rev() {
        let j = (rng.next_u64() % (i as u64 + 1)) as usize;
        items.swap(i, j);
    }
}
