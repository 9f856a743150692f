//! Fixed-resolution image pipeline: bilinear resize with half-pixel centers,
//! per-channel normalization, patch extraction, and pixel-shuffle token
//! compression. For a fixed config the visual token count is the same for
//! every input image — that is the whole point.

use alloc::vec;
use alloc::vec::Vec;

use crate::{Error, Result};

pub const CHANNELS: usize = 3;

/// Interleaved RGB float image, row-major. Decoders must deliver finite
/// values in [0, 1]; [`normalize`] output intentionally leaves that range.
#[derive(Debug, Clone, PartialEq)]
pub struct ImageTensor {
    pub height: usize,
    pub width: usize,
    pub data: Vec<f32>,
}

impl ImageTensor {
    pub fn new(height: usize, width: usize, data: Vec<f32>) -> Result<Self> {
        if data.len() != height * width * CHANNELS {
            return Err(Error::DimensionMismatch(alloc::format!(
                "image data length {} does not match {height}x{width}x{CHANNELS}",
                data.len()
            )));
        }
        Ok(Self { height, width, data })
    }

    /// Constant-valued image, handy for tests and synthetic fixtures.
    pub fn constant(height: usize, width: usize, value: f32) -> Self {
        Self { height, width, data: vec![value; height * width * CHANNELS] }
    }

    #[inline]
    fn px(&self, y: usize, x: usize, c: usize) -> f32 {
        self.data[(y * self.width + x) * CHANNELS + c]
    }
}

/// Bilinear resize with the half-pixel-center convention: the source
/// coordinate of output pixel `o` along an axis with scale `s = in/out` is
/// `(o + 0.5) * s - 0.5`, clamped to the source. Output values are convex
/// combinations of inputs, so they stay within the input min/max.
pub fn resize_bilinear(img: &ImageTensor, out_h: usize, out_w: usize) -> Result<ImageTensor> {
    if img.height == 0 || img.width == 0 || out_h == 0 || out_w == 0 {
        return Err(Error::DegenerateImage);
    }
    let scale_y = img.height as f32 / out_h as f32;
    let scale_x = img.width as f32 / out_w as f32;
    let mut data = vec![0.0f32; out_h * out_w * CHANNELS];
    for oy in 0..out_h {
        let fy = ((oy as f32 + 0.5) * scale_y - 0.5).clamp(0.0, (img.height - 1) as f32);
        let y0 = libm::floorf(fy) as usize;
        let y1 = (y0 + 1).min(img.height - 1);
        let wy = fy - y0 as f32;
        for ox in 0..out_w {
            let fx = ((ox as f32 + 0.5) * scale_x - 0.5).clamp(0.0, (img.width - 1) as f32);
            let x0 = libm::floorf(fx) as usize;
            let x1 = (x0 + 1).min(img.width - 1);
            let wx = fx - x0 as f32;
            for c in 0..CHANNELS {
                let top = img.px(y0, x0, c) * (1.0 - wx) + img.px(y0, x1, c) * wx;
                let bot = img.px(y1, x0, c) * (1.0 - wx) + img.px(y1, x1, c) * wx;
                data[(oy * out_w + ox) * CHANNELS + c] = top * (1.0 - wy) + bot * wy;
            }
        }
    }
    Ok(ImageTensor { height: out_h, width: out_w, data })
}

/// Per-channel `(x - mean) / std`. The result is an unbounded float image.
pub fn normalize(img: &ImageTensor, mean: [f32; 3], std: [f32; 3]) -> Result<ImageTensor> {
    if std.iter().any(|&s| s == 0.0) {
        return Err(Error::InvalidNormalization);
    }
    let mut data = Vec::with_capacity(img.data.len());
    for chunk in img.data.chunks_exact(CHANNELS) {
        for c in 0..CHANNELS {
            data.push((chunk[c] - mean[c]) / std[c]);
        }
    }
    Ok(ImageTensor { height: img.height, width: img.width, data })
}

/// Non-overlapping patches in row-major order; each token is one patch's
/// pixels, row-major with interleaved channels (dim = p·p·3).
#[derive(Debug, Clone, PartialEq)]
pub struct PatchGrid {
    pub rows: usize,
    pub cols: usize,
    pub dim: usize,
    pub data: Vec<f32>,
}

pub fn patchify(img: &ImageTensor, patch: usize) -> Result<PatchGrid> {
    if patch == 0 || img.height % patch != 0 || img.width % patch != 0 {
        return Err(Error::ResolutionPatchMismatch);
    }
    let rows = img.height / patch;
    let cols = img.width / patch;
    let dim = patch * patch * CHANNELS;
    let mut data = Vec::with_capacity(rows * cols * dim);
    for py in 0..rows {
        for px in 0..cols {
            for dy in 0..patch {
                let y = py * patch + dy;
                let row_start = (y * img.width + px * patch) * CHANNELS;
                data.extend_from_slice(&img.data[row_start..row_start + patch * CHANNELS]);
            }
        }
    }
    Ok(PatchGrid { rows, cols, dim, data })
}

/// Fixed-size visual token matrix: `count` tokens of dimension `dim`.
#[derive(Debug, Clone, PartialEq)]
pub struct VisualTokens {
    pub count: usize,
    pub dim: usize,
    pub data: Vec<f32>,
}

/// Pixel shuffle: every r×r block of grid tokens becomes one token whose
/// channels are the block members concatenated in row-major order. Scalar
/// count is conserved; sequence length shrinks by r².
pub fn pixel_shuffle(grid: &PatchGrid, r: usize) -> Result<VisualTokens> {
    if r == 0 || grid.rows % r != 0 || grid.cols % r != 0 {
        return Err(Error::ShuffleFactorMismatch);
    }
    let out_rows = grid.rows / r;
    let out_cols = grid.cols / r;
    let out_dim = grid.dim * r * r;
    let mut data = Vec::with_capacity(out_rows * out_cols * out_dim);
    for oy in 0..out_rows {
        for ox in 0..out_cols {
            for dy in 0..r {
                for dx in 0..r {
                    let src = (oy * r + dy) * grid.cols + (ox * r + dx);
                    data.extend_from_slice(&grid.data[src * grid.dim..(src + 1) * grid.dim]);
                }
            }
        }
    }
    Ok(VisualTokens { count: out_rows * out_cols, dim: out_dim, data })
}

#[derive(Debug, Clone, PartialEq)]
pub struct ImageConfig {
    pub resolution: usize,
    pub patch: usize,
    pub shuffle: usize,
    pub mean: [f32; 3],
    pub std: [f32; 3],
}

impl Default for ImageConfig {
    fn default() -> Self {
        Self {
            resolution: 384,
            patch: 16,
            shuffle: 3,
            mean: [0.5; 3],
            std: [0.5; 3],
        }
    }
}

impl ImageConfig {
    pub fn validate(&self) -> Result<()> {
        if self.resolution == 0 || self.patch == 0 || self.shuffle == 0 {
            return Err(Error::InvalidConfig("resolution, patch and shuffle must be positive"));
        }
        if self.resolution % self.patch != 0 {
            return Err(Error::ResolutionPatchMismatch);
        }
        if (self.resolution / self.patch) % self.shuffle != 0 {
            return Err(Error::ShuffleFactorMismatch);
        }
        if self.std.iter().any(|&s| s == 0.0) {
            return Err(Error::InvalidNormalization);
        }
        Ok(())
    }

    /// Visual tokens produced for any input image: ((R/p)/r)².
    pub fn token_count(&self) -> usize {
        let g = self.resolution / self.patch / self.shuffle;
        g * g
    }

    /// Per-token dimension after pixel shuffle: p·p·3·r².
    pub fn token_dim(&self) -> usize {
        self.patch * self.patch * CHANNELS * self.shuffle * self.shuffle
    }
}

/// Full deterministic pipeline: resize → normalize → patchify → pixel-shuffle.
pub fn visual_pipeline(img: &ImageTensor, cfg: &ImageConfig) -> Result<VisualTokens> {
    cfg.validate()?;
    let resized = resize_bilinear(img, cfg.resolution, cfg.resolution)?;
    let normalized = normalize(&resized, cfg.mean, cfg.std)?;
    let grid = patchify(&normalized, cfg.patch)?;
    pixel_shuffle(&grid, cfg.shuffle)
}
