//! Binary PPM (P6, maxval 255) reader and writer — the one image format
//! the toolkit consumes. Deliberately strict: anything but 8-bit P6 is an
//! error, because silent format coercion would undermine byte-identical
//! reruns.

use std::path::Path;

use anyhow::{bail, Context, Result};
use boundedreg_core::imageprep::ImageTensor;

/// Pull the next whitespace-delimited token, skipping `#` comments.
fn next_token(bytes: &[u8], pos: &mut usize) -> Option<Vec<u8>> {
    loop {
        while *pos < bytes.len() && bytes[*pos].is_ascii_whitespace() {
            *pos += 1;
        }
        if *pos < bytes.len() && bytes[*pos] == b'#' {
            while *pos < bytes.len() && bytes[*pos] != b'\n' {
                *pos += 1;
            }
            continue;
        }
        break;
    }
    if *pos >= bytes.len() {
        return None;
    }
    let start = *pos;
    while *pos < bytes.len() && !bytes[*pos].is_ascii_whitespace() {
        *pos += 1;
    }
    Some(bytes[start..*pos].to_vec())
}

fn next_usize(bytes: &[u8], pos: &mut usize) -> Result<usize> {
    let tok = next_token(bytes, pos).context("truncated header")?;
    std::str::from_utf8(&tok)
        .ok()
        .and_then(|s| s.parse().ok())
        .context("malformed header number")
}

pub fn read_ppm(path: &Path) -> Result<ImageTensor> {
    let bytes =
        std::fs::read(path).with_context(|| format!("reading image {}", path.display()))?;
    decode(&bytes).with_context(|| format!("decoding image {}", path.display()))
}

fn decode(bytes: &[u8]) -> Result<ImageTensor> {
    let mut pos = 0;
    match next_token(bytes, &mut pos) {
        Some(magic) if magic == b"P6" => {}
        _ => bail!("not a binary PPM (missing P6 magic)"),
    }
    let width = next_usize(bytes, &mut pos)?;
    let height = next_usize(bytes, &mut pos)?;
    let maxval = next_usize(bytes, &mut pos)?;
    if maxval != 255 {
        bail!("unsupported maxval {maxval} (only 255)");
    }
    if width == 0 || height == 0 {
        bail!("degenerate {width}x{height} image");
    }
    // exactly one whitespace byte separates the header from the raster
    if pos >= bytes.len() || !bytes[pos].is_ascii_whitespace() {
        bail!("missing raster separator");
    }
    pos += 1;
    let want = width * height * 3;
    let raster = bytes
        .get(pos..pos + want)
        .with_context(|| format!("raster truncated: want {want} bytes"))?;
    let data = raster.iter().map(|&b| b as f32 / 255.0).collect();
    Ok(ImageTensor { height, width, data })
}

/// Write an image whose samples lie in [0,1]; values are rounded to the
/// nearest 8-bit level and clamped.
pub fn write_ppm(path: &Path, img: &ImageTensor) -> Result<()> {
    let mut out = format!("P6\n{} {}\n255\n", img.width, img.height).into_bytes();
    out.reserve(img.data.len());
    for &v in &img.data {
        out.push((v.clamp(0.0, 1.0) * 255.0).round() as u8);
    }
    std::fs::write(path, out).with_context(|| format!("writing image {}", path.display()))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn roundtrip_is_exact_on_8bit_levels() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("img.ppm");
        let mut img = ImageTensor::constant(3, 2, 0.0);
        for (i, v) in img.data.iter_mut().enumerate() {
            *v = (i % 256) as f32 / 255.0; // exactly representable levels
        }
        write_ppm(&path, &img).unwrap();
        let back = read_ppm(&path).unwrap();
        assert_eq!(back.height, 3);
        assert_eq!(back.width, 2);
        assert_eq!(back.data, img.data);
    }

    #[test]
    fn header_comments_are_skipped() {
        let bytes = b"P6\n# made by hand\n2 1\n255\n\x00\x80\xff\x01\x02\x03";
        let img = decode(bytes).unwrap();
        assert_eq!((img.width, img.height), (2, 1));
        assert_eq!(img.data[1], 128.0 / 255.0);
    }

    #[test]
    fn rejects_wrong_magic_maxval_and_truncation() {
        assert!(decode(b"P5\n1 1\n255\n\x00").is_err());
        assert!(decode(b"P6\n1 1\n65535\n\x00\x00\x00").is_err());
        assert!(decode(b"P6\n2 2\n255\n\x00\x00\x00").is_err());
    }
}
