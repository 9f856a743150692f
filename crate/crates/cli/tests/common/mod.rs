//! Helpers shared by the integration suites: a raw P6 writer, a catalog
//! record builder, small-fixture generation, and binary spawning.
//!
//! Each test target compiles its own copy, so not every helper is used
//! everywhere.
#![allow(dead_code)]

use std::fs;
use std::path::{Path, PathBuf};
use std::process::Command;

pub fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_boundedreg"))
}

/// Runs the CLI, asserting success; returns captured stdout.
pub fn run_ok(cmd: &mut Command) -> String {
    let out = cmd.output().expect("failed to spawn CLI");
    assert!(
        out.status.success(),
        "command {:?} failed\nstdout: {}\nstderr: {}",
        cmd,
        String::from_utf8_lossy(&out.stdout),
        String::from_utf8_lossy(&out.stderr),
    );
    String::from_utf8(out.stdout).expect("stdout was not utf-8")
}

/// Runs the CLI, asserting a nonzero exit; returns captured stderr.
pub fn run_err(cmd: &mut Command) -> String {
    let out = cmd.output().expect("failed to spawn CLI");
    assert!(
        !out.status.success(),
        "command {:?} unexpectedly succeeded\nstdout: {}",
        cmd,
        String::from_utf8_lossy(&out.stdout),
    );
    String::from_utf8_lossy(&out.stderr).into_owned()
}

/// Solid-gray P6 file: `level` on all three channels of every pixel.
pub fn write_gray_ppm(path: &Path, width: usize, height: usize, level: u8) {
    let mut bytes = format!("P6\n{width} {height}\n255\n").into_bytes();
    bytes.extend(std::iter::repeat([level; 3]).take(width * height).flatten());
    fs::write(path, bytes).unwrap();
}

/// One raw catalog line in the ingest schema. `image: None` produces an
/// empty image list, which the sampling filter drops.
pub fn raw_record(
    id: &str,
    category: &str,
    title: &str,
    rating: f64,
    rating_number: u64,
    image: Option<&str>,
) -> serde_json::Value {
    let images = match image {
        Some(img) => serde_json::json!([{ "variant": "MAIN", "large": img }]),
        None => serde_json::json!([]),
    };
    serde_json::json!({
        "parent_asin": id,
        "main_category": category,
        "title": title,
        "description": ["Synthetic catalog entry."],
        "features": ["test fixture"],
        "average_rating": rating,
        "rating_number": rating_number,
        "images": images,
    })
}

/// Writes `n` tiny gray images plus a catalog referencing them; the target
/// rating tracks brightness so even a short training run has signal.
/// Returns the path of the raw JSONL.
pub fn small_dataset(dir: &Path, n: usize) -> PathBuf {
    let mut lines = Vec::with_capacity(n);
    for i in 0..n {
        let level = (40 + (i * 200) / n.max(1)) as u8;
        let img = format!("img_{i:03}.ppm");
        write_gray_ppm(&dir.join(&img), 8, 8, level);
        let rating = 1.5 + 3.0 * level as f64 / 255.0;
        let category = if i % 2 == 0 { "Alpha" } else { "Beta" };
        let rec = raw_record(
            &format!("B{i:04}"),
            category,
            &format!("Sample item {i:03}"),
            rating,
            10 + i as u64,
            Some(&img),
        );
        lines.push(rec.to_string());
    }
    let raw = dir.join("raw.jsonl");
    fs::write(&raw, lines.join("\n") + "\n").unwrap();
    raw
}

/// A deliberately small pipeline configuration so end-to-end tests finish
/// in milliseconds: 64px images, 4 visual tokens of dim 3072, a 32-wide
/// encoder, and a 6-sample holdout.
pub const SMALL_CONFIG: &str = r#"seed = 123

[prompt]
char_limit = 20
max_text_tokens = 128

[image]
resolution = 64
patch = 16
shuffle = 2

[backbone]
d_model = 32
n_mix_layers = 1

[train]
batch_size = 8
max_epochs = 3
patience = 3

[sampling]
k = 50
holdout_n = 6
"#;
