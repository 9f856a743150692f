//! CSV emission with the house conventions: a `# config_hash=… seed=…`
//! comment line first, then the header row, then data. Comma separator,
//! `.` decimal point, LF endings, `NaN` spelled out. Floats print in
//! shortest-round-trip form so files are byte-stable and lossless.

use std::fmt::Write as _;
use std::path::Path;

use anyhow::{Context, Result};

pub fn fmt_float(v: f64) -> String {
    if v.is_nan() {
        String::from("NaN")
    } else {
        format!("{v:?}")
    }
}

pub fn render_csv(config_hash: &str, seed: u64, header: &str, rows: &[String]) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "# config_hash={config_hash} seed={seed}");
    let _ = writeln!(out, "{header}");
    for row in rows {
        let _ = writeln!(out, "{row}");
    }
    out
}

pub fn write_csv(
    path: &Path,
    config_hash: &str,
    seed: u64,
    header: &str,
    rows: &[String],
) -> Result<()> {
    std::fs::write(path, render_csv(config_hash, seed, header, rows))
        .with_context(|| format!("writing report {}", path.display()))?;
    Ok(())
}
