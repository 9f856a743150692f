//! JSON-lines ingestion with per-line diagnostics. A bad line never aborts
//! the stream: it lands in the rejects list with its 1-based line number
//! and a short reason, and ingestion moves on. Prepared files are written
//! back as JSONL with a leading `_meta` line carrying the config hash and
//! seed; readers skip that line.

use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::Path;

use anyhow::{Context, Result};
use boundedreg_core::datapipe::{ImageRef, ItemRecord};
use serde_json::{json, Map, Value};

/// One rejected input line: (line number, reason). Reasons are a small
/// fixed vocabulary, safe to embed in CSV unquoted.
pub type Reject = (usize, String);

pub fn read_jsonl(path: &Path) -> Result<(Vec<ItemRecord>, Vec<Reject>)> {
    let file =
        File::open(path).with_context(|| format!("opening dataset {}", path.display()))?;
    let mut records = Vec::new();
    let mut rejects = Vec::new();
    for (idx, line) in BufReader::new(file).lines().enumerate() {
        let line_no = idx + 1;
        let line = line.with_context(|| format!("reading {} line {line_no}", path.display()))?;
        if line.trim().is_empty() {
            continue;
        }
        let value: Value = match serde_json::from_str(&line) {
            Ok(v) => v,
            Err(_) => {
                rejects.push((line_no, String::from("invalid json")));
                continue;
            }
        };
        if value.get("_meta").is_some() {
            continue; // header line from a previous prepare run
        }
        match parse_record(&value) {
            Ok(record) => records.push(record),
            Err(reason) => rejects.push((line_no, reason)),
        }
    }
    Ok((records, rejects))
}

/// Accept a string or a list of strings (joined with spaces); the upstream
/// metadata uses lists for description/features and plain strings elsewhere.
fn text_field(value: &Value, key: &str) -> String {
    match value.get(key) {
        Some(Value::String(s)) => s.clone(),
        Some(Value::Array(items)) => items
            .iter()
            .filter_map(Value::as_str)
            .collect::<Vec<_>>()
            .join(" "),
        _ => String::new(),
    }
}

fn parse_record(value: &Value) -> std::result::Result<ItemRecord, String> {
    let obj = value.as_object().ok_or_else(|| String::from("invalid record shape"))?;

    let id = obj
        .get("parent_asin")
        .or_else(|| obj.get("id"))
        .and_then(Value::as_str)
        .ok_or_else(|| String::from("missing id"))?
        .to_string();

    let average_rating = obj
        .get("average_rating")
        .and_then(Value::as_f64)
        .ok_or_else(|| String::from("missing average_rating"))?;
    if !(1.0..=5.0).contains(&average_rating) {
        return Err(String::from("average_rating out of range"));
    }

    let rating_number = obj
        .get("rating_number")
        .and_then(Value::as_u64)
        .ok_or_else(|| String::from("missing rating_number"))?;

    let images = match obj.get("images") {
        Some(Value::Array(items)) => items
            .iter()
            .filter_map(Value::as_object)
            .map(|img| ImageRef {
                variant: img
                    .get("variant")
                    .and_then(Value::as_str)
                    .unwrap_or_default()
                    .to_string(),
                url_hi: img.get("hi_res").and_then(Value::as_str).map(String::from),
                url_lo: img.get("large").and_then(Value::as_str).map(String::from),
            })
            .collect(),
        _ => Vec::new(),
    };

    Ok(ItemRecord {
        id,
        main_category: text_field(value, "main_category"),
        title: text_field(value, "title"),
        description: text_field(value, "description"),
        features: text_field(value, "features"),
        average_rating,
        rating_number,
        images,
        resolved_image: obj
            .get("resolved_image")
            .and_then(Value::as_str)
            .map(String::from),
    })
}

fn record_json(record: &ItemRecord) -> Value {
    let images: Vec<Value> = record
        .images
        .iter()
        .map(|img| {
            let mut m = Map::new();
            m.insert("variant".into(), Value::String(img.variant.clone()));
            if let Some(hi) = &img.url_hi {
                m.insert("hi_res".into(), Value::String(hi.clone()));
            }
            if let Some(lo) = &img.url_lo {
                m.insert("large".into(), Value::String(lo.clone()));
            }
            Value::Object(m)
        })
        .collect();

    let mut m = Map::new();
    m.insert("parent_asin".into(), Value::String(record.id.clone()));
    m.insert("main_category".into(), Value::String(record.main_category.clone()));
    m.insert("title".into(), Value::String(record.title.clone()));
    m.insert("description".into(), Value::String(record.description.clone()));
    m.insert("features".into(), Value::String(record.features.clone()));
    m.insert("average_rating".into(), json!(record.average_rating));
    m.insert("rating_number".into(), json!(record.rating_number));
    m.insert("images".into(), Value::Array(images));
    if let Some(resolved) = &record.resolved_image {
        m.insert("resolved_image".into(), Value::String(resolved.clone()));
    }
    Value::Object(m)
}

/// Write records as JSONL, preceded by a `_meta` line that stamps the file
/// with the producing config hash and seed. Key order is the serializer's
/// canonical (sorted) order, so identical inputs give identical bytes.
pub fn write_jsonl(
    path: &Path,
    records: &[ItemRecord],
    config_hash: &str,
    seed: u64,
) -> Result<()> {
    let mut out = Vec::new();
    let meta = json!({ "_meta": { "config_hash": config_hash, "seed": seed } });
    serde_json::to_writer(&mut out, &meta)?;
    out.push(b'\n');
    for record in records {
        serde_json::to_writer(&mut out, &record_json(record))?;
        out.push(b'\n');
    }
    std::fs::write(path, out).with_context(|| format!("writing {}", path.display()))?;
    Ok(())
}

/// Stream a prepared (or raw) JSONL through to records, treating any
/// reject as a hard error: prepared datasets are supposed to be clean.
pub fn read_prepared(path: &Path) -> Result<Vec<ItemRecord>> {
    let (records, rejects) = read_jsonl(path)?;
    if let Some((line, reason)) = rejects.first() {
        anyhow::bail!("{} line {line}: {reason}", path.display());
    }
    Ok(records)
}

/// Rejects CSV body rows, `line,reason`.
pub fn reject_rows(rejects: &[Reject]) -> Vec<String> {
    rejects.iter().map(|(line, reason)| format!("{line},{reason}")).collect()
}
