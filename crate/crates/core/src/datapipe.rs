//! Dataset shaping: review-count and image filters, per-category
//! popularity-stratified sampling, and a seeded train/validation split.
//! All steps are deterministic — identical input and config always yield
//! identical output, down to record order.
//!
//! Parsing of the raw JSON-lines files (and the rejects accounting that
//! goes with it) lives in the companion CLI crate; this module works on
//! already-structured records.

use alloc::string::String;
use alloc::vec::Vec;

use crate::rng::{derive_seed, shuffle, SplitMix64};
use crate::{Error, Result};

/// One image listing attached to an item. `variant` is the catalogue slot
/// name (e.g. "MAIN", "PT01"); the two URLs are the high- and low-res
/// versions, either of which may be missing.
#[derive(Debug, Clone, PartialEq)]
pub struct ImageRef {
    pub variant: String,
    pub url_hi: Option<String>,
    pub url_lo: Option<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ItemRecord {
    pub id: String,
    pub main_category: String,
    pub title: String,
    pub description: String,
    pub features: String,
    pub average_rating: f64,
    pub rating_number: u64,
    pub images: Vec<ImageRef>,
    /// Filled in by [`filter_items`]: the chosen image URL (or local path).
    pub resolved_image: Option<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SamplingConfig {
    /// Per-tail sample size: up to k most- and k least-reviewed items
    /// survive per category.
    pub k: usize,
    pub min_reviews: u64,
    pub holdout_n: usize,
    pub seed: u64,
}

impl Default for SamplingConfig {
    fn default() -> Self {
        Self { k: 1000, min_reviews: 10, holdout_n: 100, seed: 0 }
    }
}

impl SamplingConfig {
    pub fn validate(&self) -> Result<()> {
        if self.k == 0 || self.holdout_n == 0 {
            return Err(Error::InvalidConfig("k and holdout_n must be at least 1"));
        }
        Ok(())
    }
}

fn resolve_main_image(images: &[ImageRef]) -> Option<String> {
    images
        .iter()
        .filter(|img| img.variant == "MAIN")
        .find_map(|img| img.url_hi.clone().or_else(|| img.url_lo.clone()))
}

/// Keep items with enough reviews and a usable MAIN image, resolving the
/// image to the high-res URL when available, low-res otherwise. Input
/// order is preserved.
pub fn filter_items(records: Vec<ItemRecord>, cfg: &SamplingConfig) -> Vec<ItemRecord> {
    records
        .into_iter()
        .filter_map(|mut rec| {
            if rec.rating_number < cfg.min_reviews {
                return None;
            }
            let url = resolve_main_image(&rec.images)?;
            rec.resolved_image = Some(url);
            Some(rec)
        })
        .collect()
}

/// Per-category popularity stratification: categories with at most 2k
/// items are kept whole; larger ones contribute their k least-reviewed and
/// k most-reviewed items. Ties on the review count break by ascending id
/// on both tails, and an item is never emitted twice even when the tails
/// overlap under ties. Output is sorted by (category, id).
pub fn stratified_sample(records: Vec<ItemRecord>, cfg: &SamplingConfig) -> Vec<ItemRecord> {
    let mut by_category: alloc::collections::BTreeMap<String, Vec<ItemRecord>> =
        alloc::collections::BTreeMap::new();
    for rec in records {
        by_category.entry(rec.main_category.clone()).or_default().push(rec);
    }
    let mut out = Vec::new();
    for (_, mut group) in by_category {
        if group.len() <= 2 * cfg.k {
            out.append(&mut group);
            continue;
        }
        let mut order: Vec<usize> = (0..group.len()).collect();
        // least-reviewed tail: review count ascending, id ascending
        order.sort_by(|&a, &b| {
            (group[a].rating_number, &group[a].id).cmp(&(group[b].rating_number, &group[b].id))
        });
        let mut selected: alloc::collections::BTreeSet<usize> =
            order[..cfg.k].iter().copied().collect();
        // most-reviewed tail: review count descending, id still ascending
        order.sort_by(|&a, &b| {
            (core::cmp::Reverse(group[a].rating_number), &group[a].id)
                .cmp(&(core::cmp::Reverse(group[b].rating_number), &group[b].id))
        });
        selected.extend(order[..cfg.k].iter().copied());
        let mut keep_flags = alloc::vec![false; group.len()];
        for idx in selected {
            keep_flags[idx] = true;
        }
        out.extend(
            group.into_iter().zip(keep_flags).filter_map(|(rec, keep)| keep.then_some(rec)),
        );
    }
    out.sort_by(|a, b| (&a.main_category, &a.id).cmp(&(&b.main_category, &b.id)));
    out
}

/// Seeded split: a deterministic uniform shuffle, then the first
/// `holdout_n` records become the validation set. The two halves are an
/// exact partition of the input.
pub fn split_holdout(
    records: Vec<ItemRecord>,
    cfg: &SamplingConfig,
) -> Result<(Vec<ItemRecord>, Vec<ItemRecord>)> {
    if records.len() <= cfg.holdout_n {
        return Err(Error::TooFewRecords);
    }
    let mut order: Vec<usize> = (0..records.len()).collect();
    let mut rng = SplitMix64::new(derive_seed(cfg.seed, "holdout"));
    shuffle(&mut rng, &mut order);

    let mut slots: Vec<Option<ItemRecord>> = records.into_iter().map(Some).collect();
    let mut validation = Vec::with_capacity(cfg.holdout_n);
    let mut train = Vec::with_capacity(slots.len() - cfg.holdout_n);
    for (pos, &idx) in order.iter().enumerate() {
        let rec = slots[idx].take().expect("each index visited once");
        if pos < cfg.holdout_n {
            validation.push(rec);
        } else {
            train.push(rec);
        }
    }
    Ok((train, validation))
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::format;
    use alloc::string::ToString;
    use alloc::vec;

    fn item(id: &str, category: &str, rating_number: u64, images: Vec<ImageRef>) -> ItemRecord {
        ItemRecord {
            id: id.to_string(),
            main_category: category.to_string(),
            title: format!("title {id}"),
            description: String::new(),
            features: String::new(),
            average_rating: 4.0,
            rating_number,
            images,
            resolved_image: None,
        }
    }

    fn main_img(hi: Option<&str>, lo: Option<&str>) -> ImageRef {
        ImageRef {
            variant: "MAIN".to_string(),
            url_hi: hi.map(String::from),
            url_lo: lo.map(String::from),
        }
    }

    #[test]
    fn filter_applies_review_threshold() {
        let cfg = SamplingConfig::default();
        let recs = vec![
            item("a", "c", 9, vec![main_img(Some("hi-a"), None)]),
            item("b", "c", 10, vec![main_img(Some("hi-b"), None)]),
        ];
        let kept = filter_items(recs, &cfg);
        assert_eq!(kept.len(), 1);
        assert_eq!(kept[0].id, "b");
        assert_eq!(kept[0].resolved_image.as_deref(), Some("hi-b"));
    }

    #[test]
    fn filter_requires_usable_main_image() {
        let cfg = SamplingConfig::default();
        let other = ImageRef {
            variant: "PT01".to_string(),
            url_hi: Some("pt hi".to_string()),
            url_lo: None,
        };
        let recs = vec![
            item("a", "c", 50, vec![other]),                       // no MAIN at all
            item("b", "c", 50, vec![main_img(None, None)]),        // MAIN without URLs
            item("c", "c", 50, vec![main_img(None, Some("lo-c"))]), // low-res fallback
            item(
                "d",
                "c",
                50,
                vec![main_img(None, None), main_img(Some("hi-d2"), Some("lo-d2"))],
            ),
        ];
        let kept = filter_items(recs, &cfg);
        let ids: Vec<&str> = kept.iter().map(|r| r.id.as_str()).collect();
        assert_eq!(ids, vec!["c", "d"]);
        assert_eq!(kept[0].resolved_image.as_deref(), Some("lo-c"));
        assert_eq!(kept[1].resolved_image.as_deref(), Some("hi-d2"), "high-res preferred");
    }

    #[test]
    fn filter_preserves_order() {
        let cfg = SamplingConfig::default();
        let recs: Vec<ItemRecord> = (0..20)
            .map(|i| item(&format!("id{i:02}"), "c", 10 + i, vec![main_img(Some("u"), None)]))
            .collect();
        let kept = filter_items(recs.clone(), &cfg);
        let want: Vec<&str> = recs.iter().map(|r| r.id.as_str()).collect();
        let got: Vec<&str> = kept.iter().map(|r| r.id.as_str()).collect();
        assert_eq!(got, want);
    }

    #[test]
    fn small_categories_are_kept_whole() {
        let cfg = SamplingConfig { k: 2, ..SamplingConfig::default() };
        let recs = vec![
            item("a", "books", 10, vec![]),
            item("b", "books", 500, vec![]),
            item("c", "books", 80, vec![]),
        ];
        let out = stratified_sample(recs, &cfg);
        assert_eq!(out.len(), 3, "3 ≤ 2k, keep everything");
    }

    #[test]
    fn large_categories_keep_both_tails() {
        let cfg = SamplingConfig { k: 2, ..SamplingConfig::default() };
        let recs = vec![
            item("a", "books", 100, vec![]),
            item("b", "books", 10, vec![]),
            item("c", "books", 900, vec![]),
            item("d", "books", 40, vec![]),
            item("e", "books", 300, vec![]),
        ];
        let out = stratified_sample(recs, &cfg);
        let ids: Vec<&str> = out.iter().map(|r| r.id.as_str()).collect();
        // bottom-2 by review count: b(10), d(40); top-2: c(900), e(300)
        assert_eq!(ids, vec!["b", "c", "d", "e"]);
    }

    #[test]
    fn tied_tails_never_duplicate_items() {
        let cfg = SamplingConfig { k: 2, ..SamplingConfig::default() };
        let recs: Vec<ItemRecord> =
            ["a", "b", "c", "d", "e"].iter().map(|id| item(id, "books", 7, vec![])).collect();
        let out = stratified_sample(recs, &cfg);
        let ids: Vec<&str> = out.iter().map(|r| r.id.as_str()).collect();
        // all review counts tie, so both tails resolve to the id-ascending
        // prefix {a, b}; the union stays duplicate-free
        assert_eq!(ids, vec!["a", "b"]);
    }

    #[test]
    fn output_is_sorted_by_category_then_id() {
        let cfg = SamplingConfig { k: 5, ..SamplingConfig::default() };
        let recs = vec![
            item("z", "tools", 10, vec![]),
            item("m", "books", 10, vec![]),
            item("a", "tools", 10, vec![]),
            item("q", "books", 10, vec![]),
        ];
        let out = stratified_sample(recs, &cfg);
        let keys: Vec<(String, String)> =
            out.iter().map(|r| (r.main_category.clone(), r.id.clone())).collect();
        let mut sorted = keys.clone();
        sorted.sort();
        assert_eq!(keys, sorted);
    }

    #[test]
    fn sample_sizes_hit_min_size_2k_with_distinct_counts() {
        let cfg = SamplingConfig { k: 3, ..SamplingConfig::default() };
        let mut recs = Vec::new();
        for (cat, n) in [("small", 4usize), ("exact", 6), ("large", 11)] {
            for i in 0..n {
                recs.push(item(&format!("{cat}{i:02}"), cat, (i * 13 + 1) as u64, vec![]));
            }
        }
        let out = stratified_sample(recs, &cfg);
        let count = |cat: &str| out.iter().filter(|r| r.main_category == cat).count();
        assert_eq!(count("small"), 4);
        assert_eq!(count("exact"), 6);
        assert_eq!(count("large"), 6);
        assert!(stratified_sample(vec![], &cfg).is_empty());
    }

    #[test]
    fn split_sizes_and_partition() {
        let cfg = SamplingConfig { holdout_n: 3, ..SamplingConfig::default() };
        let recs: Vec<ItemRecord> =
            (0..10).map(|i| item(&format!("id{i}"), "c", 10, vec![])).collect();
        let (train, val) = split_holdout(recs.clone(), &cfg).unwrap();
        assert_eq!((train.len(), val.len()), (7, 3));

        let mut all: Vec<&str> =
            train.iter().chain(&val).map(|r| r.id.as_str()).collect();
        all.sort_unstable();
        let mut want: Vec<&str> = recs.iter().map(|r| r.id.as_str()).collect();
        want.sort_unstable();
        assert_eq!(all, want, "partition must be exact");
    }

    #[test]
    fn split_is_seed_deterministic() {
        let recs: Vec<ItemRecord> =
            (0..1000).map(|i| item(&format!("id{i:04}"), "c", 10, vec![])).collect();
        let cfg = SamplingConfig { holdout_n: 100, seed: 5, ..SamplingConfig::default() };
        let (t1, v1) = split_holdout(recs.clone(), &cfg).unwrap();
        let (t2, v2) = split_holdout(recs.clone(), &cfg).unwrap();
        assert_eq!(t1, t2);
        assert_eq!(v1, v2);

        let other = SamplingConfig { seed: 6, ..cfg };
        let (_, v3) = split_holdout(recs, &other).unwrap();
        let ids = |v: &[ItemRecord]| {
            v.iter().map(|r| r.id.clone()).collect::<alloc::collections::BTreeSet<_>>()
        };
        assert_ne!(ids(&v1), ids(&v3), "different seeds must pick different holdouts");
    }

    #[test]
    fn split_rejects_too_few_records() {
        let cfg = SamplingConfig { holdout_n: 10, ..SamplingConfig::default() };
        let recs: Vec<ItemRecord> =
            (0..10).map(|i| item(&format!("id{i}"), "c", 10, vec![])).collect();
        assert_eq!(split_holdout(recs, &cfg), Err(Error::TooFewRecords));
    }
}
