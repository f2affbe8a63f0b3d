//! Filtered ranking and MR / MRR / Hits@N.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::kgstore::{KgDataset, Split, TripleId};
use crate::training::ModelState;

pub const HITS_AT: [usize; 3] = [1, 3, 10];

#[derive(Debug, Clone, PartialEq)]
pub struct RankMetrics {
    pub mr: f64,
    pub mrr: f64,
    /// `N -> fraction of ranks <= N`.
    pub hits: BTreeMap<usize, f64>,
    pub count: usize,
}

impl RankMetrics {
    pub fn from_ranks(ranks: &[usize]) -> Result<Self> {
        if ranks.is_empty() {
            return Err(Error::EmptySplit);
        }
        let n = ranks.len() as f64;
        let mr = ranks.iter().map(|&r| r as f64).sum::<f64>() / n;
        let mrr = ranks.iter().map(|&r| 1.0 / r as f64).sum::<f64>() / n;
        let hits = HITS_AT
            .iter()
            .map(|&k| (k, ranks.iter().filter(|&&r| r <= k).count() as f64 / n))
            .collect();
        Ok(RankMetrics {
            mr,
            mrr,
            hits,
            count: ranks.len(),
        })
    }

    pub fn hits_at(&self, n: usize) -> Option<f64> {
        self.hits.get(&n).copied()
    }

    fn fields(&self) -> Vec<(String, String)> {
        let mut f = vec![
            ("count".to_owned(), self.count.to_string()),
            ("mr".to_owned(), self.mr.to_string()),
            ("mrr".to_owned(), self.mrr.to_string()),
        ];
        for (k, v) in &self.hits {
            f.push((format!("hits@{k}"), v.to_string()));
        }
        f
    }

    /// One `key=value` per line followed by the single-line summary.
    /// Values print in shortest round-trip form.
    pub fn to_record(&self) -> String {
        let mut out = String::new();
        for (k, v) in self.fields() {
            let _ = writeln!(out, "{k}={v}");
        }
        let _ = writeln!(out, "{}", self.summary_line());
        out
    }

    pub fn summary_line(&self) -> String {
        let body: Vec<String> = self.fields().into_iter().map(|(k, v)| format!("{k}={v}")).collect();
        format!("metrics {}", body.join(" "))
    }

    /// Parses the output of [`RankMetrics::to_record`] or just its summary
    /// line. Lines without `=` and `#` comments are ignored.
    pub fn parse_record(text: &str) -> Result<Self> {
        let mut kv = BTreeMap::new();
        for line in text.lines() {
            let line = line.trim();
            if line.starts_with('#') {
                continue;
            }
            let line = line.strip_prefix("metrics ").unwrap_or(line);
            for tok in line.split_whitespace() {
                if let Some((k, v)) = tok.split_once('=') {
                    kv.insert(k.to_owned(), v.to_owned());
                }
            }
        }
        let bad = |k: &str| Error::Config(format!("metrics record: missing or bad '{k}'"));
        let num = |k: &str| -> Result<f64> {
            kv.get(k).and_then(|v| v.parse().ok()).ok_or_else(|| bad(k))
        };
        let count = kv
            .get("count")
            .and_then(|v| v.parse().ok())
            .ok_or_else(|| bad("count"))?;
        let mut hits = BTreeMap::new();
        for (k, v) in &kv {
            if let Some(n) = k.strip_prefix("hits@") {
                let n: usize = n.parse().map_err(|_| bad(k))?;
                hits.insert(n, v.parse().map_err(|_| bad(k))?);
            }
        }
        Ok(RankMetrics {
            mr: num("mr")?,
            mrr: num("mrr")?,
            hits,
            count,
        })
    }
}

/// `1 +` the number of candidates scoring strictly above `scores[target]`,
/// skipping the indices in `filtered` (sorted) other than `target`.
pub fn rank_from_scores(scores: &[f64], target: usize, filtered: &[usize]) -> usize {
    let s = scores[target];
    let mut rank = 1;
    let mut skip = filtered.iter().peekable();
    for (e, &x) in scores.iter().enumerate() {
        while skip.next_if(|&&f| f < e).is_some() {}
        if skip.peek() == Some(&&e) {
            continue;
        }
        if e != target && x > s {
            rank += 1;
        }
    }
    rank
}

/// Filtered rank of `triple.tail` among all entities as tails of
/// `(triple.head, triple.rel, ·)`.
pub fn filtered_rank(model: &ModelState, ds: &KgDataset, triple: &TripleId) -> Result<usize> {
    let mut buf = vec![0.0; model.num_entities()];
    rank_with(model, ds, triple, &mut buf, true)
}

/// Rank without removing other known tails.
pub fn raw_rank(model: &ModelState, ds: &KgDataset, triple: &TripleId) -> Result<usize> {
    let mut buf = vec![0.0; model.num_entities()];
    rank_with(model, ds, triple, &mut buf, false)
}

fn rank_with(
    model: &ModelState,
    ds: &KgDataset,
    t: &TripleId,
    buf: &mut [f64],
    filter: bool,
) -> Result<usize> {
    ds.check_triple(t)?;
    model.score_all_tails(t.head, t.rel, buf)?;
    let filtered = if filter {
        ds.filtered_candidates(t.head, t.rel)?
    } else {
        &[]
    };
    Ok(rank_from_scores(buf, t.tail, filtered))
}

/// Tail-prediction queries for a split: each triple as `(h, r, t)` and as
/// `(t, r_reciprocal, h)`.
pub fn queries(ds: &KgDataset, split: Split) -> Result<Vec<TripleId>> {
    let mut out = Vec::with_capacity(2 * ds.split(split).len());
    for t in ds.split(split) {
        out.push(*t);
        out.push(TripleId::new(t.tail, ds.reciprocal(t.rel)?, t.head));
    }
    Ok(out)
}

/// Filtered ranks of every query of `split`, in query order.
pub fn query_ranks(model: &ModelState, ds: &KgDataset, split: Split) -> Result<Vec<usize>> {
    if model.num_entities() != ds.num_entities() || model.num_relations() != ds.num_relations() {
        return Err(Error::ShapeMismatch(format!(
            "model has {} entities / {} relations, dataset has {} / {}",
            model.num_entities(),
            model.num_relations(),
            ds.num_entities(),
            ds.num_relations()
        )));
    }
    let qs = queries(ds, split)?;
    qs.par_iter()
        .map_init(
            || vec![0.0; model.num_entities()],
            |buf, q| rank_with(model, ds, q, buf, true),
        )
        .collect()
}

/// Metrics over both directions of every triple in `split`.
pub fn evaluate(model: &ModelState, ds: &KgDataset, split: Split) -> Result<RankMetrics> {
    if ds.split(split).is_empty() {
        return Err(Error::EmptySplit);
    }
    RankMetrics::from_ranks(&query_ranks(model, ds, split)?)
}
