mod common;

use std::collections::BTreeSet;

use common::{random_kg, random_model};
use nfe_core::evaluation::{evaluate, queries, query_ranks, RankMetrics};
use nfe_core::kgstore::{KgDataset, Split};
use nfe_core::scoring::ScoreVariant;
use nfe_core::training::ModelState;

/// Filtered ranks recomputed from scratch: score every candidate tail with
/// `ModelState::score`, drop every other known-true tail, count strictly
/// better ones.
fn brute_force_ranks(model: &ModelState, ds: &KgDataset, split: Split) -> Vec<usize> {
    let base = ds.num_base_relations();
    let mut facts = BTreeSet::new();
    for s in Split::ALL {
        for t in ds.split(s).iter().filter(|t| t.rel < base) {
            facts.insert((t.head, t.rel, t.tail));
            facts.insert((t.tail, t.rel + base, t.head));
        }
    }
    let mut out = Vec::new();
    for t in ds.split(split) {
        for (h, r, target) in [(t.head, t.rel, t.tail), (t.tail, t.rel + base, t.head)] {
            let s = |e: usize| {
                model
                    .score(&nfe_core::kgstore::TripleId::new(h, r, e))
                    .unwrap()
            };
            let st = s(target);
            let better = (0..ds.num_entities())
                .filter(|&e| e != target && !facts.contains(&(h, r, e)) && s(e) > st)
                .count();
            out.push(1 + better);
        }
    }
    out
}

#[test]
fn filtered_ranks_match_brute_force() {
    for (seed, v) in [(0, ScoreVariant::Nfe1), (1, ScoreVariant::Nfe2Normal), (2, ScoreVariant::Nfe3)] {
        let ds = random_kg(seed, 40, 5, 900);
        let model = random_model(v, 6, ds.num_entities(), ds.num_relations(), seed);
        for split in [Split::Valid, Split::Test] {
            let fast = query_ranks(&model, &ds, split).unwrap();
            assert_eq!(fast, brute_force_ranks(&model, &ds, split), "{v} {split:?}");
        }
    }
}

/// With scores unrelated to the facts, each query's rank is uniform over
/// the `m` unfiltered candidates, so its reciprocal averages `H_m / m`.
#[test]
fn random_model_mrr_matches_uniform_ranking() {
    let ds = random_kg(11, 60, 3, 6000);
    let model = random_model(ScoreVariant::Nfe1, 16, ds.num_entities(), ds.num_relations(), 5);
    let ranks = query_ranks(&model, &ds, Split::Train).unwrap();
    let qs = queries(&ds, Split::Train).unwrap();
    let expected = qs
        .iter()
        .map(|q| {
            let m = ds.num_entities() - ds.filtered_candidates(q.head, q.rel).unwrap().len() + 1;
            (1..=m).map(|k| 1.0 / k as f64).sum::<f64>() / m as f64
        })
        .sum::<f64>()
        / qs.len() as f64;
    let observed = RankMetrics::from_ranks(&ranks).unwrap().mrr;
    assert!((observed - expected).abs() < 0.02, "{observed} vs {expected}");
}

#[test]
fn perfect_model_scores_one() {
    let mut ds = KgDataset::new();
    ds.add_named(Split::Train, [("a", "r", "b"), ("b", "r", "c"), ("c", "r", "d")])
        .unwrap();
    ds.add_named(Split::Test, [("a", "r", "b")]).unwrap();
    let ds = ds.add_reciprocals().unwrap();
    let mut m = ModelState::identity(ScoreVariant::Nfe1, ScoreVariant::Nfe1.oracle_base(), 1, 4, 2).unwrap();
    for (i, x) in [0.0, 1.0, 2.0, 3.0].into_iter().enumerate() {
        m.entities.set(i, &nfe_core::flows::FlowParams::affine(vec![x], vec![1.0]).unwrap()).unwrap();
    }
    m.relations.set(0, &nfe_core::flows::FlowParams::affine(vec![1.0], vec![1.0]).unwrap()).unwrap();
    m.relations.set(1, &nfe_core::flows::FlowParams::affine(vec![-1.0], vec![1.0]).unwrap()).unwrap();
    let metrics = evaluate(&m, &ds, Split::Test).unwrap();
    assert_eq!(metrics.mrr, 1.0);
    assert_eq!(metrics.count, 2);
}
