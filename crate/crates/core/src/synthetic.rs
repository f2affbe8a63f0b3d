//! A small knowledge graph with planted relational rules, for checking that
//! trained relation flows recover them.
//!
//! The 200 entities are the points of a `5 x 5 x 8` lattice and every
//! relation is a lattice map, so each head has at most one tail per relation:
//!
//! | relation        | lattice map                  | rule                   |
//! |-----------------|------------------------------|------------------------|
//! | `symmetric`     | `x -> (4, 4, 7) - x`         | symmetric              |
//! | `antisymmetric` | `x1 -> 2 x1`, for `x1 > 0`   | antisymmetric          |
//! | `inverse_a`     | `x2 -> x2 + 1`               | inverse of `inverse_b` |
//! | `inverse_b`     | `x2 -> x2 - 1`               |                        |
//! | `comp_1`        | `x3 -> x3 + 1`               |                        |
//! | `comp_2`        | `x2 -> x2 + 1`               |                        |
//! | `comp_3`        | `x2 -> x2 + 1, x3 -> x3 + 1` | `comp_2 ∘ comp_1`      |
//!
//! The held-out split holds triples implied by a rule and the training
//! triples it is applied to: reversed `symmetric` pairs, `inverse_b` triples
//! whose `inverse_a` partner is kept, and `comp_3` triples with a kept
//! `comp_1`/`comp_2` path.

use std::collections::HashSet;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::Result;
use crate::kgstore::{KgDataset, Split};

pub const SYMMETRIC: &str = "symmetric";
pub const ANTISYMMETRIC: &str = "antisymmetric";
pub const INVERSE_A: &str = "inverse_a";
pub const INVERSE_B: &str = "inverse_b";
pub const COMP_1: &str = "comp_1";
pub const COMP_2: &str = "comp_2";
pub const COMP_3: &str = "comp_3";

const SHAPE: [i32; 3] = [5, 5, 8];

#[derive(Debug, Clone, PartialEq)]
pub struct PlantedConfig {
    pub seed: u64,
    /// Fraction of rule-implied triples moved to the held-out split.
    pub holdout_fraction: f64,
    /// When set, every entity gets a random level in {1, 2}; a triple
    /// between entities of different levels survives with this probability.
    pub level_noise: Option<f64>,
}

impl Default for PlantedConfig {
    fn default() -> Self {
        PlantedConfig {
            seed: 0,
            holdout_fraction: 0.2,
            level_noise: None,
        }
    }
}

type Pos = [i32; 3];
type Named = (String, String, String);

fn lattice() -> Vec<Pos> {
    let mut out = Vec::new();
    for x1 in 0..SHAPE[0] {
        for x2 in 0..SHAPE[1] {
            for x3 in 0..SHAPE[2] {
                out.push([x1, x2, x3]);
            }
        }
    }
    out
}

fn inside(p: Pos) -> bool {
    (0..3).all(|i| (0..SHAPE[i]).contains(&p[i]))
}

fn entity(p: Pos) -> String {
    format!("n{}{}{}", p[0], p[1], p[2])
}

fn relation_map(rel: &str, p: Pos) -> Option<Pos> {
    let [x1, x2, x3] = p;
    let q = match rel {
        SYMMETRIC => [4 - x1, 4 - x2, 7 - x3],
        // 0 is the fixed point of the doubling, and a self-loop is symmetric
        ANTISYMMETRIC if x1 == 0 => return None,
        ANTISYMMETRIC => [2 * x1, x2, x3],
        INVERSE_A | COMP_2 => [x1, x2 + 1, x3],
        INVERSE_B => [x1, x2 - 1, x3],
        COMP_1 => [x1, x2, x3 + 1],
        COMP_3 => [x1, x2 + 1, x3 + 1],
        _ => unreachable!("unknown planted relation {rel}"),
    };
    inside(q).then_some(q)
}

pub const RELATIONS: [&str; 7] = [
    SYMMETRIC,
    ANTISYMMETRIC,
    INVERSE_A,
    INVERSE_B,
    COMP_1,
    COMP_2,
    COMP_3,
];

/// Builds the planted-rule graph with reciprocal relations added. Held-out
/// triples form the `valid` split; `test` is empty.
pub fn planted_rule_kg(cfg: &PlantedConfig) -> Result<KgDataset> {
    let (train, held) = planted_triples(cfg);
    let mut ds = KgDataset::new();
    ds.add_named(
        Split::Train,
        train.iter().map(|(h, r, t)| (h.as_str(), r.as_str(), t.as_str())),
    )?;
    ds.add_named(
        Split::Valid,
        held.iter().map(|(h, r, t)| (h.as_str(), r.as_str(), t.as_str())),
    )?;
    ds.add_reciprocals()
}

/// `(train, held_out)` triples by name.
pub fn planted_triples(cfg: &PlantedConfig) -> (Vec<Named>, Vec<Named>) {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let all = lattice();
    let levels: std::collections::HashMap<String, u8> = all
        .iter()
        .map(|&p| (entity(p), rng.random_range(1..=2u8)))
        .collect();

    let mut facts: Vec<Named> = Vec::new();
    for rel in RELATIONS {
        for &p in &all {
            let Some(q) = relation_map(rel, p) else {
                continue;
            };
            let (h, t) = (entity(p), entity(q));
            if let Some(keep) = cfg.level_noise {
                // draw for every pair so the stream does not depend on levels
                let u: f64 = rng.random();
                if levels[&h] != levels[&t] && u >= keep {
                    continue;
                }
            }
            facts.push((h, rel.to_owned(), t));
        }
    }
    let present: HashSet<(&str, &str, &str)> = facts
        .iter()
        .map(|(h, r, t)| (h.as_str(), r.as_str(), t.as_str()))
        .collect();

    // candidates for each rule, as indices into `facts`
    let mut sym = Vec::new();
    let mut inv = Vec::new();
    let mut comp = Vec::new();
    for (i, (h, r, t)) in facts.iter().enumerate() {
        match r.as_str() {
            // each unordered pair once: the triple whose head sorts after its tail
            SYMMETRIC if h > t && present.contains(&(t.as_str(), SYMMETRIC, h.as_str())) => {
                sym.push(i)
            }
            INVERSE_B if present.contains(&(t.as_str(), INVERSE_A, h.as_str())) => inv.push(i),
            COMP_3 => comp.push(i),
            _ => {}
        }
    }
    let take = |v: &mut Vec<usize>, rng: &mut ChaCha8Rng| -> Vec<usize> {
        v.shuffle(rng);
        let k = (v.len() as f64 * cfg.holdout_fraction).round() as usize;
        v[..k].to_vec()
    };
    let mut held: HashSet<usize> = HashSet::new();
    held.extend(take(&mut sym, &mut rng));
    held.extend(take(&mut inv, &mut rng));
    // a comp_3 triple is implied only if some comp_1 then comp_2 path exists
    let paths = |h: &str, t: &str| {
        facts.iter().any(|(a, r, mid)| {
            a == h && r == COMP_1 && present.contains(&(mid.as_str(), COMP_2, t))
        })
    };
    comp.retain(|&i| paths(&facts[i].0, &facts[i].2));
    held.extend(take(&mut comp, &mut rng));

    let mut train = Vec::new();
    let mut out = Vec::new();
    for (i, f) in facts.into_iter().enumerate() {
        if held.contains(&i) {
            out.push(f);
        } else {
            train.push(f);
        }
    }
    (train, out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sizes_without_noise() {
        let (train, held) = planted_triples(&PlantedConfig::default());
        assert_eq!(train.len() + held.len(), 200 + 80 + 160 + 160 + 175 + 160 + 140);
        // 20% of 100 symmetric pairs, of 160 inverse triples, of 140 compositions
        assert_eq!(held.len(), 20 + 32 + 28);
        let ds = planted_rule_kg(&PlantedConfig::default()).unwrap();
        assert_eq!(ds.num_entities(), 200);
        assert_eq!(ds.num_relations(), 14);
    }

    #[test]
    fn held_out_triples_are_implied_by_kept_ones() {
        let (train, held) = planted_triples(&PlantedConfig::default());
        let kept: HashSet<(&str, &str, &str)> = train
            .iter()
            .map(|(h, r, t)| (h.as_str(), r.as_str(), t.as_str()))
            .collect();
        for (h, r, t) in &held {
            let ok = match r.as_str() {
                SYMMETRIC => kept.contains(&(t.as_str(), SYMMETRIC, h.as_str())),
                INVERSE_B => kept.contains(&(t.as_str(), INVERSE_A, h.as_str())),
                COMP_3 => train.iter().any(|(a, r1, m)| {
                    a == h && r1 == COMP_1 && kept.contains(&(m.as_str(), COMP_2, t.as_str()))
                }),
                _ => false,
            };
            assert!(ok, "{h} {r} {t}");
        }
    }

    #[test]
    fn level_noise_drops_mixed_pairs() {
        let cfg = PlantedConfig {
            level_noise: Some(0.1),
            ..PlantedConfig::default()
        };
        let (train, held) = planted_triples(&cfg);
        let n = train.len() + held.len();
        assert!(n < 1075 * 3 / 4 && n > 1075 / 3, "{n}");
        assert_eq!(planted_triples(&cfg), (train, held));
    }
}
