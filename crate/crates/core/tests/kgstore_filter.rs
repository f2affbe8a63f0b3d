mod common;

use std::collections::BTreeSet;
use std::fs;

use common::random_kg;
use nfe_core::kgstore::{KgDataset, Split, TripleId};
use nfe_core::Error;

/// Every `(h, r, t)` of every split, plus `(t, r_reciprocal, h)`.
fn brute_force_facts(ds: &KgDataset) -> BTreeSet<(usize, usize, usize)> {
    let base = ds.num_base_relations();
    let mut facts = BTreeSet::new();
    for split in Split::ALL {
        for t in ds.split(split) {
            if t.rel < base {
                facts.insert((t.head, t.rel, t.tail));
                facts.insert((t.tail, ds.reciprocal(t.rel).unwrap(), t.head));
            }
        }
    }
    facts
}

#[test]
fn filter_matches_brute_force() {
    for seed in 0..5 {
        let ds = random_kg(seed, 30, 4, 400);
        let facts = brute_force_facts(&ds);
        for h in 0..ds.num_entities() {
            for r in 0..ds.num_relations() {
                let want: Vec<usize> = (0..ds.num_entities())
                    .filter(|&t| facts.contains(&(h, r, t)))
                    .collect();
                assert_eq!(ds.filtered_candidates(h, r).unwrap(), want.as_slice(), "({h}, {r})");
            }
        }
    }
}

#[test]
fn reciprocals_mirror_train_only() {
    let ds = random_kg(7, 20, 3, 200);
    let base = ds.num_base_relations();
    assert_eq!(ds.num_relations(), 2 * base);
    let train = ds.split(Split::Train);
    let originals: Vec<&TripleId> = train.iter().filter(|t| t.rel < base).collect();
    let mirrored: BTreeSet<(usize, usize, usize)> = train
        .iter()
        .filter(|t| t.rel >= base)
        .map(|t| (t.tail, t.rel - base, t.head))
        .collect();
    assert_eq!(originals.len(), mirrored.len());
    assert!(originals.iter().all(|t| mirrored.contains(&(t.head, t.rel, t.tail))));
    for split in [Split::Valid, Split::Test] {
        assert!(ds.split(split).iter().all(|t| t.rel < base));
    }
    for r in 0..base {
        let name = ds.relations().name(r).unwrap();
        let rec = ds.relations().name(ds.reciprocal(r).unwrap()).unwrap();
        assert_eq!(rec, format!("{name}_reciprocal"));
        assert_eq!(ds.reciprocal(ds.reciprocal(r).unwrap()).unwrap(), r);
    }
}

#[test]
fn files_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let ds = random_kg(3, 15, 2, 80);
    let paths: Vec<_> = Split::ALL.iter().map(|s| dir.path().join(format!("{}.tsv", s.name()))).collect();
    // write the original triples only
    let base = ds.num_base_relations();
    for (split, path) in Split::ALL.iter().zip(&paths) {
        let text: String = ds
            .split(*split)
            .iter()
            .filter(|t| t.rel < base)
            .map(|t| {
                format!(
                    "{}\t{}\t{}\n",
                    ds.entities().name(t.head).unwrap(),
                    ds.relations().name(t.rel).unwrap(),
                    ds.entities().name(t.tail).unwrap()
                )
            })
            .collect();
        fs::write(path, text).unwrap();
    }
    let back = KgDataset::load(&paths[0], Some(&paths[1]), Some(&paths[2]))
        .unwrap()
        .add_reciprocals()
        .unwrap();
    assert_eq!(back.summary(), ds.summary());
    assert_eq!(brute_force_facts(&back).len(), brute_force_facts(&ds).len());
}

#[test]
fn duplicates_are_dropped_and_bad_lines_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("train.tsv");
    fs::write(&p, "a\tr\tb\na\tr\tb\r\n\nb\tr\tc\n").unwrap();
    let ds = KgDataset::load(&p, None, None).unwrap();
    assert_eq!(ds.split(Split::Train).len(), 2);
    fs::write(&p, "a\tr\tb\na r c\n").unwrap();
    match KgDataset::load(&p, None, None) {
        Err(Error::Parse { line, .. }) => assert_eq!(line, 2),
        other => panic!("expected a parse error, got {other:?}"),
    }
    assert!(matches!(
        KgDataset::load(&dir.path().join("missing.tsv"), None, None),
        Err(Error::Io { .. })
    ));
}

#[test]
fn augmenting_twice_fails() {
    let ds = random_kg(1, 5, 1, 10);
    assert!(matches!(ds.add_reciprocals(), Err(Error::AlreadyAugmented)));
}
