#![allow(dead_code)]

use nfe_core::flows::{FlowKind, FlowParams};
use nfe_core::kgstore::{KgDataset, Split};
use nfe_core::scoring::ScoreVariant;
use nfe_core::training::ModelState;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub const VARIANTS: [ScoreVariant; 7] = [
    ScoreVariant::Nfe1,
    ScoreVariant::Nfe2Uniform,
    ScoreVariant::Nfe2Normal,
    ScoreVariant::Nfe3,
    ScoreVariant::NfeK { inv_k_sq: 0.37 },
    ScoreVariant::MuOnly,
    ScoreVariant::SigmaOnly,
];

/// A slope with magnitude in `[0.3, 2]` and random sign, so products of two
/// slopes stay at least 0.09 from the kink at 0.
pub fn slope(rng: &mut ChaCha8Rng) -> f64 {
    let m = rng.random_range(0.3..2.0);
    if rng.random_bool(0.5) {
        m
    } else {
        -m
    }
}

pub fn offsets(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| rng.random_range(-2.0..2.0)).collect()
}

pub fn affine(rng: &mut ChaCha8Rng, n: usize) -> FlowParams {
    let mu = offsets(rng, n);
    let s = (0..n).map(|_| slope(rng)).collect();
    FlowParams::affine(mu, s).unwrap()
}

pub fn two_piece(rng: &mut ChaCha8Rng, n: usize) -> FlowParams {
    let mu = offsets(rng, n);
    let (mut l, mut r) = (Vec::new(), Vec::new());
    for _ in 0..n {
        let sign = if rng.random_bool(0.5) { 1.0 } else { -1.0 };
        l.push(sign * rng.random_range(0.3..2.0));
        r.push(sign * rng.random_range(0.3..2.0));
    }
    FlowParams::two_piece(mu, l, r).unwrap()
}

pub fn entity(variant: ScoreVariant, rng: &mut ChaCha8Rng, n: usize) -> FlowParams {
    match variant.entity_kind() {
        FlowKind::Affine => affine(rng, n),
        FlowKind::TwoPiece => two_piece(rng, n),
    }
}

pub fn triple(variant: ScoreVariant, rng: &mut ChaCha8Rng, n: usize) -> [FlowParams; 3] {
    let h = entity(variant, rng, n);
    let r = affine(rng, n);
    let t = entity(variant, rng, n);
    [h, r, t]
}

/// A model whose every offset and slope is random.
pub fn random_model(variant: ScoreVariant, dim: usize, ne: usize, nr: usize, seed: u64) -> ModelState {
    let mut m = ModelState::init(variant, variant.oracle_base(), dim, ne, nr, seed).unwrap();
    let mut g = rng(seed ^ 0x5eed);
    for i in 0..ne {
        m.entities.set(i, &entity(variant, &mut g, dim)).unwrap();
    }
    for i in 0..nr {
        m.relations.set(i, &affine(&mut g, dim)).unwrap();
    }
    m
}

/// Random named triples over `ne` entities and `nr` relations, spread over
/// the three splits, then augmented with reciprocals.
pub fn random_kg(seed: u64, ne: usize, nr: usize, n: usize) -> KgDataset {
    let mut g = rng(seed);
    let mut named: [Vec<(String, String, String)>; 3] = Default::default();
    for _ in 0..n {
        let h = format!("e{}", g.random_range(0..ne));
        let r = format!("r{}", g.random_range(0..nr));
        let t = format!("e{}", g.random_range(0..ne));
        let split = match g.random_range(0..10) {
            0 => 1,
            1 => 2,
            _ => 0,
        };
        named[split].push((h, r, t));
    }
    let mut ds = KgDataset::new();
    for (split, list) in Split::ALL.into_iter().zip(&named) {
        ds.add_named(split, list.iter().map(|(h, r, t)| (h.as_str(), r.as_str(), t.as_str())))
            .unwrap();
    }
    ds.add_reciprocals().unwrap()
}

pub fn rel_close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * (1.0 + a.abs().max(b.abs()))
}

pub fn perturbed(f: &FlowParams, block: usize, i: usize, d: f64) -> FlowParams {
    let mut g = f.clone();
    g.blocks_mut()[block][i] += d;
    g
}

/// Distance to the nearest kink of the score: a slope product or a tail
/// slope crossing zero.
pub fn kink_distance(h: &FlowParams, r: &FlowParams, t: &FlowParams) -> f64 {
    let (hv, rv, tv) = (h.view(), r.view(), t.view());
    let mut d = f64::INFINITY;
    for i in 0..hv.dim() {
        for s in [hv.sigma_left[i], hv.sigma_right[i]] {
            d = d.min((rv.sigma_left[i] * s).abs());
        }
        d = d.min(tv.sigma_left[i].abs()).min(tv.sigma_right[i].abs());
    }
    d
}

/// Largest relative gap, `|analytic - fd| / max(|fd|, 1)`, over every
/// parameter of `(h, r, t)`, with central differences of step `step`.
pub fn score_fd_gap(variant: ScoreVariant, x: &[FlowParams; 3], step: f64) -> f64 {
    use nfe_core::scoring::{grad, score};
    let g = grad(variant, &x[0], &x[1], &x[2]).unwrap();
    let analytic = [&g.d_h, &g.d_r, &g.d_t];
    let mut worst = 0.0f64;
    for which in 0..3 {
        let blocks = x[which].blocks().len();
        for b in 0..blocks {
            for i in 0..x[which].dim() {
                let eval = |d: f64| {
                    let mut y = x.clone();
                    y[which] = perturbed(&x[which], b, i, d);
                    score(variant, &y[0], &y[1], &y[2]).unwrap()
                };
                let fd = (eval(step) - eval(-step)) / (2.0 * step);
                let a = analytic[which].blocks()[b][i];
                worst = worst.max((a - fd).abs() / fd.abs().max(1.0));
            }
        }
    }
    worst
}

/// Largest relative gap between the analytic gradient of one triple's loss
/// and central differences over every model parameter.
pub fn loss_fd_gap(
    model: &ModelState,
    triple: &nfe_core::kgstore::TripleId,
    margin: f64,
    cands: &[usize],
    step: f64,
) -> f64 {
    use nfe_core::training::{triple_loss, ModelGrads};
    let (_, g) = triple_loss(model, triple, margin, cands).unwrap();
    let mut dense = ModelGrads::zeros(model);
    g.accumulate(&mut dense, 1.0);
    let mut worst = 0.0f64;
    for table in 0..2 {
        let blocks = if table == 0 { model.entities.blocks().len() } else { model.relations.blocks().len() };
        for b in 0..blocks {
            let len = if table == 0 { model.entities.blocks()[b].len() } else { model.relations.blocks()[b].len() };
            for i in 0..len {
                let eval = |d: f64| {
                    let mut m = model.clone();
                    let t = if table == 0 { &mut m.entities } else { &mut m.relations };
                    t.blocks_mut()[b][i] += d;
                    triple_loss(&m, triple, margin, cands).unwrap().0
                };
                let fd = (eval(step) - eval(-step)) / (2.0 * step);
                let a = if table == 0 { dense.entities.blocks()[b][i] } else { dense.relations.blocks()[b][i] };
                worst = worst.max((a - fd).abs() / fd.abs().max(1.0));
            }
        }
    }
    worst
}
