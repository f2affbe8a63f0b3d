use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::flows::{FlowKind, FlowParams};
use crate::kgstore::TripleId;
use crate::scoring::{chain_composite, with_kernel, Composite, DimKernel};

use super::model::{FlowTable, ModelState};

/// Which tails enter each triple's loss.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NegativeMode {
    /// Every entity is a candidate tail.
    AllEntities,
    /// The true tail plus `count` distinct random entities.
    Sampled { count: usize },
}

impl NegativeMode {
    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "all" => Ok(NegativeMode::AllEntities),
            _ => match s.strip_prefix("sampled:").map(str::parse) {
                Some(Ok(count)) => Ok(NegativeMode::Sampled { count }),
                _ => Err(Error::Config(format!(
                    "negatives must be 'all' or 'sampled:N', got '{s}'"
                ))),
            },
        }
    }
}

impl std::fmt::Display for NegativeMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            NegativeMode::AllEntities => f.write_str("all"),
            NegativeMode::Sampled { count } => write!(f, "sampled:{count}"),
        }
    }
}

/// `ln(1 + e^x)` without overflow.
pub fn softplus(x: f64) -> f64 {
    x.max(0.0) + (-x.abs()).exp().ln_1p()
}

pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// Loss of one candidate tail with score `s` and its derivative in `s`:
/// `softplus(-y (margin + s))` with `y = +1` for the true tail, `-1` otherwise.
/// Scores are negated distances, so `margin + s` is the margin minus the
/// distance.
pub fn candidate_loss(s: f64, margin: f64, positive: bool) -> (f64, f64) {
    let y = if positive { 1.0 } else { -1.0 };
    let z = -y * (margin + s);
    (softplus(z), -y * sigmoid(z))
}

/// Candidate tails for one triple. Sampled mode draws from `seed`.
pub fn candidates(mode: NegativeMode, num_entities: usize, tail: usize, seed: u64) -> Vec<usize> {
    match mode {
        NegativeMode::Sampled { count } if count + 1 < num_entities => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut out = Vec::with_capacity(count + 1);
            out.push(tail);
            // draw from the entities other than `tail` by skipping over it
            for i in sample(&mut rng, num_entities - 1, count).into_iter() {
                out.push(if i >= tail { i + 1 } else { i });
            }
            out
        }
        _ => (0..num_entities).collect(),
    }
}

/// Gradient of one triple's loss. Tail entries are one per candidate and
/// may include the head entity.
#[derive(Debug, Clone, PartialEq)]
pub struct TripleGrad {
    pub head: usize,
    pub rel: usize,
    pub d_head: FlowParams,
    pub d_rel: FlowParams,
    pub d_tails: Vec<(usize, FlowParams)>,
}

/// Dense gradient over a whole model.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelGrads {
    pub entities: FlowTable,
    pub relations: FlowTable,
}

impl ModelGrads {
    pub fn zeros(model: &ModelState) -> Self {
        ModelGrads {
            entities: model.entities.zeros_like(),
            relations: model.relations.zeros_like(),
        }
    }
}

impl TripleGrad {
    /// Adds `scale *` this gradient into a dense model gradient.
    pub fn accumulate(&self, into: &mut ModelGrads, scale: f64) {
        let add = |table: &mut FlowTable, i: usize, p: &FlowParams| {
            let (mu, sl, sr) = table.row_mut(i);
            let v = p.view();
            for d in 0..mu.len() {
                mu[d] += scale * v.mu[d];
                sl[d] += scale * v.sigma_left[d];
            }
            if let Some(sr) = sr {
                for d in 0..sr.len() {
                    sr[d] += scale * v.sigma_right[d];
                }
            }
        };
        add(&mut into.entities, self.head, &self.d_head);
        add(&mut into.relations, self.rel, &self.d_rel);
        for (e, g) in &self.d_tails {
            add(&mut into.entities, *e, g);
        }
    }
}

/// Head/relation side of one triple's gradient, in composite-free form.
struct HeadWork {
    loss: f64,
    composite: Composite,
    /// `dloss/dscore` per candidate, already scaled.
    weights: Vec<f64>,
    h_mu: Vec<f64>,
    h_s1: Vec<f64>,
    h_s2: Vec<f64>,
    r_mu: Vec<f64>,
    r_s: Vec<f64>,
}

fn head_work<K: DimKernel>(
    k: &K,
    model: &ModelState,
    t: &TripleId,
    cands: &[usize],
    margin: f64,
    scale: f64,
) -> HeadWork {
    let n = model.dim();
    let hv = model.entities.row(t.head);
    let rv = model.relations.row(t.rel);
    let c = Composite::new(&hv, &rv);
    let (mut dm, mut ds1, mut ds2) = (vec![0.0; n], vec![0.0; n], vec![0.0; n]);
    let (mut gm, mut g1, mut g2) = (vec![0.0; n], vec![0.0; n], vec![0.0; n]);
    let mut weights = Vec::with_capacity(cands.len());
    let mut loss = 0.0;
    for &e in cands {
        let tv = model.entities.row(e);
        let mut s = 0.0;
        for i in 0..n {
            let g = k.grad(c.m[i], c.s1[i], c.s2[i], tv.mu[i], tv.sigma_left[i], tv.sigma_right[i]);
            s += g.value;
            gm[i] = g.dm;
            g1[i] = g.ds1;
            g2[i] = g.ds2;
        }
        let (l, dl) = candidate_loss(s, margin, e == t.tail);
        loss += l;
        let w = dl * scale;
        weights.push(w);
        for i in 0..n {
            dm[i] += w * gm[i];
            ds1[i] += w * g1[i];
            ds2[i] += w * g2[i];
        }
    }
    let (mut h_mu, mut h_s1, mut h_s2) = (vec![0.0; n], vec![0.0; n], vec![0.0; n]);
    let (mut r_mu, mut r_s) = (vec![0.0; n], vec![0.0; n]);
    chain_composite(
        &hv,
        &rv,
        &dm,
        &ds1,
        &ds2,
        [&mut h_mu, &mut h_s1, &mut h_s2],
        [&mut r_mu, &mut r_s],
        1.0,
    );
    HeadWork {
        loss,
        composite: c,
        weights,
        h_mu,
        h_s1,
        h_s2,
        r_mu,
        r_s,
    }
}

/// `w * dscore/dtail` for entity `e` against composite `c`, added into `acc`
/// laid out as `[mu | sigma_left | sigma_right]`.
#[inline]
fn add_tail_grad<K: DimKernel>(k: &K, c: &Composite, model: &ModelState, e: usize, w: f64, acc: &mut [f64]) {
    let n = model.dim();
    let tv = model.entities.row(e);
    let (a_mu, rest) = acc.split_at_mut(n);
    let (a_s1, a_s2) = rest.split_at_mut(n);
    for i in 0..n {
        let g = k.grad(c.m[i], c.s1[i], c.s2[i], tv.mu[i], tv.sigma_left[i], tv.sigma_right[i]);
        a_mu[i] += w * g.dtm;
        a_s1[i] += w * g.dt1;
        if !a_s2.is_empty() {
            a_s2[i] += w * g.dt2;
        }
    }
}

fn params_from(kind: FlowKind, n: usize, flat: &[f64]) -> FlowParams {
    match kind {
        FlowKind::Affine => FlowParams::Affine {
            mu: flat[..n].to_vec(),
            sigma: flat[n..2 * n].to_vec(),
        },
        FlowKind::TwoPiece => FlowParams::TwoPiece {
            mu: flat[..n].to_vec(),
            sigma_left: flat[n..2 * n].to_vec(),
            sigma_right: flat[2 * n..3 * n].to_vec(),
        },
    }
}

fn check_candidates(model: &ModelState, t: &TripleId, cands: &[usize]) -> Result<()> {
    model.check_triple(t)?;
    if let Some(&bad) = cands.iter().find(|&&e| e >= model.num_entities()) {
        return Err(Error::IndexOutOfRange {
            what: "entity",
            index: bad,
            size: model.num_entities(),
        });
    }
    Ok(())
}

/// Loss of `(h, r, t)` summed over the candidate tails, and its gradient.
pub fn triple_loss(
    model: &ModelState,
    triple: &TripleId,
    margin: f64,
    cands: &[usize],
) -> Result<(f64, TripleGrad)> {
    check_candidates(model, triple, cands)?;
    let n = model.dim();
    let kind = model.entities.kind();
    let width = match kind {
        FlowKind::Affine => 2 * n,
        FlowKind::TwoPiece => 3 * n,
    };
    with_kernel!(model.variant, |k| {
        let hw = head_work(k, model, triple, cands, margin, 1.0);
        let d_tails = cands
            .iter()
            .zip(&hw.weights)
            .map(|(&e, &w)| {
                let mut acc = vec![0.0; width];
                add_tail_grad(k, &hw.composite, model, e, w, &mut acc);
                (e, params_from(kind, n, &acc))
            })
            .collect();
        let mut head = hw.h_mu.clone();
        head.extend_from_slice(&hw.h_s1);
        head.extend_from_slice(&hw.h_s2);
        Ok((
            hw.loss,
            TripleGrad {
                head: triple.head,
                rel: triple.rel,
                d_head: params_from(kind, n, &head),
                d_rel: FlowParams::Affine {
                    mu: hw.r_mu,
                    sigma: hw.r_s,
                },
                d_tails,
            },
        ))
    })
}

/// Per-triple candidate lists for a batch; `None` means every entity.
pub(crate) enum BatchCandidates {
    All,
    Lists(Vec<Vec<usize>>),
}

/// Summed loss over `triples` and the gradient of the mean loss.
///
/// Work is split per triple (head/relation side) and per entity (tail side),
/// and every sum runs in triple order, so the result does not depend on the
/// number of worker threads.
pub(crate) fn batch_gradient(
    model: &ModelState,
    triples: &[TripleId],
    margin: f64,
    cands: &BatchCandidates,
) -> Result<(f64, ModelGrads)> {
    let ne = model.num_entities();
    let all: Vec<usize>;
    let lists: Vec<&[usize]> = match cands {
        BatchCandidates::All => {
            all = (0..ne).collect();
            vec![&all[..]; triples.len()]
        }
        BatchCandidates::Lists(l) => l.iter().map(Vec::as_slice).collect(),
    };
    for (t, c) in triples.iter().zip(&lists) {
        check_candidates(model, t, c)?;
    }
    let mut grads = ModelGrads::zeros(model);
    if triples.is_empty() {
        return Ok((0.0, grads));
    }
    let n = model.dim();
    let kind = model.entities.kind();
    let scale = 1.0 / triples.len() as f64;
    let loss = with_kernel!(model.variant, |k| {
        let work: Vec<HeadWork> = triples
            .par_iter()
            .zip(lists.par_iter())
            .map(|(t, c)| head_work(k, model, t, c, margin, scale))
            .collect();

        // entity -> [(triple position, weight)] in triple order
        let buckets: Option<Vec<Vec<(usize, f64)>>> = match cands {
            BatchCandidates::All => None,
            BatchCandidates::Lists(_) => {
                let mut b = vec![Vec::new(); ne];
                for (j, (c, w)) in lists.iter().zip(&work).enumerate() {
                    for (&e, &wt) in c.iter().zip(&w.weights) {
                        b[e].push((j, wt));
                    }
                }
                Some(b)
            }
        };
        let width = if kind == FlowKind::TwoPiece { 3 * n } else { 2 * n };
        let tails: Vec<Option<Vec<f64>>> = (0..ne)
            .into_par_iter()
            .map(|e| {
                let mut acc = vec![0.0; width];
                match &buckets {
                    None => {
                        for w in &work {
                            add_tail_grad(k, &w.composite, model, e, w.weights[e], &mut acc);
                        }
                    }
                    Some(b) => {
                        if b[e].is_empty() {
                            return None;
                        }
                        for &(j, wt) in &b[e] {
                            add_tail_grad(k, &work[j].composite, model, e, wt, &mut acc);
                        }
                    }
                }
                Some(acc)
            })
            .collect();

        for (e, acc) in tails.into_iter().enumerate() {
            let Some(acc) = acc else { continue };
            let (mu, sl, sr) = grads.entities.row_mut(e);
            mu.copy_from_slice(&acc[..n]);
            sl.copy_from_slice(&acc[n..2 * n]);
            if let Some(sr) = sr {
                sr.copy_from_slice(&acc[2 * n..]);
            }
        }
        let mut loss = 0.0;
        for (t, w) in triples.iter().zip(&work) {
            loss += w.loss;
            let (mu, sl, sr) = grads.entities.row_mut(t.head);
            for i in 0..n {
                mu[i] += w.h_mu[i];
                sl[i] += w.h_s1[i];
            }
            if let Some(sr) = sr {
                for i in 0..n {
                    sr[i] += w.h_s2[i];
                }
            }
            let (mu, sl, _) = grads.relations.row_mut(t.rel);
            for i in 0..n {
                mu[i] += w.r_mu[i];
                sl[i] += w.r_s[i];
            }
        }
        loss
    });
    Ok((loss, grads))
}
