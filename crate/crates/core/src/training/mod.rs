//! Margin loss over candidate tails, Adam with per-epoch exponential decay,
//! the epoch loop with best-validation selection, and checkpoints.

mod adam;
mod checkpoint;
mod loss;
mod model;

use std::fmt;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub use adam::{adam_update, AdamState, BETA1, BETA2, EPSILON};
pub use checkpoint::{decode, encode, load_checkpoint, save_checkpoint, Checkpoint, FORMAT_VERSION};
pub use loss::{
    candidate_loss, candidates, sigmoid, softplus, triple_loss, ModelGrads, NegativeMode, TripleGrad,
};
pub use model::{FlowTable, ModelState};

use crate::error::{Error, Result};
use crate::evaluation::evaluate;
use crate::kgstore::{KgDataset, Split, TripleId};
use loss::{batch_gradient, BatchCandidates};

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub learning_rate: f64,
    /// Multiplier applied to the learning rate once per epoch.
    pub decay_rate: f64,
    pub batch_size: usize,
    pub margin: f64,
    pub epochs: u64,
    pub seed: u64,
    pub negative_mode: NegativeMode,
    /// Validation MRR is computed every this many epochs (0 disables it).
    pub validate_every: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            learning_rate: 0.005,
            decay_rate: 0.9,
            batch_size: 128,
            margin: 1.0,
            epochs: 500,
            seed: 0,
            negative_mode: NegativeMode::AllEntities,
            validate_every: 10,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let fail = |m: String| Err(Error::Config(m));
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return fail(format!("learning rate must be > 0, got {}", self.learning_rate));
        }
        if !(self.decay_rate > 0.0 && self.decay_rate <= 1.0) {
            return fail(format!("decay rate must be in (0, 1], got {}", self.decay_rate));
        }
        if !(self.margin >= 0.0 && self.margin.is_finite()) {
            return fail(format!("margin must be >= 0, got {}", self.margin));
        }
        if self.batch_size == 0 {
            return fail("batch size must be positive".into());
        }
        Ok(())
    }

    /// Learning rate during the 0-based epoch `epoch`.
    pub fn rate_at(&self, epoch: u64) -> f64 {
        self.learning_rate * self.decay_rate.powf(epoch as f64)
    }
}

impl fmt::Display for TrainConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "lr={} decay={} batch={} margin={} epochs={} seed={} negatives={} validate_every={}",
            self.learning_rate,
            self.decay_rate,
            self.batch_size,
            self.margin,
            self.epochs,
            self.seed,
            self.negative_mode,
            self.validate_every
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpochRecord {
    /// 1-based count of completed epochs.
    pub epoch: u64,
    /// Mean per-triple loss over the epoch.
    pub loss: f64,
    pub valid_mrr: Option<f64>,
}

/// What [`train`] hands back.
#[derive(Debug, Clone)]
pub struct TrainOutcome {
    /// State with the best validation MRR, or the final state if validation
    /// never ran.
    pub best: Checkpoint,
    pub best_epoch: u64,
    pub best_valid_mrr: Option<f64>,
    pub last: Checkpoint,
    pub log: Vec<EpochRecord>,
}

/// splitmix64 finaliser over a few words.
fn mix(words: &[u64]) -> u64 {
    let mut h = 0x9E37_79B9_7F4A_7C15u64;
    for &w in words {
        let mut z = h ^ w.wrapping_add(0x9E37_79B9_7F4A_7C15);
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        h = z ^ (z >> 31);
    }
    h
}

/// Resumable training loop. Every random choice is derived from the seed and
/// the epoch number, so stopping after any epoch and resuming from a
/// checkpoint reproduces the uninterrupted run.
pub struct Trainer<'a> {
    ds: &'a KgDataset,
    cfg: TrainConfig,
    state: Checkpoint,
    best: Option<(f64, Checkpoint)>,
    log: Vec<EpochRecord>,
}

impl<'a> Trainer<'a> {
    pub fn new(ds: &'a KgDataset, cfg: TrainConfig, state: Checkpoint) -> Result<Self> {
        cfg.validate()?;
        if !ds.is_augmented() {
            return Err(Error::Config("training needs reciprocal relations; call add_reciprocals".into()));
        }
        state.check_dataset(ds)?;
        Ok(Trainer {
            ds,
            cfg,
            state,
            best: None,
            log: Vec::new(),
        })
    }

    pub fn config(&self) -> &TrainConfig {
        &self.cfg
    }

    pub fn state(&self) -> &Checkpoint {
        &self.state
    }

    pub fn log(&self) -> &[EpochRecord] {
        &self.log
    }

    /// Mean loss over the train split at the current parameters, without
    /// updating anything. Uses epoch-0 negatives in sampled mode.
    pub fn current_loss(&self) -> Result<f64> {
        let train = self.ds.split(Split::Train);
        if train.is_empty() {
            return Ok(0.0);
        }
        let mut total = 0.0;
        for (b, chunk) in train.chunks(self.cfg.batch_size).enumerate() {
            let c = self.batch_candidates(chunk, 0, b * self.cfg.batch_size);
            total += batch_gradient(&self.state.model, chunk, self.cfg.margin, &c)?.0;
        }
        Ok(total / train.len() as f64)
    }

    fn batch_candidates(&self, batch: &[TripleId], epoch: u64, offset: usize) -> BatchCandidates {
        match self.cfg.negative_mode {
            NegativeMode::AllEntities => BatchCandidates::All,
            mode => BatchCandidates::Lists(
                batch
                    .iter()
                    .enumerate()
                    .map(|(i, t)| {
                        let seed = mix(&[self.cfg.seed, epoch, (offset + i) as u64]);
                        candidates(mode, self.ds.num_entities(), t.tail, seed)
                    })
                    .collect(),
            ),
        }
    }

    pub fn run_epoch(&mut self) -> Result<EpochRecord> {
        let epoch = self.state.epochs_done;
        let train = self.ds.split(Split::Train);
        let mut order: Vec<usize> = (0..train.len()).collect();
        let mut rng = ChaCha8Rng::seed_from_u64(self.cfg.seed);
        rng.set_stream(epoch);
        order.shuffle(&mut rng);
        let lr = self.cfg.rate_at(epoch);
        let mut total = 0.0;
        let mut batch = Vec::with_capacity(self.cfg.batch_size);
        for (b, idx) in order.chunks(self.cfg.batch_size).enumerate() {
            batch.clear();
            batch.extend(idx.iter().map(|&i| train[i]));
            let c = self.batch_candidates(&batch, epoch, b * self.cfg.batch_size);
            let (loss, mut grads) = batch_gradient(&self.state.model, &batch, self.cfg.margin, &c)?;
            if self.state.model.variant.freezes_relation_sigma() {
                grads.relations.sigma_mut().iter_mut().for_each(|g| *g = 0.0);
            }
            self.state.adam.step(&mut self.state.model, &grads, lr)?;
            total += loss;
        }
        self.state.epochs_done += 1;
        let done = self.state.epochs_done;
        let loss = if train.is_empty() { 0.0 } else { total / train.len() as f64 };
        if !loss.is_finite() {
            log::warn!("epoch {done}: loss is {loss}");
        }
        let due = self.cfg.validate_every > 0
            && (done % self.cfg.validate_every == 0 || done == self.cfg.epochs);
        let valid_mrr = if due && !self.ds.split(Split::Valid).is_empty() {
            let mrr = evaluate(&self.state.model, self.ds, Split::Valid)?.mrr;
            if self.best.as_ref().is_none_or(|(b, _)| mrr > *b) {
                self.best = Some((mrr, self.state.clone()));
            }
            Some(mrr)
        } else {
            None
        };
        let rec = EpochRecord {
            epoch: done,
            loss,
            valid_mrr,
        };
        log::info!(
            "epoch {done} loss={loss:.6} lr={lr:.3e}{}",
            valid_mrr.map(|m| format!(" valid_mrr={m:.4}")).unwrap_or_default()
        );
        self.log.push(rec);
        Ok(rec)
    }

    /// Runs until `cfg.epochs` epochs are done in total.
    pub fn run(&mut self) -> Result<()> {
        while self.state.epochs_done < self.cfg.epochs {
            self.run_epoch()?;
        }
        Ok(())
    }

    pub fn finish(self) -> TrainOutcome {
        let last = self.state;
        let (best_valid_mrr, best) = match self.best {
            Some((mrr, c)) => (Some(mrr), c),
            None => (None, last.clone()),
        };
        TrainOutcome {
            best_epoch: best.epochs_done,
            best,
            best_valid_mrr,
            last,
            log: self.log,
        }
    }
}

/// Trains `model` from a fresh optimizer state for `cfg.epochs` epochs.
pub fn train(model: ModelState, ds: &KgDataset, cfg: &TrainConfig) -> Result<TrainOutcome> {
    let mut t = Trainer::new(ds, cfg.clone(), Checkpoint::fresh(model))?;
    t.run()?;
    Ok(t.finish())
}
