use crate::error::{Error, Result};

use super::loss::ModelGrads;
use super::model::{FlowTable, ModelState};

pub const BETA1: f64 = 0.9;
pub const BETA2: f64 = 0.999;
pub const EPSILON: f64 = 1e-8;

/// One Adam update of `params` in place. `step` is the 1-based update count
/// used for bias correction.
pub fn adam_update(params: &mut [f64], grads: &[f64], m: &mut [f64], v: &mut [f64], step: u64, lr: f64) {
    let c1 = 1.0 - BETA1.powf(step as f64);
    let c2 = 1.0 - BETA2.powf(step as f64);
    for i in 0..params.len() {
        let g = grads[i];
        m[i] = BETA1 * m[i] + (1.0 - BETA1) * g;
        v[i] = BETA2 * v[i] + (1.0 - BETA2) * g * g;
        let m_hat = m[i] / c1;
        let v_hat = v[i] / c2;
        params[i] -= lr * m_hat / (v_hat.sqrt() + EPSILON);
    }
}

/// First and second moments for every model parameter.
#[derive(Debug, Clone, PartialEq)]
pub struct AdamState {
    pub step: u64,
    pub m: ModelGrads,
    pub v: ModelGrads,
}

impl AdamState {
    pub fn new(model: &ModelState) -> Self {
        AdamState {
            step: 0,
            m: ModelGrads::zeros(model),
            v: ModelGrads::zeros(model),
        }
    }

    /// Applies one step with rate `lr` (already decayed by the caller).
    pub fn step(&mut self, model: &mut ModelState, grads: &ModelGrads, lr: f64) -> Result<()> {
        let shapes_ok = |a: &FlowTable, g: &FlowTable, m: &FlowTable, v: &FlowTable| {
            a.same_shape(g) && a.same_shape(m) && a.same_shape(v)
        };
        if !shapes_ok(&model.entities, &grads.entities, &self.m.entities, &self.v.entities)
            || !shapes_ok(&model.relations, &grads.relations, &self.m.relations, &self.v.relations)
        {
            return Err(Error::ShapeMismatch(
                "gradient or optimizer state does not match the model".into(),
            ));
        }
        self.step += 1;
        let pairs = [
            (&mut model.entities, &grads.entities, &mut self.m.entities, &mut self.v.entities),
            (&mut model.relations, &grads.relations, &mut self.m.relations, &mut self.v.relations),
        ];
        for (p, g, m, v) in pairs {
            let gb = g.blocks();
            for (((pb, gb), mb), vb) in p
                .blocks_mut()
                .into_iter()
                .zip(gb)
                .zip(m.blocks_mut())
                .zip(v.blocks_mut())
            {
                adam_update(pb, gb, mb, vb, self.step, lr);
            }
        }
        Ok(())
    }
}
