use std::fs;
use std::path::Path;

use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::flows::BaseDist;
use crate::kgstore::KgDataset;
use crate::scoring::ScoreVariant;

use super::adam::AdamState;
use super::loss::ModelGrads;
use super::model::{FlowTable, ModelState};

const MAGIC: &[u8; 4] = b"NFE1";
pub const FORMAT_VERSION: u32 = 1;
const CHECKSUM_LEN: usize = 8;

/// A model together with the optimizer state needed to resume training.
#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    pub model: ModelState,
    pub adam: AdamState,
    pub epochs_done: u64,
}

impl Checkpoint {
    pub fn fresh(model: ModelState) -> Self {
        let adam = AdamState::new(&model);
        Checkpoint {
            model,
            adam,
            epochs_done: 0,
        }
    }

    /// Rejects a checkpoint whose vocabulary sizes differ from `ds`.
    pub fn check_dataset(&self, ds: &KgDataset) -> Result<()> {
        let (e, r) = (self.model.num_entities(), self.model.num_relations());
        if e != ds.num_entities() || r != ds.num_relations() {
            return Err(Error::FormatVersionMismatch(format!(
                "checkpoint has {e} entities / {r} relations, dataset has {} / {}",
                ds.num_entities(),
                ds.num_relations()
            )));
        }
        Ok(())
    }
}

fn base_tag(b: BaseDist) -> (u8, f64) {
    match b {
        BaseDist::Uniform => (1, 0.0),
        BaseDist::Normal => (2, 0.0),
        BaseDist::DiracScaled { k } => (3, k),
    }
}

fn base_from_tag(tag: u8, k: f64) -> Option<BaseDist> {
    match tag {
        1 => Some(BaseDist::Uniform),
        2 => Some(BaseDist::Normal),
        3 => Some(BaseDist::DiracScaled { k }),
        _ => None,
    }
}

fn tables(c: &Checkpoint) -> [&FlowTable; 6] {
    [
        &c.model.entities,
        &c.model.relations,
        &c.adam.m.entities,
        &c.adam.m.relations,
        &c.adam.v.entities,
        &c.adam.v.relations,
    ]
}

pub fn encode(c: &Checkpoint) -> Vec<u8> {
    let mut buf = Vec::new();
    buf.extend_from_slice(MAGIC);
    buf.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
    buf.push(c.model.variant.tag());
    buf.extend_from_slice(&c.model.variant.inv_k_sq().to_le_bytes());
    let (bt, k) = base_tag(c.model.base);
    buf.push(bt);
    buf.extend_from_slice(&k.to_le_bytes());
    for x in [
        c.model.dim(),
        c.model.num_entities(),
        c.model.num_relations(),
    ] {
        buf.extend_from_slice(&(x as u64).to_le_bytes());
    }
    buf.extend_from_slice(&c.epochs_done.to_le_bytes());
    buf.extend_from_slice(&c.adam.step.to_le_bytes());
    for t in tables(c) {
        for block in t.blocks() {
            for x in block {
                buf.extend_from_slice(&x.to_le_bytes());
            }
        }
    }
    let digest = Sha256::digest(&buf);
    buf.extend_from_slice(&digest[..CHECKSUM_LEN]);
    buf
}

struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        if self.pos + n > self.buf.len() {
            return Err(Error::FormatVersionMismatch(
                "checkpoint body shorter than its header declares".into(),
            ));
        }
        let s = &self.buf[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }

    fn u8(&mut self) -> Result<u8> {
        Ok(self.take(1)?[0])
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    fn fill(&mut self, t: &mut FlowTable) -> Result<()> {
        for block in t.blocks_mut() {
            for x in block.iter_mut() {
                *x = self.f64()?;
            }
        }
        Ok(())
    }
}

pub fn decode(bytes: &[u8]) -> Result<Checkpoint> {
    if bytes.len() < MAGIC.len() + 4 + CHECKSUM_LEN || &bytes[..4] != MAGIC {
        return Err(Error::FormatVersionMismatch("not a checkpoint file".into()));
    }
    let (body, sum) = bytes.split_at(bytes.len() - CHECKSUM_LEN);
    if Sha256::digest(body)[..CHECKSUM_LEN] != *sum {
        return Err(Error::CorruptChecksum);
    }
    let mut r = Reader { buf: body, pos: 4 };
    let version = r.u32()?;
    if version != FORMAT_VERSION {
        return Err(Error::FormatVersionMismatch(format!(
            "format version {version}, expected {FORMAT_VERSION}"
        )));
    }
    let vtag = r.u8()?;
    let inv_k_sq = r.f64()?;
    let variant = ScoreVariant::from_tag(vtag, inv_k_sq)
        .ok_or_else(|| Error::FormatVersionMismatch(format!("unknown variant tag {vtag}")))?;
    let btag = r.u8()?;
    let k = r.f64()?;
    let base = base_from_tag(btag, k)
        .ok_or_else(|| Error::FormatVersionMismatch(format!("unknown base tag {btag}")))?;
    let dim = r.u64()? as usize;
    let ne = r.u64()? as usize;
    let nr = r.u64()? as usize;
    let epochs_done = r.u64()?;
    let step = r.u64()?;
    // size check before allocating anything the header asks for
    let kind_width = if variant.entity_kind() == crate::flows::FlowKind::TwoPiece { 3 } else { 2 };
    let want = (ne as u128 * kind_width + nr as u128 * 2) * dim as u128 * 3 * 8;
    if want != (body.len() - r.pos) as u128 {
        return Err(Error::FormatVersionMismatch(format!(
            "header declares dim={dim} entities={ne} relations={nr}, body size disagrees"
        )));
    }
    let model = ModelState::identity(variant, base, dim, ne, nr)
        .map_err(|e| Error::FormatVersionMismatch(format!("invalid header: {e}")))?;
    let mut c = Checkpoint {
        adam: AdamState {
            step,
            m: ModelGrads::zeros(&model),
            v: ModelGrads::zeros(&model),
        },
        model,
        epochs_done,
    };
    r.fill(&mut c.model.entities)?;
    r.fill(&mut c.model.relations)?;
    r.fill(&mut c.adam.m.entities)?;
    r.fill(&mut c.adam.m.relations)?;
    r.fill(&mut c.adam.v.entities)?;
    r.fill(&mut c.adam.v.relations)?;
    Ok(c)
}

pub fn save_checkpoint(path: &Path, c: &Checkpoint) -> Result<()> {
    let tmp = path.with_extension("tmp");
    fs::write(&tmp, encode(c)).map_err(|e| Error::io(format!("writing {}", tmp.display()), e))?;
    fs::rename(&tmp, path).map_err(|e| Error::io(format!("renaming to {}", path.display()), e))
}

pub fn load_checkpoint(path: &Path) -> Result<Checkpoint> {
    let bytes = fs::read(path).map_err(|e| Error::io(format!("reading {}", path.display()), e))?;
    decode(&bytes)
}
