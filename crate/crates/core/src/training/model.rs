use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::flows::{BaseDist, FlowKind, FlowParams, FlowView};
use crate::kgstore::TripleId;
use crate::scoring::{with_kernel, Composite, ScoreVariant};

/// Flow parameters for a whole vocabulary, stored as contiguous
/// `len * dim` blocks (`mu`, `sigma_left`, and `sigma_right` for two-piece
/// flows).
#[derive(Debug, Clone, PartialEq)]
pub struct FlowTable {
    kind: FlowKind,
    dim: usize,
    len: usize,
    mu: Vec<f64>,
    sigma_left: Vec<f64>,
    sigma_right: Vec<f64>,
}

impl FlowTable {
    fn filled(kind: FlowKind, len: usize, dim: usize, sigma: f64) -> Self {
        let n = len * dim;
        FlowTable {
            kind,
            dim,
            len,
            mu: vec![0.0; n],
            sigma_left: vec![sigma; n],
            sigma_right: match kind {
                FlowKind::Affine => Vec::new(),
                FlowKind::TwoPiece => vec![sigma; n],
            },
        }
    }

    /// Every row the identity flow.
    pub fn identity(kind: FlowKind, len: usize, dim: usize) -> Self {
        Self::filled(kind, len, dim, 1.0)
    }

    pub fn zeros(kind: FlowKind, len: usize, dim: usize) -> Self {
        Self::filled(kind, len, dim, 0.0)
    }

    pub fn zeros_like(&self) -> Self {
        Self::zeros(self.kind, self.len, self.dim)
    }

    pub fn kind(&self) -> FlowKind {
        self.kind
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn row(&self, i: usize) -> FlowView<'_> {
        let r = i * self.dim..(i + 1) * self.dim;
        let sigma_left = &self.sigma_left[r.clone()];
        FlowView {
            kind: self.kind,
            mu: &self.mu[r.clone()],
            sigma_left,
            sigma_right: match self.kind {
                FlowKind::Affine => sigma_left,
                FlowKind::TwoPiece => &self.sigma_right[r],
            },
        }
    }

    /// Mutable `(mu, sigma_left, sigma_right)` slices of one row; the last is
    /// `None` for affine tables.
    pub(crate) fn row_mut(&mut self, i: usize) -> (&mut [f64], &mut [f64], Option<&mut [f64]>) {
        let r = i * self.dim..(i + 1) * self.dim;
        let right = match self.kind {
            FlowKind::Affine => None,
            FlowKind::TwoPiece => Some(&mut self.sigma_right[r.clone()]),
        };
        (&mut self.mu[r.clone()], &mut self.sigma_left[r], right)
    }

    pub fn get(&self, i: usize) -> Result<FlowParams> {
        self.check_index(i)?;
        Ok(self.row(i).to_owned())
    }

    pub fn set(&mut self, i: usize, p: &FlowParams) -> Result<()> {
        self.check_index(i)?;
        if p.kind() != self.kind {
            return Err(Error::WrongFlowKind {
                expected: self.kind.name(),
                got: p.kind().name(),
            });
        }
        if p.dim() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                got: p.dim(),
            });
        }
        let v = p.view();
        let (mu, sl, sr) = self.row_mut(i);
        mu.copy_from_slice(v.mu);
        sl.copy_from_slice(v.sigma_left);
        if let Some(sr) = sr {
            sr.copy_from_slice(v.sigma_right);
        }
        Ok(())
    }

    fn check_index(&self, i: usize) -> Result<()> {
        if i >= self.len {
            return Err(Error::IndexOutOfRange {
                what: "flow table row",
                index: i,
                size: self.len,
            });
        }
        Ok(())
    }

    /// Parameter blocks in storage order.
    pub fn blocks(&self) -> Vec<&[f64]> {
        match self.kind {
            FlowKind::Affine => vec![&self.mu, &self.sigma_left],
            FlowKind::TwoPiece => vec![&self.mu, &self.sigma_left, &self.sigma_right],
        }
    }

    pub fn blocks_mut(&mut self) -> Vec<&mut [f64]> {
        match self.kind {
            FlowKind::Affine => vec![&mut self.mu, &mut self.sigma_left],
            FlowKind::TwoPiece => vec![&mut self.mu, &mut self.sigma_left, &mut self.sigma_right],
        }
    }

    pub(crate) fn mu_mut(&mut self) -> &mut [f64] {
        &mut self.mu
    }

    pub(crate) fn sigma_mut(&mut self) -> &mut [f64] {
        &mut self.sigma_left
    }

    pub fn num_params(&self) -> usize {
        self.blocks().iter().map(|b| b.len()).sum()
    }

    pub(crate) fn same_shape(&self, other: &FlowTable) -> bool {
        self.kind == other.kind && self.len == other.len && self.dim == other.dim
    }
}

/// Embeddings of every entity and relation (reciprocals included) for one
/// scoring variant.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelState {
    pub variant: ScoreVariant,
    pub base: BaseDist,
    pub entities: FlowTable,
    pub relations: FlowTable,
}

impl ModelState {
    /// All flows set to the identity.
    pub fn identity(
        variant: ScoreVariant,
        base: BaseDist,
        dim: usize,
        num_entities: usize,
        num_relations: usize,
    ) -> Result<Self> {
        variant.validate()?;
        base.validate()?;
        if !variant.supports_base(base) {
            return Err(Error::Config(format!(
                "{variant} is not defined over the {} base",
                base.name()
            )));
        }
        if dim == 0 {
            return Err(Error::domain("embedding dimension must be positive"));
        }
        Ok(ModelState {
            variant,
            base,
            entities: FlowTable::identity(variant.entity_kind(), num_entities, dim),
            relations: FlowTable::identity(FlowKind::Affine, num_relations, dim),
        })
    }

    /// Slopes start at 1; offsets are drawn uniformly from
    /// `[-0.5/sqrt(dim), 0.5/sqrt(dim)]`.
    pub fn init(
        variant: ScoreVariant,
        base: BaseDist,
        dim: usize,
        num_entities: usize,
        num_relations: usize,
        seed: u64,
    ) -> Result<Self> {
        let mut m = Self::identity(variant, base, dim, num_entities, num_relations)?;
        let bound = 0.5 / (dim as f64).sqrt();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for table in [&mut m.entities, &mut m.relations] {
            for x in table.mu_mut() {
                *x = rng.random_range(-bound..=bound);
            }
        }
        Ok(m)
    }

    pub fn dim(&self) -> usize {
        self.entities.dim()
    }

    pub fn num_entities(&self) -> usize {
        self.entities.len()
    }

    pub fn num_relations(&self) -> usize {
        self.relations.len()
    }

    pub fn entity(&self, i: usize) -> Result<FlowParams> {
        self.entities.get(i)
    }

    pub fn relation(&self, i: usize) -> Result<FlowParams> {
        self.relations.get(i)
    }

    pub(crate) fn check_triple(&self, t: &TripleId) -> Result<()> {
        let bad = |what, index, size| Error::IndexOutOfRange { what, index, size };
        let ne = self.num_entities();
        if t.head >= ne {
            return Err(bad("entity", t.head, ne));
        }
        if t.tail >= ne {
            return Err(bad("entity", t.tail, ne));
        }
        if t.rel >= self.num_relations() {
            return Err(bad("relation", t.rel, self.num_relations()));
        }
        Ok(())
    }

    pub fn score(&self, t: &TripleId) -> Result<f64> {
        self.check_triple(t)?;
        crate::scoring::score(
            self.variant,
            &self.entities.row(t.head).to_owned(),
            &self.relations.row(t.rel).to_owned(),
            &self.entities.row(t.tail).to_owned(),
        )
    }

    /// Scores of `(head, rel, e)` for every entity `e`, written into `out`.
    pub fn score_all_tails(&self, head: usize, rel: usize, out: &mut [f64]) -> Result<()> {
        self.check_triple(&TripleId::new(head, rel, head))?;
        if out.len() != self.num_entities() {
            return Err(Error::ShapeMismatch(format!(
                "score buffer has {} slots for {} entities",
                out.len(),
                self.num_entities()
            )));
        }
        let c = Composite::new(&self.entities.row(head), &self.relations.row(rel));
        with_kernel!(self.variant, |k| {
            for (e, slot) in out.iter_mut().enumerate() {
                *slot = c.score(k, &self.entities.row(e));
            }
        });
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn table_rows_round_trip() {
        let mut t = FlowTable::identity(FlowKind::TwoPiece, 3, 2);
        let p = FlowParams::two_piece(vec![1.0, 2.0], vec![3.0, 4.0], vec![5.0, 6.0]).unwrap();
        t.set(1, &p).unwrap();
        assert_eq!(t.get(1).unwrap(), p);
        assert_eq!(t.get(0).unwrap(), FlowParams::identity_two_piece(2));
        assert!(t.get(3).is_err());
        assert!(t.set(0, &FlowParams::identity_affine(2)).is_err());
    }

    #[test]
    fn init_bounds_and_slopes() {
        let m = ModelState::init(ScoreVariant::Nfe1, BaseDist::Normal, 16, 10, 4, 7).unwrap();
        let bound = 0.5 / 4.0;
        assert!(m.entities.blocks()[0].iter().all(|x| x.abs() <= bound));
        assert!(m.entities.blocks()[1].iter().all(|&x| x == 1.0));
        assert_eq!(m, ModelState::init(ScoreVariant::Nfe1, BaseDist::Normal, 16, 10, 4, 7).unwrap());
    }

    #[test]
    fn bulk_tail_scores_match_single_scores() {
        let m = ModelState::init(ScoreVariant::Nfe2Normal, BaseDist::Normal, 5, 6, 2, 1).unwrap();
        let mut out = vec![0.0; 6];
        m.score_all_tails(2, 1, &mut out).unwrap();
        for (e, &s) in out.iter().enumerate() {
            assert_eq!(s, m.score(&TripleId::new(2, 1, e)).unwrap());
        }
    }

    #[test]
    fn rejects_base_the_variant_is_not_defined_on() {
        assert!(ModelState::identity(ScoreVariant::Nfe2Uniform, BaseDist::Normal, 2, 1, 1).is_err());
    }
}
