//! Triple files, entity/relation vocabularies, reciprocal relations and the
//! filter index used for filtered ranking.

use std::collections::{HashMap, HashSet};
use std::fmt;
use std::fs;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use indexmap::IndexSet;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct TripleId {
    pub head: usize,
    pub rel: usize,
    pub tail: usize,
}

impl TripleId {
    pub fn new(head: usize, rel: usize, tail: usize) -> Self {
        TripleId { head, rel, tail }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Split {
    Train,
    Valid,
    Test,
}

impl Split {
    pub const ALL: [Split; 3] = [Split::Train, Split::Valid, Split::Test];

    pub fn name(self) -> &'static str {
        match self {
            Split::Train => "train",
            Split::Valid => "valid",
            Split::Test => "test",
        }
    }
}

impl fmt::Display for Split {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Name <-> index bimap in insertion order.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Vocab {
    names: IndexSet<String>,
}

impl Vocab {
    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.names.get_index_of(name)
    }

    pub fn name(&self, index: usize) -> Option<&str> {
        self.names.get_index(index).map(String::as_str)
    }

    pub fn iter(&self) -> impl Iterator<Item = &str> {
        self.names.iter().map(String::as_str)
    }

    fn intern(&mut self, name: &str) -> usize {
        match self.names.get_index_of(name) {
            Some(i) => i,
            None => self.names.insert_full(name.to_owned()).0,
        }
    }

    /// Writes `index<TAB>name` lines.
    pub fn write_tsv(&self, path: &Path) -> Result<()> {
        let mut out = String::new();
        for (i, name) in self.names.iter().enumerate() {
            out.push_str(&format!("{i}\t{name}\n"));
        }
        fs::write(path, out).map_err(|e| Error::io(format!("writing {}", path.display()), e))
    }

    /// Reads a dump written by [`Vocab::write_tsv`]; indices must be dense and
    /// in order.
    pub fn read_tsv(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)
            .map_err(|e| Error::io(format!("reading {}", path.display()), e))?;
        let mut v = Vocab::default();
        for (lineno, line) in text.lines().enumerate() {
            let parse_err = |msg: &str| Error::Parse {
                path: path.to_owned(),
                line: lineno + 1,
                msg: msg.to_owned(),
            };
            let (idx, name) = line
                .split_once('\t')
                .ok_or_else(|| parse_err("expected index<TAB>name"))?;
            let idx: usize = idx.parse().map_err(|_| parse_err("bad index"))?;
            if idx != v.len() || v.index_of(name).is_some() {
                return Err(parse_err("indices must be dense, ordered and unique"));
            }
            v.intern(name);
        }
        Ok(v)
    }
}

/// A knowledge graph split into train/valid/test, with vocabularies spanning
/// all three splits.
#[derive(Debug, Clone, Default)]
pub struct KgDataset {
    entities: Vocab,
    relations: Vocab,
    base_relations: usize,
    augmented: bool,
    train: Vec<TripleId>,
    valid: Vec<TripleId>,
    test: Vec<TripleId>,
    filter: HashMap<(usize, usize), Vec<usize>>,
}

impl KgDataset {
    pub fn new() -> Self {
        Self::default()
    }

    /// Loads the three split files in order (train first, so vocabulary order
    /// is train, valid, test). `valid`/`test` may be omitted.
    pub fn load(train: &Path, valid: Option<&Path>, test: Option<&Path>) -> Result<Self> {
        let mut ds = KgDataset::new();
        ds.load_triples(train, Split::Train)?;
        if let Some(p) = valid {
            ds.load_triples(p, Split::Valid)?;
        }
        if let Some(p) = test {
            ds.load_triples(p, Split::Test)?;
        }
        Ok(ds)
    }

    /// Parses a `head<TAB>relation<TAB>tail` file into `split`, extending the
    /// vocabularies in first-seen order. Triples already present in the split
    /// are skipped. Returns the parsed triples, duplicates included.
    pub fn load_triples(&mut self, path: &Path, split: Split) -> Result<Vec<TripleId>> {
        let file = fs::File::open(path)
            .map_err(|e| Error::io(format!("opening {}", path.display()), e))?;
        let mut named = Vec::new();
        for (lineno, line) in BufReader::new(file).lines().enumerate() {
            let line = line.map_err(|e| Error::io(format!("reading {}", path.display()), e))?;
            let line = line.trim_end_matches('\r');
            if line.trim().is_empty() {
                continue;
            }
            let parts: Vec<&str> = line.split('\t').collect();
            if parts.len() != 3 || parts.iter().any(|p| p.is_empty()) {
                return Err(Error::Parse {
                    path: path.to_owned(),
                    line: lineno + 1,
                    msg: format!("expected head<TAB>relation<TAB>tail, got {line:?}"),
                });
            }
            named.push((parts[0].to_owned(), parts[1].to_owned(), parts[2].to_owned()));
        }
        self.add_named(split, named.iter().map(|(h, r, t)| (h.as_str(), r.as_str(), t.as_str())))
    }

    /// Adds triples given by name; see [`KgDataset::load_triples`].
    pub fn add_named<'a>(
        &mut self,
        split: Split,
        triples: impl IntoIterator<Item = (&'a str, &'a str, &'a str)>,
    ) -> Result<Vec<TripleId>> {
        if self.augmented {
            return Err(Error::AlreadyAugmented);
        }
        let known_entities = self.entities.len();
        let mut seen: HashSet<TripleId> = self.split(split).iter().copied().collect();
        let mut parsed = Vec::new();
        for (h, r, t) in triples {
            let id = TripleId::new(
                self.entities.intern(h),
                self.relations.intern(r),
                self.entities.intern(t),
            );
            parsed.push(id);
            if seen.insert(id) {
                self.split_mut(split).push(id);
            }
        }
        self.base_relations = self.relations.len();
        if split != Split::Train {
            let new = self.entities.len() - known_entities;
            let unseen = parsed
                .iter()
                .flat_map(|t| [t.head, t.tail])
                .filter(|&e| e >= self.train_entity_bound())
                .collect::<HashSet<_>>()
                .len();
            if unseen > 0 {
                log::warn!(
                    "{split}: {unseen} entities do not occur in train ({new} newly added); \
                     they are kept and evaluated"
                );
            }
        }
        self.rebuild_filter();
        Ok(parsed)
    }

    /// Entities with a smaller index were first seen in the train split.
    fn train_entity_bound(&self) -> usize {
        self.train
            .iter()
            .map(|t| t.head.max(t.tail) + 1)
            .max()
            .unwrap_or(0)
    }

    /// Adds `(t, r + |R|, h)` for every train triple and doubles the relation
    /// vocabulary. Valid and test are left as they are.
    pub fn add_reciprocals(mut self) -> Result<Self> {
        if self.augmented {
            return Err(Error::AlreadyAugmented);
        }
        let n = self.relations.len();
        let originals: Vec<String> = self.relations.iter().map(str::to_owned).collect();
        for name in originals {
            let mut rec = format!("{name}_reciprocal");
            while self.relations.index_of(&rec).is_some() {
                rec.push('_');
            }
            self.relations.intern(&rec);
        }
        let reversed: Vec<TripleId> = self
            .train
            .iter()
            .map(|t| TripleId::new(t.tail, t.rel + n, t.head))
            .collect();
        self.train.extend(reversed);
        self.base_relations = n;
        self.augmented = true;
        self.rebuild_filter();
        Ok(self)
    }

    /// Indexes every triple of every split under `(head, rel)`, plus the
    /// reversed triple under `(tail, rel + |R|)` once reciprocals exist.
    fn rebuild_filter(&mut self) {
        let mut filter: HashMap<(usize, usize), Vec<usize>> = HashMap::new();
        let n = self.base_relations;
        for t in self.train.iter().chain(&self.valid).chain(&self.test) {
            filter.entry((t.head, t.rel)).or_default().push(t.tail);
            if self.augmented && t.rel < n {
                filter.entry((t.tail, t.rel + n)).or_default().push(t.head);
            }
        }
        for tails in filter.values_mut() {
            tails.sort_unstable();
            tails.dedup();
        }
        self.filter = filter;
    }

    /// Known true tails of `(head, rel, ·)` across all splits, sorted.
    pub fn filtered_candidates(&self, head: usize, rel: usize) -> Result<&[usize]> {
        self.check_entity(head)?;
        self.check_relation(rel)?;
        Ok(self.filter.get(&(head, rel)).map(Vec::as_slice).unwrap_or(&[]))
    }

    pub fn check_entity(&self, e: usize) -> Result<()> {
        if e >= self.entities.len() {
            return Err(Error::IndexOutOfRange {
                what: "entity",
                index: e,
                size: self.entities.len(),
            });
        }
        Ok(())
    }

    pub fn check_relation(&self, r: usize) -> Result<()> {
        if r >= self.relations.len() {
            return Err(Error::IndexOutOfRange {
                what: "relation",
                index: r,
                size: self.relations.len(),
            });
        }
        Ok(())
    }

    pub fn check_triple(&self, t: &TripleId) -> Result<()> {
        self.check_entity(t.head)?;
        self.check_relation(t.rel)?;
        self.check_entity(t.tail)
    }

    /// Reciprocal relation index of `rel`.
    pub fn reciprocal(&self, rel: usize) -> Result<usize> {
        if !self.augmented {
            return Err(Error::Config("dataset has no reciprocal relations".into()));
        }
        self.check_relation(rel)?;
        let n = self.base_relations;
        Ok(if rel < n { rel + n } else { rel - n })
    }

    pub fn split(&self, split: Split) -> &[TripleId] {
        match split {
            Split::Train => &self.train,
            Split::Valid => &self.valid,
            Split::Test => &self.test,
        }
    }

    fn split_mut(&mut self, split: Split) -> &mut Vec<TripleId> {
        match split {
            Split::Train => &mut self.train,
            Split::Valid => &mut self.valid,
            Split::Test => &mut self.test,
        }
    }

    pub fn entities(&self) -> &Vocab {
        &self.entities
    }

    pub fn relations(&self) -> &Vocab {
        &self.relations
    }

    pub fn num_entities(&self) -> usize {
        self.entities.len()
    }

    /// Relation count including reciprocals.
    pub fn num_relations(&self) -> usize {
        self.relations.len()
    }

    /// Relation count before reciprocal augmentation.
    pub fn num_base_relations(&self) -> usize {
        self.base_relations
    }

    pub fn is_augmented(&self) -> bool {
        self.augmented
    }

    /// `entities=… relations=… train=… valid=… test=…` summary line.
    pub fn summary(&self) -> String {
        format!(
            "entities={} relations={} base_relations={} train={} valid={} test={}",
            self.num_entities(),
            self.num_relations(),
            self.base_relations,
            self.train.len(),
            self.valid.len(),
            self.test.len()
        )
    }

    /// Writes the split back to `head<TAB>relation<TAB>tail` lines by name.
    pub fn write_split(&self, split: Split, path: &Path) -> Result<()> {
        let ctx = || format!("writing {}", path.display());
        let mut out = std::io::BufWriter::new(fs::File::create(path).map_err(|e| Error::io(ctx(), e))?);
        for t in self.split(split) {
            writeln!(
                out,
                "{}\t{}\t{}",
                self.entities.name(t.head).unwrap_or_default(),
                self.relations.name(t.rel).unwrap_or_default(),
                self.entities.name(t.tail).unwrap_or_default()
            )
            .map_err(|e| Error::io(ctx(), e))?;
        }
        out.flush().map_err(|e| Error::io(ctx(), e))
    }
}
