//! Residuals of the relation-parameter identities behind symmetry, inverse
//! and composition rules, with histogram export.
//!
//! A relation `r` is symmetric when `r ∘ r` is the identity, i.e.
//! `r_sigma^2 = 1` and `r_sigma r_mu + r_mu = 0`. Antisymmetry is the absence
//! of that, so it shares the symmetry statistic.

use std::fmt;
use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::flows::{FlowKind, FlowParams};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RuleKind {
    Symmetry,
    Inverse,
    Composition,
}

impl RuleKind {
    pub fn name(self) -> &'static str {
        match self {
            RuleKind::Symmetry => "symmetry",
            RuleKind::Inverse => "inverse",
            RuleKind::Composition => "composition",
        }
    }

    /// Number of relations a rule of this kind mentions.
    pub fn arity(self) -> usize {
        match self {
            RuleKind::Symmetry => 1,
            RuleKind::Inverse => 2,
            RuleKind::Composition => 3,
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "symmetry" | "antisymmetry" => Some(RuleKind::Symmetry),
            "inverse" => Some(RuleKind::Inverse),
            "composition" => Some(RuleKind::Composition),
            _ => None,
        }
    }
}

impl fmt::Display for RuleKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Per-dimension absolute residuals of the slope and offset identities.
#[derive(Debug, Clone, PartialEq)]
pub struct RuleStat {
    pub kind: RuleKind,
    pub values_sigma: Vec<f64>,
    pub values_mu: Vec<f64>,
}

fn affine_parts(r: &FlowParams) -> Result<(&[f64], &[f64])> {
    match r {
        FlowParams::Affine { mu, sigma } => Ok((mu, sigma)),
        _ => Err(Error::WrongFlowKind {
            expected: FlowKind::Affine.name(),
            got: r.kind().name(),
        }),
    }
}

fn same_dim(n: usize, r: &FlowParams) -> Result<()> {
    if r.dim() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: r.dim(),
        });
    }
    Ok(())
}

/// `|r_sigma^2 - 1|`, `|r_sigma r_mu + r_mu|`.
pub fn symmetry_stat(r: &FlowParams) -> Result<RuleStat> {
    let (mu, s) = affine_parts(r)?;
    Ok(RuleStat {
        kind: RuleKind::Symmetry,
        values_sigma: s.iter().map(|&x| (x * x - 1.0).abs()).collect(),
        values_mu: s.iter().zip(mu).map(|(&x, &m)| (x * m + m).abs()).collect(),
    })
}

/// `|r2_sigma r1_sigma - 1|`, `|r2_sigma r1_mu + r2_mu|`.
pub fn inverse_stat(r1: &FlowParams, r2: &FlowParams) -> Result<RuleStat> {
    let (m1, s1) = affine_parts(r1)?;
    let (m2, s2) = affine_parts(r2)?;
    same_dim(r1.dim(), r2)?;
    Ok(RuleStat {
        kind: RuleKind::Inverse,
        values_sigma: (0..s1.len()).map(|i| (s2[i] * s1[i] - 1.0).abs()).collect(),
        values_mu: (0..s1.len()).map(|i| (s2[i] * m1[i] + m2[i]).abs()).collect(),
    })
}

/// `|r1_sigma r2_sigma - r3_sigma|`, `|r2_sigma r1_mu + r2_mu - r3_mu|`,
/// for `r3 = r2 ∘ r1`.
pub fn composition_stat(r1: &FlowParams, r2: &FlowParams, r3: &FlowParams) -> Result<RuleStat> {
    let (m1, s1) = affine_parts(r1)?;
    let (m2, s2) = affine_parts(r2)?;
    let (m3, s3) = affine_parts(r3)?;
    same_dim(r1.dim(), r2)?;
    same_dim(r1.dim(), r3)?;
    Ok(RuleStat {
        kind: RuleKind::Composition,
        values_sigma: (0..s1.len()).map(|i| (s1[i] * s2[i] - s3[i]).abs()).collect(),
        values_mu: (0..s1.len())
            .map(|i| (s2[i] * m1[i] + m2[i] - m3[i]).abs())
            .collect(),
    })
}

/// Median of a non-empty slice (mean of the middle two for even lengths).
pub fn median(values: &[f64]) -> f64 {
    if values.is_empty() {
        return f64::NAN;
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

impl RuleStat {
    pub fn median_sigma(&self) -> f64 {
        median(&self.values_sigma)
    }

    pub fn median_mu(&self) -> f64 {
        median(&self.values_mu)
    }

    /// Median over dimensions of the summed slope and offset residuals.
    pub fn median_combined(&self) -> f64 {
        let c: Vec<f64> = self
            .values_sigma
            .iter()
            .zip(&self.values_mu)
            .map(|(a, b)| a + b)
            .collect();
        median(&c)
    }

    /// `kind<TAB>relations<TAB>median_sigma=…<TAB>median_mu=…`.
    pub fn summary_line(&self, relations: &[&str]) -> String {
        format!(
            "{}\t{}\tmedian_sigma={}\tmedian_mu={}",
            self.kind,
            relations.join(","),
            self.median_sigma(),
            self.median_mu()
        )
    }
}

/// One histogram bin: `[lo, hi)`, the last bin closed on the right.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Bin {
    pub lo: f64,
    pub hi: f64,
    pub count: usize,
}

/// `bins` equal-width bins over `[0, max(values)]`; an all-zero input uses
/// `[0, f64::EPSILON]`.
pub fn histogram(values: &[f64], bins: usize) -> Result<Vec<Bin>> {
    if bins < 2 {
        return Err(Error::domain(format!("histogram needs at least 2 bins, got {bins}")));
    }
    if values.iter().any(|v| !(*v >= 0.0) || !v.is_finite()) {
        return Err(Error::domain("residuals must be finite and nonnegative"));
    }
    let max = values.iter().copied().fold(0.0, f64::max);
    let top = if max > 0.0 { max } else { f64::EPSILON };
    let width = top / bins as f64;
    let mut out: Vec<Bin> = (0..bins)
        .map(|i| Bin {
            lo: i as f64 * width,
            hi: if i + 1 == bins { top } else { (i + 1) as f64 * width },
            count: 0,
        })
        .collect();
    for &v in values {
        let i = ((v / width) as usize).min(bins - 1);
        out[i].count += 1;
    }
    Ok(out)
}

/// Writes `# sigma` and `# mu` sections of `bin_lo<TAB>bin_hi<TAB>count`.
pub fn export_histogram(stat: &RuleStat, bins: usize, path: &Path) -> Result<()> {
    let mut out = String::new();
    for (name, values) in [("sigma", &stat.values_sigma), ("mu", &stat.values_mu)] {
        out.push_str(&format!("# {name}\n"));
        for b in histogram(values, bins)? {
            out.push_str(&format!("{}\t{}\t{}\n", b.lo, b.hi, b.count));
        }
    }
    fs::write(path, out).map_err(|e| Error::io(format!("writing {}", path.display()), e))
}

/// One line of a rule file: a kind followed by relation names.
#[derive(Debug, Clone, PartialEq)]
pub struct RuleSpec {
    pub kind: RuleKind,
    pub relations: Vec<String>,
}

/// Parses lines such as `symmetry r`, `inverse r1 r2`,
/// `composition r1 r2 r3`. Blank lines and `#` comments are skipped.
pub fn parse_rules(text: &str, path: &Path) -> Result<Vec<RuleSpec>> {
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let err = |msg: String| Error::Parse {
            path: path.to_owned(),
            line: i + 1,
            msg,
        };
        let mut parts = line.split_whitespace();
        let word = parts.next().unwrap_or_default();
        let kind = RuleKind::parse(word).ok_or_else(|| err(format!("unknown rule kind '{word}'")))?;
        let relations: Vec<String> = parts.map(str::to_owned).collect();
        if relations.len() != kind.arity() {
            return Err(err(format!(
                "{kind} takes {} relation names, got {}",
                kind.arity(),
                relations.len()
            )));
        }
        out.push(RuleSpec { kind, relations });
    }
    Ok(out)
}

/// Statistic of a rule given its relations' flows in rule order.
pub fn rule_stat(kind: RuleKind, rels: &[FlowParams]) -> Result<RuleStat> {
    if rels.len() != kind.arity() {
        return Err(Error::Config(format!(
            "{kind} takes {} relations, got {}",
            kind.arity(),
            rels.len()
        )));
    }
    match kind {
        RuleKind::Symmetry => symmetry_stat(&rels[0]),
        RuleKind::Inverse => inverse_stat(&rels[0], &rels[1]),
        RuleKind::Composition => composition_stat(&rels[0], &rels[1], &rels[2]),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::flows::compose_affine_affine;

    fn aff(mu: &[f64], s: &[f64]) -> FlowParams {
        FlowParams::affine(mu.to_vec(), s.to_vec()).unwrap()
    }

    fn zero(s: &RuleStat) -> bool {
        s.values_sigma.iter().chain(&s.values_mu).all(|&x| x == 0.0)
    }

    #[test]
    fn symmetry_examples() {
        assert!(zero(&symmetry_stat(&FlowParams::identity_affine(3)).unwrap()));
        assert!(zero(&symmetry_stat(&aff(&[0.0, 0.0], &[-1.0, -1.0])).unwrap()));
        let s = symmetry_stat(&aff(&[1.0], &[2.0])).unwrap();
        assert_eq!((s.values_sigma[0], s.values_mu[0]), (3.0, 3.0));
    }

    #[test]
    fn inverse_examples() {
        let id = FlowParams::identity_affine(2);
        assert!(zero(&inverse_stat(&id, &id).unwrap()));
        assert!(zero(&inverse_stat(&aff(&[1.0], &[2.0]), &aff(&[-0.5], &[0.5])).unwrap()));
    }

    #[test]
    fn composition_examples() {
        let r1 = aff(&[0.5, -1.0], &[2.0, -0.25]);
        let r2 = aff(&[1.5, 3.0], &[-4.0, 0.5]);
        let r3 = compose_affine_affine(&r2, &r1).unwrap();
        assert!(zero(&composition_stat(&r1, &r2, &r3).unwrap()));
        let id = FlowParams::identity_affine(2);
        assert!(zero(&composition_stat(&id, &id, &id).unwrap()));
        let off = aff(&[0.0, 0.0], &[2.0, 2.0]);
        let s = composition_stat(&id, &id, &off).unwrap();
        assert_eq!(s.values_sigma, vec![1.0, 1.0]);
    }

    #[test]
    fn two_piece_relations_are_rejected() {
        let tp = FlowParams::identity_two_piece(1);
        assert!(matches!(symmetry_stat(&tp), Err(Error::WrongFlowKind { .. })));
    }

    #[test]
    fn histogram_examples() {
        let h = histogram(&[0.0, 1.0, 2.0, 3.0], 2).unwrap();
        assert_eq!(h.iter().map(|b| b.count).collect::<Vec<_>>(), vec![2, 2]);
        assert_eq!((h[1].lo, h[1].hi), (1.5, 3.0));
        let z = histogram(&[0.0; 5], 4).unwrap();
        assert_eq!(z[0].count, 5);
        assert_eq!(z[3].hi, f64::EPSILON);
        assert!(histogram(&[1.0], 1).is_err());
    }

    #[test]
    fn median_even_and_odd() {
        assert_eq!(median(&[3.0, 1.0, 2.0]), 2.0);
        assert_eq!(median(&[4.0, 1.0, 2.0, 3.0]), 2.5);
    }

    #[test]
    fn rule_file_parsing() {
        let p = Path::new("rules.txt");
        let r = parse_rules("# comment\nsymmetry s\n\ninverse a b\ncomposition x y z\n", p).unwrap();
        assert_eq!(r.len(), 3);
        assert_eq!(r[2].relations, vec!["x", "y", "z"]);
        assert!(parse_rules("inverse a\n", p).is_err());
        assert!(parse_rules("transitive a\n", p).is_err());
        assert!(parse_rules("", p).unwrap().is_empty());
    }
}
