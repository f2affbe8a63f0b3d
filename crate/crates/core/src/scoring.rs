//! Triple scores: the negated distance between the pushforward of the base
//! variable through `r ∘ h` and through `t`, in closed form, plus analytic
//! gradients and a quadrature reference path.
//!
//! Every variant follows the same convention: higher scores mean more
//! plausible triples. The KL variant therefore returns `-KL`.

use std::fmt;
use std::str::FromStr;
use std::sync::atomic::{AtomicBool, Ordering};

use crate::dist1d::{kl_quadrature, w2_quadrature};
use crate::error::{Error, Result};
use crate::flows::{compose, BaseDist, FlowKind, FlowParams, FlowView};

/// Smallest slope magnitude the KL score will divide by or take the log of.
pub const KL_SIGMA_FLOOR: f64 = 1e-12;

static KL_FLOOR_HIT: AtomicBool = AtomicBool::new(false);

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ScoreVariant {
    /// Affine flows, squared 2-Wasserstein.
    Nfe1,
    /// Two-piece entity flows over the uniform base.
    Nfe2Uniform,
    /// Two-piece entity flows over the normal base.
    Nfe2Normal,
    /// Affine flows over the normal base, KL divergence (negated).
    Nfe3,
    /// Affine flows over a base of width `1/k`; `inv_k_sq` weights the
    /// uncertainty term.
    NfeK { inv_k_sq: f64 },
    /// Translation-only ablation: `-||r_sigma h_mu + r_mu - t_mu||^2`.
    MuOnly,
    /// Scaling-only ablation: `-|| |r_sigma h_sigma| - |t_sigma| ||^2`.
    SigmaOnly,
}

impl ScoreVariant {
    pub fn entity_kind(&self) -> FlowKind {
        match self {
            ScoreVariant::Nfe2Uniform | ScoreVariant::Nfe2Normal => FlowKind::TwoPiece,
            _ => FlowKind::Affine,
        }
    }

    /// Base variable under which the closed form is the exact distance.
    pub fn oracle_base(&self) -> BaseDist {
        match *self {
            ScoreVariant::Nfe2Uniform => BaseDist::Uniform,
            ScoreVariant::NfeK { inv_k_sq } => {
                BaseDist::from_inv_k_sq(inv_k_sq).unwrap_or(BaseDist::Normal)
            }
            ScoreVariant::MuOnly => BaseDist::DiracScaled { k: f64::INFINITY },
            _ => BaseDist::Normal,
        }
    }

    /// Whether `base` is a valid choice of base variable for this variant.
    pub fn supports_base(&self, base: BaseDist) -> bool {
        match self {
            ScoreVariant::Nfe2Uniform => base == BaseDist::Uniform,
            ScoreVariant::Nfe2Normal | ScoreVariant::Nfe3 => base == BaseDist::Normal,
            _ => true,
        }
    }

    /// Relation slopes are frozen at their initial value of 1 when training
    /// the translation-only ablation.
    pub fn freezes_relation_sigma(&self) -> bool {
        matches!(self, ScoreVariant::MuOnly)
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            ScoreVariant::NfeK { inv_k_sq } if !(inv_k_sq >= 0.0 && inv_k_sq.is_finite()) => {
                Err(Error::domain(format!("inv_k_sq must be >= 0, got {inv_k_sq}")))
            }
            _ => Ok(()),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            ScoreVariant::Nfe1 => "nfe1",
            ScoreVariant::Nfe2Uniform => "nfe2u",
            ScoreVariant::Nfe2Normal => "nfe2n",
            ScoreVariant::Nfe3 => "nfe3",
            ScoreVariant::NfeK { .. } => "nfek",
            ScoreVariant::MuOnly => "mu",
            ScoreVariant::SigmaOnly => "sigma",
        }
    }

    /// Parses a variant name; `nfek` takes its weight from `inv_k_sq`.
    pub fn parse(name: &str, inv_k_sq: f64) -> Result<Self> {
        let v = match name {
            "nfe1" => ScoreVariant::Nfe1,
            "nfe2u" => ScoreVariant::Nfe2Uniform,
            "nfe2n" => ScoreVariant::Nfe2Normal,
            "nfe3" => ScoreVariant::Nfe3,
            "nfek" => ScoreVariant::NfeK { inv_k_sq },
            "mu" => ScoreVariant::MuOnly,
            "sigma" => ScoreVariant::SigmaOnly,
            other => return Err(Error::Config(format!("unknown variant '{other}'"))),
        };
        v.validate()?;
        Ok(v)
    }

    pub(crate) fn tag(&self) -> u8 {
        match self {
            ScoreVariant::Nfe1 => 1,
            ScoreVariant::Nfe2Uniform => 2,
            ScoreVariant::Nfe2Normal => 3,
            ScoreVariant::Nfe3 => 4,
            ScoreVariant::NfeK { .. } => 5,
            ScoreVariant::MuOnly => 6,
            ScoreVariant::SigmaOnly => 7,
        }
    }

    pub(crate) fn from_tag(tag: u8, inv_k_sq: f64) -> Option<Self> {
        Some(match tag {
            1 => ScoreVariant::Nfe1,
            2 => ScoreVariant::Nfe2Uniform,
            3 => ScoreVariant::Nfe2Normal,
            4 => ScoreVariant::Nfe3,
            5 => ScoreVariant::NfeK { inv_k_sq },
            6 => ScoreVariant::MuOnly,
            7 => ScoreVariant::SigmaOnly,
            _ => return None,
        })
    }

    pub(crate) fn inv_k_sq(&self) -> f64 {
        match *self {
            ScoreVariant::NfeK { inv_k_sq } => inv_k_sq,
            _ => 0.0,
        }
    }
}

impl fmt::Display for ScoreVariant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ScoreVariant::NfeK { inv_k_sq } => write!(f, "nfek(inv_k_sq={inv_k_sq})"),
            v => f.write_str(v.name()),
        }
    }
}

impl FromStr for ScoreVariant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        ScoreVariant::parse(s, 1.0)
    }
}

/// Gradient of a score with respect to every parameter of `h`, `r` and `t`.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoreGrad {
    pub d_h: FlowParams,
    pub d_r: FlowParams,
    pub d_t: FlowParams,
}

/// Partial derivatives of one dimension's score contribution with respect to
/// the composite `r ∘ h` parameters `(m, s1, s2)` and the tail parameters
/// `(tm, t1, t2)`.
#[derive(Debug, Clone, Copy, Default)]
pub(crate) struct DimGrad {
    pub value: f64,
    pub dm: f64,
    pub ds1: f64,
    pub ds2: f64,
    pub dtm: f64,
    pub dt1: f64,
    pub dt2: f64,
}

/// Per-dimension score contribution. Affine kernels receive `s2 == s1`,
/// `t2 == t1` and report their slope derivatives in `ds1`/`dt1` only.
pub(crate) trait DimKernel: Sync {
    fn value(&self, m: f64, s1: f64, s2: f64, tm: f64, t1: f64, t2: f64) -> f64;
    fn grad(&self, m: f64, s1: f64, s2: f64, tm: f64, t1: f64, t2: f64) -> DimGrad;
}

/// Subgradient of `|x|` with 0 at the kink.
#[inline]
fn sgn(x: f64) -> f64 {
    if x > 0.0 {
        1.0
    } else if x < 0.0 {
        -1.0
    } else {
        0.0
    }
}

/// `-(mu_w (m - tm)^2 + sigma_w (|s| - |t|)^2)`.
pub(crate) struct AffineW2 {
    pub mu_w: f64,
    pub sigma_w: f64,
}

impl DimKernel for AffineW2 {
    #[inline]
    fn value(&self, m: f64, s1: f64, _s2: f64, tm: f64, t1: f64, _t2: f64) -> f64 {
        let e = m - tm;
        let a = s1.abs() - t1.abs();
        -(self.mu_w * e * e + self.sigma_w * a * a)
    }

    #[inline]
    fn grad(&self, m: f64, s1: f64, _s2: f64, tm: f64, t1: f64, _t2: f64) -> DimGrad {
        let e = m - tm;
        let a = s1.abs() - t1.abs();
        DimGrad {
            value: -(self.mu_w * e * e + self.sigma_w * a * a),
            dm: -2.0 * self.mu_w * e,
            dtm: 2.0 * self.mu_w * e,
            ds1: -2.0 * self.sigma_w * a * sgn(s1),
            dt1: 2.0 * self.sigma_w * a * sgn(t1),
            ds2: 0.0,
            dt2: 0.0,
        }
    }
}

/// Two-piece distance with cross-term weight `coef`.
pub(crate) struct TwoPieceW2 {
    pub coef: f64,
}

/// Left and right scales of the law a two-piece flow pushes a symmetric base
/// to. A decreasing flow mirrors the base, so its pieces trade sides.
#[inline]
fn sides(s1: f64, s2: f64) -> (f64, f64, bool) {
    if s1 < 0.0 {
        (s2.abs(), s1.abs(), true)
    } else {
        (s1.abs(), s2.abs(), false)
    }
}

impl DimKernel for TwoPieceW2 {
    #[inline]
    fn value(&self, m: f64, s1: f64, s2: f64, tm: f64, t1: f64, t2: f64) -> f64 {
        let (l, r, _) = sides(s1, s2);
        let (tl, tr, _) = sides(t1, t2);
        let e = m - tm;
        let a = l - tl;
        let b = r - tr;
        let c = r - l + tl - tr;
        -(e * e + 0.5 * a * a + 0.5 * b * b + self.coef * e * c)
    }

    #[inline]
    fn grad(&self, m: f64, s1: f64, s2: f64, tm: f64, t1: f64, t2: f64) -> DimGrad {
        let (l, r, flip) = sides(s1, s2);
        let (tl, tr, tflip) = sides(t1, t2);
        let e = m - tm;
        let a = l - tl;
        let b = r - tr;
        let c = r - l + tl - tr;
        let ce = self.coef * e;
        let dm = -(2.0 * e + self.coef * c);
        // derivatives with respect to the left and right scales
        let (gl, gr) = (-(a - ce), -(b + ce));
        let (ds1, ds2) = if flip { (-gr, -gl) } else { (gl, gr) };
        let (dt1, dt2) = if tflip { (gr, gl) } else { (-gl, -gr) };
        DimGrad {
            value: -(e * e + 0.5 * a * a + 0.5 * b * b + ce * c),
            dm,
            dtm: -dm,
            ds1,
            ds2,
            dt1,
            dt2,
        }
    }
}

/// `-KL(N(m, |s|) || N(tm, |t|))`.
pub(crate) struct AffineKl;

#[inline]
fn floored(x: f64) -> (f64, f64) {
    let a = x.abs();
    if a > KL_SIGMA_FLOOR {
        (a, sgn(x))
    } else {
        if !KL_FLOOR_HIT.swap(true, Ordering::Relaxed) {
            log::warn!("KL score: slope magnitude below {KL_SIGMA_FLOOR:e}, clamping");
        }
        (KL_SIGMA_FLOOR, 0.0)
    }
}

impl DimKernel for AffineKl {
    #[inline]
    fn value(&self, m: f64, s1: f64, _s2: f64, tm: f64, t1: f64, _t2: f64) -> f64 {
        let (a_s, _) = floored(s1);
        let (a_t, _) = floored(t1);
        let e = m - tm;
        -((a_t / a_s).ln() + (a_s * a_s + e * e) / (2.0 * a_t * a_t) - 0.5)
    }

    #[inline]
    fn grad(&self, m: f64, s1: f64, _s2: f64, tm: f64, t1: f64, _t2: f64) -> DimGrad {
        let (a_s, g_s) = floored(s1);
        let (a_t, g_t) = floored(t1);
        let e = m - tm;
        let at2 = a_t * a_t;
        let kl = (a_t / a_s).ln() + (a_s * a_s + e * e) / (2.0 * at2) - 0.5;
        let d_as = -1.0 / a_s + a_s / at2;
        let d_at = 1.0 / a_t - (a_s * a_s + e * e) / (at2 * a_t);
        DimGrad {
            value: -kl,
            dm: -e / at2,
            dtm: e / at2,
            ds1: -d_as * g_s,
            dt1: -d_at * g_t,
            ds2: 0.0,
            dt2: 0.0,
        }
    }
}

/// Runs `$body` with `$k` bound to the kernel of `$variant`, monomorphising
/// the body per kernel type.
macro_rules! with_kernel {
    ($variant:expr, |$k:ident| $body:expr) => {{
        use $crate::scoring::{AffineKl, AffineW2, ScoreVariant, TwoPieceW2};
        match $variant {
            ScoreVariant::Nfe1 => {
                let $k = &AffineW2 { mu_w: 1.0, sigma_w: 1.0 };
                $body
            }
            ScoreVariant::NfeK { inv_k_sq } => {
                let $k = &AffineW2 { mu_w: 1.0, sigma_w: inv_k_sq };
                $body
            }
            ScoreVariant::MuOnly => {
                let $k = &AffineW2 { mu_w: 1.0, sigma_w: 0.0 };
                $body
            }
            ScoreVariant::SigmaOnly => {
                let $k = &AffineW2 { mu_w: 0.0, sigma_w: 1.0 };
                $body
            }
            ScoreVariant::Nfe2Uniform => {
                let $k = &TwoPieceW2 { coef: $crate::dist1d::TWO_PIECE_UNIFORM_COEF };
                $body
            }
            ScoreVariant::Nfe2Normal => {
                let $k = &TwoPieceW2 { coef: $crate::dist1d::TWO_PIECE_NORMAL_COEF };
                $body
            }
            ScoreVariant::Nfe3 => {
                let $k = &AffineKl;
                $body
            }
        }
    }};
}
pub(crate) use with_kernel;

/// Parameters of `r ∘ h` laid out per dimension.
#[derive(Debug, Clone, Default)]
pub(crate) struct Composite {
    pub m: Vec<f64>,
    pub s1: Vec<f64>,
    pub s2: Vec<f64>,
}

impl Composite {
    pub fn new(h: &FlowView<'_>, r: &FlowView<'_>) -> Self {
        let n = h.dim();
        let mut c = Composite {
            m: Vec::with_capacity(n),
            s1: Vec::with_capacity(n),
            s2: Vec::with_capacity(n),
        };
        for i in 0..n {
            let rs = r.sigma_left[i];
            c.m.push(rs * h.mu[i] + r.mu[i]);
            c.s1.push(rs * h.sigma_left[i]);
            c.s2.push(rs * h.sigma_right[i]);
        }
        c
    }

    /// Score of this composite against one tail.
    #[inline]
    pub fn score<K: DimKernel>(&self, k: &K, t: &FlowView<'_>) -> f64 {
        let mut total = 0.0;
        for i in 0..self.m.len() {
            total += k.value(
                self.m[i],
                self.s1[i],
                self.s2[i],
                t.mu[i],
                t.sigma_left[i],
                t.sigma_right[i],
            );
        }
        total
    }
}

/// Pulls a composite-space gradient back onto the parameters of `h` and `r`.
/// `d_h`/`d_r` are accumulated into, so callers can sum several triples.
pub(crate) fn chain_composite(
    h: &FlowView<'_>,
    r: &FlowView<'_>,
    dm: &[f64],
    ds1: &[f64],
    ds2: &[f64],
    d_h: [&mut [f64]; 3],
    d_r: [&mut [f64]; 2],
    scale: f64,
) {
    let [h_mu, h_s1, h_s2] = d_h;
    let [r_mu, r_s] = d_r;
    let two_piece = h.kind == FlowKind::TwoPiece;
    for i in 0..h.dim() {
        let rs = r.sigma_left[i];
        h_mu[i] += scale * dm[i] * rs;
        h_s1[i] += scale * ds1[i] * rs;
        r_mu[i] += scale * dm[i];
        let mut dr = dm[i] * h.mu[i] + ds1[i] * h.sigma_left[i];
        if two_piece {
            h_s2[i] += scale * ds2[i] * rs;
            dr += ds2[i] * h.sigma_right[i];
        }
        r_s[i] += scale * dr;
    }
}

fn check_triple(variant: ScoreVariant, h: &FlowParams, r: &FlowParams, t: &FlowParams) -> Result<()> {
    variant.validate()?;
    let want = variant.entity_kind();
    for f in [h, t] {
        if f.kind() != want {
            return Err(Error::WrongFlowKind {
                expected: want.name(),
                got: f.kind().name(),
            });
        }
    }
    if r.kind() != FlowKind::Affine {
        return Err(Error::WrongFlowKind {
            expected: FlowKind::Affine.name(),
            got: r.kind().name(),
        });
    }
    let n = h.dim();
    for f in [r, t] {
        if f.dim() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: f.dim(),
            });
        }
    }
    if variant == ScoreVariant::Nfe3 {
        for (name, f) in [("head", h), ("relation", r), ("tail", t)] {
            if f.blocks()[1..].iter().any(|s| s.iter().any(|&x| x == 0.0)) {
                return Err(Error::NotInvertible(format!(
                    "KL score needs nonzero slopes; {name} has a zero entry"
                )));
            }
        }
    }
    Ok(())
}

/// Closed-form score of `(h, r, t)`.
pub fn score(variant: ScoreVariant, h: &FlowParams, r: &FlowParams, t: &FlowParams) -> Result<f64> {
    check_triple(variant, h, r, t)?;
    let c = Composite::new(&h.view(), &r.view());
    let tv = t.view();
    Ok(with_kernel!(variant, |k| c.score(k, &tv)))
}

/// Analytic gradient of [`score`]. Absolute-value kinks get subgradient 0.
pub fn grad(
    variant: ScoreVariant,
    h: &FlowParams,
    r: &FlowParams,
    t: &FlowParams,
) -> Result<ScoreGrad> {
    check_triple(variant, h, r, t)?;
    let (hv, rv, tv) = (h.view(), r.view(), t.view());
    let c = Composite::new(&hv, &rv);
    let n = h.dim();
    let (mut dm, mut ds1, mut ds2) = (vec![0.0; n], vec![0.0; n], vec![0.0; n]);
    let (mut dtm, mut dt1, mut dt2) = (vec![0.0; n], vec![0.0; n], vec![0.0; n]);
    with_kernel!(variant, |k| {
        for i in 0..n {
            let g = k.grad(
                c.m[i],
                c.s1[i],
                c.s2[i],
                tv.mu[i],
                tv.sigma_left[i],
                tv.sigma_right[i],
            );
            dm[i] = g.dm;
            ds1[i] = g.ds1;
            ds2[i] = g.ds2;
            dtm[i] = g.dtm;
            dt1[i] = g.dt1;
            dt2[i] = g.dt2;
        }
    });
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
    let (d_h, d_t) = match h.kind() {
        FlowKind::Affine => (
            FlowParams::affine(h_mu, h_s1)?,
            FlowParams::affine(dtm, dt1)?,
        ),
        FlowKind::TwoPiece => (
            FlowParams::two_piece(h_mu, h_s1, h_s2)?,
            FlowParams::two_piece(dtm, dt1, dt2)?,
        ),
    };
    let d_r = FlowParams::affine(r_mu, r_s)?;
    Ok(ScoreGrad { d_h, d_r, d_t })
}

/// The score computed from its definition: push the base variable through
/// `r ∘ h` and `t`, and sum per-dimension distances obtained by quadrature
/// over inverse cdfs (W2) or densities (KL).
pub fn score_via_oracle(
    variant: ScoreVariant,
    h: &FlowParams,
    r: &FlowParams,
    t: &FlowParams,
    n_points: usize,
) -> Result<f64> {
    score_via_oracle_with_base(variant, variant.oracle_base(), h, r, t, n_points)
}

/// [`score_via_oracle`] with an explicit base variable.
pub fn score_via_oracle_with_base(
    variant: ScoreVariant,
    base: BaseDist,
    h: &FlowParams,
    r: &FlowParams,
    t: &FlowParams,
    n_points: usize,
) -> Result<f64> {
    check_triple(variant, h, r, t)?;
    if n_points < 1024 {
        return Err(Error::domain(format!("oracle needs n_points >= 1024, got {n_points}")));
    }
    if !variant.supports_base(base) {
        return Err(Error::Config(format!(
            "{variant} is not defined over the {} base",
            base.name()
        )));
    }
    // the scaling-only ablation compares flows with their offsets removed
    let zero_mu = |f: &FlowParams| {
        let mut f = f.clone();
        f.blocks_mut()[0].iter_mut().for_each(|x| *x = 0.0);
        f
    };
    let (h, r, t) = if variant == ScoreVariant::SigmaOnly {
        (zero_mu(h), zero_mu(r), zero_mu(t))
    } else {
        (h.clone(), r.clone(), t.clone())
    };
    let rh = compose(&r, &h)?;
    let mut total = 0.0;
    for i in 0..h.dim() {
        let p = rh.pushforward(base, i)?;
        let q = t.pushforward(base, i)?;
        total += if variant == ScoreVariant::Nfe3 {
            kl_quadrature(&p, &q, n_points)?
        } else {
            w2_quadrature(&p, &q, n_points)?
        };
    }
    Ok(-total)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn aff(mu: &[f64], sigma: &[f64]) -> FlowParams {
        FlowParams::affine(mu.to_vec(), sigma.to_vec()).unwrap()
    }

    fn tp(mu: &[f64], l: &[f64], r: &[f64]) -> FlowParams {
        FlowParams::two_piece(mu.to_vec(), l.to_vec(), r.to_vec()).unwrap()
    }

    #[test]
    fn translation_match_scores_zero() {
        let h = aff(&[1.0, 0.0], &[1.0, 1.0]);
        let r = aff(&[0.0, 1.0], &[1.0, 1.0]);
        let t = aff(&[1.0, 1.0], &[1.0, 1.0]);
        assert_eq!(score(ScoreVariant::Nfe1, &h, &r, &t).unwrap(), 0.0);
        let g = grad(ScoreVariant::Nfe1, &h, &r, &t).unwrap();
        for p in [&g.d_h, &g.d_r, &g.d_t] {
            assert!(p.blocks().iter().all(|b| b.iter().all(|&x| x == 0.0)));
        }
    }

    #[test]
    fn slope_sign_is_ignored() {
        let h = aff(&[0.0], &[2.0]);
        let r = aff(&[0.0], &[1.0]);
        let t = aff(&[0.0], &[-2.0]);
        assert_eq!(score(ScoreVariant::Nfe1, &h, &r, &t).unwrap(), 0.0);
    }

    #[test]
    fn two_piece_with_equal_slopes_matches_affine() {
        let (hm, hs, rm, rs, tm, ts) = ([0.3, -1.0], [0.7, -1.4], [0.2, 0.5], [1.5, -0.3], [1.0, 0.1], [0.4, 2.0]);
        let a = score(ScoreVariant::Nfe1, &aff(&hm, &hs), &aff(&rm, &rs), &aff(&tm, &ts)).unwrap();
        for v in [ScoreVariant::Nfe2Uniform, ScoreVariant::Nfe2Normal] {
            let b = score(v, &tp(&hm, &hs, &hs), &aff(&rm, &rs), &tp(&tm, &ts, &ts)).unwrap();
            assert_eq!(a, b);
        }
    }

    #[test]
    fn zero_uncertainty_weight_is_translation_only() {
        let h = aff(&[0.3, -1.0], &[0.7, -1.4]);
        let r = aff(&[0.2, 0.5], &[1.5, -0.3]);
        let t = aff(&[1.0, 0.1], &[0.4, 2.0]);
        let k0 = score(ScoreVariant::NfeK { inv_k_sq: 0.0 }, &h, &r, &t).unwrap();
        let mu = score(ScoreVariant::MuOnly, &h, &r, &t).unwrap();
        assert_eq!(k0, mu);
    }

    #[test]
    fn translation_only_tail_gradient() {
        let h = aff(&[0.3, -1.0], &[0.7, -1.4]);
        let r = aff(&[0.2, 0.5], &[1.5, -0.3]);
        let t = aff(&[1.0, 0.1], &[0.4, 2.0]);
        let g = grad(ScoreVariant::MuOnly, &h, &r, &t).unwrap();
        for i in 0..2 {
            let e = r.view().sigma_left[i] * h.mu()[i] + r.mu()[i] - t.mu()[i];
            assert!((g.d_t.mu()[i] - 2.0 * e).abs() < 1e-15);
        }
    }

    #[test]
    fn kl_rejects_zero_slope() {
        let h = aff(&[0.0], &[0.0]);
        let r = aff(&[0.0], &[1.0]);
        assert!(matches!(
            score(ScoreVariant::Nfe3, &h, &r, &r),
            Err(Error::NotInvertible(_))
        ));
    }

    #[test]
    fn kl_matches_closed_normal_divergence() {
        let h = aff(&[0.0], &[1.0]);
        let r = aff(&[0.0], &[1.0]);
        let t = aff(&[0.0], &[2.0]);
        let s = score(ScoreVariant::Nfe3, &h, &r, &t).unwrap();
        assert!((s + (2f64.ln() - 0.375)).abs() < 1e-15);
    }

    #[test]
    fn wrong_kinds_and_dims_are_rejected() {
        let a = aff(&[0.0], &[1.0]);
        let b = tp(&[0.0], &[1.0], &[1.0]);
        assert!(matches!(
            score(ScoreVariant::Nfe2Normal, &a, &a, &a),
            Err(Error::WrongFlowKind { .. })
        ));
        assert!(matches!(
            score(ScoreVariant::Nfe1, &b, &a, &b),
            Err(Error::WrongFlowKind { .. })
        ));
        let c = aff(&[0.0, 0.0], &[1.0, 1.0]);
        assert!(matches!(
            score(ScoreVariant::Nfe1, &a, &a, &c),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn oracle_identical_flows_score_zero() {
        let h = tp(&[0.5, -0.2], &[0.8, 1.3], &[1.7, 0.4]);
        let r = aff(&[0.0, 0.0], &[1.0, 1.0]);
        for v in [ScoreVariant::Nfe2Uniform, ScoreVariant::Nfe2Normal] {
            assert!(score_via_oracle(v, &h, &r, &h, 8192).unwrap().abs() < 1e-9);
        }
    }

    #[test]
    fn oracle_matches_two_piece_uniform() {
        let h = tp(&[0.5, -0.2], &[0.8, 1.3], &[1.7, 0.4]);
        let r = aff(&[0.1, 0.3], &[1.2, 0.9]);
        let t = tp(&[0.1, 0.6], &[1.1, 0.5], &[0.6, 0.7]);
        let v = ScoreVariant::Nfe2Uniform;
        let a = score(v, &h, &r, &t).unwrap();
        let b = score_via_oracle(v, &h, &r, &t, 8192).unwrap();
        assert!((a - b).abs() <= 1e-6 * (1.0 + a.abs()), "{a} vs {b}");
    }

    #[test]
    fn parse_round_trips_names() {
        for name in ["nfe1", "nfe2u", "nfe2n", "nfe3", "nfek", "mu", "sigma"] {
            assert_eq!(ScoreVariant::parse(name, 0.5).unwrap().name(), name);
        }
        assert!(ScoreVariant::parse("nfek", -1.0).is_err());
        assert!(ScoreVariant::parse("transe", 1.0).is_err());
    }
}
