//! One-dimensional distributions in the five closed families that appear as
//! pushforwards of the base variable, plus closed-form and quadrature
//! squared 2-Wasserstein distances between them.

use std::collections::HashMap;
use std::f64::consts::{E, PI, SQRT_2};
use std::sync::{Arc, Mutex, OnceLock};

use crate::error::{Error, Result};
use crate::special::{std_normal_cdf, std_normal_quantile};

/// `sqrt(3/4)`: cross-term weight of the two-piece uniform distance.
pub const TWO_PIECE_UNIFORM_COEF: f64 = 0.866_025_403_784_438_6;
/// `sqrt(2/pi)`: cross-term weight of the two-piece normal distance.
pub const TWO_PIECE_NORMAL_COEF: f64 = 0.797_884_560_802_865_4;

const SQRT_3: f64 = 1.732_050_807_568_877_2;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Dist1D {
    /// Dirac mass.
    Point { loc: f64 },
    Uniform { lo: f64, hi: f64 },
    Normal { mean: f64, sd: f64 },
    /// `U[lo, mid]` with mass 1/2 followed by `U[mid, hi]` with mass 1/2.
    TwoPieceUniform { lo: f64, mid: f64, hi: f64 },
    /// Half-normal of scale `sd_left` below the mean and `sd_right` above,
    /// each carrying mass 1/2.
    TwoPieceNormal {
        mean: f64,
        sd_left: f64,
        sd_right: f64,
    },
}

impl Dist1D {
    pub fn point(loc: f64) -> Result<Self> {
        Self::Point { loc }.validated()
    }

    pub fn uniform(lo: f64, hi: f64) -> Result<Self> {
        Self::Uniform { lo, hi }.validated()
    }

    pub fn normal(mean: f64, sd: f64) -> Result<Self> {
        Self::Normal { mean, sd }.validated()
    }

    pub fn two_piece_uniform(lo: f64, mid: f64, hi: f64) -> Result<Self> {
        Self::TwoPieceUniform { lo, mid, hi }.validated()
    }

    pub fn two_piece_normal(mean: f64, sd_left: f64, sd_right: f64) -> Result<Self> {
        Self::TwoPieceNormal {
            mean,
            sd_left,
            sd_right,
        }
        .validated()
    }

    /// Uniform with mean `mu` and standard deviation `scale`, i.e.
    /// `U[mu - sqrt3 scale, mu + sqrt3 scale]`.
    pub fn uniform_from_scale(mu: f64, scale: f64) -> Result<Self> {
        let w = SQRT_3 * scale.abs();
        Self::uniform(mu - w, mu + w)
    }

    /// Two-piece uniform `(mu - sqrt3 s_left, mu, mu + sqrt3 s_right)`.
    pub fn two_piece_uniform_from_scales(mu: f64, s_left: f64, s_right: f64) -> Result<Self> {
        Self::two_piece_uniform(mu - SQRT_3 * s_left.abs(), mu, mu + SQRT_3 * s_right.abs())
    }

    pub fn family(&self) -> &'static str {
        match self {
            Dist1D::Point { .. } => "point",
            Dist1D::Uniform { .. } => "uniform",
            Dist1D::Normal { .. } => "normal",
            Dist1D::TwoPieceUniform { .. } => "two-piece uniform",
            Dist1D::TwoPieceNormal { .. } => "two-piece normal",
        }
    }

    pub fn is_point(&self) -> bool {
        matches!(self, Dist1D::Point { .. })
    }

    pub fn validate(&self) -> Result<()> {
        let finite = |xs: &[f64]| xs.iter().all(|x| x.is_finite());
        let ok = match *self {
            Dist1D::Point { loc } => finite(&[loc]),
            Dist1D::Uniform { lo, hi } => finite(&[lo, hi]) && lo < hi,
            Dist1D::Normal { mean, sd } => finite(&[mean, sd]) && sd > 0.0,
            Dist1D::TwoPieceUniform { lo, mid, hi } => {
                finite(&[lo, mid, hi]) && lo <= mid && mid <= hi && lo < hi
            }
            Dist1D::TwoPieceNormal {
                mean,
                sd_left,
                sd_right,
            } => finite(&[mean, sd_left, sd_right]) && sd_left > 0.0 && sd_right > 0.0,
        };
        if ok {
            Ok(())
        } else {
            Err(Error::domain(format!("invalid {} parameters: {self:?}", self.family())))
        }
    }

    fn validated(self) -> Result<Self> {
        self.validate()?;
        Ok(self)
    }

    pub fn mean(&self) -> f64 {
        match *self {
            Dist1D::Point { loc } => loc,
            Dist1D::Uniform { lo, hi } => 0.5 * (lo + hi),
            Dist1D::Normal { mean, .. } => mean,
            Dist1D::TwoPieceUniform { lo, mid, hi } => 0.25 * (lo + 2.0 * mid + hi),
            Dist1D::TwoPieceNormal {
                mean,
                sd_left,
                sd_right,
            } => mean + (sd_right - sd_left) / (2.0 * PI).sqrt(),
        }
    }

    pub fn pdf(&self, x: f64) -> Result<f64> {
        self.validate()?;
        match *self {
            Dist1D::Point { .. } => Err(Error::UnsupportedFamily("point mass has no density")),
            Dist1D::Uniform { lo, hi } => Ok(if (lo..=hi).contains(&x) {
                1.0 / (hi - lo)
            } else {
                0.0
            }),
            Dist1D::Normal { mean, sd } => {
                let u = (x - mean) / sd;
                Ok((-0.5 * u * u).exp() / (sd * (2.0 * PI).sqrt()))
            }
            Dist1D::TwoPieceUniform { lo, mid, hi } => {
                if lo == mid || mid == hi {
                    return Err(Error::domain("two-piece uniform with an empty piece has no density"));
                }
                Ok(if (lo..=mid).contains(&x) {
                    0.5 / (mid - lo)
                } else if x > mid && x <= hi {
                    0.5 / (hi - mid)
                } else {
                    0.0
                })
            }
            Dist1D::TwoPieceNormal {
                mean,
                sd_left,
                sd_right,
            } => {
                let sd = if x < mean { sd_left } else { sd_right };
                let u = (x - mean) / sd;
                Ok((-0.5 * u * u).exp() / (sd * (2.0 * PI).sqrt()))
            }
        }
    }

    /// Natural log of the density; `-inf` outside the support.
    pub fn ln_pdf(&self, x: f64) -> Result<f64> {
        match *self {
            Dist1D::Normal { mean, sd } => {
                self.validate()?;
                let u = (x - mean) / sd;
                Ok(-0.5 * u * u - sd.ln() - 0.5 * (2.0 * PI).ln())
            }
            Dist1D::TwoPieceNormal {
                mean,
                sd_left,
                sd_right,
            } => {
                self.validate()?;
                let sd = if x < mean { sd_left } else { sd_right };
                let u = (x - mean) / sd;
                Ok(-0.5 * u * u - sd.ln() - 0.5 * (2.0 * PI).ln())
            }
            _ => Ok(self.pdf(x)?.ln()),
        }
    }

    pub fn cdf(&self, x: f64) -> f64 {
        match *self {
            Dist1D::Point { loc } => {
                if x >= loc {
                    1.0
                } else {
                    0.0
                }
            }
            Dist1D::Uniform { lo, hi } => ((x - lo) / (hi - lo)).clamp(0.0, 1.0),
            Dist1D::Normal { mean, sd } => std_normal_cdf((x - mean) / sd),
            Dist1D::TwoPieceUniform { lo, mid, hi } => {
                if x < lo {
                    0.0
                } else if x < mid {
                    0.5 * (x - lo) / (mid - lo)
                } else if x < hi {
                    0.5 + 0.5 * (x - mid) / (hi - mid)
                } else {
                    1.0
                }
            }
            Dist1D::TwoPieceNormal {
                mean,
                sd_left,
                sd_right,
            } => {
                let sd = if x < mean { sd_left } else { sd_right };
                std_normal_cdf((x - mean) / sd)
            }
        }
    }

    /// Inverse cdf on the open unit interval.
    pub fn quantile(&self, z: f64) -> Result<f64> {
        if !(z > 0.0 && z < 1.0) {
            return Err(Error::domain(format!("quantile level {z} outside (0, 1)")));
        }
        self.validate()?;
        Ok(self.quantile_with(z, std_normal_quantile))
    }

    /// Quantile with the standard normal quantile supplied by the caller, so
    /// quadrature can reuse values tabulated at its nodes.
    fn quantile_with(&self, z: f64, std_q: impl FnOnce(f64) -> f64) -> f64 {
        match *self {
            Dist1D::Point { loc } => loc,
            Dist1D::Uniform { lo, hi } => lo + z * (hi - lo),
            // mu + sqrt2 sd erf^{-1}(2z - 1)
            Dist1D::Normal { mean, sd } => mean + sd * std_q(z),
            Dist1D::TwoPieceUniform { lo, mid, hi } => {
                if z <= 0.5 {
                    lo + 2.0 * z * (mid - lo)
                } else {
                    mid + (2.0 * z - 1.0) * (hi - mid)
                }
            }
            Dist1D::TwoPieceNormal {
                mean,
                sd_left,
                sd_right,
            } => {
                let sd = if z < 0.5 { sd_left } else { sd_right };
                mean + sd * std_q(z)
            }
        }
    }

    /// Inverse-transform sample driven by the uniform variate `u`.
    pub fn sample(&self, u: f64) -> Result<f64> {
        self.quantile(u)
    }

    /// Closed-form differential entropy in nats.
    pub fn entropy(&self) -> Result<f64> {
        self.validate()?;
        match *self {
            Dist1D::Point { .. } => Err(Error::UnsupportedFamily(
                "point mass has entropy -inf",
            )),
            Dist1D::Uniform { lo, hi } => Ok((hi - lo).ln()),
            Dist1D::Normal { sd, .. } => Ok(0.5 * (2.0 * PI * E * sd * sd).ln()),
            Dist1D::TwoPieceUniform { lo, mid, hi } => {
                if lo == mid || mid == hi {
                    return Err(Error::domain("two-piece uniform with an empty piece"));
                }
                Ok(0.5 * (2.0 * (mid - lo)).ln() + 0.5 * (2.0 * (hi - mid)).ln())
            }
            Dist1D::TwoPieceNormal {
                sd_left, sd_right, ..
            } => Ok(0.5 * (2.0 * PI * E * sd_left * sd_right).ln()),
        }
    }
}

/// Squared 2-Wasserstein distance between two distributions of the same
/// family, in closed form.
pub fn w2_closed(p: &Dist1D, q: &Dist1D) -> Result<f64> {
    p.validate()?;
    q.validate()?;
    let d = match (*p, *q) {
        (Dist1D::Point { loc: a }, Dist1D::Point { loc: b }) => (a - b) * (a - b),
        (Dist1D::Uniform { lo: l1, hi: h1 }, Dist1D::Uniform { lo: l2, hi: h2 }) => {
            // integral of (dlo + z dw)^2 over [0,1]
            let dlo = l1 - l2;
            let dw = (h1 - l1) - (h2 - l2);
            dlo * dlo + dlo * dw + dw * dw / 3.0
        }
        (Dist1D::Normal { mean: m1, sd: s1 }, Dist1D::Normal { mean: m2, sd: s2 }) => {
            (m1 - m2).powi(2) + (s1 - s2).powi(2)
        }
        (
            Dist1D::TwoPieceUniform {
                lo: a1,
                mid: b1,
                hi: c1,
            },
            Dist1D::TwoPieceUniform {
                lo: a2,
                mid: b2,
                hi: c2,
            },
        ) => {
            let (da, db, dc) = (a1 - a2, b1 - b2, c1 - c2);
            (da * da + 2.0 * db * db + dc * dc + db * (da + dc)) / 6.0
        }
        (
            Dist1D::TwoPieceNormal {
                mean: m1,
                sd_left: l1,
                sd_right: r1,
            },
            Dist1D::TwoPieceNormal {
                mean: m2,
                sd_left: l2,
                sd_right: r2,
            },
        ) => {
            let (dm, dl, dr) = (m1 - m2, l1 - l2, r1 - r2);
            dm * dm + 0.5 * dl * dl + 0.5 * dr * dr + TWO_PIECE_NORMAL_COEF * dm * (dr - dl)
        }
        _ => {
            return Err(Error::FamilyMismatch {
                left: p.family(),
                right: q.family(),
            })
        }
    };
    Ok(d.max(0.0))
}

/// Nodes and weights for integrals of the form `int_0^1 g(F^{-1}(z)) dz`.
///
/// Each half of the unit interval gets a midpoint rule in a variable `u`
/// mapped through `z = u - sin(2 pi u)/(2 pi)`, whose Jacobian vanishes
/// quadratically at both ends of the half. That absorbs the logarithmic
/// endpoint growth of normal quantiles and puts a node boundary exactly on
/// the `z = 1/2` break of the two-piece families.
#[derive(Debug)]
pub struct InverseCdfRule {
    nodes: Vec<f64>,
    weights: Vec<f64>,
    std_normal_q: Vec<f64>,
}

impl InverseCdfRule {
    pub fn new(n_points: usize) -> Result<Self> {
        if n_points < 4 {
            return Err(Error::domain(format!("quadrature needs at least 4 nodes, got {n_points}")));
        }
        let left = n_points / 2;
        let mut nodes = Vec::with_capacity(n_points);
        let mut weights = Vec::with_capacity(n_points);
        for (offset, k) in [(0.0, left), (0.5, n_points - left)] {
            let kf = k as f64;
            for j in 0..k {
                let u = (j as f64 + 0.5) / kf;
                let t = u - (2.0 * PI * u).sin() / (2.0 * PI);
                nodes.push(offset + 0.5 * t);
                weights.push((1.0 - (2.0 * PI * u).cos()) / (2.0 * kf));
            }
        }
        let std_normal_q = nodes.iter().map(|&z| std_normal_quantile(z)).collect();
        Ok(Self {
            nodes,
            weights,
            std_normal_q,
        })
    }

    /// Shared rule for `n_points`, built once per size.
    pub fn cached(n_points: usize) -> Result<Arc<Self>> {
        static CACHE: OnceLock<Mutex<HashMap<usize, Arc<InverseCdfRule>>>> = OnceLock::new();
        let cache = CACHE.get_or_init(Default::default);
        if let Some(rule) = cache.lock().expect("rule cache poisoned").get(&n_points) {
            return Ok(Arc::clone(rule));
        }
        let rule = Arc::new(Self::new(n_points)?);
        cache
            .lock()
            .expect("rule cache poisoned")
            .insert(n_points, Arc::clone(&rule));
        Ok(rule)
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// `F^{-1}` of `d` at node `k`.
    pub fn quantile_at(&self, d: &Dist1D, k: usize) -> f64 {
        d.quantile_with(self.nodes[k], |_| self.std_normal_q[k])
    }

    /// `sum_k w_k g(z_k, F^{-1}(z_k))`.
    pub fn integrate(&self, d: &Dist1D, mut g: impl FnMut(f64, f64) -> f64) -> f64 {
        (0..self.len())
            .map(|k| self.weights[k] * g(self.nodes[k], self.quantile_at(d, k)))
            .sum()
    }
}

/// Squared 2-Wasserstein distance by quadrature of
/// `int_0^1 (F^{-1}(z) - G^{-1}(z))^2 dz`. Works across families and serves
/// as the reference for [`w2_closed`].
pub fn w2_quadrature(p: &Dist1D, q: &Dist1D, n_points: usize) -> Result<f64> {
    if n_points < 64 {
        return Err(Error::domain(format!("w2 quadrature needs n_points >= 64, got {n_points}")));
    }
    p.validate()?;
    q.validate()?;
    if p.is_point() != q.is_point() {
        return Err(Error::domain(
            "w2 quadrature between a point mass and a continuous law is not supported",
        ));
    }
    let rule = InverseCdfRule::cached(n_points)?;
    let total: f64 = (0..rule.len())
        .map(|k| {
            let d = rule.quantile_at(p, k) - rule.quantile_at(q, k);
            rule.weights[k] * d * d
        })
        .sum();
    Ok(total)
}

/// Closed-form `KL(p || q)` for two normals.
pub fn kl_normal(p: &Dist1D, q: &Dist1D) -> Result<f64> {
    match (*p, *q) {
        (Dist1D::Normal { mean: mp, sd: sp }, Dist1D::Normal { mean: mq, sd: sq }) => {
            if !(sp > 0.0 && sq > 0.0) {
                return Err(Error::domain("KL needs positive standard deviations"));
            }
            Ok((sq / sp).ln() + (sp * sp + (mp - mq).powi(2)) / (2.0 * sq * sq) - 0.5)
        }
        _ => Err(Error::FamilyMismatch {
            left: p.family(),
            right: q.family(),
        }),
    }
}

/// `KL(p || q) = int_0^1 [ln p(F^{-1}(z)) - ln q(F^{-1}(z))] dz` by quadrature.
/// Returns `+inf` when `p` puts mass where `q` has none.
pub fn kl_quadrature(p: &Dist1D, q: &Dist1D, n_points: usize) -> Result<f64> {
    if p.is_point() || q.is_point() {
        return Err(Error::UnsupportedFamily("KL needs densities"));
    }
    let rule = InverseCdfRule::cached(n_points)?;
    let mut total = 0.0;
    for k in 0..rule.len() {
        let x = rule.quantile_at(p, k);
        let lq = q.ln_pdf(x)?;
        if lq == f64::NEG_INFINITY {
            return Ok(f64::INFINITY);
        }
        total += rule.weights[k] * (p.ln_pdf(x)? - lq);
    }
    Ok(total)
}

/// `sqrt(2) * sd * erf^{-1}(2z - 1) + mean`, the pushforward of `U[0,1]`
/// onto `N(mean, sd^2)`.
pub fn push_uniform_to_normal(mean: f64, sd: f64, z: f64) -> Result<f64> {
    if !(z > 0.0 && z < 1.0) {
        return Err(Error::domain(format!("{z} outside (0, 1)")));
    }
    Ok(mean + SQRT_2 * sd * crate::special::erf_inv(2.0 * z - 1.0))
}
