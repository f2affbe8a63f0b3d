//! Elementwise invertible maps (affine and two-piece linear), their
//! composition, and the closed-family pushforward of the base variable.

use crate::dist1d::Dist1D;
use crate::error::{Error, Result};

const SQRT_3: f64 = 1.732_050_807_568_877_2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum FlowKind {
    /// `x -> sigma * x + mu`
    Affine,
    /// `x -> sigma_left * x + mu` for `x <= 0`, `sigma_right * x + mu` for `x > 0`
    TwoPiece,
}

impl FlowKind {
    pub fn name(self) -> &'static str {
        match self {
            FlowKind::Affine => "affine",
            FlowKind::TwoPiece => "two-piece",
        }
    }
}

/// Parameters of one entity or relation flow. Slopes are stored signed.
#[derive(Debug, Clone, PartialEq)]
pub enum FlowParams {
    Affine {
        mu: Vec<f64>,
        sigma: Vec<f64>,
    },
    TwoPiece {
        mu: Vec<f64>,
        sigma_left: Vec<f64>,
        sigma_right: Vec<f64>,
    },
}

/// Borrowed view of a flow. For affine flows both slope slices alias `sigma`.
#[derive(Debug, Clone, Copy)]
pub struct FlowView<'a> {
    pub kind: FlowKind,
    pub mu: &'a [f64],
    pub sigma_left: &'a [f64],
    pub sigma_right: &'a [f64],
}

impl<'a> FlowView<'a> {
    pub fn dim(&self) -> usize {
        self.mu.len()
    }

    pub fn to_owned(&self) -> FlowParams {
        match self.kind {
            FlowKind::Affine => FlowParams::Affine {
                mu: self.mu.to_vec(),
                sigma: self.sigma_left.to_vec(),
            },
            FlowKind::TwoPiece => FlowParams::TwoPiece {
                mu: self.mu.to_vec(),
                sigma_left: self.sigma_left.to_vec(),
                sigma_right: self.sigma_right.to_vec(),
            },
        }
    }

    #[inline]
    fn slope(&self, i: usize, x: f64) -> f64 {
        if x <= 0.0 {
            self.sigma_left[i]
        } else {
            self.sigma_right[i]
        }
    }
}

impl FlowParams {
    pub fn affine(mu: Vec<f64>, sigma: Vec<f64>) -> Result<Self> {
        check_len(mu.len(), sigma.len())?;
        Ok(FlowParams::Affine { mu, sigma })
    }

    pub fn two_piece(mu: Vec<f64>, sigma_left: Vec<f64>, sigma_right: Vec<f64>) -> Result<Self> {
        check_len(mu.len(), sigma_left.len())?;
        check_len(mu.len(), sigma_right.len())?;
        Ok(FlowParams::TwoPiece {
            mu,
            sigma_left,
            sigma_right,
        })
    }

    pub fn identity_affine(n: usize) -> Self {
        FlowParams::Affine {
            mu: vec![0.0; n],
            sigma: vec![1.0; n],
        }
    }

    pub fn identity_two_piece(n: usize) -> Self {
        FlowParams::TwoPiece {
            mu: vec![0.0; n],
            sigma_left: vec![1.0; n],
            sigma_right: vec![1.0; n],
        }
    }

    /// Zero-valued parameters with the same shape, used for gradients.
    pub fn zeros_like(&self) -> Self {
        match self {
            FlowParams::Affine { mu, .. } => FlowParams::Affine {
                mu: vec![0.0; mu.len()],
                sigma: vec![0.0; mu.len()],
            },
            FlowParams::TwoPiece { mu, .. } => FlowParams::TwoPiece {
                mu: vec![0.0; mu.len()],
                sigma_left: vec![0.0; mu.len()],
                sigma_right: vec![0.0; mu.len()],
            },
        }
    }

    pub fn kind(&self) -> FlowKind {
        match self {
            FlowParams::Affine { .. } => FlowKind::Affine,
            FlowParams::TwoPiece { .. } => FlowKind::TwoPiece,
        }
    }

    pub fn dim(&self) -> usize {
        self.mu().len()
    }

    pub fn mu(&self) -> &[f64] {
        match self {
            FlowParams::Affine { mu, .. } | FlowParams::TwoPiece { mu, .. } => mu,
        }
    }

    pub fn view(&self) -> FlowView<'_> {
        match self {
            FlowParams::Affine { mu, sigma } => FlowView {
                kind: FlowKind::Affine,
                mu,
                sigma_left: sigma,
                sigma_right: sigma,
            },
            FlowParams::TwoPiece {
                mu,
                sigma_left,
                sigma_right,
            } => FlowView {
                kind: FlowKind::TwoPiece,
                mu,
                sigma_left,
                sigma_right,
            },
        }
    }

    /// All parameter blocks in a fixed order (`mu`, then slopes).
    pub fn blocks(&self) -> Vec<&[f64]> {
        match self {
            FlowParams::Affine { mu, sigma } => vec![mu, sigma],
            FlowParams::TwoPiece {
                mu,
                sigma_left,
                sigma_right,
            } => vec![mu, sigma_left, sigma_right],
        }
    }

    pub fn blocks_mut(&mut self) -> Vec<&mut [f64]> {
        match self {
            FlowParams::Affine { mu, sigma } => vec![mu, sigma],
            FlowParams::TwoPiece {
                mu,
                sigma_left,
                sigma_right,
            } => vec![mu, sigma_left, sigma_right],
        }
    }

    /// Affine flows need nonzero slopes; two-piece flows need both slopes of
    /// each dimension nonzero with a common sign.
    pub fn check_invertible(&self) -> Result<()> {
        check_invertible(&self.view())
    }

    pub fn apply(&self, x: &[f64]) -> Result<Vec<f64>> {
        let f = self.view();
        check_len(f.dim(), x.len())?;
        Ok(x
            .iter()
            .enumerate()
            .map(|(i, &xi)| f.slope(i, xi) * xi + f.mu[i])
            .collect())
    }

    pub fn invert(&self, y: &[f64]) -> Result<Vec<f64>> {
        let f = self.view();
        check_len(f.dim(), y.len())?;
        check_invertible(&f)?;
        Ok(y
            .iter()
            .enumerate()
            .map(|(i, &yi)| {
                let d = yi - f.mu[i];
                // both slopes share a sign, so the side of the break is the
                // side of d / slope
                let left = d / f.sigma_left[i];
                if left <= 0.0 {
                    left
                } else {
                    d / f.sigma_right[i]
                }
            })
            .collect())
    }

    /// `sum_i ln |slope_i(x_i)|`.
    pub fn log_abs_det_jacobian(&self, x: &[f64]) -> Result<f64> {
        let f = self.view();
        check_len(f.dim(), x.len())?;
        check_invertible(&f)?;
        Ok(x
            .iter()
            .enumerate()
            .map(|(i, &xi)| f.slope(i, xi).abs().ln())
            .sum())
    }

    /// Law of coordinate `i` of `f(x0)` for `x0` drawn from `base`.
    ///
    /// Widths and scales use `|sigma|`, so a two-piece flow maps onto the
    /// family whose left half has scale `|sigma_left|` and right half
    /// `|sigma_right|`.
    pub fn pushforward(&self, base: BaseDist, i: usize) -> Result<Dist1D> {
        let f = self.view();
        if i >= f.dim() {
            return Err(Error::IndexOutOfRange {
                what: "flow dimension",
                index: i,
                size: f.dim(),
            });
        }
        check_invertible_at(&f, i)?;
        base.validate()?;
        let (mu, mut sl, mut sr) = (f.mu[i], f.sigma_left[i].abs(), f.sigma_right[i].abs());
        // a decreasing flow maps the left half of the base to the right
        if f.sigma_left[i] < 0.0 {
            std::mem::swap(&mut sl, &mut sr);
        }
        match (f.kind, base) {
            (_, BaseDist::DiracScaled { k }) if k.is_infinite() => Dist1D::point(mu),
            (FlowKind::Affine, BaseDist::Uniform) => Dist1D::uniform_from_scale(mu, sl),
            (FlowKind::Affine, BaseDist::Normal) => Dist1D::normal(mu, sl),
            (FlowKind::Affine, BaseDist::DiracScaled { k }) => Dist1D::normal(mu, sl / k),
            (FlowKind::TwoPiece, BaseDist::Uniform) => {
                Dist1D::two_piece_uniform(mu - SQRT_3 * sl, mu, mu + SQRT_3 * sr)
            }
            (FlowKind::TwoPiece, BaseDist::Normal) => Dist1D::two_piece_normal(mu, sl, sr),
            (FlowKind::TwoPiece, BaseDist::DiracScaled { k }) => {
                Dist1D::two_piece_normal(mu, sl / k, sr / k)
            }
        }
    }
}

/// `r ∘ h` for two affine flows: slope `r_sigma * h_sigma`, offset
/// `r_sigma * h_mu + r_mu`.
pub fn compose_affine_affine(r: &FlowParams, h: &FlowParams) -> Result<FlowParams> {
    let (r_mu, r_sigma) = expect_affine(r)?;
    let (h_mu, h_sigma) = expect_affine(h)?;
    check_len(r_mu.len(), h_mu.len())?;
    Ok(FlowParams::Affine {
        mu: composed_offset(r_mu, r_sigma, h_mu),
        sigma: r_sigma.iter().zip(h_sigma).map(|(a, b)| a * b).collect(),
    })
}

/// `r ∘ h` for affine `r` and two-piece `h`. The break stays at `x = 0` in
/// base coordinates.
pub fn compose_affine_twopiece(r: &FlowParams, h: &FlowParams) -> Result<FlowParams> {
    let (r_mu, r_sigma) = expect_affine(r)?;
    let FlowParams::TwoPiece {
        mu: h_mu,
        sigma_left,
        sigma_right,
    } = h
    else {
        return Err(Error::WrongFlowKind {
            expected: FlowKind::TwoPiece.name(),
            got: h.kind().name(),
        });
    };
    check_len(r_mu.len(), h_mu.len())?;
    Ok(FlowParams::TwoPiece {
        mu: composed_offset(r_mu, r_sigma, h_mu),
        sigma_left: r_sigma.iter().zip(sigma_left).map(|(a, b)| a * b).collect(),
        sigma_right: r_sigma.iter().zip(sigma_right).map(|(a, b)| a * b).collect(),
    })
}

/// `r ∘ h` for an affine relation flow and either kind of entity flow.
pub fn compose(r: &FlowParams, h: &FlowParams) -> Result<FlowParams> {
    match h.kind() {
        FlowKind::Affine => compose_affine_affine(r, h),
        FlowKind::TwoPiece => compose_affine_twopiece(r, h),
    }
}

fn composed_offset(r_mu: &[f64], r_sigma: &[f64], h_mu: &[f64]) -> Vec<f64> {
    r_sigma
        .iter()
        .zip(h_mu)
        .zip(r_mu)
        .map(|((s, hm), rm)| s * hm + rm)
        .collect()
}

fn expect_affine(f: &FlowParams) -> Result<(&[f64], &[f64])> {
    match f {
        FlowParams::Affine { mu, sigma } => Ok((mu, sigma)),
        other => Err(Error::WrongFlowKind {
            expected: FlowKind::Affine.name(),
            got: other.kind().name(),
        }),
    }
}

fn check_len(expected: usize, got: usize) -> Result<()> {
    if expected == got {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { expected, got })
    }
}

fn check_invertible_at(f: &FlowView<'_>, i: usize) -> Result<()> {
    let (a, b) = (f.sigma_left[i], f.sigma_right[i]);
    let ok = match f.kind {
        FlowKind::Affine => a != 0.0 && a.is_finite(),
        FlowKind::TwoPiece => a * b > 0.0 && a.is_finite() && b.is_finite(),
    };
    if ok {
        Ok(())
    } else {
        Err(Error::NotInvertible(format!(
            "{} flow slope(s) ({a}, {b}) at dimension {i}",
            f.kind.name()
        )))
    }
}

pub(crate) fn check_invertible(f: &FlowView<'_>) -> Result<()> {
    (0..f.dim()).try_for_each(|i| check_invertible_at(f, i))
}

/// Law of the base variable `x0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BaseDist {
    /// `U[-sqrt3, sqrt3]^n`, zero mean and unit variance.
    Uniform,
    /// `N(0, I)`.
    Normal,
    /// `N(0, I / k^2)`; `k = inf` is the Dirac mass at the origin.
    DiracScaled { k: f64 },
}

impl BaseDist {
    /// Scaled base whose squared width is `inv_k_sq = 1/k^2`.
    pub fn from_inv_k_sq(inv_k_sq: f64) -> Result<Self> {
        if !(inv_k_sq >= 0.0 && inv_k_sq.is_finite()) {
            return Err(Error::domain(format!("1/k^2 must be finite and >= 0, got {inv_k_sq}")));
        }
        let k = if inv_k_sq == 0.0 {
            f64::INFINITY
        } else {
            1.0 / inv_k_sq.sqrt()
        };
        Ok(BaseDist::DiracScaled { k })
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            BaseDist::DiracScaled { k } if !(k > 0.0) => {
                Err(Error::domain(format!("scaled base needs k > 0, got {k}")))
            }
            _ => Ok(()),
        }
    }

    /// One coordinate of the base variable as a [`Dist1D`].
    pub fn marginal(&self) -> Result<Dist1D> {
        self.validate()?;
        match *self {
            BaseDist::Uniform => Dist1D::uniform(-SQRT_3, SQRT_3),
            BaseDist::Normal => Dist1D::normal(0.0, 1.0),
            BaseDist::DiracScaled { k } if k.is_infinite() => Dist1D::point(0.0),
            BaseDist::DiracScaled { k } => Dist1D::normal(0.0, 1.0 / k),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            BaseDist::Uniform => "uniform",
            BaseDist::Normal => "normal",
            BaseDist::DiracScaled { .. } => "dirac-scaled",
        }
    }
}
