//! Perturbation schemes, their exact perturbed densities, and total-variation
//! estimates.
//!
//! Every scheme moves a base point `x` along a straight line
//! `y(u) = x + s(u)·w`, `u ∈ [0, 1]`, where `w` depends only on the base draw.
//! For all but the simplex scheme `s(u) = u·r`; the simplex renormalization
//! gives `s(u) = u r / (P + u r Q)`.

mod highp;
mod pair;
mod product;
mod tv;

pub use highp::{density_highp, signs, DensityMode, HighPScheme, MAX_EXACT_ACTIVE};
pub use pair::{g_pair, mean_inverse_pair_jacobian, pair_jacobian, LowPScheme, PairMap, PairPartials};
pub use product::{density_1d_perturbed, g_of, Perturbed1d};
pub use tv::{gaussian_radial_tv, tv_estimate, TvEstimate, DELTA_SAMPLES};

pub(crate) use product::invert_shift;

use crate::error::{invalid, Error, Result};
use crate::geom::{BumpFn, LpBall};
use crate::samplers::{
    sample_simplex_draw, simplex_scale, Component1d, ProductMeasure, TiltedProduct,
};
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

/// The tilted product scheme `Y_i = X_i + r u δ_i φ(X_i)`, `X` drawn from the
/// `R`-tilted product.
#[derive(Clone, Debug)]
pub struct ProductScheme {
    pub mu: ProductMeasure,
    pub r: f64,
    pub r_tilt: f64,
    pub phi: BumpFn,
    tilted: TiltedProduct,
}

impl ProductScheme {
    pub fn new(mu: ProductMeasure, r: f64, r_tilt: f64, phi: BumpFn) -> Result<Self> {
        if r.abs() > 1.0 || r_tilt.abs() > 1.0 {
            return Err(invalid(format!("need |r|, |R| <= 1, got r={r}, R={r_tilt}")));
        }
        if r.abs() * phi.max_abs(1) >= 1.0 {
            return Err(Error::NotMonotone(r));
        }
        let tilted = TiltedProduct::new(&mu, r_tilt, phi)?;
        Ok(Self {
            mu,
            r,
            r_tilt,
            phi,
            tilted,
        })
    }

    pub fn tilted(&self) -> &TiltedProduct {
        &self.tilted
    }

    /// The one-coordinate perturbed law of `component`.
    pub fn coordinate_law(&self, component: Component1d) -> Result<Perturbed1d> {
        Perturbed1d::new(component, self.r, self.r_tilt, self.phi)
    }
}

/// The simplex scheme: `f_i = g_i + u r ψ(g_i) δ_i`, renormalized with the
/// same `Z` that generated the base point.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SimplexScheme {
    pub n: usize,
    pub r: f64,
    pub psi: BumpFn,
}

impl SimplexScheme {
    pub fn new(n: usize, r: f64, psi: BumpFn) -> Result<Self> {
        if n == 0 {
            return Err(invalid("simplex scheme needs n >= 1"));
        }
        if !(r >= 0.0) {
            return Err(invalid(format!("need r >= 0, got {r}")));
        }
        if r * psi.max_abs(1) >= 1.0 {
            return Err(Error::NotMonotone(r));
        }
        Ok(Self { n, r, psi })
    }
}

/// `Y = X + u r W` with `X`, `W` independent standard Gaussians. With `r = 1`
/// and `u` uniform this is the law of the Gaussian mixture `X + UY`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GaussianShiftScheme {
    pub n: usize,
    pub r: f64,
}

impl GaussianShiftScheme {
    pub fn new(n: usize, r: f64) -> Result<Self> {
        if n == 0 || !(r >= 0.0) {
            return Err(invalid(format!("need n >= 1 and r >= 0, got n={n}, r={r}")));
        }
        Ok(Self { n, r })
    }
}

/// Serializable parameters of a scheme; [`SchemeSpec::build`] recreates it.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SchemeSpec {
    Product {
        mu: ProductMeasure,
        r: f64,
        r_tilt: f64,
        phi: BumpFn,
    },
    HighP(HighPScheme),
    LowP(LowPScheme),
    Simplex(SimplexScheme),
    GaussianShift(GaussianShiftScheme),
}

impl SchemeSpec {
    pub fn build(&self) -> Result<PerturbationScheme> {
        Ok(match self {
            Self::Product { mu, r, r_tilt, phi } => {
                PerturbationScheme::Product(ProductScheme::new(mu.clone(), *r, *r_tilt, *phi)?)
            }
            Self::HighP(s) => {
                PerturbationScheme::HighP(HighPScheme::relaxed(s.ball, s.r, s.big_r, s.psi)?)
            }
            Self::LowP(s) => PerturbationScheme::LowP(LowPScheme::relaxed(s.ball, s.map)?),
            Self::Simplex(s) => PerturbationScheme::Simplex(SimplexScheme::new(s.n, s.r, s.psi)?),
            Self::GaussianShift(s) => {
                PerturbationScheme::GaussianShift(GaussianShiftScheme::new(s.n, s.r)?)
            }
        })
    }
}

/// The five perturbation schemes.
#[derive(Clone, Debug)]
pub enum PerturbationScheme {
    Product(ProductScheme),
    HighP(HighPScheme),
    LowP(LowPScheme),
    Simplex(SimplexScheme),
    GaussianShift(GaussianShiftScheme),
}

/// Scheme-specific randomness kept alongside the base point.
#[derive(Clone, Debug, PartialEq)]
pub enum BaseExtra {
    None,
    /// Exponential draws and the extra exponential behind a simplex point.
    Simplex { g: Vec<f64>, z: f64 },
    /// The Gaussian direction.
    Shift { w: Vec<f64> },
}

/// A base point with its sign vector.
#[derive(Clone, Debug, PartialEq)]
pub struct BaseDraw {
    pub x: Vec<f64>,
    pub delta: Vec<f64>,
    pub extra: BaseExtra,
}

impl BaseDraw {
    pub fn new(x: Vec<f64>, delta: Vec<f64>) -> Self {
        Self {
            x,
            delta,
            extra: BaseExtra::None,
        }
    }
}

/// Reparametrization `u ↦ s(u)` of a perturbation path.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PathScale {
    /// `s(u) = u r`.
    Linear { r: f64 },
    /// `s(u) = u r / (P + u r Q)`.
    Simplex { r: f64, p: f64, q: f64 },
}

impl PathScale {
    pub fn at(&self, u: f64) -> f64 {
        match *self {
            Self::Linear { r } => u * r,
            Self::Simplex { r, p, q } => u * r / (p + u * r * q),
        }
    }
}

/// `y(u) = origin + s(u)·direction`.
#[derive(Clone, Debug, PartialEq)]
pub struct PerturbPath {
    pub origin: Vec<f64>,
    pub direction: Vec<f64>,
    pub scale: PathScale,
}

impl PerturbPath {
    pub fn point(&self, u: f64) -> Vec<f64> {
        let s = self.scale.at(u);
        self.origin
            .iter()
            .zip(&self.direction)
            .map(|(x, w)| x + s * w)
            .collect()
    }
}

impl PerturbationScheme {
    pub fn n(&self) -> usize {
        match self {
            Self::Product(s) => s.mu.n(),
            Self::HighP(s) => s.n(),
            Self::LowP(s) => s.n(),
            Self::Simplex(s) => s.n,
            Self::GaussianShift(s) => s.n,
        }
    }

    pub fn r(&self) -> f64 {
        match self {
            Self::Product(s) => s.r,
            Self::HighP(s) => s.r,
            Self::LowP(s) => s.map.r,
            Self::Simplex(s) => s.r,
            Self::GaussianShift(s) => s.r,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Self::Product(_) => "product",
            Self::HighP(_) => "high_p",
            Self::LowP(_) => "low_p",
            Self::Simplex(_) => "simplex",
            Self::GaussianShift(_) => "gaussian_shift",
        }
    }

    pub fn spec(&self) -> SchemeSpec {
        match self {
            Self::Product(s) => SchemeSpec::Product {
                mu: s.mu.clone(),
                r: s.r,
                r_tilt: s.r_tilt,
                phi: s.phi,
            },
            Self::HighP(s) => SchemeSpec::HighP(s.clone()),
            Self::LowP(s) => SchemeSpec::LowP(s.clone()),
            Self::Simplex(s) => SchemeSpec::Simplex(s.clone()),
            Self::GaussianShift(s) => SchemeSpec::GaussianShift(s.clone()),
        }
    }

    /// Length of the sign vector.
    pub fn delta_len(&self) -> usize {
        match self {
            Self::LowP(s) => s.pairs(),
            Self::GaussianShift(_) => 0,
            _ => self.n(),
        }
    }

    /// The ambient body whose uniform law is the base measure, if any.
    pub fn ball(&self) -> Option<LpBall> {
        match self {
            Self::HighP(s) => Some(s.ball),
            Self::LowP(s) => Some(s.ball),
            _ => None,
        }
    }

    /// Draws the base point, its sign vector, and any auxiliary randomness.
    pub fn draw_base<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<BaseDraw> {
        Ok(match self {
            Self::Product(s) => {
                let x = s.tilted.sample(rng)?;
                BaseDraw::new(x, signs(s.mu.n(), rng))
            }
            Self::HighP(s) => {
                let x = s.ball.sample(rng);
                BaseDraw::new(x, signs(s.n(), rng))
            }
            Self::LowP(s) => {
                let x = s.ball.sample(rng);
                BaseDraw::new(x, signs(s.pairs(), rng))
            }
            Self::Simplex(s) => {
                let d = sample_simplex_draw(s.n, rng);
                BaseDraw {
                    x: d.x,
                    delta: signs(s.n, rng),
                    extra: BaseExtra::Simplex { g: d.g, z: d.z },
                }
            }
            Self::GaussianShift(s) => {
                let x: Vec<f64> = (0..s.n).map(|_| StandardNormal.sample(rng)).collect();
                let w: Vec<f64> = (0..s.n).map(|_| StandardNormal.sample(rng)).collect();
                BaseDraw {
                    x,
                    delta: Vec::new(),
                    extra: BaseExtra::Shift { w },
                }
            }
        })
    }

    fn check(&self, base: &BaseDraw) -> Result<()> {
        if base.x.len() != self.n() || base.delta.len() != self.delta_len() {
            return Err(invalid(format!(
                "{} scheme expects x of length {} and delta of length {}",
                self.name(),
                self.n(),
                self.delta_len()
            )));
        }
        Ok(())
    }

    /// The perturbation path through `base.x`.
    pub fn path(&self, base: &BaseDraw) -> Result<PerturbPath> {
        self.check(base)?;
        let x = base.x.clone();
        Ok(match self {
            Self::Product(s) => PerturbPath {
                direction: x
                    .iter()
                    .zip(&base.delta)
                    .map(|(v, d)| d * s.phi.value(*v))
                    .collect(),
                origin: x,
                scale: PathScale::Linear { r: s.r },
            },
            Self::HighP(s) => PerturbPath {
                direction: s.direction(&x, &base.delta),
                origin: x,
                scale: PathScale::Linear { r: s.r },
            },
            Self::LowP(s) => PerturbPath {
                direction: s.direction(&x, &base.delta),
                origin: x,
                scale: PathScale::Linear { r: s.map.r },
            },
            Self::Simplex(s) => {
                let BaseExtra::Simplex { g, z } = &base.extra else {
                    return Err(invalid("simplex scheme needs the exponential draws"));
                };
                let k = simplex_scale(s.n);
                let p = (z + g.iter().sum::<f64>()) / k;
                let q = g
                    .iter()
                    .zip(&base.delta)
                    .map(|(gi, d)| s.psi.value(*gi) * d)
                    .sum::<f64>()
                    / k;
                let direction = g
                    .iter()
                    .zip(&base.delta)
                    .map(|(gi, d)| s.psi.value(*gi) * d - q / p * gi)
                    .collect();
                PerturbPath {
                    origin: x,
                    direction,
                    scale: PathScale::Simplex { r: s.r, p, q },
                }
            }
            Self::GaussianShift(s) => {
                let BaseExtra::Shift { w } = &base.extra else {
                    return Err(invalid("Gaussian shift needs its direction"));
                };
                PerturbPath {
                    origin: x,
                    direction: w.clone(),
                    scale: PathScale::Linear { r: s.r },
                }
            }
        })
    }

    /// The perturbed point at `u ∈ [0, 1]`, computed from the defining
    /// coordinate formulas.
    pub fn apply(&self, base: &BaseDraw, u: f64) -> Result<Vec<f64>> {
        self.check(base)?;
        let x = &base.x;
        Ok(match self {
            Self::Product(s) => x
                .iter()
                .zip(&base.delta)
                .map(|(v, d)| v + s.r * u * d * s.phi.value(*v))
                .collect(),
            Self::HighP(s) => s.apply(x, &base.delta, u),
            Self::LowP(s) => s.apply(x, &base.delta, u),
            Self::Simplex(s) => {
                let BaseExtra::Simplex { g, z } = &base.extra else {
                    return Err(invalid("simplex scheme needs the exponential draws"));
                };
                let f: Vec<f64> = g
                    .iter()
                    .zip(&base.delta)
                    .map(|(gi, d)| gi + u * s.r * s.psi.value(*gi) * d)
                    .collect();
                let denom = z + f.iter().sum::<f64>();
                let k = simplex_scale(s.n);
                f.iter().map(|v| k * v / denom).collect()
            }
            Self::GaussianShift(_) => self.path(base)?.point(u),
        })
    }

    /// Recovers the base point from `apply(base, u)` using only the signs and
    /// auxiliary draws in `base`.
    pub fn invert(&self, y: &[f64], base: &BaseDraw, u: f64) -> Result<Vec<f64>> {
        if y.len() != self.n() {
            return Err(invalid("dimension mismatch"));
        }
        match self {
            Self::Product(s) => {
                let amp = s.phi.max_abs(0);
                Ok(y.iter()
                    .zip(&base.delta)
                    .map(|(v, d)| {
                        invert_shift(*v, s.r * u * d, amp, |x| {
                            let e = s.phi.derivs(x);
                            (e[0], e[1])
                        })
                    })
                    .collect())
            }
            Self::HighP(s) => Ok(s.invert(y, &base.delta, u)),
            Self::LowP(s) => s.invert(y, &base.delta, u),
            Self::Simplex(s) => {
                let BaseExtra::Simplex { z, .. } = &base.extra else {
                    return Err(invalid("simplex scheme needs the exponential draws"));
                };
                let k = simplex_scale(s.n);
                let sy: f64 = y.iter().sum();
                let total = z * sy / (k - sy);
                let amp = s.psi.max_abs(0);
                let g: Vec<f64> = y
                    .iter()
                    .zip(&base.delta)
                    .map(|(v, d)| {
                        invert_shift(v * (z + total) / k, u * s.r * d, amp, |t| {
                            let e = s.psi.derivs(t);
                            (e[0], e[1])
                        })
                    })
                    .collect();
                let denom = z + g.iter().sum::<f64>();
                Ok(g.iter().map(|v| k * v / denom).collect())
            }
            Self::GaussianShift(s) => {
                let BaseExtra::Shift { w } = &base.extra else {
                    return Err(invalid("Gaussian shift needs its direction"));
                };
                Ok(y.iter().zip(w).map(|(v, wi)| v - u * s.r * wi).collect())
            }
        }
    }
}

/// `apply` for schemes whose base is `(x, δ)` alone.
pub fn apply_scheme(
    scheme: &PerturbationScheme,
    x: &[f64],
    delta: &[f64],
    u: f64,
) -> Result<Vec<f64>> {
    if matches!(
        scheme,
        PerturbationScheme::Simplex(_) | PerturbationScheme::GaussianShift(_)
    ) {
        return Err(invalid(format!(
            "{} scheme needs a full base draw",
            scheme.name()
        )));
    }
    scheme.apply(&BaseDraw::new(x.to_vec(), delta.to_vec()), u)
}
