//! Seeded samplers for every measure used by the crate.
//!
//! All randomness flows through [`RandomStream`]: a 64-bit seed plus a path of
//! split indices. The generator for a stream is ChaCha8 keyed by a SHA-256
//! digest of `(seed, path)`, so distinct paths give independent streams and
//! equal paths give bitwise-equal draws.
//!
//! Uniform points of `B_p^n` use the exponential-power representation
//! `X = κ g / (Σ|g_i|^p + Z)^{1/p}` with `g_i` of density
//! `e^{−|t|^p}/(2Γ(1+1/p))` and `Z ~ Exp(1)`.

use crate::error::{invalid, Error, Result};
use crate::geom::{BumpFn, Exponent, LpBall};
use crate::perturb::g_of;
use crate::quad;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp1, Gamma, StandardNormal};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

/// The generator behind every stream.
pub type StreamRng = ChaCha8Rng;

/// A seedable, splittable source of randomness.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct RandomStream {
    pub seed: u64,
    pub path: Vec<u64>,
}

impl RandomStream {
    pub fn new(seed: u64) -> Self {
        Self {
            seed,
            path: Vec::new(),
        }
    }

    /// The child stream at split index `i`.
    pub fn substream(&self, i: u64) -> Self {
        let mut path = self.path.clone();
        path.push(i);
        Self {
            seed: self.seed,
            path,
        }
    }

    /// The child stream named `label` (hashed to a split index).
    pub fn child(&self, label: &str) -> Self {
        let d = Sha256::digest(label.as_bytes());
        self.substream(u64::from_le_bytes(d[..8].try_into().unwrap()))
    }

    /// A fresh generator positioned at the start of this stream.
    pub fn rng(&self) -> StreamRng {
        let mut h = Sha256::new();
        h.update(self.seed.to_le_bytes());
        h.update((self.path.len() as u64).to_le_bytes());
        for i in &self.path {
            h.update(i.to_le_bytes());
        }
        StreamRng::from_seed(h.finalize().into())
    }
}

impl std::fmt::Display for RandomStream {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", self.seed)?;
        for i in &self.path {
            write!(f, "/{i}")?;
        }
        Ok(())
    }
}

const CHUNK: usize = 256;

/// Runs `count` replicates; replicate `k` lives in chunk `k / 256`, which owns
/// substream `k / 256`. Output order and values do not depend on threading.
pub fn replicate<T, F>(count: usize, stream: &RandomStream, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(&mut StreamRng, usize) -> T + Sync + Send,
{
    let chunks = count.div_ceil(CHUNK);
    crate::par::map_indexed(chunks, |c| {
        let mut rng = stream.substream(c as u64).rng();
        let end = ((c + 1) * CHUNK).min(count);
        (c * CHUNK..end).map(|k| f(&mut rng, k)).collect::<Vec<T>>()
    })
    .into_iter()
    .flatten()
    .collect()
}

/// Random sign `±1`.
pub fn sign<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    if rng.gen::<bool>() {
        1.0
    } else {
        -1.0
    }
}

/// The exponential-power law with density `e^{−|t|^p} / (2Γ(1+1/p))`.
#[derive(Clone, Copy, Debug)]
pub struct ExpPower {
    pub p: f64,
    gamma: Gamma<f64>,
}

impl ExpPower {
    pub fn new(p: f64) -> Result<Self> {
        if !(p.is_finite() && p >= 1.0) {
            return Err(Error::InvalidExponent(p));
        }
        let gamma = Gamma::new(1.0 / p, 1.0).map_err(|e| invalid(e.to_string()))?;
        Ok(Self { p, gamma })
    }

    /// One draw `g` together with `|g|^p`.
    pub fn sample_with_pow<R: Rng + ?Sized>(&self, rng: &mut R) -> (f64, f64) {
        let gp: f64 = self.gamma.sample(rng);
        let g = gp.powf(1.0 / self.p);
        (sign(rng) * g, gp)
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        self.sample_with_pow(rng).0
    }
}

/// One exponential-power draw from a fresh generator on `stream`.
pub fn sample_exp_power(p: f64, stream: &RandomStream) -> Result<f64> {
    Ok(ExpPower::new(p)?.sample(&mut stream.rng()))
}

/// Leading coordinates of a uniform point of `B_p^n` with their generating draws.
#[derive(Clone, Debug, PartialEq)]
pub struct Marginal {
    /// `X_1, …, X_k`.
    pub x: Vec<f64>,
    /// `g_1, …, g_k` (for `p = ∞`, equal to `x`).
    pub g: Vec<f64>,
}

impl LpBall {
    /// A uniform point.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<f64> {
        self.sample_with_g(rng).0
    }

    /// A uniform point together with the draws `g` behind it.
    pub fn sample_with_g<R: Rng + ?Sized>(&self, rng: &mut R) -> (Vec<f64>, Vec<f64>) {
        match self.p {
            Exponent::Infinite => {
                let x: Vec<f64> = (0..self.n).map(|_| rng.gen::<f64>() - 0.5).collect();
                (x.clone(), x)
            }
            Exponent::Finite(p) => {
                let law = ExpPower::new(p).expect("validated exponent");
                let mut s = 0.0;
                let g: Vec<f64> = (0..self.n)
                    .map(|_| {
                        let (g, gp) = law.sample_with_pow(rng);
                        s += gp;
                        g
                    })
                    .collect();
                let z: f64 = Exp1.sample(rng);
                let scale = self.kappa / (s + z).powf(1.0 / p);
                (g.iter().map(|v| v * scale).collect(), g)
            }
        }
    }

    /// The first `k` coordinates, exact in joint law, at O(k) cost.
    ///
    /// The remaining `n − k` terms `|g_i|^p` and `Z` sum to a single
    /// `Gamma((n−k)/p + 1)` variable.
    pub fn sample_marginal<R: Rng + ?Sized>(&self, k: usize, rng: &mut R) -> Marginal {
        assert!(k <= self.n);
        match self.p {
            Exponent::Infinite => {
                let x: Vec<f64> = (0..k).map(|_| rng.gen::<f64>() - 0.5).collect();
                Marginal { g: x.clone(), x }
            }
            Exponent::Finite(p) => {
                let law = ExpPower::new(p).expect("validated exponent");
                let mut s = 0.0;
                let g: Vec<f64> = (0..k)
                    .map(|_| {
                        let (g, gp) = law.sample_with_pow(rng);
                        s += gp;
                        g
                    })
                    .collect();
                let rest = Gamma::new((self.n - k) as f64 / p + 1.0, 1.0)
                    .expect("positive shape")
                    .sample(rng);
                let scale = self.kappa / (s + rest).powf(1.0 / p);
                Marginal {
                    x: g.iter().map(|v| v * scale).collect(),
                    g,
                }
            }
        }
    }
}

/// A uniform point of `ball` from a fresh generator on `stream`.
pub fn sample_lp_ball(ball: &LpBall, stream: &RandomStream) -> Vec<f64> {
    ball.sample(&mut stream.rng())
}

/// One-dimensional component laws for product measures.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Component1d {
    /// Standard Gaussian.
    Gaussian,
    /// Uniform on `[−1/2, 1/2]`.
    Uniform,
    /// Exponential with rate 1 on `[0, ∞)`.
    Exponential,
}

impl Component1d {
    pub fn density(&self, t: f64) -> f64 {
        match self {
            Self::Gaussian => (-0.5 * t * t).exp() / (2.0 * std::f64::consts::PI).sqrt(),
            Self::Uniform => {
                if t.abs() <= 0.5 {
                    1.0
                } else {
                    0.0
                }
            }
            Self::Exponential => {
                if t >= 0.0 {
                    (-t).exp()
                } else {
                    0.0
                }
            }
        }
    }

    /// `(log ρ)^{(k)}(t)` for `k = 0..=4`, or `None` where `ρ(t) = 0`.
    pub fn log_derivs(&self, t: f64) -> Option<[f64; 5]> {
        match self {
            Self::Gaussian => Some([
                -0.5 * t * t - 0.5 * (2.0 * std::f64::consts::PI).ln(),
                -t,
                -1.0,
                0.0,
                0.0,
            ]),
            Self::Uniform => (t.abs() < 0.5).then_some([0.0; 5]),
            Self::Exponential => (t > 0.0).then_some([-t, -1.0, 0.0, 0.0, 0.0]),
        }
    }

    /// Closed support.
    pub fn support(&self) -> (f64, f64) {
        match self {
            Self::Gaussian => (f64::NEG_INFINITY, f64::INFINITY),
            Self::Uniform => (-0.5, 0.5),
            Self::Exponential => (0.0, f64::INFINITY),
        }
    }

    /// Finite interval carrying all but ~1e-30 of the mass.
    pub fn effective_support(&self) -> (f64, f64) {
        match self {
            Self::Gaussian => (-12.0, 12.0),
            Self::Uniform => (-0.5, 0.5),
            Self::Exponential => (0.0, 70.0),
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match self {
            Self::Gaussian => StandardNormal.sample(rng),
            Self::Uniform => rng.gen::<f64>() - 0.5,
            Self::Exponential => Exp1.sample(rng),
        }
    }

    /// `E[t²]`.
    pub fn second_moment(&self) -> f64 {
        match self {
            Self::Gaussian => 1.0,
            Self::Uniform => 1.0 / 12.0,
            Self::Exponential => 2.0,
        }
    }
}

/// A product measure `∏ ρ_i(x_i)` with declared regularity constants.
///
/// `c_reg` bounds `|(log ρ_i)^{(k)}|` on `(−1/2, 1/2)` for `k ≤ 4`; `c_tail`
/// is the sub-Gaussian exponent with `∫ e^{c_tail t²} ρ_i ≤ c_reg`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProductMeasure {
    pub components: Vec<Component1d>,
    pub c_reg: f64,
    pub c_tail: f64,
}

impl ProductMeasure {
    /// Validates the declared constants against every distinct component.
    pub fn new(components: Vec<Component1d>, c_reg: f64, c_tail: f64) -> Result<Self> {
        if components.is_empty() {
            return Err(invalid("product measure needs n >= 1"));
        }
        let mu = Self {
            components,
            c_reg,
            c_tail,
        };
        for comp in mu.distinct() {
            validate_component(comp, c_reg, c_tail)?;
        }
        Ok(mu)
    }

    pub fn homogeneous(comp: Component1d, n: usize, c_reg: f64, c_tail: f64) -> Result<Self> {
        Self::new(vec![comp; n], c_reg, c_tail)
    }

    /// Standard Gaussian product, `C = 2`, `c = 1/4`.
    pub fn gaussian(n: usize) -> Result<Self> {
        Self::homogeneous(Component1d::Gaussian, n, 2.0, 0.25)
    }

    /// Uniform measure on `[−1/2, 1/2]^n`, `C = 2`, `c = 1/4`.
    pub fn uniform_cube(n: usize) -> Result<Self> {
        Self::homogeneous(Component1d::Uniform, n, 2.0, 0.25)
    }

    pub fn n(&self) -> usize {
        self.components.len()
    }

    /// Distinct component kinds in order of first appearance.
    pub fn distinct(&self) -> Vec<Component1d> {
        let mut out: Vec<Component1d> = Vec::new();
        for c in &self.components {
            if !out.contains(c) {
                out.push(*c);
            }
        }
        out
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<f64> {
        self.components.iter().map(|c| c.sample(rng)).collect()
    }

    /// `∏ ρ_i(x_i)` in log form; `−∞` outside the support.
    pub fn log_density(&self, x: &[f64]) -> f64 {
        self.components
            .iter()
            .zip(x)
            .map(|(c, t)| c.density(*t).ln())
            .sum()
    }
}

fn validate_component(comp: Component1d, c_reg: f64, c_tail: f64) -> Result<()> {
    let (a, b) = comp.effective_support();
    let mass = quad::integrate(|t| comp.density(t), a, b, 64);
    if (mass - 1.0).abs() > 1e-9 {
        return Err(invalid(format!("{comp:?} integrates to {mass}")));
    }
    for i in 1..1000 {
        let t = -0.5 + i as f64 / 1000.0;
        let d = comp
            .log_derivs(t)
            .ok_or_else(|| invalid(format!("{comp:?} vanishes at {t} in (-1/2, 1/2)")))?;
        if let Some(k) = d.iter().position(|v| v.abs() > c_reg) {
            return Err(invalid(format!(
                "|(log rho)^({k})({t})| exceeds declared C = {c_reg}"
            )));
        }
    }
    if comp == Component1d::Gaussian && c_tail >= 0.5 {
        return Err(invalid("Gaussian tail constant must be < 1/2"));
    }
    let tail = quad::integrate(|t| (c_tail * t * t).exp() * comp.density(t), a, b, 64);
    if !(tail <= c_reg) {
        return Err(invalid(format!(
            "sub-Gaussian moment {tail} exceeds declared C = {c_reg}"
        )));
    }
    Ok(())
}

/// A sample of `mu` from a fresh generator on `stream`.
pub fn sample_product(mu: &ProductMeasure, stream: &RandomStream) -> Vec<f64> {
    mu.sample(&mut stream.rng())
}

/// Per-component data of the tilted density `κ_R e^{−R² g} ρ`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Tilt {
    pub component: Component1d,
    /// `max |g|` over the bump support.
    pub max_g: f64,
    /// Normalizer `κ_R`.
    pub kappa: f64,
}

/// The product measure reweighted coordinatewise by `e^{−R² g_i}`.
#[derive(Clone, Debug)]
pub struct TiltedProduct {
    pub mu: ProductMeasure,
    pub r_tilt: f64,
    pub phi: BumpFn,
    tilts: Vec<Tilt>,
}

const REJECTION_CAP: usize = 1_000_000;

impl TiltedProduct {
    pub fn new(mu: &ProductMeasure, r_tilt: f64, phi: BumpFn) -> Result<Self> {
        if r_tilt.abs() > 1.0 {
            return Err(invalid(format!("|R| must be <= 1, got {r_tilt}")));
        }
        let tilts = mu
            .distinct()
            .into_iter()
            .map(|c| tilt_for(c, r_tilt, phi))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            mu: mu.clone(),
            r_tilt,
            phi,
            tilts,
        })
    }

    pub fn tilt(&self, comp: Component1d) -> &Tilt {
        self.tilts
            .iter()
            .find(|t| t.component == comp)
            .expect("component of this measure")
    }

    /// Tilted density of one coordinate.
    pub fn density_1d(&self, comp: Component1d, t: f64) -> f64 {
        tilted_density(comp, self.tilt(comp).kappa, self.r_tilt, self.phi, t)
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<Vec<f64>> {
        let r2 = self.r_tilt * self.r_tilt;
        self.mu
            .components
            .iter()
            .map(|c| {
                if r2 == 0.0 {
                    return Ok(c.sample(rng));
                }
                let m = self.tilt(*c).max_g;
                for _ in 0..REJECTION_CAP {
                    let t = c.sample(rng);
                    let g = if self.phi.in_support(t) {
                        g_of(*c, self.phi, t)?
                    } else {
                        0.0
                    };
                    if rng.gen::<f64>() < (-r2 * (g + m)).exp() {
                        return Ok(t);
                    }
                }
                Err(Error::RejectionCap(REJECTION_CAP))
            })
            .collect()
    }
}

pub(crate) fn tilted_density(comp: Component1d, kappa: f64, r_tilt: f64, phi: BumpFn, t: f64) -> f64 {
    let rho = comp.density(t);
    if r_tilt == 0.0 || !phi.in_support(t) || rho == 0.0 {
        return kappa * rho;
    }
    let g = g_of(comp, phi, t).unwrap_or(0.0);
    kappa * (-r_tilt * r_tilt * g).exp() * rho
}

fn tilt_for(comp: Component1d, r_tilt: f64, phi: BumpFn) -> Result<Tilt> {
    let (a, b) = phi.support();
    let m = 10_000;
    let mut max_g: f64 = 0.0;
    for i in 1..m {
        let t = a + (b - a) * i as f64 / m as f64;
        max_g = max_g.max(g_of(comp, phi, t)?.abs());
    }
    let r2 = r_tilt * r_tilt;
    let excess = quad::integrate(
        |t| ((-r2 * g_of(comp, phi, t).unwrap_or(0.0)).exp() - 1.0) * comp.density(t),
        a,
        b,
        64,
    );
    Ok(Tilt {
        component: comp,
        max_g,
        kappa: 1.0 / (1.0 + excess),
    })
}

/// A draw of the tilted product from a fresh generator on `stream`.
pub fn sample_tilted_product(
    mu: &ProductMeasure,
    r_tilt: f64,
    phi: BumpFn,
    stream: &RandomStream,
) -> Result<Vec<f64>> {
    TiltedProduct::new(mu, r_tilt, phi)?.sample(&mut stream.rng())
}

/// `X + U·Y` with `X, Y` standard Gaussian and `U ~ U[0, 1]`.
pub fn sample_gaussian_mixture<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Vec<f64> {
    let u: f64 = rng.gen();
    (0..n)
        .map(|_| {
            let x: f64 = StandardNormal.sample(rng);
            let y: f64 = StandardNormal.sample(rng);
            x + u * y
        })
        .collect()
}

/// A uniform point of the simplex `Δⁿ = B_1^n ∩ {x ≥ 0}` with its generating draws.
#[derive(Clone, Debug, PartialEq)]
pub struct SimplexDraw {
    pub x: Vec<f64>,
    /// Exponential draws `g_i`.
    pub g: Vec<f64>,
    /// The extra exponential `Z`.
    pub z: f64,
}

/// `(n!)^{1/n} / 2 = κ_{1,n}`.
pub fn simplex_scale(n: usize) -> f64 {
    crate::geom::kappa(Exponent::Finite(1.0), n)
}

pub fn sample_simplex_draw<R: Rng + ?Sized>(n: usize, rng: &mut R) -> SimplexDraw {
    let g: Vec<f64> = (0..n).map(|_| Exp1.sample(rng)).collect();
    let z: f64 = Exp1.sample(rng);
    let denom = z + g.iter().sum::<f64>();
    let k = simplex_scale(n);
    SimplexDraw {
        x: g.iter().map(|v| k * v / denom).collect(),
        g,
        z,
    }
}

/// A uniform point of `Δⁿ`.
pub fn sample_simplex<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Vec<f64> {
    sample_simplex_draw(n, rng).x
}
