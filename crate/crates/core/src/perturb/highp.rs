//! The single-coordinate scheme for `B_p^n`, `p ≥ 2`: `Y_i = X_i + φ(X_i)δ_i`
//! with `φ(x) = rψ(Rx)`.

use super::product::invert_shift;
use crate::error::{invalid, Error, Result};
use crate::geom::{abs_pow, BumpFn, Exponent, LpBall};
use crate::samplers::{sign, RandomStream};
use rand::Rng;
use serde::{Deserialize, Serialize};

/// Largest active set accepted by exact enumeration.
pub const MAX_EXACT_ACTIVE: usize = 24;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HighPScheme {
    pub ball: LpBall,
    pub r: f64,
    /// The bump scale `R`.
    pub big_r: f64,
    pub psi: BumpFn,
}

impl HighPScheme {
    /// Checks `n R³ r⁴ ≤ ε⁶` and `R^{2p+1} ≥ n` on top of [`HighPScheme::relaxed`].
    pub fn new(ball: LpBall, r: f64, big_r: f64, psi: BumpFn, eps: f64) -> Result<Self> {
        let s = Self::relaxed(ball, r, big_r, psi)?;
        let n = ball.n as f64;
        let p = s.p();
        if n * big_r.powi(3) * r.powi(4) > eps.powi(6) * (1.0 + 1e-12) {
            return Err(invalid(format!(
                "n R^3 r^4 = {} exceeds eps^6 = {}",
                n * big_r.powi(3) * r.powi(4),
                eps.powi(6)
            )));
        }
        if big_r.powf(2.0 * p + 1.0) < n * (1.0 - 1e-12) {
            return Err(invalid(format!("R^(2p+1) = {} is below n", big_r.powf(2.0 * p + 1.0))));
        }
        Ok(s)
    }

    /// Only requires `p ≥ 2` finite, `r, R > 0` and monotone coordinate maps.
    pub fn relaxed(ball: LpBall, r: f64, big_r: f64, psi: BumpFn) -> Result<Self> {
        match ball.p {
            Exponent::Finite(p) if p >= 2.0 => {}
            other => return Err(invalid(format!("high-p scheme needs finite p >= 2, got {other}"))),
        }
        if !(r >= 0.0 && big_r > 0.0) {
            return Err(invalid(format!("need r >= 0 and R > 0, got r={r}, R={big_r}")));
        }
        if r * big_r * psi.max_abs(1) >= 1.0 {
            return Err(Error::NotMonotone(r));
        }
        Ok(Self {
            ball,
            r,
            big_r,
            psi,
        })
    }

    pub fn p(&self) -> f64 {
        self.ball.p.value()
    }

    pub fn n(&self) -> usize {
        self.ball.n
    }

    pub fn with_r(&self, r: f64) -> Self {
        Self { r, ..self.clone() }
    }

    /// `(φ, φ', φ'')` at `x`.
    pub fn phi(&self, x: f64) -> [f64; 3] {
        let d = self.psi.derivs(self.big_r * x);
        let rr = self.big_r;
        [self.r * d[0], self.r * rr * d[1], self.r * rr * rr * d[2]]
    }

    pub fn is_active(&self, y: f64) -> bool {
        self.psi.in_support(self.big_r * y)
    }

    /// `I(y) = {i : Ry_i ∈ (1, 2)}`.
    pub fn active(&self, y: &[f64]) -> Vec<usize> {
        (0..y.len()).filter(|&i| self.is_active(y[i])).collect()
    }

    /// `ψ(Rx_i)δ_i`.
    pub fn direction(&self, x: &[f64], delta: &[f64]) -> Vec<f64> {
        x.iter()
            .zip(delta)
            .map(|(v, d)| self.psi.value(self.big_r * v) * d)
            .collect()
    }

    /// `x + u·φ(x)δ`.
    pub fn apply(&self, x: &[f64], delta: &[f64], u: f64) -> Vec<f64> {
        x.iter()
            .zip(delta)
            .map(|(v, d)| v + u * d * self.phi(*v)[0])
            .collect()
    }

    /// Preimage of one coordinate under `x ↦ x + u·δφ(x)`.
    pub fn invert_coord(&self, y: f64, delta: f64, u: f64) -> f64 {
        if !self.is_active(y) {
            return y;
        }
        invert_shift(y, u * delta, self.r * self.psi.max_abs(0), |x| {
            let f = self.phi(x);
            (f[0], f[1])
        })
    }

    pub fn invert(&self, y: &[f64], delta: &[f64], u: f64) -> Vec<f64> {
        y.iter()
            .zip(delta)
            .map(|(v, d)| self.invert_coord(*v, *d, u))
            .collect()
    }

    /// `(φ²/2)''` at `y`.
    pub fn g(&self, y: f64) -> f64 {
        let f = self.phi(y);
        f[1] * f[1] + f[0] * f[2]
    }

    /// `E_δ[(1 + δφ'(x(y, δ)))^{-1}]` for one coordinate.
    pub fn mean_inverse_jacobian(&self, y: f64) -> f64 {
        0.5 * [1.0, -1.0]
            .iter()
            .map(|&d| 1.0 / (1.0 + d * self.phi(self.invert_coord(y, d, 1.0))[1]))
            .sum::<f64>()
    }
}

/// How [`density_highp`] averages over the sign vector.
#[derive(Clone, Debug, PartialEq)]
pub enum DensityMode {
    /// All `2^{|I|}` sign patterns; requires `|I| ≤ 24`.
    Exact,
    /// Monte Carlo over signs.
    Mc { samples: usize, stream: RandomStream },
    /// Factorized exact value whenever the ball indicator is constant over
    /// sign patterns, Monte Carlo otherwise.
    Auto { samples: usize, stream: RandomStream },
}

/// Per active coordinate, the two preimages' contributions to `Σ|x_i|^p` and
/// their inverse Jacobians, indexed by `δ = +1, −1`.
struct ActiveCoord {
    pow: [f64; 2],
    inv_jac: [f64; 2],
}

fn active_coords(s: &HighPScheme, y: &[f64]) -> (f64, Vec<ActiveCoord>) {
    let p = s.p();
    let mut base = 0.0;
    let mut act = Vec::new();
    for &v in y {
        if s.is_active(v) {
            let mut c = ActiveCoord {
                pow: [0.0; 2],
                inv_jac: [0.0; 2],
            };
            for (k, d) in [1.0, -1.0].into_iter().enumerate() {
                let x = s.invert_coord(v, d, 1.0);
                c.pow[k] = abs_pow(x, p);
                c.inv_jac[k] = 1.0 / (1.0 + d * s.phi(x)[1]);
            }
            act.push(c);
        } else {
            base += abs_pow(v, p);
        }
    }
    (base, act)
}

/// The density of `Y` at `y`: `E_δ[1{x(y,δ) ∈ B_p^n} ∏(1 + φ'(x_i)δ_i)^{-1}]`.
pub fn density_highp(s: &HighPScheme, y: &[f64], mode: &DensityMode) -> Result<f64> {
    if y.len() != s.n() {
        return Err(invalid("dimension mismatch"));
    }
    let (base, act) = active_coords(s, y);
    let level = s.ball.kappa_pow();
    match mode {
        DensityMode::Exact => {
            if act.len() > MAX_EXACT_ACTIVE {
                return Err(Error::TooManyActive(act.len()));
            }
            let m = act.len();
            let mut total = 0.0;
            for mask in 0u64..(1u64 << m) {
                let mut pow = base;
                let mut w = 1.0;
                for (j, c) in act.iter().enumerate() {
                    let k = ((mask >> j) & 1) as usize;
                    pow += c.pow[k];
                    w *= c.inv_jac[k];
                }
                if pow <= level {
                    total += w;
                }
            }
            Ok(total / (1u64 << m) as f64)
        }
        DensityMode::Mc { samples, stream } => Ok(mc_density(&act, base, level, *samples, stream)),
        DensityMode::Auto { samples, stream } => {
            let lo: f64 = base + act.iter().map(|c| c.pow[0].min(c.pow[1])).sum::<f64>();
            let hi: f64 = base + act.iter().map(|c| c.pow[0].max(c.pow[1])).sum::<f64>();
            if lo > level {
                Ok(0.0)
            } else if hi <= level {
                Ok(act
                    .iter()
                    .map(|c| 0.5 * (c.inv_jac[0] + c.inv_jac[1]))
                    .product())
            } else {
                Ok(mc_density(&act, base, level, *samples, stream))
            }
        }
    }
}

fn mc_density(act: &[ActiveCoord], base: f64, level: f64, samples: usize, stream: &RandomStream) -> f64 {
    let mut rng = stream.rng();
    let mut total = 0.0;
    for _ in 0..samples {
        let mut pow = base;
        let mut w = 1.0;
        for c in act {
            let k = usize::from(rng.gen::<bool>());
            pow += c.pow[k];
            w *= c.inv_jac[k];
        }
        if pow <= level {
            total += w;
        }
    }
    total / samples as f64
}

/// Random signs `δ ∈ {±1}^n`.
pub fn signs<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Vec<f64> {
    (0..n).map(|_| sign(rng)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quad;

    fn scheme(n: usize, p: f64, r: f64, big_r: f64) -> HighPScheme {
        let ball = LpBall::new(Exponent::Finite(p), n).unwrap();
        HighPScheme::relaxed(ball, r, big_r, BumpFn::psi()).unwrap()
    }

    #[test]
    fn inactive_point_has_unit_density() {
        let s = scheme(4, 3.0, 0.1, 2.0);
        let y = [0.1, -0.2, 0.0, 0.3];
        assert!(s.active(&y).is_empty());
        assert_eq!(density_highp(&s, &y, &DensityMode::Exact).unwrap(), 1.0);
    }

    #[test]
    fn apply_then_invert() {
        let s = scheme(6, 4.0, 0.05, 2.5);
        let x = [0.5, 0.6, -0.3, 0.7, 0.45, 0.1];
        let d = [1.0, -1.0, 1.0, 1.0, -1.0, 1.0];
        for &u in &[0.0, 0.3, 1.0] {
            let y = s.apply(&x, &d, u);
            let back = s.invert(&y, &d, u);
            for (a, b) in x.iter().zip(&back) {
                assert!((a - b).abs() < 1e-10);
            }
        }
        assert_eq!(s.with_r(0.0).apply(&x, &d, 1.0), x.to_vec());
    }

    #[test]
    fn density_integrates_to_one_in_the_plane() {
        // n = 2, p = 3, active band (1/4, 1/2) inside the ball. The inner
        // integral is split at every point where some sign pattern's
        // indicator switches, so each piece is smooth.
        let s = scheme(2, 3.0, 0.04, 4.0);
        let k = s.ball.kappa;
        let f = |a: f64, b: f64| density_highp(&s, &[a, b], &DensityMode::Exact).unwrap();
        let inner = |a: f64| {
            let mut cuts = vec![-k, 0.25, 0.5, k];
            for d1 in [1.0, -1.0] {
                let x1 = s.invert_coord(a, d1, 1.0);
                let rest = k.powi(3) - x1.abs().powi(3);
                if rest > 0.0 {
                    let m = rest.cbrt();
                    for d2 in [1.0, -1.0] {
                        for e in [m, -m] {
                            cuts.push(e + d2 * s.phi(e)[0]);
                        }
                    }
                }
            }
            cuts.sort_by(f64::total_cmp);
            cuts.windows(2)
                .map(|w| quad::integrate(|b| f(a, b), w[0], w[1], 4))
                .sum::<f64>()
        };
        let outer = [-k, 0.0, 0.25, 0.5, k];
        let total: f64 = outer
            .windows(2)
            .map(|w| quad::integrate(inner, w[0], w[1], 48))
            .sum();
        assert!((total - 1.0).abs() < 1e-3, "{total}");
    }

    #[test]
    fn exact_enumeration_cap() {
        let s = scheme(30, 3.0, 0.01, 2.0);
        let y = vec![0.75; 30];
        assert!(matches!(
            density_highp(&s, &y, &DensityMode::Exact),
            Err(Error::TooManyActive(30))
        ));
    }

    #[test]
    fn auto_matches_exact() {
        let s = scheme(8, 3.0, 0.05, 2.0);
        let y = [0.6, 0.7, -0.2, 0.8, 0.55, 0.1, 0.0, 0.3];
        let e = density_highp(&s, &y, &DensityMode::Exact).unwrap();
        let a = density_highp(
            &s,
            &y,
            &DensityMode::Auto {
                samples: 100,
                stream: RandomStream::new(1),
            },
        )
        .unwrap();
        assert!((e - a).abs() < 1e-14);
    }
}
