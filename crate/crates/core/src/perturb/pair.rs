//! The paired scheme for `B_p^n`, `1 < p < 2`: each coordinate pair moves by
//! `δ_i h(x_{2i−1}, x_{2i})` with
//! `h = φ·(x₁^{1−p}, −x₂^{1−p})` and `φ(x₁, x₂) = r ψ₂(R₁(x₁−R₂), R₁(x₂−R₂))`.

use crate::error::{invalid, Error, Result};
use crate::geom::{abs_pow, Bump2, BumpFn, Exponent, LpBall};
use serde::{Deserialize, Serialize};

/// The planar map `h` with analytic partial derivatives to order 2.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PairMap {
    pub p: f64,
    pub r: f64,
    pub r1: f64,
    pub r2: f64,
    pub psi: BumpFn,
}

/// `[value, ∂₁, ∂₂, ∂₁₁, ∂₁₂, ∂₂₂]` of each component of `h`.
pub type PairPartials = [[f64; 6]; 2];

impl PairMap {
    pub fn new(p: f64, r: f64, r1: f64, r2: f64, psi: BumpFn) -> Result<Self> {
        if !(p > 1.0 && p < 2.0) {
            return Err(Error::InvalidExponent(p));
        }
        if !(r >= 0.0 && r1 > 0.0 && r2 > 0.0) {
            return Err(invalid(format!("need r >= 0, R1 > 0, R2 > 0; got {r}, {r1}, {r2}")));
        }
        Ok(Self { p, r, r1, r2, psi })
    }

    pub fn with_r(&self, r: f64) -> Self {
        Self { r, ..*self }
    }

    fn bump2(&self) -> Bump2 {
        Bump2::new(self.psi)
    }

    fn scaled(&self, x: f64) -> f64 {
        self.r1 * (x - self.r2)
    }

    /// Open support square of `h`.
    pub fn support(&self) -> (f64, f64) {
        let (a, b) = self.psi.support();
        (self.r2 + a / self.r1, self.r2 + b / self.r1)
    }

    pub fn in_support(&self, x1: f64, x2: f64) -> bool {
        self.psi.in_support(self.scaled(x1)) && self.psi.in_support(self.scaled(x2))
    }

    /// Partials of `φ` in the original coordinates.
    pub fn phi_partials(&self, x1: f64, x2: f64) -> [f64; 6] {
        if !self.in_support(x1, x2) {
            return [0.0; 6];
        }
        let b = self.bump2().partials(self.scaled(x1), self.scaled(x2));
        let (r, k) = (self.r, self.r1);
        [
            r * b[0],
            r * k * b[1],
            r * k * b[2],
            r * k * k * b[3],
            r * k * k * b[4],
            r * k * k * b[5],
        ]
    }

    pub fn h(&self, x1: f64, x2: f64) -> [f64; 2] {
        let hp = self.partials(x1, x2);
        [hp[0][0], hp[1][0]]
    }

    /// Direction `h/r`; zero outside the support.
    pub fn unit_h(&self, x1: f64, x2: f64) -> [f64; 2] {
        if !self.in_support(x1, x2) {
            return [0.0; 2];
        }
        let v = self.bump2().value(self.scaled(x1), self.scaled(x2));
        let e = 1.0 - self.p;
        [v * x1.powf(e), -v * x2.powf(e)]
    }

    pub fn partials(&self, x1: f64, x2: f64) -> PairPartials {
        if !self.in_support(x1, x2) {
            return [[0.0; 6]; 2];
        }
        let f = self.phi_partials(x1, x2);
        let e = 1.0 - self.p;
        let pw = |x: f64| [x.powf(e), e * x.powf(e - 1.0), e * (e - 1.0) * x.powf(e - 2.0)];
        let a = pw(x1);
        let b = pw(x2);
        let h1 = [
            f[0] * a[0],
            f[1] * a[0] + f[0] * a[1],
            f[2] * a[0],
            f[3] * a[0] + 2.0 * f[1] * a[1] + f[0] * a[2],
            f[4] * a[0] + f[2] * a[1],
            f[5] * a[0],
        ];
        let h2 = [
            -f[0] * b[0],
            -f[1] * b[0],
            -(f[2] * b[0] + f[0] * b[1]),
            -f[3] * b[0],
            -(f[4] * b[0] + f[1] * b[1]),
            -(f[5] * b[0] + 2.0 * f[2] * b[1] + f[0] * b[2]),
        ];
        [h1, h2]
    }

    /// Preimage of `y` under `w ↦ w + z·h(w)`: damped Newton iteration
    /// started at the first-order guess `y − z·h(y)`, halving the step until
    /// the residual decreases.
    pub fn invert(&self, y: [f64; 2], z: f64) -> Result<[f64; 2]> {
        if z == 0.0 || self.r == 0.0 {
            return Ok(y);
        }
        let (lo, hi) = self.support();
        let inside = |v: f64| v > lo && v < hi;
        if !(inside(y[0]) && inside(y[1])) {
            return Ok(y);
        }
        let resid = |w: [f64; 2]| {
            let h = self.h(w[0], w[1]);
            [w[0] + z * h[0] - y[0], w[1] + z * h[1] - y[1]]
        };
        let norm = |v: [f64; 2]| v[0].abs().max(v[1].abs());
        let h0 = self.h(y[0], y[1]);
        let mut w = [y[0] - z * h0[0], y[1] - z * h0[1]];
        let mut f = resid(w);
        let tol = 1e-15 * y[0].abs().max(y[1].abs()).max(1.0);
        for _ in 0..100 {
            if norm(f) <= tol {
                return Ok(w);
            }
            let [h1, h2] = self.partials(w[0], w[1]);
            let (a, b, c, d) = (1.0 + z * h1[1], z * h1[2], z * h2[1], 1.0 + z * h2[2]);
            let det = a * d - b * c;
            if !(det > 0.0) {
                return Err(Error::NotMonotone(self.r));
            }
            let step = [(d * f[0] - b * f[1]) / det, (a * f[1] - c * f[0]) / det];
            let mut lambda = 1.0;
            loop {
                let cand = [w[0] - lambda * step[0], w[1] - lambda * step[1]];
                let fc = resid(cand);
                if norm(fc) < norm(f) || lambda < 1e-6 {
                    w = cand;
                    f = fc;
                    break;
                }
                lambda *= 0.5;
            }
        }
        if norm(f) <= 1e-12 {
            Ok(w)
        } else {
            Err(Error::NotMonotone(self.r))
        }
    }
}

/// Jacobian determinant of `w ↦ w + z·h(w)` at `(w₁, w₂)`.
pub fn pair_jacobian(pm: &PairMap, w1: f64, w2: f64, z: f64) -> f64 {
    let [h1, h2] = pm.partials(w1, w2);
    (1.0 + z * h1[1]) * (1.0 + z * h2[2]) - z * z * h1[2] * h2[1]
}

/// `½∂₁₁(h₁²) + ∂₁₂(h₁h₂) + ½∂₂₂(h₂²)`.
pub fn g_pair(pm: &PairMap, y1: f64, y2: f64) -> f64 {
    let [a, b] = pm.partials(y1, y2);
    let t1 = a[1] * a[1] + a[0] * a[3];
    let t2 = a[4] * b[0] + a[1] * b[2] + a[2] * b[1] + a[0] * b[4];
    let t3 = b[2] * b[2] + b[0] * b[5];
    t1 + t2 + t3
}

/// `E_δ[J(x(y, δ), δ)^{-1}]` for a single pair.
pub fn mean_inverse_pair_jacobian(pm: &PairMap, y1: f64, y2: f64) -> Result<f64> {
    let mut s = 0.0;
    for z in [1.0, -1.0] {
        let [w1, w2] = pm.invert([y1, y2], z)?;
        s += 0.5 / pair_jacobian(pm, w1, w2, z);
    }
    Ok(s)
}

/// The paired scheme on `B_p^n`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LowPScheme {
    pub ball: LpBall,
    pub map: PairMap,
}

impl LowPScheme {
    /// Checks `R₂ ≤ log^{1/p} n`, `n R₁⁻² r² R₂^{−p} e^{−2R₂^p/a_n^p} ≤ ε²` and
    /// `r⁵n² ≤ 1`. `R₂` is only required to be positive.
    pub fn new(ball: LpBall, map: PairMap, eps: f64) -> Result<Self> {
        let s = Self::relaxed(ball, map)?;
        let n = ball.n as f64;
        let p = map.p;
        let an = crate::geom::a_tilde(p, ball.n)?;
        if map.r2 > n.ln().powf(1.0 / p) * (1.0 + 1e-12) {
            return Err(invalid(format!("R2 = {} exceeds log^(1/p) n", map.r2)));
        }
        let lhs = n / (map.r1 * map.r1) * map.r * map.r * map.r2.powf(-p)
            * (-2.0 * map.r2.powf(p) / an.powf(p)).exp();
        if lhs > eps * eps * (1.0 + 1e-12) {
            return Err(invalid(format!("variance constraint {lhs} exceeds eps^2")));
        }
        if map.r.powi(5) * n * n > 1.0 + 1e-12 {
            return Err(invalid("r^5 n^2 exceeds 1"));
        }
        Ok(s)
    }

    /// Only requires matching exponents and `n ≥ 2`.
    pub fn relaxed(ball: LpBall, map: PairMap) -> Result<Self> {
        if ball.p != Exponent::Finite(map.p) {
            return Err(invalid("pair map exponent differs from the ball"));
        }
        if ball.n < 2 {
            return Err(invalid("paired scheme needs n >= 2"));
        }
        Ok(Self { ball, map })
    }

    pub fn n(&self) -> usize {
        self.ball.n
    }

    pub fn pairs(&self) -> usize {
        self.ball.n / 2
    }

    pub fn with_r(&self, r: f64) -> Self {
        Self {
            map: self.map.with_r(r),
            ..self.clone()
        }
    }

    /// `x + u·δ_i h` pairwise; an odd last coordinate is unchanged.
    pub fn apply(&self, x: &[f64], delta: &[f64], u: f64) -> Vec<f64> {
        let mut y = x.to_vec();
        for (i, d) in delta.iter().enumerate().take(self.pairs()) {
            let h = self.map.h(x[2 * i], x[2 * i + 1]);
            y[2 * i] += u * d * h[0];
            y[2 * i + 1] += u * d * h[1];
        }
        y
    }

    /// Direction `h/r` pairwise with signs.
    pub fn direction(&self, x: &[f64], delta: &[f64]) -> Vec<f64> {
        let mut w = vec![0.0; x.len()];
        for (i, d) in delta.iter().enumerate().take(self.pairs()) {
            let h = self.map.unit_h(x[2 * i], x[2 * i + 1]);
            w[2 * i] = d * h[0];
            w[2 * i + 1] = d * h[1];
        }
        w
    }

    pub fn invert(&self, y: &[f64], delta: &[f64], u: f64) -> Result<Vec<f64>> {
        let mut x = y.to_vec();
        let m = self.map.with_r(self.map.r * u);
        for (i, d) in delta.iter().enumerate().take(self.pairs()) {
            let w = m.invert([y[2 * i], y[2 * i + 1]], *d)?;
            x[2 * i] = w[0];
            x[2 * i + 1] = w[1];
        }
        Ok(x)
    }

    /// Indices of pairs whose `y`-coordinates lie in the support square.
    pub fn active_pairs(&self, y: &[f64]) -> Vec<usize> {
        (0..self.pairs())
            .filter(|&i| self.map.in_support(y[2 * i], y[2 * i + 1]))
            .collect()
    }

    /// Per active pair, `Σ|x|^p` of both preimages and their inverse Jacobians.
    pub(crate) fn active_terms(&self, y: &[f64]) -> Result<(f64, Vec<([f64; 2], [f64; 2])>)> {
        let p = self.map.p;
        let act = self.active_pairs(y);
        let mut base: f64 = y.iter().map(|v| abs_pow(*v, p)).sum();
        let mut out = Vec::with_capacity(act.len());
        for i in act {
            base -= abs_pow(y[2 * i], p) + abs_pow(y[2 * i + 1], p);
            let mut pow = [0.0; 2];
            let mut inv = [0.0; 2];
            for (k, z) in [1.0, -1.0].into_iter().enumerate() {
                let [w1, w2] = self.map.invert([y[2 * i], y[2 * i + 1]], z)?;
                pow[k] = abs_pow(w1, p) + abs_pow(w2, p);
                inv[k] = 1.0 / pair_jacobian(&self.map, w1, w2, z);
            }
            out.push((pow, inv));
        }
        Ok((base, out))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn map(r: f64) -> PairMap {
        PairMap::new(1.5, r, 4.0, 0.2, BumpFn::psi()).unwrap()
    }

    fn interior_points() -> Vec<(f64, f64)> {
        let (lo, hi) = map(0.1).support();
        (0..100)
            .map(|k| {
                let a = lo + (hi - lo) * ((k as f64 * 0.618_034) % 1.0 * 0.7 + 0.15);
                let b = lo + (hi - lo) * ((k as f64 * 0.414_214) % 1.0 * 0.7 + 0.15);
                (a, b)
            })
            .collect()
    }

    #[test]
    fn jacobian_is_one_at_zero_r() {
        let m = map(0.0);
        for (a, b) in interior_points() {
            assert_eq!(pair_jacobian(&m, a, b, 1.0), 1.0);
        }
    }

    /// Central difference of `f` at `t`, Richardson-extrapolated to fourth order.
    fn diff(f: impl Fn(f64) -> f64, t: f64, e: f64) -> f64 {
        let c = |e: f64| (f(t + e) - f(t - e)) / (2.0 * e);
        (4.0 * c(e / 2.0) - c(e)) / 3.0
    }

    #[test]
    fn partials_match_finite_differences() {
        let m = map(0.05);
        let e = 2e-4;
        for (a, b) in interior_points() {
            let p = m.partials(a, b);
            for c in 0..2 {
                let d1 = diff(|x| m.h(x, b)[c], a, e);
                let d2 = diff(|y| m.h(a, y)[c], b, e);
                let d11 = diff(|x| m.partials(x, b)[c][1], a, e);
                let d12 = diff(|y| m.partials(a, y)[c][1], b, e);
                let d22 = diff(|y| m.partials(a, y)[c][2], b, e);
                for (x, y) in [(p[c][1], d1), (p[c][2], d2), (p[c][3], d11), (p[c][4], d12), (p[c][5], d22)] {
                    assert!((x - y).abs() < 1e-6, "{x} vs {y}");
                }
            }
        }
    }

    #[test]
    fn jacobian_matches_finite_differences() {
        let m = map(0.05);
        let eps = 1e-6;
        for (a, b) in interior_points() {
            for z in [1.0, -1.0] {
                let f = |x: f64, y: f64| {
                    let h = m.h(x, y);
                    [x + z * h[0], y + z * h[1]]
                };
                let (fp, fm) = (f(a + eps, b), f(a - eps, b));
                let (gp, gm) = (f(a, b + eps), f(a, b - eps));
                let j11 = (fp[0] - fm[0]) / (2.0 * eps);
                let j21 = (fp[1] - fm[1]) / (2.0 * eps);
                let j12 = (gp[0] - gm[0]) / (2.0 * eps);
                let j22 = (gp[1] - gm[1]) / (2.0 * eps);
                let fd = j11 * j22 - j12 * j21;
                assert!((fd - pair_jacobian(&m, a, b, z)).abs() < 1e-6);
            }
        }
    }

    #[test]
    fn g_pair_matches_finite_differences() {
        let m = map(0.05);
        let e = 2e-4;
        let prod = |x: f64, y: f64, i: usize, j: usize| {
            let h = m.h(x, y);
            h[i] * h[j]
        };
        for (a, b) in interior_points() {
            let d11 = diff(|x| diff(|s| prod(s, b, 0, 0), x, e), a, e);
            let d22 = diff(|y| diff(|s| prod(a, s, 1, 1), y, e), b, e);
            let d12 = diff(|x| diff(|s| prod(x, s, 0, 1), b, e), a, e);
            let fd = 0.5 * d11 + d12 + 0.5 * d22;
            let g = g_pair(&m, a, b);
            assert!((fd - g).abs() < 1e-6, "{fd} vs {g}");
        }
        assert_eq!(g_pair(&m, 0.0, 0.0), 0.0);
    }

    #[test]
    fn invert_recovers_the_pair() {
        let m = map(0.03);
        for (a, b) in interior_points() {
            for z in [1.0, -1.0] {
                let h = m.h(a, b);
                let y = [a + z * h[0], b + z * h[1]];
                let w = m.invert(y, z).unwrap();
                assert!((w[0] - a).abs() < 1e-10 && (w[1] - b).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn norm_change_has_no_linear_term() {
        let ball = LpBall::new(Exponent::Finite(1.5), 2).unwrap();
        let (lo, hi) = map(0.1).support();
        let x = [lo + 0.4 * (hi - lo), lo + 0.55 * (hi - lo)];
        let drift = |r: f64| {
            let s = LowPScheme::relaxed(ball, map(r)).unwrap();
            let y = s.apply(&x, &[1.0], 1.0);
            crate::geom::pow_sum(&y, 1.5) - crate::geom::pow_sum(&x, 1.5)
        };
        let ratio = drift(0.02) / drift(0.01);
        assert!((ratio - 4.0).abs() < 0.1, "{ratio}");
    }
}
