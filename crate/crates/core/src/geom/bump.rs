use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};
use std::sync::OnceLock;

/// The available bump profiles.
///
/// `Phi` is `(1 − 9t²)⁵/100` on `(−1/3, 1/3)`. `Psi` is
/// `exp(1 − 1/(1 − (2t−3)²))` on `(1, 2)`, normalized to peak value 1.
/// `PsiPoly` is the polynomial alternative `(1 − (2t−3)²)⁵` on `(1, 2)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BumpKind {
    Phi,
    Psi,
    PsiPoly,
}

impl std::str::FromStr for BumpKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "phi" => Ok(Self::Phi),
            "psi" => Ok(Self::Psi),
            "psi_poly" => Ok(Self::PsiPoly),
            _ => Err(Error::InvalidParameter(format!("unknown bump `{s}`"))),
        }
    }
}

/// A one-dimensional bump with analytic derivatives up to order 4.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct BumpFn {
    pub kind: BumpKind,
}

/// Coefficients in `t` of `(1 − 9t²)⁵/100` and its first four derivatives.
fn phi_table() -> &'static [[f64; 11]; 5] {
    static T: OnceLock<[[f64; 11]; 5]> = OnceLock::new();
    T.get_or_init(|| {
        let mut t = [[0.0; 11]; 5];
        let c = [1.0, -45.0, 810.0, -7290.0, 32805.0, -59049.0];
        for (k, v) in c.iter().enumerate() {
            t[0][2 * k] = v / 100.0;
        }
        derive_table(&mut t);
        t
    })
}

/// Coefficients in `s` of `(1 − s²)⁵` and its derivatives.
fn psi_poly_table() -> &'static [[f64; 11]; 5] {
    static T: OnceLock<[[f64; 11]; 5]> = OnceLock::new();
    T.get_or_init(|| {
        let mut t = [[0.0; 11]; 5];
        let c = [1.0, -5.0, 10.0, -10.0, 5.0, -1.0];
        for (k, v) in c.iter().enumerate() {
            t[0][2 * k] = *v;
        }
        derive_table(&mut t);
        t
    })
}

fn derive_table(t: &mut [[f64; 11]; 5]) {
    for k in 1..5 {
        for j in 1..11 {
            t[k][j - 1] = t[k - 1][j] * j as f64;
        }
    }
}

fn horner(c: &[f64; 11], x: f64) -> f64 {
    c.iter().rev().fold(0.0, |acc, a| acc * x + a)
}

impl BumpFn {
    pub const fn new(kind: BumpKind) -> Self {
        Self { kind }
    }

    pub const fn phi() -> Self {
        Self::new(BumpKind::Phi)
    }

    pub const fn psi() -> Self {
        Self::new(BumpKind::Psi)
    }

    pub const fn psi_poly() -> Self {
        Self::new(BumpKind::PsiPoly)
    }

    /// Open support interval.
    pub fn support(&self) -> (f64, f64) {
        match self.kind {
            BumpKind::Phi => (-1.0 / 3.0, 1.0 / 3.0),
            BumpKind::Psi | BumpKind::PsiPoly => (1.0, 2.0),
        }
    }

    pub fn in_support(&self, t: f64) -> bool {
        let (a, b) = self.support();
        t > a && t < b
    }

    /// Value and derivatives of orders 1..=4 at `t`.
    pub fn derivs(&self, t: f64) -> [f64; 5] {
        if !self.in_support(t) {
            return [0.0; 5];
        }
        match self.kind {
            BumpKind::Phi => {
                let tab = phi_table();
                std::array::from_fn(|k| horner(&tab[k], t))
            }
            BumpKind::PsiPoly => {
                let tab = psi_poly_table();
                let s = 2.0 * t - 3.0;
                std::array::from_fn(|k| horner(&tab[k], s) * f64::from(1u32 << k))
            }
            BumpKind::Psi => psi_exp_derivs(t),
        }
    }

    pub fn value(&self, t: f64) -> f64 {
        if !self.in_support(t) {
            return 0.0;
        }
        match self.kind {
            BumpKind::Phi => horner(&phi_table()[0], t),
            BumpKind::PsiPoly => horner(&psi_poly_table()[0], 2.0 * t - 3.0),
            BumpKind::Psi => {
                let s = 2.0 * t - 3.0;
                (1.0 - 1.0 / (1.0 - s * s)).exp()
            }
        }
    }

    /// Derivative of order `order ∈ 0..=4`.
    pub fn eval(&self, t: f64, order: usize) -> Result<f64> {
        if order > 4 {
            return Err(Error::DerivativeOrder(order));
        }
        Ok(self.derivs(t)[order])
    }

    /// `sup |f^{(order)}|`, by a dense grid scan (computed once per kind).
    pub fn max_abs(&self, order: usize) -> f64 {
        static TABLES: [OnceLock<[f64; 5]>; 3] = [OnceLock::new(), OnceLock::new(), OnceLock::new()];
        let slot = match self.kind {
            BumpKind::Phi => 0,
            BumpKind::Psi => 1,
            BumpKind::PsiPoly => 2,
        };
        TABLES[slot].get_or_init(|| {
            let (a, b) = self.support();
            let m = 20_000;
            let mut out = [0.0f64; 5];
            for i in 1..m {
                let d = self.derivs(a + (b - a) * i as f64 / m as f64);
                for k in 0..5 {
                    out[k] = out[k].max(d[k].abs());
                }
            }
            out
        })[order.min(4)]
    }
}

/// Derivatives of `exp(q(s))`, `q(s) = 1 − 1/(1−s²)`, `s = 2t − 3`.
fn psi_exp_derivs(t: f64) -> [f64; 5] {
    let s = 2.0 * t - 3.0;
    let v = (1.0 - 1.0 / (1.0 - s * s)).exp();
    if v == 0.0 {
        return [0.0; 5];
    }
    // q^{(k)}(s) = −k!/2 · [(1−s)^{−(k+1)} + (−1)^k (1+s)^{−(k+1)}]
    let (a, b) = (1.0 / (1.0 - s), 1.0 / (1.0 + s));
    let q = |k: i32, fact: f64| {
        let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
        -0.5 * fact * (a.powi(k + 1) + sign * b.powi(k + 1))
    };
    let (q1, q2, q3, q4) = (q(1, 1.0), q(2, 2.0), q(3, 6.0), q(4, 24.0));
    let d1 = q1;
    let d2 = q2 + q1 * q1;
    let d3 = q3 + 3.0 * q1 * q2 + q1 * q1 * q1;
    let d4 = q4 + 4.0 * q1 * q3 + 3.0 * q2 * q2 + 6.0 * q1 * q1 * q2 + q1.powi(4);
    [v, 2.0 * v * d1, 4.0 * v * d2, 8.0 * v * d3, 16.0 * v * d4]
}

/// `φ` of the product scheme: derivative of order `order` at `t`.
pub fn bump_phi(t: f64, order: usize) -> Result<f64> {
    BumpFn::phi().eval(t, order)
}

/// Tensor bump `ψ₂(x₁, x₂) = ψ(x₁)ψ(x₂)` on `[1,2]²`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Bump2 {
    pub inner: BumpFn,
}

impl Bump2 {
    pub fn new(inner: BumpFn) -> Self {
        Self { inner }
    }

    /// `[v, ∂₁, ∂₂, ∂₁₁, ∂₁₂, ∂₂₂]` at `(x1, x2)`.
    pub fn partials(&self, x1: f64, x2: f64) -> [f64; 6] {
        let a = self.inner.derivs(x1);
        let b = self.inner.derivs(x2);
        [
            a[0] * b[0],
            a[1] * b[0],
            a[0] * b[1],
            a[2] * b[0],
            a[1] * b[1],
            a[0] * b[2],
        ]
    }

    pub fn value(&self, x1: f64, x2: f64) -> f64 {
        self.inner.value(x1) * self.inner.value(x2)
    }
}
