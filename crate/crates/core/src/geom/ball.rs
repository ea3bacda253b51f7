use super::convex::{abs_pow, sublevel_interval, PowProfile};
use super::line::Line;
use crate::error::{Error, Result};
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use statrs::function::gamma::ln_gamma;
use std::fmt;
use std::str::FromStr;

/// The exponent `p ∈ [1, ∞]`; `∞` is a separate tag handled by max-norm branches.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Exponent {
    Finite(f64),
    Infinite,
}

impl Exponent {
    pub fn new(p: f64) -> Result<Self> {
        if p == f64::INFINITY {
            Ok(Self::Infinite)
        } else if p.is_finite() && p >= 1.0 {
            Ok(Self::Finite(p))
        } else {
            Err(Error::InvalidExponent(p))
        }
    }

    /// `p` as a real, `f64::INFINITY` for the cube.
    pub fn value(self) -> f64 {
        match self {
            Self::Finite(p) => p,
            Self::Infinite => f64::INFINITY,
        }
    }

    pub fn finite(self) -> Option<f64> {
        match self {
            Self::Finite(p) => Some(p),
            Self::Infinite => None,
        }
    }

    pub fn is_infinite(self) -> bool {
        matches!(self, Self::Infinite)
    }

    /// `‖x‖_p`.
    pub fn norm(self, x: &[f64]) -> f64 {
        match self {
            Self::Finite(p) => pow_sum(x, p).powf(1.0 / p),
            Self::Infinite => x.iter().fold(0.0, |m, v| m.max(v.abs())),
        }
    }
}

impl fmt::Display for Exponent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Finite(p) => write!(f, "{p}"),
            Self::Infinite => write!(f, "inf"),
        }
    }
}

impl FromStr for Exponent {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "inf" | "infinity" | "∞" => Ok(Self::Infinite),
            t => {
                let p: f64 = t
                    .parse()
                    .map_err(|_| Error::InvalidParameter(format!("cannot parse exponent `{s}`")))?;
                Self::new(p)
            }
        }
    }
}

impl Serialize for Exponent {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Exponent {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Num(f64),
            Text(String),
        }
        match Raw::deserialize(d)? {
            Raw::Num(p) => Exponent::new(p),
            Raw::Text(s) => s.parse(),
        }
        .map_err(serde::de::Error::custom)
    }
}

/// `Σ|x_i|^p`.
pub fn pow_sum(x: &[f64], p: f64) -> f64 {
    x.iter().map(|v| abs_pow(*v, p)).sum()
}

/// `‖x‖_p` for a raw real `p ∈ [1, ∞]`.
pub fn lp_norm(x: &[f64], p: f64) -> Result<f64> {
    if x.is_empty() {
        return Err(Error::InvalidParameter("empty vector".into()));
    }
    Ok(Exponent::new(p)?.norm(x))
}

/// The radius `κ_{p,n} = Γ(1+n/p)^{1/n} / (2Γ(1+1/p))` making `B_p^n` volume one.
pub fn kappa(p: Exponent, n: usize) -> f64 {
    match p {
        Exponent::Infinite => 0.5,
        Exponent::Finite(p) => {
            let n = n as f64;
            (ln_gamma(1.0 + n / p) / n - ln_gamma(1.0 + 1.0 / p)).exp() / 2.0
        }
    }
}

/// `a_n = κ_{p,n} p^{1/p} / n^{1/p}`, the scale of a single coordinate.
pub fn a_tilde(p: f64, n: usize) -> Result<f64> {
    if !p.is_finite() {
        return Err(Error::InvalidParameter("a_tilde is undefined for p = inf".into()));
    }
    let e = Exponent::new(p)?;
    if n == 0 {
        return Err(Error::InvalidParameter("n must be positive".into()));
    }
    Ok(kappa(e, n) * (p / n as f64).powf(1.0 / p))
}

/// `lim a_n = e^{-1/p} / (2Γ(1+1/p))`.
pub fn a_tilde_limit(p: f64) -> f64 {
    (-1.0 / p - ln_gamma(1.0 + 1.0 / p)).exp() / 2.0
}

/// The volume-one body `B_p^n`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LpBall {
    pub p: Exponent,
    pub n: usize,
    pub kappa: f64,
}

impl LpBall {
    pub fn new(p: Exponent, n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidParameter("dimension must be >= 1".into()));
        }
        Ok(Self {
            p,
            n,
            kappa: kappa(p, n),
        })
    }

    /// Cube `[-1/2, 1/2]^n`.
    pub fn cube(n: usize) -> Result<Self> {
        Self::new(Exponent::Infinite, n)
    }

    /// `κ^p` for finite `p`.
    pub fn kappa_pow(&self) -> f64 {
        match self.p {
            Exponent::Finite(p) => self.kappa.powf(p),
            Exponent::Infinite => f64::INFINITY,
        }
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        match self.p {
            Exponent::Infinite => x.iter().all(|v| v.abs() <= 0.5),
            Exponent::Finite(p) => pow_sum(x, p) <= self.kappa_pow(),
        }
    }

    /// Parameter interval of `line ∩ B_p^n`.
    pub fn chord(&self, line: &Line) -> Option<(f64, f64)> {
        match self.p {
            Exponent::Infinite => box_chord(line, -0.5, 0.5),
            Exponent::Finite(p) => {
                let prof = PowProfile { p };
                let f = |t: f64| {
                    let mut acc = [0.0; 3];
                    for (x, d) in line.origin.iter().zip(&line.direction) {
                        let e = prof.eval(x + t * d);
                        acc[0] += e[0];
                        acc[1] += e[1] * d;
                        acc[2] += e[2] * d * d;
                    }
                    acc
                };
                let speed = line.speed();
                if speed == 0.0 {
                    return None;
                }
                sublevel_interval(&f, self.kappa_pow(), self.kappa / speed)
            }
        }
    }
}

/// Parameter interval of `line ∩ [lo, hi]^n`.
pub(crate) fn box_chord(line: &Line, lo: f64, hi: f64) -> Option<(f64, f64)> {
    let (mut a, mut b) = (f64::NEG_INFINITY, f64::INFINITY);
    for (x, d) in line.origin.iter().zip(&line.direction) {
        if *d == 0.0 {
            if *x < lo || *x > hi {
                return None;
            }
            continue;
        }
        let (t1, t2) = ((lo - x) / d, (hi - x) / d);
        a = a.max(t1.min(t2));
        b = b.min(t1.max(t2));
    }
    (a < b && a.is_finite() && b.is_finite()).then_some((a, b))
}
