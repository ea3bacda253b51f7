//! Total-variation estimates `d_TV(X, Y)` between a base law and its
//! perturbation.
//!
//! With base density `b` and perturbed density `f`,
//! `d_TV = ½ E_X|f(X)/b(X) − 1| + ½ P(Y ∉ supp b)`. Both terms are reported.

use super::{PerturbationScheme, Perturbed1d};
use crate::error::Result;
use crate::geom::LpBall;
use crate::quad;
use crate::samplers::{replicate, Component1d, RandomStream};
use crate::stats;
use rand::Rng;
use rand_distr::{Distribution, Exp1};
use serde::{Deserialize, Serialize};
use statrs::distribution::{ChiSquared, ContinuousCDF};

/// Sign draws per point when a density needs Monte Carlo over `δ`.
pub const DELTA_SAMPLES: usize = 1 << 12;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TvEstimate {
    pub tv: f64,
    pub stderr: f64,
    /// `E_X|f(X)/b(X) − 1|` and its standard error.
    pub density_term: f64,
    pub density_se: f64,
    /// `P(Y ∉ supp b)` and its standard error.
    pub outside_mass: f64,
    pub outside_se: f64,
    pub samples: usize,
}

impl TvEstimate {
    fn from_terms(dens: &[f64], outside: &[f64]) -> Self {
        let (d, dse) = stats::mean_se(dens);
        let (o, ose) = if outside.is_empty() {
            (0.0, 0.0)
        } else {
            stats::mean_se(outside)
        };
        Self {
            tv: 0.5 * (d + o),
            stderr: 0.5 * (dse * dse + ose * ose).sqrt(),
            density_term: d,
            density_se: dse,
            outside_mass: o,
            outside_se: ose,
            samples: dens.len(),
        }
    }

    fn exact(tv: f64) -> Self {
        Self {
            tv,
            stderr: 0.0,
            density_term: 2.0 * tv,
            density_se: 0.0,
            outside_mass: 0.0,
            outside_se: 0.0,
            samples: 0,
        }
    }
}

/// `d_TV(N(0, I_n), N(0, (1 + r²) I_n))`, exact through the single crossing
/// of the two radial laws.
pub fn gaussian_radial_tv(n: usize, r: f64) -> f64 {
    if r == 0.0 {
        return 0.0;
    }
    let s2 = 1.0 + r * r;
    let v = n as f64 * s2 * s2.ln() / (s2 - 1.0);
    let chi = ChiSquared::new(n as f64).expect("positive degrees of freedom");
    chi.cdf(v) - chi.cdf(v / s2)
}

/// Estimates `d_TV` between the scheme's base law and its perturbation at
/// full size `u = 1` (the product scheme mixes `u` uniformly, as its density
/// is defined with the random `U`).
pub fn tv_estimate(
    scheme: &PerturbationScheme,
    n_samples: usize,
    stream: &RandomStream,
) -> Result<TvEstimate> {
    let inner = stream.child("delta");
    match scheme {
        PerturbationScheme::GaussianShift(s) => Ok(TvEstimate::exact(gaussian_radial_tv(s.n, s.r))),
        PerturbationScheme::Product(s) => {
            let laws: Vec<(Component1d, Vec<Perturbed1d>)> = s
                .mu
                .distinct()
                .into_iter()
                .map(|c| {
                    let base = s.coordinate_law(c)?;
                    let nodes = quad::unit_rule_32()
                        .iter()
                        .map(|(u, _)| base.with_r(u * s.r))
                        .collect();
                    Ok((c, nodes))
                })
                .collect::<Result<_>>()?;
            let rule = quad::unit_rule_32();
            let dens = replicate(n_samples, stream, |rng, _| {
                let y = s.mu.sample(rng);
                let mut mixed = 0.0;
                for (k, (_, w)) in rule.iter().enumerate() {
                    let mut log_ratio = 0.0;
                    for (c, t) in s.mu.components.iter().zip(&y) {
                        let law = &laws.iter().find(|(cc, _)| cc == c).unwrap().1[k];
                        log_ratio += law.ratio(*t).ln();
                    }
                    mixed += w * log_ratio.exp();
                }
                (mixed - 1.0).abs()
            });
            Ok(TvEstimate::from_terms(&dens, &[]))
        }
        PerturbationScheme::Simplex(s) => {
            let law = Perturbed1d::new(Component1d::Exponential, s.r, 0.0, s.psi)?;
            let dens = replicate(n_samples, stream, |rng, _| {
                let log_ratio: f64 = (0..s.n)
                    .map(|_| {
                        let g: f64 = Exp1.sample(rng);
                        law.ratio(g).ln()
                    })
                    .sum();
                (log_ratio.exp() - 1.0).abs()
            });
            Ok(TvEstimate::from_terms(&dens, &[]))
        }
        PerturbationScheme::HighP(s) => {
            let dens = replicate(n_samples, stream, |rng, k| {
                let y = s.ball.sample(rng);
                let mode = super::DensityMode::Auto {
                    samples: DELTA_SAMPLES,
                    stream: inner.substream(k as u64),
                };
                super::density_highp(s, &y, &mode).map(|f| (f - 1.0).abs())
            })
            .into_iter()
            .collect::<Result<Vec<f64>>>()?;
            let out = outside_mass(&s.ball, n_samples, &stream.child("outside"), |rng| {
                let x = s.ball.sample(rng);
                let d = super::signs(s.n(), rng);
                s.apply(&x, &d, 1.0)
            });
            Ok(TvEstimate::from_terms(&dens, &out))
        }
        PerturbationScheme::LowP(s) => {
            let level = s.ball.kappa_pow();
            let dens = replicate(n_samples, stream, |rng, k| {
                let y = s.ball.sample(rng);
                let (base, act) = s.active_terms(&y)?;
                let lo = base + act.iter().map(|(p, _)| p[0].min(p[1])).sum::<f64>();
                let hi = base + act.iter().map(|(p, _)| p[0].max(p[1])).sum::<f64>();
                let f = if lo > level {
                    0.0
                } else if hi <= level {
                    act.iter().map(|(_, j)| 0.5 * (j[0] + j[1])).product()
                } else {
                    let mut r = inner.substream(k as u64).rng();
                    let mut total = 0.0;
                    for _ in 0..DELTA_SAMPLES {
                        let mut pow = base;
                        let mut w = 1.0;
                        for (p, j) in &act {
                            let b = usize::from(r.gen::<bool>());
                            pow += p[b];
                            w *= j[b];
                        }
                        if pow <= level {
                            total += w;
                        }
                    }
                    total / DELTA_SAMPLES as f64
                };
                Ok((f - 1.0).abs())
            })
            .into_iter()
            .collect::<Result<Vec<f64>>>()?;
            let out = outside_mass(&s.ball, n_samples, &stream.child("outside"), |rng| {
                let x = s.ball.sample(rng);
                let d = super::signs(s.pairs(), rng);
                s.apply(&x, &d, 1.0)
            });
            Ok(TvEstimate::from_terms(&dens, &out))
        }
    }
}

fn outside_mass<F>(ball: &LpBall, n: usize, stream: &RandomStream, draw: F) -> Vec<f64>
where
    F: Fn(&mut crate::samplers::StreamRng) -> Vec<f64> + Sync + Send,
{
    replicate(n, stream, |rng, _| f64::from(!ball.contains(&draw(rng))))
}

#[cfg(test)]
mod tests {
    use super::super::*;
    use super::*;

    #[test]
    fn radial_tv_against_density_quadrature() {
        // Oracle: ½∫|q(v) − q(v/s²)/s²| dv with q the χ²_n density.
        for &(n, r) in &[(16usize, 0.4), (256, 0.5 * 256f64.powf(-0.25)), (64, 1.0)] {
            let s2: f64 = 1.0 + r * r;
            let k = n as f64 / 2.0;
            let lnq = |v: f64| (k - 1.0) * v.ln() - v / 2.0 - k * 2f64.ln() - statrs::function::gamma::ln_gamma(k);
            let f = |v: f64| 0.5 * (lnq(v).exp() - (lnq(v / s2) - s2.ln()).exp()).abs();
            let hi = 4.0 * n as f64 * s2 + 200.0;
            let oracle = quad::integrate(f, 1e-12, hi, 4000);
            let tv = gaussian_radial_tv(n, r);
            assert!((tv - oracle).abs() < 1e-7, "n={n}: {tv} vs {oracle}");
        }
        assert!(gaussian_radial_tv(256, 0.5 * 256f64.powf(-0.25)) < 0.1);
    }

    #[test]
    fn zero_perturbation_has_zero_tv() {
        let mu = ProductMeasure::gaussian(8).unwrap();
        let s = PerturbationScheme::Product(ProductScheme::new(mu, 0.0, 0.0, BumpFn::phi()).unwrap());
        let t = tv_estimate(&s, 500, &RandomStream::new(1)).unwrap();
        assert!(t.tv.abs() < 1e-12);
        let ball = LpBall::new(crate::geom::Exponent::Finite(3.0), 16).unwrap();
        let s = PerturbationScheme::HighP(HighPScheme::relaxed(ball, 0.0, 2.0, BumpFn::psi()).unwrap());
        let t = tv_estimate(&s, 500, &RandomStream::new(2)).unwrap();
        assert!(t.tv.abs() < 1e-12);
    }

    #[test]
    fn product_tv_is_small_at_quarter_scale() {
        let n = 64;
        let mu = ProductMeasure::gaussian(n).unwrap();
        let r = 0.5 * (n as f64).powf(-0.25);
        let s = PerturbationScheme::Product(ProductScheme::new(mu, r, 0.0, BumpFn::phi()).unwrap());
        let t = tv_estimate(&s, 2000, &RandomStream::new(3)).unwrap();
        assert!(t.tv < 0.05, "{t:?}");
    }
}
