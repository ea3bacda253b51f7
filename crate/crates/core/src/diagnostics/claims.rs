//! Implementations of the claim catalog.

use super::{report, CheckReport, Claim, ClaimParams, Relation, RATE_SLACK};
use crate::error::{invalid, Result};
use crate::finder::{highp_radii, lowp_radii, Knobs};
use crate::geom::{a_tilde, abs_pow, BumpFn, Exponent, LpBall};
use crate::perturb::{gaussian_radial_tv, HighPScheme, PairMap};
use crate::samplers::{replicate, sign, ExpPower, RandomStream};
use crate::stats;
use rand::Rng;
use rand_distr::{Distribution, Exp1, Gamma, StandardNormal};
use statrs::function::gamma::gamma;

fn finite_ball(p: f64, n: usize) -> Result<LpBall> {
    if !p.is_finite() {
        return Err(invalid("this check needs a finite p"));
    }
    LpBall::new(Exponent::new(p)?, n)
}

fn opt_p(p: f64) -> Option<f64> {
    Some(p)
}

/// `a/b` for independent estimates, with the delta-method error.
fn ratio_independent((a, sa): (f64, f64), (b, sb): (f64, f64)) -> (f64, f64) {
    let q = a / b;
    (q, (sa * sa + q * q * sb * sb).sqrt() / b.abs())
}

/// `Σa/Σb` over paired samples, with the delta-method error.
fn ratio_paired(a: &[f64], b: &[f64]) -> (f64, f64) {
    let (ma, mb) = (stats::mean(a), stats::mean(b));
    let q = ma / mb;
    let resid: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - q * y).collect();
    (q, stats::stderr(&resid) / mb.abs())
}

/// Sample covariance and its standard error.
fn cov_se(x: &[f64], y: &[f64]) -> (f64, f64) {
    let (mx, my) = (stats::mean(x), stats::mean(y));
    let prod: Vec<f64> = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).collect();
    stats::mean_se(&prod)
}

/// Stable-rate check: `|C(2s)|/|C(s)| ≤ 1.25`.
fn rate_relation() -> Relation {
    Relation::AtMost { threshold: RATE_SLACK }
}

pub(super) fn cov_squares(params: &ClaimParams, stream: &RandomStream) -> Result<CheckReport> {
    let n = params.dim(64)?;
    let p = params.get("p", 3.0);
    let samples = params.samples()?;
    if n < 2 {
        return Err(invalid("need n >= 2"));
    }
    let ball = LpBall::new(Exponent::new(p)?, n)?;
    let draws = replicate(samples, stream, |rng, _| {
        let m = ball.sample_marginal(2, rng);
        (m.x[0] * m.x[0], m.x[1] * m.x[1])
    });
    let (a, b): (Vec<f64>, Vec<f64>) = draws.into_iter().unzip();
    let (c, se) = cov_se(&a, &b);
    // Independent coordinates: the inequality holds with equality.
    let relation = if p.is_infinite() {
        Relation::Equals { target: 0.0 }
    } else {
        Relation::AtMost { threshold: 0.0 }
    };
    Ok(report(Claim::CovSquares, n, opt_p(p), c, se, relation, samples, stream, String::new()))
}

/// The first `k` coordinates of uniform points of `B_p^n` and `B_p^{2n}`
/// built from the same `g₁..g_k`, together with `(a_n g, a_{2n} g)`.
///
/// The remainders are `G ~ Gamma((n−k)/p + 1)` and `G + G'` with
/// `G' ~ Gamma(n/p)`, so each marginal is exact and the two are coupled.
struct Coupled {
    p: f64,
    k: usize,
    kappa: [f64; 2],
    an: [f64; 2],
    law: ExpPower,
    rest: Gamma<f64>,
    extra: Gamma<f64>,
}

/// One coupled draw: `(x at n, x at 2n, a_n g, a_{2n} g)`.
type CoupledDraw = [Vec<f64>; 4];

impl Coupled {
    fn new(p: f64, n: usize, k: usize) -> Result<Self> {
        let ball = finite_ball(p, n)?;
        let ball2 = finite_ball(p, 2 * n)?;
        if k >= n {
            return Err(invalid("need n larger than the number of coordinates"));
        }
        let gamma = |shape: f64| Gamma::new(shape, 1.0).map_err(|e| invalid(e.to_string()));
        Ok(Self {
            p,
            k,
            kappa: [ball.kappa, ball2.kappa],
            an: [a_tilde(p, n)?, a_tilde(p, 2 * n)?],
            law: ExpPower::new(p)?,
            rest: gamma((n - k) as f64 / p + 1.0)?,
            extra: gamma(n as f64 / p)?,
        })
    }

    fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> CoupledDraw {
        let mut s = 0.0;
        let g: Vec<f64> = (0..self.k)
            .map(|_| {
                let (g, gp) = self.law.sample_with_pow(rng);
                s += gp;
                g
            })
            .collect();
        let s1 = s + self.rest.sample(rng);
        let s2 = s1 + self.extra.sample(rng);
        let scaled = |c: f64| g.iter().map(|v| c * v).collect::<Vec<f64>>();
        [
            scaled(self.kappa[0] / s1.powf(1.0 / self.p)),
            scaled(self.kappa[1] / s2.powf(1.0 / self.p)),
            scaled(self.an[0]),
            scaled(self.an[1]),
        ]
    }
}

/// `|C(2n)|/|C(n)|` with `C(m) = m·E[f(X₁, a_m g₁)]` on coupled draws.
fn coupled_coord_ratio(
    p: f64,
    n: usize,
    samples: usize,
    stream: &RandomStream,
    f: impl Fn(f64, f64) -> f64 + Sync + Send,
) -> Result<(f64, f64, f64, f64)> {
    let c = Coupled::new(p, n, 1)?;
    let nf = n as f64;
    let draws = replicate(samples, stream, |rng, _| {
        let d = c.draw(rng);
        (2.0 * nf * f(d[1][0], d[3][0]), nf * f(d[0][0], d[2][0]))
    });
    let (a, b): (Vec<f64>, Vec<f64>) = draws.into_iter().unzip();
    let (ma, mb) = (stats::mean(&a), stats::mean(&b));
    let sgn = |v: f64| if v < 0.0 { -1.0 } else { 1.0 };
    let a: Vec<f64> = a.iter().map(|v| v * sgn(ma)).collect();
    let b: Vec<f64> = b.iter().map(|v| v * sgn(mb)).collect();
    let (q, se) = ratio_paired(&a, &b);
    Ok((q, se, mb, ma))
}

pub(super) fn coord_l2(params: &ClaimParams, stream: &RandomStream) -> Result<CheckReport> {
    let n = params.dim(256)?;
    let p = params.get("p", 3.0);
    let samples = params.samples()?;
    let sq = |x: f64, xt: f64| (x - xt) * (x - xt);
    let (q, se, c1, c2) = coupled_coord_ratio(p, n, samples, stream, sq)?;
    let note = format!("C(n)={c1:.4e} C(2n)={c2:.4e}");
    Ok(report(Claim::CoordL2, n, opt_p(p), q, se, rate_relation(), samples, stream, note))
}

fn bump_radius(params: &ClaimParams, n: usize) -> Result<f64> {
    let big_r = params.get("R", 1.0);
    if !(big_r >= 1.0 && big_r <= (n as f64).sqrt()) {
        return Err(invalid(format!("need 1 <= R <= sqrt(n), got R={big_r}")));
    }
    Ok(big_r)
}

pub(super) fn phi_mean(params: &ClaimParams, stream: &RandomStream) -> Result<CheckReport> {
    let n = params.dim(256)?;
    let p = params.get("p", 3.0);
    let samples = params.samples_or(400_000)?;
    let big_r = bump_radius(params, n)?;
    let phi = BumpFn::phi();
    let diff = |x: f64, xt: f64| phi.value(big_r * x) - phi.value(big_r * xt);
    let (q, se, c1, c2) = coupled_coord_ratio(p, n, samples, stream, diff)?;
    let note = format!("bump=phi R={big_r} C(n)={c1:.4e} C(2n)={c2:.4e}");
    Ok(report(Claim::PhiMean, n, opt_p(p), q, se, rate_relation(), samples, stream, note))
}

/// `|C(2n)|/|C(n)|` with `C(m) = mR·Cov(φ(RX₁), φ(RX₂))`, by batch means on
/// coupled draws. The independent surrogate `a_m g` is subtracted as a
/// control variate (its covariance is zero).
pub(super) fn phi_cov(params: &ClaimParams, stream: &RandomStream) -> Result<CheckReport> {
    const BATCHES: usize = 100;
    let n = params.dim(256)?;
    let p = params.get("p", 3.0);
    let samples = params.samples_or(1_000_000)?;
    let big_r = bump_radius(params, n)?;
    let c = Coupled::new(p, n, 2)?;
    let phi = BumpFn::phi();
    let draws = replicate(samples, stream, |rng, _| {
        let d = c.draw(rng);
        let f = |v: &Vec<f64>| [phi.value(big_r * v[0]), phi.value(big_r * v[1])];
        [f(&d[0]), f(&d[1]), f(&d[2]), f(&d[3])]
    });
    let per = (samples / BATCHES).max(2);
    let cov = |chunk: &[[[f64; 2]; 4]], k: usize| {
        let x: Vec<f64> = chunk.iter().map(|d| d[k][0]).collect();
        let y: Vec<f64> = chunk.iter().map(|d| d[k][1]).collect();
        stats::covariance(&x, &y)
    };
    let nf = n as f64;
    let (a, b): (Vec<f64>, Vec<f64>) = draws
        .chunks(per)
        .filter(|ch| ch.len() == per)
        .map(|ch| {
            (
                2.0 * nf * big_r * (cov(ch, 1) - cov(ch, 3)),
                nf * big_r * (cov(ch, 0) - cov(ch, 2)),
            )
        })
        .unzip();
    let (c1, c2) = (stats::mean(&b), stats::mean(&a));
    let a: Vec<f64> = a.iter().map(|v| v * c2.signum()).collect();
    let b: Vec<f64> = b.iter().map(|v| v * c1.signum()).collect();
    let (q, se) = ratio_paired(&a, &b);
    let note = format!("bump=phi R={big_r} C(n)={c1:.4e} C(2n)={c2:.4e}");
    Ok(report(Claim::PhiCov, n, opt_p(p), q, se, rate_relation(), samples, stream, note))
}

/// Limit of `Var(‖X‖₂²)/n` for `X` uniform in `B_p^n`:
/// `a⁴·(pΓ(5/p)Γ(1/p) − (p+4)Γ(3/p)²)/(pΓ(1/p)²)` with `a = a_n`.
pub fn var_norm_limit(p: f64, n: usize) -> Result<f64> {
    if p.is_infinite() {
        return Ok(1.0 / 180.0);
    }
    let an = a_tilde(p, n)?;
    let f = (p * gamma(5.0 / p) * gamma(1.0 / p) - (p + 4.0) * gamma(3.0 / p).powi(2))
        / (p * gamma(1.0 / p).powi(2));
    Ok(an.powi(4) * f)
}

pub(super) fn var_norm(params: &ClaimParams, stream: &RandomStream) -> Result<CheckReport> {
    let n = params.dim(4096)?;
    let p = params.get("p", 4.0);
    let samples = params.samples()?;
    if p == 2.0 {
        return Err(invalid("the variance limit degenerates at p = 2"));
    }
    let ball = LpBall::new(Exponent::new(p)?, n)?;
    let v = replicate(samples, stream, |rng, _| {
        ball.sample(rng).iter().map(|x| x * x).sum::<f64>()
    });
    let nf = n as f64;
    let est = stats::variance(&v) / nf;
    let se = stats::variance_se(&v) / nf;
    let target = var_norm_limit(p, n)?;
    let relation = if p.is_infinite() {
        Relation::Equals { target }
    } else {
        Relation::Within { target, tol: 0.1 * target }
    };
    Ok(report(Claim::VarNorm, n, opt_p(p), est, se, relation, samples, stream, String::new()))
}

pub(super) fn gauss_tail(params: &ClaimParams, stream: &RandomStream) -> Result<CheckReport> {
    let n = params.dim(16)?;
    let samples = params.samples()?;
    let cut = n as f64 / 4.0;
    let v = replicate(samples, stream, |rng, _| {
        let s: f64 = (0..n)
            .map(|_| {
                let z: f64 = StandardNormal.sample(rng);
                z * z
            })
            .sum();
        if s > cut {
            1.0
        } else {
            0.0
        }
    });
    let (m, se) = stats::mean_se(&v);
    let rel = Relation::AtLeast { threshold: 0.9 };
    Ok(report(Claim::GaussTail, n, None, m, se, rel, samples, stream, String::new()))
}

pub(super) fn gauss_tv(params: &ClaimParams, stream: &RandomStream) -> Result<CheckReport> {
    let n = params.dim(256)?;
    let r = params.get("r", 0.5 * (n as f64).powf(-0.25));
    let tv = gaussian_radial_tv(n, r);
    let rel = Relation::AtMost { threshold: 0.1 };
    Ok(report(Claim::GaussTv, n, None, tv, 0.0, rel, 0, stream, format!("r={r:.6}")))
}

pub(super) fn exp_moments(params: &ClaimParams, stream: &RandomStream) -> Result<CheckReport> {
    let p = params.get("p", 2.0);
    let order = params.get("order", 1.0);
    let samples = params.samples()?;
    let law = ExpPower::new(p)?;
    let v = replicate(samples, stream, |rng, _| law.sample_with_pow(rng).1);
    let (est, se) = match order as i64 {
        1 => stats::mean_se(&v),
        2 => (stats::variance(&v), stats::variance_se(&v)),
        _ => return Err(invalid(format!("order must be 1 or 2, got {order}"))),
    };
    let rel = Relation::Equals { target: 1.0 / p };
    let note = format!("order={order}");
    Ok(report(Claim::ExpMoments, 1, opt_p(p), est, se, rel, samples, stream, note))
}

/// `||X| − E|` for the product measure (cube or Gaussian) at dimension `n`.
fn shell_deviation(n: usize, gaussian: bool, samples: usize, stream: &RandomStream) -> Vec<f64> {
    let nf = n as f64;
    let e = if gaussian { nf.sqrt() } else { (nf / 12.0).sqrt() };
    replicate(samples, stream, |rng, _| {
        let s: f64 = (0..n)
            .map(|_| {
                let x: f64 = if gaussian {
                    StandardNormal.sample(rng)
                } else {
                    rng.gen::<f64>() - 0.5
                };
                x * x
            })
            .sum();
        (s.sqrt() - e).abs()
    })
}

pub(super) fn bernstein_shell(params: &ClaimParams, stream: &RandomStream) -> Result<CheckReport> {
    let n = params.dim(256)?;
    let gaussian = params.get("gaussian", 0.0) != 0.0;
    let samples = params.samples()?;
    let d1 = shell_deviation(n, gaussian, samples, &stream.substream(1));
    let d2 = shell_deviation(2 * n, gaussian, samples, &stream.substream(2));
    let tail = |d: &[f64], t: f64| d.iter().filter(|v| **v > t).count() as f64 / d.len() as f64;
    let expo = |t: f64, m: usize| (t * t).min(t * (m as f64).sqrt());
    let ts: Vec<f64> = [0.5, 0.9, 0.99].iter().map(|q| stats::quantile(&d1, *q)).collect();
    // Exponent c̃ by least squares of log P on min(t², t√n); C̃ makes the curve dominate at n.
    let pts: Vec<(f64, f64)> = ts.iter().map(|t| (expo(*t, n), tail(&d1, *t).ln())).collect();
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / pts.len() as f64;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / pts.len() as f64;
    let slope = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum::<f64>()
        / pts.iter().map(|p| (p.0 - mx).powi(2)).sum::<f64>();
    let c_small = (-slope).max(0.0);
    let c_big = pts
        .iter()
        .map(|(m, lp)| (lp + c_small * m).exp())
        .fold(0.0, f64::max);
    let (mut est, mut se) = (f64::NEG_INFINITY, 0.0);
    for t in &ts {
        let bound = c_big * (-c_small * expo(*t, 2 * n)).exp();
        let q = tail(&d2, *t);
        let (r, s) = (q / bound, (q * (1.0 - q) / samples as f64).sqrt() / bound);
        if r + 3.0 * s > est + 3.0 * se {
            est = r;
            se = s;
        }
    }
    let note = format!("C~={c_big:.4} c~={c_small:.4} measure={}", if gaussian { "gaussian" } else { "cube" });
    let p = if gaussian { None } else { Some(f64::INFINITY) };
    Ok(report(Claim::BernsteinShell, n, p, est, se, rate_relation(), 2 * samples, stream, note))
}

/// Default multiplier on `R = n^{1/(2p+1)}` in the high-p set checks; it puts
/// the bump window `[1/R, 2/R]` where the coordinate density is nearly flat.
const SETS_R_SCALE: f64 = 4.0;

/// The high-p scheme at `(ε, n)` under `n R³ r⁴ = ε⁶` with the default `R`.
fn compliant_scheme(p: f64, n: usize, eps: f64, params: &ClaimParams) -> Result<HighPScheme> {
    let ball = finite_ball(p, n)?;
    let knobs = Knobs {
        r_scale: params.get("r_scale", SETS_R_SCALE),
        ..Knobs::default()
    };
    let (big_r, _) = highp_radii(p, n, &knobs);
    let big_r = params.get("R", big_r);
    let r = (eps.powi(6) / (n as f64 * big_r.powi(3))).powf(0.25);
    HighPScheme::relaxed(ball, r, big_r, BumpFn::psi())
}

pub(super) fn highp_sets(params: &ClaimParams, stream: &RandomStream) -> Result<CheckReport> {
    let n = params.dim(512)?;
    let p = params.get("p", 4.0);
    let eps = params.get("eps", 0.05);
    let samples = params.samples()?;
    let part = params.get("part", 1.0);
    let ball = finite_ball(p, n)?;
    match part as i64 {
        1 => {
            // ‖X‖_p^p = κ^p S/(S + Z) with S ~ Gamma(n/p), Z ~ Exp(1).
            let kp = ball.kappa_pow();
            let shape = Gamma::new(n as f64 / p, 1.0).map_err(|e| invalid(e.to_string()))?;
            let v = replicate(samples, stream, |rng, _| {
                let s: f64 = shape.sample(rng);
                let z: f64 = Exp1.sample(rng);
                if kp * s / (s + z) <= kp - eps {
                    1.0
                } else {
                    0.0
                }
            });
            let (m, se) = stats::mean_se(&v);
            let target = (1.0 - eps / kp).powf(n as f64 / p);
            let note = format!("part=1 eps={eps}");
            let rel = Relation::Equals { target };
            Ok(report(Claim::HighpSets, n, opt_p(p), m, se, rel, samples, stream, note))
        }
        2 => {
            let knobs = Knobs {
                r_scale: params.get("r_scale", SETS_R_SCALE),
                ..Knobs::default()
            };
            let (big_r, _) = highp_radii(p, n, &knobs);
            let big_r = params.get("R", big_r);
            let c_of = |rr: f64, s: &RandomStream| {
                let v = replicate(samples, s, |rng, _| {
                    let x = ball.sample_marginal(1, rng).x[0];
                    if (1.0..=2.0).contains(&(rr * x)) {
                        1.0
                    } else {
                        0.0
                    }
                });
                let (m, se) = stats::mean_se(&v);
                (rr * m, rr * se)
            };
            let c1 = c_of(big_r, &stream.substream(1));
            let c2 = c_of(2.0 * big_r, &stream.substream(2));
            let (q, se) = ratio_independent(c2, c1);
            let note = format!("part=2 R={big_r:.4} C(R)={:.4e} C(2R)={:.4e}", c1.0, c2.0);
            Ok(report(Claim::HighpSets, n, opt_p(p), q, se, rate_relation(), 2 * samples, stream, note))
        }
        3 => {
            // E[(Σg(X_i))²]/ε³ at n and 2n, each at its compliant (r, R).
            let m_of = |dim: usize, s: &RandomStream| -> Result<(f64, f64)> {
                let sch = compliant_scheme(p, dim, eps, params)?;
                let b = finite_ball(p, dim)?;
                let v = replicate(samples, s, |rng, _| {
                    let t: f64 = b.sample(rng).iter().map(|y| sch.g(*y)).sum();
                    t * t
                });
                let (m, se) = stats::mean_se(&v);
                let e3 = eps.powi(3);
                Ok((m / e3, se / e3))
            };
            let m1 = m_of(n, &stream.substream(1))?;
            let m2 = m_of(2 * n, &stream.substream(2))?;
            let (q, se) = ratio_independent(m2, m1);
            let note = format!("part=3 eps={eps} M(n)={:.4e} M(2n)={:.4e}", m1.0, m2.0);
            Ok(report(Claim::HighpSets, n, opt_p(p), q, se, rate_relation(), 2 * samples, stream, note))
        }
        _ => Err(invalid(format!("part must be 1, 2 or 3, got {part}"))),
    }
}

/// Largest active set whose sign patterns are enumerated exactly.
const MAX_ENUMERATED: usize = 16;

/// Uniform points of `A = A₁ ∩ A₂ ∩ A₃` by rejection.
fn sample_good_set(s: &HighPScheme, eps: f64, count: usize, stream: &RandomStream) -> Result<Vec<Vec<f64>>> {
    let ball = s.ball;
    let kp = ball.kappa_pow();
    let p = s.p();
    let max_active = ball.n as f64 / (s.big_r * eps);
    let cap = 1000;
    let out = replicate(count, stream, |rng, _| {
        for _ in 0..cap {
            let y = ball.sample(rng);
            let in_a1 = y.iter().map(|v| abs_pow(*v, p)).sum::<f64>() <= kp - eps;
            let in_a2 = (s.active(&y).len() as f64) <= max_active;
            let in_a3 = y.iter().map(|v| s.g(*v)).sum::<f64>().abs() <= eps;
            if in_a1 && in_a2 && in_a3 {
                return Some(y);
            }
        }
        None
    });
    out.into_iter()
        .collect::<Option<Vec<_>>>()
        .ok_or_else(|| invalid(format!("the set A has mass below 1/{cap} at these parameters")))
}

/// `P_δ(x(y, δ) ∉ B_p^n)` for one `y`: exact over the active signs when at
/// most 16 coordinates are active, else over 4096 sign draws.
fn escape_given(s: &HighPScheme, y: &[f64], stream: &RandomStream) -> f64 {
    let p = s.p();
    let margin = s.ball.kappa_pow() - y.iter().map(|v| abs_pow(*v, p)).sum::<f64>();
    let steps: Vec<[f64; 2]> = s
        .active(y)
        .into_iter()
        .map(|i| {
            let base = abs_pow(y[i], p);
            [1.0, -1.0].map(|d| abs_pow(s.invert_coord(y[i], d, 1.0), p) - base)
        })
        .collect();
    if steps.iter().map(|a| a[0].max(a[1])).sum::<f64>() <= margin {
        return 0.0;
    }
    let k = steps.len();
    if k <= MAX_ENUMERATED {
        let hits = (0u32..1 << k)
            .filter(|mask| {
                let t: f64 = steps.iter().enumerate().map(|(i, a)| a[((mask >> i) & 1) as usize]).sum();
                t > margin
            })
            .count();
        return hits as f64 / (1u64 << k) as f64;
    }
    let mut rng = stream.rng();
    let draws = 4096;
    let hits = (0..draws)
        .filter(|_| steps.iter().map(|a| a[rng.gen_range(0..2)]).sum::<f64>() > margin)
        .count();
    hits as f64 / draws as f64
}

/// Largest escape probability over `count` points of `A`.
fn worst_escape(s: &HighPScheme, eps: f64, count: usize, stream: &RandomStream) -> Result<f64> {
    let ys = sample_good_set(s, eps, count, &stream.child("y"))?;
    let inner = stream.child("signs");
    let probs = crate::par::map_indexed(ys.len(), |k| escape_given(s, &ys[k], &inner.substream(k as u64)));
    Ok(probs.into_iter().fold(0.0, f64::max))
}

/// Worst escape probability over sampled `y ∈ A` at `r`, against
/// `exp(−c ε⁴R⁻²r⁻²)` with `c` fitted from the worst case at `2r`.
pub(super) fn escape_prob(params: &ClaimParams, stream: &RandomStream) -> Result<CheckReport> {
    let n = params.dim(64)?;
    let p = params.get("p", 4.0);
    let eps = params.get("eps", 0.05);
    let samples = params.samples_or(2000)?;
    let base = compliant_scheme(p, n, eps, params)?;
    let r = params.get("r", base.r * params.get("r_mul", 1.0));
    let s = HighPScheme::relaxed(base.ball, r, base.big_r, base.psi)?;
    let q = worst_escape(&s, eps, samples, &stream.substream(0))?;
    let scale = eps.powi(4) / (s.big_r * s.big_r);
    let fit = HighPScheme::relaxed(s.ball, 2.0 * r, s.big_r, s.psi)
        .ok()
        .map(|sf| worst_escape(&sf, eps, samples, &stream.substream(1)))
        .transpose()?;
    let (threshold, note) = match fit {
        Some(qf) if qf > 0.0 => {
            let c = -qf.ln() * 4.0 * r * r / scale;
            ((-c * scale / (r * r)).exp(), format!("eps={eps} R={:.4} r={r:.4e} c={c:.4e}", s.big_r))
        }
        Some(_) => (0.0, format!("eps={eps} R={:.4} r={r:.4e} no escape at 2r", s.big_r)),
        None => (0.0, format!("eps={eps} R={:.4} r={r:.4e} 2r is not monotone", s.big_r)),
    };
    let rel = Relation::AtMost { threshold };
    Ok(report(Claim::EscapeProb, n, opt_p(p), q, 0.0, rel, samples, stream, note))
}

pub(super) fn pair_norm_drift(params: &ClaimParams, stream: &RandomStream) -> Result<CheckReport> {
    let n = params.dim(256)?;
    let p = params.get("p", 1.5);
    let samples = params.samples()?;
    let ball = finite_ball(p, n)?;
    let knobs = Knobs::default();
    let (r1, r2, r0) = lowp_radii(p, n, &knobs)?;
    let r = params.get("r", r0);
    let map = PairMap::new(p, r, r1, r2, BumpFn::psi())?;
    let half = map.with_r(0.5 * r);
    let drift = |m: &PairMap, x: &[f64], d: f64| {
        let h = m.h(x[0], x[1]);
        abs_pow(x[0] + d * h[0], p) + abs_pow(x[1] + d * h[1], p) - abs_pow(x[0], p) - abs_pow(x[1], p)
    };
    let draws = replicate(samples, stream, |rng, _| {
        let x = ball.sample_marginal(2, rng).x;
        let d = sign(rng);
        (drift(&map, &x, d).abs(), drift(&half, &x, d).abs())
    });
    let (a, b): (Vec<f64>, Vec<f64>) = draws.into_iter().unzip();
    if b.iter().all(|v| *v == 0.0) {
        let rel = Relation::Within { target: 4.0, tol: 1.0 };
        let note = "no draw in the support of the pair map".to_string();
        return Ok(report(Claim::PairNormDrift, n, opt_p(p), f64::NAN, f64::NAN, rel, samples, stream, note));
    }
    let (q, se) = ratio_paired(&a, &b);
    let rel = Relation::Within { target: 4.0, tol: 1.0 };
    let note = format!("r={r:.4e} R1={r1:.4} R2={r2:.4}");
    Ok(report(Claim::PairNormDrift, n, opt_p(p), q, se, rel, samples, stream, note))
}
