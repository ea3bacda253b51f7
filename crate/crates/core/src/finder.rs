//! Lower-bound certificates: random segments from a perturbation scheme,
//! measured against a set on a grid of the scheme's time variable `u`.
//!
//! Each trial draws a base point `x` and a direction `w`, walks the path
//! `x + s(u)·w` for `u ∈ [0, 1]`, and records the fraction of grid midpoints
//! `u_k = (k + ½)/G` inside the set. The certified length is that fraction
//! times `s(1)·|w|`. Trials whose `|w|` falls below the scheme's norm floor
//! are discarded.

use crate::error::{invalid, Result};
use crate::geom::{a_tilde, norm2, BumpFn, BumpKind, Exponent, LpBall, Segment};
use crate::perturb::{
    BaseDraw, GaussianShiftScheme, HighPScheme, LowPScheme, PairMap, PerturbationScheme,
    SchemeSpec, SimplexScheme,
};
use crate::samplers::{replicate, ProductMeasure, RandomStream, StreamRng};
use crate::sets::{MembershipSet, SetDescriptor};
use serde::{Deserialize, Serialize};

/// The measure (and for `B_p^n`, the exponent) under study.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Regime {
    /// Uniform measure on `B_p^n`; `p = ∞` is the cube.
    Lp { p: f64 },
    /// Standard Gaussian product.
    Gaussian,
    /// The mixture `X + UY`.
    Mixture,
}

impl Regime {
    pub fn cube() -> Self {
        Self::Lp { p: f64::INFINITY }
    }

    pub fn label(&self) -> String {
        match self {
            Self::Lp { p } if p.is_infinite() => "cube".into(),
            Self::Lp { p } => format!("p={p}"),
            Self::Gaussian => "gaussian".into(),
            Self::Mixture => "mixture".into(),
        }
    }

    /// `p` for the `B_p^n` regimes, `2` for the Gaussian ones.
    pub fn p(&self) -> f64 {
        match self {
            Self::Lp { p } => *p,
            _ => 2.0,
        }
    }
}

/// Free constants of the default parameter formulas.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Knobs {
    /// The `ε` of the high-p, pair and simplex formulas.
    pub eps: f64,
    /// Multiplier on `R = n^{1/(2p+1)}`.
    pub r_scale: f64,
    /// `C̃` in `r = n^{−1/4}/(2C̃)^{1/4}`.
    pub c_tilde: f64,
    /// `c` in `r = c n^{−1/4}|log(1 − a)|^{1/4}` for `a > 1/2`.
    pub c_large: f64,
    /// `c₁` in `R₂ = c₁ log^{1/p} n`.
    pub c1: f64,
    /// Use the tilt `R = r` in the product scheme instead of `R = 0`.
    pub tilt: bool,
    /// Scale of the Gaussian shift.
    pub shift_r: f64,
    /// Bump used by the high-p, pair and simplex schemes.
    pub psi: BumpKind,
}

impl Default for Knobs {
    fn default() -> Self {
        Self {
            eps: 0.05,
            r_scale: 1.0,
            c_tilde: 0.5,
            c_large: 0.5,
            c1: 0.01,
            tilt: false,
            shift_r: 1.0,
            psi: BumpKind::Psi,
        }
    }
}

/// `R = r_scale·n^{1/(2p+1)}` and `r₀ = ε²R^{−3/4}n^{−1/4}`.
pub fn highp_radii(p: f64, n: usize, knobs: &Knobs) -> (f64, f64) {
    let nf = n as f64;
    let big_r = knobs.r_scale * nf.powf(1.0 / (2.0 * p + 1.0));
    (big_r, knobs.eps.powi(2) * big_r.powf(-0.75) * nf.powf(-0.25))
}

/// `(R₁, R₂, r₀)` with `R₁ = log n`, `R₂ = c₁ log^{1/p} n` and
/// `r₀ = ε R₁ R₂^{p/2} n^{c₁^p/a_n^p} n^{−1/2}`.
pub fn lowp_radii(p: f64, n: usize, knobs: &Knobs) -> Result<(f64, f64, f64)> {
    let nf = n as f64;
    let r1 = nf.ln();
    let r2 = knobs.c1 * nf.ln().powf(1.0 / p);
    let an = a_tilde(p, n)?;
    let r0 = knobs.eps * r1 * r2.powf(0.5 * p) * nf.powf(knobs.c1.powf(p) / an.powf(p)) / nf.sqrt();
    Ok((r1, r2, r0))
}

/// Product-scheme step: `n^{−1/4}/(2C̃)^{1/4}` for `a ≤ 1/2`, and
/// `c n^{−1/4}|log(1 − a)|^{1/4}` above.
pub fn product_r(n: usize, a: f64, knobs: &Knobs) -> f64 {
    let q = (n as f64).powf(-0.25);
    if a <= 0.5 {
        q / (2.0 * knobs.c_tilde).powf(0.25)
    } else {
        knobs.c_large * q * (1.0 - a).ln().abs().powf(0.25)
    }
}

/// Scheme parameters for `regime` at dimension `n` and mass `a`.
pub fn default_params(regime: &Regime, n: usize, a: f64, knobs: &Knobs) -> Result<SchemeSpec> {
    if !(a > 0.0 && a < 1.0) {
        return Err(invalid(format!("mass a must lie in (0, 1), got {a}")));
    }
    if n < 2 {
        return Err(invalid("need n >= 2"));
    }
    let product = |mu: ProductMeasure| {
        let r = product_r(n, a, knobs).min(1.0);
        SchemeSpec::Product {
            mu,
            r,
            r_tilt: if knobs.tilt && a <= 0.5 { r } else { 0.0 },
            phi: BumpFn::phi(),
        }
    };
    Ok(match regime {
        Regime::Gaussian => product(ProductMeasure::gaussian(n)?),
        Regime::Mixture => SchemeSpec::GaussianShift(GaussianShiftScheme::new(n, knobs.shift_r)?),
        Regime::Lp { p } if p.is_infinite() => product(ProductMeasure::uniform_cube(n)?),
        Regime::Lp { p } if *p >= 2.0 => {
            let ball = LpBall::new(Exponent::Finite(*p), n)?;
            let (big_r, r) = highp_radii(*p, n, knobs);
            let psi = BumpFn::new(knobs.psi);
            SchemeSpec::HighP(
                HighPScheme::new(ball, r, big_r, psi, knobs.eps)
                    .or_else(|_| HighPScheme::relaxed(ball, r, big_r, psi))?,
            )
        }
        Regime::Lp { p } if *p > 1.0 => {
            let ball = LpBall::new(Exponent::Finite(*p), n)?;
            let (r1, r2, r) = lowp_radii(*p, n, knobs)?;
            let map = PairMap::new(*p, r, r1, r2, BumpFn::new(knobs.psi))?;
            SchemeSpec::LowP(
                LowPScheme::new(ball, map, knobs.eps).or_else(|_| LowPScheme::relaxed(ball, map))?,
            )
        }
        Regime::Lp { p } if *p == 1.0 => {
            let r = knobs.eps * (n as f64).powf(-0.25);
            SchemeSpec::Simplex(SimplexScheme::new(n, r, BumpFn::new(knobs.psi))?)
        }
        Regime::Lp { p } => return Err(crate::error::Error::InvalidExponent(*p)),
    })
}

/// A segment with the fraction of its scheme grid inside a set.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LineCertificate {
    pub segment: Segment,
    pub fraction: f64,
    pub certified_length: f64,
    pub scheme: SchemeSpec,
    pub set: SetDescriptor,
    /// Stream of the whole search; trial `k` used `stream/trials/k`.
    pub stream: RandomStream,
    pub trial: usize,
    pub u_grid: usize,
    /// `‖w‖` below which trials were discarded.
    pub norm_floor: f64,
}

/// Tuning of [`find_long_line_with`].
#[derive(Clone, Debug, PartialEq)]
pub struct FinderOptions {
    /// Draws used to set the norm floor.
    pub pilot: usize,
    /// Quantile of pilot norms used as the floor.
    pub floor_quantile: f64,
    /// Resampling cap when a draw has zero direction.
    pub resample_cap: usize,
}

impl Default for FinderOptions {
    fn default() -> Self {
        Self {
            pilot: 1000,
            floor_quantile: 0.1,
            resample_cap: 10_000,
        }
    }
}

/// One trial's outcome.
#[derive(Clone, Debug)]
struct Trial {
    segment: Option<Segment>,
    fraction: f64,
    length: f64,
}

/// A base draw with a nonzero direction, resampled up to `cap` times. Returns
/// the last draw if every attempt was degenerate.
fn draw_active(scheme: &PerturbationScheme, rng: &mut StreamRng, cap: usize) -> Result<BaseDraw> {
    let mut base = scheme.draw_base(rng)?;
    for _ in 0..cap {
        if norm2(&scheme.path(&base)?.direction) > 0.0 {
            break;
        }
        base = scheme.draw_base(rng)?;
    }
    Ok(base)
}

fn trial_stream(stream: &RandomStream, k: usize) -> RandomStream {
    stream.child("trials").substream(k as u64)
}

fn run_trial(
    set: &dyn MembershipSet,
    scheme: &PerturbationScheme,
    k: usize,
    u_grid: usize,
    stream: &RandomStream,
    floor: f64,
    opts: &FinderOptions,
) -> Result<Trial> {
    let mut rng = trial_stream(stream, k).rng();
    let base = draw_active(scheme, &mut rng, opts.resample_cap)?;
    let path = scheme.path(&base)?;
    let norm = norm2(&path.direction);
    let s1 = path.scale.at(1.0);
    if !(norm > 0.0 && s1 > 0.0) {
        // Degenerate: the unperturbed point only.
        return Ok(Trial {
            segment: None,
            fraction: set.contains(&base.x) as u8 as f64,
            length: 0.0,
        });
    }
    let mut buf = vec![0.0; path.origin.len()];
    let mut hits = 0usize;
    for i in 0..u_grid {
        let s = path.scale.at((i as f64 + 0.5) / u_grid as f64);
        for ((b, o), w) in buf.iter_mut().zip(&path.origin).zip(&path.direction) {
            *b = o + s * w;
        }
        hits += set.contains(&buf) as usize;
    }
    let fraction = hits as f64 / u_grid as f64;
    let seg = Segment::new(path.origin, path.direction, s1)?;
    let length = if norm >= floor { fraction * seg.length() } else { 0.0 };
    Ok(Trial {
        segment: Some(seg),
        fraction,
        length,
    })
}

/// 10th percentile (by default) of `‖w‖` over pilot draws.
pub fn norm_floor(scheme: &PerturbationScheme, stream: &RandomStream, opts: &FinderOptions) -> Result<f64> {
    if opts.pilot == 0 {
        return Ok(0.0);
    }
    let norms = replicate(opts.pilot, &stream.child("pilot"), |rng, _| -> Result<f64> {
        let base = draw_active(scheme, rng, opts.resample_cap)?;
        Ok(norm2(&scheme.path(&base)?.direction))
    })
    .into_iter()
    .collect::<Result<Vec<f64>>>()?;
    Ok(crate::stats::quantile(&norms, opts.floor_quantile))
}

/// The best of `trials` scheme segments by certified length.
pub fn find_long_line(
    set: &dyn MembershipSet,
    scheme: &PerturbationScheme,
    trials: usize,
    u_grid: usize,
    stream: &RandomStream,
) -> Result<LineCertificate> {
    find_long_line_with(set, scheme, trials, u_grid, stream, &FinderOptions::default())
}

pub fn find_long_line_with(
    set: &dyn MembershipSet,
    scheme: &PerturbationScheme,
    trials: usize,
    u_grid: usize,
    stream: &RandomStream,
    opts: &FinderOptions,
) -> Result<LineCertificate> {
    if trials == 0 {
        return Err(invalid("trials must be >= 1"));
    }
    if u_grid < 16 {
        return Err(invalid(format!("u_grid must be >= 16, got {u_grid}")));
    }
    if set.dim() != scheme.n() {
        return Err(invalid("set and scheme dimensions differ"));
    }
    let floor = norm_floor(scheme, stream, opts)?;
    let results = crate::par::map_indexed(trials, |k| {
        run_trial(set, scheme, k, u_grid, stream, floor, opts)
    });
    let mut best: Option<(usize, Trial)> = None;
    for (k, t) in results.into_iter().enumerate() {
        let t = t?;
        let better = match &best {
            None => true,
            Some((_, b)) => {
                t.length > b.length
                    || (t.length == b.length && b.segment.is_none() && t.segment.is_some())
            }
        };
        if better {
            best = Some((k, t));
        }
    }
    let (k, t) = best.expect("trials >= 1");
    let segment = match t.segment {
        Some(s) => s,
        None => {
            let mut rng = trial_stream(stream, k).rng();
            let base = scheme.draw_base(&mut rng)?;
            let mut d = vec![0.0; base.x.len()];
            d[0] = 1.0;
            Segment::new(base.x, d, f64::MIN_POSITIVE)?
        }
    };
    Ok(LineCertificate {
        segment,
        fraction: t.fraction,
        certified_length: t.length,
        scheme: scheme.spec(),
        set: set.descriptor(),
        stream: stream.clone(),
        trial: k,
        u_grid,
        norm_floor: floor,
    })
}

/// Recomputes a certificate's trial from its recorded stream and scheme.
pub fn replay(cert: &LineCertificate, set: &dyn MembershipSet) -> Result<LineCertificate> {
    let scheme = cert.scheme.build()?;
    let t = run_trial(
        set,
        &scheme,
        cert.trial,
        cert.u_grid,
        &cert.stream,
        cert.norm_floor,
        &FinderOptions::default(),
    )?;
    Ok(LineCertificate {
        segment: t.segment.unwrap_or_else(|| cert.segment.clone()),
        fraction: t.fraction,
        certified_length: t.length,
        ..cert.clone()
    })
}

/// `‖w‖` over `count` draws, for direction-norm diagnostics.
pub fn direction_norms(scheme: &PerturbationScheme, count: usize, stream: &RandomStream) -> Result<Vec<f64>> {
    replicate(count, stream, |rng, _| -> Result<f64> {
        let base = scheme.draw_base(rng)?;
        Ok(norm2(&scheme.path(&base)?.direction))
    })
    .into_iter()
    .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linemeasure::measure_segment;
    use crate::sets::{Ambient, WholeSpace};

    #[test]
    fn highp_formula_values() {
        let (big_r, r0) = highp_radii(4.0, 4096, &Knobs::default());
        assert!((big_r - 2f64.powf(12.0 / 9.0)).abs() < 1e-12);
        assert!((big_r - 2.52).abs() < 5e-3);
        // ε² R^{−3/4} n^{−1/4} with ε = 0.05.
        let direct = 0.0025 / big_r.powf(0.75) / 8.0;
        assert!((r0 - direct).abs() < 1e-15);
        assert!((r0 - 1.5625e-4).abs() < 1e-12, "{r0}");
    }

    #[test]
    fn product_step_scales_like_quarter_power() {
        let k = Knobs::default();
        let a = product_r(256, 0.5, &k);
        let b = product_r(4096, 0.5, &k);
        assert!((a / b - 2.0).abs() < 1e-12);
        assert!(product_r(256, 0.9, &k) > 0.0);
    }

    #[test]
    fn regimes_map_to_schemes() {
        let k = Knobs::default();
        let name = |r: Regime| default_params(&r, 64, 0.5, &k).unwrap().build().unwrap().name();
        assert_eq!(name(Regime::cube()), "product");
        assert_eq!(name(Regime::Gaussian), "product");
        assert_eq!(name(Regime::Mixture), "gaussian_shift");
        assert_eq!(name(Regime::Lp { p: 4.0 }), "high_p");
        assert_eq!(name(Regime::Lp { p: 2.0 }), "high_p");
        assert_eq!(name(Regime::Lp { p: 1.5 }), "low_p");
        assert_eq!(name(Regime::Lp { p: 1.0 }), "simplex");
        assert!(default_params(&Regime::Lp { p: 0.5 }, 64, 0.5, &k).is_err());
        assert!(default_params(&Regime::Gaussian, 64, 1.0, &k).is_err());
    }

    #[test]
    fn whole_space_certifies_full_segments() {
        let n = 64;
        let k = Knobs::default();
        for regime in [Regime::Gaussian, Regime::Lp { p: 4.0 }, Regime::Lp { p: 1.0 }] {
            let scheme = default_params(&regime, n, 0.5, &k).unwrap().build().unwrap();
            let set = WholeSpace::new(n, None);
            let c = find_long_line(&set, &scheme, 20, 64, &RandomStream::new(1)).unwrap();
            assert_eq!(c.fraction, 1.0);
            assert!((c.certified_length - c.segment.length()).abs() < 1e-12);
        }
    }

    #[test]
    fn certificates_replay_and_remeasure() {
        let n = 32;
        let scheme = default_params(&Regime::Gaussian, n, 0.5, &Knobs::default())
            .unwrap()
            .build()
            .unwrap();
        let set = crate::sets::euclidean_shell(n, 5.6, 5.62)
            .unwrap()
            .with_ambient(Ambient::Product { mu: ProductMeasure::gaussian(n).unwrap() });
        let c = find_long_line(&set, &scheme, 200, 256, &RandomStream::new(2)).unwrap();
        let again = replay(&c, &set).unwrap();
        assert_eq!(again, c);
        let m = measure_segment(&set, &c.segment, 1e-3, &RandomStream::new(0)).unwrap();
        assert!((m.fraction - c.fraction).abs() <= 4.0 / 256.0, "{} vs {}", m.fraction, c.fraction);
        assert!(c.certified_length <= c.segment.length());
    }

    #[test]
    fn rejects_bad_arguments() {
        let scheme = default_params(&Regime::Gaussian, 8, 0.5, &Knobs::default())
            .unwrap()
            .build()
            .unwrap();
        let set = WholeSpace::new(8, None);
        let s = RandomStream::new(0);
        assert!(find_long_line(&set, &scheme, 0, 64, &s).is_err());
        assert!(find_long_line(&set, &scheme, 1, 8, &s).is_err());
        assert!(find_long_line(&WholeSpace::new(9, None), &scheme, 1, 64, &s).is_err());
    }
}
