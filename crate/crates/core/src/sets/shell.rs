use super::calibrate::{calibrate, Calibration};
use super::{Ambient, MembershipSet, SetDescriptor};
use crate::error::{invalid, Error, Result};
use crate::geom::{
    band_intervals, box_chord, intersect_interval_lists, kappa, norm2, sublevel_interval,
    Exponent, Interval, Line, LpBall, PowProfile,
};
use crate::samplers::{replicate, simplex_scale, ProductMeasure, StreamRng};
use rand::Rng;
use rand_distr::{Distribution, Exp1, Gamma, StandardNormal};

/// Convex profile `h` with `h(r) = |r|^p` for `|r| ≥ b` and a matching
/// quadratic inside, where `b = β·n^{−1/(2p+1)}`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct HybridProfile {
    pub p: f64,
    pub n: usize,
    pub beta: f64,
    pub breakpoint: f64,
    quad: f64,
    constant: f64,
}

impl HybridProfile {
    pub fn new(p: f64, n: usize) -> Result<Self> {
        Self::with_beta(p, n, 1.0)
    }

    pub fn with_beta(p: f64, n: usize, beta: f64) -> Result<Self> {
        if !(p > 2.0 && p.is_finite()) {
            return Err(invalid(format!("hybrid profile needs finite p > 2, got {p}")));
        }
        if n == 0 || !(beta > 0.0) {
            return Err(invalid("hybrid profile needs n >= 1 and beta > 0"));
        }
        let b = beta * (n as f64).powf(-1.0 / (2.0 * p + 1.0));
        Ok(Self {
            p,
            n,
            beta,
            breakpoint: b,
            quad: 0.5 * p * b.powf(p - 2.0),
            constant: (1.0 - 0.5 * p) * b.powf(p),
        })
    }

    #[inline]
    pub fn eval(&self, r: f64) -> [f64; 3] {
        if r.abs() < self.breakpoint {
            [self.quad * r * r + self.constant, 2.0 * self.quad * r, 2.0 * self.quad]
        } else {
            PowProfile { p: self.p }.eval(r)
        }
    }

    pub fn value(&self, r: f64) -> f64 {
        self.eval(r)[0]
    }
}

/// Per-coordinate profile of a separable shell.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Profile {
    Square,
    Pow(f64),
    Hybrid(HybridProfile),
}

impl Profile {
    #[inline]
    pub fn eval(&self, r: f64) -> [f64; 3] {
        match self {
            Self::Square => [r * r, 2.0 * r, 2.0],
            Self::Pow(p) => PowProfile { p: *p }.eval(r),
            Self::Hybrid(h) => h.eval(r),
        }
    }

    pub fn sum(&self, x: &[f64]) -> f64 {
        match self {
            Self::Square => x.iter().map(|v| v * v).sum(),
            Self::Pow(p) => crate::geom::pow_sum(x, *p),
            Self::Hybrid(h) => x.iter().map(|&v| h.value(v)).sum(),
        }
    }
}

/// Convex body clipping a shell.
#[derive(Clone, Copy, Debug, PartialEq)]
enum Body {
    Ball(LpBall),
    /// `{x ≥ 0, Σx ≤ κ_{1,n}}`.
    Simplex(f64),
}

impl Body {
    fn contains(&self, x: &[f64]) -> bool {
        match self {
            Self::Ball(b) => b.contains(x),
            Self::Simplex(k) => x.iter().all(|&v| v >= 0.0) && x.iter().sum::<f64>() <= *k,
        }
    }

    fn chord(&self, line: &Line) -> Option<(f64, f64)> {
        match self {
            Self::Ball(b) => b.chord(line),
            Self::Simplex(k) => {
                let (mut a, mut b) = (f64::NEG_INFINITY, f64::INFINITY);
                let mut half = |x: f64, d: f64| {
                    // x + t·d ≥ 0
                    if d > 0.0 {
                        a = a.max(-x / d);
                    } else if d < 0.0 {
                        b = b.min(-x / d);
                    } else if x < 0.0 {
                        b = f64::NEG_INFINITY;
                    }
                };
                for (x, d) in line.origin.iter().zip(&line.direction) {
                    half(*x, *d);
                }
                let s: f64 = line.origin.iter().sum();
                let ds: f64 = line.direction.iter().sum();
                half(k - s, -ds);
                (a < b).then_some((a, b))
            }
        }
    }

    fn gradient(&self, x: &[f64]) -> Option<Vec<f64>> {
        match self {
            Self::Ball(LpBall {
                p: Exponent::Finite(p),
                ..
            }) => Some(x.iter().map(|&v| PowProfile { p: *p }.eval(v)[1]).collect()),
            _ => None,
        }
    }
}

/// `{lo ≤ Σ h(x_i) ≤ hi}` intersected with an optional convex body and an
/// optional coordinate cap `max|x_i| ≤ cap`.
#[derive(Clone, Debug)]
pub struct SeparableShell {
    n: usize,
    profile: Profile,
    lo: f64,
    hi: f64,
    body: Option<Body>,
    cap: Option<f64>,
    ambient: Option<Ambient>,
    desc: SetDescriptor,
}

impl SeparableShell {
    fn new(n: usize, profile: Profile, lo: f64, hi: f64, desc: SetDescriptor) -> Self {
        Self {
            n,
            profile,
            lo,
            hi,
            body: None,
            cap: None,
            ambient: None,
            desc,
        }
    }

    /// Replaces the ambient measure.
    pub fn with_ambient(mut self, ambient: Ambient) -> Self {
        self.ambient = Some(ambient);
        self
    }

    pub fn profile(&self) -> Profile {
        self.profile
    }

    /// The band `[lo, hi]` on `Σ h(x_i)`.
    pub fn band(&self) -> (f64, f64) {
        (self.lo, self.hi)
    }

    pub fn cap(&self) -> Option<f64> {
        self.cap
    }

    fn level_intervals(&self, line: &Line) -> Vec<Interval> {
        match self.profile {
            Profile::Square => {
                let a = line.direction.iter().map(|d| d * d).sum::<f64>();
                let b = 2.0 * crate::geom::dot(&line.origin, &line.direction);
                let c = line.origin.iter().map(|v| v * v).sum::<f64>();
                quadratic_band(a, b, c, self.lo, self.hi)
            }
            prof => {
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
                let scale = 1.0 / line.speed();
                band_intervals(&f, self.lo, self.hi, scale)
            }
        }
    }

    fn sample_member(&self, rng: &mut StreamRng) -> Option<Vec<f64>> {
        let amb = self.ambient.as_ref()?;
        (0..64).map(|_| amb.sample(rng)).find(|x| self.contains(x))
    }
}

/// `{t : lo ≤ a t² + b t + c ≤ hi}` for `a > 0`, sorted and disjoint.
pub(crate) fn quadratic_band(a: f64, b: f64, c: f64, lo: f64, hi: f64) -> Vec<Interval> {
    let Some((t1, t2)) = quadratic_sublevel(a, b, c, hi) else {
        return Vec::new();
    };
    match quadratic_sublevel(a, b, c, lo) {
        Some((t3, t4)) if t3 < t4 => [Interval::new(t1, t3), Interval::new(t4, t2)]
            .into_iter()
            .filter(|iv| !iv.is_empty())
            .collect(),
        _ => vec![Interval::new(t1, t2)],
    }
}

/// Roots of `a t² + b t + c = level`, using the cancellation-free form.
fn quadratic_sublevel(a: f64, b: f64, c: f64, level: f64) -> Option<(f64, f64)> {
    if level == f64::NEG_INFINITY {
        return None;
    }
    let c = c - level;
    let disc = b * b - 4.0 * a * c;
    if disc < 0.0 {
        return None;
    }
    let q = -0.5 * (b + b.signum() * disc.sqrt());
    if q == 0.0 {
        return Some((0.0, 0.0));
    }
    let (r1, r2) = (q / a, c / q);
    Some((r1.min(r2), r1.max(r2)))
}

impl MembershipSet for SeparableShell {
    fn dim(&self) -> usize {
        self.n
    }

    fn contains(&self, x: &[f64]) -> bool {
        if let Some(c) = self.cap {
            if x.iter().any(|v| v.abs() > c) {
                return false;
            }
        }
        if let Some(body) = &self.body {
            if !body.contains(x) {
                return false;
            }
        }
        let s = self.profile.sum(x);
        self.lo <= s && s <= self.hi
    }

    fn intersect(&self, line: &Line) -> Option<Vec<Interval>> {
        if line.speed() == 0.0 {
            return None;
        }
        let mut ivs = self.level_intervals(line);
        if let Some(body) = &self.body {
            let Some((a, b)) = body.chord(line) else {
                return Some(Vec::new());
            };
            ivs = intersect_interval_lists(&ivs, &[Interval::new(a, b)]);
        }
        if let Some(c) = self.cap {
            let Some((a, b)) = box_chord(line, -c, c) else {
                return Some(Vec::new());
            };
            ivs = intersect_interval_lists(&ivs, &[Interval::new(a, b)]);
        }
        Some(ivs)
    }

    fn ambient(&self) -> Option<&Ambient> {
        self.ambient.as_ref()
    }

    fn descriptor(&self) -> SetDescriptor {
        self.desc.clone()
    }

    /// Chord tangent to the inner level set: start from a member, move along
    /// `−∇H` onto `{H = lo}`, and point along a Gaussian direction on the
    /// smallest coordinates, orthogonal to `∇H` and to the body's gradient.
    fn propose_line(&self, rng: &mut StreamRng) -> Option<Line> {
        let x = self.sample_member(rng)?;
        let n = self.n;
        let m = (n >> rng.gen_range(1..=5)).max(1);
        let mut idx: Vec<usize> = (0..n).collect();
        idx.sort_by(|&a, &b| x[a].abs().total_cmp(&x[b].abs()));
        let mut d = vec![0.0; n];
        for &i in &idx[..m] {
            d[i] = StandardNormal.sample(rng);
        }
        let gh: Vec<f64> = x.iter().map(|&v| self.profile.eval(v)[1]).collect();
        let mut basis: Vec<Vec<f64>> = Vec::new();
        for g in std::iter::once(gh.clone()).chain(self.body.and_then(|b| b.gradient(&x))) {
            let mut g = g;
            for e in &basis {
                let c = crate::geom::dot(&g, e);
                g.iter_mut().zip(e).for_each(|(v, w)| *v -= c * w);
            }
            let s = norm2(&g);
            if s > 0.0 {
                g.iter_mut().for_each(|v| *v /= s);
                basis.push(g);
            }
        }
        for e in &basis {
            let c = crate::geom::dot(&d, e);
            d.iter_mut().zip(e).for_each(|(v, w)| *v -= c * w);
        }
        let s = norm2(&d);
        if !(s > 0.0) {
            return None;
        }
        d.iter_mut().for_each(|v| *v /= s);
        let mut origin = x.clone();
        let gn = norm2(&gh);
        if self.lo.is_finite() && gn > 0.0 {
            let prof = self.profile;
            let f = |t: f64| {
                let mut acc = [0.0; 3];
                for (xi, gi) in x.iter().zip(&gh) {
                    let e = prof.eval(xi - t * gi);
                    acc[0] += e[0];
                    acc[1] -= e[1] * gi;
                    acc[2] += e[2] * gi * gi;
                }
                acc
            };
            if let Some((a, _)) = sublevel_interval(&f, self.lo, 1.0 / gn) {
                if a > 0.0 {
                    origin = x.iter().zip(&gh).map(|(v, g)| v - a * g).collect();
                }
            }
        }
        Some(Line::new(origin, d))
    }
}

fn seeded(desc: SetDescriptor, cal: &Calibration) -> SetDescriptor {
    SetDescriptor {
        seed: Some(cal.stream.seed),
        ..desc
    }
}

/// Stats of `samples` ambient draws.
fn ambient_stats(amb: &Ambient, cal: &Calibration, label: &str, stat: impl Fn(&[f64]) -> f64 + Sync + Send) -> Vec<f64> {
    replicate(cal.samples, &cal.stream.child(label), |rng, _| stat(&amb.sample(rng)))
}

/// `{r_lo ≤ ‖x‖₂ ≤ r_hi}`.
pub fn euclidean_shell(n: usize, r_lo: f64, r_hi: f64) -> Result<SeparableShell> {
    if !(0.0 <= r_lo && r_lo < r_hi) {
        return Err(invalid(format!("need 0 <= r_lo < r_hi, got {r_lo}, {r_hi}")));
    }
    let desc = SetDescriptor::new("euclidean_shell", n)
        .with("r_lo", r_lo)
        .with("r_hi", r_hi);
    Ok(SeparableShell::new(n, Profile::Square, r_lo * r_lo, r_hi * r_hi, desc))
}

/// `{‖x‖₂ ≤ radius}`.
pub fn euclidean_ball_set(n: usize, radius: f64) -> Result<SeparableShell> {
    if !(radius > 0.0) {
        return Err(invalid("radius must be positive"));
    }
    let desc = SetDescriptor::new("euclidean_ball", n).with("radius", radius);
    Ok(SeparableShell::new(n, Profile::Square, f64::NEG_INFINITY, radius * radius, desc))
}

/// `K \ (1 − 1/n)K` for the volume-one Euclidean ball `K`.
pub fn ball_shell_construction(n: usize) -> Result<SeparableShell> {
    let ball = LpBall::new(Exponent::Finite(2.0), n)?;
    let rho = ball.kappa;
    let r_lo = (1.0 - 1.0 / n as f64) * rho;
    let mut s = euclidean_shell(n, r_lo, rho)?;
    s.desc = SetDescriptor::new("ball_shell", n).with("r_lo", r_lo).with("r_hi", rho);
    Ok(s.with_ambient(Ambient::Ball { ball }))
}

/// `{E − w ≤ ‖x‖₂ ≤ E + w}` of `μ`-mass at least `1 − eps`, where `E² = E‖X‖²`
/// is estimated from one-dimensional draws and `w = Ĉ√|log ε|` is calibrated.
pub fn product_norm_shell(mu: &ProductMeasure, eps: f64, cal: &Calibration) -> Result<SeparableShell> {
    if !(eps > 0.0 && eps < 1.0) {
        return Err(invalid(format!("eps must lie in (0, 1), got {eps}")));
    }
    let n = mu.n();
    let distinct = mu.distinct();
    let per = (cal.centering_samples / distinct.len()).max(2);
    let mut e2 = 0.0;
    for (k, comp) in distinct.iter().enumerate() {
        let count = mu.components.iter().filter(|c| *c == comp).count();
        let draws = replicate(per, &cal.stream.child("center").substream(k as u64), |rng, _| {
            let v = comp.sample(rng);
            v * v
        });
        e2 += count as f64 * crate::stats::mean(&draws);
    }
    let e = e2.sqrt();
    let amb = Ambient::Product { mu: mu.clone() };
    let stats = ambient_stats(&amb, cal, "width", |x| (norm2(x) - e).abs());
    let w = calibrate(&stats, 1.0 - eps)?;
    let lo = (e - w).max(0.0);
    let log_eps = eps.ln().abs();
    let desc = SetDescriptor::new("product_norm_shell", n)
        .with("eps", eps)
        .with("center", e)
        .with("width", w)
        .with("c_hat", if log_eps > 0.0 { w / log_eps.sqrt() } else { 0.0 });
    Ok(SeparableShell::new(n, Profile::Square, lo * lo, (e + w).powi(2), seeded(desc, cal))
        .with_ambient(amb))
}

/// `{x ∈ B_p^n : ‖x‖_p^p ≥ κ^p − C₀, max|x_i| ≤ C₀ log^{1/p} n}` for `p ∈ (1, 2]`.
pub fn lp_shell(p: f64, n: usize, c0: f64) -> Result<SeparableShell> {
    if !(p > 1.0 && p <= 2.0) {
        return Err(invalid(format!("lp_shell needs p in (1, 2], got {p}")));
    }
    if !(c0 > 0.0) || n < 2 {
        return Err(invalid("lp_shell needs C0 > 0 and n >= 2"));
    }
    let ball = LpBall::new(Exponent::Finite(p), n)?;
    let kp = ball.kappa_pow();
    let cap = c0 * (n as f64).ln().powf(1.0 / p);
    let desc = SetDescriptor::new("lp_shell", n).with("p", p).with("c0", c0).with("cap", cap);
    let mut s = SeparableShell::new(n, Profile::Pow(p), kp - c0, kp, desc)
        .with_ambient(Ambient::Ball { ball });
    s.cap = Some(cap);
    Ok(s)
}

/// [`lp_shell`] with the smallest `C₀` reaching volume `target`.
pub fn lp_shell_calibrated(p: f64, n: usize, target: f64, cal: &Calibration) -> Result<SeparableShell> {
    let ball = LpBall::new(Exponent::new(p)?, n)?;
    let kp = ball.kappa_pow();
    let log_root = (n as f64).ln().powf(1.0 / p);
    let amb = Ambient::Ball { ball };
    let stats = ambient_stats(&amb, cal, "c0", |x| {
        let deficit = kp - crate::geom::pow_sum(x, p);
        let peak = x.iter().fold(0.0f64, |m, v| m.max(v.abs())) / log_root;
        deficit.max(peak)
    });
    let c0 = calibrate(&stats, target)?;
    let mut s = lp_shell(p, n, c0)?;
    s.desc = seeded(s.desc.with("target", target), cal);
    Ok(s)
}

/// `E = E Σ h(X_i)` for `X` uniform on `B_p^n`.
///
/// The `|r|^p` part has the exact mean `κ^p n/(n + p)`; the bounded
/// correction `h − |·|^p`, nonzero only below the breakpoint, is averaged over
/// exact one-coordinate marginal draws.
pub fn hybrid_center(profile: &HybridProfile, cal: &Calibration) -> Result<f64> {
    let ball = LpBall::new(Exponent::Finite(profile.p), profile.n)?;
    let n = profile.n as f64;
    let exact = ball.kappa_pow() * n / (n + profile.p);
    let corr = replicate(cal.centering_samples, &cal.stream.child("center"), |rng, _| {
        let x = ball.sample_marginal(1, rng).x[0];
        profile.value(x) - crate::geom::abs_pow(x, profile.p)
    });
    Ok(exact + n * crate::stats::mean(&corr))
}

/// `{x ∈ B_p^n : |Σ h(x_i) − E| ≤ C₀}` for `p > 2` with the hybrid profile.
pub fn hybrid_shell(p: f64, n: usize, c0: f64, beta: f64, cal: &Calibration) -> Result<SeparableShell> {
    if !(c0 > 0.0) {
        return Err(invalid("hybrid_shell needs C0 > 0"));
    }
    let profile = HybridProfile::with_beta(p, n, beta)?;
    let e = hybrid_center(&profile, cal)?;
    Ok(hybrid_from(profile, e, c0, cal))
}

fn hybrid_from(profile: HybridProfile, e: f64, c0: f64, cal: &Calibration) -> SeparableShell {
    let (p, n) = (profile.p, profile.n);
    let ball = LpBall::new(Exponent::Finite(p), n).expect("validated");
    let desc = SetDescriptor::new("hybrid_shell", n)
        .with("p", p)
        .with("beta", profile.beta)
        .with("breakpoint", profile.breakpoint)
        .with("center", e)
        .with("c0", c0);
    let mut s = SeparableShell::new(n, Profile::Hybrid(profile), e - c0, e + c0, seeded(desc, cal))
        .with_ambient(Ambient::Ball { ball });
    s.body = Some(Body::Ball(ball));
    s
}

/// [`hybrid_shell`] with the smallest `C₀` reaching volume `target`.
pub fn hybrid_shell_calibrated(
    p: f64,
    n: usize,
    beta: f64,
    target: f64,
    cal: &Calibration,
) -> Result<SeparableShell> {
    let profile = HybridProfile::with_beta(p, n, beta)?;
    let e = hybrid_center(&profile, cal)?;
    let ball = LpBall::new(Exponent::Finite(p), n)?;
    let amb = Ambient::Ball { ball };
    let stats = ambient_stats(&amb, cal, "c0", |x| {
        (x.iter().map(|&v| profile.value(v)).sum::<f64>() - e).abs()
    });
    let c0 = calibrate(&stats, target)?.max(f64::MIN_POSITIVE);
    let mut s = hybrid_from(profile, e, c0, cal);
    s.desc = s.desc.with("target", target);
    Ok(s)
}

/// `{x ∈ [−½, ½]ⁿ : |‖x‖² − n/12| ≤ C₀√n}`.
pub fn cube_shell(n: usize, c0: f64) -> Result<SeparableShell> {
    if !(c0 > 0.0) {
        return Err(invalid("cube_shell needs C0 > 0"));
    }
    let ball = LpBall::cube(n)?;
    let center = n as f64 / 12.0;
    let w = c0 * (n as f64).sqrt();
    let desc = SetDescriptor::new("cube_shell", n).with("c0", c0);
    let mut s = SeparableShell::new(n, Profile::Square, center - w, center + w, desc)
        .with_ambient(Ambient::Ball { ball });
    s.body = Some(Body::Ball(ball));
    Ok(s)
}

/// [`cube_shell`] with the smallest `C₀` reaching volume `target`.
pub fn cube_shell_calibrated(n: usize, target: f64, cal: &Calibration) -> Result<SeparableShell> {
    let amb = Ambient::Ball { ball: LpBall::cube(n)? };
    let center = n as f64 / 12.0;
    let root = (n as f64).sqrt();
    let stats = ambient_stats(&amb, cal, "c0", |x| {
        (x.iter().map(|v| v * v).sum::<f64>() - center).abs() / root
    });
    let c0 = calibrate(&stats, target)?.max(f64::MIN_POSITIVE);
    let mut s = cube_shell(n, c0)?;
    s.desc = seeded(s.desc.with("target", target), cal);
    Ok(s)
}

/// `E‖X‖²` for `X` uniform on the simplex, from one-coordinate draws.
fn simplex_center(n: usize, cal: &Calibration) -> Result<f64> {
    let k = simplex_scale(n);
    let rest = Gamma::new(n as f64, 1.0).map_err(|e| Error::Calibration(e.to_string()))?;
    let draws = replicate(cal.centering_samples, &cal.stream.child("center"), |rng, _| {
        let g: f64 = Exp1.sample(rng);
        let x = k * g / (g + rest.sample(rng));
        x * x
    });
    Ok(n as f64 * crate::stats::mean(&draws))
}

/// `{x ∈ Δⁿ : |‖x‖² − E| ≤ C₀√n}` with `E = E‖X‖²` under the uniform
/// simplex measure.
pub fn l1_shell(n: usize, c0: f64, cal: &Calibration) -> Result<SeparableShell> {
    if !(c0 > 0.0) {
        return Err(invalid("l1_shell needs C0 > 0"));
    }
    let e = simplex_center(n, cal)?;
    Ok(l1_from(n, e, c0, cal))
}

fn l1_from(n: usize, e: f64, c0: f64, cal: &Calibration) -> SeparableShell {
    let w = c0 * (n as f64).sqrt();
    let desc = SetDescriptor::new("l1_shell", n).with("center", e).with("c0", c0);
    let mut s = SeparableShell::new(n, Profile::Square, e - w, e + w, seeded(desc, cal))
        .with_ambient(Ambient::Simplex { n });
    s.body = Some(Body::Simplex(kappa(Exponent::Finite(1.0), n)));
    s
}

/// [`l1_shell`] with the smallest `C₀` reaching volume `target`.
pub fn l1_shell_calibrated(n: usize, target: f64, cal: &Calibration) -> Result<SeparableShell> {
    let e = simplex_center(n, cal)?;
    let root = (n as f64).sqrt();
    let amb = Ambient::Simplex { n };
    let stats = ambient_stats(&amb, cal, "c0", |x| {
        (x.iter().map(|v| v * v).sum::<f64>() - e).abs() / root
    });
    let c0 = calibrate(&stats, target)?.max(f64::MIN_POSITIVE);
    let mut s = l1_from(n, e, c0, cal);
    s.desc = s.desc.with("target", target);
    Ok(s)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geom::total_length;
    use crate::samplers::RandomStream;
    use crate::sets::mc_volume;

    fn line_at_distance(n: usize, d: f64) -> Line {
        let mut o = vec![0.0; n];
        o[1] = d;
        let mut dir = vec![0.0; n];
        dir[0] = 1.0;
        Line::new(o, dir)
    }

    #[test]
    fn euclidean_shell_chords() {
        let s = euclidean_shell(5, 1.0, 2.0).unwrap();
        let through = s.intersect(&line_at_distance(5, 0.0)).unwrap();
        assert!((total_length(&through) - 2.0).abs() < 1e-12);
        assert_eq!(through.len(), 2);
        let mid = s.intersect(&line_at_distance(5, 1.5)).unwrap();
        assert!((total_length(&mid) - 2.0 * (4.0f64 - 2.25).sqrt()).abs() < 1e-12);
        assert!(s.intersect(&line_at_distance(5, 2.5)).unwrap().is_empty());
        assert!(euclidean_shell(5, 2.0, 1.0).is_err());
    }

    #[test]
    fn ball_chord_through_center_is_diameter() {
        let s = euclidean_ball_set(3, 4.0).unwrap();
        let ivs = s.intersect(&line_at_distance(3, 0.0)).unwrap();
        assert_eq!(ivs.len(), 1);
        assert!((total_length(&ivs) - 8.0).abs() < 1e-12);
    }

    #[test]
    fn ball_shell_volume_matches_closed_form() {
        let s = ball_shell_construction(10).unwrap();
        let (v, se) = mc_volume(&s, 100_000, &RandomStream::new(3)).unwrap();
        let exact = 1.0 - 0.9f64.powi(10);
        assert!((exact - 0.651322).abs() < 1e-6);
        assert!((v - exact).abs() < 4.0 * se, "{v} vs {exact}");
    }

    #[test]
    fn hybrid_profile_joins_smoothly() {
        for &(p, n) in &[(3.0, 64), (4.0, 1024), (6.5, 4096)] {
            let h = HybridProfile::new(p, n).unwrap();
            let b = h.breakpoint;
            assert!((b - (n as f64).powf(-1.0 / (2.0 * p + 1.0))).abs() < 1e-15);
            let inner = h.quad * b * b + h.constant;
            let target = (n as f64).powf(-p / (2.0 * p + 1.0));
            assert!((inner - target).abs() < 1e-12);
            assert!((b.powf(p) - target).abs() < 1e-12);
            assert!((2.0 * h.quad * b - p * b.powf(p - 1.0)).abs() < 1e-12);
            assert!(h.eval(0.3 * b)[2] > 0.0);
        }
        assert!(HybridProfile::new(2.0, 10).is_err());
    }

    #[test]
    fn lp_shell_complement_volume() {
        // Complement of the level part: (1 − C0/κ^p)^{n/p}.
        let (p, n, c0) = (1.5, 64, 0.5);
        let ball = LpBall::new(Exponent::Finite(p), n).unwrap();
        let kp = ball.kappa_pow();
        let stream = RandomStream::new(11);
        let hits = replicate(40_000, &stream, |rng, _| {
            (crate::geom::pow_sum(&ball.sample(rng), p) < kp - c0) as u8 as f64
        });
        let (m, se) = crate::stats::mean_se(&hits);
        let exact = (1.0 - c0 / kp).powf(n as f64 / p);
        assert!((m - exact).abs() < 4.0 * se, "{m} vs {exact}");
    }

    #[test]
    fn calibrated_shells_reach_target() {
        let cal = Calibration::new(5).with_samples(20_000, 100_000);
        let sets: Vec<SeparableShell> = vec![
            lp_shell_calibrated(1.5, 128, 0.5, &cal).unwrap(),
            hybrid_shell_calibrated(4.0, 128, 1.0, 0.5, &cal).unwrap(),
            cube_shell_calibrated(128, 0.5, &cal).unwrap(),
            l1_shell_calibrated(128, 0.5, &cal).unwrap(),
            product_norm_shell(&ProductMeasure::gaussian(128).unwrap(), 0.5, &cal).unwrap(),
        ];
        for s in &sets {
            let (v, se) = mc_volume(s, 20_000, &RandomStream::new(99)).unwrap();
            assert!(v > 0.5 - 4.0 * se, "{:?}: {v}", s.descriptor().kind);
        }
    }

    #[test]
    fn hybrid_center_matches_direct_mean() {
        let cal = Calibration::new(8).with_samples(20_000, 200_000);
        let prof = HybridProfile::new(4.0, 64).unwrap();
        let e = hybrid_center(&prof, &cal).unwrap();
        let ball = LpBall::new(Exponent::Finite(4.0), 64).unwrap();
        let direct = replicate(20_000, &RandomStream::new(77), |rng, _| {
            ball.sample(rng).iter().map(|&v| prof.value(v)).sum::<f64>()
        });
        let (m, se) = crate::stats::mean_se(&direct);
        assert!((m - e).abs() < 4.0 * se + 1e-3, "{m} vs {e}");
    }

    #[test]
    fn product_shell_degenerates_as_eps_grows() {
        let cal = Calibration::new(2).with_samples(10_000, 50_000);
        let mu = ProductMeasure::gaussian(64).unwrap();
        let s = product_norm_shell(&mu, 1.0 - 1e-4, &cal).unwrap();
        let (v, _) = mc_volume(&s, 10_000, &RandomStream::new(4)).unwrap();
        assert!(v < 0.01);
    }

    #[test]
    fn simplex_body_chord() {
        let cal = Calibration::new(1).with_samples(1000, 1000);
        let s = l1_shell(3, 100.0, &cal).unwrap();
        let k = kappa(Exponent::Finite(1.0), 3);
        let line = Line::new(vec![0.1, 0.1, 0.1], vec![1.0, 0.0, 0.0]);
        let ivs = s.intersect(&line).unwrap();
        assert_eq!(ivs.len(), 1);
        assert!((ivs[0].lo + 0.1).abs() < 1e-12);
        assert!((ivs[0].hi - (k - 0.3)).abs() < 1e-12);
    }

    #[test]
    fn tangent_proposals_meet_the_set() {
        let cal = Calibration::new(3).with_samples(10_000, 50_000);
        let s = cube_shell_calibrated(64, 0.5, &cal).unwrap();
        let mut rng = RandomStream::new(6).rng();
        for _ in 0..20 {
            let line = s.propose_line(&mut rng).unwrap();
            assert!((norm2(&line.direction) - 1.0).abs() < 1e-12);
            assert!(total_length(&s.intersect(&line).unwrap()) > 0.0);
        }
    }
}
