use super::calibrate::Calibration;
use super::shell::quadratic_band;
use super::{Ambient, BoxSet, MembershipSet, SetDescriptor, SetRef};
use crate::error::{invalid, Result};
use crate::geom::{Interval, Line};
use crate::samplers::{replicate, StreamRng};
use std::sync::Arc;

/// Above this many radial stripes along one line the exact intersector
/// declines and callers fall back to grid measurement.
const MAX_STRIPES: usize = 200_000;

/// The part of `base` whose distance to `center` falls in accepted stripes:
/// with `I_j = [δ(j−1), δj)`, a point is kept iff `(j − i₀) mod k` lies in
/// `{1, …, ⌈λk⌉}`.
#[derive(Clone, Debug)]
pub struct StripedSubset {
    base: SetRef,
    center: Vec<f64>,
    lambda: f64,
    delta: f64,
    k: usize,
    width: usize,
    i0: usize,
    volume: f64,
    slack: Option<f64>,
    seed: Option<u64>,
}

impl StripedSubset {
    /// Picks the offset `i₀` of largest Monte Carlo volume. `k` defaults to
    /// `⌊δ^{−1/5}⌋`.
    pub fn new(
        base: SetRef,
        center: Vec<f64>,
        lambda: f64,
        delta: f64,
        k: Option<usize>,
        cal: &Calibration,
    ) -> Result<Self> {
        let mut s = Self::with_offset(base, center, lambda, delta, k, 0)?;
        let amb = s
            .base
            .ambient()
            .ok_or_else(|| invalid("striped subset needs an ambient measure"))?
            .clone();
        let residues = replicate(cal.samples, &cal.stream.child("stripes"), |rng, _| {
            let x = amb.sample(rng);
            s.base.contains(&x).then(|| s.stripe(s.radius(&x)) % s.k)
        });
        let mut hist = vec![0usize; s.k];
        for r in residues.into_iter().flatten() {
            hist[r] += 1;
        }
        let kept = |i0: usize| (1..=s.width).map(|m| hist[(i0 + m) % s.k]).sum::<usize>();
        let best = (0..s.k).max_by_key(|&i| (kept(i), std::cmp::Reverse(i))).unwrap();
        s.i0 = best;
        s.volume = kept(best) as f64 / cal.samples as f64;
        s.seed = Some(cal.stream.seed);
        Ok(s)
    }

    /// Fixed offset `i₀`, no calibration.
    pub fn with_offset(
        base: SetRef,
        center: Vec<f64>,
        lambda: f64,
        delta: f64,
        k: Option<usize>,
        i0: usize,
    ) -> Result<Self> {
        if !(lambda > 0.0 && lambda <= 1.0) {
            return Err(invalid(format!("lambda must lie in (0, 1], got {lambda}")));
        }
        if !(delta > 0.0) {
            return Err(invalid("delta must be positive"));
        }
        if center.len() != base.dim() {
            return Err(invalid("center dimension mismatch"));
        }
        let k = k.unwrap_or_else(|| delta.powf(-0.2).floor() as usize);
        if k < 2 {
            return Err(invalid(format!("need k >= 2 stripes per period, got {k}")));
        }
        Ok(Self {
            base,
            center,
            lambda,
            delta,
            k,
            width: ((lambda * k as f64).ceil() as usize).min(k),
            i0: i0 % k,
            volume: f64::NAN,
            slack: None,
            seed: None,
        })
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn offset(&self) -> usize {
        self.i0
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    /// Fraction of accepted stripes, `⌈λk⌉/k`.
    pub fn accepted_share(&self) -> f64 {
        self.width as f64 / self.k as f64
    }

    /// Monte Carlo volume measured while picking `i₀` (NaN if not calibrated).
    pub fn calibrated_volume(&self) -> f64 {
        self.volume
    }

    fn radius(&self, x: &[f64]) -> f64 {
        x.iter()
            .zip(&self.center)
            .map(|(a, c)| (a - c) * (a - c))
            .sum::<f64>()
            .sqrt()
    }

    fn stripe(&self, rho: f64) -> usize {
        (rho / self.delta).floor() as usize + 1
    }

    fn accepts(&self, j: usize) -> bool {
        let m = (j + self.k - self.i0) % self.k;
        let m = if m == 0 { self.k } else { m };
        m <= self.width
    }
}

impl MembershipSet for StripedSubset {
    fn dim(&self) -> usize {
        self.base.dim()
    }

    fn contains(&self, x: &[f64]) -> bool {
        self.base.contains(x) && self.accepts(self.stripe(self.radius(x)))
    }

    fn intersect(&self, line: &Line) -> Option<Vec<Interval>> {
        let base = self.base.intersect(line)?;
        let o: Vec<f64> = line.origin.iter().zip(&self.center).map(|(a, c)| a - c).collect();
        let a = line.direction.iter().map(|d| d * d).sum::<f64>();
        if a == 0.0 {
            return None;
        }
        let b = 2.0 * crate::geom::dot(&o, &line.direction);
        let c = o.iter().map(|v| v * v).sum::<f64>();
        let q = |t: f64| (a * t * t + b * t + c).max(0.0);
        let mut out = Vec::new();
        for iv in &base {
            if !(iv.lo.is_finite() && iv.hi.is_finite()) {
                return None;
            }
            let tm = (-b / (2.0 * a)).clamp(iv.lo, iv.hi);
            let j_lo = self.stripe(q(tm).sqrt());
            let j_hi = self.stripe(q(iv.lo).max(q(iv.hi)).sqrt());
            if j_hi - j_lo > MAX_STRIPES {
                return None;
            }
            let mut j = j_lo;
            while j <= j_hi {
                if !self.accepts(j) {
                    j += 1;
                    continue;
                }
                let start = j;
                while j < j_hi && self.accepts(j + 1) {
                    j += 1;
                }
                let r_lo = self.delta * (start - 1) as f64;
                let r_hi = self.delta * j as f64;
                for piece in quadratic_band(a, b, c, r_lo * r_lo, r_hi * r_hi) {
                    if let Some(cut) = piece.intersect(iv) {
                        out.push(cut);
                    }
                }
                j += 1;
            }
        }
        out.sort_by(|x, y| x.lo.total_cmp(&y.lo));
        let mut merged: Vec<Interval> = Vec::with_capacity(out.len());
        for iv in out {
            match merged.last_mut() {
                Some(last) if iv.lo <= last.hi => last.hi = last.hi.max(iv.hi),
                _ => merged.push(iv),
            }
        }
        Some(merged)
    }

    fn ambient(&self) -> Option<&Ambient> {
        self.base.ambient()
    }

    fn descriptor(&self) -> SetDescriptor {
        let base = self.base.descriptor();
        let mut d = SetDescriptor::new("striped", self.dim())
            .with("lambda", self.lambda)
            .with("delta", self.delta)
            .with("k", self.k as f64)
            .with("i0", self.i0 as f64)
            .with("volume", self.volume);
        for (key, v) in base.params {
            d.params.insert(format!("base.{key}"), v);
        }
        if let Some(e) = self.slack {
            d.params.insert("eps".into(), e);
        }
        d.kind = format!("striped({})", base.kind);
        d.seed = self.seed.or(base.seed);
        d
    }

    fn propose_line(&self, rng: &mut StreamRng) -> Option<Line> {
        self.base.propose_line(rng)
    }
}

/// Striped subset of the cube `[1, 2]ⁿ` around the origin. `eps` is recorded
/// in the descriptor as the line-length slack matched to `δ`.
pub fn striped_cube_shell(
    n: usize,
    lambda: f64,
    eps: f64,
    delta: f64,
    cal: &Calibration,
) -> Result<StripedSubset> {
    if !(eps >= 0.0) {
        return Err(invalid("eps must be nonnegative"));
    }
    let base: SetRef = Arc::new(BoxSet::new(n, 1.0, 2.0));
    let mut s = StripedSubset::new(base, vec![0.0; n], lambda, delta, None, cal)?;
    s.slack = Some(eps);
    Ok(s)
}
