use super::line::Interval;

/// `|r|^p`, with multiplication-only paths for p = 1, 2, 3, 4.
#[inline]
pub fn abs_pow(r: f64, p: f64) -> f64 {
    let a = r.abs();
    if p == 2.0 {
        a * a
    } else if p == 1.0 {
        a
    } else if p == 4.0 {
        let s = a * a;
        s * s
    } else if p == 3.0 {
        a * a * a
    } else {
        a.powf(p)
    }
}

/// Value and first two derivatives of `r ↦ |r|^p`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PowProfile {
    pub p: f64,
}

impl PowProfile {
    #[inline]
    pub fn eval(&self, r: f64) -> [f64; 3] {
        let p = self.p;
        let a = r.abs();
        let v = abs_pow(r, p);
        if a == 0.0 {
            let d2 = if p == 2.0 {
                2.0
            } else if p > 2.0 {
                0.0
            } else {
                f64::INFINITY
            };
            return [0.0, 0.0, d2];
        }
        let d1 = p * v / a;
        let d2 = p * (p - 1.0) * v / (a * a);
        [v, d1.copysign(r), d2]
    }
}

/// A convex function of one variable, returning value, first and second
/// derivative.
pub trait ConvexLine {
    fn eval(&self, t: f64) -> [f64; 3];
}

impl<F: Fn(f64) -> [f64; 3]> ConvexLine for F {
    fn eval(&self, t: f64) -> [f64; 3] {
        self(t)
    }
}

const MAX_EXPAND: usize = 200;
const MAX_ITER: usize = 300;
pub(crate) const REL_TOL: f64 = 1e-10;

/// Safeguarded Newton for an increasing function `g` with `g(lo) <= 0 <= g(hi)`.
pub(crate) fn rtsafe(g: impl Fn(f64) -> (f64, f64), mut lo: f64, mut hi: f64, tol: f64) -> f64 {
    let mut t = 0.5 * (lo + hi);
    let mut dxold = (hi - lo).abs();
    let mut dx = dxold;
    let (mut f, mut df) = g(t);
    for _ in 0..MAX_ITER {
        if f == 0.0 {
            return t;
        }
        let newton_ok = df.is_finite()
            && df > 0.0
            && ((t - hi) * df - f) * ((t - lo) * df - f) < 0.0
            && (2.0 * f).abs() <= (dxold * df).abs();
        if newton_ok {
            dxold = dx;
            dx = f / df;
            let prev = t;
            t -= dx;
            if prev == t {
                return t;
            }
        } else {
            dxold = dx;
            dx = 0.5 * (hi - lo);
            t = lo + dx;
            if lo == t {
                return t;
            }
        }
        if dx.abs() < tol {
            return t;
        }
        (f, df) = g(t);
        if f < 0.0 {
            lo = t;
        } else {
            hi = t;
        }
    }
    t
}

fn tol_at(t: f64, scale: f64) -> f64 {
    REL_TOL * t.abs().max(scale)
}

/// Minimizer of a coercive convex function; `scale` is the natural step.
pub fn minimize<F: ConvexLine>(f: &F, scale: f64) -> (f64, f64) {
    let d0 = f.eval(0.0)[1];
    if d0 == 0.0 {
        return (0.0, f.eval(0.0)[0]);
    }
    let dir = if d0 < 0.0 { 1.0 } else { -1.0 };
    let mut a = 0.0;
    let mut step = scale;
    let mut b = dir * step;
    let mut found = false;
    for _ in 0..MAX_EXPAND {
        if dir * f.eval(b)[1] >= 0.0 {
            found = true;
            break;
        }
        a = b;
        step *= 2.0;
        b += dir * step;
    }
    if !found {
        return (b, f.eval(b)[0]);
    }
    let (lo, hi) = if dir > 0.0 { (a, b) } else { (b, a) };
    let t = rtsafe(
        |t| {
            let e = f.eval(t);
            (e[1], e[2])
        },
        lo,
        hi,
        tol_at(lo.abs().max(hi.abs()), scale),
    );
    (t, f.eval(t)[0])
}

/// Crossing of `level` on the increasing branch right of `t0` (`dir = 1`)
/// or the decreasing branch left of it (`dir = -1`); requires `f(t0) <= level`.
fn crossing<F: ConvexLine>(f: &F, t0: f64, level: f64, dir: f64, scale: f64) -> f64 {
    let mut a = t0;
    let mut step = scale;
    let mut b = t0 + dir * step;
    for _ in 0..MAX_EXPAND {
        if f.eval(b)[0] > level {
            break;
        }
        a = b;
        step *= 2.0;
        b += dir * step;
    }
    // g(s) = f(t0 + dir·s) − level is increasing in s.
    let g = |s: f64| {
        let e = f.eval(t0 + dir * s);
        (e[0] - level, dir * e[1])
    };
    let (slo, shi) = ((a - t0) * dir, (b - t0) * dir);
    let s = rtsafe(g, slo, shi, tol_at(t0.abs() + shi, scale));
    t0 + dir * s
}

/// `{t : f(t) <= level}` for a coercive convex `f`, or `None` if empty.
pub fn sublevel_interval<F: ConvexLine>(f: &F, level: f64, scale: f64) -> Option<(f64, f64)> {
    let (tm, fm) = minimize(f, scale);
    if fm > level {
        return None;
    }
    let lo = crossing(f, tm, level, -1.0, scale);
    let hi = crossing(f, tm, level, 1.0, scale);
    Some((lo, hi))
}

/// `{t : lo <= f(t) <= hi}` as at most two sorted intervals.
pub fn band_intervals<F: ConvexLine>(f: &F, lo: f64, hi: f64, scale: f64) -> Vec<Interval> {
    let (tm, fm) = minimize(f, scale);
    if fm > hi {
        return Vec::new();
    }
    let a = crossing(f, tm, hi, -1.0, scale);
    let b = crossing(f, tm, hi, 1.0, scale);
    if fm >= lo {
        return vec![Interval::new(a, b)];
    }
    let c = crossing(f, tm, lo, -1.0, scale);
    let d = crossing(f, tm, lo, 1.0, scale);
    [Interval::new(a, c), Interval::new(d, b)]
        .into_iter()
        .filter(|iv| !iv.is_empty())
        .collect()
}
