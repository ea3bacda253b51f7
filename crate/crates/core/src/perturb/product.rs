//! Tilted and perturbed one-dimensional densities behind the product scheme.

use crate::error::{invalid, Error, Result};
use crate::geom::{rtsafe, BumpFn};
use crate::samplers::{Component1d, TiltedProduct};

/// `g = (φ²ρ)''/ρ`, expanded through `log ρ` so that only `ρ > 0` is needed.
pub fn g_of(component: Component1d, phi: BumpFn, t: f64) -> Result<f64> {
    if !phi.in_support(t) {
        return Ok(0.0);
    }
    let l = component.log_derivs(t).ok_or(Error::ZeroDensity(t))?;
    let d = phi.derivs(t);
    let (f, f1, f2) = (d[0], d[1], d[2]);
    Ok(2.0 * f1 * f1 + 2.0 * f * f2 + 4.0 * f * f1 * l[1] + f * f * (l[2] + l[1] * l[1]))
}

/// Solves `x + c·b(x) = y` for a bump `b` with `|c·b'| < 1`; `amp` bounds `|b|`.
pub(crate) fn invert_shift(y: f64, c: f64, amp: f64, b: impl Fn(f64) -> (f64, f64)) -> f64 {
    if c == 0.0 {
        return y;
    }
    let w = c.abs() * amp;
    rtsafe(
        |x| {
            let (v, d) = b(x);
            (x + c * v - y, 1.0 + c * d)
        },
        y - w,
        y + w,
        1e-15 * y.abs().max(1.0),
    )
}

/// The density of `X + rδφ(X)` where `X` has the `R`-tilted law of one
/// component and `δ = ±1` is a fair sign.
#[derive(Clone, Debug)]
pub struct Perturbed1d {
    pub component: Component1d,
    pub r: f64,
    pub r_tilt: f64,
    pub phi: BumpFn,
    kappa: f64,
    amp: f64,
}

impl Perturbed1d {
    pub fn new(component: Component1d, r: f64, r_tilt: f64, phi: BumpFn) -> Result<Self> {
        if r.abs() > 1.0 || r_tilt.abs() > 1.0 {
            return Err(invalid(format!("need |r|, |R| <= 1, got r={r}, R={r_tilt}")));
        }
        if r.abs() * phi.max_abs(1) >= 1.0 {
            return Err(Error::NotMonotone(r));
        }
        let kappa = if r_tilt == 0.0 {
            1.0
        } else {
            let mu = crate::samplers::ProductMeasure {
                components: vec![component],
                c_reg: f64::INFINITY,
                c_tail: 0.0,
            };
            TiltedProduct::new(&mu, r_tilt, phi)?.tilt(component).kappa
        };
        Ok(Self {
            component,
            r,
            r_tilt,
            phi,
            kappa,
            amp: phi.max_abs(0),
        })
    }

    /// The same law with perturbation size `r` replaced by `r`.
    pub fn with_r(&self, r: f64) -> Self {
        Self { r, ..self.clone() }
    }

    pub fn kappa(&self) -> f64 {
        self.kappa
    }

    /// The two preimages `x₁ < t < x₂` of `x ± rφ(x) = t`.
    pub fn preimages(&self, t: f64) -> (f64, f64) {
        let b = |x: f64| {
            let d = self.phi.derivs(x);
            (d[0], d[1])
        };
        (
            invert_shift(t, self.r, self.amp, b),
            invert_shift(t, -self.r, self.amp, b),
        )
    }

    /// `f(t)/ρ(t)`; requires `ρ(t) > 0`.
    pub fn ratio(&self, t: f64) -> f64 {
        if !self.phi.in_support(t) {
            return self.kappa;
        }
        let l0 = match self.component.log_derivs(t) {
            Some(l) => l[0],
            None => return 0.0,
        };
        let (x1, x2) = self.preimages(t);
        let term = |x: f64, s: f64| -> f64 {
            let Some(l) = self.component.log_derivs(x) else {
                return 0.0;
            };
            let g = if self.r_tilt == 0.0 {
                0.0
            } else {
                g_of(self.component, self.phi, x).unwrap_or(0.0)
            };
            let jac = 1.0 + s * self.r * self.phi.derivs(x)[1];
            (l[0] - l0 - self.r_tilt * self.r_tilt * g).exp() / jac
        };
        0.5 * self.kappa * (term(x1, 1.0) + term(x2, -1.0))
    }

    pub fn density(&self, t: f64) -> f64 {
        let rho = self.component.density(t);
        if rho == 0.0 {
            0.0
        } else {
            rho * self.ratio(t)
        }
    }
}

/// `f_i(t)` for the tilted-then-perturbed law of one coordinate.
pub fn density_1d_perturbed(
    component: Component1d,
    r: f64,
    r_tilt: f64,
    phi: BumpFn,
    t: f64,
) -> Result<f64> {
    Ok(Perturbed1d::new(component, r, r_tilt, phi)?.density(t))
}
