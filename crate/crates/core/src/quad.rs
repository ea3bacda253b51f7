//! Gauss–Legendre quadrature helpers (rules from `gauss-quad`).

use gauss_quad::legendre::GaussLegendre;
use std::num::NonZeroUsize;
use std::sync::OnceLock;

fn rule(degree: usize) -> &'static GaussLegendre {
    static R16: OnceLock<GaussLegendre> = OnceLock::new();
    static R32: OnceLock<GaussLegendre> = OnceLock::new();
    let make = |d: usize| GaussLegendre::new(NonZeroUsize::new(d).unwrap());
    match degree {
        16 => R16.get_or_init(|| make(16)),
        32 => R32.get_or_init(|| make(32)),
        _ => panic!("unsupported rule degree {degree}"),
    }
}

/// Composite 16-point Gauss–Legendre over `panels` equal panels of `[a, b]`.
pub fn integrate<F: FnMut(f64) -> f64>(mut f: F, a: f64, b: f64, panels: usize) -> f64 {
    assert!(panels >= 1);
    let g = rule(16);
    let h = (b - a) / panels as f64;
    (0..panels)
        .map(|k| {
            let lo = a + k as f64 * h;
            g.integrate(lo, lo + h, &mut f)
        })
        .sum()
}

/// The 32-node rule mapped to `[0, 1]`, as `(node, weight)` pairs.
pub fn unit_rule_32() -> &'static [(f64, f64)] {
    static NODES: OnceLock<Vec<(f64, f64)>> = OnceLock::new();
    NODES.get_or_init(|| {
        rule(32)
            .iter()
            .map(|(x, w)| (0.5 * (x + 1.0), 0.5 * w))
            .collect()
    })
}
