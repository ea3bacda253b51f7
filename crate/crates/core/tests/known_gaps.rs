//! Targets the implementation does not meet. Run with `--ignored` to see them fail.

use longlines::geom::{total_length, BumpFn, Line};
use longlines::perturb::{g_pair, mean_inverse_pair_jacobian, PairMap};
use longlines::samplers::RandomStream;
use longlines::sets::{striped_cube_shell, BoxSet, Calibration, MembershipSet};
use rand::Rng;

/// The pair expansion residual is fourth order here: halving `r` divides it
/// by about 16, not 8.
#[test]
#[ignore]
fn pair_expansion_residual_ratio_in_six_to_ten() {
    let pm = |r: f64| PairMap::new(1.5, r, 4.0, 0.2, BumpFn::psi()).unwrap();
    let (lo, hi) = pm(0.1).support();
    for (a, b) in [(0.3, 0.5), (0.4, 0.6), (0.55, 0.35)] {
        let (y1, y2) = (lo + a * (hi - lo), lo + b * (hi - lo));
        let res = |r: f64| (mean_inverse_pair_jacobian(&pm(r), y1, y2).unwrap() - 1.0 - g_pair(&pm(r), y1, y2)).abs();
        let ratio = res(0.02) / res(0.01);
        assert!((6.0..=10.0).contains(&ratio), "ratio {ratio}");
    }
}

/// Lines tangent to a stripe pick up one accepted run of length about
/// `2√(6ρδ)` ≈ 0.03, above the 0.02 slack.
#[test]
#[ignore]
fn striped_square_excess_below_two_hundredths() {
    let s = striped_cube_shell(2, 0.5, 0.02, 1e-4, &Calibration::new(12)).unwrap();
    let q = BoxSet::new(2, 1.0, 2.0);
    let mut rng = RandomStream::new(9).rng();
    for _ in 0..1000 {
        let a = [1.0 + rng.gen::<f64>(), 1.0 + rng.gen::<f64>()];
        let b = [1.0 + rng.gen::<f64>(), 1.0 + rng.gen::<f64>()];
        let line = Line::through(&a, &b);
        let lb = total_length(&s.intersect(&line).unwrap()) * line.speed();
        let lq = total_length(&q.intersect(&line).unwrap()) * line.speed();
        assert!(lb <= 0.5 * lq + 0.02, "{lb} vs {lq}");
    }
}
