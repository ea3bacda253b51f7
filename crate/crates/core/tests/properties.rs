use longlines::finder::{default_params, find_long_line_with, replay, FinderOptions, Knobs, Regime};
use longlines::geom::{BumpFn, BumpKind, Line, Segment};
use longlines::harness::fit_exponent;
use longlines::linemeasure::{measure_grid, sup_line_search, SearchOptions};
use longlines::perturb::{density_1d_perturbed, PerturbationScheme};
use longlines::samplers::{Component1d, ProductMeasure, RandomStream};
use longlines::sets::{
    cube_shell, euclidean_shell, hybrid_shell, lp_shell, product_norm_shell, Calibration, MembershipSet, SetRef,
    StripedSubset, BoxSet,
};
use longlines::diagnostics::{check_claim, Claim, ClaimParams};
use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::Rng;
use std::sync::{Arc, OnceLock};

const N: usize = 6;

fn config(cases: u32) -> ProptestConfig {
    ProptestConfig {
        cases,
        failure_persistence: None,
        ..ProptestConfig::default()
    }
}

/// Shell sets with exact intersectors, built once.
fn shells() -> &'static Vec<SetRef> {
    static SETS: OnceLock<Vec<SetRef>> = OnceLock::new();
    SETS.get_or_init(|| {
        let cal = Calibration::new(3).with_samples(5_000, 20_000);
        vec![
            Arc::new(cube_shell(N, 0.2).unwrap()),
            Arc::new(euclidean_shell(N, 0.5, 1.0).unwrap()),
            Arc::new(lp_shell(1.2, N, 0.3).unwrap()),
            Arc::new(lp_shell(1.5, N, 0.3).unwrap()),
            Arc::new(hybrid_shell(4.0, N, 0.05, 1.0, &cal).unwrap()),
            Arc::new(product_norm_shell(&ProductMeasure::gaussian(N).unwrap(), 0.3, &cal).unwrap()),
        ]
    })
}

fn striped() -> &'static StripedSubset {
    static SET: OnceLock<StripedSubset> = OnceLock::new();
    SET.get_or_init(|| {
        let base: SetRef = Arc::new(BoxSet::new(3, -1.0, 1.0));
        StripedSubset::with_offset(base, vec![0.0; 3], 0.5, 0.05, Some(4), 1).unwrap()
    })
}

fn random_line(seed: u64, dim: usize, scale: f64) -> Line {
    let mut rng = RandomStream::new(seed).rng();
    let o: Vec<f64> = (0..dim).map(|_| scale * (rng.gen::<f64>() - 0.5)).collect();
    let d: Vec<f64> = (0..dim).map(|_| rng.gen::<f64>() - 0.5).collect();
    Line::new(o, d)
}

proptest! {
    #![proptest_config(config(64))]

    #[test]
    fn intervals_are_sorted_and_disjoint(seed in any::<u64>(), which in 0usize..6) {
        let set = &shells()[which];
        let line = random_line(seed, N, 1.5);
        let ivs = set.intersect(&line).unwrap();
        for iv in &ivs {
            prop_assert!(iv.lo <= iv.hi);
        }
        for w in ivs.windows(2) {
            prop_assert!(w[0].hi < w[1].lo);
        }
    }

    #[test]
    fn exact_length_matches_grid(seed in any::<u64>(), which in 0usize..6) {
        let set = &shells()[which];
        let line = random_line(seed, N, 1.5);
        let seg = Segment::new(line.origin.clone(), line.direction.clone(), 6.0).unwrap();
        let seg = Segment::new(seg.point(-3.0), line.direction.clone(), 6.0).unwrap();
        let cells = 20_000;
        let grid = measure_grid(&**set, &seg, cells).unwrap();
        let exact = longlines::geom::total_length(&longlines::geom::clip_intervals(
            &set.intersect(&seg.line()).unwrap(), 0.0, 6.0)) * seg.line().speed();
        let ivs = set.intersect(&seg.line()).unwrap().len();
        prop_assert!((exact - grid.length).abs() <= 2.0 * grid.resolution * (ivs.max(1) as f64),
            "exact {} grid {}", exact, grid.length);
    }

    #[test]
    fn striped_intersector_matches_grid(seed in any::<u64>()) {
        let s = striped();
        let line = random_line(seed, 3, 1.0);
        let seg = Segment::new(line.point(-2.0), line.direction.clone(), 4.0).unwrap();
        let ivs = s.intersect(&seg.line()).unwrap();
        let exact = longlines::geom::total_length(&longlines::geom::clip_intervals(&ivs, 0.0, 4.0)) * seg.line().speed();
        let grid = measure_grid(s, &seg, 40_000).unwrap();
        prop_assert!((exact - grid.length).abs() <= 2.0 * grid.resolution * (ivs.len().max(1) as f64));
    }

    #[test]
    fn shells_are_permutation_invariant(seed in any::<u64>(), which in 0usize..6) {
        let set = &shells()[which];
        let mut rng = RandomStream::new(seed).rng();
        let x: Vec<f64> = (0..N).map(|_| 1.2 * (rng.gen::<f64>() - 0.5)).collect();
        let mut y = x.clone();
        y.shuffle(&mut rng);
        prop_assert_eq!(set.contains(&x), set.contains(&y));
    }

    #[test]
    fn striped_set_is_rotation_invariant(seed in any::<u64>(), angle in 0.0..std::f64::consts::TAU) {
        let s = striped();
        let mut rng = RandomStream::new(seed).rng();
        let x = [0.8 * (rng.gen::<f64>() - 0.5), 0.8 * (rng.gen::<f64>() - 0.5), 0.3 * (rng.gen::<f64>() - 0.5)];
        let (c, si) = (angle.cos(), angle.sin());
        let y = [c * x[0] - si * x[1], si * x[0] + c * x[1], x[2]];
        // Rotations keep the radius; the box base is only invariant well inside.
        prop_assert_eq!(s.contains(&x), s.contains(&y));
    }

    #[test]
    fn streams_are_deterministic(seed in any::<u64>(), i in any::<u64>(), label in "[a-z]{1,8}") {
        let a = RandomStream::new(seed).child(&label).substream(i);
        let b = RandomStream::new(seed).child(&label).substream(i);
        let (mut ra, mut rb) = (a.rng(), b.rng());
        for _ in 0..8 {
            prop_assert_eq!(ra.gen::<u64>(), rb.gen::<u64>());
        }
        let mut rc = RandomStream::new(seed).child(&label).substream(i.wrapping_add(1)).rng();
        let va: Vec<u64> = (0..4).map(|_| a.rng().gen::<u64>()).collect();
        let vc: Vec<u64> = (0..4).map(|_| rc.gen::<u64>()).collect();
        prop_assert_ne!(va, vc);
    }

    #[test]
    fn bump_derivatives_match_differences(t in 0.0f64..1.0, kind in prop_oneof![Just(BumpKind::Phi), Just(BumpKind::Psi), Just(BumpKind::PsiPoly)]) {
        let b = BumpFn::new(kind);
        let (lo, hi) = b.support();
        let w = hi - lo;
        let x = lo + w * (0.05 + 0.9 * t);
        let h = 2.5e-4 * w;
        for k in 0..4 {
            let f = |s: f64| b.eval(s, k).unwrap();
            let fd = (f(x - 2.0 * h) - 8.0 * f(x - h) + 8.0 * f(x + h) - f(x + 2.0 * h)) / (12.0 * h);
            let exact = b.eval(x, k + 1).unwrap();
            prop_assert!((fd - exact).abs() <= 1e-6 * b.max_abs(k + 1), "order {} at {}: {} vs {}", k + 1, x, fd, exact);
        }
    }

    #[test]
    fn product_density_is_even_in_r(t in -0.5f64..0.5, r in 0.0f64..0.9, tilt in 0.0f64..0.9) {
        for c in [Component1d::Uniform, Component1d::Gaussian] {
            let a = density_1d_perturbed(c, r, tilt, BumpFn::phi(), t).unwrap();
            let b = density_1d_perturbed(c, -r, -tilt, BumpFn::phi(), t).unwrap();
            prop_assert!((a - b).abs() <= 1e-13 * a.abs().max(1.0));
        }
    }

    #[test]
    fn fit_recovers_power_laws(gamma in -1.0f64..1.0, c in 0.01f64..100.0) {
        let data: Vec<(f64, f64)> = (6..=12).map(|k| {
            let n = (1u64 << k) as f64;
            (n, c * n.powf(gamma))
        }).collect();
        let fit = fit_exponent(&data).unwrap();
        prop_assert!((fit.slope - gamma).abs() < 1e-12);
        prop_assert!((fit.intercept - c.ln()).abs() < 1e-9);
    }
}

fn schemes() -> &'static Vec<PerturbationScheme> {
    static SCHEMES: OnceLock<Vec<PerturbationScheme>> = OnceLock::new();
    SCHEMES.get_or_init(|| {
        let knobs = Knobs::default();
        [Regime::cube(), Regime::Gaussian, Regime::Lp { p: 4.0 }, Regime::Lp { p: 1.5 }, Regime::Lp { p: 1.0 }, Regime::Mixture]
            .iter()
            .map(|r| default_params(r, 64, 0.5, &knobs).unwrap().build().unwrap())
            .collect()
    })
}

proptest! {
    #![proptest_config(config(32))]

    #[test]
    fn apply_then_invert_recovers_base(seed in any::<u64>(), which in 0usize..5, u in 0.0f64..1.0) {
        // The Gaussian shift is excluded: its inverse needs the shift itself.
        let scheme = &schemes()[which];
        let mut rng = RandomStream::new(seed).rng();
        let base = scheme.draw_base(&mut rng).unwrap();
        let y = scheme.apply(&base, u).unwrap();
        let x = scheme.invert(&y, &base, u).unwrap();
        let err = x.iter().zip(&base.x).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        prop_assert!(err < 1e-10, "{} err {}", scheme.name(), err);
    }

    #[test]
    fn search_is_monotone_in_trials(seed in any::<u64>(), k in 1usize..8) {
        let set = &shells()[5];
        let stream = RandomStream::new(seed);
        let opts = SearchOptions { rounds: 2, ..SearchOptions::default() };
        let a = sup_line_search(&**set, k, &stream, &opts).unwrap().measure.length;
        let b = sup_line_search(&**set, 2 * k, &stream, &opts).unwrap().measure.length;
        prop_assert!(b >= a, "{} then {}", a, b);
    }

    #[test]
    fn check_reports_are_reproducible(seed in any::<u64>()) {
        let params = ClaimParams::new().with("samples", 500.0).with("p", 3.0);
        let s = RandomStream::new(seed);
        let a = check_claim(Claim::ExpMoments, &params, &s).unwrap();
        let b = check_claim(Claim::ExpMoments, &params, &s).unwrap();
        prop_assert_eq!(a.estimate.to_bits(), b.estimate.to_bits());
        prop_assert_eq!(a.verdict, b.verdict);
    }
}

proptest! {
    #![proptest_config(config(8))]

    #[test]
    fn certificates_replay(seed in any::<u64>()) {
        let set = &shells()[0];
        let cube = default_params(&Regime::cube(), N, 0.5, &Knobs::default()).unwrap().build().unwrap();
        let opts = FinderOptions { pilot: 50, ..FinderOptions::default() };
        let cert = find_long_line_with(&**set, &cube, 20, 64, &RandomStream::new(seed), &opts).unwrap();
        let again = replay(&cert, &**set).unwrap();
        prop_assert_eq!(again.segment, cert.segment.clone());
        prop_assert_eq!(again.fraction.to_bits(), cert.fraction.to_bits());
        prop_assert!(cert.fraction >= 0.0 && cert.fraction <= 1.0);
    }
}
