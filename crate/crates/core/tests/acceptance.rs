//! End-to-end acceptance suite: one PASS/FAIL line per criterion.
//!
//! Criteria listed in `KNOWN_FAILING` are reported as they come out but do not
//! fail the target; every other FAIL exits nonzero.

use longlines::diagnostics::{self, Claim, Verdict};
use longlines::finder::Knobs;
use longlines::geom::{total_length, BumpFn, Exponent, Line, LpBall};
use longlines::harness::{run_scaling, ExperimentConfig, ResultRecord};
use longlines::linemeasure::{sup_line_search, SearchOptions};
use longlines::perturb::{
    density_1d_perturbed, density_highp, g_of, g_pair, mean_inverse_pair_jacobian, tv_estimate, DensityMode,
    HighPScheme, PairMap, PerturbationScheme, Perturbed1d,
};
use longlines::quad;
use longlines::samplers::{replicate, simplex_scale, sample_simplex, Component1d, ExpPower, ProductMeasure, RandomStream};
use longlines::sets::{
    hybrid_shell_calibrated, mc_volume, product_norm_shell, striped_cube_shell, BoxSet, Calibration, MembershipSet,
    SetRef,
};
use longlines::stats;
use rand::Rng;
use statrs::distribution::{ChiSquared, ContinuousCDF};
use std::sync::Arc;
use std::time::Instant;

const KNOWN_FAILING: [usize; 2] = [7, 12];

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

/// Desk budgets shared by the scaling criteria.
const BUDGETS: &str = "
trials = 200
search_trials = 20
u_grid = 256
seed = 1
[budgets]
calibration_samples = 20000
centering_samples = 20000
pilot = 200
search_rounds = 5
";

fn scaling(id: &str, a: f64, n: &[usize], extra: &str) -> ResultRecord {
    let text = format!("id = \"{id}\"\na = {a}\nn = {n:?}\n{BUDGETS}\n{extra}");
    let cfg = ExperimentConfig::from_toml(&text).expect("valid config");
    let rec = run_scaling(&cfg).expect("scaling run");
    for p in &rec.points {
        assert!(p.error.is_none(), "{id} n={}: {:?}", p.n, p.error);
    }
    rec
}

const LADDER: [usize; 7] = [64, 128, 256, 512, 1024, 2048, 4096];

fn slopes(rec: &ResultRecord) -> (f64, f64) {
    let lo = rec.lower_fit.as_ref().map_or(f64::NAN, |f| f.slope);
    let up = rec.upper_fit.as_ref().map_or(f64::NAN, |f| f.slope);
    (lo, up)
}

fn within(x: f64, target: f64, tol: f64) -> bool {
    (x - target).abs() <= tol
}

fn slope_criterion(id: &str, regime: &str, target: f64, tol: f64, extra: &str) -> Outcome {
    let rec = scaling(id, 0.5, &LADDER, &format!("{regime}\n{extra}"));
    let (lo, up) = slopes(&rec);
    outcome(
        within(lo, target, tol) && within(up, target, tol),
        format!("lower slope {lo:.4}, upper slope {up:.4}, target {target:.4} ± {tol}"),
    )
}

fn criterion_1() -> Outcome {
    slope_criterion("cube", "[regime]\nkind = \"lp\"\np = inf", 0.25, 0.07, "")
}

fn criterion_2() -> Outcome {
    slope_criterion(
        "p4",
        "[regime]\nkind = \"lp\"\np = 4.0",
        1.0 / 9.0,
        0.05,
        "[knobs]\nr_scale = 2.5\n[set]\nbeta = 0.5",
    )
}

fn criterion_3() -> Outcome {
    slope_criterion("p2", "[regime]\nkind = \"lp\"\np = 2.0", 0.0, 0.05, "[knobs]\nr_scale = 3.4")
}

fn criterion_4() -> Outcome {
    let rec = scaling("mixture", 0.5, &LADDER, "[regime]\nkind = \"mixture\"");
    let (lo, _) = slopes(&rec);
    outcome(within(lo, 0.5, 0.07), format!("lower slope {lo:.4}, target 0.5 ± 0.07"))
}

/// Stripes over the mass-1/2 witness for `a < 1/2`.
fn stripes(a: f64) -> String {
    if a < 0.5 {
        format!("[set.stripes]\nlambda = {}\ndelta = 1e-8\nk = 4", 2.0 * a)
    } else {
        String::new()
    }
}

fn criterion_5() -> Outcome {
    let a_values = [0.125, 0.25, 0.5];
    let lens: Vec<f64> = a_values
        .iter()
        .map(|&a| {
            let rec = scaling("linear_a", a, &[1024], &format!("[regime]\nkind = \"gaussian\"\n{}", stripes(a)));
            rec.points[0].lower_len().unwrap_or(f64::NAN)
        })
        .collect();
    let per_a: Vec<f64> = lens.iter().zip(&a_values).map(|(l, a)| l / a).collect();
    let mean = stats::mean(&per_a);
    let worst = per_a.iter().map(|v| (v / mean - 1.0).abs()).fold(0.0, f64::max);
    outcome(
        worst <= 0.2,
        format!("lower/a = {per_a:.4?}, max deviation from mean {:.1}%", 100.0 * worst),
    )
}

fn criterion_6() -> Outcome {
    let n = 256;
    let r = 0.5 * (n as f64).powf(-0.25);
    let tv_a = longlines::perturb::gaussian_radial_tv(n, r);
    let knobs = Knobs::default();
    let (big_r, rr) = longlines::finder::highp_radii(3.0, 512, &knobs);
    let ball = LpBall::new(Exponent::Finite(3.0), 512).unwrap();
    let b = match HighPScheme::new(ball, rr, big_r, BumpFn::psi(), knobs.eps) {
        Ok(s) => tv_estimate(&PerturbationScheme::HighP(s), 20_000, &RandomStream::new(6)).unwrap(),
        Err(e) => return outcome(false, format!("parameters not compliant: {e}")),
    };
    outcome(
        tv_a < 0.1 && b.tv <= 0.25 + 3.0 * b.stderr,
        format!("gaussian tv {tv_a:.4} (< 0.1); high-p tv {:.5} ± {:.5} (<= 0.25 + 3se)", b.tv, b.stderr),
    )
}

/// `∫∫ density_highp` over the plane for `n = 2`, `p = 3`, split at every
/// point where a sign pattern's indicator switches.
fn highp_mass() -> f64 {
    let ball = LpBall::new(Exponent::Finite(3.0), 2).unwrap();
    let s = HighPScheme::relaxed(ball, 0.04, 4.0, BumpFn::psi()).unwrap();
    let k = s.ball.kappa;
    let f = |a: f64, b: f64| density_highp(&s, &[a, b], &DensityMode::Exact).unwrap();
    let inner = |a: f64| {
        let mut cuts = vec![-k, 0.25, 0.5, k];
        for d1 in [1.0, -1.0] {
            let x1 = s.invert_coord(a, d1, 1.0);
            let rest = k.powi(3) - x1.abs().powi(3);
            if rest > 0.0 {
                let m = rest.cbrt();
                for d2 in [1.0, -1.0] {
                    for e in [m, -m] {
                        cuts.push(e + d2 * s.phi(e)[0]);
                    }
                }
            }
        }
        cuts.sort_by(f64::total_cmp);
        cuts.windows(2).map(|w| quad::integrate(|b| f(a, b), w[0], w[1], 4)).sum::<f64>()
    };
    [-k, 0.0, 0.25, 0.5, k]
        .windows(2)
        .map(|w| quad::integrate(inner, w[0], w[1], 48))
        .sum()
}

fn product_mass_error() -> f64 {
    [Component1d::Uniform, Component1d::Gaussian]
        .iter()
        .map(|&c| {
            let (a, b) = c.effective_support();
            let d = |t: f64| density_1d_perturbed(c, 0.9, 0.6, BumpFn::phi(), t).unwrap();
            let m = quad::integrate(d, a, -1.0 / 3.0, 64)
                + quad::integrate(d, -1.0 / 3.0, 1.0 / 3.0, 64)
                + quad::integrate(d, 1.0 / 3.0, b, 64);
            (m - 1.0).abs()
        })
        .fold(0.0, f64::max)
}

/// Residual ratios `res(2r)/res(r)` of the one-coordinate product expansion.
fn product_ratios() -> Vec<f64> {
    let mut out = Vec::new();
    for c in [Component1d::Uniform, Component1d::Gaussian] {
        for t in [-0.1, 0.05, 0.2] {
            let res = |r: f64| {
                let d = Perturbed1d::new(c, r, 0.0, BumpFn::phi()).unwrap();
                (d.ratio(t) - 1.0 - 0.5 * r * r * g_of(c, BumpFn::phi(), t).unwrap()).abs()
            };
            out.push(res(0.2) / res(0.1));
        }
    }
    out
}

fn highp_ratios() -> Vec<f64> {
    let ball = LpBall::new(Exponent::Finite(3.0), 2).unwrap();
    let s = |r: f64| HighPScheme::relaxed(ball, r, 4.0, BumpFn::psi()).unwrap();
    [0.3, 0.37, 0.41, 0.45]
        .iter()
        .map(|&y| {
            let res = |r: f64| (s(r).mean_inverse_jacobian(y) - 1.0 - s(r).g(y)).abs();
            res(0.02) / res(0.01)
        })
        .collect()
}

fn pair_ratios() -> Vec<f64> {
    let pm = |r: f64| PairMap::new(1.5, r, 4.0, 0.2, BumpFn::psi()).unwrap();
    let (lo, hi) = pm(0.1).support();
    [(0.3, 0.5), (0.4, 0.6), (0.55, 0.35)]
        .iter()
        .map(|&(a, b)| {
            let (y1, y2) = (lo + a * (hi - lo), lo + b * (hi - lo));
            let res = |r: f64| (mean_inverse_pair_jacobian(&pm(r), y1, y2).unwrap() - 1.0 - g_pair(&pm(r), y1, y2)).abs();
            res(0.02) / res(0.01)
        })
        .collect()
}

fn all_in(xs: &[f64], lo: f64, hi: f64) -> bool {
    xs.iter().all(|x| (lo..=hi).contains(x))
}

fn criterion_7() -> Outcome {
    let mass = highp_mass();
    let perr = product_mass_error();
    let prod = product_ratios();
    let hp = highp_ratios();
    let pair = pair_ratios();
    outcome(
        (mass - 1.0).abs() < 1e-3
            && perr < 1e-8
            && all_in(&prod, 12.0, 20.0)
            && all_in(&hp, 12.0, 20.0)
            && all_in(&pair, 6.0, 10.0),
        format!(
            "high-p mass {mass:.6}; 1d mass error {perr:.1e}; product ratios {prod:.2?}; \
             high-p ratios {hp:.2?}; pair ratios {pair:.2?} (need [6, 10])"
        ),
    )
}

/// p-value of the two-sample chi-square test on a `cells × cells` grid.
fn two_sample_p(x: &[Vec<f64>], y: &[Vec<f64>], lo: f64, hi: f64, cells: usize) -> f64 {
    let bin = |v: &[f64]| {
        let idx = |t: f64| (((t - lo) / (hi - lo) * cells as f64) as usize).min(cells - 1);
        idx(v[0]) * cells + idx(v[1])
    };
    let mut a = vec![0.0; cells * cells];
    let mut b = vec![0.0; cells * cells];
    x.iter().for_each(|v| a[bin(v)] += 1.0);
    y.iter().for_each(|v| b[bin(v)] += 1.0);
    let (n1, n2) = (x.len() as f64, y.len() as f64);
    let (k1, k2) = ((n2 / n1).sqrt(), (n1 / n2).sqrt());
    let mut stat = 0.0;
    let mut df = 0usize;
    for (ai, bi) in a.iter().zip(&b) {
        if ai + bi > 0.0 {
            stat += (k1 * ai - k2 * bi).powi(2) / (ai + bi);
            df += 1;
        }
    }
    1.0 - ChiSquared::new((df - 1) as f64).unwrap().cdf(stat)
}

/// Uniform draws from `contains` by rejection from the box `[lo, hi]²`.
fn rejection(count: usize, lo: f64, hi: f64, stream: &RandomStream, contains: impl Fn(&[f64]) -> bool + Sync + Send) -> Vec<Vec<f64>> {
    replicate(count, stream, |rng, _| loop {
        let v = [lo + (hi - lo) * rng.gen::<f64>(), lo + (hi - lo) * rng.gen::<f64>()];
        if contains(&v) {
            return v.to_vec();
        }
    })
}

fn criterion_8() -> Outcome {
    let m = 200_000;
    let mut parts = Vec::new();
    let mut pass = true;
    for p in [1.0, 3.0] {
        let ball = LpBall::new(Exponent::Finite(p), 2).unwrap();
        let k = ball.kappa;
        let x = replicate(m, &RandomStream::new(80).child(&format!("ball{p}")), |rng, _| ball.sample(rng));
        let y = rejection(m, -k, k, &RandomStream::new(81).child(&format!("ball{p}")), |v| ball.contains(v));
        let pv = two_sample_p(&x, &y, -k, k, 10);
        pass &= pv > 1e-3;
        parts.push(format!("B_{p}^2 p-value {pv:.3}"));
    }
    let k = simplex_scale(2);
    let x = replicate(m, &RandomStream::new(82), |rng, _| sample_simplex(2, rng));
    let y = rejection(m, 0.0, k, &RandomStream::new(83), |v| v[0] + v[1] <= k);
    let pv = two_sample_p(&x, &y, 0.0, k, 10);
    pass &= pv > 1e-3;
    parts.push(format!("simplex p-value {pv:.3}"));
    for p in [1.0, 2.0, 3.0, 4.0] {
        let law = ExpPower::new(p).unwrap();
        let v = replicate(m, &RandomStream::new(84).substream(p as u64), |rng, _| law.sample_with_pow(rng).1);
        let (mean, se) = stats::mean_se(&v);
        let (var, vse) = (stats::variance(&v), stats::variance_se(&v));
        pass &= (mean - 1.0 / p).abs() <= 3.0 * se && (var - 1.0 / p).abs() <= 3.0 * vse;
        parts.push(format!("p={p}: E {mean:.4}, Var {var:.4}"));
    }
    outcome(pass, parts.join("; "))
}

fn criterion_9(reports: &[diagnostics::CheckReport]) -> Outcome {
    let var: Vec<&diagnostics::CheckReport> = reports.iter().filter(|r| r.claim == Claim::VarNorm).collect();
    let ps: Vec<String> = var
        .iter()
        .map(|r| format!("p={}: {:.5} vs {:.5} ({})", r.p.map_or("-".to_string(), |p| p.to_string()), r.estimate, r.threshold(), r.verdict))
        .collect();
    let covered = [Some(1.0), Some(4.0), Some(f64::INFINITY)]
        .iter()
        .all(|p| var.iter().any(|r| r.p == *p && r.n == 4096));
    outcome(covered && var.iter().all(|r| r.verdict == Verdict::Pass), ps.join("; "))
}

fn criterion_10(results: &[Result<diagnostics::CheckReport, String>]) -> Outcome {
    let mut fails = Vec::new();
    let mut inconclusive = 0;
    for r in results {
        match r {
            Ok(rep) if rep.verdict == Verdict::Fail => fails.push(format!("{} (n={})", rep.claim, rep.n)),
            Ok(rep) if rep.verdict == Verdict::Inconclusive => inconclusive += 1,
            Ok(_) => {}
            Err(e) => fails.push(format!("error: {e}")),
        }
    }
    outcome(
        fails.is_empty(),
        format!("{} checks, {} fail, {inconclusive} inconclusive {fails:?}", results.len(), fails.len()),
    )
}

/// `max/min` of the normalized sup-search length over the ladder.
fn shell_variation(build: impl Fn(usize, &Calibration) -> SetRef, rate: impl Fn(f64) -> f64) -> (f64, Vec<f64>) {
    let norm: Vec<f64> = LADDER
        .iter()
        .map(|&n| {
            let cal = Calibration::new(5).with_samples(20_000, 100_000);
            let set = build(n, &cal);
            let r = sup_line_search(&*set, 10_000, &RandomStream::new(11).substream(n as u64), &SearchOptions::default())
                .unwrap();
            r.measure.length / rate(n as f64)
        })
        .collect();
    let mx = norm.iter().copied().fold(0.0, f64::max);
    let mn = norm.iter().copied().fold(f64::INFINITY, f64::min);
    (mx / mn, norm)
}

fn criterion_11() -> Outcome {
    let (vp, np) = shell_variation(
        |n, cal| Arc::new(product_norm_shell(&ProductMeasure::gaussian(n).unwrap(), 0.5, cal).unwrap()),
        |n| n.powf(0.25),
    );
    let (vh, nh) = shell_variation(
        |n, cal| Arc::new(hybrid_shell_calibrated(4.0, n, 0.5, 0.5, cal).unwrap()),
        |n| n.powf(1.0 / 9.0),
    );
    outcome(
        vp < 1.25 && vh < 1.25,
        format!("product max/min {vp:.3} {np:.3?}; hybrid p=4 max/min {vh:.3} {nh:.3?}"),
    )
}

fn criterion_12() -> Outcome {
    let cal = Calibration::new(12).with_samples(100_000, 100_000);
    let s = striped_cube_shell(2, 0.5, 0.02, 1e-4, &cal).unwrap();
    let (vol, se) = mc_volume(&s, 100_000, &RandomStream::new(8)).unwrap();
    let q = BoxSet::new(2, 1.0, 2.0);
    let mut rng = RandomStream::new(9).rng();
    let mut worst: f64 = f64::NEG_INFINITY;
    let mut over = 0;
    for _ in 0..1000 {
        let a = [1.0 + rng.gen::<f64>(), 1.0 + rng.gen::<f64>()];
        let b = [1.0 + rng.gen::<f64>(), 1.0 + rng.gen::<f64>()];
        let line = Line::through(&a, &b);
        let lb = total_length(&s.intersect(&line).unwrap()) * line.speed();
        let lq = total_length(&q.intersect(&line).unwrap()) * line.speed();
        let excess = lb - 0.5 * lq;
        worst = worst.max(excess);
        over += (excess > 0.02) as usize;
    }

    // Cube, n = 256: certificates in striped witnesses against the mass-1/2 witness.
    let upper_half = scaling("cor", 0.5, &[256], "[regime]\nkind = \"lp\"\np = inf").points[0]
        .upper_len
        .unwrap_or(f64::NAN);
    let mut pattern = true;
    let mut parts = Vec::new();
    for a in [0.125, 0.25, 0.5] {
        let rec = scaling("cor", a, &[256], &format!("[regime]\nkind = \"lp\"\np = inf\n{}", stripes(a)));
        let lower = rec.points[0].lower_len().unwrap_or(f64::NAN);
        pattern &= lower <= 4.0 * a * upper_half;
        parts.push(format!("a={a}: {lower:.4} <= {:.4}", 4.0 * a * upper_half));
    }
    outcome(
        vol >= 0.5 - 3.0 * se && over == 0 && pattern,
        format!(
            "Vol(B) {vol:.4} ± {se:.4}; lines with excess > 0.02: {over}/1000, max excess {worst:.4}; {}",
            parts.join(", ")
        ),
    )
}

fn main() {
    // `cargo test` passes harness flags; a filter that names nothing here skips the suite.
    let args: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    if !args.is_empty() && !args.iter().any(|a| "acceptance".contains(a.as_str())) {
        return;
    }
    let suite_start = Instant::now();
    let verify = diagnostics::verify_all(1)
        .into_iter()
        .map(|r| r.map_err(|e| e.to_string()))
        .collect::<Vec<_>>();
    let reports: Vec<diagnostics::CheckReport> = verify.iter().filter_map(|r| r.as_ref().ok().cloned()).collect();
    let verify_secs = suite_start.elapsed().as_secs_f64();

    let criteria: Vec<(usize, Box<dyn Fn() -> Outcome>)> = vec![
        (1, Box::new(criterion_1)),
        (2, Box::new(criterion_2)),
        (3, Box::new(criterion_3)),
        (4, Box::new(criterion_4)),
        (5, Box::new(criterion_5)),
        (6, Box::new(criterion_6)),
        (7, Box::new(criterion_7)),
        (8, Box::new(criterion_8)),
        (9, Box::new(|| criterion_9(&reports))),
        (10, Box::new(|| criterion_10(&verify))),
        (11, Box::new(criterion_11)),
        (12, Box::new(criterion_12)),
    ];
    let mut unexpected = Vec::new();
    for (id, run) in &criteria {
        let t = Instant::now();
        let o = run();
        let secs = t.elapsed().as_secs_f64() + if *id == 10 { verify_secs } else { 0.0 };
        let known = KNOWN_FAILING.contains(id);
        let tag = match (o.pass, known) {
            (true, _) => "PASS",
            (false, true) => "FAIL (known)",
            (false, false) => "FAIL",
        };
        println!("{tag} criterion {id:>2} [{secs:.1}s]: {}", o.detail);
        if !o.pass && !known {
            unexpected.push(*id);
        }
    }
    println!("acceptance finished in {:.1}s", suite_start.elapsed().as_secs_f64());
    if !unexpected.is_empty() {
        eprintln!("unexpected failures: {unexpected:?}");
        std::process::exit(1);
    }
}
