//! `longlines` command-line front end.
//!
//! Exit codes: 0 success, 1 usage error, 2 calibration or convergence
//! failure, 3 a `verify` check failed.

use anyhow::{anyhow, bail, Context};
use clap::{Args, Parser, Subcommand};
use longlines::diagnostics::{self, Claim, ClaimParams, Verdict};
use longlines::finder::{default_params, find_long_line_with, FinderOptions, Knobs, Regime};
use longlines::geom::{BumpKind, Exponent, LpBall, Segment};
use longlines::harness::{self, ExperimentConfig, SetConfig};
use longlines::linemeasure::measure_segment;
use longlines::perturb::tv_estimate;
use longlines::samplers::{replicate, ProductMeasure, RandomStream};
use longlines::sets::{
    ball_shell_construction, cube_shell, cube_shell_calibrated, euclidean_ball_set, euclidean_shell,
    hybrid_shell, hybrid_shell_calibrated, l1_shell, l1_shell_calibrated, lp_shell, lp_shell_calibrated,
    mc_volume, product_norm_shell, striped_cube_shell, Ambient, Calibration, SetRef,
};
use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::PathBuf;
use std::process::ExitCode;
use std::sync::Arc;

#[derive(Parser, Debug)]
#[command(name = "longlines", version, about = "Long segments in large subsets of high-dimensional bodies")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand, Debug)]
enum Cmd {
    /// Draw points from a measure as CSV.
    Sample(SampleArgs),
    /// Monte Carlo mass of a set under its ambient measure.
    ShellVolume(VolumeArgs),
    /// Length of a segment inside a set.
    MeasureLine(MeasureArgs),
    /// Certify a long segment with the regime's perturbation scheme.
    FindLine(FindArgs),
    /// Total variation between a scheme's base and perturbed laws.
    TvEstimate(TvArgs),
    /// Run diagnostic checks and print their CSV reports.
    Verify(VerifyArgs),
    /// Run a scaling experiment from a config file.
    Scaling(ScalingArgs),
}

#[derive(Args, Debug)]
struct SampleArgs {
    /// cube, gaussian, simplex, mixture, or lp (with --p).
    #[arg(long)]
    measure: String,
    #[arg(long)]
    n: usize,
    #[arg(long, default_value_t = 10)]
    count: usize,
    #[arg(long)]
    p: Option<f64>,
    #[arg(long, default_value_t = 1)]
    seed: u64,
}

/// A set given either by `--kind` with `--param` constants or by a regime's
/// calibrated extremal set.
#[derive(Args, Debug)]
struct SetArgs {
    /// ball-shell, euclidean-shell, euclidean-ball, cube-shell, lp-shell,
    /// hybrid-shell, l1-shell, product-shell, striped-cube.
    #[arg(long)]
    kind: Option<String>,
    /// cube, gaussian, mixture or an exponent p; builds the regime's set.
    #[arg(long)]
    regime: Option<String>,
    #[arg(long)]
    n: usize,
    /// Target mass for calibrated sets.
    #[arg(long, default_value_t = 0.5)]
    a: f64,
    /// Set constants as key=value.
    #[arg(long = "param")]
    params: Vec<String>,
    #[arg(long, default_value_t = 100_000)]
    calibration_samples: usize,
    #[arg(long, default_value_t = 1_000_000)]
    centering_samples: usize,
    #[arg(long, default_value_t = 1)]
    seed: u64,
}

#[derive(Args, Debug)]
struct VolumeArgs {
    #[command(flatten)]
    set: SetArgs,
    #[arg(long, default_value_t = 100_000)]
    samples: usize,
}

#[derive(Args, Debug)]
struct MeasureArgs {
    #[command(flatten)]
    set: SetArgs,
    /// Start point: n comma-separated coordinates or one value for all.
    #[arg(long, allow_hyphen_values = true)]
    from: String,
    /// End point, same format as --from.
    #[arg(long, allow_hyphen_values = true)]
    to: String,
    /// Cell size for sets without an exact intersector.
    #[arg(long, default_value_t = 1e-3)]
    step: f64,
}

/// Scheme selection shared by `find-line` and `tv-estimate`.
#[derive(Args, Debug)]
struct SchemeArgs {
    /// cube, gaussian, mixture or an exponent p.
    #[arg(long = "scheme", default_value = "cube")]
    scheme_regime: String,
    /// Overrides of the scheme constants as key=value
    /// (eps, r_scale, c_tilde, c_large, c1, tilt, shift_r, psi).
    #[arg(long = "knob")]
    knobs: Vec<String>,
}

#[derive(Args, Debug)]
struct FindArgs {
    #[command(flatten)]
    set: SetArgs,
    #[command(flatten)]
    scheme: SchemeArgs,
    #[arg(long, default_value_t = 200)]
    trials: usize,
    #[arg(long, default_value_t = 256)]
    u_grid: usize,
    #[arg(long, default_value_t = 1000)]
    pilot: usize,
}

#[derive(Args, Debug)]
struct TvArgs {
    #[command(flatten)]
    scheme: SchemeArgs,
    #[arg(long)]
    n: usize,
    #[arg(long, default_value_t = 0.5)]
    a: f64,
    #[arg(long, default_value_t = 10_000)]
    samples: usize,
    #[arg(long, default_value_t = 1)]
    seed: u64,
}

#[derive(Args, Debug)]
struct VerifyArgs {
    /// Claim ids, or `all` for the default catalog.
    #[arg(long = "claim", required = true, value_delimiter = ',')]
    claims: Vec<String>,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long, allow_hyphen_values = true)]
    p: Option<String>,
    /// Extra check parameters as key=value.
    #[arg(long = "param")]
    params: Vec<String>,
    #[arg(long, default_value_t = 1)]
    seed: u64,
}

#[derive(Args, Debug)]
struct ScalingArgs {
    #[arg(long)]
    config: PathBuf,
    /// Directory for the CSV, gnuplot data and JSON envelope.
    #[arg(long)]
    out: Option<PathBuf>,
}

/// Error raised for malformed invocations.
#[derive(Debug)]
struct Usage(String);

impl std::fmt::Display for Usage {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for Usage {}

fn usage(msg: impl Into<String>) -> anyhow::Error {
    anyhow!(Usage(msg.into()))
}

/// Outcome of a command that ran to completion.
enum Status {
    Ok,
    VerifyFailed,
}

fn exit_code(err: &anyhow::Error) -> u8 {
    if err.downcast_ref::<Usage>().is_some() {
        return 1;
    }
    match err.downcast_ref::<longlines::Error>() {
        Some(
            longlines::Error::Config(_)
            | longlines::Error::InvalidParameter(_)
            | longlines::Error::InvalidExponent(_)
            | longlines::Error::UnknownClaim(_),
        ) => 1,
        _ => 2,
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    let out = match cli.cmd {
        Cmd::Sample(a) => cmd_sample(&a),
        Cmd::ShellVolume(a) => cmd_volume(&a),
        Cmd::MeasureLine(a) => cmd_measure(&a),
        Cmd::FindLine(a) => cmd_find(&a),
        Cmd::TvEstimate(a) => cmd_tv(&a),
        Cmd::Verify(a) => cmd_verify(&a),
        Cmd::Scaling(a) => cmd_scaling(&a),
    };
    match out {
        Ok(Status::Ok) => ExitCode::SUCCESS,
        Ok(Status::VerifyFailed) => ExitCode::from(3),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}

fn parse_regime(s: &str) -> anyhow::Result<Regime> {
    Ok(match s.trim().to_ascii_lowercase().as_str() {
        "cube" | "inf" => Regime::cube(),
        "gaussian" => Regime::Gaussian,
        "mixture" => Regime::Mixture,
        other => {
            let p: f64 = other
                .strip_prefix("p=")
                .unwrap_or(other)
                .parse()
                .map_err(|_| usage(format!("unknown regime `{s}`")))?;
            if !(p >= 1.0) {
                return Err(usage(format!("exponent must be >= 1, got {p}")));
            }
            Regime::Lp { p }
        }
    })
}

fn parse_pairs(pairs: &[String]) -> anyhow::Result<BTreeMap<String, String>> {
    pairs
        .iter()
        .map(|kv| {
            kv.split_once('=')
                .map(|(k, v)| (k.trim().to_string(), v.trim().to_string()))
                .ok_or_else(|| usage(format!("expected key=value, got `{kv}`")))
        })
        .collect()
}

fn num(key: &str, v: &str) -> anyhow::Result<f64> {
    v.parse().map_err(|_| usage(format!("{key}: `{v}` is not a number")))
}

fn parse_knobs(pairs: &[String]) -> anyhow::Result<Knobs> {
    let mut k = Knobs::default();
    for (key, v) in parse_pairs(pairs)? {
        match key.as_str() {
            "eps" => k.eps = num(&key, &v)?,
            "r_scale" => k.r_scale = num(&key, &v)?,
            "c_tilde" => k.c_tilde = num(&key, &v)?,
            "c_large" => k.c_large = num(&key, &v)?,
            "c1" => k.c1 = num(&key, &v)?,
            "shift_r" => k.shift_r = num(&key, &v)?,
            "tilt" => k.tilt = v.parse().map_err(|_| usage(format!("tilt: `{v}` is not a bool")))?,
            "psi" => k.psi = v.parse::<BumpKind>()?,
            _ => return Err(usage(format!("unknown knob `{key}`"))),
        }
    }
    Ok(k)
}

/// Point given as `n` coordinates or one value repeated.
fn parse_point(s: &str, n: usize) -> anyhow::Result<Vec<f64>> {
    let xs: Vec<f64> = s
        .split(',')
        .map(|t| num("point", t.trim()))
        .collect::<anyhow::Result<_>>()?;
    match xs.len() {
        1 => Ok(vec![xs[0]; n]),
        k if k == n => Ok(xs),
        k => Err(usage(format!("point has {k} coordinates, expected 1 or {n}"))),
    }
}

fn calibration(a: &SetArgs) -> Calibration {
    Calibration::new(a.seed).with_samples(a.calibration_samples, a.centering_samples)
}

fn build_set(a: &SetArgs) -> anyhow::Result<SetRef> {
    let cal = calibration(a);
    match (&a.kind, &a.regime) {
        (Some(_), Some(_)) => Err(usage("give either --kind or --regime, not both")),
        (None, None) => Err(usage("missing --kind or --regime")),
        (None, Some(r)) => Ok(harness::build_set(&parse_regime(r)?, a.n, a.a, &SetConfig::default(), &cal)?),
        (Some(kind), None) => {
            let raw = parse_pairs(&a.params)?;
            let mut params = BTreeMap::new();
            for (k, v) in &raw {
                params.insert(k.clone(), num(k, v)?);
            }
            let get = |k: &str| params.get(k).copied();
            let need = |k: &str| get(k).ok_or_else(|| usage(format!("{kind} needs --param {k}=…")));
            let n = a.n;
            let set: SetRef = match kind.as_str() {
                "ball-shell" => Arc::new(ball_shell_construction(n)?),
                "euclidean-shell" => Arc::new(euclidean_shell(n, need("r_lo")?, need("r_hi")?)?),
                "euclidean-ball" => Arc::new(euclidean_ball_set(n, need("radius")?)?),
                "cube-shell" => match get("c0") {
                    Some(c0) => Arc::new(cube_shell(n, c0)?),
                    None => Arc::new(cube_shell_calibrated(n, a.a, &cal)?),
                },
                "lp-shell" => match get("c0") {
                    Some(c0) => Arc::new(lp_shell(need("p")?, n, c0)?),
                    None => Arc::new(lp_shell_calibrated(need("p")?, n, a.a, &cal)?),
                },
                "hybrid-shell" => {
                    let beta = get("beta").unwrap_or(1.0);
                    match get("c0") {
                        Some(c0) => Arc::new(hybrid_shell(need("p")?, n, c0, beta, &cal)?),
                        None => Arc::new(hybrid_shell_calibrated(need("p")?, n, beta, a.a, &cal)?),
                    }
                }
                "l1-shell" => match get("c0") {
                    Some(c0) => Arc::new(l1_shell(n, c0, &cal)?),
                    None => Arc::new(l1_shell_calibrated(n, a.a, &cal)?),
                },
                "product-shell" => {
                    let mu = if get("cube").unwrap_or(0.0) != 0.0 {
                        ProductMeasure::uniform_cube(n)?
                    } else {
                        ProductMeasure::gaussian(n)?
                    };
                    let eps = get("eps").unwrap_or(1.0 - a.a);
                    Arc::new(product_norm_shell(&mu, eps, &cal)?)
                }
                "striped-cube" => Arc::new(striped_cube_shell(
                    n,
                    need("lambda")?,
                    get("eps").unwrap_or(0.0),
                    need("delta")?,
                    &cal,
                )?),
                other => return Err(usage(format!("unknown set kind `{other}`"))),
            };
            Ok(set)
        }
    }
}

fn ambient_measure(measure: &str, n: usize, p: Option<f64>) -> anyhow::Result<Ambient> {
    Ok(match measure {
        "cube" => Ambient::Product {
            mu: ProductMeasure::uniform_cube(n)?,
        },
        "gaussian" => Ambient::Product {
            mu: ProductMeasure::gaussian(n)?,
        },
        "simplex" => Ambient::Simplex { n },
        "mixture" => Ambient::Mixture { n },
        "lp" => {
            let p = p.ok_or_else(|| usage("--measure lp needs --p"))?;
            Ambient::Ball {
                ball: LpBall::new(Exponent::new(p)?, n)?,
            }
        }
        other => return Err(usage(format!("unknown measure `{other}`"))),
    })
}

fn cmd_sample(a: &SampleArgs) -> anyhow::Result<Status> {
    if a.n == 0 {
        return Err(usage("--n must be >= 1"));
    }
    let amb = ambient_measure(&a.measure, a.n, a.p)?;
    let points = replicate(a.count, &RandomStream::new(a.seed).child("sample"), |rng, _| amb.sample(rng));
    let mut out = (1..=a.n).map(|i| format!("x{i}")).collect::<Vec<_>>().join(",");
    out.push('\n');
    for x in points {
        let row: Vec<String> = x.iter().map(|v| format!("{v:.12e}")).collect();
        let _ = writeln!(out, "{}", row.join(","));
    }
    print!("{out}");
    Ok(Status::Ok)
}

fn cmd_volume(a: &VolumeArgs) -> anyhow::Result<Status> {
    let set = build_set(&a.set)?;
    let (m, se) = mc_volume(&*set, a.samples, &RandomStream::new(a.set.seed).child("volume"))?;
    println!("volume,stderr,samples");
    println!("{m:.6},{se:.6},{}", a.samples);
    Ok(Status::Ok)
}

fn cmd_measure(a: &MeasureArgs) -> anyhow::Result<Status> {
    let set = build_set(&a.set)?;
    let from = parse_point(&a.from, a.set.n)?;
    let to = parse_point(&a.to, a.set.n)?;
    let seg = Segment::between(&from, &to).map_err(|e| usage(e.to_string()))?;
    let r = measure_segment(&*set, &seg, a.step, &RandomStream::new(a.set.seed).child("measure"))?;
    println!("length,fraction,segment_length,method");
    println!("{:.9e},{:.9e},{:.9e},{}", r.length, r.fraction, seg.length(), serde_json::to_value(r.method)?.as_str().unwrap_or("?"));
    Ok(Status::Ok)
}

fn cmd_find(a: &FindArgs) -> anyhow::Result<Status> {
    let set = build_set(&a.set)?;
    let regime = parse_regime(&a.scheme.scheme_regime)?;
    let knobs = parse_knobs(&a.scheme.knobs)?;
    let scheme = default_params(&regime, a.set.n, a.set.a, &knobs)?.build()?;
    let opts = FinderOptions {
        pilot: a.pilot,
        ..FinderOptions::default()
    };
    let stream = RandomStream::new(a.set.seed).child("finder");
    let cert = find_long_line_with(&*set, &scheme, a.trials, a.u_grid, &stream, &opts)?;
    println!("{}", serde_json::to_string_pretty(&cert)?);
    Ok(Status::Ok)
}

fn cmd_tv(a: &TvArgs) -> anyhow::Result<Status> {
    let regime = parse_regime(&a.scheme.scheme_regime)?;
    let knobs = parse_knobs(&a.scheme.knobs)?;
    let scheme = default_params(&regime, a.n, a.a, &knobs)?.build()?;
    let est = tv_estimate(&scheme, a.samples, &RandomStream::new(a.seed).child("tv"))?;
    println!("tv,stderr,samples");
    println!("{:.6e},{:.6e},{}", est.tv, est.stderr, est.samples);
    Ok(Status::Ok)
}

fn cmd_verify(a: &VerifyArgs) -> anyhow::Result<Status> {
    let mut pairs: Vec<String> = a.params.clone();
    if let Some(n) = a.n {
        pairs.push(format!("n={n}"));
    }
    if let Some(p) = &a.p {
        pairs.push(format!("p={p}"));
    }
    let params = ClaimParams::parse(pairs.iter().map(String::as_str))?;
    let results = if a.claims.iter().any(|c| c == "all") {
        if a.claims.len() > 1 || !params.0.is_empty() {
            return Err(usage("`all` runs the default catalog and takes no other claims or parameters"));
        }
        diagnostics::verify_all(a.seed)
    } else {
        let claims: Vec<Claim> = a
            .claims
            .iter()
            .map(|c| c.parse::<Claim>())
            .collect::<longlines::Result<_>>()?;
        claims
            .iter()
            .map(|&c| diagnostics::check_claim(c, &params, &diagnostics::claim_stream(a.seed, c)))
            .collect()
    };
    println!("{}", diagnostics::CSV_HEADER);
    let mut failed = false;
    let mut first_err: Option<anyhow::Error> = None;
    for r in results {
        match r {
            Ok(rep) => {
                failed |= rep.verdict == Verdict::Fail;
                println!("{}", diagnostics::csv_row(&rep));
            }
            Err(e) => {
                eprintln!("error: {e}");
                first_err.get_or_insert(e.into());
            }
        }
    }
    if failed {
        return Ok(Status::VerifyFailed);
    }
    match first_err {
        Some(e) => Err(e),
        None => Ok(Status::Ok),
    }
}

fn cmd_scaling(a: &ScalingArgs) -> anyhow::Result<Status> {
    let cfg = ExperimentConfig::load(&a.config).with_context(|| format!("loading {}", a.config.display()))?;
    let rec = harness::run_scaling(&cfg)?;
    print!("{}", harness::scaling_csv(&cfg, &rec));
    for pt in &rec.points {
        if let Some(e) = &pt.error {
            eprintln!("n = {}: {e}", pt.n);
        }
    }
    for (name, fit) in [("lower", &rec.lower_fit), ("upper", &rec.upper_fit)] {
        match fit {
            Some(f) => eprintln!(
                "{name} slope {:.4} +- {:.4} (intercept {:.4}, r2 {:.4})",
                f.slope, f.slope_stderr, f.intercept, f.r2
            ),
            None => eprintln!("{name} slope unavailable"),
        }
    }
    if let Some(dir) = &a.out {
        for path in harness::write_outputs(&cfg, &rec, dir)? {
            eprintln!("wrote {}", path.display());
        }
    }
    if rec.points.iter().all(|p| p.error.is_some()) {
        bail!("every dimension failed");
    }
    Ok(Status::Ok)
}
