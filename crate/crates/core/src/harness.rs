//! Experiment configuration, scaling runs, exponent fits and persistence.
//!
//! A run builds, for every `n` of the ladder, the regime's extremal set
//! calibrated to mass `a`, certifies a long segment with the finder (lower
//! curve), and probes the set with the line search seeded by that segment
//! (upper curve). Randomness for dimension `n` flows from
//! `seed/n/<n>`: the set calibrates on `…/set`, the finder runs on `…/finder`
//! and the search on `…/search`.

use crate::error::{Error, Result};
use crate::finder::{default_params, find_long_line_with, FinderOptions, Knobs, LineCertificate, Regime};
use crate::linemeasure::{sup_line_search, SearchOptions};
use crate::samplers::{ProductMeasure, RandomStream};
use crate::sets::{
    cube_shell_calibrated, euclidean_ball_set, hybrid_shell_calibrated, l1_shell_calibrated,
    lp_shell_calibrated, product_norm_shell, Ambient, Calibration, SetDescriptor, SetRef,
    StripedSubset,
};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::sync::Arc;

/// The default dimension ladder `64, 128, …, 4096`.
pub fn default_ladder() -> Vec<usize> {
    (6..=12).map(|k| 1usize << k).collect()
}

/// Radial stripes laid over the regime's set.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StripeConfig {
    /// Share of accepted stripes; the base set is calibrated to mass `a/λ`.
    pub lambda: f64,
    pub delta: f64,
    pub k: Option<usize>,
}

/// Set-construction choices.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SetConfig {
    /// Breakpoint multiplier of the hybrid profile.
    pub beta: f64,
    /// Radius of the mixture ball in units of `√n`.
    pub ball_radius: f64,
    pub stripes: Option<StripeConfig>,
}

impl Default for SetConfig {
    fn default() -> Self {
        Self {
            beta: 1.0,
            ball_radius: 5.0,
            stripes: None,
        }
    }
}

/// Monte Carlo budgets.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Budgets {
    pub calibration_samples: usize,
    pub centering_samples: usize,
    pub pilot: usize,
    pub search_rounds: usize,
}

impl Default for Budgets {
    fn default() -> Self {
        Self {
            calibration_samples: 100_000,
            centering_samples: 1_000_000,
            pilot: 1000,
            search_rounds: 20,
        }
    }
}

/// A scaling experiment.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub id: String,
    pub regime: Regime,
    /// Target mass.
    pub a: f64,
    #[serde(default = "default_ladder")]
    pub n: Vec<usize>,
    /// Finder trials per `n`.
    #[serde(default = "default_trials")]
    pub trials: usize,
    /// Line-search proposals per `n`.
    #[serde(default = "default_search_trials")]
    pub search_trials: usize,
    #[serde(default = "default_u_grid")]
    pub u_grid: usize,
    pub seed: u64,
    #[serde(default)]
    pub knobs: Knobs,
    #[serde(default)]
    pub set: SetConfig,
    #[serde(default)]
    pub budgets: Budgets,
    /// Directory for CSV, plot data and the JSON envelope.
    #[serde(default)]
    pub output: Option<PathBuf>,
}

fn default_trials() -> usize {
    200
}

fn default_search_trials() -> usize {
    50
}

fn default_u_grid() -> usize {
    256
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_toml(&std::fs::read_to_string(path)?)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.a > 0.0 && self.a < 1.0) {
            return Err(Error::Config(format!("a must lie in (0, 1), got {}", self.a)));
        }
        if self.n.is_empty() || self.n.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::Config("n list must be nonempty and strictly increasing".into()));
        }
        if self.n[0] < 2 {
            return Err(Error::Config("dimensions must be >= 2".into()));
        }
        if self.trials == 0 || self.search_trials == 0 {
            return Err(Error::Config("trials and search_trials must be >= 1".into()));
        }
        if self.u_grid < 16 {
            return Err(Error::Config("u_grid must be >= 16".into()));
        }
        if let Some(s) = &self.set.stripes {
            if !(s.lambda > 0.0 && s.lambda <= 1.0 && self.a / s.lambda < 1.0) {
                return Err(Error::Config("stripes need 0 < lambda <= 1 and a/lambda < 1".into()));
            }
        }
        Ok(())
    }

    /// SHA-256 of the canonical TOML serialization.
    pub fn hash(&self) -> Result<String> {
        let text = self.to_toml()?;
        Ok(Sha256::digest(text.as_bytes())
            .iter()
            .map(|b| format!("{b:02x}"))
            .collect())
    }

    /// Root stream of dimension `n`.
    pub fn stream_for(&self, n: usize) -> RandomStream {
        RandomStream::new(self.seed).child("n").substream(n as u64)
    }
}

/// The regime's extremal set of mass (about) `a` at dimension `n`.
pub fn build_set(regime: &Regime, n: usize, a: f64, set: &SetConfig, cal: &Calibration) -> Result<SetRef> {
    let base_a = set.stripes.as_ref().map_or(a, |s| a / s.lambda);
    let base: SetRef = match regime {
        Regime::Gaussian => Arc::new(product_norm_shell(&ProductMeasure::gaussian(n)?, 1.0 - base_a, cal)?),
        Regime::Mixture => Arc::new(
            euclidean_ball_set(n, set.ball_radius * (n as f64).sqrt())?
                .with_ambient(Ambient::Mixture { n }),
        ),
        Regime::Lp { p } if p.is_infinite() => Arc::new(cube_shell_calibrated(n, base_a, cal)?),
        Regime::Lp { p } if *p > 2.0 => Arc::new(hybrid_shell_calibrated(*p, n, set.beta, base_a, cal)?),
        Regime::Lp { p } if *p > 1.0 => Arc::new(lp_shell_calibrated(*p, n, base_a, cal)?),
        Regime::Lp { p } if *p == 1.0 => Arc::new(l1_shell_calibrated(n, base_a, cal)?),
        Regime::Lp { p } => return Err(Error::InvalidExponent(*p)),
    };
    Ok(match &set.stripes {
        None => base,
        Some(s) => Arc::new(StripedSubset::new(base, vec![0.0; n], s.lambda, s.delta, s.k, cal)?),
    })
}

/// Outcome at one dimension.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PointRecord {
    pub n: usize,
    pub set: Option<SetDescriptor>,
    pub lower: Option<LineCertificate>,
    /// `max(search best, lower certified length)`.
    pub upper_len: Option<f64>,
    pub search_len: Option<f64>,
    pub error: Option<String>,
}

impl PointRecord {
    pub fn lower_len(&self) -> Option<f64> {
        self.lower.as_ref().map(|c| c.certified_length)
    }
}

/// Ordinary least squares of `log length` on `log n`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScalingFit {
    pub slope: f64,
    pub intercept: f64,
    pub slope_stderr: f64,
    pub r2: f64,
    /// `(log n, log length)`.
    pub points: Vec<(f64, f64)>,
}

/// Fit of `length ≈ e^b nᵞ` on `(n, length)` pairs.
pub fn fit_exponent(points: &[(f64, f64)]) -> Result<ScalingFit> {
    if points.len() < 4 {
        return Err(Error::InvalidParameter(format!("need >= 4 points, got {}", points.len())));
    }
    if points.iter().any(|&(n, l)| !(n > 0.0 && l > 0.0)) {
        return Err(Error::InvalidParameter("abscissas and lengths must be positive".into()));
    }
    let logs: Vec<(f64, f64)> = points.iter().map(|&(n, l)| (n.ln(), l.ln())).collect();
    let m = logs.len() as f64;
    let mx = logs.iter().map(|p| p.0).sum::<f64>() / m;
    let my = logs.iter().map(|p| p.1).sum::<f64>() / m;
    let sxx = logs.iter().map(|p| (p.0 - mx).powi(2)).sum::<f64>();
    if sxx <= 1e-12 * m * (1.0 + mx * mx) {
        return Err(Error::InvalidParameter("degenerate abscissas".into()));
    }
    let sxy = logs.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum::<f64>();
    let syy = logs.iter().map(|p| (p.1 - my).powi(2)).sum::<f64>();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let sse = logs
        .iter()
        .map(|p| (p.1 - intercept - slope * p.0).powi(2))
        .sum::<f64>();
    Ok(ScalingFit {
        slope,
        intercept,
        slope_stderr: (sse / (m - 2.0) / sxx).sqrt(),
        r2: if syy > 0.0 { 1.0 - sse / syy } else { 1.0 },
        points: logs,
    })
}

/// Append-only record of a scaling run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResultRecord {
    pub experiment_id: String,
    pub config_hash: String,
    pub version: String,
    pub started_unix: u64,
    pub finished_unix: u64,
    pub points: Vec<PointRecord>,
    pub lower_fit: Option<ScalingFit>,
    pub upper_fit: Option<ScalingFit>,
}

fn unix_now() -> u64 {
    std::time::SystemTime::now()
        .duration_since(std::time::UNIX_EPOCH)
        .map_or(0, |d| d.as_secs())
}

/// Runs one dimension; failures are recorded, not propagated.
pub fn run_point(cfg: &ExperimentConfig, n: usize) -> PointRecord {
    let mut rec = PointRecord {
        n,
        set: None,
        lower: None,
        upper_len: None,
        search_len: None,
        error: None,
    };
    let out: Result<()> = (|| {
        let root = cfg.stream_for(n);
        let cal = Calibration {
            samples: cfg.budgets.calibration_samples,
            centering_samples: cfg.budgets.centering_samples,
            stream: root.child("set"),
        };
        let set = build_set(&cfg.regime, n, cfg.a, &cfg.set, &cal)?;
        rec.set = Some(set.descriptor());
        let scheme = default_params(&cfg.regime, n, cfg.a, &cfg.knobs)?.build()?;
        let fopts = FinderOptions {
            pilot: cfg.budgets.pilot,
            ..FinderOptions::default()
        };
        let cert = find_long_line_with(&*set, &scheme, cfg.trials, cfg.u_grid, &root.child("finder"), &fopts)?;
        let sopts = SearchOptions {
            rounds: cfg.budgets.search_rounds,
            seeds: vec![cert.segment.clone()],
            ..SearchOptions::default()
        };
        let search = sup_line_search(&*set, cfg.search_trials, &root.child("search"), &sopts)?;
        rec.search_len = Some(search.measure.length);
        rec.upper_len = Some(search.measure.length.max(cert.certified_length));
        rec.lower = Some(cert);
        Ok(())
    })();
    if let Err(e) = out {
        rec.error = Some(e.to_string());
    }
    rec
}

fn fit_of(points: &[PointRecord], pick: impl Fn(&PointRecord) -> Option<f64>) -> Option<ScalingFit> {
    let data: Vec<(f64, f64)> = points
        .iter()
        .filter_map(|p| pick(p).filter(|l| *l > 0.0).map(|l| (p.n as f64, l)))
        .collect();
    fit_exponent(&data).ok()
}

/// Runs every dimension of the ladder and fits both curves.
pub fn run_scaling(cfg: &ExperimentConfig) -> Result<ResultRecord> {
    cfg.validate()?;
    let started = unix_now();
    let points = crate::par::map_slice(&cfg.n, |&n| run_point(cfg, n));
    let lower_fit = fit_of(&points, PointRecord::lower_len);
    let upper_fit = fit_of(&points, |p| p.upper_len);
    Ok(ResultRecord {
        experiment_id: cfg.id.clone(),
        config_hash: cfg.hash()?,
        version: crate::VERSION.to_string(),
        started_unix: started,
        finished_unix: unix_now(),
        points,
        lower_fit,
        upper_fit,
    })
}

fn p_label(regime: &Regime) -> String {
    match regime {
        Regime::Lp { p } if p.is_infinite() => "inf".into(),
        Regime::Lp { p } => format!("{p}"),
        Regime::Gaussian => "gaussian".into(),
        Regime::Mixture => "mixture".into(),
    }
}

fn num(v: Option<f64>) -> String {
    v.map_or_else(|| "NaN".into(), |x| format!("{x:.12e}"))
}

/// Rows `n,p,a,lower_len,upper_len,lower_fraction,seed` in ladder order.
pub fn scaling_csv(cfg: &ExperimentConfig, rec: &ResultRecord) -> String {
    let mut out = String::from("n,p,a,lower_len,upper_len,lower_fraction,seed\n");
    for pt in &rec.points {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{}",
            pt.n,
            p_label(&cfg.regime),
            cfg.a,
            num(pt.lower_len()),
            num(pt.upper_len),
            num(pt.lower.as_ref().map(|c| c.fraction)),
            cfg.seed
        );
    }
    out
}

/// Whitespace-separated columns for gnuplot, with the fits as comments.
pub fn gnuplot_data(rec: &ResultRecord) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "# experiment {}", rec.experiment_id);
    for (name, fit) in [("lower", &rec.lower_fit), ("upper", &rec.upper_fit)] {
        if let Some(f) = fit {
            let _ = writeln!(
                out,
                "# {name} fit: slope {:.6} +- {:.6}, intercept {:.6}, r2 {:.6}",
                f.slope, f.slope_stderr, f.intercept, f.r2
            );
        }
    }
    let _ = writeln!(out, "# n lower_len upper_len");
    for pt in &rec.points {
        let _ = writeln!(out, "{} {} {}", pt.n, num(pt.lower_len()), num(pt.upper_len));
    }
    out
}

/// Writes `<id>.csv`, `<id>.dat` and appends the JSON envelope to
/// `<id>.jsonl` under `dir`.
pub fn write_outputs(cfg: &ExperimentConfig, rec: &ResultRecord, dir: &Path) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(dir)?;
    let csv = dir.join(format!("{}.csv", cfg.id));
    std::fs::write(&csv, scaling_csv(cfg, rec))?;
    let dat = dir.join(format!("{}.dat", cfg.id));
    std::fs::write(&dat, gnuplot_data(rec))?;
    let jsonl = dir.join(format!("{}.jsonl", cfg.id));
    let line = serde_json::to_string(rec).map_err(|e| Error::Config(e.to_string()))?;
    use std::io::Write;
    let mut f = std::fs::OpenOptions::new().create(true).append(true).open(&jsonl)?;
    writeln!(f, "{line}")?;
    Ok(vec![csv, dat, jsonl])
}
