//! Statistical checks of the auxiliary inequalities behind the constructions.
//!
//! Every check draws its own Monte Carlo sample and returns a [`CheckReport`]
//! with a three-way verdict at three standard errors. Claims of the form
//! "`Q(n) ≤ C·rate(n)`" with an unspecified constant are tested as rate
//! stability: the fitted constant may grow by at most 25% when the scale
//! parameter doubles.

mod claims;

use crate::error::{Error, Result};
use crate::samplers::RandomStream;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::fmt::Write as _;

/// Allowed growth of a fitted constant between two scales.
pub const RATE_SLACK: f64 = 1.25;

/// Default Monte Carlo budget per check.
pub const DEFAULT_SAMPLES: usize = 100_000;

/// Outcome of a check.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Pass,
    Fail,
    Inconclusive,
}

impl std::fmt::Display for Verdict {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Self::Pass => "pass",
            Self::Fail => "fail",
            Self::Inconclusive => "inconclusive",
        })
    }
}

/// What the estimate is claimed to satisfy.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Relation {
    AtMost { threshold: f64 },
    AtLeast { threshold: f64 },
    /// An identity: pass iff the estimate is within 3σ of `target`.
    Equals { target: f64 },
    /// `|estimate − target| ≤ tol`.
    Within { target: f64, tol: f64 },
}

impl Relation {
    pub fn threshold(&self) -> f64 {
        match *self {
            Self::AtMost { threshold } | Self::AtLeast { threshold } => threshold,
            Self::Equals { target } | Self::Within { target, .. } => target,
        }
    }

    /// Three-standard-error verdict.
    pub fn verdict(&self, estimate: f64, stderr: f64) -> Verdict {
        let k = 3.0 * stderr;
        if !estimate.is_finite() || !stderr.is_finite() {
            return Verdict::Inconclusive;
        }
        let (good, bad) = match *self {
            Self::AtMost { threshold } => (estimate + k <= threshold, estimate - k > threshold),
            Self::AtLeast { threshold } => (estimate - k >= threshold, estimate + k < threshold),
            Self::Equals { target } => {
                let ok = (estimate - target).abs() <= k;
                (ok, !ok)
            }
            Self::Within { target, tol } => {
                let d = (estimate - target).abs();
                (d + k <= tol, d - k > tol)
            }
        };
        if good {
            Verdict::Pass
        } else if bad {
            Verdict::Fail
        } else {
            Verdict::Inconclusive
        }
    }
}

/// The claim catalog.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Claim {
    /// `Cov(X₁², X₂²) ≤ 0` for `X` uniform in `B_p^n`.
    CovSquares,
    /// `E[(X₁ − a_n g₁)²] ≤ C/n`.
    CoordL2,
    /// `E[φ(RX₁) − φ(R a_n g₁)] ≤ C/n`.
    PhiMean,
    /// `Cov(φ(RX₁), φ(RX₂)) ≤ C/(nR)`.
    PhiCov,
    /// `Var(‖X‖₂²)/n` against its limit.
    VarNorm,
    /// `P(|W| > √n/2) > 0.9` for a standard Gaussian `W`, `n ≥ 16`.
    GaussTail,
    /// `d_TV(Z, Z + rW) < 0.1` at `r = n^{−1/4}/2`.
    GaussTv,
    /// `E|g|^p = 1/p` (order 1) and `Var|g|^p = 1/p` (order 2).
    ExpMoments,
    /// Sub-Gaussian concentration of `|X|` around `E = √(E|X|²)`.
    BernsteinShell,
    /// The three almost-full sets of the high-p density estimate.
    HighpSets,
    /// Probability that the preimage `x(y, δ)` leaves `B_p^n`.
    EscapeProb,
    /// The norm change of the pair map is quadratic in `r`.
    PairNormDrift,
}

impl Claim {
    pub const ALL: [Claim; 12] = [
        Self::CovSquares,
        Self::CoordL2,
        Self::PhiMean,
        Self::PhiCov,
        Self::VarNorm,
        Self::GaussTail,
        Self::GaussTv,
        Self::ExpMoments,
        Self::BernsteinShell,
        Self::HighpSets,
        Self::EscapeProb,
        Self::PairNormDrift,
    ];

    pub fn id(self) -> &'static str {
        match self {
            Self::CovSquares => "cov_squares",
            Self::CoordL2 => "coord_l2",
            Self::PhiMean => "phi_mean",
            Self::PhiCov => "phi_cov",
            Self::VarNorm => "var_norm",
            Self::GaussTail => "gauss_tail",
            Self::GaussTv => "gauss_tv",
            Self::ExpMoments => "exp_moments",
            Self::BernsteinShell => "bernstein_shell",
            Self::HighpSets => "highp_sets",
            Self::EscapeProb => "escape_prob",
            Self::PairNormDrift => "pair_norm_drift",
        }
    }
}

impl std::str::FromStr for Claim {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|c| c.id() == s)
            .ok_or_else(|| Error::UnknownClaim(s.to_string()))
    }
}

impl std::fmt::Display for Claim {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.id())
    }
}

/// Named numeric parameters of a check; missing keys take per-claim defaults.
///
/// Common keys: `n`, `p` (`inf` for the cube), `samples`, `r`, `R`, `eps`.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ClaimParams(pub BTreeMap<String, f64>);

impl ClaimParams {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with(mut self, key: &str, value: f64) -> Self {
        self.0.insert(key.to_string(), value);
        self
    }

    pub fn get(&self, key: &str, default: f64) -> f64 {
        self.0.get(key).copied().unwrap_or(default)
    }

    /// Parses `key=value` pairs.
    pub fn parse<'a>(pairs: impl IntoIterator<Item = &'a str>) -> Result<Self> {
        let mut out = Self::new();
        for kv in pairs {
            let (k, v) = kv
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("expected key=value, got `{kv}`")))?;
            let v: f64 = v
                .trim()
                .parse()
                .map_err(|_| Error::Config(format!("`{v}` is not a number")))?;
            out.0.insert(k.trim().to_string(), v);
        }
        Ok(out)
    }

    fn samples(&self) -> Result<usize> {
        self.samples_or(DEFAULT_SAMPLES)
    }

    fn samples_or(&self, default: usize) -> Result<usize> {
        let s = self.get("samples", default as f64);
        if !(s >= 100.0 && s.is_finite()) {
            return Err(Error::InvalidParameter(format!("samples must be >= 100, got {s}")));
        }
        Ok(s as usize)
    }

    fn dim(&self, default: usize) -> Result<usize> {
        let n = self.get("n", default as f64);
        if !(n >= 1.0 && n.fract() == 0.0 && n < 1e9) {
            return Err(Error::InvalidParameter(format!("n must be a positive integer, got {n}")));
        }
        Ok(n as usize)
    }
}

/// Result of one check.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CheckReport {
    pub claim: Claim,
    pub n: usize,
    pub p: Option<f64>,
    pub estimate: f64,
    pub stderr: f64,
    pub relation: Relation,
    pub verdict: Verdict,
    pub samples: usize,
    pub stream: RandomStream,
    /// Free-form context such as the bump used or a fitted constant.
    pub note: String,
}

impl CheckReport {
    pub fn threshold(&self) -> f64 {
        self.relation.threshold()
    }
}

#[allow(clippy::too_many_arguments)]
fn report(
    claim: Claim,
    n: usize,
    p: Option<f64>,
    estimate: f64,
    stderr: f64,
    relation: Relation,
    samples: usize,
    stream: &RandomStream,
    note: String,
) -> CheckReport {
    CheckReport {
        claim,
        n,
        p,
        estimate,
        stderr,
        relation,
        verdict: relation.verdict(estimate, stderr),
        samples,
        stream: stream.clone(),
        note,
    }
}

/// Runs one check.
pub fn check_claim(claim: Claim, params: &ClaimParams, stream: &RandomStream) -> Result<CheckReport> {
    match claim {
        Claim::CovSquares => claims::cov_squares(params, stream),
        Claim::CoordL2 => claims::coord_l2(params, stream),
        Claim::PhiMean => claims::phi_mean(params, stream),
        Claim::PhiCov => claims::phi_cov(params, stream),
        Claim::VarNorm => claims::var_norm(params, stream),
        Claim::GaussTail => claims::gauss_tail(params, stream),
        Claim::GaussTv => claims::gauss_tv(params, stream),
        Claim::ExpMoments => claims::exp_moments(params, stream),
        Claim::BernsteinShell => claims::bernstein_shell(params, stream),
        Claim::HighpSets => claims::highp_sets(params, stream),
        Claim::EscapeProb => claims::escape_prob(params, stream),
        Claim::PairNormDrift => claims::pair_norm_drift(params, stream),
    }
}

/// Runs a check by its string id.
pub fn check_claim_id(id: &str, params: &ClaimParams, stream: &RandomStream) -> Result<CheckReport> {
    check_claim(id.parse()?, params, stream)
}

/// The parameter sets run by `verify all`.
pub fn default_catalog() -> Vec<(Claim, ClaimParams)> {
    let p = |claim, kv: &[(&str, f64)]| {
        let mut cp = ClaimParams::new();
        for (k, v) in kv {
            cp = cp.with(k, *v);
        }
        (claim, cp)
    };
    vec![
        p(Claim::CovSquares, &[("p", 1.0)]),
        p(Claim::CovSquares, &[("p", 3.0)]),
        p(Claim::CovSquares, &[("p", f64::INFINITY)]),
        p(Claim::CoordL2, &[]),
        p(Claim::PhiMean, &[]),
        p(Claim::PhiCov, &[]),
        p(Claim::VarNorm, &[("p", 1.0)]),
        p(Claim::VarNorm, &[("p", 4.0)]),
        p(Claim::VarNorm, &[("p", f64::INFINITY)]),
        p(Claim::GaussTail, &[]),
        p(Claim::GaussTv, &[]),
        p(Claim::ExpMoments, &[("p", 2.0), ("order", 1.0)]),
        p(Claim::ExpMoments, &[("p", 3.0), ("order", 2.0)]),
        p(Claim::BernsteinShell, &[]),
        p(Claim::HighpSets, &[("part", 1.0)]),
        p(Claim::HighpSets, &[("part", 2.0)]),
        p(Claim::HighpSets, &[("part", 3.0)]),
        p(Claim::EscapeProb, &[]),
        p(Claim::PairNormDrift, &[]),
    ]
}

/// Stream of claim `claim` under `seed`.
pub fn claim_stream(seed: u64, claim: Claim) -> RandomStream {
    RandomStream::new(seed).child(claim.id())
}

/// Runs the whole catalog; checks run in parallel and come back in catalog order.
pub fn verify_all(seed: u64) -> Vec<Result<CheckReport>> {
    let catalog = default_catalog();
    crate::par::map_slice(&catalog, |(c, params)| check_claim(*c, params, &claim_stream(seed, *c)))
}

/// Header of [`csv_row`].
pub const CSV_HEADER: &str = "claim_id,n,p,estimate,stderr,threshold,verdict,seed";

/// `claim_id,n,p,estimate,stderr,threshold,verdict,seed`.
pub fn csv_row(r: &CheckReport) -> String {
    let mut s = String::new();
    let p = r.p.map_or_else(|| "NA".to_string(), |p| format!("{p}"));
    let _ = write!(
        s,
        "{},{},{},{:.9e},{:.3e},{:.9e},{},{}",
        r.claim, r.n, p, r.estimate, r.stderr, r.threshold(), r.verdict, r.stream.seed
    );
    s
}
