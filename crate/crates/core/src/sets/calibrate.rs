use super::MembershipSet;
use crate::error::{Error, Result};
use crate::samplers::{replicate, RandomStream};

/// Monte Carlo budgets and the stream used to fit free constants.
#[derive(Clone, Debug, PartialEq)]
pub struct Calibration {
    /// Ambient samples per volume estimate.
    pub samples: usize,
    /// One-dimensional draws per centering constant.
    pub centering_samples: usize,
    pub stream: RandomStream,
}

impl Calibration {
    pub fn new(seed: u64) -> Self {
        Self {
            samples: 100_000,
            centering_samples: 1_000_000,
            stream: RandomStream::new(seed),
        }
    }

    pub fn with_samples(mut self, samples: usize, centering_samples: usize) -> Self {
        self.samples = samples;
        self.centering_samples = centering_samples;
        self
    }
}

/// Smallest `c` with `#{s ≤ c} ≥ target · len`, by bisection on `c`.
///
/// The set family is assumed monotone in `c` with membership `stat ≤ c`.
pub fn calibrate(stats: &[f64], target: f64) -> Result<f64> {
    if !(target > 0.0 && target <= 1.0) {
        return Err(Error::Calibration(format!("target mass {target} outside (0, 1]")));
    }
    if stats.is_empty() || stats.iter().any(|s| s.is_nan()) {
        return Err(Error::Calibration("no usable samples".into()));
    }
    let need = (target * stats.len() as f64).ceil() as usize;
    let count = |c: f64| stats.iter().filter(|&&s| s <= c).count();
    let mut hi = stats.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !hi.is_finite() {
        return Err(Error::Calibration("volume target unreachable".into()));
    }
    let mut lo = stats.iter().copied().fold(f64::INFINITY, f64::min);
    if count(lo) >= need {
        return Ok(lo);
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if count(mid) >= need {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(hi)
}

/// Ambient mass of `set` with its standard error.
pub fn mc_volume(set: &dyn MembershipSet, samples: usize, stream: &RandomStream) -> Result<(f64, f64)> {
    let amb = set
        .ambient()
        .ok_or_else(|| Error::InvalidParameter("set has no ambient measure".into()))?;
    if samples < 2 {
        return Err(Error::InvalidParameter("need at least 2 samples".into()));
    }
    let hits = replicate(samples, stream, |rng, _| set.contains(&amb.sample(rng)) as u8);
    let m = hits.iter().map(|&h| h as f64).sum::<f64>() / samples as f64;
    Ok((m, (m * (1.0 - m) / (samples as f64 - 1.0)).sqrt()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn calibrate_hits_the_quantile() {
        let stats: Vec<f64> = (1..=100).map(f64::from).collect();
        let c = calibrate(&stats, 0.5).unwrap();
        assert!((50.0..50.0 + 1e-9).contains(&c));
        assert_eq!(calibrate(&stats, 1.0).unwrap(), 100.0);
        assert_eq!(calibrate(&stats, 0.001).unwrap(), 1.0);
        assert!(calibrate(&stats, 0.0).is_err());
        assert!(calibrate(&[1.0, f64::INFINITY], 1.0).is_err());
    }
}
