//! Extremal and witness sets as membership oracles with exact line
//! intersectors.
//!
//! Every set here is a [`MembershipSet`]: a deterministic membership test,
//! an optional exact intersector returning the parameter intervals of
//! `ℓ ∩ A`, the ambient measure against which its mass is calibrated, and a
//! serializable descriptor.

mod calibrate;
mod shell;
mod simple;
mod striped;

pub use calibrate::{calibrate, mc_volume, Calibration};
pub use shell::{
    ball_shell_construction, cube_shell, cube_shell_calibrated, euclidean_ball_set,
    euclidean_shell, hybrid_center, hybrid_shell, hybrid_shell_calibrated, l1_shell,
    l1_shell_calibrated, lp_shell, lp_shell_calibrated, product_norm_shell, HybridProfile,
    Profile, SeparableShell,
};
pub use simple::{BoxSet, WholeSpace};
pub use striped::{striped_cube_shell, StripedSubset};

use crate::geom::{Interval, Line, LpBall};
use crate::samplers::{sample_gaussian_mixture, sample_simplex, ProductMeasure, StreamRng};
use rand::Rng;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::sync::Arc;

/// A measure whose samples calibrate and probe sets.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Ambient {
    /// Uniform on the volume-one body `B_p^n`.
    Ball { ball: LpBall },
    /// A product measure.
    Product { mu: ProductMeasure },
    /// Uniform on the simplex `B_1^n ∩ {x ≥ 0}`.
    Simplex { n: usize },
    /// The Gaussian mixture `X + UY`.
    Mixture { n: usize },
    /// Uniform on `[lo, hi]^n`.
    Box { n: usize, lo: f64, hi: f64 },
}

impl Ambient {
    pub fn n(&self) -> usize {
        match self {
            Self::Ball { ball } => ball.n,
            Self::Product { mu } => mu.n(),
            Self::Simplex { n } | Self::Mixture { n } | Self::Box { n, .. } => *n,
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<f64> {
        match self {
            Self::Ball { ball } => ball.sample(rng),
            Self::Product { mu } => mu.sample(rng),
            Self::Simplex { n } => sample_simplex(*n, rng),
            Self::Mixture { n } => sample_gaussian_mixture(*n, rng),
            Self::Box { n, lo, hi } => (0..*n).map(|_| lo + (hi - lo) * rng.gen::<f64>()).collect(),
        }
    }
}

/// Structured, serializable record of a set: kind, parameters, calibrated
/// constants and the seed used to calibrate them.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SetDescriptor {
    pub kind: String,
    pub n: usize,
    pub params: BTreeMap<String, f64>,
    pub seed: Option<u64>,
}

impl SetDescriptor {
    pub fn new(kind: &str, n: usize) -> Self {
        Self {
            kind: kind.to_string(),
            n,
            params: BTreeMap::new(),
            seed: None,
        }
    }

    pub fn with(mut self, key: &str, value: f64) -> Self {
        self.params.insert(key.to_string(), value);
        self
    }

    pub fn get(&self, key: &str) -> Option<f64> {
        self.params.get(key).copied()
    }
}

/// A measurable subset of `ℝⁿ` given by a membership oracle.
pub trait MembershipSet: Send + Sync + std::fmt::Debug {
    fn dim(&self) -> usize;

    fn contains(&self, x: &[f64]) -> bool;

    /// Sorted, disjoint parameter intervals of `line ∩ A`, when the geometry
    /// admits an exact computation.
    fn intersect(&self, _line: &Line) -> Option<Vec<Interval>> {
        None
    }

    fn ambient(&self) -> Option<&Ambient>;

    fn descriptor(&self) -> SetDescriptor;

    /// A set-specific candidate line for long-chord searches.
    fn propose_line(&self, _rng: &mut StreamRng) -> Option<Line> {
        None
    }
}

/// Shared handle to a set.
pub type SetRef = Arc<dyn MembershipSet>;

/// Exact length of `line ∩ A` restricted to `t ∈ [lo, hi]`, in units of the
/// line parameter.
pub fn exact_parameter_length(set: &dyn MembershipSet, line: &Line, lo: f64, hi: f64) -> Option<f64> {
    set.intersect(line)
        .map(|ivs| crate::geom::total_length(&crate::geom::clip_intervals(&ivs, lo, hi)))
}
