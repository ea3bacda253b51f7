//! Monte Carlo laboratory for long line segments inside large-measure subsets
//! of high-dimensional bodies.
//!
//! For a probability measure μ on ℝⁿ and a mass level `a`, the quantity of
//! interest is
//!
//! ```text
//! L(μ, a) = inf { sup_ℓ |ℓ ∩ A| : μ(A) ≥ a }
//! ```
//!
//! where ℓ ranges over lines. The crate cannot compute the infimum; it builds
//! explicit extremal sets (upper-bound witnesses, probed by line search) and
//! runs randomized perturbation schemes that certify long segments inside any
//! given set (lower-bound certificates). The [`harness`] fits scaling
//! exponents of both curves against `n`.
//!
//! Modules, bottom up:
//!
//! - [`geom`]: vectors, segments, the volume-one body `B_p^n`, bump functions.
//! - [`samplers`]: seeded, splittable random streams and exact samplers.
//! - [`sets`]: extremal set constructions with exact line intersectors.
//! - [`linemeasure`]: measuring `|ℓ ∩ A|` and searching for long lines.
//! - [`perturb`]: perturbation schemes, perturbed densities, TV estimates.
//! - [`finder`]: lower-bound certificates from perturbation schemes.
//! - [`diagnostics`]: statistical checks of auxiliary inequalities.
//! - [`harness`]: configuration, scaling experiments, fits and output.

pub mod diagnostics;
mod error;
pub mod finder;
pub mod geom;
pub mod harness;
pub mod linemeasure;
pub mod par;
pub mod perturb;
pub mod quad;
pub mod samplers;
pub mod stats;
pub mod sets;

pub use error::{Error, Result};

/// Library version recorded in result envelopes.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
