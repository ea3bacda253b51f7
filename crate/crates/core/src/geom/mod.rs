//! Geometric primitives: vectors, lines and segments, the body B_p^n, bump
//! functions, and one-dimensional convex solvers used by the exact line
//! intersectors.

mod ball;
mod bump;
mod convex;
mod line;

pub use ball::{a_tilde, a_tilde_limit, kappa, lp_norm, pow_sum, Exponent, LpBall};
pub use bump::{bump_phi, Bump2, BumpFn, BumpKind};
pub use convex::{abs_pow, band_intervals, minimize, sublevel_interval, ConvexLine, PowProfile};
pub(crate) use ball::box_chord;
pub(crate) use convex::rtsafe;
pub use line::{
    clip_intervals, intersect_interval_lists, total_length, Interval, Line, RealVec, Segment,
};

/// Euclidean norm.
pub fn norm2(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum::<f64>().sqrt()
}

/// Dot product.
pub fn dot(x: &[f64], y: &[f64]) -> f64 {
    x.iter().zip(y).map(|(a, b)| a * b).sum()
}
