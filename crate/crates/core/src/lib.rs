//! Localized complexity measures for ellipses.
//!
//! The crate computes localized Gaussian widths (by Monte Carlo over a
//! certified convex solver), Kolmogorov widths and critical dimensions,
//! the boundary-proximity map `phi`, critical-radius fixed points, and the
//! adaptive estimation rates they predict for ellipse-constrained least
//! squares.  A kernel path turns Gram-matrix spectra into ellipses, and a
//! packing module estimates local metric entropy at small dimension.
//!
//! Everything randomized is driven by explicit seeds through
//! [`stream::stream_rng`], so every result is a pure function of its inputs.

// Parameter checks use `!(x > 0.0)` so that NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod ellipse;
pub mod error;
pub mod experiments;
pub mod kernels;
pub mod optimize;
pub mod packing;
pub mod rates;
pub mod stream;
mod util;
pub mod widths;

pub use ellipse::{EllipseSpec, LocalizedSection, PointVec, DEFAULT_ETA, DEFAULT_MEMBERSHIP_TOL};
pub use error::{Error, Result};
