//! Vector-valued linear inverse problems with joint-sparsity regularization.
//!
//! The solver minimizes
//!
//! ```text
//! J(u, v) = ||T u - g||^2
//!         + sum_l v_l ||u_l||_q
//!         + sum_l omega_l ||u_l||_2^2
//!         + sum_l theta_l (rho_l - v_l)^2
//! ```
//!
//! over coefficient fields `u` (one row of `M` channel entries per index)
//! and a nonnegative sparsity-indicator weight `v`. The inner loop is a
//! thresholded Landweber iteration whose nonlinearity is an exact proximity
//! operator for the channel norm `q` in {1, 2, inf}; the outer loop updates
//! `v` in closed form. Both loops contract linearly with certified rates.
//!
//! Module map:
//! - [`core`]: coefficient fields, weight vectors, parameters, telemetry
//! - [`proximity`]: ball projections, shrinkage, block thresholding
//! - [`linop`]: operator abstraction, block operators, norm estimation
//! - [`functionals`]: objective evaluation and convexity/rate certificates
//! - [`solver`]: the two-loop iteration and its rate constants
//! - [`oracle`]: brute-force and spectral references used for verification
//! - [`cli`]: configuration, synthetic problems, image I/O, command fronts

pub mod cli;
pub mod core;
pub mod functionals;
pub mod linop;
pub mod oracle;
pub mod proximity;
pub mod solver;

use thiserror::Error;

/// Crate-wide error type.
#[derive(Debug, Error)]
pub enum Error {
    #[error("shape mismatch in {context}: expected {expected}, got {got}")]
    Shape {
        context: &'static str,
        expected: usize,
        got: usize,
    },
    #[error("non-finite value in {0}")]
    NonFinite(&'static str),
    #[error("invalid parameter: {0}")]
    InvalidParam(String),
    #[error("cannot rescale the zero operator")]
    ZeroOperator,
    #[error("contraction target unattainable: {0}")]
    RateUnattainable(String),
    #[error("convexity certificate failed: {0}")]
    CertificateFailed(String),
    #[error("oracle grid too small: minimizer on boundary ({0})")]
    GridBoundary(String),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;
