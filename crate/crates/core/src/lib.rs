//! Reconstruction of the drift coefficient `q(x, y)` in
//!
//! ```text
//! u_t - Δu + q(x, y) u_x + C_p u = f    in (0, 1)^2 x (0, T]
//! ```
//!
//! from the terminal snapshot `g = u(·, T)`, by the monotone fixed-point
//! iteration `q_{k+1} = K q_k` with
//!
//! ```text
//! K ψ = (f - u_t(·, T; ψ) + Δg - C_p g) / g_x
//! ```
//!
//! started from the upper bound `q_0 = (f + Δg - C_p g) / g_x`.
//!
//! Dirichlet data are prescribed on `y = 0` and `y = 1`, Neumann data on
//! `x = 0` and `x = 1`.

// `!(x > 0.0)` style guards are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod error;
pub mod field_io;
pub mod forward;
pub mod grid;
pub mod inverse;
pub mod linalg;
pub mod noise;
pub mod parallel;
pub mod scenario;
pub mod validation;

pub use error::{Error, Result};
pub use forward::{assemble, solve_forward, terminal_derivative, ForwardSolution, SystemMatrix};
pub use grid::{apply_dx, apply_laplacian, norm_l2, norm_linf, restrict, BoundaryTag, Grid2D, ScalarField, TimeGrid};
pub use parallel::Execution;
pub use scenario::{correct_initial_data, evaluate_drift, BoundarySpec, BoxDrift, DriftSpec, ProblemSpec, Source};
pub use inverse::{apply_k, build_observation, extend_from_interior, fit_constant_drift, initial_guess, iterate, InverseConfig, IterationReport, ObservationData, StopReason};
pub use noise::{add_noise, denoise, DenoiseConfig, NoiseConfig};
pub use validation::{mms_study, positivity_diagnostics, rel_err, ConvergenceStudy, DiagnosticsReport};
