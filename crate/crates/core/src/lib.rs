//! Simulation and analysis of diffusive quantum trajectories for a fluorescing
//! qubit whose emission is monitored by heterodyne detection.
//!
//! The crate is organised bottom-up:
//!
//! - [`bloch`]: qubit states in the excitation/coherence coordinates `(u, x, y)`.
//! - [`measurement`]: single-step heterodyne physics (outcome densities, Kraus updates).
//! - [`trajectory`]: trajectory and ensemble generation, statistics, post-selection.
//! - [`mlp`]: most-likely-path Hamiltonian dynamics, boundary-value solvers and the
//!   closed-form ideal-measurement solution.
//! - [`correlators`]: leading-order covariance functions and Monte Carlo estimators.
//! - [`sme`]: general n-level diffusive stochastic master equations.
//! - [`contextual`]: observable reconstruction from heterodyne outcome statistics.
//! - [`numerics`]: small numerical kernels shared by the above.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bloch;
pub mod contextual;
pub mod correlators;
pub mod error;
pub mod measurement;
pub mod mlp;
pub mod numerics;
pub mod sme;
pub mod trajectory;

pub use bloch::{BlochState, DensityMatrix2, PolarAngle};
pub use error::{Error, Result};
pub use measurement::{MeasurementParams, QuadratureSample};
pub use trajectory::{Ensemble, Scheme, Trajectory};
