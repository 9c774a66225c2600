//! Effective Hamiltonians of the G-equation
//!
//! `u_t = |Du| + <V(x/eps, omega), Du>`
//!
//! advected by stationary ergodic divergence-free random velocity fields.
//!
//! The crate is organized bottom-up:
//!
//! - [`field`]: random environments (cellular, random-phase, Poisson bump and
//!   heavy-tailed shear fields) with certified sup bounds.
//! - [`dynamics`]: the controlled flow `x' = a(t) + V(x)`, random piecewise
//!   constant controls and their drift diagnostics.
//! - [`hj`]: grids and solvers for the time-dependent, discounted and
//!   minimal-time Hamilton–Jacobi problems: semi-Lagrangian schemes, a
//!   shortest-path solver with exact segment costs, and monotone
//!   Lax–Friedrichs sweeping kept as a cross-check.
//! - [`homogenize`]: time constants, reachable sets, shape checks and the three
//!   independent estimators of the effective Hamiltonian.
//! - [`experiments`]: end-to-end studies returning pass/fail reports, and the
//!   acceptance criteria.
//! - [`cli`]: configuration parsing and subcommand dispatch for the `gflame`
//!   binary.
//!
//! Everything below runs in 2D; fields, trajectories and the grid solvers also
//! accept 3D through the `const D: usize` parameter.

// NaN must fail the parameter checks, hence `!(x > 0.0)` style comparisons.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod cli;
pub mod dynamics;
pub mod error;
pub mod experiments;
pub mod field;
pub mod hj;
pub mod homogenize;
pub mod io;
pub mod stats;
pub mod vecops;

pub use error::{Error, Result};
pub use field::{make_field, FieldFamily, FieldRealization, FieldSpec};
