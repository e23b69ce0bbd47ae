//! Implicit-explicit general linear methods.
//!
//! This crate implements partitioned and implicit-explicit (IMEX) general
//! linear methods built from pairs of diagonally implicit multistage
//! integration methods (DIMSIMs). An IMEX pair advances the split system
//!
//! ```text
//! y' = f(y) + g(y)
//! ```
//!
//! treating the nonstiff term `f` with an explicit (type 1) DIMSIM and the
//! stiff term `g` with a diagonally implicit (type 2) DIMSIM that shares the
//! abscissae `c` and the matrices `U`, `V`.
//!
//! The principal pieces are:
//!
//! * [`tableau`]: method data, structural validation, the construction of
//!   `B` from the order conditions and the catalog of second and third order
//!   pairs (`2A`, `2B`, `3A`, `3B`).
//! * [`series`]: truncated power series used to check order, stage order and
//!   termination conditions mechanically.
//! * [`stepper`]: explicit, implicit and IMEX steps with a simplified Newton
//!   solver for the diagonally implicit stages.
//! * [`bootstrap`]: starting procedures (analytic or IMEX Runge-Kutta based)
//!   and the termination procedure.
//! * [`stability`]: stability matrices, spectral radii and region scans.
//! * [`problems`]: van der Pol, Prothero-Robinson, the linear test equation
//!   and a 1D advection-diffusion surrogate.
//! * [`cli`]: convergence studies, reports and the command-line harness.

// `!(x > 0.0)` style guards are used on purpose: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bootstrap;
pub mod cli;
pub mod error;
pub mod problems;
pub mod series;
pub mod stability;
pub mod stepper;
pub mod tableau;

pub use error::{Error, Result};
