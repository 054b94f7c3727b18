//! Saddle points of the zero-sum game between a singular controller and a
//! stopper, for spectrally one-sided Levy processes with phase-type jumps.
//!
//! The pipeline is: [`levy_model`] finds the roots of `psi(s) = q`,
//! [`scale_fn`] turns them into closed-form scale functions, [`sn_solver`] and
//! [`sp_solver`] locate the barriers, and [`verifier`] / [`mc_oracle`] check
//! the result independently.

// `!(x < y)` is true for NaN, which is the point.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod exec;
pub mod game;
pub mod levy_model;
pub mod mc_oracle;
pub mod presets;
pub mod quadrature;
pub mod scale_fn;
pub mod sn_solver;
pub mod sp_solver;
pub mod sweep;
pub mod verifier;

pub use error::{Error, Result};
pub use exec::Execution;
pub use game::{Equilibrium, GameConfig, Solution};
pub use levy_model::{LevyModelSpec, PhaseTypeDist, RootSet, Side};
pub use scale_fn::ScaleFunctionRep;
pub use sn_solver::{GameCosts, SnEquilibrium};
pub use sp_solver::{SpCase, SpEquilibrium};
