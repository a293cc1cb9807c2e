//! Minimum time functions of linear control problems via set-valued
//! discretization of reachable sets.
//!
//! The pipeline runs in four stages:
//!
//! 1. [`lincontrol`] describes the problem and its time reversal;
//! 2. [`reachset`] propagates polygonal approximations of the reachable sets;
//! 3. [`mintime`] interpolates the minimum time on the rings they form;
//! 4. [`adjoint`] reconstructs extremal controls from the same discretization.
//!
//! [`bench`] holds the example problems, their analytic minimum time functions
//! and the convergence experiments.

pub mod adjoint;
pub mod bench;
pub mod config;
pub mod error;
pub mod geom;
pub mod lincontrol;
pub mod mintime;
pub mod reachset;

pub use error::{Error, Result};
