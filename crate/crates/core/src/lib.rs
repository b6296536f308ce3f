//! Buyer/seller price-formation dynamics on a bounded interval.
//!
//! Four levels of description share one grid type:
//! the kinetic model for buyer and seller densities `(f, g)` with nonlocal
//! trading at cost `a`, its local limit in `h = f + g`, `u = f - g`, the
//! sharp-interface limit where `h` solves the heat equation and the price moves
//! by an ODE, and the Neumann-series transforms that turn kinetic trajectories
//! into heat-equation solutions.
//!
//! The crate is `no_std` with `alloc`; IO lives elsewhere.

#![no_std]
// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;

pub mod analysis;
pub mod bpf;
pub mod error;
pub mod grid;
pub mod hu;
pub mod init;
mod rk4;
pub mod run;
pub mod sharp;
pub mod transforms;

pub use error::{Error, Result};
pub use grid::{Field, Grid1D, Norm};
