//! Monotone traveling wavefronts for delayed non-local monostable
//! reaction-diffusion equations.
//!
//! The crate computes the characteristic data of the linearized profile
//! equation, the fundamental solution of the linear part, the reduced
//! (modified) wave equation, and a monotone iteration that converges to the
//! wavefront profile.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod charfun;
pub mod cli;
pub mod config;
pub mod error;
pub mod frontsolve;
pub mod fundsol;
pub mod grid;
pub mod kernel;
pub mod model;
pub mod numerics;
pub mod reduction;
pub mod verify;

pub use error::{Error, Result};

/// Formats a float with 17 significant digits.
pub fn fmt17(x: f64) -> String {
    if x.is_nan() {
        "nan".to_string()
    } else if x.is_infinite() {
        if x > 0.0 { "inf" } else { "-inf" }.to_string()
    } else {
        format!("{:.16e}", x)
    }
}
