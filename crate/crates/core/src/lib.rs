//! Magnetic Stark resonances of an impurity in crossed electric and magnetic
//! fields, computed by complex translation `x -> x + ib` in a truncated
//! Hermite basis.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod basis;
pub mod bounds;
pub mod config;
pub mod eigen;
pub mod error;
pub mod io;
pub mod model;
pub mod quadrature;
pub mod resonance;
pub mod special;
pub mod sweep;

pub use error::{Error, Result};
