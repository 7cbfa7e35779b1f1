// negated comparisons are deliberate: they reject NaN along with out-of-range values
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod calculus;
pub mod cli;
pub mod config;
pub mod error;
pub mod hypothesis;
pub mod integrate;
pub mod orbits;
pub mod spectral;
pub mod system;

pub use error::{Error, Result};

pub type StateVector = nalgebra::DVector<f64>;
pub type Matrix = nalgebra::DMatrix<f64>;
