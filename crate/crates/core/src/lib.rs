//! Multivariable analytic interpolation with degree constraint.

pub mod cee;
pub mod cli;
pub mod covext;
pub mod error;
pub mod linalg;
pub mod matpoly;
pub mod problem;
pub mod structure;
pub mod verify;

pub use error::{Error, Result};
pub use nalgebra;
