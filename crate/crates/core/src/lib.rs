//! Boundary representations of free groups: exact Patterson–Sullivan
//! measures, Koopman matrix coefficients and the asymptotic experiments
//! built on them.

pub mod asymptotics;
pub mod boundary;
pub mod error;
pub mod group;
pub mod measures;
pub mod representation;
pub mod scalar;

pub use error::{Error, Result};
