//! The boundary representation on step functions and its matrix coefficients.

pub mod coefficient;
pub mod fast;
pub mod step;

pub use coefficient::{
    apply_pi, harish_chandra, inner_product, lipschitz_gap, matrix_coefficient, norm_squared, normalized_coefficient,
    XiTable,
};
pub use fast::{word_coefficient, IntStep};
pub use step::StepFunction;
