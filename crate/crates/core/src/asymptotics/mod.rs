//! Executable forms of the asymptotic results: shadow covers, the weights
//! `μ_R`, equidistribution, asymptotic orthogonality, annular rapid decay,
//! convolution bounds and the growth experiment behind the failure of the
//! good vector bound.

pub mod equidist;
pub mod green;
pub mod orthogonality;
pub mod rd;
pub mod report;
pub mod weights;

pub use report::{fit_line, SweepReport, Value};
pub use weights::{build_partition_weights, check_shadow_cover, sphere_weights, CoverCheck, Provenance, WeightFamily};
pub use equidist::{equidistribution_error, equidistribution_sweep, pair_table, RectangleFunction, WeightScheme};
pub use orthogonality::{orthogonality_sweep, phi_r, phi_r_batch, OrthTargets, PhiInputs, TestFunction};
pub use rd::{annular_rd_ratio, coefficient_square_sum, convolve, fiber_sizes, gvb_growth, rd_convolution_check, rd_sweep, FiberRow, GroupFunction};
pub use green::{bonferroni_z, green_experiment, GreenReport};
