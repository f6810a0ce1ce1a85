pub mod annulus;
pub mod context;
pub mod metric;
pub mod word;

pub use annulus::{enumerate_annulus, sphere_size, Annulus};
pub use context::GroupContext;
pub use metric::{
    check_projection, geodesic_point, gromov_product, hat_projection, metric_length, translation_length, Length,
    MetricKind, MetricSpec,
};
pub use word::{Letter, ReducedWord};
