//! High-energy machinery: sphere partitions, directed and undirected
//! products of truncated resolvents, the Neumann tail, and scaling checks
//! for the truncated and oscillatory operators.

pub mod checks;
pub mod partition;
pub mod products;

pub use checks::{
    dir_res_scaling_check, fit_exponent, full_sphere_scaling_check, oscillatory_norm_check,
    short_range_check, OscillatoryCheck, ScalingTable, ShortRangeTable,
};
pub use partition::{sphere_partition, FullSphere, SpherePartition};
pub use products::{
    classify_product, neumann_tail_check, product_norm, product_norms, NeumannTail, ProductClass,
    ProductIndex, ProductSpec,
};
