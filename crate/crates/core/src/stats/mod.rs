//! Empirical estimators: two-point covariance, value distributions, nodal
//! domains and unit-sphere superpositions of torus eigenfunctions.

pub mod covariance;
pub mod distribution;
pub mod nodal;
pub mod superposition;

pub use covariance::{empirical_covariance, sample_covariance, CovarianceEstimate};
pub use distribution::{gaussianity_report, ks_normal, square_measure, SquareMeasure, ValueDistribution};
pub use nodal::{nodal_count, nodal_count_grid, NodalReport};
pub use superposition::{
    sample_superposition, window_kernel, window_kernel_distance, SuperpositionMode, SuperpositionSampler, SuperpositionSpec,
};
