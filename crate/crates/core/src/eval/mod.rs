//! Frozen-feature evaluation: linear probe, κ analyses, Welch's t-test,
//! the per-term loss surface, and a 2-D PCA projection.

mod analysis;
mod kappa;
mod pca;
mod probe;
mod stats;
mod surface;

pub use analysis::{run_analysis, write_analysis, AnalysisConfig, AnalysisReport};
pub use kappa::{augmentation_kappa, kappa_statistics, AugmentationKappa, KappaReport, SampleKappa};
pub use pca::{project_2d, Projection};
pub use probe::{
    extract_features, linear_probe, linear_probe_features, FeatureSplit, ProbeConfig, ProbeResult,
};
pub use stats::{compare_groups, welch_t_test, GroupComparison, GroupStats, WelchResult};
pub use surface::{loss_surface_grid, write_loss_surface_csv, SurfacePoint};
