//! Generic pipeline for `W_f = P f(X) P` on a grid.

pub mod grid;
pub mod kernel;
pub mod localization;
pub mod ugwb;

pub use grid::{GridSpec, DEFAULT_POINT_CAP};
pub use kernel::{gaussian_samples, Decay, KernelProjection, ProjectionReport};
pub use localization::{LocalizationCheck, LocalizationFunction};
pub use ugwb::{
    assemble_wf, build_ugwb, eigendecompose, group_degeneracies, hs_bound, localization_integral,
    normalization_integral, EigenStrategy, FKind, HsBound, Level, LevelCheck, Ugwb, UgwbLevel, UgwbOptions, UgwbReport,
    BETA_MARGIN,
};

/// Hermiticity, idempotency and decay-envelope residuals of `p`.
pub fn verify_projection(p: &KernelProjection, tol: f64) -> ProjectionReport {
    p.verify(tol)
}
