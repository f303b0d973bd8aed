//! Matérn Gaussian random fields and the simulation designs.

mod bessel;
mod grf;
mod matern;
mod scenario;

pub use bessel::{bessel_k, bessel_k_scaled};
pub use grf::{covariance_factor, covariance_matrix, grid_factor, sample_grf, PSD_TOL};
pub use matern::{matern_cov, MaternParams};
pub use scenario::{build_scenario, Scenario, ScenarioKind, DEFAULT_SIDE};
