//! Collective estimation of two-dimensional spectral density functions over a
//! lattice of spatial subregions, and clustering of the subregions through
//! their scores on a shared adaptive basis.
//!
//! The pipeline is: [`lattice::partition`] a field into subregions, compute
//! their [`spectrum::periodogram_set`], build a [`basis::BasisSystem`], run
//! [`estimator::fit`] to obtain a [`estimator::ModelFit`], then cluster the
//! weighted scores with [`cluster::cluster_pipeline`].

pub mod basis;
pub mod cluster;
pub mod error;
pub mod estimator;
pub mod kv;
pub mod lattice;
pub mod linalg;
pub mod metrics;
pub mod raster;
pub mod simulate;
pub mod spectrum;

pub use error::{Error, Result};
