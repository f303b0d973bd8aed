use nalgebra::{DMatrix, DVector};

use crate::basis::BasisSystem;
use crate::error::{Error, Result};
use crate::linalg::{product_svd, SortedSvd};
use crate::spectrum::PeriodogramSet;

/// Starting point from the rank-K truncation of the smoothed
/// log-periodograms: `B Θ₀ A₀ᵀ` is the best rank-K approximation of
/// `U_sp = B(BᵀB)⁻¹Bᵀ log(I)ᵀ`, with A₀ orthonormal.
pub fn initialize(
    periodograms: &PeriodogramSet,
    basis: &BasisSystem,
    k: usize,
) -> Result<(DMatrix<f64>, DMatrix<f64>)> {
    let m = periodograms.m();
    let big_l = basis.big_l();
    if k == 0 || k > m.min(big_l) {
        return Err(Error::InvalidParameter(format!(
            "K = {k} must lie in 1..={}",
            m.min(big_l)
        )));
    }
    if basis.n() != periodograms.n() {
        return Err(Error::LengthMismatch {
            left: basis.n(),
            right: periodograms.n(),
        });
    }
    let coords = basis.to_orthonormal(&periodograms.log_transposed());
    let svd = SortedSvd::new(&coords).truncate(k);
    let scaled = &svd.u * DMatrix::from_diagonal(&DVector::from_vec(svd.values.clone()));
    Ok((basis.from_orthonormal(&scaled), svd.v))
}

/// Singular-value weighted scores of a fitted surface.
#[derive(Debug, Clone)]
pub struct WeightedScores {
    /// m×K, column k is `wₖ/Σw · âₖ`.
    pub astar: DMatrix<f64>,
    /// w₁ ≥ … ≥ w_K ≥ 0.
    pub singular_values: Vec<f64>,
    /// m×K orthonormal right singular vectors Â.
    pub scores: DMatrix<f64>,
    /// L×K coefficients with `B Θ Âᵀ` equal to the input surface.
    pub theta: DMatrix<f64>,
}

impl WeightedScores {
    /// Column scale factors `wₖ/Σw`.
    pub fn weights(&self) -> Vec<f64> {
        let total: f64 = self.singular_values.iter().sum();
        self.singular_values.iter().map(|w| w / total).collect()
    }
}

/// Re-factorizes `B Θ Aᵀ` by its SVD and weights the right singular vectors.
pub fn weighted_scores(
    theta: &DMatrix<f64>,
    a: &DMatrix<f64>,
    basis: &BasisSystem,
) -> Result<WeightedScores> {
    if theta.ncols() != a.ncols() {
        return Err(Error::LengthMismatch {
            left: theta.ncols(),
            right: a.ncols(),
        });
    }
    // B = QR with Q orthonormal, so R Θ Aᵀ has the same singular values and
    // right vectors as B Θ Aᵀ.
    let svd = product_svd(&basis.coefficient_coords(theta), a);
    let total: f64 = svd.values.iter().sum();
    if total.is_nan() || total <= 0.0 {
        return Err(Error::Degenerate(
            "fitted surface is identically zero".into(),
        ));
    }
    let k = a.ncols();
    let scale = DVector::from_iterator(k, svd.values.iter().map(|w| w / total));
    let astar = &svd.v * DMatrix::from_diagonal(&scale);
    let left = &svd.u * DMatrix::from_diagonal(&DVector::from_vec(svd.values.clone()));
    Ok(WeightedScores {
        astar,
        singular_values: svd.values,
        scores: svd.v,
        theta: basis.from_orthonormal(&left),
    })
}
