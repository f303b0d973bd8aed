//! Subregion-by-subregion penalized Whittle fits, the non-collective
//! competitor.

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;

use super::dof::penalized_trace;
use super::objective::{whittle_term, whittle_weight};
use super::{LAMBDA_MAX, LAMBDA_MIN};
use crate::basis::BasisSystem;
use crate::error::{Error, Result};
use crate::linalg::{solve_spd, SortedSvd};
use crate::spectrum::PeriodogramSet;

/// Iteration cap for each separate fit.
pub const SEPARATE_MAX_ITER: usize = 50;

/// Per-subregion coefficients and tuning parameters.
#[derive(Debug, Clone)]
pub struct SeparateFit {
    /// L×m, column i is subregion i.
    pub theta: DMatrix<f64>,
    pub lambdas: Vec<f64>,
}

fn penalized(basis: &BasisSystem, ordinates: &[f64], theta: &DVector<f64>, lambda: f64) -> f64 {
    let u = basis.apply(&DMatrix::from_column_slice(
        theta.len(),
        1,
        theta.as_slice(),
    ));
    let w: f64 = (0..ordinates.len())
        .map(|j| whittle_term(u[j], ordinates[j]).0)
        .sum();
    2.0 * w + lambda * (theta.transpose() * &basis.penalty * theta)[(0, 0)]
}

/// Fits one log-spectrum `Bθ` with its own roughness parameter.
pub fn fit_one(basis: &BasisSystem, ordinates: &[f64]) -> Result<(DVector<f64>, f64)> {
    let logs = DMatrix::from_iterator(ordinates.len(), 1, ordinates.iter().map(|v| v.ln()));
    let mut theta = basis.coefficients(&logs).column(0).into_owned();
    let mut lambda = 1.0;
    for _ in 0..SEPARATE_MAX_ITER {
        let u = basis.apply(&DMatrix::from_column_slice(
            theta.len(),
            1,
            theta.as_slice(),
        ));
        let w: Vec<f64> = (0..ordinates.len())
            .map(|j| whittle_weight(u[j], ordinates[j]))
            .collect();
        let resid: Vec<f64> = w.iter().map(|w| 1.0 - w).collect();
        let rtheta = &basis.penalty * &theta;
        let g = (basis.apply_transpose(&resid) + &rtheta * lambda) * 2.0;
        let gram = basis.weighted_gram(&w);
        let h = (&gram + &basis.penalty * lambda) * 2.0;
        let (step, _) =
            solve_spd(&h, &g).ok_or_else(|| Error::Numeric("separate fit Hessian".into()))?;
        let before = penalized(basis, ordinates, &theta, lambda);
        let mut tau = 1.0;
        for _ in 0..=30 {
            let cand = &theta - &step * tau;
            if penalized(basis, ordinates, &cand, lambda) < before {
                theta = cand;
                break;
            }
            tau *= 0.5;
        }
        let after = penalized(basis, ordinates, &theta, lambda);

        let pen = (theta.transpose() * &basis.penalty * &theta)[(0, 0)];
        let df = penalized_trace(&gram, &basis.frame, lambda);
        let mut next = if pen > 0.0 {
            (df - 1.0) / pen
        } else {
            LAMBDA_MAX
        };
        if next > 10.0 * lambda || next < 0.1 * lambda {
            next = 0.5 * (next + lambda);
        }
        let next = next.clamp(LAMBDA_MIN, LAMBDA_MAX);
        let settled = (next - lambda).abs() < 1e-3 * lambda
            && (before - after).abs() < 1e-8 * after.abs().max(1.0);
        lambda = next;
        if settled {
            break;
        }
    }
    if theta.iter().any(|v| !v.is_finite()) {
        return Err(Error::Numeric("separate fit diverged".into()));
    }
    Ok((theta, lambda))
}

/// Separate fits for every subregion.
pub fn fit_separate(periodograms: &PeriodogramSet, basis: &BasisSystem) -> Result<SeparateFit> {
    let fits: Vec<(DVector<f64>, f64)> = (0..periodograms.m())
        .into_par_iter()
        .map(|i| {
            let row: Vec<f64> = periodograms.ordinates.row(i).iter().copied().collect();
            fit_one(basis, &row)
        })
        .collect::<Result<_>>()?;
    let mut theta = DMatrix::zeros(basis.big_l(), fits.len());
    let mut lambdas = Vec::with_capacity(fits.len());
    for (i, (t, l)) in fits.into_iter().enumerate() {
        theta.set_column(i, &t);
        lambdas.push(l);
    }
    Ok(SeparateFit { theta, lambdas })
}

/// Rank-K truncated SVD scores of the separately fitted log-spectra
/// `B Θ_sep`; m×K.
pub fn separate_scores(fit: &SeparateFit, basis: &BasisSystem, k: usize) -> Result<DMatrix<f64>> {
    let m = fit.theta.ncols();
    if k == 0 || k > m.min(basis.big_l()) {
        return Err(Error::InvalidParameter(format!("K = {k} out of range")));
    }
    Ok(SortedSvd::new(&basis.coefficient_coords(&fit.theta))
        .truncate(k)
        .v)
}
