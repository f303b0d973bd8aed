//! Effective degrees of freedom and AIC.

use nalgebra::DMatrix;

use super::objective::{column_weights, score_likelihood_hessian, Lambdas, Problem};
use crate::basis::PenaltyFrame;
use crate::linalg::shrinkage_trace;

/// `tr((H + λR)⁻¹ H)` for one basis column, evaluated in the penalty frame.
///
/// With the null block `N` of R split off, the trace is
/// `|N| + Σ s/(s + λ)` where `s` are the eigenvalues of `D^{-1/2} G D^{-1/2}`,
/// `G` the Schur complement of `H_NN` and `D` the penalized diagonal.
pub fn penalized_trace(h: &DMatrix<f64>, frame: &PenaltyFrame, lambda: f64) -> f64 {
    let dim = h.nrows();
    if lambda == 0.0 {
        return dim as f64;
    }
    let ht = frame.rotation.transpose() * h * &frame.rotation;
    let null = &frame.null;
    let pen: Vec<usize> = (0..dim).filter(|i| !null.contains(i)).collect();
    let hnn = DMatrix::from_fn(null.len(), null.len(), |a, b| ht[(null[a], null[b])]);
    let hnp = DMatrix::from_fn(null.len(), pen.len(), |a, b| ht[(null[a], pen[b])]);
    let hpp = DMatrix::from_fn(pen.len(), pen.len(), |a, b| ht[(pen[a], pen[b])]);

    let Some(chol) = hnn.clone().cholesky() else {
        return direct_trace(h, frame, lambda);
    };
    let schur = hpp - hnp.transpose() * chol.solve(&hnp);
    let scale: Vec<f64> = pen.iter().map(|&i| frame.diag[i].sqrt().recip()).collect();
    let scaled = DMatrix::from_fn(pen.len(), pen.len(), |a, b| {
        schur[(a, b)] * scale[a] * scale[b]
    });
    let scaled = (&scaled + scaled.transpose()) * 0.5;
    null.len() as f64 + shrinkage_trace(&scaled, lambda)
}

fn direct_trace(h: &DMatrix<f64>, frame: &PenaltyFrame, lambda: f64) -> f64 {
    let r = &frame.rotation
        * DMatrix::from_diagonal(&frame.diag.clone().into())
        * frame.rotation.transpose();
    match (h + r * lambda).lu().solve(h) {
        Some(x) => x.trace().max(0.0),
        None => 0.0,
    }
}

/// `(df₁, df₂)` at `(Θ, A)` for the given tuning parameters.
pub fn degrees_of_freedom(
    problem: &Problem,
    theta: &DMatrix<f64>,
    a: &DMatrix<f64>,
    lambdas: Lambdas,
) -> (f64, f64) {
    let basis = problem.basis;
    let u = basis.apply(theta) * a.transpose();
    let df1 = (0..theta.ncols())
        .map(|k| {
            let (_, omega) = column_weights(problem, &u, a, k);
            penalized_trace(
                &basis.weighted_gram(&omega),
                &basis.frame,
                lambdas.roughness,
            )
        })
        .sum();

    let phi = basis.apply(theta);
    let df2 = (0..problem.m())
        .map(|i| {
            let alpha = a.row(i).transpose();
            let h = score_likelihood_hessian(problem, &phi, &alpha, i);
            shrinkage_trace(&h, lambdas.spatial * problem.spatial_curvature(i))
        })
        .sum();
    (df1, df2)
}

/// `2 ℓ_W + 2 (df₁ + df₂)`.
pub fn aic(whittle: f64, df1: f64, df2: f64) -> f64 {
    2.0 * whittle + 2.0 * (df1 + df2)
}
