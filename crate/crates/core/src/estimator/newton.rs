//! Blockwise Newton sweeps with step halving.

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;

use super::objective::{
    basis_derivatives_at, neighbor_deviations, objective, score_derivatives, subregion_whittle,
    Lambdas, Problem,
};
use crate::error::{Error, Result};
use crate::linalg::solve_spd;

/// Step sizes tried are `(1/2)^δ` for δ = 0..=DEFAULT_MAX_HALVINGS.
pub const DEFAULT_MAX_HALVINGS: u32 = 30;

/// What happened during one block sweep.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct SweepReport {
    /// Blocks whose step was accepted.
    pub accepted: usize,
    /// Blocks left unchanged because no step size reduced the objective.
    pub rejected: usize,
    /// Hessians that needed a ridge.
    pub repaired: usize,
    /// Halvings applied to the combined score displacement.
    pub backtracks: u32,
}

fn newton_direction(g: &DVector<f64>, h: &DMatrix<f64>) -> Result<(DVector<f64>, bool)> {
    let (x, repaired) =
        solve_spd(h, g).ok_or_else(|| Error::Numeric("Hessian could not be repaired".into()))?;
    Ok((-x, repaired))
}

/// One Jacobi sweep over all score vectors αᵢ.
///
/// Each αᵢ takes a Newton step against the snapshot `a`, halved until the
/// objective with all other rows fixed decreases. The combined displacement
/// is then halved until the full objective does not increase.
pub fn update_scores(
    problem: &Problem,
    theta: &DMatrix<f64>,
    a: &DMatrix<f64>,
    lambdas: Lambdas,
    max_halvings: u32,
) -> Result<(DMatrix<f64>, SweepReport)> {
    let phi = problem.basis.apply(theta);
    let dev = neighbor_deviations(a, problem.graph);
    let k = a.ncols();

    let steps: Vec<Result<(Option<DVector<f64>>, bool)>> = (0..problem.m())
        .into_par_iter()
        .map(|i| {
            let alpha = a.row(i).transpose();
            let (g, h) = score_derivatives(problem, &phi, a, &dev, lambdas, i);
            let (delta, repaired) = newton_direction(&g, &h)?;
            let base = subregion_whittle(problem, &phi, &alpha, i);
            let touched: Vec<(usize, f64)> = std::iter::once((i, problem.self_weight(i)))
                .chain(
                    problem
                        .graph
                        .neighbors(i)
                        .iter()
                        .map(|&s| (s, problem.cross_weight(s))),
                )
                .collect();
            let mut tau = 1.0;
            for _ in 0..=max_halvings {
                let step = &delta * tau;
                let cand = &alpha + &step;
                let mut change = 2.0 * (subregion_whittle(problem, &phi, &cand, i) - base);
                if lambdas.spatial != 0.0 {
                    let mut spatial = 0.0;
                    for &(s, c) in &touched {
                        for q in 0..k {
                            let d = dev[(s, q)];
                            let moved = d + c * step[q];
                            spatial += moved * moved - d * d;
                        }
                    }
                    change += lambdas.spatial * spatial;
                }
                if change < 0.0 {
                    return Ok((Some(step), repaired));
                }
                tau *= 0.5;
            }
            Ok((None, repaired))
        })
        .collect();

    let mut report = SweepReport::default();
    let mut displacement = DMatrix::zeros(a.nrows(), k);
    for (i, s) in steps.into_iter().enumerate() {
        let (step, repaired) = s?;
        report.repaired += repaired as usize;
        match step {
            Some(step) => {
                report.accepted += 1;
                displacement.set_row(i, &step.transpose());
            }
            None => report.rejected += 1,
        }
    }
    if report.accepted == 0 {
        return Ok((a.clone(), report));
    }

    let before = objective(problem, theta, a, lambdas)?.total;
    let mut tau = 1.0;
    for _ in 0..=max_halvings {
        let cand = a + &displacement * tau;
        if let Ok(v) = objective(problem, theta, &cand, lambdas) {
            if v.total <= before {
                return Ok((cand, report));
            }
        }
        tau *= 0.5;
        report.backtracks += 1;
    }
    report.rejected += report.accepted;
    report.accepted = 0;
    Ok((a.clone(), report))
}

/// One sweep over the basis coefficient columns θ₁..θ_K in order, each
/// taking a halved Newton step that lowers the full objective.
pub fn update_basis_coeffs(
    problem: &Problem,
    theta: &DMatrix<f64>,
    a: &DMatrix<f64>,
    lambdas: Lambdas,
    max_halvings: u32,
) -> Result<(DMatrix<f64>, SweepReport)> {
    let mut theta = theta.clone();
    let mut report = SweepReport::default();
    let mut current = objective(problem, &theta, a, lambdas)?.total;
    for k in 0..theta.ncols() {
        let u = problem.basis.apply(&theta) * a.transpose();
        let (g, h) = basis_derivatives_at(problem, &u, &theta, a, lambdas, k);
        let (delta, repaired) = newton_direction(&g, &h)?;
        report.repaired += repaired as usize;
        let mut tau = 1.0;
        let mut accepted = false;
        for _ in 0..=max_halvings {
            let mut cand = theta.clone();
            let col = theta.column(k) + &delta * tau;
            cand.set_column(k, &col);
            if let Ok(v) = objective(problem, &cand, a, lambdas) {
                if v.total < current {
                    theta = cand;
                    current = v.total;
                    accepted = true;
                    break;
                }
            }
            tau *= 0.5;
        }
        if accepted {
            report.accepted += 1;
        } else {
            report.rejected += 1;
        }
    }
    Ok((theta, report))
}
