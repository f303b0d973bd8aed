//! Collective estimation of the log-spectra `U = B Θ Aᵀ` by a doubly
//! penalized Whittle likelihood, with in-loop tuning of both penalties.

mod dof;
mod init;
mod io;
mod newton;
mod objective;
mod separate;
#[cfg(test)]
pub(crate) mod testing;

use nalgebra::DMatrix;

pub use dof::{aic, degrees_of_freedom, penalized_trace};
pub use init::{initialize, weighted_scores, WeightedScores};
pub use io::{read_fit, read_trace, write_fit};
pub use newton::{update_basis_coeffs, update_scores, SweepReport, DEFAULT_MAX_HALVINGS};
pub use objective::{
    basis_derivatives, neighbor_deviations, objective, pen1, pen2, score_derivatives, whittle_nll,
    Lambdas, ObjectiveValue, Problem, LOG_CAP,
};
pub use separate::{fit_separate, separate_scores, SeparateFit, SEPARATE_MAX_ITER};

use crate::error::{Error, Result};

pub const LAMBDA_MIN: f64 = 1e-8;
pub const LAMBDA_MAX: f64 = 1e8;

/// How one tuning parameter evolves across iterations.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Tuning {
    /// Schall-type update from this starting value.
    Auto(f64),
    /// Held at this value.
    Fixed(f64),
}

impl Tuning {
    fn start(self) -> f64 {
        match self {
            Tuning::Auto(v) | Tuning::Fixed(v) => v,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FitOptions {
    pub max_iter: usize,
    /// Relative objective change between consecutive sweeps regarded as
    /// converged.
    pub tol: f64,
    /// Relative tuning-parameter change regarded as converged.
    pub lambda_tol: f64,
    /// Sweeps in a row that must meet `tol`.
    pub patience: usize,
    pub max_halvings: u32,
    pub roughness: Tuning,
    pub spatial: Tuning,
}

impl Default for FitOptions {
    fn default() -> Self {
        Self {
            max_iter: 200,
            tol: 1e-6,
            lambda_tol: 1e-3,
            patience: 2,
            max_halvings: DEFAULT_MAX_HALVINGS,
            roughness: Tuning::Auto(1.0),
            spatial: Tuning::Auto(1.0),
        }
    }
}

impl FitOptions {
    /// Options with the spatial penalty switched on (tuned) or off (λ₂ = 0).
    pub fn with_spatial(on: bool) -> Self {
        let mut opts = Self::default();
        opts.set_spatial(on);
        opts
    }

    pub fn set_spatial(&mut self, on: bool) {
        self.spatial = if on {
            Tuning::Auto(1.0)
        } else {
            Tuning::Fixed(0.0)
        };
    }

    pub fn spatial_on(&self) -> bool {
        self.spatial != Tuning::Fixed(0.0)
    }
}

/// One completed sweep. `objective_end ≤ objective_start` always.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceEntry {
    pub iter: usize,
    pub lambda1: f64,
    pub lambda2: f64,
    pub objective_start: f64,
    pub objective_end: f64,
    pub whittle: f64,
    pub pen1: f64,
    pub pen2: f64,
    pub df1: f64,
    pub df2: f64,
    pub aic: f64,
}

/// Estimated coefficients, scores and tuning parameters.
#[derive(Debug, Clone)]
pub struct ModelFit {
    /// L×K basis coefficients.
    pub theta: DMatrix<f64>,
    /// m×K scores.
    pub a: DMatrix<f64>,
    pub lambda1: f64,
    pub lambda2: f64,
    pub k: usize,
    pub trace: Vec<TraceEntry>,
    pub converged: bool,
    pub iterations: usize,
    pub spatial: bool,
    /// Ridge repairs applied to singular Hessians over the whole fit.
    pub repairs: usize,
}

impl ModelFit {
    pub fn lambdas(&self) -> Lambdas {
        Lambdas::new(self.lambda1, self.lambda2)
    }

    /// Fitted log-spectra `B Θ Aᵀ`, n×m.
    pub fn log_sdf(&self, problem: &Problem) -> DMatrix<f64> {
        problem.basis.apply(&self.theta) * self.a.transpose()
    }

    pub fn last(&self) -> Option<&TraceEntry> {
        self.trace.last()
    }

    /// AIC at the estimates.
    pub fn aic(&self) -> f64 {
        self.last().map_or(f64::NAN, |t| t.aic)
    }
}

/// Fits from the rank-K starting point of [`initialize`].
pub fn fit(problem: &Problem, k: usize, opts: &FitOptions) -> Result<ModelFit> {
    let (theta, a) = initialize(problem.periodograms, problem.basis, k)?;
    fit_from(problem, theta, a, opts)
}

fn next_lambda(rule: Tuning, current: f64, proposal: f64) -> f64 {
    match rule {
        Tuning::Fixed(v) => v,
        Tuning::Auto(_) => {
            let mut next = if proposal.is_finite() {
                proposal
            } else {
                LAMBDA_MAX
            };
            if next > 10.0 * current || next < 0.1 * current {
                next = 0.5 * (next + current);
            }
            next.clamp(LAMBDA_MIN, LAMBDA_MAX)
        }
    }
}

fn relative_change(old: f64, new: f64) -> f64 {
    if old == new {
        0.0
    } else {
        (new - old).abs() / old.abs().max(f64::MIN_POSITIVE)
    }
}

/// Alternates score and basis sweeps from `(theta, a)`, updating the
/// tuning parameters after every sweep.
///
/// Each sweep starts from the SVD factorization of the current surface
/// (orthonormal A), which leaves `BΘAᵀ` unchanged and pins the scale that
/// the objective cannot identify on its own.
pub fn fit_from(
    problem: &Problem,
    mut theta: DMatrix<f64>,
    mut a: DMatrix<f64>,
    opts: &FitOptions,
) -> Result<ModelFit> {
    if theta.ncols() != a.ncols() {
        return Err(Error::LengthMismatch {
            left: theta.ncols(),
            right: a.ncols(),
        });
    }
    let mut lambdas = Lambdas::new(opts.roughness.start(), opts.spatial.start());
    if lambdas.roughness < 0.0 || lambdas.spatial < 0.0 {
        return Err(Error::InvalidParameter(
            "tuning parameters must be non-negative".into(),
        ));
    }
    let mut trace: Vec<TraceEntry> = Vec::new();
    let mut calm = 0;
    let mut converged = false;
    let mut repairs = 0;

    for iter in 1..=opts.max_iter {
        if let Ok(w) = weighted_scores(&theta, &a, problem.basis) {
            theta = w.theta;
            a = w.scores;
        }
        let start = objective(problem, &theta, &a, lambdas)?;
        let (a_new, rs) = update_scores(problem, &theta, &a, lambdas, opts.max_halvings)?;
        a = a_new;
        let (theta_new, rb) = update_basis_coeffs(problem, &theta, &a, lambdas, opts.max_halvings)?;
        theta = theta_new;
        repairs += rs.repaired + rb.repaired;
        let end = objective(problem, &theta, &a, lambdas)?;

        let (df1, df2) = degrees_of_freedom(problem, &theta, &a, lambdas);
        trace.push(TraceEntry {
            iter,
            lambda1: lambdas.roughness,
            lambda2: lambdas.spatial,
            objective_start: start.total,
            objective_end: end.total,
            whittle: end.whittle,
            pen1: end.pen1,
            pen2: end.pen2,
            df1,
            df2,
            aic: aic(end.whittle, df1, df2),
        });

        let change = match trace.iter().rev().nth(1) {
            Some(prev) => relative_change(end.total, prev.objective_end),
            None => f64::INFINITY,
        };
        calm = if change < opts.tol { calm + 1 } else { 0 };

        let proposal = Lambdas::new(
            next_lambda(opts.roughness, lambdas.roughness, (df1 - 1.0) / end.pen1),
            next_lambda(opts.spatial, lambdas.spatial, df2 / end.pen2),
        );
        let shift = relative_change(lambdas.roughness, proposal.roughness)
            .max(relative_change(lambdas.spatial, proposal.spatial));
        if calm >= opts.patience && shift < opts.lambda_tol {
            converged = true;
            break;
        }
        if iter < opts.max_iter {
            lambdas = proposal;
        }
    }

    if theta.iter().chain(a.iter()).any(|v| !v.is_finite()) {
        return Err(Error::Numeric("estimates are not finite".into()));
    }
    Ok(ModelFit {
        k: theta.ncols(),
        iterations: trace.len(),
        theta,
        a,
        lambda1: lambdas.roughness,
        lambda2: lambdas.spatial,
        trace,
        converged,
        spatial: opts.spatial_on(),
        repairs,
    })
}

/// True when no sweep increased the objective by more than `slack`
/// (relative). Re-factorization between sweeps may move the objective.
pub fn trace_is_monotone(trace: &[TraceEntry], slack: f64) -> bool {
    trace
        .iter()
        .all(|t| t.objective_end <= t.objective_start + slack * t.objective_start.abs().max(1.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::estimator::testing::small_instance;

    #[test]
    fn fit_runs_and_trace_is_monotone() {
        let inst = small_instance(6, 8, 5, 2, 11);
        let p = inst.problem();
        let fit = fit(&p, 2, &FitOptions::default()).unwrap();
        assert!(!fit.trace.is_empty());
        assert!(trace_is_monotone(&fit.trace, 1e-12));
        assert!(fit.log_sdf(&p).iter().all(|v| v.is_finite()));
        for t in &fit.trace {
            assert!(t.df1 >= 8.0 - 1e-9 && t.df1 <= 50.0 + 1e-9);
            assert!(t.df2 >= 0.0 && t.df2 <= 12.0 + 1e-9);
        }
    }

    #[test]
    fn spatial_off_equals_frozen_zero() {
        let inst = small_instance(6, 8, 4, 2, 12);
        let p = inst.problem();
        let off = fit(&p, 2, &FitOptions::with_spatial(false)).unwrap();
        let frozen = FitOptions {
            spatial: Tuning::Fixed(0.0),
            ..FitOptions::default()
        };
        let on = fit(&p, 2, &frozen).unwrap();
        assert_eq!(off.theta, on.theta);
        assert_eq!(off.a, on.a);
        assert_eq!(off.trace, on.trace);
        assert!(off.trace.iter().all(|t| t.lambda2 == 0.0 && t.pen2 >= 0.0));
    }

    #[test]
    fn aic_recomputes_from_estimates() {
        let inst = small_instance(5, 8, 4, 2, 13);
        let p = inst.problem();
        let fit = fit(&p, 2, &FitOptions::default()).unwrap();
        let v = objective(&p, &fit.theta, &fit.a, fit.lambdas()).unwrap();
        let (df1, df2) = degrees_of_freedom(&p, &fit.theta, &fit.a, fit.lambdas());
        let again = aic(v.whittle, df1, df2);
        assert!((again - fit.aic()).abs() <= 1e-10 * again.abs());
    }

    #[test]
    fn deterministic() {
        let inst = small_instance(6, 8, 4, 2, 14);
        let p = inst.problem();
        let a = fit(&p, 2, &FitOptions::default()).unwrap();
        let b = fit(&p, 2, &FitOptions::default()).unwrap();
        assert_eq!(a.theta, b.theta);
        assert_eq!(a.trace, b.trace);
    }

    #[test]
    fn lambda_damping_and_clamp() {
        assert_eq!(next_lambda(Tuning::Auto(1.0), 1.0, 5.0), 5.0);
        assert_eq!(next_lambda(Tuning::Auto(1.0), 1.0, 100.0), 50.5);
        assert_eq!(next_lambda(Tuning::Auto(1.0), 1e8, f64::INFINITY), 1e8);
        assert_eq!(next_lambda(Tuning::Auto(1.0), 1e-8, 0.0), 1e-8);
        assert_eq!(next_lambda(Tuning::Fixed(0.0), 3.0, 7.0), 0.0);
    }
}
