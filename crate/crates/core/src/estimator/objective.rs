//! The doubly penalized Whittle objective and its exact derivatives.
//!
//! The objective minimized throughout is
//!
//! ```text
//! F(Θ, A) = 2 ℓ_W(Θ, A) + λ₁ tr(ΘᵀRΘ) + λ₂ Σᵢ ‖Dᵢ‖²
//! ℓ_W     = Σᵢ Σⱼ [uᵢⱼ + Iᵢⱼ exp(−uᵢⱼ)],      U = B Θ Aᵀ
//! Dᵢ      = αᵢ − mean_{s ∈ Nᵢ} αₛ
//! ```
//!
//! Gradients and Hessians returned here are those of `F` itself.

use nalgebra::{DMatrix, DVector};

use crate::basis::BasisSystem;
use crate::error::{Error, Result};
use crate::lattice::NeighborGraph;
use crate::spectrum::PeriodogramSet;

/// Log-SDF values are clamped to this magnitude before exponentiation.
pub const LOG_CAP: f64 = 700.0;

/// Everything that stays fixed while (Θ, A) are estimated.
#[derive(Debug, Clone, Copy)]
pub struct Problem<'a> {
    pub periodograms: &'a PeriodogramSet,
    pub basis: &'a BasisSystem,
    pub graph: &'a NeighborGraph,
}

impl<'a> Problem<'a> {
    pub fn new(
        periodograms: &'a PeriodogramSet,
        basis: &'a BasisSystem,
        graph: &'a NeighborGraph,
    ) -> Result<Self> {
        if basis.n() != periodograms.n() {
            return Err(Error::LengthMismatch {
                left: basis.n(),
                right: periodograms.n(),
            });
        }
        if graph.len() != periodograms.m() {
            return Err(Error::LengthMismatch {
                left: graph.len(),
                right: periodograms.m(),
            });
        }
        Ok(Self {
            periodograms,
            basis,
            graph,
        })
    }

    pub fn m(&self) -> usize {
        self.periodograms.m()
    }

    pub fn n(&self) -> usize {
        self.periodograms.n()
    }

    /// Periodogram ordinate of subregion `i` at frequency `j`.
    #[inline]
    pub fn ordinate(&self, i: usize, j: usize) -> f64 {
        self.periodograms.ordinates[(i, j)]
    }

    /// Coefficient of αᵢ in Dₛ for `s = i` (1, or 0 for an isolated cell).
    pub fn self_weight(&self, i: usize) -> f64 {
        if self.graph.size(i) > 0 {
            1.0
        } else {
            0.0
        }
    }

    /// Coefficient of αᵢ in Dₛ for a neighbor `s` of `i`.
    pub fn cross_weight(&self, s: usize) -> f64 {
        -1.0 / self.graph.size(s) as f64
    }

    /// Curvature of ½·PEN₂ in αᵢ (the Hessian is this times the identity).
    pub fn spatial_curvature(&self, i: usize) -> f64 {
        let own = self.self_weight(i);
        own * own
            + self
                .graph
                .neighbors(i)
                .iter()
                .map(|&s| self.cross_weight(s).powi(2))
                .sum::<f64>()
    }
}

/// Tuning parameters (λ₁, λ₂).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Lambdas {
    pub roughness: f64,
    pub spatial: f64,
}

impl Lambdas {
    pub fn new(roughness: f64, spatial: f64) -> Self {
        Self { roughness, spatial }
    }
}

/// Components of the objective at one point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ObjectiveValue {
    /// ℓ_W (the Whittle negative log-likelihood, up to constants).
    pub whittle: f64,
    pub pen1: f64,
    pub pen2: f64,
    pub total: f64,
    /// Number of log-SDF values that hit [`LOG_CAP`].
    pub capped: usize,
}

/// `u + I·exp(−u)` with the exponent clamped; the flag reports clamping.
#[inline]
pub(crate) fn whittle_term(u: f64, ordinate: f64) -> (f64, bool) {
    let capped = u.abs() > LOG_CAP;
    let uc = u.clamp(-LOG_CAP, LOG_CAP);
    (u + ordinate * (-uc).exp(), capped)
}

/// `I·exp(−u)` with the same clamping.
#[inline]
pub(crate) fn whittle_weight(u: f64, ordinate: f64) -> f64 {
    ordinate * (-u.clamp(-LOG_CAP, LOG_CAP)).exp()
}

/// ℓ_W over all subregions for the log-SDF matrix `u` (n×m).
pub(crate) fn whittle_of_surface(problem: &Problem, u: &DMatrix<f64>) -> (f64, usize) {
    let mut total = 0.0;
    let mut capped = 0;
    for i in 0..problem.m() {
        let col = u.column(i);
        let mut part = 0.0;
        for j in 0..problem.n() {
            let (t, c) = whittle_term(col[j], problem.ordinate(i, j));
            part += t;
            capped += c as usize;
        }
        total += part;
    }
    (total, capped)
}

/// ℓ_W for subregion `i` alone with log-SDF `phi · alpha`.
pub(crate) fn subregion_whittle(
    problem: &Problem,
    phi: &DMatrix<f64>,
    alpha: &DVector<f64>,
    i: usize,
) -> f64 {
    let u = phi * alpha;
    (0..problem.n())
        .map(|j| whittle_term(u[j], problem.ordinate(i, j)).0)
        .sum()
}

/// Whittle negative log-likelihood `Σᵢ Σⱼ [uᵢⱼ + Iᵢⱼ e^{−uᵢⱼ}]`.
pub fn whittle_nll(
    theta: &DMatrix<f64>,
    a: &DMatrix<f64>,
    periodograms: &PeriodogramSet,
    basis: &BasisSystem,
) -> Result<f64> {
    check_dims(theta, a, periodograms, basis)?;
    let u = basis.apply(theta) * a.transpose();
    let mut total = 0.0;
    for i in 0..periodograms.m() {
        for j in 0..periodograms.n() {
            total += whittle_term(u[(j, i)], periodograms.ordinates[(i, j)]).0;
        }
    }
    if !total.is_finite() {
        return Err(Error::Numeric("Whittle likelihood is not finite".into()));
    }
    Ok(total)
}

fn check_dims(
    theta: &DMatrix<f64>,
    a: &DMatrix<f64>,
    periodograms: &PeriodogramSet,
    basis: &BasisSystem,
) -> Result<()> {
    if theta.nrows() != basis.big_l() {
        return Err(Error::LengthMismatch {
            left: theta.nrows(),
            right: basis.big_l(),
        });
    }
    if theta.ncols() != a.ncols() {
        return Err(Error::LengthMismatch {
            left: theta.ncols(),
            right: a.ncols(),
        });
    }
    if a.nrows() != periodograms.m() {
        return Err(Error::LengthMismatch {
            left: a.nrows(),
            right: periodograms.m(),
        });
    }
    if basis.n() != periodograms.n() {
        return Err(Error::LengthMismatch {
            left: basis.n(),
            right: periodograms.n(),
        });
    }
    Ok(())
}

/// Roughness penalty `tr(ΘᵀRΘ)`.
pub fn pen1(theta: &DMatrix<f64>, penalty: &DMatrix<f64>) -> f64 {
    (theta.transpose() * penalty * theta).trace()
}

/// `Dᵢ = αᵢ − mean of neighbor scores` for every row (zero for isolated
/// cells).
pub fn neighbor_deviations(a: &DMatrix<f64>, graph: &NeighborGraph) -> DMatrix<f64> {
    let mut d = DMatrix::zeros(a.nrows(), a.ncols());
    for i in 0..a.nrows() {
        let nb = graph.neighbors(i);
        if nb.is_empty() {
            continue;
        }
        let inv = 1.0 / nb.len() as f64;
        for k in 0..a.ncols() {
            let mean: f64 = nb.iter().map(|&s| a[(s, k)]).sum::<f64>() * inv;
            d[(i, k)] = a[(i, k)] - mean;
        }
    }
    d
}

/// Spatial fusion penalty `Σᵢ ‖Dᵢ‖²`.
pub fn pen2(a: &DMatrix<f64>, graph: &NeighborGraph) -> f64 {
    neighbor_deviations(a, graph).norm_squared()
}

/// Full objective and its parts.
pub fn objective(
    problem: &Problem,
    theta: &DMatrix<f64>,
    a: &DMatrix<f64>,
    lambdas: Lambdas,
) -> Result<ObjectiveValue> {
    check_dims(theta, a, problem.periodograms, problem.basis)?;
    let u = problem.basis.apply(theta) * a.transpose();
    let (whittle, capped) = whittle_of_surface(problem, &u);
    let p1 = pen1(theta, &problem.basis.penalty);
    let p2 = pen2(a, problem.graph);
    let total = 2.0 * whittle + lambdas.roughness * p1 + lambdas.spatial * p2;
    if !total.is_finite() {
        return Err(Error::Numeric(format!(
            "objective is not finite (whittle {whittle}, pen1 {p1}, pen2 {p2})"
        )));
    }
    Ok(ObjectiveValue {
        whittle,
        pen1: p1,
        pen2: p2,
        total,
        capped,
    })
}

/// Hessian of ℓ_W with respect to αᵢ: `Φᵀ diag(Iᵢ e^{−uᵢ}) Φ`, with `Φ = BΘ`.
pub(crate) fn score_likelihood_hessian(
    problem: &Problem,
    phi: &DMatrix<f64>,
    alpha: &DVector<f64>,
    i: usize,
) -> DMatrix<f64> {
    let k = phi.ncols();
    let u = phi * alpha;
    let mut h = DMatrix::zeros(k, k);
    for j in 0..problem.n() {
        let w = whittle_weight(u[j], problem.ordinate(i, j));
        for a in 0..k {
            let wa = w * phi[(j, a)];
            for b in 0..k {
                h[(a, b)] += wa * phi[(j, b)];
            }
        }
    }
    h
}

/// Gradient and Hessian of `F` with respect to αᵢ. `deviations` must be
/// [`neighbor_deviations`] of `a`.
pub fn score_derivatives(
    problem: &Problem,
    phi: &DMatrix<f64>,
    a: &DMatrix<f64>,
    deviations: &DMatrix<f64>,
    lambdas: Lambdas,
    i: usize,
) -> (DVector<f64>, DMatrix<f64>) {
    let k = phi.ncols();
    let alpha = a.row(i).transpose();
    let u = phi * &alpha;
    let mut g = DVector::zeros(k);
    let mut h = DMatrix::zeros(k, k);
    for j in 0..problem.n() {
        let w = whittle_weight(u[j], problem.ordinate(i, j));
        for c in 0..k {
            let p = phi[(j, c)];
            g[c] += p * (1.0 - w);
            let wp = w * p;
            for b in 0..k {
                h[(c, b)] += wp * phi[(j, b)];
            }
        }
    }
    g *= 2.0;
    h *= 2.0;
    if lambdas.spatial != 0.0 {
        let mut pg = deviations.row(i).transpose() * problem.self_weight(i);
        for &s in problem.graph.neighbors(i) {
            pg += deviations.row(s).transpose() * problem.cross_weight(s);
        }
        g += pg * (2.0 * lambdas.spatial);
        let curv = 2.0 * lambdas.spatial * problem.spatial_curvature(i);
        for c in 0..k {
            h[(c, c)] += curv;
        }
    }
    (g, h)
}

/// Per-frequency weights for column `k`: `γⱼ = Σᵢ αᵢₖ (1 − wᵢⱼ)` and
/// `ωⱼ = Σᵢ αᵢₖ² wᵢⱼ`, with `w = I e^{−u}`.
pub(crate) fn column_weights(
    problem: &Problem,
    u: &DMatrix<f64>,
    a: &DMatrix<f64>,
    k: usize,
) -> (Vec<f64>, Vec<f64>) {
    let n = problem.n();
    let mut gamma = vec![0.0; n];
    let mut omega = vec![0.0; n];
    for i in 0..problem.m() {
        let aik = a[(i, k)];
        if aik == 0.0 {
            continue;
        }
        let col = u.column(i);
        for j in 0..n {
            let w = whittle_weight(col[j], problem.ordinate(i, j));
            gamma[j] += aik * (1.0 - w);
            omega[j] += aik * aik * w;
        }
    }
    (gamma, omega)
}

/// Gradient and Hessian of `F` with respect to θₖ.
pub fn basis_derivatives(
    problem: &Problem,
    theta: &DMatrix<f64>,
    a: &DMatrix<f64>,
    lambdas: Lambdas,
    k: usize,
) -> (DVector<f64>, DMatrix<f64>) {
    let u = problem.basis.apply(theta) * a.transpose();
    basis_derivatives_at(problem, &u, theta, a, lambdas, k)
}

pub(crate) fn basis_derivatives_at(
    problem: &Problem,
    u: &DMatrix<f64>,
    theta: &DMatrix<f64>,
    a: &DMatrix<f64>,
    lambdas: Lambdas,
    k: usize,
) -> (DVector<f64>, DMatrix<f64>) {
    let basis = problem.basis;
    let (gamma, omega) = column_weights(problem, u, a, k);
    let rtheta = &basis.penalty * theta.column(k);
    let g = (basis.apply_transpose(&gamma) + rtheta * lambdas.roughness) * 2.0;
    let h = (basis.weighted_gram(&omega) + &basis.penalty * lambdas.roughness) * 2.0;
    (g, h)
}
