//! Feature matrices (one row per subregion) for clustering.

use std::fmt;
use std::str::FromStr;

use nalgebra::DMatrix;
use rayon::prelude::*;

use crate::basis::BasisSystem;
use crate::error::{Error, Result};
use crate::estimator::{fit_separate, separate_scores, weighted_scores, ModelFit};
use crate::spectrum::{smoothed_log_periodogram, FrequencyGrid, PeriodogramSet};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FeatureKind {
    /// Singular-value weighted scores.
    WeightedScores,
    /// Unweighted orthonormal scores.
    Scores,
    /// Fitted spectral densities `exp(BΘAᵀ)`.
    Sdf,
    /// Exponentiated least-squares smooth of the log-periodograms.
    Spb,
    /// Gaussian-kernel smoothed periodograms.
    Spk,
    /// Rank-K scores of separately fitted log-spectra.
    Sep,
}

impl FeatureKind {
    pub const ALL: [FeatureKind; 6] = [
        FeatureKind::WeightedScores,
        FeatureKind::Scores,
        FeatureKind::Sdf,
        FeatureKind::Spb,
        FeatureKind::Spk,
        FeatureKind::Sep,
    ];

    pub fn needs_fit(self) -> bool {
        matches!(
            self,
            FeatureKind::WeightedScores | FeatureKind::Scores | FeatureKind::Sdf
        )
    }
}

impl FromStr for FeatureKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "astar" => Ok(FeatureKind::WeightedScores),
            "a" => Ok(FeatureKind::Scores),
            "sdf" => Ok(FeatureKind::Sdf),
            "spb" => Ok(FeatureKind::Spb),
            "spk" => Ok(FeatureKind::Spk),
            "sep" => Ok(FeatureKind::Sep),
            other => Err(Error::UnknownKind {
                what: "feature kind",
                name: other.to_string(),
            }),
        }
    }
}

impl fmt::Display for FeatureKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            FeatureKind::WeightedScores => "astar",
            FeatureKind::Scores => "a",
            FeatureKind::Sdf => "sdf",
            FeatureKind::Spb => "spb",
            FeatureKind::Spk => "spk",
            FeatureKind::Sep => "sep",
        })
    }
}

/// Number of candidate kernel bandwidths.
pub const SPK_GRID: usize = 15;

/// Gaussian Nadaraya–Watson smoother on the marginal frequency grid; rows
/// sum to one.
pub fn kernel_smoother(side: usize, bandwidth: f64) -> DMatrix<f64> {
    let f = FrequencyGrid::marginal(side);
    let mut s = DMatrix::from_fn(side, side, |a, b| {
        let z = (f[a] - f[b]) / bandwidth;
        (-0.5 * z * z).exp()
    });
    for mut row in s.row_iter_mut() {
        let total: f64 = row.sum();
        row /= total;
    }
    s
}

/// Candidate bandwidths, log-spaced from a quarter of the grid spacing to
/// half the frequency range.
pub fn spk_bandwidths(side: usize) -> Vec<f64> {
    let lo = 0.25 / side as f64;
    let hi = 0.5;
    (0..SPK_GRID)
        .map(|i| lo * (hi / lo).powf(i as f64 / (SPK_GRID - 1) as f64))
        .collect()
}

/// `n‖y − Sy‖² / (n − tr S)²` for the separable smoother `S₁ ⊗ S₁`.
pub fn gcv_score(y: &DMatrix<f64>, s1: &DMatrix<f64>) -> f64 {
    let n = y.len() as f64;
    let fitted = s1 * y * s1.transpose();
    let rss = (y - fitted).norm_squared();
    let tr = s1.trace().powi(2);
    let dof = n - tr;
    if dof <= 0.0 {
        return f64::INFINITY;
    }
    n * rss / (dof * dof)
}

/// Smooths one periodogram (row-major side×side) at its GCV bandwidth.
/// Returns the smooth and the chosen bandwidth.
pub fn spk_smooth(ordinates: &[f64], side: usize) -> (Vec<f64>, f64) {
    let y = DMatrix::from_row_slice(side, side, ordinates);
    let mut best = (f64::INFINITY, 0.0, None);
    for h in spk_bandwidths(side) {
        let s1 = kernel_smoother(side, h);
        let g = gcv_score(&y, &s1);
        if g < best.0 {
            best = (g, h, Some(s1));
        }
    }
    let s1 = best.2.expect("bandwidth grid is non-empty");
    let smooth = &s1 * &y * s1.transpose();
    let out = (0..side * side)
        .map(|j| smooth[(j / side, j % side)])
        .collect();
    (out, best.1)
}

/// `exp(B(BᵀB)⁻¹Bᵀ log I)`, m×n.
pub fn spb_features(p: &PeriodogramSet, basis: &BasisSystem) -> Result<DMatrix<f64>> {
    Ok(smoothed_log_periodogram(p, basis)?
        .transpose()
        .map(f64::exp))
}

pub fn spk_features(p: &PeriodogramSet) -> DMatrix<f64> {
    let rows: Vec<Vec<f64>> = (0..p.m())
        .into_par_iter()
        .map(|i| {
            let row: Vec<f64> = p.ordinates.row(i).iter().copied().collect();
            spk_smooth(&row, p.side).0
        })
        .collect();
    DMatrix::from_fn(p.m(), p.n(), |i, j| rows[i][j])
}

/// Features that need only the periodograms.
pub fn competitor_features(
    p: &PeriodogramSet,
    basis: &BasisSystem,
    k: usize,
    kind: FeatureKind,
) -> Result<DMatrix<f64>> {
    match kind {
        FeatureKind::Spb => spb_features(p, basis),
        FeatureKind::Spk => Ok(spk_features(p)),
        FeatureKind::Sep => separate_scores(&fit_separate(p, basis)?, basis, k),
        other => Err(Error::UnknownKind {
            what: "competitor feature",
            name: other.to_string(),
        }),
    }
}

/// Feature matrix of any kind; `fit` is required for the fit-based kinds,
/// and `k` is the rank used by [`FeatureKind::Sep`].
pub fn feature_matrix(
    kind: FeatureKind,
    p: &PeriodogramSet,
    basis: &BasisSystem,
    fit: Option<&ModelFit>,
    k: usize,
) -> Result<DMatrix<f64>> {
    if !kind.needs_fit() {
        return competitor_features(p, basis, k, kind);
    }
    let fit = fit
        .ok_or_else(|| Error::InvalidParameter(format!("feature kind {kind} needs a model fit")))?;
    match kind {
        FeatureKind::WeightedScores => Ok(weighted_scores(&fit.theta, &fit.a, basis)?.astar),
        FeatureKind::Scores => Ok(weighted_scores(&fit.theta, &fit.a, basis)?.scores),
        _ => Ok((basis.apply(&fit.theta) * fit.a.transpose())
            .transpose()
            .map(f64::exp)),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn spb_is_identity_on_span() {
        let basis = BasisSystem::new(8, 4).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let th = DMatrix::from_fn(16, 2, |_, _| rng.random_range(-1.0..1.0));
        let u = basis.apply(&th);
        let raw: Vec<Vec<f64>> = (0..2)
            .map(|i| u.column(i).iter().map(|v| v.exp()).collect())
            .collect();
        let p = PeriodogramSet::from_raw(8, &raw).unwrap();
        let f = spb_features(&p, &basis).unwrap();
        assert!((f - &p.ordinates).amax() < 1e-10 * p.ordinates.amax());
    }

    #[test]
    fn spk_picks_grid_minimum() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let y: Vec<f64> = (0..64)
            .map(|j| 1.0 + (j % 8) as f64 * 0.3 + rng.random_range(0.0..1.0))
            .collect();
        let (smooth, h) = spk_smooth(&y, 8);
        let ym = DMatrix::from_row_slice(8, 8, &y);
        let chosen = gcv_score(&ym, &kernel_smoother(8, h));
        for c in spk_bandwidths(8) {
            assert!(chosen <= gcv_score(&ym, &kernel_smoother(8, c)));
        }
        assert_eq!(smooth.len(), 64);
        let s1 = kernel_smoother(8, 0.1);
        for r in s1.row_iter() {
            assert!((r.sum() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn names_round_trip() {
        for k in FeatureKind::ALL {
            assert_eq!(k.to_string().parse::<FeatureKind>().unwrap(), k);
        }
        assert!("pca".parse::<FeatureKind>().is_err());
    }
}
