//! Exact Gaussian random field sampling by dense factorization.

use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;

use super::matern::{matern_cov, MaternParams};
use crate::error::{Error, Result};
use crate::lattice::GridField;

/// Eigenvalues below `-PSD_TOL · max eigenvalue` are an error; the rest are
/// clipped to zero.
pub const PSD_TOL: f64 = 1e-10;

/// side²×side² covariance of a side×side grid, row-major cell order.
pub fn covariance_matrix(side: usize, p: &MaternParams) -> Result<DMatrix<f64>> {
    let n = side * side;
    // distinct distances only depend on |Δrow|, |Δcol|
    let mut table = vec![0.0; side * side];
    for dr in 0..side {
        for dc in 0..side {
            table[dr * side + dc] = matern_cov(((dr * dr + dc * dc) as f64).sqrt(), p)?;
        }
    }
    Ok(DMatrix::from_fn(n, n, |a, b| {
        let dr = (a / side).abs_diff(b / side);
        let dc = (a % side).abs_diff(b % side);
        table[dr * side + dc]
    }))
}

/// `F` with `F Fᵀ = C`: eigenvectors scaled by the square roots of the
/// clipped eigenvalues.
pub fn covariance_factor(c: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let eig = c.clone().symmetric_eigen();
    let top = eig.eigenvalues.max();
    let bottom = eig.eigenvalues.min();
    if top.is_nan() || top <= 0.0 || bottom < -PSD_TOL * top {
        return Err(Error::Numeric(format!(
            "covariance is not positive semidefinite (eigenvalues in [{bottom:e}, {top:e}])"
        )));
    }
    let mut f = eig.eigenvectors;
    for (k, &e) in eig.eigenvalues.iter().enumerate() {
        f.column_mut(k).scale_mut(e.max(0.0).sqrt());
    }
    Ok(f)
}

type FactorKey = (usize, u64, u64, u64);

fn cache() -> &'static Mutex<HashMap<FactorKey, Arc<DMatrix<f64>>>> {
    static CACHE: OnceLock<Mutex<HashMap<FactorKey, Arc<DMatrix<f64>>>>> = OnceLock::new();
    CACHE.get_or_init(Default::default)
}

/// Cached factor for a side and parameter set.
pub fn grid_factor(side: usize, p: &MaternParams) -> Result<Arc<DMatrix<f64>>> {
    let key = (side, p.rho.to_bits(), p.nu.to_bits(), p.sigma2.to_bits());
    if let Some(f) = cache().lock().expect("factor cache").get(&key) {
        return Ok(Arc::clone(f));
    }
    let f = Arc::new(covariance_factor(&covariance_matrix(side, p)?)?);
    cache()
        .lock()
        .expect("factor cache")
        .entry(key)
        .or_insert_with(|| Arc::clone(&f));
    Ok(f)
}

/// Zero-mean Matérn field on a side×side grid.
pub fn sample_grf<R: Rng + ?Sized>(
    side: usize,
    p: &MaternParams,
    rng: &mut R,
) -> Result<GridField> {
    if side < 2 {
        return Err(Error::InvalidParameter(format!(
            "side must be >= 2, got {side}"
        )));
    }
    let f = grid_factor(side, p)?;
    let n = side * side;
    let z = DVector::from_iterator(n, (0..n).map(|_| rng.sample::<f64, _>(StandardNormal)));
    let x = f.as_ref() * z;
    GridField::from_row_major(side, side, x.as_slice())
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use statrs::distribution::{ChiSquared, ContinuousCDF};

    #[test]
    fn factor_reproduces_covariance() {
        let p = MaternParams::new(1.2, 0.8).unwrap();
        let c = covariance_matrix(5, &p).unwrap();
        let f = covariance_factor(&c).unwrap();
        assert!((&f * f.transpose() - &c).amax() < 1e-12);
        assert_eq!(c[(0, 6)], matern_cov(2f64.sqrt(), &p).unwrap());
    }

    #[test]
    fn same_seed_same_field() {
        let p = MaternParams::new(0.8, 0.8).unwrap();
        let a = sample_grf(6, &p, &mut ChaCha8Rng::seed_from_u64(3)).unwrap();
        let b = sample_grf(6, &p, &mut ChaCha8Rng::seed_from_u64(3)).unwrap();
        assert_eq!(a.values(), b.values());
    }

    #[test]
    fn moments() {
        let p = MaternParams::new(2.0, 0.5).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let draws: Vec<GridField> = (0..200)
            .map(|_| sample_grf(6, &p, &mut rng).unwrap())
            .collect();
        let mean = draws.iter().map(|f| f.get(2, 3)).sum::<f64>() / 200.0;
        assert!(mean.abs() <= 4.0 / 200f64.sqrt());
        let prods: Vec<f64> = draws.iter().map(|f| f.get(2, 2) * f.get(2, 3)).collect();
        let m = prods.iter().sum::<f64>() / 200.0;
        let sd = (prods.iter().map(|v| (v - m).powi(2)).sum::<f64>() / 199.0).sqrt();
        assert!((m - (-0.5f64).exp()).abs() <= 3.0 * sd / 200f64.sqrt());
    }

    #[test]
    fn mahalanobis_is_chi_squared() {
        let p = MaternParams::new(1.2, 1.2).unwrap();
        let c = covariance_matrix(6, &p).unwrap();
        let chol = c.clone().cholesky().unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(2024);
        let mut stats: Vec<f64> = (0..200)
            .map(|_| {
                let x = DVector::from_vec(sample_grf(6, &p, &mut rng).unwrap().to_row_major());
                x.dot(&chol.solve(&x))
            })
            .collect();
        stats.sort_by(f64::total_cmp);
        let chi = ChiSquared::new(36.0).unwrap();
        let n = stats.len() as f64;
        let d = stats
            .iter()
            .enumerate()
            .map(|(i, &s)| {
                let f = chi.cdf(s);
                (f - i as f64 / n).abs().max(((i + 1) as f64 / n - f).abs())
            })
            .fold(0.0, f64::max);
        // asymptotic critical value at alpha = 0.01
        assert!(d < 1.628 / n.sqrt(), "KS statistic {d}");
    }
}
