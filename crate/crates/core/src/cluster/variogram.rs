//! Isotropic empirical semivariograms averaged within clusters.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::lattice::{GridField, SubregionLattice};

/// `γ̂(h) = Σ (z(s) − z(s+δ))² / (2·#pairs)` over offsets δ whose Euclidean
/// length rounds to h, for h = 1..=side/2. Entry h−1 is lag h; lags
/// without pairs are NaN.
pub fn semivariogram(field: &GridField) -> Vec<f64> {
    let (rows, cols) = (field.nrows(), field.ncols());
    let max_lag = rows.min(cols) / 2;
    let mut sums = vec![0.0; max_lag];
    let mut counts = vec![0usize; max_lag];
    let v = field.values();
    for dr in 0..rows as isize {
        for dc in -(cols as isize - 1)..cols as isize {
            if dr == 0 && dc <= 0 {
                continue;
            }
            let lag = ((dr * dr + dc * dc) as f64).sqrt().round() as usize;
            if lag == 0 || lag > max_lag {
                continue;
            }
            let mut s = 0.0;
            let mut n = 0;
            for r in 0..rows - dr as usize {
                for c in 0..cols as isize {
                    let c2 = c + dc;
                    if c2 < 0 || c2 >= cols as isize {
                        continue;
                    }
                    let d = v[(r, c as usize)] - v[(r + dr as usize, c2 as usize)];
                    s += d * d;
                    n += 1;
                }
            }
            sums[lag - 1] += s;
            counts[lag - 1] += n;
        }
    }
    sums.iter()
        .zip(&counts)
        .map(|(&s, &n)| {
            if n == 0 {
                f64::NAN
            } else {
                s / (2.0 * n as f64)
            }
        })
        .collect()
}

/// Lag-wise summary for one cluster.
#[derive(Debug, Clone, PartialEq)]
pub struct ClusterVariogram {
    pub cluster: usize,
    pub members: usize,
    pub lags: Vec<usize>,
    pub mean: Vec<f64>,
    /// `mean ± 1.96·sd/√members`; absent below two members.
    pub band: Option<Vec<(f64, f64)>>,
}

/// Mean semivariogram and normal-approximation 95% band per cluster
/// (labels 1..=K).
pub fn cluster_variograms(
    lat: &SubregionLattice,
    labels: &[usize],
) -> Result<Vec<ClusterVariogram>> {
    if labels.len() != lat.len() {
        return Err(Error::LengthMismatch {
            left: labels.len(),
            right: lat.len(),
        });
    }
    let per: Vec<Vec<f64>> = lat.subregions.par_iter().map(semivariogram).collect();
    let k = labels.iter().copied().max().unwrap_or(0);
    let max_lag = lat.side / 2;
    let mut out = Vec::with_capacity(k);
    for c in 1..=k {
        let members: Vec<&Vec<f64>> = labels
            .iter()
            .zip(&per)
            .filter(|(&l, _)| l == c)
            .map(|(_, g)| g)
            .collect();
        let n = members.len();
        if n == 0 {
            continue;
        }
        let mut mean = Vec::with_capacity(max_lag);
        let mut band = Vec::with_capacity(max_lag);
        for h in 0..max_lag {
            let mu = members.iter().map(|g| g[h]).sum::<f64>() / n as f64;
            mean.push(mu);
            if n >= 2 {
                let var = members.iter().map(|g| (g[h] - mu).powi(2)).sum::<f64>() / (n - 1) as f64;
                let half = 1.96 * var.sqrt() / (n as f64).sqrt();
                band.push((mu - half, mu + half));
            }
        }
        out.push(ClusterVariogram {
            cluster: c,
            members: n,
            lags: (1..=max_lag).collect(),
            mean,
            band: (n >= 2).then_some(band),
        });
    }
    Ok(out)
}
