//! Ward agglomeration (Ward.D2: Lance–Williams on squared Euclidean
//! distances, square-root heights).

use nalgebra::DMatrix;

use crate::error::{Error, Result};

/// One agglomeration step. Ids below m are observations; step s creates
/// id m + s.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Merge {
    pub a: usize,
    pub b: usize,
    pub height: f64,
    pub size: usize,
}

/// Full merge sequence over the rows of a feature matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Dendrogram {
    pub m: usize,
    pub merges: Vec<Merge>,
}

/// Builds the complete Ward tree. Among equal smallest distances the pair
/// with the smallest (lower, upper) slot indices merges first.
pub fn ward(features: &DMatrix<f64>) -> Result<Dendrogram> {
    let m = features.nrows();
    if m == 0 {
        return Err(Error::Shape("no observations to cluster".into()));
    }
    if features.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("cluster features".into()));
    }
    let mut d2 = DMatrix::zeros(m, m);
    for i in 0..m {
        for j in i + 1..m {
            let v = (features.row(i) - features.row(j)).norm_squared();
            d2[(i, j)] = v;
            d2[(j, i)] = v;
        }
    }
    // slot i holds cluster id ids[i] while active
    let mut ids: Vec<usize> = (0..m).collect();
    let mut sizes = vec![1usize; m];
    let mut active = vec![true; m];
    let mut merges = Vec::with_capacity(m.saturating_sub(1));

    for step in 0..m.saturating_sub(1) {
        let mut best = (f64::INFINITY, 0, 0);
        for i in 0..m {
            if !active[i] {
                continue;
            }
            for j in i + 1..m {
                if active[j] && d2[(i, j)] < best.0 {
                    best = (d2[(i, j)], i, j);
                }
            }
        }
        let (dij, i, j) = best;
        let (ni, nj) = (sizes[i] as f64, sizes[j] as f64);
        for k in 0..m {
            if !active[k] || k == i || k == j {
                continue;
            }
            let nk = sizes[k] as f64;
            let v = ((ni + nk) * d2[(i, k)] + (nj + nk) * d2[(j, k)] - nk * dij) / (ni + nj + nk);
            d2[(i, k)] = v;
            d2[(k, i)] = v;
        }
        merges.push(Merge {
            a: ids[i].min(ids[j]),
            b: ids[i].max(ids[j]),
            height: dij.max(0.0).sqrt(),
            size: sizes[i] + sizes[j],
        });
        sizes[i] += sizes[j];
        ids[i] = m + step;
        active[j] = false;
    }
    Ok(Dendrogram { m, merges })
}

impl Dendrogram {
    /// Labels 1..=k numbered by first appearance.
    pub fn cut(&self, k: usize) -> Result<Vec<usize>> {
        if k == 0 || k > self.m {
            return Err(Error::InvalidParameter(format!(
                "cannot cut {} observations into {k} clusters",
                self.m
            )));
        }
        let total = self.m + self.merges.len();
        let mut parent: Vec<usize> = (0..total).collect();
        for (s, mg) in self.merges.iter().take(self.m - k).enumerate() {
            parent[mg.a] = self.m + s;
            parent[mg.b] = self.m + s;
        }
        let root = |mut x: usize| {
            while parent[x] != x {
                x = parent[x];
            }
            x
        };
        let mut seen: Vec<(usize, usize)> = Vec::new();
        Ok((0..self.m)
            .map(|i| {
                let r = root(i);
                match seen.iter().find(|(id, _)| *id == r) {
                    Some(&(_, l)) => l,
                    None => {
                        let l = seen.len() + 1;
                        seen.push((r, l));
                        l
                    }
                }
            })
            .collect())
    }
}

/// Σ over clusters of squared distances to the cluster mean.
pub fn within_scatter(features: &DMatrix<f64>, labels: &[usize]) -> f64 {
    let k = labels.iter().copied().max().unwrap_or(0);
    let d = features.ncols();
    let mut sums = DMatrix::zeros(k + 1, d);
    let mut counts = vec![0usize; k + 1];
    for (i, &l) in labels.iter().enumerate() {
        counts[l] += 1;
        let mut row = sums.row_mut(l);
        row += features.row(i);
    }
    labels
        .iter()
        .enumerate()
        .map(|(i, &l)| (features.row(i) - sums.row(l) / counts[l] as f64).norm_squared())
        .sum()
}

/// Σ of squared distances to the grand mean.
pub fn total_scatter(features: &DMatrix<f64>) -> f64 {
    within_scatter(features, &vec![1; features.nrows()])
}
