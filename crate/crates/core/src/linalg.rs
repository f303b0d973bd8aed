//! Small dense linear-algebra helpers shared by the estimator and clustering.

use nalgebra::{DMatrix, DVector};

/// Thin SVD with singular values in descending order and a deterministic sign
/// convention: the largest-magnitude entry of every right singular vector is
/// positive.
#[derive(Debug, Clone)]
pub struct SortedSvd {
    pub u: DMatrix<f64>,
    pub values: Vec<f64>,
    pub v: DMatrix<f64>,
}

impl SortedSvd {
    pub fn new(m: &DMatrix<f64>) -> Self {
        let svd = m.clone().svd(true, true);
        let u = svd.u.expect("requested U");
        let v = svd.v_t.expect("requested Vt").transpose();
        let s = svd.singular_values;
        let mut order: Vec<usize> = (0..s.len()).collect();
        order.sort_by(|&a, &b| s[b].total_cmp(&s[a]).then(a.cmp(&b)));
        let mut uo = DMatrix::zeros(u.nrows(), order.len());
        let mut vo = DMatrix::zeros(v.nrows(), order.len());
        let mut values = Vec::with_capacity(order.len());
        for (slot, &k) in order.iter().enumerate() {
            let mut uc = u.column(k).into_owned();
            let mut vc = v.column(k).into_owned();
            if flip_sign(&vc) {
                uc.neg_mut();
                vc.neg_mut();
            }
            uo.set_column(slot, &uc);
            vo.set_column(slot, &vc);
            values.push(s[k]);
        }
        Self {
            u: uo,
            values,
            v: vo,
        }
    }

    /// Keeps the leading `k` triplets.
    pub fn truncate(mut self, k: usize) -> Self {
        let k = k.min(self.values.len());
        self.u = self.u.columns(0, k).into_owned();
        self.v = self.v.columns(0, k).into_owned();
        self.values.truncate(k);
        self
    }
}

fn flip_sign(v: &DVector<f64>) -> bool {
    let mut best = 0.0_f64;
    let mut sign_negative = false;
    for &x in v.iter() {
        if x.abs() > best * (1.0 + 1e-12) {
            best = x.abs();
            sign_negative = x < 0.0;
        }
    }
    sign_negative
}

/// SVD of the rank-≤K product `left · rightᵀ` (n×K times K×m) without
/// forming the n×m matrix.
pub fn product_svd(left: &DMatrix<f64>, right: &DMatrix<f64>) -> SortedSvd {
    let ql = left.clone().qr();
    let qr = right.clone().qr();
    let core = ql.r() * qr.r().transpose();
    let small = SortedSvd::new(&core);
    let u = ql.q() * &small.u;
    let v = qr.q() * &small.v;
    // re-apply the sign convention on the full right vectors
    let mut out = SortedSvd {
        u,
        values: small.values,
        v,
    };
    for k in 0..out.values.len() {
        let vc = out.v.column(k).into_owned();
        if flip_sign(&vc) {
            out.v.column_mut(k).neg_mut();
            out.u.column_mut(k).neg_mut();
        }
    }
    out
}

/// Solves the symmetric system `h x = g`. Falls back to a ridge of
/// `1e-8 · mean(diag)` (growing tenfold) when `h` is not positive definite;
/// the flag reports whether the ridge was needed.
pub fn solve_spd(h: &DMatrix<f64>, g: &DVector<f64>) -> Option<(DVector<f64>, bool)> {
    if let Some(ch) = h.clone().cholesky() {
        return Some((ch.solve(g), false));
    }
    let n = h.nrows();
    let mean_diag = (h.trace() / n as f64).abs();
    let mut ridge = 1e-8 * if mean_diag > 0.0 { mean_diag } else { 1.0 };
    for _ in 0..12 {
        let mut repaired = h.clone();
        for i in 0..n {
            repaired[(i, i)] += ridge;
        }
        if let Some(ch) = repaired.cholesky() {
            return Some((ch.solve(g), true));
        }
        ridge *= 10.0;
    }
    None
}

/// `Σ h/(h+λ)` over the (clamped non-negative) eigenvalues of a symmetric
/// matrix: `tr((H + λI)⁻¹ H)`. Exactly the dimension when `λ == 0`.
pub fn shrinkage_trace(h: &DMatrix<f64>, lambda: f64) -> f64 {
    if lambda == 0.0 {
        return h.nrows() as f64;
    }
    h.clone()
        .symmetric_eigenvalues()
        .iter()
        .map(|&e| {
            let e = e.max(0.0);
            e / (e + lambda)
        })
        .sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random(rows: usize, cols: usize, seed: u64) -> DMatrix<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        DMatrix::from_fn(rows, cols, |_, _| rng.random_range(-1.0..1.0))
    }

    #[test]
    fn sorted_svd_reconstructs_and_orders() {
        let m = random(9, 5, 1);
        let s = SortedSvd::new(&m);
        assert!(s.values.windows(2).all(|w| w[0] >= w[1]));
        let rebuilt =
            &s.u * DMatrix::from_diagonal(&DVector::from_vec(s.values.clone())) * s.v.transpose();
        assert!((rebuilt - m).amax() < 1e-12);
    }

    #[test]
    fn product_svd_matches_dense() {
        let l = random(40, 3, 2);
        let r = random(12, 3, 3);
        let p = product_svd(&l, &r);
        let d = SortedSvd::new(&(&l * r.transpose())).truncate(3);
        for k in 0..3 {
            assert!((p.values[k] - d.values[k]).abs() < 1e-10);
            assert!((p.v.column(k) - d.v.column(k)).amax() < 1e-8);
        }
    }

    #[test]
    fn ridge_repair_on_singular() {
        let h = DMatrix::zeros(3, 3);
        let g = DVector::from_element(3, 1.0);
        let (x, repaired) = solve_spd(&h, &g).unwrap();
        assert!(repaired);
        assert!(x.iter().all(|v| v.is_finite()));
    }

    #[test]
    fn shrinkage_trace_limits() {
        let a = random(4, 4, 5);
        let h = &a * a.transpose();
        assert_eq!(shrinkage_trace(&h, 0.0), 4.0);
        assert!(shrinkage_trace(&h, 1e12) < 1e-9);
        let direct = ((&h + DMatrix::identity(4, 4) * 0.7).try_inverse().unwrap() * &h).trace();
        assert!((shrinkage_trace(&h, 0.7) - direct).abs() < 1e-10);
    }
}
