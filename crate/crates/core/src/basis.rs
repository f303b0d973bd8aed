//! Tensor-product cubic B-spline basis on the frequency grid, with the
//! second-order difference roughness penalty.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::spectrum::FrequencyGrid;

/// Cubic splines.
pub const ORDER: usize = 4;
/// Default number of marginal basis functions.
pub const DEFAULT_MARGINAL: usize = 10;

/// Clamped knot vector with `l - 4` equally spaced interior knots on
/// `[lo, hi]`.
pub fn clamped_knots(l: usize, lo: f64, hi: f64) -> Vec<f64> {
    let interior = l - ORDER;
    let mut knots = vec![lo; ORDER];
    for k in 1..=interior {
        knots.push(lo + (hi - lo) * k as f64 / (interior + 1) as f64);
    }
    knots.extend(std::iter::repeat_n(hi, ORDER));
    knots
}

/// Evaluates the `l` cubic B-splines on `[lo, hi]` at every grid point.
pub fn marginal_bspline(l: usize, grid: &[f64], lo: f64, hi: f64) -> Result<DMatrix<f64>> {
    if l < ORDER {
        return Err(Error::InvalidParameter(format!(
            "need at least {ORDER} marginal basis functions, got {l}"
        )));
    }
    if hi <= lo {
        return Err(Error::InvalidParameter(format!(
            "empty knot range [{lo}, {hi}]"
        )));
    }
    let knots = clamped_knots(l, lo, hi);
    let tol = 1e-12 * (hi - lo);
    let mut out = DMatrix::zeros(grid.len(), l);
    for (row, &x) in grid.iter().enumerate() {
        if x < lo - tol || x > hi + tol {
            return Err(Error::InvalidParameter(format!(
                "grid point {x} outside knot span [{lo}, {hi}]"
            )));
        }
        let x = x.clamp(lo, hi);
        let span = find_span(&knots, l, x);
        let vals = nonzero_basis(&knots, span, x);
        for (k, v) in vals.iter().enumerate() {
            out[(row, span + k + 1 - ORDER)] = *v;
        }
    }
    Ok(out)
}

/// Index `mu` with `knots[mu] <= x < knots[mu+1]`, using the last nonempty
/// interval for the right endpoint.
fn find_span(knots: &[f64], l: usize, x: f64) -> usize {
    if x >= knots[l] {
        return l - 1;
    }
    let mut mu = ORDER - 1;
    while mu + 1 < l && knots[mu + 1] <= x {
        mu += 1;
    }
    mu
}

/// Cox-de Boor triangle for the four splines that are nonzero on `span`.
fn nonzero_basis(knots: &[f64], span: usize, x: f64) -> [f64; ORDER] {
    let degree = ORDER - 1;
    let mut n = [0.0; ORDER];
    let mut left = [0.0; ORDER];
    let mut right = [0.0; ORDER];
    n[0] = 1.0;
    for j in 1..=degree {
        left[j] = x - knots[span + 1 - j];
        right[j] = knots[span + j] - x;
        let mut saved = 0.0;
        for r in 0..j {
            let denom = right[r + 1] + left[j - r];
            let temp = if denom == 0.0 { 0.0 } else { n[r] / denom };
            n[r] = saved + right[r + 1] * temp;
            saved = left[j - r] * temp;
        }
        n[j] = saved;
    }
    n
}

/// Kronecker product `m ⊗ m`: row `(j1, j2)` maps to `j1 * rows + j2`,
/// column `(a, b)` to `a * cols + b`.
pub fn tensor_design(marginal: &DMatrix<f64>) -> DMatrix<f64> {
    marginal.kronecker(marginal)
}

/// The `(l-2)×l` second-difference operator.
pub fn difference_matrix(l: usize) -> Result<DMatrix<f64>> {
    if l < 3 {
        return Err(Error::InvalidParameter(format!(
            "second differences need l >= 3, got {l}"
        )));
    }
    let mut d = DMatrix::zeros(l - 2, l);
    for r in 0..l - 2 {
        d[(r, r)] = 1.0;
        d[(r, r + 1)] = -2.0;
        d[(r, r + 2)] = 1.0;
    }
    Ok(d)
}

/// Returns `(L_l, r_l, R)` with `r_l = L_lᵀ L_l` and `R = I⊗r + r⊗I`.
pub fn second_difference_penalty(l: usize) -> Result<(DMatrix<f64>, DMatrix<f64>, DMatrix<f64>)> {
    let d = difference_matrix(l)?;
    let r = d.transpose() * &d;
    let eye = DMatrix::<f64>::identity(l, l);
    let big = eye.kronecker(&r) + r.kronecker(&eye);
    Ok((d, r, big))
}

/// Orthogonal change of coordinates that diagonalizes the roughness penalty
/// with its null space split off exactly.
#[derive(Debug, Clone)]
pub struct PenaltyFrame {
    /// L×L orthogonal; columns are the new coordinates.
    pub rotation: DMatrix<f64>,
    /// Diagonal of `rotationᵀ R rotation`; exactly zero on the null space.
    pub diag: Vec<f64>,
    /// Indices (into `diag`) of the null-space coordinates.
    pub null: Vec<usize>,
}

impl PenaltyFrame {
    fn new(l: usize, r: &DMatrix<f64>) -> Self {
        // null space of r: constants and linear trends
        let idx: Vec<f64> = (0..l).map(|a| a as f64 - (l as f64 - 1.0) / 2.0).collect();
        let ones = DVector::from_element(l, 1.0 / (l as f64).sqrt());
        let lin = DVector::from_vec(idx.clone()).normalize();

        let eig = r.clone().symmetric_eigen();
        let mut order: Vec<usize> = (0..l).collect();
        order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));

        let mut q = DMatrix::zeros(l, l);
        q.set_column(0, &ones);
        q.set_column(1, &lin);
        let mut d = vec![0.0; l];
        for (slot, &e) in order.iter().take(l - 2).enumerate() {
            let mut v = eig.eigenvectors.column(e).into_owned();
            v -= &ones * ones.dot(&v);
            v -= &lin * lin.dot(&v);
            let v = v.normalize();
            q.set_column(slot + 2, &v);
            d[slot + 2] = (v.transpose() * r * &v)[(0, 0)];
        }
        let rotation = q.kronecker(&q);
        let mut diag = Vec::with_capacity(l * l);
        let mut null = Vec::new();
        for a in 0..l {
            for b in 0..l {
                if a < 2 && b < 2 {
                    null.push(diag.len());
                }
                diag.push(d[a] + d[b]);
            }
        }
        Self {
            rotation,
            diag,
            null,
        }
    }
}

/// Design matrix, penalty and projection machinery for one subregion size.
#[derive(Debug, Clone)]
pub struct BasisSystem {
    /// Marginal basis count.
    pub l: usize,
    /// Subregion side.
    pub side: usize,
    pub knots: Vec<f64>,
    pub marginal: DMatrix<f64>,
    /// n×L design, `marginal ⊗ marginal`.
    pub design: DMatrix<f64>,
    /// L×L roughness penalty.
    pub penalty: DMatrix<f64>,
    pub frame: PenaltyFrame,
    sparse_rows: Vec<Vec<(usize, f64)>>,
    q: DMatrix<f64>,
    r_upper: DMatrix<f64>,
}

impl BasisSystem {
    /// Basis with `l` marginal splines on the frequency grid of a
    /// `side × side` subregion.
    pub fn new(side: usize, l: usize) -> Result<Self> {
        if side < 2 {
            return Err(Error::InvalidParameter(format!(
                "side must be >= 2, got {side}"
            )));
        }
        let grid = FrequencyGrid::marginal(side);
        let hi = 1.0 - 1.0 / side as f64;
        let marginal = marginal_bspline(l, &grid, 0.0, hi)?;

        let sv = marginal.clone().singular_values();
        let smax = sv.max();
        let rank = sv.iter().filter(|&&s| s > 1e-10 * smax).count();
        if rank < l {
            return Err(Error::RankDeficient {
                deficient: l * l - rank * rank,
                columns: l * l,
            });
        }

        let design = tensor_design(&marginal);
        let (_, r, penalty) = second_difference_penalty(l)?;
        let frame = PenaltyFrame::new(l, &r);
        let sparse_rows = design
            .row_iter()
            .map(|row| {
                row.iter()
                    .enumerate()
                    .filter(|(_, v)| **v != 0.0)
                    .map(|(c, v)| (c, *v))
                    .collect()
            })
            .collect();
        let qr = design.clone().qr();
        Ok(Self {
            l,
            side,
            knots: clamped_knots(l, 0.0, hi),
            marginal,
            design,
            penalty,
            frame,
            sparse_rows,
            q: qr.q(),
            r_upper: qr.r(),
        })
    }

    /// Number of frequencies, n.
    pub fn n(&self) -> usize {
        self.design.nrows()
    }

    /// Number of tensor basis functions, L.
    pub fn big_l(&self) -> usize {
        self.design.ncols()
    }

    /// Nonzero `(column, value)` entries of design row `j`.
    pub fn row(&self, j: usize) -> &[(usize, f64)] {
        &self.sparse_rows[j]
    }

    /// `B · m` for an L×K matrix.
    pub fn apply(&self, m: &DMatrix<f64>) -> DMatrix<f64> {
        let mut out = DMatrix::zeros(self.n(), m.ncols());
        for (j, row) in self.sparse_rows.iter().enumerate() {
            for k in 0..m.ncols() {
                out[(j, k)] = row.iter().map(|&(c, v)| v * m[(c, k)]).sum();
            }
        }
        out
    }

    /// `Bᵀ v` for a length-n vector.
    pub fn apply_transpose(&self, v: &[f64]) -> DVector<f64> {
        let mut out = DVector::zeros(self.big_l());
        for (j, row) in self.sparse_rows.iter().enumerate() {
            for &(c, b) in row {
                out[c] += b * v[j];
            }
        }
        out
    }

    /// `Bᵀ diag(w) B`.
    pub fn weighted_gram(&self, w: &[f64]) -> DMatrix<f64> {
        let big_l = self.big_l();
        let mut out = DMatrix::zeros(big_l, big_l);
        for (j, row) in self.sparse_rows.iter().enumerate() {
            let wj = w[j];
            if wj == 0.0 {
                continue;
            }
            for &(a, va) in row {
                let s = wj * va;
                for &(b, vb) in row {
                    out[(a, b)] += s * vb;
                }
            }
        }
        out
    }

    /// Orthogonal projection of the columns of `y` (n×m) onto span(B).
    pub fn project(&self, y: &DMatrix<f64>) -> DMatrix<f64> {
        &self.q * (self.q.transpose() * y)
    }

    /// Least-squares coefficients `(BᵀB)⁻¹Bᵀ y`.
    pub fn coefficients(&self, y: &DMatrix<f64>) -> DMatrix<f64> {
        self.from_orthonormal(&self.to_orthonormal(y))
    }

    /// Coordinates `Qᵀ y` of `y` in an orthonormal basis of span(B), where
    /// `B = Q R` is the thin QR factorization.
    pub fn to_orthonormal(&self, y: &DMatrix<f64>) -> DMatrix<f64> {
        self.q.transpose() * y
    }

    /// Maps orthonormal coordinates back to spline coefficients, `R⁻¹ c`.
    pub fn from_orthonormal(&self, c: &DMatrix<f64>) -> DMatrix<f64> {
        self.r_upper
            .solve_upper_triangular(c)
            .expect("design has full column rank")
    }

    /// Orthonormal coordinates of `B θ`, i.e. `R θ`.
    pub fn coefficient_coords(&self, theta: &DMatrix<f64>) -> DMatrix<f64> {
        &self.r_upper * theta
    }
}
