//! Two-dimensional periodograms on the Fourier frequency grid.

use nalgebra::DMatrix;
use rayon::prelude::*;
use rustfft::num_complex::Complex64;
use rustfft::FftPlanner;

use crate::basis::BasisSystem;
use crate::error::{Error, Result};
use crate::lattice::{demean, GridField, SubregionLattice};

/// Ordinates below this fraction of the global maximum are raised to it.
pub const FLOOR_RATIO: f64 = 1e-10;

/// Fourier frequencies `(j1/side, j2/side)` in row-major order (j1 outer).
#[derive(Debug, Clone, PartialEq)]
pub struct FrequencyGrid {
    pub side: usize,
    pub freqs: Vec<(f64, f64)>,
}

impl FrequencyGrid {
    pub fn new(side: usize) -> Self {
        let s = side as f64;
        let freqs = (0..side)
            .flat_map(|j1| (0..side).map(move |j2| (j1 as f64 / s, j2 as f64 / s)))
            .collect();
        Self { side, freqs }
    }

    /// Marginal frequencies `j/side`, j = 0..side.
    pub fn marginal(side: usize) -> Vec<f64> {
        (0..side).map(|j| j as f64 / side as f64).collect()
    }

    pub fn len(&self) -> usize {
        self.freqs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.freqs.is_empty()
    }
}

/// Raw 2D periodogram of a square field: `|DFT|^2 / n`, row-major over the
/// frequency grid. The input is used as given; callers demean first.
pub fn periodogram_2d(sub: &GridField) -> Result<Vec<f64>> {
    if !sub.is_square() {
        return Err(Error::Shape(format!(
            "periodogram needs a square field, got {}x{}",
            sub.nrows(),
            sub.ncols()
        )));
    }
    let side = sub.nrows();
    let n = (side * side) as f64;
    let mut planner = FftPlanner::<f64>::new();
    let fft = planner.plan_fft_forward(side);

    // row-major buffer; transform rows, then columns
    let mut buf: Vec<Complex64> = sub
        .to_row_major()
        .into_iter()
        .map(|v| Complex64::new(v, 0.0))
        .collect();
    for row in buf.chunks_exact_mut(side) {
        fft.process(row);
    }
    let mut column = vec![Complex64::new(0.0, 0.0); side];
    for c in 0..side {
        for r in 0..side {
            column[r] = buf[r * side + c];
        }
        fft.process(&mut column);
        for r in 0..side {
            buf[r * side + c] = column[r];
        }
    }
    Ok(buf.iter().map(|z| z.norm_sqr() / n).collect())
}

/// Periodograms of every subregion on the shared frequency grid, floored so
/// that logs are defined.
#[derive(Debug, Clone)]
pub struct PeriodogramSet {
    /// m×n, row i is subregion i.
    pub ordinates: DMatrix<f64>,
    pub floor: f64,
    pub side: usize,
}

impl PeriodogramSet {
    /// Applies the relative floor to raw per-subregion ordinates.
    pub fn from_raw(side: usize, raw: &[Vec<f64>]) -> Result<Self> {
        let n = side * side;
        if raw.is_empty() {
            return Err(Error::Shape("no subregions".into()));
        }
        if let Some(bad) = raw.iter().find(|r| r.len() != n) {
            return Err(Error::LengthMismatch {
                left: n,
                right: bad.len(),
            });
        }
        let max =
            raw.iter().flatten().fold(
                0.0_f64,
                |acc, &v| if v.is_finite() { acc.max(v) } else { f64::NAN },
            );
        if max.is_nan() {
            return Err(Error::NonFinite("periodogram".into()));
        }
        if max <= 0.0 {
            return Err(Error::DegenerateSpectrum);
        }
        let floor = FLOOR_RATIO * max;
        let ordinates = DMatrix::from_fn(raw.len(), n, |i, j| raw[i][j].max(floor));
        Ok(Self {
            ordinates,
            floor,
            side,
        })
    }

    /// Number of subregions.
    pub fn m(&self) -> usize {
        self.ordinates.nrows()
    }

    /// Number of frequencies.
    pub fn n(&self) -> usize {
        self.ordinates.ncols()
    }

    /// `log(I)^T`, n×m.
    pub fn log_transposed(&self) -> DMatrix<f64> {
        self.ordinates.transpose().map(f64::ln)
    }

    /// The subset of rows listed in `rows`, keeping the floor.
    pub fn select(&self, rows: &[usize]) -> Self {
        let ordinates = DMatrix::from_fn(rows.len(), self.n(), |i, j| self.ordinates[(rows[i], j)]);
        Self {
            ordinates,
            floor: self.floor,
            side: self.side,
        }
    }

    pub fn to_csv(&self) -> String {
        crate::raster::to_csv(&self.ordinates)
    }
}

/// Demeans each subregion and computes its periodogram.
pub fn periodogram_set(lat: &SubregionLattice) -> Result<PeriodogramSet> {
    let raw: Vec<Vec<f64>> = lat
        .subregions
        .par_iter()
        .map(|sub| periodogram_2d(&demean(sub)))
        .collect::<Result<_>>()?;
    PeriodogramSet::from_raw(lat.side, &raw)
}

/// Least-squares projection of every log-periodogram onto the span of the
/// tensor basis; n×m, column i is subregion i.
pub fn smoothed_log_periodogram(p: &PeriodogramSet, basis: &BasisSystem) -> Result<DMatrix<f64>> {
    if basis.n() != p.n() {
        return Err(Error::LengthMismatch {
            left: basis.n(),
            right: p.n(),
        });
    }
    Ok(basis.project(&p.log_transposed()))
}
