//! Gridded fields, their partition into square subregions, and the rook
//! adjacency between subregions.
//!
//! Subregions are always indexed row-major from the top-left of the parent
//! field; every downstream matrix (periodograms, scores, labels) uses the same
//! order.

use nalgebra::DMatrix;

use crate::error::{Error, Result};

/// Smallest subregion side accepted by [`partition`].
pub const MIN_SIDE: usize = 4;

/// A real-valued raster on a regular lattice.
#[derive(Debug, Clone, PartialEq)]
pub struct GridField {
    values: DMatrix<f64>,
    /// (row, col) offset of this field inside its parent, in cells.
    pub origin: (usize, usize),
    pub cell_size: Option<f64>,
}

impl GridField {
    /// Wraps a matrix, checking it is at least 2×2 and finite.
    pub fn new(values: DMatrix<f64>) -> Result<Self> {
        if values.nrows() < 2 || values.ncols() < 2 {
            return Err(Error::Shape(format!(
                "field must be at least 2x2, got {}x{}",
                values.nrows(),
                values.ncols()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("field values".into()));
        }
        Ok(Self {
            values,
            origin: (0, 0),
            cell_size: None,
        })
    }

    /// Builds a field from row-major data.
    pub fn from_row_major(rows: usize, cols: usize, data: &[f64]) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::LengthMismatch {
                left: rows * cols,
                right: data.len(),
            });
        }
        Self::new(DMatrix::from_row_slice(rows, cols, data))
    }

    pub fn with_origin(mut self, origin: (usize, usize)) -> Self {
        self.origin = origin;
        self
    }

    pub fn values(&self) -> &DMatrix<f64> {
        &self.values
    }

    pub fn nrows(&self) -> usize {
        self.values.nrows()
    }

    pub fn ncols(&self) -> usize {
        self.values.ncols()
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn is_square(&self) -> bool {
        self.nrows() == self.ncols()
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.values[(row, col)]
    }

    /// Values in row-major order.
    pub fn to_row_major(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.len());
        for r in 0..self.nrows() {
            for c in 0..self.ncols() {
                out.push(self.values[(r, c)]);
            }
        }
        out
    }

    pub fn mean(&self) -> f64 {
        self.values.sum() / self.len() as f64
    }
}

/// Subtracts the field mean from every cell.
pub fn demean(field: &GridField) -> GridField {
    let mean = field.mean();
    GridField {
        values: field.values.map(|v| v - mean),
        origin: field.origin,
        cell_size: field.cell_size,
    }
}

/// An r×c lattice of equally sized square subregions.
#[derive(Debug, Clone)]
pub struct SubregionLattice {
    pub rows: usize,
    pub cols: usize,
    pub side: usize,
    pub subregions: Vec<GridField>,
}

impl SubregionLattice {
    /// Builds a lattice directly from subregions listed in row-major order.
    pub fn from_subregions(rows: usize, cols: usize, subregions: Vec<GridField>) -> Result<Self> {
        if subregions.len() != rows * cols {
            return Err(Error::LengthMismatch {
                left: rows * cols,
                right: subregions.len(),
            });
        }
        let side = subregions
            .first()
            .map(|s| s.nrows())
            .ok_or_else(|| Error::Shape("empty lattice".into()))?;
        let mut placed = Vec::with_capacity(subregions.len());
        for (i, sub) in subregions.into_iter().enumerate() {
            if sub.nrows() != side || sub.ncols() != side {
                return Err(Error::Shape(format!(
                    "subregion {i} is {}x{}, expected {side}x{side}",
                    sub.nrows(),
                    sub.ncols()
                )));
            }
            let origin = ((i / cols) * side, (i % cols) * side);
            placed.push(sub.with_origin(origin));
        }
        Ok(Self {
            rows,
            cols,
            side,
            subregions: placed,
        })
    }

    /// Number of subregions, m.
    pub fn len(&self) -> usize {
        self.subregions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.subregions.is_empty()
    }

    /// Cells per subregion, n.
    pub fn cells(&self) -> usize {
        self.side * self.side
    }

    /// Lattice (row, col) of subregion `i`.
    pub fn position(&self, i: usize) -> (usize, usize) {
        (i / self.cols, i % self.cols)
    }

    /// Stitches the subregions back into the parent field.
    pub fn reassemble(&self) -> GridField {
        let mut values = DMatrix::zeros(self.rows * self.side, self.cols * self.side);
        for (i, sub) in self.subregions.iter().enumerate() {
            let (r0, c0) = ((i / self.cols) * self.side, (i % self.cols) * self.side);
            values
                .view_mut((r0, c0), (self.side, self.side))
                .copy_from(sub.values());
        }
        GridField {
            values,
            origin: (0, 0),
            cell_size: self.subregions.first().and_then(|s| s.cell_size),
        }
    }

    pub fn neighbor_graph(&self) -> NeighborGraph {
        NeighborGraph::rook(self.rows, self.cols).expect("lattice has at least one cell")
    }
}

/// Tiles `field` into square subregions of the given side.
pub fn partition(field: &GridField, side: usize) -> Result<SubregionLattice> {
    if side < MIN_SIDE {
        return Err(Error::SideTooSmall {
            side,
            min: MIN_SIDE,
        });
    }
    if !field.nrows().is_multiple_of(side) {
        return Err(Error::NotDivisible {
            axis: "rows",
            len: field.nrows(),
            side,
        });
    }
    if !field.ncols().is_multiple_of(side) {
        return Err(Error::NotDivisible {
            axis: "columns",
            len: field.ncols(),
            side,
        });
    }
    let rows = field.nrows() / side;
    let cols = field.ncols() / side;
    let subregions = (0..rows * cols)
        .map(|i| {
            let origin = ((i / cols) * side, (i % cols) * side);
            GridField {
                values: field.values.view(origin, (side, side)).into_owned(),
                origin,
                cell_size: field.cell_size,
            }
        })
        .collect();
    Ok(SubregionLattice {
        rows,
        cols,
        side,
        subregions,
    })
}

/// Rook (up/down/left/right) adjacency on an r×c lattice.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NeighborGraph {
    pub rows: usize,
    pub cols: usize,
    neighbors: Vec<Vec<usize>>,
}

impl NeighborGraph {
    pub fn rook(rows: usize, cols: usize) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::Shape(format!(
                "neighbor lattice must be at least 1x1, got {rows}x{cols}"
            )));
        }
        let mut neighbors = Vec::with_capacity(rows * cols);
        for r in 0..rows {
            for c in 0..cols {
                let mut adj = Vec::with_capacity(4);
                if r > 0 {
                    adj.push((r - 1) * cols + c);
                }
                if c > 0 {
                    adj.push(r * cols + c - 1);
                }
                if c + 1 < cols {
                    adj.push(r * cols + c + 1);
                }
                if r + 1 < rows {
                    adj.push((r + 1) * cols + c);
                }
                neighbors.push(adj);
            }
        }
        Ok(Self {
            rows,
            cols,
            neighbors,
        })
    }

    pub fn len(&self) -> usize {
        self.neighbors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.neighbors.is_empty()
    }

    /// Neighbor indices of `i`, ascending.
    pub fn neighbors(&self, i: usize) -> &[usize] {
        &self.neighbors[i]
    }

    pub fn size(&self, i: usize) -> usize {
        self.neighbors[i].len()
    }

    pub fn sizes(&self) -> Vec<usize> {
        self.neighbors.iter().map(Vec::len).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ramp(rows: usize, cols: usize) -> GridField {
        let data: Vec<f64> = (0..rows * cols).map(|v| v as f64).collect();
        GridField::from_row_major(rows, cols, &data).unwrap()
    }

    #[test]
    fn soil_sized_field_gives_1120_subregions() {
        let field = GridField::new(DMatrix::zeros(1600, 1120)).unwrap();
        let lat = partition(&field, 40).unwrap();
        assert_eq!((lat.rows, lat.cols), (40, 28));
        assert_eq!(lat.len(), 1120);
        assert_eq!(lat.cells(), 1600);
    }

    #[test]
    fn partition_covers_expected_cells() {
        let field = ramp(80, 80);
        let lat = partition(&field, 40).unwrap();
        assert_eq!(lat.len(), 4);
        assert_eq!(lat.subregions[1].origin, (0, 40));
        assert_eq!(lat.subregions[2].origin, (40, 0));
        assert_eq!(lat.subregions[3].get(0, 0), field.get(40, 40));
        assert_eq!(lat.reassemble().values(), field.values());
    }

    #[test]
    fn partition_rejects_bad_dimensions() {
        let err = partition(&ramp(100, 80), 40).unwrap_err();
        assert!(matches!(err, Error::NotDivisible { axis: "rows", .. }));
        let err = partition(&ramp(80, 100), 40).unwrap_err();
        assert!(matches!(
            err,
            Error::NotDivisible {
                axis: "columns",
                ..
            }
        ));
        let err = partition(&ramp(9, 9), 3).unwrap_err();
        assert!(matches!(err, Error::SideTooSmall { .. }));
    }

    #[test]
    fn field_rejects_nan_and_tiny_shapes() {
        let mut m = DMatrix::zeros(3, 3);
        m[(1, 1)] = f64::NAN;
        assert!(GridField::new(m).is_err());
        assert!(GridField::new(DMatrix::zeros(1, 5)).is_err());
    }

    #[test]
    fn two_by_two_lattice_is_all_corners() {
        let g = NeighborGraph::rook(2, 2).unwrap();
        assert_eq!(g.sizes(), vec![2, 2, 2, 2]);
    }

    #[test]
    fn strip_neighbors() {
        let g = NeighborGraph::rook(1, 3).unwrap();
        assert_eq!(g.neighbors(0), &[1]);
        assert_eq!(g.neighbors(1), &[0, 2]);
        assert_eq!(g.neighbors(2), &[1]);
    }

    #[test]
    fn twenty_by_fifty_degree_histogram() {
        let (r, c) = (20, 50);
        let g = NeighborGraph::rook(r, c).unwrap();
        // oracle: count undirected edges by brute force over all cell pairs
        let mut edges = 0;
        for a in 0..r * c {
            for b in a + 1..r * c {
                let (ra, ca) = (a / c, a % c);
                let (rb, cb) = (b / c, b % c);
                if ra.abs_diff(rb) + ca.abs_diff(cb) == 1 {
                    edges += 1;
                }
            }
        }
        let total: usize = g.sizes().iter().sum();
        assert_eq!(total, 2 * edges);
        assert_eq!(total, 2 * (2 * r * c - r - c));
        let count = |k| g.sizes().iter().filter(|&&s| s == k).count();
        assert_eq!(count(2), 4);
        assert_eq!(count(3), 2 * (r - 2) + 2 * (c - 2));
        assert_eq!(count(4), (r - 2) * (c - 2));
    }

    #[test]
    fn graph_is_symmetric_and_irreflexive() {
        let g = NeighborGraph::rook(4, 7).unwrap();
        for i in 0..g.len() {
            assert!(!g.neighbors(i).contains(&i));
            for &j in g.neighbors(i) {
                assert!(g.neighbors(j).contains(&i));
            }
        }
        assert!(NeighborGraph::rook(0, 3).is_err());
    }

    #[test]
    fn demean_cases() {
        let c = GridField::new(DMatrix::from_element(4, 4, 3.5)).unwrap();
        assert!(demean(&c).values().iter().all(|&v| v == 0.0));

        let shifted =
            GridField::new(DMatrix::from_fn(4, 4, |r, c| 5.0 + r as f64 - c as f64)).unwrap();
        assert!((shifted.mean() - 5.0).abs() < 1e-12);
        let d = demean(&shifted);
        for r in 0..4 {
            for c in 0..4 {
                assert!((d.get(r, c) - (shifted.get(r, c) - 5.0)).abs() < 1e-12);
            }
        }
        let again = demean(&d);
        assert!((again.values() - d.values()).amax() < 1e-12);
    }
}
