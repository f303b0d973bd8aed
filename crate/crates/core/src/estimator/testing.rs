use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::objective::Problem;
use crate::basis::BasisSystem;
use crate::lattice::NeighborGraph;
use crate::spectrum::PeriodogramSet;

pub(crate) struct SmallInstance {
    pub periodograms: PeriodogramSet,
    pub basis: BasisSystem,
    pub graph: NeighborGraph,
    pub theta: DMatrix<f64>,
    pub a: DMatrix<f64>,
}

impl SmallInstance {
    pub fn problem(&self) -> Problem<'_> {
        Problem::new(&self.periodograms, &self.basis, &self.graph).unwrap()
    }
}

/// Random exponential-looking ordinates around a smooth spectrum, with small
/// random (Θ, A).
pub(crate) fn small_instance(
    m: usize,
    side: usize,
    l: usize,
    k: usize,
    seed: u64,
) -> SmallInstance {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let basis = BasisSystem::new(side, l).unwrap();
    let n = side * side;
    let raw: Vec<Vec<f64>> = (0..m)
        .map(|i| {
            (0..n)
                .map(|j| {
                    let level = 1.0 + 0.3 * i as f64 + 0.5 * (j as f64 / n as f64);
                    let e: f64 = rng.random_range(1e-3..1.0);
                    -level * e.ln()
                })
                .collect()
        })
        .collect();
    let periodograms = PeriodogramSet::from_raw(side, &raw).unwrap();
    let rows = (1..=m)
        .rev()
        .find(|r| m.is_multiple_of(*r) && r * r <= m)
        .unwrap_or(1);
    let graph = NeighborGraph::rook(rows, m / rows).unwrap();
    let big_l = l * l;
    let theta = DMatrix::from_fn(big_l, k, |_, _| rng.random_range(-0.5..0.5));
    let a = DMatrix::from_fn(m, k, |_, _| rng.random_range(-1.0..1.0));
    SmallInstance {
        periodograms,
        basis,
        graph,
        theta,
        a,
    }
}
