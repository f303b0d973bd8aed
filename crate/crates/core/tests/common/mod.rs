#![allow(dead_code)]

use sdfclust::basis::{BasisSystem, DEFAULT_MARGINAL};
use sdfclust::cluster::{ward_cluster, FeatureKind};
use sdfclust::estimator::{fit, FitOptions, ModelFit, Problem};
use sdfclust::lattice::{NeighborGraph, SubregionLattice};
use sdfclust::metrics::{adjusted_rand, jaccard, Partition};
use sdfclust::simulate::Scenario;
use sdfclust::spectrum::{periodogram_set, PeriodogramSet};

pub struct Prepared {
    pub lattice: SubregionLattice,
    pub periodograms: PeriodogramSet,
    pub basis: BasisSystem,
    pub graph: NeighborGraph,
}

impl Prepared {
    pub fn new(scenario: &Scenario) -> Self {
        let lattice = scenario.sample().expect("sample");
        let periodograms = periodogram_set(&lattice).expect("periodograms");
        let basis = BasisSystem::new(scenario.side, DEFAULT_MARGINAL).expect("basis");
        let graph = lattice.neighbor_graph();
        Self {
            lattice,
            periodograms,
            basis,
            graph,
        }
    }

    pub fn problem(&self) -> Problem<'_> {
        Problem::new(&self.periodograms, &self.basis, &self.graph).expect("problem")
    }

    pub fn fit(&self, k: usize, spatial: bool) -> ModelFit {
        fit(&self.problem(), k, &FitOptions::with_spatial(spatial)).expect("fit")
    }

    pub fn labels(&self, kind: FeatureKind, fit: Option<&ModelFit>, k: usize) -> Vec<usize> {
        let f = sdfclust::cluster::feature_matrix(kind, &self.periodograms, &self.basis, fit, k)
            .expect("features");
        ward_cluster(&f, k, kind).expect("ward").labels
    }
}

pub fn ari(a: &[usize], b: &[usize]) -> f64 {
    adjusted_rand(&Partition::new(a.to_vec()), &Partition::new(b.to_vec())).unwrap()
}

pub fn jac(a: &[usize], b: &[usize]) -> f64 {
    jaccard(&Partition::new(a.to_vec()), &Partition::new(b.to_vec())).unwrap()
}

pub fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}
