//! Ward clustering of subregions, cluster-count selection and per-cluster
//! variogram diagnostics.

mod features;
mod output;
mod select;
mod variogram;
mod ward;

use nalgebra::DMatrix;

pub use features::{
    competitor_features, feature_matrix, gcv_score, kernel_smoother, spb_features, spk_bandwidths,
    spk_features, spk_smooth, FeatureKind, SPK_GRID,
};
pub use output::{curves_csv, label_map_pgm, labels_csv, parse_labels_csv, variograms_csv};
pub use select::{
    calinski_harabasz, calinski_harabasz_labels, ch_curve_from, second_differences, select_k_ch,
    select_k_elbow, wss_curve, wss_curve_from, KSelect, DEFAULT_K_MAX,
};
pub use variogram::{cluster_variograms, semivariogram, ClusterVariogram};
pub use ward::{total_scatter, ward, within_scatter, Dendrogram, Merge};

use crate::basis::BasisSystem;
use crate::error::{Error, Result};
use crate::estimator::ModelFit;
use crate::spectrum::{smoothed_log_periodogram, PeriodogramSet};

#[derive(Debug, Clone, PartialEq)]
pub struct ClusterResult {
    /// Cluster per subregion, 1..=k, numbered by first appearance.
    pub labels: Vec<usize>,
    pub merges: Vec<Merge>,
    pub k: usize,
    /// WSS(k) of the selection matrix for k = 1..=k_max.
    pub wss_curve: Vec<f64>,
    /// ch(k) of the selection matrix for k = 1..=k_max.
    pub ch_curve: Vec<Option<f64>>,
    pub input_kind: FeatureKind,
    /// How k was chosen; `None` when it was given.
    pub selected_by: Option<KSelect>,
}

/// Ward clustering of feature rows cut at `k`.
pub fn ward_cluster(features: &DMatrix<f64>, k: usize, kind: FeatureKind) -> Result<ClusterResult> {
    let tree = ward(features)?;
    let labels = tree.cut(k)?;
    Ok(ClusterResult {
        labels,
        merges: tree.merges,
        k,
        wss_curve: Vec::new(),
        ch_curve: Vec::new(),
        input_kind: kind,
        selected_by: None,
    })
}

/// Inputs shared by every feature kind.
#[derive(Debug, Clone, Copy)]
pub struct PipelineInput<'a> {
    pub periodograms: &'a PeriodogramSet,
    pub basis: &'a BasisSystem,
    pub fit: Option<&'a ModelFit>,
    /// Rank of the separate-fit scores; defaults to the fit's K.
    pub rank: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PipelineOptions {
    pub kind: FeatureKind,
    /// Cluster count; selected from the curves when absent.
    pub k: Option<usize>,
    pub select: KSelect,
    /// Largest k on the curves; `min(DEFAULT_K_MAX, m)` when absent.
    pub k_max: Option<usize>,
}

impl Default for PipelineOptions {
    fn default() -> Self {
        Self {
            kind: FeatureKind::WeightedScores,
            k: None,
            select: KSelect::Elbow,
            k_max: None,
        }
    }
}

/// Subregion rows of the smoothed log-periodograms (m×n), the matrix the
/// cluster count is chosen on.
pub fn selection_matrix(p: &PeriodogramSet, basis: &BasisSystem) -> Result<DMatrix<f64>> {
    Ok(smoothed_log_periodogram(p, basis)?.transpose())
}

/// Curves over k = 1..=k_max for the selection matrix, and the k each rule
/// picks.
pub fn selection_curves(
    selection: &DMatrix<f64>,
    k_max: usize,
) -> Result<(Vec<f64>, Vec<Option<f64>>)> {
    let tree = ward(selection)?;
    Ok((
        wss_curve_from(selection, &tree, k_max)?,
        ch_curve_from(selection, &tree, k_max)?,
    ))
}

/// Builds the features, chooses k if needed, and runs Ward.
pub fn cluster_pipeline(input: &PipelineInput, opts: &PipelineOptions) -> Result<ClusterResult> {
    let p = input.periodograms;
    let m = p.m();
    let k_max = opts.k_max.unwrap_or(DEFAULT_K_MAX.min(m));
    let (wss, ch) = selection_curves(&selection_matrix(p, input.basis)?, k_max)?;
    let (k, selected_by) = match opts.k {
        Some(k) => (k, None),
        None => match opts.select {
            KSelect::Elbow => (select_k_elbow(&wss)?, Some(KSelect::Elbow)),
            KSelect::CalinskiHarabasz => (select_k_ch(&ch)?, Some(KSelect::CalinskiHarabasz)),
        },
    };
    if k == 0 || k > m {
        return Err(Error::InvalidParameter(format!(
            "k = {k} must lie in 1..={m}"
        )));
    }
    let rank = input.rank.or(input.fit.map(|f| f.k)).unwrap_or(k.min(m));
    let features = feature_matrix(opts.kind, p, input.basis, input.fit, rank)?;
    let mut result = ward_cluster(&features, k, opts.kind)?;
    result.wss_curve = wss;
    result.ch_curve = ch;
    result.selected_by = selected_by;
    Ok(result)
}
