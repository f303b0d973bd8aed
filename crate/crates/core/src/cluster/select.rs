//! Choosing the number of clusters.

use std::fmt;
use std::str::FromStr;

use nalgebra::DMatrix;

use super::ward::{total_scatter, within_scatter, Dendrogram};
use crate::error::{Error, Result};

pub const DEFAULT_K_MAX: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KSelect {
    Elbow,
    CalinskiHarabasz,
}

impl FromStr for KSelect {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "elbow" => Ok(KSelect::Elbow),
            "ch" => Ok(KSelect::CalinskiHarabasz),
            other => Err(Error::UnknownKind {
                what: "k selection",
                name: other.to_string(),
            }),
        }
    }
}

impl fmt::Display for KSelect {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            KSelect::Elbow => "elbow",
            KSelect::CalinskiHarabasz => "ch",
        })
    }
}

/// `WSS(k)` for k = 1..=k_max from cuts of one tree; entry k−1 is WSS(k).
pub fn wss_curve_from(
    features: &DMatrix<f64>,
    tree: &Dendrogram,
    k_max: usize,
) -> Result<Vec<f64>> {
    check_k_max(features.nrows(), k_max)?;
    (1..=k_max)
        .map(|k| Ok(within_scatter(features, &tree.cut(k)?)))
        .collect()
}

pub fn wss_curve(features: &DMatrix<f64>, k_max: usize) -> Result<Vec<f64>> {
    let tree = super::ward::ward(features)?;
    wss_curve_from(features, &tree, k_max)
}

fn check_k_max(m: usize, k_max: usize) -> Result<()> {
    if k_max == 0 || k_max > m {
        return Err(Error::InvalidParameter(format!(
            "k_max = {k_max} must lie in 1..={m}"
        )));
    }
    Ok(())
}

/// Turning point of a non-increasing WSS curve: the k in 2..=k_max−1
/// maximizing the slope ratio `(WSS(k−1) − WSS(k)) / (WSS(k) − WSS(k+1))`,
/// the smallest such k on ties. A drop followed by a flat step scores
/// infinity; two flat steps score 1.
pub fn select_k_elbow(wss: &[f64]) -> Result<usize> {
    if wss.len() < 3 {
        return Err(Error::InvalidParameter(format!(
            "elbow needs at least 3 curve points, got {}",
            wss.len()
        )));
    }
    let scale = wss.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    let flat = 1e-12 * scale;
    let mut best = (f64::NEG_INFINITY, 2);
    for k in 2..wss.len() {
        let before = wss[k - 2] - wss[k - 1];
        let after = wss[k - 1] - wss[k];
        let ratio = match (before > flat, after > flat) {
            (_, true) => before.max(0.0) / after,
            (true, false) => f64::INFINITY,
            (false, false) => 1.0,
        };
        if ratio > best.0 {
            best = (ratio, k);
        }
    }
    Ok(best.1)
}

/// `WSS(k−1) − 2WSS(k) + WSS(k+1)` for k = 2..=k_max−1.
pub fn second_differences(wss: &[f64]) -> Vec<f64> {
    wss.windows(3).map(|w| w[0] - 2.0 * w[1] + w[2]).collect()
}

/// `ch(k) = (m − k) tr(W₁) / ((k − 1) tr(W₂))` with W₁ the between and W₂ the
/// within scatter of the given labels.
pub fn calinski_harabasz_labels(features: &DMatrix<f64>, labels: &[usize]) -> Result<f64> {
    let m = features.nrows();
    let k = labels.iter().copied().max().unwrap_or(0);
    if k < 2 || k >= m {
        return Err(Error::InvalidParameter(format!(
            "Calinski-Harabasz needs 2 <= k < m, got k = {k}, m = {m}"
        )));
    }
    let within = within_scatter(features, labels);
    if within <= 0.0 {
        return Err(Error::Degenerate(
            "within-cluster scatter is zero; Calinski-Harabasz is undefined".into(),
        ));
    }
    let between = total_scatter(features) - within;
    Ok((m - k) as f64 * between / ((k - 1) as f64 * within))
}

/// ch(k) for the Ward cut at k.
pub fn calinski_harabasz(features: &DMatrix<f64>, k: usize) -> Result<f64> {
    let tree = super::ward::ward(features)?;
    calinski_harabasz_labels(features, &tree.cut(k)?)
}

/// ch(k) for k = 1..=k_max; `None` where undefined (k = 1, k = m, or zero
/// within scatter).
pub fn ch_curve_from(
    features: &DMatrix<f64>,
    tree: &Dendrogram,
    k_max: usize,
) -> Result<Vec<Option<f64>>> {
    check_k_max(features.nrows(), k_max)?;
    (1..=k_max)
        .map(|k| {
            if k < 2 || k >= features.nrows() {
                return Ok(None);
            }
            Ok(calinski_harabasz_labels(features, &tree.cut(k)?).ok())
        })
        .collect()
}

/// argmax of a ch curve (entry k−1 is ch(k)); smallest k on ties.
pub fn select_k_ch(ch: &[Option<f64>]) -> Result<usize> {
    let mut best: Option<(f64, usize)> = None;
    for (idx, v) in ch.iter().enumerate() {
        if let Some(v) = *v {
            if best.is_none_or(|(b, _)| v > b) {
                best = Some((v, idx + 1));
            }
        }
    }
    best.map(|(_, k)| k).ok_or_else(|| {
        Error::Degenerate("Calinski-Harabasz is undefined for every candidate k".into())
    })
}
