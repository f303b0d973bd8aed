//! Text outputs of a clustering run.

use std::fmt::Write as _;

use super::variogram::ClusterVariogram;
use super::ClusterResult;
use crate::error::{Error, Result};

/// `index,row,col,label` for a rows×cols lattice in row-major order.
pub fn labels_csv(labels: &[usize], cols: usize) -> String {
    let mut s = String::from("index,row,col,label\n");
    for (i, l) in labels.iter().enumerate() {
        let _ = writeln!(s, "{i},{},{},{l}", i / cols, i % cols);
    }
    s
}

/// Reads the label column of a labels CSV (a header line is skipped when
/// present; a single column is accepted as labels).
pub fn parse_labels_csv(text: &str) -> Result<Vec<usize>> {
    let mut out = Vec::new();
    for (idx, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || (idx == 0 && line.chars().any(|c| c.is_ascii_alphabetic())) {
            continue;
        }
        let last = line.rsplit(',').next().unwrap_or("").trim();
        out.push(last.parse().map_err(|_| Error::Parse {
            line: idx + 1,
            msg: format!("label is not a non-negative integer: {last:?}"),
        })?);
    }
    Ok(out)
}

/// `k,wss,ch`; ch is empty where undefined.
pub fn curves_csv(result: &ClusterResult) -> String {
    let mut s = String::from("k,wss,ch\n");
    for (idx, w) in result.wss_curve.iter().enumerate() {
        let ch = result
            .ch_curve
            .get(idx)
            .copied()
            .flatten()
            .map(|v| v.to_string())
            .unwrap_or_default();
        let _ = writeln!(s, "{},{w},{ch}", idx + 1);
    }
    s
}

/// `cluster,lag,mean,lo,hi`; the band columns are empty for singletons.
pub fn variograms_csv(v: &[ClusterVariogram]) -> String {
    let mut s = String::from("cluster,lag,mean,lo,hi\n");
    for c in v {
        for (idx, (&lag, &mean)) in c.lags.iter().zip(&c.mean).enumerate() {
            let (lo, hi) = match &c.band {
                Some(b) => (b[idx].0.to_string(), b[idx].1.to_string()),
                None => (String::new(), String::new()),
            };
            let _ = writeln!(s, "{},{lag},{mean},{lo},{hi}", c.cluster);
        }
    }
    s
}

/// Plain PGM (P2) with one pixel per subregion; gray levels spread labels
/// 1..=K over 0..=255.
pub fn label_map_pgm(labels: &[usize], rows: usize, cols: usize) -> Result<String> {
    if labels.len() != rows * cols {
        return Err(Error::LengthMismatch {
            left: labels.len(),
            right: rows * cols,
        });
    }
    let k = labels.iter().copied().max().unwrap_or(1).max(1);
    let level = |l: usize| {
        if k == 1 {
            255
        } else {
            (255 * (l - 1)) / (k - 1)
        }
    };
    let mut s = format!("P2\n{cols} {rows}\n255\n");
    for r in 0..rows {
        let line: Vec<String> = (0..cols)
            .map(|c| level(labels[r * cols + c]).to_string())
            .collect();
        s.push_str(&line.join(" "));
        s.push('\n');
    }
    Ok(s)
}
