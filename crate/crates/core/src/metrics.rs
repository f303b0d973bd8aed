//! Pair-counting agreement between two partitions.

use std::collections::HashMap;

use crate::error::{Error, Result};
use crate::lattice::NeighborGraph;

/// Cluster ids per observation; the ids themselves carry no meaning.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Partition {
    pub labels: Vec<usize>,
}

impl Partition {
    pub fn new(labels: Vec<usize>) -> Self {
        Self { labels }
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    /// Relabels clusters 1, 2, … in order of first appearance.
    pub fn canonical(&self) -> Self {
        let mut map = HashMap::new();
        let labels = self
            .labels
            .iter()
            .map(|l| {
                let next = map.len() + 1;
                *map.entry(*l).or_insert(next)
            })
            .collect();
        Self { labels }
    }

    pub fn same_as(&self, other: &Partition) -> bool {
        self.canonical() == other.canonical()
    }
}

/// Pair classification counts over all C(m, 2) pairs.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PairCounts {
    /// Together in both.
    pub n11: u64,
    /// Together in the first only.
    pub n10: u64,
    /// Together in the second only.
    pub n01: u64,
    /// Apart in both.
    pub n00: u64,
}

fn choose2(n: u64) -> u64 {
    n * n.saturating_sub(1) / 2
}

struct Table {
    cells: HashMap<(usize, usize), u64>,
    rows: HashMap<usize, u64>,
    cols: HashMap<usize, u64>,
    m: u64,
}

fn contingency(a: &Partition, b: &Partition) -> Result<Table> {
    if a.len() != b.len() {
        return Err(Error::LengthMismatch {
            left: a.len(),
            right: b.len(),
        });
    }
    let mut t = Table {
        cells: HashMap::new(),
        rows: HashMap::new(),
        cols: HashMap::new(),
        m: a.len() as u64,
    };
    for (&x, &y) in a.labels.iter().zip(&b.labels) {
        *t.cells.entry((x, y)).or_default() += 1;
        *t.rows.entry(x).or_default() += 1;
        *t.cols.entry(y).or_default() += 1;
    }
    Ok(t)
}

pub fn pair_counts(a: &Partition, b: &Partition) -> Result<PairCounts> {
    let t = contingency(a, b)?;
    let both: u64 = t.cells.values().map(|&n| choose2(n)).sum();
    let in_a: u64 = t.rows.values().map(|&n| choose2(n)).sum();
    let in_b: u64 = t.cols.values().map(|&n| choose2(n)).sum();
    let n10 = in_a - both;
    let n01 = in_b - both;
    Ok(PairCounts {
        n11: both,
        n10,
        n01,
        n00: choose2(t.m) - both - n10 - n01,
    })
}

/// Hubert–Arabie adjusted Rand index. When the denominator vanishes (both
/// partitions trivial) the value is 1 for equal partitions and 0 otherwise.
pub fn adjusted_rand(a: &Partition, b: &Partition) -> Result<f64> {
    let t = contingency(a, b)?;
    let index = t.cells.values().map(|&n| choose2(n) as f64).sum::<f64>();
    let sa = t.rows.values().map(|&n| choose2(n) as f64).sum::<f64>();
    let sb = t.cols.values().map(|&n| choose2(n) as f64).sum::<f64>();
    let total = choose2(t.m) as f64;
    if total == 0.0 {
        return Ok(if a.same_as(b) { 1.0 } else { 0.0 });
    }
    let expected = sa * sb / total;
    let max = 0.5 * (sa + sb);
    let denom = max - expected;
    if denom == 0.0 {
        return Ok(if a.same_as(b) { 1.0 } else { 0.0 });
    }
    Ok((index - expected) / denom)
}

/// `n11 / (n11 + n10 + n01)`; 1 when no pair is together in either.
pub fn jaccard(a: &Partition, b: &Partition) -> Result<f64> {
    let c = pair_counts(a, b)?;
    let denom = c.n11 + c.n10 + c.n01;
    if denom == 0 {
        return Ok(1.0);
    }
    Ok(c.n11 as f64 / denom as f64)
}

/// Subregions with at least one neighbour whose neighbours all carry a
/// different label.
pub fn isolated_subregions(labels: &[usize], graph: &NeighborGraph) -> Result<usize> {
    if labels.len() != graph.len() {
        return Err(Error::LengthMismatch {
            left: labels.len(),
            right: graph.len(),
        });
    }
    Ok((0..labels.len())
        .filter(|&i| {
            let nb = graph.neighbors(i);
            !nb.is_empty() && nb.iter().all(|&j| labels[j] != labels[i])
        })
        .count())
}

/// Mean lattice column of each cluster, keyed by label in ascending order.
/// Labels are row-major over a lattice with `cols` columns.
pub fn mean_columns(labels: &[usize], cols: usize) -> Result<Vec<(usize, f64)>> {
    if cols == 0 || !labels.len().is_multiple_of(cols) {
        return Err(Error::Shape(format!(
            "{} labels do not fill rows of {cols} columns",
            labels.len()
        )));
    }
    let mut acc: std::collections::BTreeMap<usize, (f64, f64)> = Default::default();
    for (i, &l) in labels.iter().enumerate() {
        let e = acc.entry(l).or_default();
        e.0 += (i % cols) as f64;
        e.1 += 1.0;
    }
    Ok(acc.into_iter().map(|(l, (s, n))| (l, s / n)).collect())
}

/// True when the clusters' mean columns are pairwise distinct and every
/// column's majority label follows that order from left to right.
pub fn column_ordered(labels: &[usize], cols: usize) -> Result<bool> {
    let mut means = mean_columns(labels, cols)?;
    means.sort_by(|a, b| a.1.total_cmp(&b.1));
    if means.windows(2).any(|w| w[0].1 >= w[1].1) {
        return Ok(false);
    }
    let rank: HashMap<usize, usize> = means
        .iter()
        .enumerate()
        .map(|(r, (l, _))| (*l, r))
        .collect();
    let rows = labels.len() / cols;
    let mut last = 0;
    for c in 0..cols {
        let mut counts: HashMap<usize, usize> = HashMap::new();
        for r in 0..rows {
            *counts.entry(rank[&labels[r * cols + c]]).or_default() += 1;
        }
        let top = counts
            .iter()
            .max_by(|a, b| a.1.cmp(b.1).then(b.0.cmp(a.0)))
            .map(|(r, _)| *r)
            .unwrap_or(0);
        if top < last {
            return Ok(false);
        }
        last = top;
    }
    Ok(true)
}
