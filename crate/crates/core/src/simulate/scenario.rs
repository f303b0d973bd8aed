//! Experimental designs: per-subregion Matérn parameters on a lattice.

use std::fmt;
use std::str::FromStr;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::grf::{grid_factor, sample_grf};
use super::matern::MaternParams;
use crate::error::{Error, Result};
use crate::kv;
use crate::lattice::SubregionLattice;

pub const DEFAULT_SIDE: usize = 40;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ScenarioKind {
    /// Three clusters with ρ = ν = 0.4·c.
    P1,
    /// Three clusters with ρ = 0.4·c, ν = 0.4·(4 − c).
    P2,
    /// ρ = ν increasing linearly across lattice columns.
    Gradient,
    Custom,
}

impl fmt::Display for ScenarioKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ScenarioKind::P1 => "p1",
            ScenarioKind::P2 => "p2",
            ScenarioKind::Gradient => "gradient",
            ScenarioKind::Custom => "custom",
        })
    }
}

impl FromStr for ScenarioKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "p1" => Ok(ScenarioKind::P1),
            "p2" => Ok(ScenarioKind::P2),
            "gradient" => Ok(ScenarioKind::Gradient),
            "custom" => Ok(ScenarioKind::Custom),
            other => Err(Error::UnknownKind {
                what: "scenario",
                name: other.to_string(),
            }),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub kind: ScenarioKind,
    pub rows: usize,
    pub cols: usize,
    pub side: usize,
    /// Row-major over the lattice.
    pub params: Vec<MaternParams>,
    /// Cluster ids 1..=3 when known.
    pub true_labels: Option<Vec<usize>>,
    pub seed: u64,
}

impl Scenario {
    pub fn new(
        kind: ScenarioKind,
        rows: usize,
        cols: usize,
        side: usize,
        params: Vec<MaternParams>,
        true_labels: Option<Vec<usize>>,
        seed: u64,
    ) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::InvalidParameter("lattice must be non-empty".into()));
        }
        if params.len() != rows * cols {
            return Err(Error::LengthMismatch {
                left: params.len(),
                right: rows * cols,
            });
        }
        if let Some(l) = &true_labels {
            if l.len() != params.len() {
                return Err(Error::LengthMismatch {
                    left: l.len(),
                    right: params.len(),
                });
            }
        }
        if side < crate::lattice::MIN_SIDE {
            return Err(Error::SideTooSmall {
                side,
                min: crate::lattice::MIN_SIDE,
            });
        }
        for p in &params {
            p.validate()?;
        }
        Ok(Self {
            kind,
            rows,
            cols,
            side,
            params,
            true_labels,
            seed,
        })
    }

    /// Three equal clusters laid out as lattice rows (row c is cluster c+1).
    fn three_cluster(kind: ScenarioKind, m: usize, side: usize, seed: u64) -> Result<Self> {
        if m == 0 || !m.is_multiple_of(3) {
            return Err(Error::InvalidParameter(format!(
                "m = {m} must be a positive multiple of 3"
            )));
        }
        let cols = m / 3;
        let mut params = Vec::with_capacity(m);
        let mut labels = Vec::with_capacity(m);
        for c in 1..=3 {
            let (rho, nu) = match kind {
                ScenarioKind::P1 => (0.4 * c as f64, 0.4 * c as f64),
                _ => (0.4 * c as f64, 0.4 * (4 - c) as f64),
            };
            let p = MaternParams::new(rho, nu)?;
            params.extend(std::iter::repeat_n(p, cols));
            labels.extend(std::iter::repeat_n(c, cols));
        }
        Self::new(kind, 3, cols, side, params, Some(labels), seed)
    }

    pub fn p1(m: usize, side: usize, seed: u64) -> Result<Self> {
        Self::three_cluster(ScenarioKind::P1, m, side, seed)
    }

    pub fn p2(m: usize, side: usize, seed: u64) -> Result<Self> {
        Self::three_cluster(ScenarioKind::P2, m, side, seed)
    }

    /// ρ = ν = 0.5 + 0.05·c in lattice column c = 1..=cols.
    pub fn gradient(rows: usize, cols: usize, side: usize, seed: u64) -> Result<Self> {
        let mut params = Vec::with_capacity(rows * cols);
        for _ in 0..rows {
            for c in 1..=cols {
                let v = 0.5 + 0.05 * c as f64;
                params.push(MaternParams::new(v, v)?);
            }
        }
        Self::new(ScenarioKind::Gradient, rows, cols, side, params, None, seed)
    }

    pub fn m(&self) -> usize {
        self.params.len()
    }

    /// Draws every subregion independently; subregion i uses RNG stream i.
    pub fn sample(&self) -> Result<SubregionLattice> {
        let mut distinct: Vec<MaternParams> = Vec::new();
        for p in &self.params {
            if !distinct.contains(p) {
                distinct.push(*p);
            }
        }
        distinct
            .par_iter()
            .map(|p| grid_factor(self.side, p).map(|_| ()))
            .collect::<Result<Vec<()>>>()?;
        let fields = self
            .params
            .par_iter()
            .enumerate()
            .map(|(i, p)| {
                let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
                rng.set_stream(i as u64);
                sample_grf(self.side, p, &mut rng)
            })
            .collect::<Result<Vec<_>>>()?;
        SubregionLattice::from_subregions(self.rows, self.cols, fields)
    }

    pub fn to_text(&self) -> String {
        let join = |f: &dyn Fn(&MaternParams) -> f64| {
            self.params
                .iter()
                .map(|p| f(p).to_string())
                .collect::<Vec<_>>()
                .join(",")
        };
        let mut s = format!(
            "name = {}\nrows = {}\ncols = {}\nside = {}\nseed = {}\n",
            self.kind, self.rows, self.cols, self.side, self.seed
        );
        s.push_str(&format!("rho = {}\n", join(&|p| p.rho)));
        s.push_str(&format!("nu = {}\n", join(&|p| p.nu)));
        s.push_str(&format!("sigma2 = {}\n", join(&|p| p.sigma2)));
        if let Some(l) = &self.true_labels {
            let l: Vec<String> = l.iter().map(|v| v.to_string()).collect();
            s.push_str(&format!("labels = {}\n", l.join(",")));
        }
        s
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let map = kv::parse_map(text)?;
        let kind: ScenarioKind = kv::get::<String>(&map, "name")?.parse()?;
        let rho: Vec<f64> = kv::get_list(&map, "rho")?;
        let nu: Vec<f64> = kv::get_list(&map, "nu")?;
        let sigma2: Vec<f64> = kv::get_list(&map, "sigma2")?;
        if rho.len() != nu.len() || rho.len() != sigma2.len() {
            return Err(Error::LengthMismatch {
                left: rho.len(),
                right: nu.len().min(sigma2.len()),
            });
        }
        let params = rho
            .iter()
            .zip(&nu)
            .zip(&sigma2)
            .map(|((&r, &n), &s)| MaternParams::with_variance(r, n, s))
            .collect::<Result<Vec<_>>>()?;
        let labels = if map.contains_key("labels") {
            Some(kv::get_list(&map, "labels")?)
        } else {
            None
        };
        Self::new(
            kind,
            kv::get(&map, "rows")?,
            kv::get(&map, "cols")?,
            kv::get(&map, "side")?,
            params,
            labels,
            kv::get(&map, "seed")?,
        )
    }
}

/// The named designs. `m` is the subregion count for p1/p2; the gradient
/// design is the fixed 20×50 lattice and requires m = 1000.
pub fn build_scenario(name: &str, m: usize, side: usize, seed: u64) -> Result<Scenario> {
    match name.parse::<ScenarioKind>()? {
        ScenarioKind::P1 => Scenario::p1(m, side, seed),
        ScenarioKind::P2 => Scenario::p2(m, side, seed),
        ScenarioKind::Gradient if m == 1000 => Scenario::gradient(20, 50, side, seed),
        ScenarioKind::Gradient => Err(Error::InvalidParameter(format!(
            "the gradient design has 1000 subregions, got m = {m}; use Scenario::gradient for other shapes"
        ))),
        ScenarioKind::Custom => Err(Error::InvalidParameter(
            "custom scenarios are read from a scenario file".into(),
        )),
    }
}
