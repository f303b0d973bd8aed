//! Run configuration: defaults, then a `key = value` file, then flags.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use sdfclust::basis::DEFAULT_MARGINAL;
use sdfclust::cluster::{FeatureKind, KSelect, DEFAULT_K_MAX};
use sdfclust::kv;
use sdfclust::simulate::{ScenarioKind, DEFAULT_SIDE};

use crate::error::{CliError, CliResult};

/// Every key a config file may set.
pub const KEYS: [&str; 17] = [
    "scenario",
    "m",
    "rows",
    "cols",
    "side",
    "input",
    "l",
    "k",
    "spatial",
    "k_select",
    "features",
    "seed",
    "max_iter",
    "tol",
    "k_max",
    "replicates",
    "threads",
];

/// `out` may also be set; it is kept apart from [`KEYS`] because the
/// recorded config of a run never carries it.
const OUT: &str = "out";

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub scenario: Option<ScenarioKind>,
    /// Subregion count for p1/p2.
    pub m: usize,
    /// Lattice shape for the gradient design.
    pub rows: Option<usize>,
    pub cols: Option<usize>,
    pub side: usize,
    /// Simulated data directory or raster file.
    pub input: Option<PathBuf>,
    /// Marginal B-spline count.
    pub l: usize,
    /// Rank and cluster count; selected from the data when absent.
    pub k: Option<usize>,
    pub spatial: bool,
    pub k_select: KSelect,
    pub features: FeatureKind,
    pub seed: u64,
    pub max_iter: usize,
    pub tol: f64,
    pub k_max: usize,
    pub replicates: usize,
    pub threads: Option<usize>,
    pub out: PathBuf,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            scenario: None,
            m: 30,
            rows: None,
            cols: None,
            side: DEFAULT_SIDE,
            input: None,
            l: DEFAULT_MARGINAL,
            k: None,
            spatial: true,
            k_select: KSelect::Elbow,
            features: FeatureKind::WeightedScores,
            seed: 1,
            max_iter: 200,
            tol: 1e-6,
            k_max: DEFAULT_K_MAX,
            replicates: 1,
            threads: None,
            out: PathBuf::from("out"),
        }
    }
}

fn parse<T: FromStr>(key: &str, value: &str) -> CliResult<T> {
    value
        .parse()
        .map_err(|_| CliError::Config(format!("{key}: cannot parse {value:?}")))
}

fn positive(key: &str, value: &str) -> CliResult<usize> {
    match parse::<usize>(key, value)? {
        0 => Err(CliError::Config(format!("{key} must be positive"))),
        v => Ok(v),
    }
}

fn on_off(key: &str, value: &str) -> CliResult<bool> {
    match value {
        "on" | "true" => Ok(true),
        "off" | "false" => Ok(false),
        _ => Err(CliError::Config(format!(
            "{key} must be on or off, got {value:?}"
        ))),
    }
}

impl RunConfig {
    /// Sets one key from its text form.
    pub fn set(&mut self, key: &str, value: &str) -> CliResult<()> {
        match key {
            "scenario" => self.scenario = Some(value.parse()?),
            "m" => self.m = positive(key, value)?,
            "rows" => self.rows = Some(positive(key, value)?),
            "cols" => self.cols = Some(positive(key, value)?),
            "side" => {
                self.side = parse(key, value)?;
                if self.side < 4 {
                    return Err(CliError::Config("side must be at least 4".into()));
                }
            }
            "input" => self.input = Some(PathBuf::from(value)),
            "l" => {
                self.l = parse(key, value)?;
                if self.l < 4 {
                    return Err(CliError::Config("l must be at least 4".into()));
                }
            }
            "k" => self.k = Some(positive(key, value)?),
            "spatial" => self.spatial = on_off(key, value)?,
            "k_select" => self.k_select = value.parse()?,
            "features" => self.features = value.parse()?,
            "seed" => self.seed = parse(key, value)?,
            "max_iter" => self.max_iter = positive(key, value)?,
            "tol" => {
                self.tol = parse(key, value)?;
                if !(self.tol > 0.0 && self.tol < 1.0) {
                    return Err(CliError::Config("tol must lie in (0, 1)".into()));
                }
            }
            "k_max" => {
                self.k_max = parse(key, value)?;
                if self.k_max < 3 {
                    return Err(CliError::Config("k_max must be at least 3".into()));
                }
            }
            "replicates" => self.replicates = positive(key, value)?,
            "threads" => self.threads = Some(positive(key, value)?),
            OUT => self.out = PathBuf::from(value),
            other => {
                return Err(CliError::Config(format!(
                    "unknown key {other:?}; known keys: {}, out",
                    KEYS.join(", ")
                )))
            }
        }
        Ok(())
    }

    /// Applies every entry of a config file.
    pub fn merge_text(&mut self, text: &str) -> CliResult<()> {
        for e in kv::parse(text)? {
            self.set(&e.key, &e.value)
                .map_err(|err| CliError::Config(format!("line {}: {err}", e.line)))?;
        }
        Ok(())
    }

    pub fn merge_file(&mut self, path: &Path) -> CliResult<()> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        self.merge_text(&text)
    }

    /// Every set key in [`KEYS`] order, one per line. Parsing the result
    /// with [`RunConfig::merge_text`] over the defaults reproduces `self`
    /// apart from `out`.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let mut line = |k: &str, v: String| {
            let _ = writeln!(s, "{k} = {v}");
        };
        if let Some(v) = self.scenario {
            line("scenario", v.to_string());
        }
        line("m", self.m.to_string());
        if let Some(v) = self.rows {
            line("rows", v.to_string());
        }
        if let Some(v) = self.cols {
            line("cols", v.to_string());
        }
        line("side", self.side.to_string());
        if let Some(v) = &self.input {
            line("input", v.display().to_string());
        }
        line("l", self.l.to_string());
        if let Some(v) = self.k {
            line("k", v.to_string());
        }
        line("spatial", if self.spatial { "on" } else { "off" }.into());
        line("k_select", self.k_select.to_string());
        line("features", self.features.to_string());
        line("seed", self.seed.to_string());
        line("max_iter", self.max_iter.to_string());
        line("tol", self.tol.to_string());
        line("k_max", self.k_max.to_string());
        line("replicates", self.replicates.to_string());
        if let Some(v) = self.threads {
            line("threads", v.to_string());
        }
        s
    }

    /// The input path, which must exist.
    pub fn existing_input(&self) -> CliResult<&Path> {
        let p = self
            .input
            .as_deref()
            .ok_or_else(|| CliError::Config("no input given (set input or pass --input)".into()))?;
        require_exists(p)?;
        Ok(p)
    }
}

pub fn require_exists(p: &Path) -> CliResult<()> {
    if p.exists() {
        Ok(())
    } else {
        Err(CliError::Config(format!("{} does not exist", p.display())))
    }
}
