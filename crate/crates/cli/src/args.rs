use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

#[derive(Debug, Parser)]
#[command(
    name = "sdfclust",
    version,
    about = "Estimate and cluster spectral densities of spatial subregions"
)]
pub struct Cli {
    #[command(flatten)]
    pub common: CommonArgs,
    #[command(subcommand)]
    pub command: Command,
}

/// Flags shared by every subcommand. Each one overrides the config key of
/// the same name.
#[derive(Debug, Clone, Default, Args)]
pub struct CommonArgs {
    /// `key = value` config file.
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Spatial fusion penalty.
    #[arg(long, global = true, value_parser = ["on", "off"])]
    pub spatial: Option<String>,
    /// Rank and cluster count; chosen from the data when absent.
    #[arg(long, global = true)]
    pub k: Option<usize>,
    #[arg(long = "k-select", global = true, value_parser = ["elbow", "ch"])]
    pub k_select: Option<String>,
    #[arg(long, global = true, value_parser = ["astar", "a", "sdf", "spb", "spk", "sep"])]
    pub features: Option<String>,
    #[arg(long, global = true)]
    pub replicates: Option<usize>,
    /// Worker threads for the parallel stages.
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// Output directory.
    #[arg(long, global = true, value_name = "DIR")]
    pub out: Option<PathBuf>,
    /// Simulated data directory or raster file.
    #[arg(long, global = true, value_name = "PATH")]
    pub input: Option<PathBuf>,
    /// Any other config key.
    #[arg(long = "set", global = true, value_name = "KEY=VALUE")]
    pub set: Vec<String>,
}

impl CommonArgs {
    /// The flags as config entries, in application order.
    pub fn overrides(&self) -> Vec<(String, String)> {
        let mut out: Vec<(String, String)> = self
            .set
            .iter()
            .map(|kv| match kv.split_once('=') {
                Some((k, v)) => (k.trim().to_string(), v.trim().to_string()),
                None => (kv.trim().to_string(), String::new()),
            })
            .collect();
        let mut push = |k: &str, v: Option<String>| {
            if let Some(v) = v {
                out.push((k.to_string(), v));
            }
        };
        push("seed", self.seed.map(|v| v.to_string()));
        push("spatial", self.spatial.clone());
        push("k", self.k.map(|v| v.to_string()));
        push("k_select", self.k_select.clone());
        push("features", self.features.clone());
        push("replicates", self.replicates.map(|v| v.to_string()));
        push("threads", self.threads.map(|v| v.to_string()));
        push("out", self.out.as_ref().map(|p| p.display().to_string()));
        push(
            "input",
            self.input.as_ref().map(|p| p.display().to_string()),
        );
        out
    }
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Sample a scenario and write its subregions and truth labels.
    Simulate,
    /// Fit the collective model and write the fit directory.
    Estimate,
    /// Cluster the subregions of a fit.
    Cluster {
        /// Fit directory written by `estimate`.
        fit: PathBuf,
    },
    /// Compare two label files.
    Evaluate { labels: PathBuf, truth: PathBuf },
    /// Simulate or ingest, estimate, cluster and evaluate.
    Pipeline,
}
