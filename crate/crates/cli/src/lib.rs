//! Command-line front end for `sdfclust`.

pub mod args;
pub mod commands;
pub mod config;
pub mod error;

use std::path::Path;

use args::{Cli, Command};
use config::{require_exists, RunConfig};
use error::CliResult;

/// Layers `base`, then the `--config` file, then the flags.
fn resolve(cli: &Cli, mut cfg: RunConfig) -> CliResult<RunConfig> {
    if let Some(path) = &cli.common.config {
        require_exists(path)?;
        cfg.merge_file(path)?;
    }
    for (k, v) in cli.common.overrides() {
        cfg.set(&k, &v)?;
    }
    Ok(cfg)
}

fn init_threads(cfg: &RunConfig) {
    if let Some(n) = cfg.threads {
        // A second call in the same process keeps the first pool.
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global();
    }
}

pub fn run(cli: Cli) -> CliResult<()> {
    let cfg = match &cli.command {
        Command::Cluster { fit } => {
            require_exists(fit)?;
            let mut base = RunConfig {
                out: fit.parent().unwrap_or(Path::new(".")).to_path_buf(),
                ..RunConfig::default()
            };
            let recorded = fit.join("config.txt");
            if recorded.exists() {
                base.merge_file(&recorded)?;
            }
            resolve(&cli, base)?
        }
        _ => resolve(&cli, RunConfig::default())?,
    };
    init_threads(&cfg);
    match &cli.command {
        Command::Simulate => commands::cmd_simulate(&cfg),
        Command::Estimate => commands::cmd_estimate(&cfg),
        Command::Cluster { fit } => commands::cmd_cluster(&cfg, fit),
        Command::Evaluate { labels, truth } => commands::cmd_evaluate(labels, truth),
        Command::Pipeline => commands::cmd_pipeline(&cfg),
    }
}
