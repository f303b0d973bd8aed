//! The five subcommands.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use sdfclust::basis::BasisSystem;
use sdfclust::cluster::{
    cluster_pipeline, cluster_variograms, curves_csv, label_map_pgm, labels_csv, parse_labels_csv,
    select_k_ch, select_k_elbow, selection_curves, selection_matrix, variograms_csv, ClusterResult,
    KSelect, PipelineInput, PipelineOptions,
};
use sdfclust::estimator::{fit, read_fit, write_fit, FitOptions, ModelFit, Problem};
use sdfclust::lattice::{partition, SubregionLattice};
use sdfclust::metrics::{adjusted_rand, jaccard, Partition};
use sdfclust::raster::{parse_csv_matrix, read_field, to_csv, RasterFormat};
use sdfclust::simulate::{Scenario, ScenarioKind};
use sdfclust::spectrum::{periodogram_set, PeriodogramSet};
use sdfclust::{lattice::GridField, Error};

use crate::config::{require_exists, RunConfig};
use crate::error::{CliError, CliResult};

const FIELDS_DIR: &str = "fields";
const SCENARIO_FILE: &str = "scenario.txt";
const CONFIG_FILE: &str = "config.txt";

fn write(path: &Path, text: &str) -> CliResult<()> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    }
    fs::write(path, text).map_err(|e| CliError::io(path, e))
}

fn read(path: &Path) -> CliResult<String> {
    fs::read_to_string(path).map_err(|e| CliError::io(path, e))
}

fn field_path(dir: &Path, i: usize) -> PathBuf {
    dir.join(FIELDS_DIR).join(format!("sub_{i:04}.csv"))
}

/// Subregions and, for simulated data, the true labels.
pub struct Dataset {
    pub lattice: SubregionLattice,
    pub truth: Option<Vec<usize>>,
}

impl Dataset {
    fn periodograms(&self) -> CliResult<PeriodogramSet> {
        Ok(periodogram_set(&self.lattice)?)
    }
}

/// The scenario named by the config.
pub fn scenario(cfg: &RunConfig, seed: u64) -> CliResult<Scenario> {
    let kind = cfg
        .scenario
        .ok_or_else(|| CliError::Config("no scenario given (p1, p2 or gradient)".into()))?;
    let shaped = cfg.rows.is_some() || cfg.cols.is_some();
    Ok(match kind {
        ScenarioKind::P1 | ScenarioKind::P2 if shaped => {
            return Err(CliError::Config(
                "rows and cols apply to the gradient scenario; use m for p1 and p2".into(),
            ))
        }
        ScenarioKind::P1 => Scenario::p1(cfg.m, cfg.side, seed)?,
        ScenarioKind::P2 => Scenario::p2(cfg.m, cfg.side, seed)?,
        ScenarioKind::Gradient => Scenario::gradient(
            cfg.rows.unwrap_or(20),
            cfg.cols.unwrap_or(50),
            cfg.side,
            seed,
        )?,
        ScenarioKind::Custom => {
            return Err(CliError::Config(
                "custom scenarios are ingested from a data directory with --input".into(),
            ))
        }
    })
}

/// Samples the scenario into `dir`: `scenario.txt`, `truth.csv` when the
/// design has labels, and one CSV per subregion under `fields/`.
pub fn simulate_into(cfg: &RunConfig, seed: u64, dir: &Path) -> CliResult<Dataset> {
    let s = scenario(cfg, seed)?;
    let lattice = s.sample()?;
    write(&dir.join(SCENARIO_FILE), &s.to_text())?;
    for (i, sub) in lattice.subregions.iter().enumerate() {
        write(&field_path(dir, i), &to_csv(sub.values()))?;
    }
    if let Some(t) = &s.true_labels {
        write(&dir.join("truth.csv"), &labels_csv(t, s.cols))?;
    }
    Ok(Dataset {
        lattice,
        truth: s.true_labels,
    })
}

/// Reads a simulated data directory, or tiles a raster file into
/// subregions of `cfg.side`.
pub fn load_input(cfg: &RunConfig, path: &Path) -> CliResult<Dataset> {
    require_exists(path)?;
    if path.is_dir() {
        let s = Scenario::from_text(&read(&path.join(SCENARIO_FILE))?)?;
        let subs = (0..s.m())
            .map(|i| {
                let values = parse_csv_matrix(&read(&field_path(path, i))?)?;
                Ok(GridField::new(values)?)
            })
            .collect::<CliResult<Vec<_>>>()?;
        return Ok(Dataset {
            lattice: SubregionLattice::from_subregions(s.rows, s.cols, subs)?,
            truth: s.true_labels,
        });
    }
    let field = read_field(path, RasterFormat::from_path(path))?;
    Ok(Dataset {
        lattice: partition(&field, cfg.side)?,
        truth: None,
    })
}

/// The configured K, or the one the selection rule picks on the smoothed
/// log-periodograms.
pub fn choose_k(cfg: &RunConfig, p: &PeriodogramSet, basis: &BasisSystem) -> CliResult<usize> {
    if let Some(k) = cfg.k {
        return Ok(k);
    }
    let k_max = cfg.k_max.min(p.m());
    if k_max < 3 {
        return Err(CliError::Config(format!(
            "selecting K needs at least 3 subregions, got {}",
            p.m()
        )));
    }
    let (wss, ch) = selection_curves(&selection_matrix(p, basis)?, k_max)?;
    Ok(match cfg.k_select {
        KSelect::Elbow => select_k_elbow(&wss)?,
        KSelect::CalinskiHarabasz => select_k_ch(&ch)?,
    })
}

pub struct Estimated {
    pub fit: ModelFit,
    pub seconds: f64,
}

/// Fits the model and writes the fit directory, including the config that
/// produced it.
pub fn estimate_into(
    cfg: &RunConfig,
    data: &Dataset,
    input: &Path,
    dir: &Path,
) -> CliResult<Estimated> {
    let p = data.periodograms()?;
    let basis = BasisSystem::new(data.lattice.side, cfg.l)?;
    let graph = data.lattice.neighbor_graph();
    let problem = Problem::new(&p, &basis, &graph)?;
    let k = choose_k(cfg, &p, &basis)?;
    let mut opts = FitOptions::with_spatial(cfg.spatial);
    opts.max_iter = cfg.max_iter;
    opts.tol = cfg.tol;

    let start = Instant::now();
    let f = fit(&problem, k, &opts)?;
    let seconds = start.elapsed().as_secs_f64();

    write_fit(&f, dir)?;
    let mut recorded = cfg.clone();
    recorded.input = Some(input.to_path_buf());
    write(&dir.join(CONFIG_FILE), &recorded.to_text())?;
    Ok(Estimated { fit: f, seconds })
}

/// Clusters the subregions and writes labels, curves, variograms, the
/// label map and `cluster.txt`.
pub fn cluster_into(
    cfg: &RunConfig,
    data: &Dataset,
    fit: Option<&ModelFit>,
    dir: &Path,
) -> CliResult<ClusterResult> {
    if cfg.features.needs_fit() && fit.is_none() {
        return Err(CliError::Config(format!(
            "features {} need a fitted model",
            cfg.features
        )));
    }
    let p = data.periodograms()?;
    let basis = BasisSystem::new(data.lattice.side, cfg.l)?;
    let rank = match fit {
        Some(f) => f.k,
        None => choose_k(cfg, &p, &basis)?,
    };
    let input = PipelineInput {
        periodograms: &p,
        basis: &basis,
        fit,
        rank: Some(rank),
    };
    let opts = PipelineOptions {
        kind: cfg.features,
        k: cfg.k,
        select: cfg.k_select,
        k_max: Some(cfg.k_max.min(p.m())),
    };
    let result = cluster_pipeline(&input, &opts)?;
    let lat = &data.lattice;
    write(
        &dir.join("labels.csv"),
        &labels_csv(&result.labels, lat.cols),
    )?;
    write(&dir.join("curves.csv"), &curves_csv(&result))?;
    write(
        &dir.join("variograms.csv"),
        &variograms_csv(&cluster_variograms(lat, &result.labels)?),
    )?;
    write(
        &dir.join("map.pgm"),
        &label_map_pgm(&result.labels, lat.rows, lat.cols)?,
    )?;

    let mut info = String::new();
    let _ = writeln!(info, "k = {}", result.k);
    let _ = writeln!(
        info,
        "selected_by = {}",
        result
            .selected_by
            .map_or("given".to_string(), |s| s.to_string())
    );
    let _ = writeln!(info, "features = {}", result.input_kind);
    let sizes: Vec<String> = (1..=result.k)
        .map(|c| {
            result
                .labels
                .iter()
                .filter(|&&l| l == c)
                .count()
                .to_string()
        })
        .collect();
    let _ = writeln!(info, "sizes = {}", sizes.join(","));
    write(&dir.join("cluster.txt"), &info)?;
    Ok(result)
}

/// `(ARI, Jaccard)` of two labelings.
pub fn evaluate(labels: &[usize], truth: &[usize]) -> CliResult<(f64, f64)> {
    let (a, b) = (
        Partition::new(labels.to_vec()),
        Partition::new(truth.to_vec()),
    );
    Ok((adjusted_rand(&a, &b)?, jaccard(&a, &b)?))
}

pub fn cmd_simulate(cfg: &RunConfig) -> CliResult<()> {
    let data = simulate_into(cfg, cfg.seed, &cfg.out)?;
    write(&cfg.out.join(CONFIG_FILE), &cfg.to_text())?;
    eprintln!(
        "wrote {} subregions to {}",
        data.lattice.len(),
        cfg.out.display()
    );
    Ok(())
}

pub fn cmd_estimate(cfg: &RunConfig) -> CliResult<()> {
    let input = cfg.existing_input()?.to_path_buf();
    let data = load_input(cfg, &input)?;
    let dir = cfg.out.join("fit");
    let e = estimate_into(cfg, &data, &input, &dir)?;
    write(
        &cfg.out.join("timings.txt"),
        &format!("estimate_seconds = {:.3}\n", e.seconds),
    )?;
    eprintln!(
        "K = {}, {} sweeps, converged = {}, AIC = {}; wrote {}",
        e.fit.k,
        e.fit.iterations,
        e.fit.converged,
        e.fit.aic(),
        dir.display()
    );
    Ok(())
}

pub fn cmd_cluster(cfg: &RunConfig, fit_dir: &Path) -> CliResult<()> {
    let f = read_fit(fit_dir)?;
    let input = cfg.existing_input()?.to_path_buf();
    let data = load_input(cfg, &input)?;
    if data.lattice.len() != f.a.nrows() {
        return Err(Error::LengthMismatch {
            left: data.lattice.len(),
            right: f.a.nrows(),
        }
        .into());
    }
    let result = cluster_into(cfg, &data, Some(&f), &cfg.out)?;
    eprintln!("k = {}; wrote {}", result.k, cfg.out.display());
    Ok(())
}

pub fn cmd_evaluate(labels: &Path, truth: &Path) -> CliResult<()> {
    require_exists(labels)?;
    require_exists(truth)?;
    let a = parse_labels_csv(&read(labels)?)?;
    let b = parse_labels_csv(&read(truth)?)?;
    let (ari, jac) = evaluate(&a, &b)?;
    println!("ari = {ari}");
    println!("jaccard = {jac}");
    Ok(())
}

struct Row {
    replicate: usize,
    seed: u64,
    k: usize,
    fit: Option<(usize, bool, f64)>,
    scores: Option<(f64, f64)>,
}

fn mean_sd(v: &[f64]) -> (f64, f64) {
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    let sd = if v.len() > 1 {
        (v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
    } else {
        0.0
    };
    (mean, sd)
}

pub fn cmd_pipeline(cfg: &RunConfig) -> CliResult<()> {
    if cfg.input.is_some() && cfg.replicates > 1 {
        return Err(CliError::Config(
            "replicates > 1 needs a simulated scenario, not an input".into(),
        ));
    }
    if cfg.input.is_none() {
        scenario(cfg, cfg.seed)?;
    } else {
        cfg.existing_input()?;
    }
    write(&cfg.out.join(CONFIG_FILE), &cfg.to_text())?;

    let mut rows = Vec::new();
    let mut timings = String::from("replicate,simulate_seconds,estimate_seconds,cluster_seconds\n");
    for r in 0..cfg.replicates {
        let seed = cfg.seed + r as u64;
        let dir = cfg.out.join(format!("rep_{:03}", r + 1));
        let t = Instant::now();
        let (data, input) = match &cfg.input {
            Some(p) => (load_input(cfg, p)?, p.clone()),
            None => {
                let data_dir = dir.join("data");
                (simulate_into(cfg, seed, &data_dir)?, data_dir)
            }
        };
        let sim_s = t.elapsed().as_secs_f64();

        let mut rep_cfg = cfg.clone();
        rep_cfg.seed = seed;
        let estimated = if cfg.features.needs_fit() {
            Some(estimate_into(&rep_cfg, &data, &input, &dir.join("fit"))?)
        } else {
            None
        };
        let t = Instant::now();
        let result = cluster_into(&rep_cfg, &data, estimated.as_ref().map(|e| &e.fit), &dir)?;
        let cl_s = t.elapsed().as_secs_f64();
        let est_s = estimated.as_ref().map_or(0.0, |e| e.seconds);
        let _ = writeln!(timings, "{},{sim_s:.3},{est_s:.3},{cl_s:.3}", r + 1);

        let scores = match &data.truth {
            Some(t) => Some(evaluate(&result.labels, t)?),
            None => None,
        };
        rows.push(Row {
            replicate: r + 1,
            seed,
            k: result.k,
            fit: estimated.map(|e| (e.fit.iterations, e.fit.converged, e.fit.aic())),
            scores,
        });
    }

    let summary = summary_text(cfg, &rows);
    write(&cfg.out.join("summary.txt"), &summary)?;
    write(&cfg.out.join("timings.txt"), &timings)?;
    print!("{summary}");
    Ok(())
}

fn summary_text(cfg: &RunConfig, rows: &[Row]) -> String {
    let mut s = String::new();
    let source = match (&cfg.input, cfg.scenario) {
        (Some(p), _) => p.display().to_string(),
        (None, Some(k)) => k.to_string(),
        (None, None) => "none".into(),
    };
    let _ = writeln!(s, "source = {source}");
    let _ = writeln!(s, "replicates = {}", rows.len());
    let _ = writeln!(s, "features = {}", cfg.features);
    let _ = writeln!(s, "spatial = {}", if cfg.spatial { "on" } else { "off" });
    let _ = writeln!(s, "replicate,seed,k,iterations,converged,aic,ari,jaccard");
    let cell = |v: Option<String>| v.unwrap_or_default();
    for r in rows {
        let _ = writeln!(
            s,
            "{},{},{},{},{},{},{},{}",
            r.replicate,
            r.seed,
            r.k,
            cell(r.fit.map(|f| f.0.to_string())),
            cell(r.fit.map(|f| f.1.to_string())),
            cell(r.fit.map(|f| format!("{:.6}", f.2))),
            cell(r.scores.map(|v| format!("{:.6}", v.0))),
            cell(r.scores.map(|v| format!("{:.6}", v.1))),
        );
    }
    let ari: Vec<f64> = rows.iter().filter_map(|r| r.scores.map(|v| v.0)).collect();
    let jac: Vec<f64> = rows.iter().filter_map(|r| r.scores.map(|v| v.1)).collect();
    if ari.is_empty() {
        let _ = writeln!(s, "evaluation = skipped (no truth labels)");
    } else {
        let (ma, sa) = mean_sd(&ari);
        let (mj, sj) = mean_sd(&jac);
        let _ = writeln!(s, "mean_ari = {ma:.6}");
        let _ = writeln!(s, "sd_ari = {sa:.6}");
        let _ = writeln!(s, "mean_jaccard = {mj:.6}");
        let _ = writeln!(s, "sd_jaccard = {sj:.6}");
    }
    s
}
