//! Directory serialization: `Theta.csv`, `A.csv`, `meta.txt`, `trace.csv`.

use std::fs;
use std::path::Path;

use super::{ModelFit, TraceEntry};
use crate::error::{Error, Result};
use crate::kv;
use crate::raster::{parse_csv_matrix, to_csv};

const TRACE_HEADER: &str =
    "iter,lambda1,lambda2,objective_start,objective_end,whittle,pen1,pen2,df1,df2,aic";

fn write(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

pub fn write_fit(fit: &ModelFit, dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    write(&dir.join("Theta.csv"), &to_csv(&fit.theta))?;
    write(&dir.join("A.csv"), &to_csv(&fit.a))?;

    let last = fit.last();
    let mut meta = String::new();
    let mut line = |k: &str, v: String| meta.push_str(&format!("{k} = {v}\n"));
    line("k", fit.k.to_string());
    line("m", fit.a.nrows().to_string());
    line("basis_functions", fit.theta.nrows().to_string());
    line(
        "spatial",
        if fit.spatial { "on" } else { "off" }.to_string(),
    );
    line("lambda1", fit.lambda1.to_string());
    line("lambda2", fit.lambda2.to_string());
    line("iterations", fit.iterations.to_string());
    line("converged", fit.converged.to_string());
    line("repairs", fit.repairs.to_string());
    if let Some(t) = last {
        line("objective", t.objective_end.to_string());
        line("whittle", t.whittle.to_string());
        line("df1", t.df1.to_string());
        line("df2", t.df2.to_string());
        line("aic", t.aic.to_string());
    }
    write(&dir.join("meta.txt"), &meta)?;

    let mut trace = String::from(TRACE_HEADER);
    trace.push('\n');
    for t in &fit.trace {
        trace.push_str(&format!(
            "{},{},{},{},{},{},{},{},{},{},{}\n",
            t.iter,
            t.lambda1,
            t.lambda2,
            t.objective_start,
            t.objective_end,
            t.whittle,
            t.pen1,
            t.pen2,
            t.df1,
            t.df2,
            t.aic
        ));
    }
    write(&dir.join("trace.csv"), &trace)
}

pub fn read_trace(path: &Path) -> Result<Vec<TraceEntry>> {
    let text = read(path)?;
    let mut out = Vec::new();
    for (idx, line) in text.lines().enumerate().skip(1) {
        if line.trim().is_empty() {
            continue;
        }
        let v: Vec<f64> = line
            .split(',')
            .map(|t| {
                t.trim().parse().map_err(|_| Error::Parse {
                    line: idx + 1,
                    msg: format!("not a number: {t:?}"),
                })
            })
            .collect::<Result<_>>()?;
        if v.len() != 11 {
            return Err(Error::Parse {
                line: idx + 1,
                msg: format!("expected 11 fields, got {}", v.len()),
            });
        }
        out.push(TraceEntry {
            iter: v[0] as usize,
            lambda1: v[1],
            lambda2: v[2],
            objective_start: v[3],
            objective_end: v[4],
            whittle: v[5],
            pen1: v[6],
            pen2: v[7],
            df1: v[8],
            df2: v[9],
            aic: v[10],
        });
    }
    Ok(out)
}

pub fn read_fit(dir: &Path) -> Result<ModelFit> {
    let theta = parse_csv_matrix(&read(&dir.join("Theta.csv"))?)?;
    let a = parse_csv_matrix(&read(&dir.join("A.csv"))?)?;
    let meta = kv::parse_map(&read(&dir.join("meta.txt"))?)?;
    let trace = read_trace(&dir.join("trace.csv"))?;
    let k: usize = kv::get(&meta, "k")?;
    if theta.ncols() != k || a.ncols() != k {
        return Err(Error::Shape(format!(
            "Theta has {} columns and A has {}, meta says K = {k}",
            theta.ncols(),
            a.ncols()
        )));
    }
    Ok(ModelFit {
        theta,
        a,
        lambda1: kv::get(&meta, "lambda1")?,
        lambda2: kv::get(&meta, "lambda2")?,
        k,
        trace,
        converged: kv::get(&meta, "converged")?,
        iterations: kv::get(&meta, "iterations")?,
        spatial: meta.get("spatial").map(String::as_str) == Some("on"),
        repairs: kv::get(&meta, "repairs")?,
    })
}
