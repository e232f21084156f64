//! CSV and JSON writers.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::Serialize;

use super::experiment::GridRuns;
use super::lemma::LemmaReport;
use crate::limit_law::ChiLaw;
use crate::simulator::Trajectory;
use crate::{Error, Result};

pub const RUNS_HEADER: [&str; 9] =
    ["replicate_id", "N0", "tau", "censored_flag", "theta", "N_theta", "N_theta_plus_k", "steps_run", "overflow_flag"];

fn csv_writer(path: &Path) -> Result<csv::Writer<File>> {
    csv::Writer::from_path(path).map_err(|e| io_error(path, e))
}

fn io_error(path: &Path, e: impl std::fmt::Display) -> Error {
    Error::Io(format!("{}: {e}", path.display()))
}

fn opt<T: ToString>(v: Option<T>) -> String {
    v.map(|v| v.to_string()).unwrap_or_default()
}

/// Shortest round-trip text, switching to exponent form outside `[1e-4, 1e15)`.
fn num(x: f64) -> String {
    let a = x.abs();
    if x == 0.0 || !x.is_finite() || (1e-4..1e15).contains(&a) {
        x.to_string()
    } else {
        format!("{x:e}")
    }
}

fn opt_num(v: Option<f64>) -> String {
    v.map(num).unwrap_or_default()
}

fn flag(b: bool) -> &'static str {
    if b {
        "1"
    } else {
        "0"
    }
}

/// One row per replicate, grid points in order.
pub fn write_runs_csv(path: &Path, runs: &[GridRuns]) -> Result<()> {
    let mut w = csv_writer(path)?;
    let err = |e| io_error(path, e);
    w.write_record(RUNS_HEADER).map_err(err)?;
    for grid in runs {
        for r in &grid.records {
            w.write_record([
                r.replicate_id.to_string(),
                r.n0.to_string(),
                opt(r.tau),
                flag(r.censored).to_string(),
                opt(r.theta),
                opt(r.n_theta),
                opt(r.n_theta_plus_k),
                r.steps_run.to_string(),
                flag(r.overflow).to_string(),
            ])
            .map_err(err)?;
        }
    }
    w.flush().map_err(|e| io_error(path, e))
}

/// `<stem>_N<n0>.<ext>` next to `stem`.
pub fn ecdf_path(stem: &Path, n0: u64) -> PathBuf {
    let base = stem.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_else(|| "ecdf".into());
    let ext = stem.extension().map(|s| s.to_string_lossy().into_owned()).unwrap_or_else(|| "csv".into());
    stem.with_file_name(format!("{base}_N{n0}.{ext}"))
}

/// `(t, F_empirical(t), F_χ(t))` at each distinct `τ/ln²N`, censored runs
/// kept in the denominator.
pub fn ecdf_rows(grid: &GridRuns, law: &ChiLaw) -> Vec<(f64, f64, f64)> {
    let tau = grid.tau_scaled();
    let total = grid.tau_denominator() as f64;
    let mut rows: Vec<(f64, f64, f64)> = Vec::new();
    for (i, &t) in tau.iter().enumerate() {
        let f = (i + 1) as f64 / total;
        match rows.last_mut() {
            Some(last) if last.0 == t => last.1 = f,
            _ => rows.push((t, f, law.cdf(t))),
        }
    }
    rows
}

/// Writes one empirical-cdf file per grid point and returns their paths.
pub fn write_ecdf_csv(stem: &Path, runs: &[GridRuns], law: &ChiLaw) -> Result<Vec<PathBuf>> {
    let mut written = Vec::with_capacity(runs.len());
    for grid in runs {
        let path = ecdf_path(stem, grid.n0);
        let mut w = csv_writer(&path)?;
        let err = |e| io_error(&path, e);
        w.write_record(["t", "F_empirical", "F_chi"]).map_err(err)?;
        for (t, fe, fc) in ecdf_rows(grid, law) {
            w.write_record([num(t), num(fe), num(fc)]).map_err(err)?;
        }
        w.flush().map_err(|e| io_error(&path, e))?;
        written.push(path);
    }
    Ok(written)
}

/// One row per recorded step, tagged with its replicate.
pub fn write_trajectories_csv<'a>(path: &Path, trajectories: impl IntoIterator<Item = (u64, &'a Trajectory)>) -> Result<()> {
    let mut w = csv_writer(path)?;
    let err = |e| io_error(path, e);
    w.write_record(["replicate_id", "N0", "n", "eta", "F_total", "M_total", "N", "xi", "S", "R"]).map_err(err)?;
    for (id, t) in trajectories {
        for s in &t.steps {
            w.write_record([
                id.to_string(),
                t.n0.to_string(),
                s.n.to_string(),
                num(s.eta),
                s.females.to_string(),
                s.males.to_string(),
                s.pairs.to_string(),
                num(s.xi),
                num(s.position),
                num(s.residual),
            ])
            .map_err(err)?;
        }
    }
    w.flush().map_err(|e| io_error(path, e))
}

/// `count` evenly spaced points of `[from, to]` with pdf and cdf.
pub fn write_limit_law_table(path: &Path, law: &ChiLaw, from: f64, to: f64, count: usize) -> Result<()> {
    if !(from.is_finite() && to.is_finite() && from < to) || count < 2 {
        return Err(Error::config(format!("table needs from < to and at least 2 points, got {from}:{to}:{count}")));
    }
    let mut w = csv_writer(path)?;
    let err = |e| io_error(path, e);
    w.write_record(["t", "pdf", "cdf"]).map_err(err)?;
    for i in 0..count {
        let t = if i + 1 == count { to } else { from + (to - from) * i as f64 / (count - 1) as f64 };
        w.write_record([num(t), num(law.pdf(t)), num(law.cdf(t))]).map_err(err)?;
    }
    w.flush().map_err(|e| io_error(path, e))
}

pub fn write_diagnostics_csv(path: &Path, report: &LemmaReport) -> Result<()> {
    let mut w = csv_writer(path)?;
    let err = |e| io_error(path, e);
    w.write_record(["N0", "path", "n", "r2", "r3", "r3_se", "r4"]).map_err(err)?;
    for p in &report.points {
        w.write_record([
            p.n0.to_string(),
            p.path.to_string(),
            p.n.to_string(),
            opt_num(p.r2),
            opt_num(p.r3),
            opt_num(p.r3_se),
            opt_num(p.r4),
        ])
        .map_err(err)?;
    }
    w.flush().map_err(|e| io_error(path, e))
}

pub fn to_json<T: Serialize>(value: &T) -> Result<String> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| Error::Io(e.to_string()))?;
    text.push('\n');
    Ok(text)
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut out = BufWriter::new(File::create(path).map_err(|e| io_error(path, e))?);
    out.write_all(to_json(value)?.as_bytes()).map_err(|e| io_error(path, e))?;
    out.flush().map_err(|e| io_error(path, e))
}
