//! Runs every level of a study and writes the report files.

use crate::config::{Mode, StudyConfig};
use fdcg::problems::builtin;
use fdcg::stepper::{run_with_partial, RunConfig};
use fdcg::studies::{projection_error, tracking_error};
use fdcg::Error;
use rayon::prelude::*;
use serde_json::{json, Value};
use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

#[derive(Debug, thiserror::Error)]
pub enum StudyError {
    #[error("{0}")]
    Config(String),
    #[error("cannot write {path}: {source}")]
    Output { path: PathBuf, source: std::io::Error },
    #[error("{failed} of {total} levels failed:\n{summary}")]
    Numerical { failed: usize, total: usize, summary: String },
}

/// Outcome of one level.
pub struct LevelOutcome {
    pub index: usize,
    pub h: f64,
    pub tau: f64,
    /// Error measure of the rate table (`e^N`, tracking sup error or Ritz
    /// `L²` error, by mode).
    pub error: Option<f64>,
    pub report: Value,
    pub failure: Option<Error>,
    snapshots: Vec<(f64, fdcg::MarkerCurve)>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RateRow {
    pub h: f64,
    pub tau: f64,
    pub e_n: f64,
    /// `log2(e_prev / e)`; none on the first row.
    pub rate: Option<f64>,
}

pub struct StudyOutput {
    pub rates: Vec<RateRow>,
    pub files: Vec<PathBuf>,
}

fn run_level(cfg: &StudyConfig, index: usize) -> LevelOutcome {
    let rc: RunConfig = cfg.level_config(index);
    let problem = builtin(&cfg.problem).expect("problem validated at parse time");
    let mut out = LevelOutcome { index, h: rc.h, tau: rc.tau, error: None, report: Value::Null, failure: None, snapshots: Vec::new() };
    let header = json!({ "level": index, "mode": cfg.mode.as_str(), "problem": cfg.problem, "h": rc.h, "tau": rc.tau, "eta": rc.eta });
    let body = match cfg.mode {
        Mode::Solve | Mode::Converge => {
            let (report, failure) = run_with_partial(problem.as_ref(), &rc);
            out.error = report.e_n;
            out.failure = failure;
            out.snapshots = report.snapshots.clone();
            json!({ "run": report })
        }
        Mode::Track => match tracking_error(problem.as_ref(), &rc) {
            Ok(r) => {
                out.error = Some(r.sup_error);
                json!({ "tracking": r })
            }
            Err(e) => {
                let v = json!({ "failure": e.to_string() });
                out.failure = Some(e);
                v
            }
        },
        Mode::Project => match projection_error(problem.as_ref(), &rc) {
            Ok(r) => {
                out.error = Some(r.l2_error);
                json!({ "projection": r })
            }
            Err(e) => {
                let v = json!({ "failure": e.to_string() });
                out.failure = Some(e);
                v
            }
        },
        Mode::Validate => Value::Null,
    };
    out.report = json!({ "level": header, "result": body, "config": cfg.to_config_string() });
    out
}

/// Consecutive `log2` ratios over the levels that produced an error value.
pub fn rate_table(levels: &[LevelOutcome]) -> Vec<RateRow> {
    let mut rows: Vec<RateRow> = Vec::new();
    for l in levels {
        let Some(e) = l.error else { continue };
        let rate = rows.last().map(|p| (p.e_n / e).log2());
        rows.push(RateRow { h: l.h, tau: l.tau, e_n: e, rate });
    }
    rows
}

fn create(path: &Path) -> Result<BufWriter<fs::File>, StudyError> {
    fs::File::create(path).map(BufWriter::new).map_err(|source| StudyError::Output { path: path.to_path_buf(), source })
}

fn io_err(path: &Path) -> impl Fn(std::io::Error) -> StudyError + '_ {
    move |source| StudyError::Output { path: path.to_path_buf(), source }
}

fn write_rates(path: &Path, rows: &[RateRow]) -> Result<(), StudyError> {
    let mut w = create(path)?;
    let mut body = String::from("h,tau,eN,rate\n");
    for r in rows {
        let rate = r.rate.map(|x| format!("{x:.4}")).unwrap_or_default();
        body.push_str(&format!("{:e},{:e},{:e},{rate}\n", r.h, r.tau, r.e_n));
    }
    w.write_all(body.as_bytes()).and_then(|_| w.flush()).map_err(io_err(path))
}

/// Runs all levels (concurrently) and writes `rates.csv`,
/// `report_<level>.json` and, for solver runs, `snapshot_<t>.csv` of the
/// finest level. Files of completed levels are kept when another fails.
pub fn run_study(cfg: &StudyConfig) -> Result<StudyOutput, StudyError> {
    if cfg.mode == Mode::Validate {
        return Ok(StudyOutput { rates: Vec::new(), files: Vec::new() });
    }
    let dir = &cfg.out;
    fs::create_dir_all(dir).map_err(io_err(dir))?;
    let outcomes: Vec<LevelOutcome> = (0..cfg.levels.len()).into_par_iter().map(|i| run_level(cfg, i)).collect();

    let mut files = Vec::new();
    for o in &outcomes {
        let path = dir.join(format!("report_{}.json", o.index));
        let mut w = create(&path)?;
        serde_json::to_writer_pretty(&mut w, &o.report).map_err(|e| StudyError::Output { path: path.clone(), source: e.into() })?;
        writeln!(w).and_then(|_| w.flush()).map_err(io_err(&path))?;
        files.push(path);
    }
    let rates = rate_table(&outcomes);
    let path = dir.join("rates.csv");
    write_rates(&path, &rates)?;
    files.push(path);
    if let Some(finest) = outcomes.last() {
        for (t, curve) in &finest.snapshots {
            let path = dir.join(format!("snapshot_{t}.csv"));
            let mut w = create(&path)?;
            curve.write_csv(&mut w, 16).and_then(|_| w.flush()).map_err(io_err(&path))?;
            files.push(path);
        }
    }

    let failures: Vec<&LevelOutcome> = outcomes.iter().filter(|o| o.failure.is_some()).collect();
    if failures.is_empty() {
        return Ok(StudyOutput { rates, files });
    }
    if let Some(Error::Config(msg)) = failures.iter().find_map(|o| o.failure.as_ref().filter(|e| matches!(e, Error::Config(_)))) {
        return Err(StudyError::Config(msg.clone()));
    }
    let summary = failures
        .iter()
        .map(|o| format!("  level {} (h = {}, tau = {}): {}", o.index, o.h, o.tau, o.failure.as_ref().unwrap()))
        .collect::<Vec<_>>()
        .join("\n");
    Err(StudyError::Numerical { failed: failures.len(), total: outcomes.len(), summary })
}
