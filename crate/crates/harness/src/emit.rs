//! Result persistence: a full JSON record plus plot-ready CSVs, and the
//! load path that cross-checks stored aggregates against the records.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use crate::config::{Aggregates, ExperimentKind, ExperimentResult};
use crate::experiments::recompute_aggregates;
use crate::{HarnessError, Result};

const CROSS_CHECK_TOL: f64 = 1e-12;

fn write_file(path: &Path, contents: &str) -> Result<()> {
    std::fs::write(path, contents).map_err(|source| HarnessError::Io {
        path: path.to_path_buf(),
        source,
    })
}

pub fn result_json(res: &ExperimentResult) -> String {
    let mut text = serde_json::to_string_pretty(res).expect("result serializes");
    text.push('\n');
    text
}

pub fn trials_csv(res: &ExperimentResult) -> String {
    let mut out = String::new();
    if res.records.is_empty() {
        out.push_str("dim,noise,state_id,L\n");
        for t in &res.theory_records {
            writeln!(out, "{},{},{},{}", t.dim, t.noise, t.state_id, t.l).unwrap();
        }
    } else {
        out.push_str("trial,state_id,model,fidelity,loss,iterations,converged\n");
        for r in &res.records {
            writeln!(
                out,
                "{},{},{},{},{},{},{}",
                r.trial,
                r.state_id,
                r.model.name(),
                r.fidelity,
                r.loss,
                r.iterations,
                r.converged
            )
            .unwrap();
        }
    }
    out
}

pub fn aggregate_csv(res: &ExperimentResult) -> String {
    let mut out = String::new();
    match res.config.experiment {
        ExperimentKind::Sweep => {
            out.push_str("dim,noise,min_L,mean_L,max_L\n");
            for s in &res.aggregates.sweep {
                writeln!(
                    out,
                    "{},{},{},{},{}",
                    s.dim, s.noise, s.min_l, s.mean_l, s.max_l
                )
                .unwrap();
            }
        }
        ExperimentKind::Compare | ExperimentKind::QuditDephasing => {
            out.push_str("state,model,mean_fidelity,supremacy\n");
            for m in &res.aggregates.models {
                let supremacy = match m.state_id {
                    Some(sid) => res
                        .aggregates
                        .supremacy
                        .iter()
                        .find(|s| s.state_id == sid)
                        .map(|s| s.factor),
                    None => res.aggregates.improvement_factor,
                };
                let state = m
                    .state_id
                    .map(|s| s.to_string())
                    .unwrap_or_else(|| "haar".into());
                writeln!(
                    out,
                    "{},{},{},{}",
                    state,
                    m.model.name(),
                    m.mean_fidelity,
                    supremacy.unwrap_or(f64::NAN)
                )
                .unwrap();
            }
        }
    }
    out
}

/// One (x, y_min, y_mean, y_max) file per noise level, x = dimension.
fn plot_csvs(res: &ExperimentResult) -> Vec<(String, String)> {
    let mut files = Vec::new();
    let mut levels: Vec<f64> = Vec::new();
    for s in &res.aggregates.sweep {
        if !levels.contains(&s.noise) {
            levels.push(s.noise);
        }
    }
    for level in levels {
        let mut out = String::from("x,y_min,y_mean,y_max\n");
        for s in res.aggregates.sweep.iter().filter(|s| s.noise == level) {
            writeln!(out, "{},{},{},{}", s.dim, s.min_l, s.mean_l, s.max_l).unwrap();
        }
        files.push((format!("plot_noise_{level}.csv"), out));
    }
    files
}

/// Writes result.json, trials.csv, aggregate.csv, and for sweeps one
/// plot-ready CSV per noise level (for the qudit study, theory.csv with the
/// per-trial theoretical losses). Returns the written paths.
pub fn emit_results(res: &ExperimentResult, dir: &Path) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(dir).map_err(|source| HarnessError::Io {
        path: dir.to_path_buf(),
        source,
    })?;
    let mut written = Vec::new();
    let mut emit = |name: &str, contents: String| -> Result<()> {
        let path = dir.join(name);
        write_file(&path, &contents)?;
        written.push(path);
        Ok(())
    };
    emit("result.json", result_json(res))?;
    emit("trials.csv", trials_csv(res))?;
    emit("aggregate.csv", aggregate_csv(res))?;
    if res.config.experiment == ExperimentKind::Sweep {
        for (name, contents) in plot_csvs(res) {
            emit(&name, contents)?;
        }
    } else if !res.theory_records.is_empty() {
        let mut out = String::from("dim,noise,state_id,L\n");
        for t in &res.theory_records {
            writeln!(out, "{},{},{},{}", t.dim, t.noise, t.state_id, t.l).unwrap();
        }
        emit("theory.csv", out)?;
    }
    Ok(written)
}

fn close(a: f64, b: f64) -> bool {
    (a - b).abs() <= CROSS_CHECK_TOL || (a.is_nan() && b.is_nan())
}

fn aggregates_consistent(stored: &Aggregates, fresh: &Aggregates) -> bool {
    stored.models.len() == fresh.models.len()
        && stored.supremacy.len() == fresh.supremacy.len()
        && stored.sweep.len() == fresh.sweep.len()
        && stored
            .models
            .iter()
            .zip(&fresh.models)
            .all(|(a, b)| {
                a.state_id == b.state_id
                    && a.model == b.model
                    && close(a.mean_fidelity, b.mean_fidelity)
                    && close(a.min_loss, b.min_loss)
                    && close(a.mean_loss, b.mean_loss)
                    && close(a.max_loss, b.max_loss)
                    && close(a.l, b.l)
            })
        && stored
            .supremacy
            .iter()
            .zip(&fresh.supremacy)
            .all(|(a, b)| a.state_id == b.state_id && close(a.factor, b.factor))
        && stored
            .sweep
            .iter()
            .zip(&fresh.sweep)
            .all(|(a, b)| {
                a.dim == b.dim
                    && close(a.noise, b.noise)
                    && close(a.min_l, b.min_l)
                    && close(a.mean_l, b.mean_l)
                    && close(a.max_l, b.max_l)
            })
        && match (stored.improvement_factor, fresh.improvement_factor) {
            (Some(a), Some(b)) => close(a, b),
            (None, None) => true,
            _ => false,
        }
        && match (stored.theory_mean_loss, fresh.theory_mean_loss) {
            (Some(a), Some(b)) => close(a, b),
            (None, None) => true,
            _ => false,
        }
}

/// Loads a result JSON and fails if the stored aggregates disagree with a
/// recomputation from the per-trial records.
pub fn load_results(path: &Path) -> Result<ExperimentResult> {
    let text = std::fs::read_to_string(path).map_err(|source| HarnessError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let res: ExperimentResult =
        serde_json::from_str(&text).map_err(|e| HarnessError::Config(e.to_string()))?;
    let fresh = recompute_aggregates(&res.config, &res.records, &res.theory_records);
    if !aggregates_consistent(&res.aggregates, &fresh) {
        return Err(HarnessError::Numeric(format!(
            "stored aggregates in {} disagree with the per-trial records",
            path.display()
        )));
    }
    Ok(res)
}
