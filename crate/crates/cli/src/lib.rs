//! Batch runner for fluxcouple experiments.
//!
//! A run reads one JSON document, executes the named experiment at every
//! sweep point and writes `<prefix>.result.json` and `<prefix>.series.csv`.
//! See `docs/config.md` for the schema.

pub mod config;
pub mod error;
pub mod experiments;
pub mod format;

use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde_json::{json, Value};

pub use config::{ExperimentConfig, Kind};
pub use error::CliError;

use config::typed;
use experiments::Outcome;
use format::{Cell, Table};

fn run_point(kind: Kind, doc: &Value) -> Result<Outcome, CliError> {
    let exp = |r: fluxcouple::Result<Outcome>| {
        r.map_err(|source| CliError::Experiment { index: 0, source })
    };
    match kind {
        Kind::Extract => exp(experiments::extract(&typed(doc)?)),
        Kind::Evolve => exp(experiments::evolve(&typed(doc)?)),
        Kind::Calibrate => exp(experiments::calibrate_target(&typed(doc)?)),
        Kind::Cool => exp(experiments::cool(&typed(doc)?)),
        Kind::Readout => exp(experiments::readout(&typed(doc)?)),
        Kind::Multilevel => exp(experiments::multilevel(&typed(doc)?)),
    }
}

/// Rendered output documents of one run.
#[derive(Clone, Debug, PartialEq)]
pub struct RunOutput {
    pub json: String,
    pub csv: String,
}

/// Runs every sweep point on up to `jobs` threads (`0` picks the core
/// count). Rows and points are ordered by sweep index.
pub fn execute(cfg: &ExperimentConfig, jobs: usize) -> Result<RunOutput, CliError> {
    let docs = (0..cfg.point_count()).map(|i| cfg.point(i)).collect::<Result<Vec<_>, _>>()?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(|e| CliError::schema("jobs", e.to_string()))?;
    let outcomes: Vec<Result<Outcome, CliError>> = pool.install(|| {
        docs.par_iter()
            .enumerate()
            .map(|(i, d)| {
                run_point(cfg.kind, d).map_err(|e| match e {
                    CliError::Experiment { source, .. } => CliError::Experiment { index: i, source },
                    other => other,
                })
            })
            .collect()
    });
    let outcomes = outcomes.into_iter().collect::<Result<Vec<_>, _>>()?;
    Ok(render(cfg, &outcomes))
}

fn render(cfg: &ExperimentConfig, outcomes: &[Outcome]) -> RunOutput {
    let mut warnings: Vec<String> = Vec::new();
    for o in outcomes {
        for w in &o.warnings {
            if !warnings.contains(w) {
                warnings.push(w.clone());
            }
        }
    }
    let points: Vec<Value> = outcomes
        .iter()
        .enumerate()
        .map(|(i, o)| {
            json!({
                "index": i,
                "sweep_value": cfg.sweep_value(i),
                "warnings": o.warnings,
                "result": o.result,
            })
        })
        .collect();
    let doc = json!({
        "tool": "fluxcouple",
        "version": env!("CARGO_PKG_VERSION"),
        "kind": cfg.kind.name(),
        "config_hash": cfg.hash(),
        "warnings": warnings,
        "sweep": cfg.sweep.as_ref().map(|s| json!({"path": s.path, "values": s.values})),
        "points": points,
    });

    let table = match &cfg.sweep {
        None => outcomes[0].table.clone(),
        Some(s) => {
            let mut columns = vec!["sweep_index".to_string(), s.path.clone()];
            columns.extend(outcomes[0].table.columns.iter().cloned());
            let mut t = Table {
                columns,
                rows: Vec::new(),
            };
            for (i, o) in outcomes.iter().enumerate() {
                for row in &o.table.rows {
                    let mut r: Vec<Cell> = vec![i.into(), s.values[i].into()];
                    r.extend(row.iter().cloned());
                    t.push(r);
                }
            }
            t
        }
    };
    let mut csv = format!("# config_hash={}\n", cfg.hash());
    for w in &warnings {
        csv.push_str(&format!("# warning: {w}\n"));
    }
    csv.push_str(&table.to_csv());
    RunOutput {
        json: format::to_json(&doc),
        csv,
    }
}

/// `<dir>/<prefix>` with the prefix taken from the document or, failing
/// that, from the config file name.
pub fn output_prefix(cfg: &ExperimentConfig, config_path: &Path, out_dir: Option<&Path>) -> PathBuf {
    let prefix = match &cfg.output {
        Some(p) => PathBuf::from(p),
        None => PathBuf::from(config_path.file_stem().unwrap_or_else(|| "experiment".as_ref())),
    };
    match out_dir {
        Some(d) => d.join(prefix),
        None => prefix,
    }
}

fn with_suffix(prefix: &Path, suffix: &str) -> PathBuf {
    let mut s = prefix.as_os_str().to_owned();
    s.push(suffix);
    PathBuf::from(s)
}

/// Reads, runs and writes; returns the result and series paths.
pub fn run_file(config_path: &Path, jobs: usize, out_dir: Option<&Path>) -> Result<(PathBuf, PathBuf), CliError> {
    let text = fs::read_to_string(config_path).map_err(|e| CliError::io(config_path, e))?;
    let cfg = ExperimentConfig::parse(&text)?;
    let out = execute(&cfg, jobs)?;
    let prefix = output_prefix(&cfg, config_path, out_dir);
    if let Some(parent) = prefix.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent).map_err(|e| CliError::io(parent, e))?;
    }
    let json_path = with_suffix(&prefix, ".result.json");
    let csv_path = with_suffix(&prefix, ".series.csv");
    fs::write(&json_path, &out.json).map_err(|e| CliError::io(&json_path, e))?;
    fs::write(&csv_path, &out.csv).map_err(|e| CliError::io(&csv_path, e))?;
    Ok((json_path, csv_path))
}
