//! CSV, JSON and plot-data emission plus `[assert]` evaluation.
//!
//! CSV schema (version 1), one row per task sorted by `run_id`:
//!
//! `run_id, family, k, lambda, mu, rho, D, eps, algorithm, T, eps_star,
//! moreau_grad_surrogate, moreau_grad_true, certified, regime, wall_ms, seed,
//! config_hash, module_versions`
//!
//! Floats use the shortest round-trip decimal form; absent values are empty.
//! `wall_ms` stays empty unless timing is requested.

use std::fs;
use std::path::{Path, PathBuf};

use sha2::{Digest, Sha256};

use crate::config::{AssertConfig, ExperimentConfig};
use crate::runner::{Command, Outcome, RunRecord};
use crate::CliError;

pub const CSV_SCHEMA_VERSION: u32 = 1;

pub const CSV_HEADER: [&str; 19] = [
    "run_id",
    "family",
    "k",
    "lambda",
    "mu",
    "rho",
    "D",
    "eps",
    "algorithm",
    "T",
    "eps_star",
    "moreau_grad_surrogate",
    "moreau_grad_true",
    "certified",
    "regime",
    "wall_ms",
    "seed",
    "config_hash",
    "module_versions",
];

pub fn module_versions() -> String {
    format!("fosp-core={};fosp-cli={};csv-schema={CSV_SCHEMA_VERSION}", fosp_core::VERSION, env!("CARGO_PKG_VERSION"))
}

/// First 16 hex digits of SHA-256 over the command and the canonical JSON form
/// of the effective config (seed included).
pub fn config_hash(cmd: Command, cfg: &ExperimentConfig) -> String {
    let body = serde_json::to_string(cfg).expect("config serializes");
    let mut h = Sha256::new();
    h.update(cmd.name().as_bytes());
    h.update(b"\n");
    h.update(body.as_bytes());
    h.finalize().iter().take(8).map(|b| format!("{b:02x}")).collect()
}

fn fmt_opt<T: ToString>(v: Option<T>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

/// The CSV file contents.
pub fn csv_bytes(out: &Outcome) -> Result<Vec<u8>, CliError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let io = |e: csv::Error| CliError::Io(e.to_string());
    w.write_record(CSV_HEADER).map_err(io)?;
    let versions = module_versions();
    for rec in &out.records {
        let r = &rec.row;
        w.write_record([
            r.run_id.clone(),
            r.family.clone(),
            fmt_opt(r.k),
            fmt_opt(r.lambda),
            fmt_opt(r.mu),
            fmt_opt(r.rho),
            fmt_opt(r.d),
            fmt_opt(r.eps),
            r.algorithm.clone(),
            fmt_opt(r.t),
            fmt_opt(r.eps_star),
            fmt_opt(r.moreau_grad_surrogate),
            fmt_opt(r.moreau_grad_true),
            r.certified.to_string(),
            r.regime.clone(),
            fmt_opt(r.wall_ms),
            r.seed.to_string(),
            out.config_hash.clone(),
            versions.clone(),
        ])
        .map_err(io)?;
    }
    w.into_inner().map_err(|e| CliError::Io(e.to_string()))
}

/// Plot-data file: `t, eps_t, phi_hat, cumulative_calls`.
pub fn plot_bytes(rec: &RunRecord) -> Option<Vec<u8>> {
    let rows = rec.plot.as_ref()?;
    let mut s = String::from("t,eps_t,phi_hat,cumulative_calls\n");
    for (t, e, v, c) in rows {
        s.push_str(&format!("{t},{e},{v},{c}\n"));
    }
    Some(s.into_bytes())
}

/// Paths written by [`write_outputs`].
#[derive(Debug, Clone)]
pub struct Written {
    pub csv: PathBuf,
    pub runs_dir: PathBuf,
    pub plots_dir: Option<PathBuf>,
}

fn write(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    fs::write(path, bytes).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
}

fn mkdir(path: &Path) -> Result<(), CliError> {
    fs::create_dir_all(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
}

/// Writes `<out>/<name>.csv`, `<out>/runs/<name>/<run_id>.json` and, for solver
/// runs, `<out>/plots/<name>/<run_id>.csv`. Failed tasks get `<run_id>.error.json`.
pub fn write_outputs(out: &Outcome, out_dir: &Path) -> Result<Written, CliError> {
    mkdir(out_dir)?;
    let csv = out_dir.join(format!("{}.csv", out.name));
    write(&csv, &csv_bytes(out)?)?;
    let runs_dir = out_dir.join("runs").join(&out.name);
    mkdir(&runs_dir)?;
    let mut plots_dir = None;
    for rec in &out.records {
        let body = serde_json::to_vec_pretty(&rec.detail).map_err(|e| CliError::Io(e.to_string()))?;
        write(&runs_dir.join(format!("{}.json", rec.row.run_id)), &body)?;
        if let Some(bytes) = plot_bytes(rec) {
            let dir = plots_dir.get_or_insert_with(|| out_dir.join("plots").join(&out.name));
            mkdir(dir)?;
            write(&dir.join(format!("{}.csv", rec.row.run_id)), &bytes)?;
        }
    }
    for f in &out.failures {
        let body = serde_json::json!({
            "run_id": f.run_id,
            "seed": f.seed,
            "config_hash": out.config_hash,
            "error": f.error.to_string(),
            "exit_code": f.error.exit_code(),
            "best_iterate": f.best,
        });
        let body = serde_json::to_vec_pretty(&body).map_err(|e| CliError::Io(e.to_string()))?;
        write(&runs_dir.join(format!("{}.error.json", f.run_id)), &body)?;
    }
    Ok(Written { csv, runs_dir, plots_dir })
}

/// Names and reasons of the assertions that fail on `records`.
pub fn check_assertions(a: &AssertConfig, records: &[RunRecord]) -> Vec<String> {
    let mut failed = Vec::new();
    let mut all = |name: &str, want: Option<bool>, get: &dyn Fn(&RunRecord) -> Option<bool>| {
        let Some(want) = want else { return };
        let bad: Vec<&str> = records.iter().filter(|r| get(r) != Some(want)).map(|r| r.row.run_id.as_str()).collect();
        if !bad.is_empty() {
            failed.push(format!("{name} = {want}: {} of {} rows fail (first {})", bad.len(), records.len(), bad[0]));
        }
    };
    all("all_certified", a.all_certified, &|r| Some(r.row.certified));
    all("all_surrogate_stationary", a.all_surrogate_stationary, &|r| r.checks.surrogate_stationary);
    all("all_true_violation", a.all_true_violation, &|r| r.checks.true_violation);
    all("all_separate", a.all_separate, &|r| r.checks.separates);
    all("all_cross_checked", a.all_cross_checked, &|r| r.checks.cross_checked);
    all("all_bracketed", a.all_bracketed, &|r| r.checks.bracketed);
    all("all_admissible", a.all_admissible, &|r| r.checks.admissible);
    all("all_telescoping", a.all_telescoping, &|r| r.checks.telescoping);
    all("no_warnings", a.no_warnings, &|r| Some(r.checks.warnings == 0));
    let mut bound = |name: &str, cap: Option<f64>, get: &dyn Fn(&RunRecord) -> Option<f64>| {
        let Some(cap) = cap else { return };
        let bad: Vec<&str> =
            records.iter().filter(|r| !get(r).is_some_and(|v| v <= cap)).map(|r| r.row.run_id.as_str()).collect();
        if !bad.is_empty() {
            failed.push(format!("{name} = {cap}: {} of {} rows exceed it (first {})", bad.len(), records.len(), bad[0]));
        }
    };
    bound("max_eps_star", a.max_eps_star, &|r| r.row.eps_star);
    bound("max_moreau_grad_true", a.max_moreau_grad_true, &|r| r.row.moreau_grad_true);
    if let Some(n) = a.min_certified {
        let got = records.iter().filter(|r| r.row.certified).count();
        if got < n {
            failed.push(format!("min_certified = {n}: only {got} of {} rows certified", records.len()));
        }
    }
    failed
}
