use std::collections::BTreeMap;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use forge_core::forge::{
    build_banded_diagonal, build_large_entries, build_small_entries, build_tridiagonal, BuildState, Halted,
    SeedFamily, StepRecord,
};
use forge_core::seqspace::FinVec;
use forge_core::verify::{
    decay_csv, decay_curves, matrix_csv, matrix_json, verify_basis, EntryGrid, VerificationReport, VerifyOptions,
};
use serde::{Deserialize, Serialize};

use crate::config::{Plan, RunConfig};
use crate::CliError;

pub const STATE_FILE: &str = "state.json";
pub const STEPS_FILE: &str = "steps.jsonl";
pub const REPORT_FILE: &str = "report.json";

/// Everything verification needs besides the operator, which is rebuilt from `config`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StateFile {
    pub config: RunConfig,
    pub basis: Vec<FinVec>,
    pub seeds: SeedFamily,
    pub records: Vec<StepRecord>,
    /// `n ↦ m(n)` for every step that worked on a seed.
    pub assignments: BTreeMap<usize, usize>,
    /// Set when the build stopped early; `basis` then holds the completed prefix.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub halted: Option<String>,
}

impl StateFile {
    fn new(config: &RunConfig, state: BuildState, halted: Option<String>) -> Self {
        let assignments = state.records.iter().filter_map(|r| Some((r.n, r.m?))).collect();
        Self {
            config: config.clone(),
            basis: state.us.vectors,
            seeds: state.seeds,
            records: state.records,
            assignments,
            halted,
        }
    }

    pub fn load(dir: &Path) -> Result<Self, CliError> {
        let path = dir.join(STATE_FILE);
        let text = std::fs::read_to_string(&path)
            .map_err(|e| CliError::Input(format!("cannot read {}: {e}", path.display())))?;
        serde_json::from_str(&text).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))
    }
}

/// Outcome of a successful `build`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BuildSummary {
    pub steps: usize,
    pub report: VerificationReport,
}

pub fn run_plan(config: &RunConfig, plan: &Plan) -> Result<BuildState, Halted> {
    let t = config.operator();
    match plan {
        Plan::Band { lambdas, params } => build_banded_diagonal(&t, lambdas, params),
        Plan::Tridiag {
            lambdas,
            mus,
            nus,
            params,
        } => build_tridiagonal(&t, lambdas, mus, nus, params),
        Plan::Small { a, params } => build_small_entries(&t, a, params),
        Plan::Large { params } => build_large_entries(&t, params),
    }
}

fn write(path: PathBuf, bytes: &[u8]) -> Result<(), CliError> {
    std::fs::write(&path, bytes).map_err(|e| CliError::Input(format!("cannot write {}: {e}", path.display())))
}

fn write_json<T: Serialize>(path: PathBuf, value: &T) -> Result<(), CliError> {
    let mut bytes = serde_json::to_vec_pretty(value).map_err(|e| CliError::Input(e.to_string()))?;
    bytes.push(b'\n');
    write(path, &bytes)
}

fn write_steps(dir: &Path, records: &[StepRecord]) -> Result<(), CliError> {
    let mut buf = Vec::new();
    for r in records {
        serde_json::to_writer(&mut buf, r).map_err(|e| CliError::Input(e.to_string()))?;
        buf.push(b'\n');
    }
    write(dir.join(STEPS_FILE), &buf)
}

fn threads_from_env() -> Option<usize> {
    std::env::var("FORGE_THREADS").ok()?.trim().parse().ok()
}

/// Builds the basis, writes `state.json` and `steps.jsonl`, then verifies into `report.json`.
///
/// A construction failure still writes the completed prefix before returning the error.
pub fn build_run(config: &RunConfig, out: &Path) -> Result<BuildSummary, CliError> {
    let plan = config.plan()?;
    std::fs::create_dir_all(out).map_err(|e| CliError::Input(format!("cannot create {}: {e}", out.display())))?;
    let (state, halted) = match run_plan(config, &plan) {
        Ok(s) => (s, None),
        Err(h) => (*h.partial, Some(h.error)),
    };
    write_steps(out, &state.records)?;
    let file = StateFile::new(config, state, halted.as_ref().map(|e| e.to_string()));
    write_json(out.join(STATE_FILE), &file)?;
    if let Some(e) = halted {
        return Err(CliError::Forge {
            step: e.step(),
            message: e.to_string(),
        });
    }
    let report = verify_state(&file, &plan)?;
    write_json(out.join(REPORT_FILE), &report)?;
    Ok(BuildSummary {
        steps: file.basis.len(),
        report,
    })
}

fn verify_state(file: &StateFile, plan: &Plan) -> Result<VerificationReport, CliError> {
    let t = file.config.operator();
    Ok(verify_basis(
        &t,
        &file.basis,
        &file.seeds,
        &file.records,
        &plan.claims(&t),
        VerifyOptions {
            threads: threads_from_env(),
        },
    ))
}

/// Re-verifies a run directory from `state.json` alone and rewrites `report.json`.
pub fn verify_run(dir: &Path) -> Result<VerificationReport, CliError> {
    let file = StateFile::load(dir)?;
    let plan = file.config.plan()?;
    let report = verify_state(&file, &plan)?;
    write_json(dir.join(REPORT_FILE), &report)?;
    Ok(report)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, clap::ValueEnum)]
pub enum ExportFormat {
    Csv,
    Json,
}

/// Writes the leading `size × size` matrix block and the seed decay curves.
pub fn export_run(dir: &Path, format: ExportFormat, size: usize) -> Result<Vec<PathBuf>, CliError> {
    let file = StateFile::load(dir)?;
    if size > file.basis.len() {
        return Err(CliError::Input(format!(
            "size {size} exceeds the {} constructed vectors",
            file.basis.len()
        )));
    }
    let t = file.config.operator();
    let grid = EntryGrid::compute(&t, &file.basis[..size]);
    let curves = decay_curves(&file.basis, &file.seeds, &file.records);
    let paths = match format {
        ExportFormat::Csv => {
            let (m, d) = (dir.join("matrix.csv"), dir.join("decay.csv"));
            write(m.clone(), matrix_csv(&grid, size).as_bytes())?;
            write(d.clone(), decay_csv(&curves).as_bytes())?;
            vec![m, d]
        }
        ExportFormat::Json => {
            let m = dir.join("matrix.json");
            let decay: Vec<_> = curves
                .iter()
                .map(|(n, m, r)| serde_json::json!({"n": n, "m": m, "residual_norm": r}))
                .collect();
            let mut doc = matrix_json(&grid, size);
            doc["decay"] = serde_json::Value::Array(decay);
            write_json(m.clone(), &doc)?;
            vec![m]
        }
    };
    Ok(paths)
}

/// Prints one JSON line to stdout.
pub fn emit(value: &serde_json::Value) {
    let mut out = std::io::stdout().lock();
    let _ = writeln!(out, "{value}");
}
