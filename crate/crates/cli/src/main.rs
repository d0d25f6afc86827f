use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use forge_cli::config::RunConfig;
use forge_cli::run::{build_run, emit, export_run, verify_run, ExportFormat};
use forge_cli::CliError;
use forge_core::verify::VerificationReport;
use serde_json::json;

/// Build orthonormal bases with prescribed matrix structure, verify them, export matrices.
#[derive(Parser)]
#[command(name = "forge", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a construction and write a run directory.
    Build {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Recheck a run directory from its state file.
    Verify {
        #[arg(long)]
        run: PathBuf,
    },
    /// Write the leading matrix block and the seed decay curves.
    Export {
        #[arg(long)]
        run: PathBuf,
        #[arg(long, value_enum)]
        format: ExportFormat,
        #[arg(long)]
        size: usize,
    },
}

fn failed_checks(r: &VerificationReport) -> Vec<&str> {
    r.checks.iter().filter(|c| !c.pass).map(|c| c.name.as_str()).collect()
}

fn audit(command: &str, r: VerificationReport, extra: serde_json::Value) -> Result<serde_json::Value, CliError> {
    if r.pass {
        let mut v = json!({"status": "ok", "command": command, "pass": true});
        if let (Some(o), Some(e)) = (v.as_object_mut(), extra.as_object()) {
            o.extend(e.clone());
        }
        Ok(v)
    } else {
        Err(CliError::Audit(failed_checks(&r).join(", ")))
    }
}

fn run(cli: Cli) -> Result<serde_json::Value, CliError> {
    match cli.command {
        Command::Build { config, out } => {
            let cfg = RunConfig::load(&config)?;
            let s = build_run(&cfg, &out)?;
            audit("build", s.report, json!({"steps": s.steps, "out": out}))
        }
        Command::Verify { run } => {
            let r = verify_run(&run)?;
            let checks = r.checks.len();
            audit("verify", r, json!({"checks": checks}))
        }
        Command::Export { run, format, size } => {
            let paths = export_run(&run, format, size)?;
            Ok(json!({"status": "ok", "command": "export", "size": size, "files": paths}))
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) if !e.use_stderr() => {
            // --help and --version
            let _ = e.print();
            emit(&json!({"status": "ok", "command": "help"}));
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let _ = e.print();
            emit(&json!({"status": "error", "kind": "usage", "message": e.kind().to_string()}));
            return ExitCode::from(2);
        }
    };
    match run(cli) {
        Ok(v) => {
            emit(&v);
            ExitCode::SUCCESS
        }
        Err(e) => {
            let mut v = json!({"status": "error", "kind": e.kind(), "message": e.to_string()});
            if let CliError::Forge { step, .. } = &e {
                eprintln!("construction halted at step {step}: {e}");
                v["step"] = json!(step);
            } else {
                eprintln!("{e}");
            }
            emit(&v);
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
