mod args;
mod commands;
mod table;

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use anyhow::{Context, Result};
use clap::Parser;
use serde::Serialize;
use spincat::experiments::{Execution, ScanOptions};

use args::{resolve, Cli, Command, Format, RunConfig};
use commands::Output;

const EXIT_RUNTIME: u8 = 1;
const EXIT_INVALID: u8 = 2;
const EXIT_VERIFY: u8 = 3;

#[derive(Serialize)]
struct Manifest<'a> {
    subcommand: &'a str,
    version: &'a str,
    status: &'a str,
    #[serde(skip_serializing_if = "Option::is_none")]
    error: Option<String>,
    parameters: serde_json::Value,
    duration_seconds: f64,
    outputs: Vec<PathBuf>,
    interpretation: BTreeMap<&'static str, String>,
}

fn manifest_path(out: &Path) -> PathBuf {
    let mut s = out.as_os_str().to_owned();
    s.push(".manifest.json");
    PathBuf::from(s)
}

fn write_file(path: &Path, contents: &str) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).with_context(|| format!("cannot create {}", dir.display()))?;
    }
    fs::write(path, contents).with_context(|| format!("cannot write {}", path.display()))
}

fn with_pool<T: Send>(threads: Option<usize>, f: impl FnOnce() -> T + Send) -> Result<T> {
    match threads {
        Some(k) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(k)
                .build()
                .context("cannot start worker pool")?;
            Ok(pool.install(f))
        }
        None => Ok(f()),
    }
}

fn run_experiment(command: &Command, cfg: &RunConfig) -> Result<(Output, Vec<PathBuf>)> {
    let opts = ScanOptions {
        exec: Execution::Parallel,
        mu: cfg.mu,
    };
    let output = with_pool(cfg.threads, || match command {
        Command::UltimateBound(_) => commands::ultimate_bound(cfg, &opts),
        Command::ReadoutScan(_) => commands::readout_scan(cfg, &opts),
        Command::Scaling(_) => commands::scaling(cfg, &opts),
        Command::DetectionNoise(_) => commands::detection_noise(cfg, &opts),
        Command::Dephasing(_) => commands::dephasing(cfg, &opts),
        Command::Verify(_) => unreachable!("verify has its own runner"),
    })??;
    let data = match cfg.format {
        Format::Csv => table::to_csv(&output.rows),
        Format::Json => table::to_json(&output.rows),
    };
    write_file(&cfg.out, &data)?;
    let mut written = vec![cfg.out.clone()];
    if let Some(svg) = &cfg.svg {
        write_file(svg, &output.plot.to_svg())?;
        written.push(svg.clone());
    }
    Ok((output, written))
}

fn run_verify(cfg: &RunConfig, explicit_out: bool) -> Result<(bool, Vec<PathBuf>)> {
    let reports = with_pool(cfg.threads, commands::verify)?;
    let mut all = true;
    for r in &reports {
        println!("{} {}: {}", if r.passed { "PASS" } else { "FAIL" }, r.name, r.detail);
        all &= r.passed;
    }
    let mut written = Vec::new();
    if explicit_out {
        let json: Vec<_> = reports
            .iter()
            .map(|r| serde_json::json!({ "name": r.name, "passed": r.passed, "detail": r.detail }))
            .collect();
        write_file(&cfg.out, &(serde_json::to_string_pretty(&json)? + "\n"))?;
        written.push(cfg.out.clone());
    }
    Ok((all, written))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let command = cli.command;
    let name = command.name();
    let start = Instant::now();
    let flags = command.flags();

    let fallback_out = flags
        .out
        .clone()
        .unwrap_or_else(|| PathBuf::from(format!("{name}.csv")));
    let is_verify = matches!(command, Command::Verify(_));

    let finish = |status: &str,
                  error: Option<String>,
                  parameters: serde_json::Value,
                  out: &Path,
                  outputs: Vec<PathBuf>,
                  interpretation: BTreeMap<&'static str, String>| {
        if is_verify && flags.out.is_none() {
            return;
        }
        let manifest = Manifest {
            subcommand: name,
            version: env!("CARGO_PKG_VERSION"),
            status,
            error,
            parameters,
            duration_seconds: start.elapsed().as_secs_f64(),
            outputs,
            interpretation,
        };
        let text = serde_json::to_string_pretty(&manifest).unwrap_or_default() + "\n";
        if let Err(e) = write_file(&manifest_path(out), &text) {
            eprintln!("error: {e:#}");
        }
    };

    let cfg = match resolve(&command) {
        Ok(cfg) => cfg,
        Err(e) => {
            eprintln!("error: {e:#}");
            let echo = serde_json::json!({ "raw_flags": format!("{flags:?}") });
            finish("invalid_arguments", Some(format!("{e:#}")), echo, &fallback_out, vec![], BTreeMap::new());
            return ExitCode::from(EXIT_INVALID);
        }
    };
    let params = serde_json::to_value(&cfg).unwrap_or(serde_json::Value::Null);

    if is_verify {
        return match run_verify(&cfg, flags.out.is_some()) {
            Ok((passed, written)) => {
                let status = if passed { "ok" } else { "verification_failed" };
                finish(status, None, params, &cfg.out, written, BTreeMap::new());
                if passed {
                    ExitCode::SUCCESS
                } else {
                    ExitCode::from(EXIT_VERIFY)
                }
            }
            Err(e) => {
                eprintln!("error: {e:#}");
                finish("runtime_error", Some(format!("{e:#}")), params, &cfg.out, vec![], BTreeMap::new());
                ExitCode::from(EXIT_RUNTIME)
            }
        };
    }

    match run_experiment(&command, &cfg) {
        Ok((output, written)) => {
            eprintln!("wrote {} rows to {}", output.rows.len(), cfg.out.display());
            finish("ok", None, params, &cfg.out, written, output.interpretation);
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            finish("runtime_error", Some(format!("{e:#}")), params, &cfg.out, vec![], BTreeMap::new());
            ExitCode::from(EXIT_RUNTIME)
        }
    }
}
