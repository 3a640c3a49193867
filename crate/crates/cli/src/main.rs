use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use hqe::ergodicity_lab::{run_experiment, ExperimentConfig, ExperimentReport};
use hqe::transforms::CACHE_ENV;

/// Experiments on products of hyperbolic planes.
#[derive(Parser)]
#[command(name = "hqe", version)]
struct Cli {
    /// Directory for cached mollifier tables.
    #[arg(long, global = true, env = CACHE_ENV)]
    cache_dir: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run an experiment config; exits 0 iff every assertion passes.
    Run {
        config: PathBuf,
        /// JSON report path (overrides the config's output.json).
        #[arg(long)]
        json: Option<PathBuf>,
        /// CSV extract path (overrides the config's output.csv).
        #[arg(long)]
        csv: Option<PathBuf>,
    },
    /// Check a config against the schema and print its hash.
    Validate { config: PathBuf },
    /// Re-emit a JSON report; exits 0 iff the report passes.
    Report {
        results: PathBuf,
        #[arg(long, value_enum, default_value_t = Format::Json)]
        format: Format,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Csv,
    Json,
}

/// Exit status for unusable input, distinct from failed assertions.
const USAGE_ERROR: u8 = 2;

fn write_file(path: &Path, text: &str) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    }
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

fn summarize(report: &ExperimentReport) {
    let failed: Vec<_> = report.records.iter().filter(|r| !r.passed()).collect();
    for rec in &failed {
        let params = serde_json::to_string(&rec.params).unwrap_or_default();
        match &rec.error {
            Some(e) => eprintln!("FAIL {params}: {e}"),
            None => {
                for m in rec.metrics.iter().filter(|m| m.pass == Some(false)) {
                    eprintln!(
                        "FAIL {params}: {} = {} (tolerance {})",
                        m.name,
                        m.value.map_or("non-finite".to_string(), |v| format!("{v:.6e}")),
                        m.tolerance.map_or(String::new(), |t| format!("{t:e}"))
                    );
                }
            }
        }
    }
    eprintln!(
        "{}: {}/{} records pass",
        report.experiment_id,
        report.records.len() - failed.len(),
        report.records.len()
    );
}

fn run(cli: Cli) -> Result<ExitCode> {
    if let Some(dir) = &cli.cache_dir {
        log::debug!("mollifier cache at {}", dir.display());
        std::env::set_var(CACHE_ENV, dir);
    }
    match cli.command {
        Command::Validate { config } => match ExperimentConfig::load(&config) {
            Ok(cfg) => {
                println!("ok {} kind={} hash={}", cfg.experiment_id(), cfg.kind, cfg.hash());
                Ok(ExitCode::SUCCESS)
            }
            Err(e) => {
                eprintln!("{}: {e}", config.display());
                Ok(ExitCode::from(USAGE_ERROR))
            }
        },
        Command::Run { config, json, csv } => {
            let cfg = match ExperimentConfig::load(&config) {
                Ok(c) => c,
                Err(e) => {
                    eprintln!("{}: {e}", config.display());
                    return Ok(ExitCode::from(USAGE_ERROR));
                }
            };
            log::info!("running {} ({})", cfg.experiment_id(), cfg.kind);
            let report = run_experiment(&cfg)?;
            if let Some(path) = json.or(cfg.output.json.clone()) {
                write_file(&path, &report.to_json())?;
            }
            if let Some(path) = csv.or(cfg.output.csv.clone()) {
                write_file(&path, &report.to_csv())?;
            }
            summarize(&report);
            Ok(if report.passed() { ExitCode::SUCCESS } else { ExitCode::FAILURE })
        }
        Command::Report { results, format } => {
            let text = fs::read_to_string(&results).with_context(|| format!("reading {}", results.display()))?;
            let report = match ExperimentReport::from_json(&text) {
                Ok(r) => r,
                Err(e) => {
                    eprintln!("{}: {e}", results.display());
                    return Ok(ExitCode::from(USAGE_ERROR));
                }
            };
            let out = match format {
                Format::Csv => report.to_csv(),
                Format::Json => report.to_json() + "\n",
            };
            std::io::stdout().write_all(out.as_bytes())?;
            Ok(if report.passed() { ExitCode::SUCCESS } else { ExitCode::FAILURE })
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(USAGE_ERROR)
        }
    }
}
