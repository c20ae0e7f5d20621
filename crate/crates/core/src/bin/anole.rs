use std::io::Write;
use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use anole::harness::{run_matrix, ExperimentConfig, MatrixReport, SweepGrid};
use anole::selftest::run_selftest;
use anole::Error;

#[derive(Parser)]
#[command(name = "anole", version, about = "Error-tolerant task inference from noisy preferences")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one experiment config and print its CSV row.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// CSV destination; overrides the config's `output`.
        #[arg(long)]
        output: Option<PathBuf>,
        #[arg(long, default_value_t = default_threads())]
        parallelism: usize,
        /// Write every episode result as JSON lines to this file.
        #[arg(long)]
        trace: Option<PathBuf>,
    },
    /// Run a grid of cells.
    Sweep {
        #[arg(long)]
        grid: PathBuf,
        #[arg(long)]
        output: Option<PathBuf>,
        #[arg(long, default_value_t = default_threads())]
        parallelism: usize,
    },
    /// Start the interactive session service.
    Serve {
        #[arg(long, default_value = "127.0.0.1:8080")]
        addr: SocketAddr,
    },
    /// Run the quick property suite.
    Selftest {
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

fn default_threads() -> usize {
    std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1)
}

fn exit_for(err: &Error) -> ExitCode {
    match err {
        Error::Config(_) => ExitCode::from(1),
        _ => ExitCode::from(2),
    }
}

fn write_out(path: Option<&Path>, text: &str) -> Result<(), Error> {
    match path {
        Some(p) => std::fs::write(p, text).map_err(|e| Error::Config(format!("{}: {e}", p.display()))),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn write_trace(path: &Path, report: &MatrixReport) -> Result<(), Error> {
    let io = |e: std::io::Error| Error::Config(format!("{}: {e}", path.display()));
    let mut file = std::io::BufWriter::new(std::fs::File::create(path).map_err(io)?);
    for (cell, results) in report.episodes.iter().enumerate() {
        for (episode, r) in results.iter().enumerate() {
            let line = serde_json::json!({ "cell": cell, "episode": episode, "result": r });
            writeln!(file, "{line}").map_err(io)?;
        }
    }
    file.flush().map_err(io)
}

fn finish(report: &MatrixReport, output: Option<&Path>) -> Result<ExitCode, Error> {
    write_out(output, &report.to_csv())?;
    let mut code = ExitCode::SUCCESS;
    for cell in report.failures() {
        eprintln!(
            "cell {}/{}/{} failed: {}",
            cell.family,
            cell.strategy,
            cell.oracle_kind,
            cell.error.as_deref().unwrap_or("")
        );
        code = ExitCode::from(2);
    }
    Ok(code)
}

fn execute(command: Command) -> Result<ExitCode, Error> {
    match command {
        Command::Run {
            config,
            output,
            parallelism,
            trace,
        } => {
            let config = ExperimentConfig::load(&config)?;
            let output = output.or_else(|| config.output.clone());
            let report = run_matrix(std::slice::from_ref(&config), parallelism)?;
            if let Some(path) = trace {
                write_trace(&path, &report)?;
            }
            finish(&report, output.as_deref())
        }
        Command::Sweep {
            grid,
            output,
            parallelism,
        } => {
            let grid = SweepGrid::load(&grid)?;
            let output = output.or_else(|| grid.base.output.clone());
            let report = run_matrix(&grid.cells(), parallelism)?;
            finish(&report, output.as_deref())
        }
        Command::Serve { addr } => {
            let runtime = tokio::runtime::Runtime::new().map_err(|e| Error::Config(e.to_string()))?;
            eprintln!("listening on http://{addr}");
            runtime
                .block_on(anole::session::serve(addr))
                .map_err(|e| Error::Config(format!("{addr}: {e}")))?;
            Ok(ExitCode::SUCCESS)
        }
        Command::Selftest { seed } => {
            let checks = run_selftest(seed);
            for check in &checks {
                println!("{}", check.line());
            }
            Ok(if checks.iter().all(|c| c.passed) {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(2)
            })
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match execute(cli.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            exit_for(&e)
        }
    }
}
