use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use symred::cli::{exit_code, render, run, Format, RunConfig, Suite, EXIT_USAGE};
use symred::scenarios::{parse_scenario, BUILTIN_NAMES};
use symred::FdConfig;

#[derive(Parser)]
#[command(name = "symred", version, about = "Numerical checks for symplectic reduction of almost Hermitian data")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum OutputFormat {
    Text,
    Json,
}

#[derive(Subcommand)]
enum Command {
    /// Run verification suites on a built-in scenario or a scenario file.
    Verify {
        scenario: String,
        /// Comma-separated subset of: structures, action, reduction, main-theorem, holomorphy.
        #[arg(long, value_delimiter = ',')]
        suites: Option<Vec<Suite>>,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long, default_value_t = 20)]
        samples: usize,
        /// Tolerance override, e.g. `--tol geometric=1e-6`. Repeatable.
        #[arg(long = "tol", value_parser = parse_tol)]
        tol: Vec<(String, f64)>,
        #[arg(long, value_enum, default_value = "text")]
        format: OutputFormat,
        /// Write the report here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, default_value_t = 1e-5)]
        fd_step: f64,
        #[arg(long, default_value_t = 4)]
        fd_order: u8,
    },
    /// List the built-in scenarios.
    ListScenarios,
    /// Parse and validate a scenario file without running anything.
    ParseCheck { path: PathBuf },
}

fn parse_tol(s: &str) -> Result<(String, f64), String> {
    let (name, value) = s.split_once('=').ok_or("expected name=value")?;
    let value: f64 = value.trim().parse().map_err(|e| format!("{value}: {e}"))?;
    Ok((name.trim().to_string(), value))
}

fn usage_error(msg: impl std::fmt::Display) -> ExitCode {
    eprintln!("error: {msg}");
    ExitCode::from(EXIT_USAGE as u8)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { EXIT_USAGE as u8 } else { 0 });
        }
    };
    match cli.command {
        Command::ListScenarios => {
            for name in BUILTIN_NAMES {
                println!("{name}");
            }
            ExitCode::SUCCESS
        }
        Command::ParseCheck { path } => {
            let bytes = match fs::read(&path) {
                Ok(b) => b,
                Err(e) => return usage_error(format!("{}: {e}", path.display())),
            };
            match parse_scenario(&String::from_utf8_lossy(&bytes)).and_then(|f| f.compile()) {
                Ok(s) => match s.validate() {
                    Ok(warnings) => {
                        for w in warnings {
                            eprintln!("warning: {w}");
                        }
                        println!("{}: ok ({})", path.display(), s.name);
                        ExitCode::SUCCESS
                    }
                    Err(e) => usage_error(format!("{}: {e}", path.display())),
                },
                Err(e) => usage_error(format!("{}: {e}", path.display())),
            }
        }
        Command::Verify {
            scenario,
            suites,
            seed,
            samples,
            tol,
            format,
            out,
            fd_step,
            fd_order,
        } => {
            let fd = match FdConfig::new(fd_step, fd_order) {
                Ok(fd) => fd,
                Err(e) => return usage_error(e),
            };
            let cfg = RunConfig {
                scenario,
                suites: suites.unwrap_or_else(|| Suite::ALL.to_vec()),
                seed,
                samples,
                tolerances: tol,
                fd,
            };
            let report = match run(&cfg) {
                Ok(r) => r,
                Err(e) => return usage_error(e),
            };
            let format = match format {
                OutputFormat::Text => Format::Text,
                OutputFormat::Json => Format::Json,
            };
            let text = render(&report, format);
            match out {
                Some(path) => {
                    if let Err(e) = fs::write(&path, text) {
                        return usage_error(format!("{}: {e}", path.display()));
                    }
                }
                None => print!("{text}"),
            }
            ExitCode::from(exit_code(&report) as u8)
        }
    }
}
