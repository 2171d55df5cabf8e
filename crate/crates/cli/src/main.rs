use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use acdcflow::case::{parse_matpower_case, parse_vsc_extension, MtdcSystem, NetworkCase};
use acdcflow::{newton_solve, SolveError, SolverOptions, Status};
use anyhow::{anyhow, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};

mod report;

#[derive(Parser, Debug)]
#[command(
    name = "acdcflow",
    version,
    about = "AC/DC Newton power flow with VSC MT-HVDC limit enforcement"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Solve a MATPOWER case, optionally with a VSC MT-HVDC overlay.
    Solve(RunConfig),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Switch {
    On,
    Off,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum OutputFormat {
    Table,
    Json,
}

#[derive(clap::Args, Debug)]
struct RunConfig {
    /// MATPOWER case file.
    case_path: PathBuf,
    /// VSC MT-HVDC overlay (JSON).
    #[arg(long = "vsc", value_name = "PATH")]
    vsc_path: Option<PathBuf>,
    /// Convergence tolerance on the residual infinity norm.
    #[arg(long, default_value_t = 1e-8)]
    tol: f64,
    /// Maximum number of Newton updates.
    #[arg(long, default_value_t = 50)]
    max_iter: usize,
    /// Iteration from which limits are enforced.
    #[arg(long, default_value_t = 4)]
    enforce_start: usize,
    /// Generators allowed to hit a reactive limit per iteration.
    #[arg(long, default_value_t = 1)]
    max_pv_per_iter: usize,
    /// Generator reactive limit enforcement.
    #[arg(long, value_enum, default_value_t = Switch::On)]
    qlim: Switch,
    #[arg(long, value_enum, default_value_t = OutputFormat::Table)]
    output: OutputFormat,
    /// Print the per-iteration residual norm and limit events.
    #[arg(long)]
    iter_log: bool,
}

impl RunConfig {
    fn options(&self) -> SolverOptions {
        SolverOptions {
            tol: self.tol,
            max_iter: self.max_iter,
            enforce_start_iter: self.enforce_start,
            max_pv_per_iter: self.max_pv_per_iter,
            qlim_enforcement: self.qlim == Switch::On,
            ..SolverOptions::default()
        }
    }
}

fn read(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| match e.kind() {
        std::io::ErrorKind::NotFound => anyhow!("file not found: {}", path.display()),
        _ => anyhow!("cannot read {}: {e}", path.display()),
    })
}

fn load(config: &RunConfig) -> Result<(NetworkCase, MtdcSystem)> {
    let case = parse_matpower_case(&read(&config.case_path)?)
        .with_context(|| format!("parse error in {}", config.case_path.display()))?;
    let mtdc = match &config.vsc_path {
        Some(path) => {
            parse_vsc_extension(&read(path)?).with_context(|| format!("parse error in {}", path.display()))?
        }
        None => MtdcSystem::default(),
    };
    Ok((case, mtdc))
}

fn run(config: &RunConfig) -> Result<Status> {
    let start = Instant::now();
    let (case, mtdc) = load(config)?;
    let parse_ms = start.elapsed().as_secs_f64() * 1e3;
    let mut solution = newton_solve(&case, &mtdc, &config.options()).map_err(|e| match e {
        SolveError::Validation(report) => anyhow!("validation error:\n{report}"),
        other => anyhow!(other),
    })?;
    solution.timings.parse_ms = parse_ms;
    match config.output {
        OutputFormat::Json => println!("{}", serde_json::to_string_pretty(&solution)?),
        OutputFormat::Table => {
            if config.iter_log {
                print!("{}", report::iteration_log(&solution));
                println!();
            }
            print!("{}", report::tables(&solution));
        }
    }
    Ok(solution.status)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            // Exit code 2 is reserved for a solve that did not converge.
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    let Command::Solve(config) = cli.command;
    match run(&config) {
        Ok(Status::Converged) => ExitCode::SUCCESS,
        Ok(_) => ExitCode::from(2),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
