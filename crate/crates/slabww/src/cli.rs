//! Command-line interface.

use std::ffi::OsString;
use std::path::PathBuf;
use std::time::{SystemTime, UNIX_EPOCH};

use clap::{Args, Parser, Subcommand};
use slabww_core::driver::run;
use slabww_core::{Error as CoreError, RunMode};

use crate::config::{Config, ConfigError, Overrides};
use crate::exec::{RayonExecutor, WallClock};
use crate::output::{write_outputs, RunInfo};
use crate::reference_io::{load_reference, write_reference};

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 1;
pub const EXIT_RUNTIME: i32 = 2;
pub const EXIT_REFERENCE: i32 = 3;

#[derive(Parser, Debug)]
#[command(name = "slabww", version, about = "Time-dependent slab Monte Carlo with LOSM weight windows")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Run a simulation and write CSV outputs.
    Run(RunArgs),
    /// Run analog and write the census flux as a reference table.
    Reference(ReferenceArgs),
}

#[derive(Args, Debug)]
pub struct CommonArgs {
    /// Config file, or `azurv1_impulse` for the built-in benchmark.
    pub config: PathBuf,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub histories: Option<usize>,
    /// Worker threads (0 = all cores).
    #[arg(long, default_value_t = 0)]
    pub workers: usize,
}

#[derive(Args, Debug)]
pub struct RunArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    #[arg(long, value_parser = parse_mode)]
    pub mode: Option<RunMode>,
    #[arg(long, default_value = "out")]
    pub out: PathBuf,
    #[arg(long)]
    pub reference: Option<PathBuf>,
    #[arg(long)]
    pub filter_k: Option<usize>,
    #[arg(long)]
    pub rho: Option<f64>,
}

#[derive(Args, Debug)]
pub struct ReferenceArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    /// Output CSV path.
    #[arg(long)]
    pub out: PathBuf,
}

fn parse_mode(s: &str) -> Result<RunMode, String> {
    s.parse::<RunMode>().map_err(|_| {
        let names: Vec<_> = RunMode::ALL.iter().map(|m| m.name()).collect();
        format!("unknown mode `{s}` (expected one of {})", names.join(", "))
    })
}

struct Failure {
    code: i32,
    message: String,
}

impl Failure {
    fn new(code: i32, message: impl ToString) -> Self {
        Self { code, message: message.to_string() }
    }
}

impl From<ConfigError> for Failure {
    fn from(e: ConfigError) -> Self {
        Failure::new(EXIT_CONFIG, e)
    }
}

fn runtime(e: CoreError) -> Failure {
    match e {
        CoreError::Reference(_) => Failure::new(EXIT_REFERENCE, e),
        _ => Failure::new(EXIT_RUNTIME, e),
    }
}

fn unix_now() -> f64 {
    SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs_f64()).unwrap_or(0.0)
}

fn load(common: &CommonArgs, overrides: Overrides) -> Result<Config, Failure> {
    let mut config = Config::load(&common.config)?;
    config.apply(&Overrides { seed: common.seed, histories: common.histories, ..overrides });
    Ok(config)
}

fn executor(workers: usize) -> Result<RayonExecutor, Failure> {
    RayonExecutor::new(workers).map_err(|e| Failure::new(EXIT_RUNTIME, e))
}

fn cmd_run(args: RunArgs, command: Vec<String>) -> Result<(), Failure> {
    let config = load(
        &args.common,
        Overrides { mode: args.mode, filter_k: args.filter_k, rho: args.rho, ..Default::default() },
    )?;
    let spec = config.to_spec()?;
    if spec.mode == RunMode::WwReference && args.reference.is_none() {
        return Err(Failure::new(EXIT_CONFIG, "mode ww-reference needs --reference <PATH>"));
    }
    let reference = match &args.reference {
        Some(p) => Some(load_reference(p).map_err(|e| Failure::new(EXIT_REFERENCE, e))?),
        None => None,
    };
    if let Some(table) = &reference {
        table.check_covers(&spec.time, spec.cells()).map_err(|e| Failure::new(EXIT_REFERENCE, e))?;
    }
    let exec = executor(args.common.workers)?;
    let started_unix = unix_now();
    let result = run(&spec, reference.as_ref(), &exec, &WallClock::new()).map_err(runtime)?;
    let info = RunInfo {
        config: &config,
        spec: &spec,
        command,
        workers: exec.workers(),
        reference_path: args.reference.as_ref().map(|p| p.display().to_string()),
        started_unix,
        finished_unix: unix_now(),
    };
    write_outputs(&args.out, &info, &result, reference.as_ref())
        .map_err(|e| Failure::new(EXIT_RUNTIME, format!("cannot write outputs to {}: {e}", args.out.display())))?;
    log::info!("wrote {} steps to {}", result.records.len(), args.out.display());
    Ok(())
}

fn cmd_reference(args: ReferenceArgs) -> Result<(), Failure> {
    let config = load(&args.common, Overrides { mode: Some(RunMode::Analog), ..Default::default() })?;
    let spec = config.to_spec()?;
    let exec = executor(args.common.workers)?;
    let result = run(&spec, None, &exec, &WallClock::new()).map_err(runtime)?;
    write_reference(&args.out, &spec, &result)
        .map_err(|e| Failure::new(EXIT_RUNTIME, format!("cannot write {}: {e}", args.out.display())))?;
    Ok(())
}

/// Parses `argv` and runs the command. Returns the process exit code.
pub fn main_with_args<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let argv: Vec<OsString> = argv.into_iter().map(Into::into).collect();
    let command = argv.iter().map(|a| a.to_string_lossy().into_owned()).collect();
    let cli = match Cli::try_parse_from(&argv) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
        }
    };
    let outcome = match cli.command {
        Command::Run(args) => cmd_run(args, command),
        Command::Reference(args) => cmd_reference(args),
    };
    match outcome {
        Ok(()) => EXIT_OK,
        Err(f) => {
            eprintln!("error: {}", f.message);
            f.code
        }
    }
}
