//! Command-line front end.
//!
//! Subcommands `constants`, `critical-points`, `predict` and `verify`
//! write `<out>/records.json` (schema `spikekit/1`) and `<out>/summary.csv`.
//! Exit codes: 0 success, 1 failed verification or runtime failure,
//! 2 configuration error, 3 kernel file error.

pub mod commands;
pub mod config;
pub mod output;
pub mod verify;

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use thiserror::Error;

pub use commands::{cmd_constants, cmd_critical_points, cmd_predict, cmd_verify};
pub use config::{DomainSpec, ScenarioConfig, Tolerances};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("kernel error: {0}")]
    Kernel(String),
    #[error("verification failed: {}", .0.join(", "))]
    VerifyFailed(Vec<String>),
    #[error("i/o error: {0}")]
    Io(String),
    #[error("{0}")]
    Runtime(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Kernel(_) => 3,
            CliError::VerifyFailed(_) | CliError::Io(_) | CliError::Runtime(_) => 1,
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "spikekit", version, about = "Reduced-functional toolkit for normalized multi-spike solutions")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Print the dimension constants
    Constants {
        #[arg(long, default_value_t = 6)]
        n: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Enumerate critical points of the reduced functional
    CriticalPoints(ScenarioArgs),
    /// Predict normalized-solution parameters and check them
    Predict(ScenarioArgs),
    /// Run the verification suite
    Verify(ScenarioArgs),
}

#[derive(Debug, Args, Default)]
pub struct ScenarioArgs {
    /// TOML scenario file; flags override its values
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub n: Option<usize>,
    /// ball, ball:R or tabulated:PATH
    #[arg(long)]
    pub domain: Option<String>,
    #[arg(long)]
    pub k: Option<usize>,
    /// Mass values (repeatable)
    #[arg(long)]
    pub rho: Vec<f64>,
    #[arg(long)]
    pub starts: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Samples for volume and whole-space integrals
    #[arg(long)]
    pub samples: Option<usize>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Verification groups or criterion numbers (repeatable, comma-separated)
    #[arg(long, value_delimiter = ',')]
    pub only: Vec<String>,
}

impl ScenarioArgs {
    /// Defaults, then the config file, then flags, then `SPIKEKIT_SEED`.
    pub fn resolve(&self) -> Result<ScenarioConfig, CliError> {
        let mut c = match &self.config {
            Some(p) => ScenarioConfig::load(p)?,
            None => ScenarioConfig::default(),
        };
        if let Some(n) = self.n {
            c.n = n;
        }
        if let Some(d) = &self.domain {
            c.domain = d.parse()?;
        }
        if let Some(k) = self.k {
            c.k = k;
        }
        if !self.rho.is_empty() {
            c.rho = self.rho.clone();
        }
        if let Some(s) = self.starts {
            c.starts = s;
        }
        if let Some(s) = self.seed {
            c.seed = s;
        }
        if let Some(s) = self.samples {
            c.quadrature.samples = s;
        }
        if let Some(o) = &self.out {
            c.out = o.clone();
        }
        if !self.only.is_empty() {
            c.only = self.only.iter().map(|s| s.trim().to_string()).filter(|s| !s.is_empty()).collect();
        }
        c.apply_env()?;
        c.validate()?;
        Ok(c)
    }
}

/// Parses arguments, runs the command, prints its report and returns the
/// process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match dispatch(&cli.command) {
        Ok(text) => {
            print!("{text}");
            0
        }
        Err((text, e)) => {
            print!("{text}");
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

fn dispatch(command: &Command) -> Result<String, (String, CliError)> {
    let plain = |e: CliError| (String::new(), e);
    match command {
        Command::Constants { n, out } => cmd_constants(*n, out.as_deref()).map_err(plain),
        Command::CriticalPoints(a) => {
            let c = a.resolve().map_err(plain)?;
            cmd_critical_points(&c).map(|r| r.stdout).map_err(plain)
        }
        Command::Predict(a) => {
            let c = a.resolve().map_err(plain)?;
            cmd_predict(&c).map(|r| r.stdout).map_err(plain)
        }
        Command::Verify(a) => {
            let c = a.resolve().map_err(plain)?;
            let r = cmd_verify(&c).map_err(plain)?;
            let failed = r.report.failed();
            if failed.is_empty() {
                Ok(r.stdout)
            } else {
                Err((r.stdout, CliError::VerifyFailed(failed)))
            }
        }
    }
}
