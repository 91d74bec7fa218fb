//! Batch driver. Every subcommand reads one flat config file, writes CSV,
//! JSON and two-column `.dat` files under the output directory, and maps
//! its outcome to an exit code: 0 pass, 1 a theorem-backed check failed,
//! 2 configuration error.

mod commands;
pub mod suite;

use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};

use crate::config::{ConfigError, RunConfig};
use crate::error::Error;

pub const EXIT_PASS: i32 = 0;
pub const EXIT_CHECK_FAILED: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;

/// First line of every CSV written by the driver.
pub const VERSION_HEADER: &str = concat!("# gevreych ", env!("CARGO_PKG_VERSION"));

#[derive(Debug, Parser)]
#[command(
    name = "gevreych",
    version,
    about = "Gevrey-norm certification and experiments for Camassa-Holm type systems"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// Flat `key = value` config file; defaults apply when omitted.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Overrides the config's root seed.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Overrides the config's output directory.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[arg(long, global = true)]
    pub quiet: bool,
}

#[derive(Debug, Clone, Copy, Subcommand, PartialEq, Eq)]
pub enum Command {
    /// Randomized inequality suite and ladder lemmas.
    Verify,
    /// Empirical algebra constants, persisted as JSON.
    EstimateConstants,
    /// Contraction certificate and Picard iteration at a = T0.
    Picard,
    /// Time integration of the configured system.
    Simulate,
    /// Radius-of-analyticity tracking against the guaranteed floor.
    Radius,
    /// Data-to-solution continuity ratios.
    Continuity,
}

/// Failure of a subcommand, carrying its exit code.
#[derive(Debug)]
pub enum Failure {
    Config(String),
    Check(String),
    Io(String),
}

impl Failure {
    pub fn code(&self) -> i32 {
        match self {
            Failure::Config(_) => EXIT_CONFIG,
            Failure::Check(_) | Failure::Io(_) => EXIT_CHECK_FAILED,
        }
    }
}

impl std::fmt::Display for Failure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Failure::Config(m) => write!(f, "configuration error: {m}"),
            Failure::Check(m) => write!(f, "check failed: {m}"),
            Failure::Io(m) => write!(f, "i/o error: {m}"),
        }
    }
}

impl From<ConfigError> for Failure {
    fn from(e: ConfigError) -> Self {
        Failure::Config(e.0)
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::InvalidParameter(_)
            | Error::WrongSystem { .. }
            | Error::WavenumberOutOfRange { .. }
            | Error::ConjugateConflict { .. }
            | Error::NotComparable(_)
            | Error::OutsideWindow { .. }
            | Error::ResolutionMismatch { .. }
            | Error::PeriodMismatch { .. } => Failure::Config(e.to_string()),
            other => Failure::Check(other.to_string()),
        }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Io(e.to_string())
    }
}

pub(crate) struct Ctx {
    pub cfg: RunConfig,
    pub quiet: bool,
}

impl Ctx {
    pub fn say(&self, msg: impl AsRef<str>) {
        if !self.quiet {
            println!("{}", msg.as_ref());
        }
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.cfg.out_dir.join(name)
    }

    /// CSV with the version header line prepended.
    pub fn write_csv(&self, name: &str, body: &str) -> Result<PathBuf, Failure> {
        let p = self.path(name);
        std::fs::write(&p, format!("{VERSION_HEADER}\n{body}"))?;
        Ok(p)
    }

    pub fn write_raw(&self, name: &str, body: &str) -> Result<PathBuf, Failure> {
        let p = self.path(name);
        std::fs::write(&p, body)?;
        Ok(p)
    }

    /// Two-column plot data.
    pub fn write_dat(&self, name: &str, xs: &[f64], ys: &[f64]) -> Result<PathBuf, Failure> {
        let body: String = xs.iter().zip(ys).map(|(x, y)| format!("{x:e} {y:e}\n")).collect();
        self.write_raw(name, &body)
    }
}

pub fn load_config(path: Option<&Path>) -> Result<RunConfig, Failure> {
    match path {
        Some(p) => {
            let text =
                std::fs::read_to_string(p).map_err(|e| Failure::Config(format!("cannot read {}: {e}", p.display())))?;
            Ok(RunConfig::parse(&text)?)
        }
        None => Ok(RunConfig::default()),
    }
}

fn configure_threads() {
    if let Some(n) = std::env::var("GEVREYCH_THREADS").ok().and_then(|v| v.trim().parse::<usize>().ok()) {
        if n > 0 {
            // a second call in the same process keeps the first pool
            let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
        }
    }
}

pub fn execute(cli: &Cli) -> Result<(), Failure> {
    let mut cfg = load_config(cli.config.as_deref())?;
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    if let Some(out) = &cli.out {
        cfg.out_dir = out.clone();
    }
    std::fs::create_dir_all(&cfg.out_dir)?;
    let ctx = Ctx { cfg, quiet: cli.quiet };
    match cli.command {
        Command::Verify => commands::verify(&ctx),
        Command::EstimateConstants => commands::estimate_constants(&ctx),
        Command::Picard => commands::picard(&ctx),
        Command::Simulate => commands::simulate(&ctx),
        Command::Radius => commands::radius(&ctx),
        Command::Continuity => commands::continuity(&ctx),
    }
}

/// Parses `args` (program name first), runs, and returns the exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_CONFIG } else { EXIT_PASS };
            let _ = e.print();
            return code;
        }
    };
    configure_threads();
    match execute(&cli) {
        Ok(()) => EXIT_PASS,
        Err(f) => {
            eprintln!("gevreych: {f}");
            f.code()
        }
    }
}
