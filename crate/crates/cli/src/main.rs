use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use fac_core::acceptance::Suite;
use fac_core::config::RunConfig;
use fac_core::Error;

mod commands;

#[derive(Debug, Parser)]
#[command(name = "fac", version, about = "Layer, reduced-profile and verification pipelines")]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct Common {
    /// fractional order, 1/2 < s < 1
    #[arg(long, global = true)]
    s: Option<f64>,
    /// neck scale, 0 < eps <= 1e-2
    #[arg(long, global = true)]
    eps: Option<f64>,
    /// JSON run configuration; flags override its fields
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,
    /// output directory
    #[arg(long, global = true, value_name = "DIR")]
    out: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// looser thresholds and fewer samples in `verify`
    #[arg(long, global = true)]
    quick: bool,
    /// also write downsampled series for plotting
    #[arg(long, global = true)]
    emit_plot_data: bool,
    /// reach the layer order by continuation from s = 0.95
    #[arg(long, global = true)]
    continuation: bool,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Normalization constants and the Gamma-ratio identity
    Constants,
    /// One-dimensional layer profile and its projection constants
    Profile1d,
    /// Interface profile from the reduced equation
    Reduced,
    /// Error of the approximate solution in the tube
    FermiAudit,
    /// Localized energy growth
    Energy,
    /// Acceptance suites
    Verify {
        #[arg(value_enum)]
        suite: SuiteArg,
    },
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum SuiteArg {
    Kernels,
    Layer,
    Geometry,
    Reduced,
    Error,
    Energy,
    All,
}

impl From<SuiteArg> for Suite {
    fn from(s: SuiteArg) -> Self {
        match s {
            SuiteArg::Kernels => Suite::Kernels,
            SuiteArg::Layer => Suite::Layer,
            SuiteArg::Geometry => Suite::Geometry,
            SuiteArg::Reduced => Suite::Reduced,
            SuiteArg::Error => Suite::Error,
            SuiteArg::Energy => Suite::Energy,
            SuiteArg::All => Suite::All,
        }
    }
}

pub const EXIT_USAGE: u8 = 64;
pub const EXIT_IO: u8 = 1;

/// A failure carrying its exit code.
#[derive(Debug)]
pub struct Failure {
    pub code: u8,
    pub message: String,
}

impl Failure {
    pub fn new(code: u8, message: impl Into<String>) -> Self {
        Self { code, message: message.into() }
    }

    /// Exit code for a library error raised while running a command whose
    /// own solver failures map to `solver_code`.
    pub fn from_error(e: Error, solver_code: u8) -> Self {
        let code = match &e {
            Error::Config(_) => EXIT_USAGE,
            Error::Io(_) | Error::Json(_) | Error::Csv(_) => EXIT_IO,
            Error::NonContraction { .. } => 4,
            _ => solver_code,
        };
        Self::new(code, e.to_string())
    }
}

fn load_config(c: &Common) -> Result<RunConfig, Failure> {
    let mut cfg = match &c.config {
        Some(p) => RunConfig::from_json_file(p).map_err(|e| Failure::from_error(e, EXIT_USAGE))?,
        None => RunConfig::default(),
    };
    if let Some(s) = c.s {
        cfg.s = s;
    }
    if let Some(e) = c.eps {
        cfg.eps = e;
    }
    if let Some(o) = &c.out {
        cfg.out_dir = o.clone();
    }
    if let Some(seed) = c.seed {
        cfg.seed = seed;
    }
    if c.continuation {
        cfg.continuation = true;
    }
    cfg.validate().map_err(|e| Failure::new(EXIT_USAGE, e.to_string()))?;
    Ok(cfg.resolved())
}

fn run(cli: Cli) -> Result<(), Failure> {
    let cfg = load_config(&cli.common)?;
    let plot = cli.common.emit_plot_data;
    match cli.command {
        Command::Constants => commands::constants(&cfg, cli.common.s.is_some()),
        Command::Profile1d => commands::profile1d(&cfg, plot),
        Command::Reduced => commands::reduced(&cfg, plot),
        Command::FermiAudit => commands::fermi_audit(&cfg),
        Command::Energy => commands::energy(&cfg),
        Command::Verify { suite } => commands::verify(&cfg, suite.into(), cli.common.quick),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("fac: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
