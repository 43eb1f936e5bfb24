//! Command-line front end. Every command reads a [`RunConfig`] (optionally from
//! `--config`, overridden by flags), writes its reports under `--out` and maps
//! outcomes to exit codes 0 (success), 1 (verification failure) and 2 (error).

mod commands;
mod config;
mod verify;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

pub use commands::{cmd_build, cmd_eval, cmd_hessian_integral, cmd_norms, cmd_scan};
pub use config::{Keyword, LRange, NumberList, RunConfig, Setting, CALIBRATION_SAMPLES};
pub use verify::{cmd_verify, Status, Suite, VerifyRow};

use crate::diagnostics::NormMode;
use crate::error::{Error, Result};
use crate::sampling::Scheme;

/// Environment variable capping the worker count.
pub const THREADS_ENV: &str = "APBLOW_THREADS";

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Outcome {
    Success,
    Failed,
}

impl Outcome {
    pub fn from_passed(passed: bool) -> Self {
        if passed {
            Outcome::Success
        } else {
            Outcome::Failed
        }
    }

    pub fn code(self) -> u8 {
        match self {
            Outcome::Success => 0,
            Outcome::Failed => 1,
        }
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "apblow",
    version,
    about = "Build, verify and scan the blow-up field"
)]
pub struct Cli {
    /// JSON run configuration; flags override its entries.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[command(flatten)]
    pub overrides: Overrides,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Default, Args)]
pub struct Overrides {
    #[arg(long, global = true)]
    pub n: Option<usize>,
    #[arg(long, global = true)]
    pub rho: Option<f64>,
    /// Balls to build, and the truncation used on loaded systems.
    #[arg(long, global = true)]
    pub count: Option<usize>,
    /// Shear-region parameter, or `auto`.
    #[arg(long, global = true)]
    pub epsilon: Option<Setting>,
    /// Lift amplitude, or `auto`.
    #[arg(long, global = true)]
    pub lift_scale: Option<Setting>,
    #[arg(long, global = true)]
    pub p: Option<f64>,
    #[arg(long, global = true)]
    pub alpha: Option<f64>,
    #[arg(long, global = true)]
    pub scheme: Option<Scheme>,
    #[arg(long, global = true)]
    pub samples: Option<usize>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// `8,64,512`, `8..512`, `50..500:50` or `8..512*2`.
    #[arg(long, global = true)]
    pub l_range: Option<LRange>,
    /// Center coordinates and radius, comma separated.
    #[arg(long, global = true, allow_hyphen_values = true)]
    pub subdomain: Option<NumberList>,
    /// Output directory (for `build`, a `.json` path is taken as the file).
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
}

impl Overrides {
    pub fn apply(&self, cfg: &mut RunConfig) {
        macro_rules! set {
            ($($f:ident),*) => { $( if let Some(v) = &self.$f { cfg.$f = v.clone(); } )* };
        }
        set!(n, rho, count, epsilon, lift_scale, p, alpha, scheme, samples, seed, l_range, out);
        if let Some(s) = &self.subdomain {
            cfg.subdomain = Some(s.clone());
        }
    }
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Build a ball system and write it with its construction log.
    Build,
    /// Run the verification suites on a system file.
    Verify {
        #[arg(long)]
        system: PathBuf,
        /// Comma-separated subset of suites.
        #[arg(long, value_delimiter = ',')]
        only: Vec<Suite>,
    },
    /// Estimate the A_alpha ratio over `E_l` for the l-range.
    Scan {
        #[arg(long)]
        system: PathBuf,
        /// Permit p = 2, where the weight is identically one.
        #[arg(long)]
        allow_trivial: bool,
    },
    /// Partial sums of the Sobolev norm series.
    Norms {
        #[arg(long)]
        system: PathBuf,
        /// `grad` or `hess`.
        #[arg(long)]
        mode: NormMode,
        #[arg(long)]
        exponent: f64,
    },
    /// Weighted Hessian integral over increasing truncations.
    #[command(alias = "remark13")]
    HessianIntegral {
        #[arg(long)]
        system: PathBuf,
        #[arg(long, default_value = "25,50,100")]
        truncations: LRange,
    },
    /// Print the jet of the field at one point as JSON.
    Eval {
        #[arg(long)]
        system: PathBuf,
        /// Ball the offset is measured from (0 for absolute coordinates).
        #[arg(long, default_value_t = 0)]
        anchor: usize,
        #[arg(long, allow_hyphen_values = true)]
        offset: NumberList,
        #[arg(long)]
        hessian: bool,
    },
}

impl Cli {
    pub fn run_config(&self) -> Result<RunConfig> {
        let mut cfg = match &self.config {
            Some(path) => RunConfig::load(path)?,
            None => RunConfig::default(),
        };
        self.overrides.apply(&mut cfg);
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn execute(&self) -> Result<Outcome> {
        let cfg = self.run_config()?;
        match &self.command {
            Command::Build => cmd_build(&cfg).map(|_| Outcome::Success),
            Command::Verify { system, only } => cmd_verify(&cfg, system, only),
            Command::Scan {
                system,
                allow_trivial,
            } => cmd_scan(&cfg, system, *allow_trivial),
            Command::Norms {
                system,
                mode,
                exponent,
            } => cmd_norms(&cfg, system, *mode, *exponent),
            Command::HessianIntegral {
                system,
                truncations,
            } => cmd_hessian_integral(&cfg, system, &truncations.0),
            Command::Eval {
                system,
                anchor,
                offset,
                hessian,
            } => cmd_eval(&cfg, system, *anchor, &offset.0, *hessian).map(|_| Outcome::Success),
        }
    }
}

fn configure_threads() -> Result<()> {
    let Ok(text) = std::env::var(THREADS_ENV) else {
        return Ok(());
    };
    let threads: usize = text.trim().parse().ok().filter(|&t| t > 0).ok_or_else(|| {
        Error::domain(
            "threads",
            format!("{THREADS_ENV}={text:?} is not a positive integer"),
        )
    })?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build_global()
        .map_err(|e| Error::domain("threads", e.to_string()))
}

/// Parses the process arguments, runs the command and returns the exit code.
pub fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match configure_threads().and_then(|_| cli.execute()) {
        Ok(outcome) => ExitCode::from(outcome.code()),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
