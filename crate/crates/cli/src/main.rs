//! `fgff`: command-line driver for exact moments, cumulants, lattice
//! constants, samplers and scaling sweeps.

mod commands;
mod output;
mod parse;
mod verify;

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use output::{Format, Table};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("usage: {0}")]
    Usage(String),
    #[error(transparent)]
    Core(#[from] fgff_core::Error),
    #[error("io: {0}")]
    Io(#[from] io::Error),
    #[error("config: {0}")]
    Config(#[from] serde_json::Error),
}

#[derive(Debug, Parser)]
#[command(name = "fgff", version, about = "Fermionic Gaussian free field toolkit")]
struct Cli {
    /// Output format.
    #[arg(long, value_enum, default_value = "csv", global = true)]
    format: Format,
    /// Write output to a file instead of stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Suite {
    Grassmann,
    Moments,
    Cumulants,
    Constants,
    Samplers,
    All,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Evaluator {
    Default,
    Fourier,
    RandomWalk,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Sampler {
    Sandpile,
    Wilson,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SampleObservable {
    /// Height-one indicators (sandpile).
    HeightOne,
    /// `prod deg_T(v)/c` (wilson).
    Degree,
    /// Edge from each point in direction 0 is in the tree (wilson).
    Edge,
}

/// Finite lattice selection.
#[derive(Debug, Clone, Args)]
pub struct LatticeArgs {
    /// z2, z3, z4 or tri.
    #[arg(long, default_value = "z2")]
    pub lattice: String,
    /// Box side lengths, e.g. 3x3 (hypercubic).
    #[arg(long = "box")]
    pub box_spec: Option<String>,
    /// Patch radius (triangular).
    #[arg(long)]
    pub radius: Option<usize>,
    /// Lattice points, e.g. "(1,1);(3,3)".
    #[arg(long)]
    pub points: String,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run built-in consistency checks.
    Verify {
        #[arg(long, value_enum, default_value = "all")]
        suite: Suite,
    },
    /// Lattice constant from the local transfer matrix.
    Constants {
        /// z2, z3, z4 or tri.
        #[arg(long, default_value = "z2")]
        lattice: String,
        /// Also print every subset term.
        #[arg(long)]
        ledger: bool,
        /// Potential-kernel evaluator for z3/z4.
        #[arg(long, value_enum, default_value = "default")]
        evaluator: Evaluator,
    },
    /// Joint height-one probability by determinant and by enumeration.
    HeightProb {
        #[command(flatten)]
        lattice: LatticeArgs,
        /// Edge choice per point (direction indices), e.g. "0,2".
        #[arg(long)]
        eta: Option<String>,
        /// Exact rational arithmetic.
        #[arg(long)]
        exact: bool,
    },
    /// Joint cumulant by closed form and by partition sum.
    Cumulants {
        #[command(flatten)]
        lattice: LatticeArgs,
        /// neg_x, degree or xy.
        #[arg(long, default_value = "xy")]
        field: String,
        /// Exact rational arithmetic.
        #[arg(long)]
        exact: bool,
    },
    /// Monte Carlo estimates against exact values.
    Sample {
        #[command(flatten)]
        lattice: LatticeArgs,
        #[arg(long, value_enum)]
        sampler: Sampler,
        /// Default: height-one for sandpile, degree for wilson.
        #[arg(long, value_enum)]
        observable: Option<SampleObservable>,
        #[arg(long)]
        seed: u64,
        /// Sandpile additions recorded, or Wilson trees drawn.
        #[arg(long, default_value_t = 1_000_000)]
        steps: u64,
        /// Sandpile additions discarded first.
        #[arg(long, default_value_t = 10_000)]
        burn_in: u64,
    },
    /// Rescaled cumulants against the continuum limit.
    Scaling {
        /// neg_x, degree or xy.
        #[arg(long, required_unless_present = "config")]
        field: Option<String>,
        /// Continuum points in the unit disk, e.g. "(-0.3,0);(0.3,0)".
        #[arg(long, required_unless_present = "config")]
        points: Option<String>,
        /// Decreasing meshes, e.g. "1/16,1/32,1/64".
        #[arg(long, default_value = "1/16,1/32,1/64")]
        eps: String,
        /// JSON file with field, points and eps.
        #[arg(long, conflicts_with_all = ["field", "points"])]
        config: Option<PathBuf>,
    },
}

/// Tables plus whether every check passed.
pub struct Outcome {
    pub tables: Vec<Table>,
    pub ok: bool,
}

fn run(cli: Cli) -> Result<bool, CliError> {
    if let Some(n) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Usage(e.to_string()))?;
    }
    let outcome = match cli.command {
        Command::Verify { suite } => verify::run(suite)?,
        Command::Constants {
            lattice,
            ledger,
            evaluator,
        } => commands::constants(&lattice, ledger, evaluator)?,
        Command::HeightProb {
            lattice,
            eta,
            exact,
        } => commands::height_prob(&lattice, eta.as_deref(), exact)?,
        Command::Cumulants {
            lattice,
            field,
            exact,
        } => commands::cumulants(&lattice, &field, exact)?,
        Command::Sample {
            lattice,
            sampler,
            observable,
            seed,
            steps,
            burn_in,
        } => commands::sample(&lattice, sampler, observable, seed, steps, burn_in)?,
        Command::Scaling {
            field,
            points,
            eps,
            config,
        } => commands::scaling(field.as_deref(), points.as_deref(), &eps, config.as_deref())?,
    };
    let mut out: Box<dyn Write> = match &cli.out {
        Some(p) => Box::new(BufWriter::new(File::create(p)?)),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    };
    for t in &outcome.tables {
        t.write(cli.format, &mut out)?;
    }
    out.flush()?;
    Ok(outcome.ok)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(2)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => {
            eprintln!("fgff: check failed");
            ExitCode::from(1)
        }
        Err(e) => {
            eprintln!("fgff: {e}");
            ExitCode::from(2)
        }
    }
}
