//! `rumcf`: rationalizability tests and counterfactual demand bounds from
//! the command line.

mod commands;
mod input;

use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Context;
use clap::{Args, Parser, Subcommand};

use crate::input::Overrides;

#[derive(Parser)]
#[command(name = "rumcf", version, about = "Stochastic rationalizability tests and sharp counterfactual demand bounds")]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Global {
    /// Classification and validation tolerance (overrides the system file).
    #[arg(long, global = true)]
    tolerance: Option<f64>,
    /// Keep lower-dimensional patches.
    #[arg(long, global = true)]
    keep_null_patches: bool,
    /// Solve LPs in exact rational arithmetic.
    #[arg(long, global = true)]
    exact: bool,
    /// Cap on the number of rational types.
    #[arg(long, global = true)]
    max_types: Option<usize>,
    /// Write the result to this file instead of standard output.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// List the patches of every budget.
    Patches { system: PathBuf },
    /// Turn observed bundles into patch probabilities.
    Ingest { system: PathBuf, observations: PathBuf },
    /// Test whether the probabilities are rationalizable.
    Test {
        system: PathBuf,
        pi: PathBuf,
        /// Include the mixing weights over types.
        #[arg(long)]
        witness: bool,
    },
    /// Bounds on demand at the counterfactual budget.
    Bounds {
        system: PathBuf,
        pi: PathBuf,
        /// Include the optimal type weights.
        #[arg(long)]
        witness: bool,
        #[command(subcommand)]
        query: Query,
    },
    /// Dump the matrix of rational types.
    Matrix { system: PathBuf },
    /// Brute-force cross-checks.
    #[command(subcommand)]
    Oracle(OracleCommand),
}

#[derive(Subcommand, Clone)]
pub enum Query {
    /// Probability of a union of counterfactual patches.
    Prob {
        #[arg(long, value_delimiter = ',', required = true)]
        patches: Vec<String>,
    },
    /// Mean of z . y.
    Mean {
        #[arg(long, value_delimiter = ',', allow_negative_numbers = true, required = true)]
        z: Vec<f64>,
    },
    /// Pointwise bounds on the c.d.f. of z . y.
    Cdf {
        #[arg(long, value_delimiter = ',', allow_negative_numbers = true, required = true)]
        z: Vec<f64>,
        #[arg(long, value_delimiter = ',', allow_negative_numbers = true, required = true)]
        grid: Vec<f64>,
        /// Emit a tab-separated table instead of JSON.
        #[arg(long)]
        tsv: bool,
    },
    /// Mean of a function given its infimum and supremum on each patch.
    Functional {
        #[arg(long)]
        glo: PathBuf,
        #[arg(long)]
        ghi: PathBuf,
    },
}

#[derive(Subcommand)]
enum OracleCommand {
    /// Compare type enumeration with brute force.
    Types { system: PathBuf },
    /// Check patch enumeration by sampling each budget.
    Cover {
        system: PathBuf,
        #[arg(long, default_value_t = 10_000)]
        samples: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Event bounds by enumerating vertices of the feasible type weights.
    Vertex {
        system: PathBuf,
        pi: PathBuf,
        #[arg(long, value_delimiter = ',', required = true)]
        patches: Vec<String>,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let overrides = Overrides {
        tolerance: cli.global.tolerance,
        keep_null_patches: cli.global.keep_null_patches,
        exact: cli.global.exact,
        max_types: cli.global.max_types,
    };
    let result = match cli.command {
        Command::Patches { system } => commands::patches(&system, &overrides),
        Command::Ingest { system, observations } => commands::ingest(&system, &observations, &overrides),
        Command::Test { system, pi, witness } => commands::test(&system, &pi, witness, &overrides),
        Command::Bounds {
            system,
            pi,
            witness,
            query,
        } => commands::bounds(&system, &pi, &query, witness, &overrides),
        Command::Matrix { system } => commands::matrix(&system, &overrides),
        Command::Oracle(OracleCommand::Types { system }) => commands::oracle_types(&system, &overrides),
        Command::Oracle(OracleCommand::Cover { system, samples, seed }) => {
            commands::oracle_cover(&system, samples, seed, &overrides)
        }
        Command::Oracle(OracleCommand::Vertex { system, pi, patches }) => {
            commands::oracle_vertex(&system, &pi, &patches, &overrides)
        }
    };
    let report = match result {
        Ok(report) => report,
        Err(err) => {
            eprintln!("error: {err:#}");
            return ExitCode::from(2);
        }
    };
    let written = match &cli.global.out {
        Some(path) => fs::write(path, &report.text).with_context(|| format!("cannot write {}", path.display())),
        None => {
            print!("{}", report.text);
            Ok(())
        }
    };
    if let Err(err) = written {
        eprintln!("error: {err:#}");
        return ExitCode::from(2);
    }
    if let Some(message) = &report.message {
        eprintln!("{message}");
    }
    ExitCode::from(report.code)
}
