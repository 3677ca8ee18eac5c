use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use jones_cli::config::{resolve_geometry, GEOMETRY_DIR_ENV};
use jones_cli::{emit, execute, CliError, Command, ExperimentConfig, OutputFormat, SizeRange};
use jones_core::toric::Backend;

#[derive(Parser)]
#[command(name = "jones", version, about = "Index, entropy and toric-code disturbance experiments")]
struct Cli {
    #[command(subcommand)]
    command: Sub,
    #[command(flatten)]
    common: Common,
}

#[derive(Args)]
struct Common {
    /// Geometry file (TOML); relative names are also looked up in the geometry directory.
    #[arg(long, global = true)]
    geometry: Option<PathBuf>,
    /// Directory holding geometry files, searched for default.toml.
    #[arg(long, global = true, env = GEOMETRY_DIR_ENV)]
    geometry_dir: Option<PathBuf>,
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Random probes or ensembles to draw.
    #[arg(long, global = true, default_value_t = 1000)]
    trials: usize,
    /// Acceptance tolerance for the exit status.
    #[arg(long, global = true, default_value_t = 1e-6)]
    tol: f64,
    /// Write the report here instead of stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true, value_enum, default_value_t = OutputFormat::Records)]
    format: OutputFormat,
}

fn parse_backend(s: &str) -> Result<Backend, String> {
    s.parse().map_err(|e: jones_core::Error| e.to_string())
}

#[derive(Subcommand)]
enum Sub {
    /// Von Neumann entropies, pairwise relative entropies and χ of the states in the files.
    Entropy {
        #[arg(required = true)]
        inputs: Vec<PathBuf>,
    },
    /// Pimsner-Popa estimate for the average over k copies of M_n.
    Index {
        #[arg(long, default_value_t = 4)]
        k: usize,
        #[arg(long, default_value_t = 2)]
        n: usize,
        /// Use the tensor square of the expectation.
        #[arg(long)]
        tensor_square: bool,
    },
    /// Entropic disturbance of the toric-code ensemble on the region of size n.
    Toric {
        #[arg(long, default_value_t = 1)]
        n: usize,
        #[arg(long, default_value = "dense", value_parser = parse_backend)]
        backend: Backend,
        /// Also write the four ensemble members as dense states.
        #[arg(long)]
        dump_ensemble: Option<PathBuf>,
    },
    /// One toric row per (n, backend); n is a range such as 1..=3.
    Sweep {
        #[arg(long, default_value = "1..=3")]
        n: SizeRange,
        #[arg(long, default_value = "stabilizer", value_delimiter = ',', value_parser = parse_backend)]
        backend: Vec<Backend>,
    },
    /// χ seen by Bob minus χ seen by Eve for block partitions of ⊕^k M_n.
    Privacy {
        #[arg(long, default_value_t = 2)]
        n: usize,
        /// Bob's group label for every block.
        #[arg(long, value_delimiter = ',', default_value = "0,1,2,3")]
        bob: Vec<usize>,
        /// Eve's group label for every block.
        #[arg(long, value_delimiter = ',', default_value = "0,0,0,0")]
        eve: Vec<usize>,
    },
}

fn build(cli: Cli) -> Result<ExperimentConfig, CliError> {
    let c = cli.common;
    let geometry = resolve_geometry(c.geometry.as_deref(), c.geometry_dir.as_deref())?;
    let command = match cli.command {
        Sub::Entropy { inputs } => Command::Entropy { inputs },
        Sub::Index { k, n, tensor_square } => Command::Index {
            blocks: k,
            block_dim: n,
            tensor_square,
        },
        Sub::Toric {
            n,
            backend,
            dump_ensemble,
        } => Command::Toric {
            n,
            backend,
            dump_ensemble,
        },
        Sub::Sweep { n, backend } => Command::Sweep {
            sizes: n,
            backends: backend,
        },
        Sub::Privacy { n, bob, eve } => Command::Privacy {
            block_dim: n,
            bob,
            eve,
        },
    };
    Ok(ExperimentConfig {
        command,
        geometry,
        seed: c.seed,
        trials: c.trials,
        tol: c.tol,
        out: c.out,
        format: c.format,
    })
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // Help and version requests print and succeed; usage errors are input errors.
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(jones_cli::EXIT_INPUT_ERROR as u8)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    let run = || -> Result<i32, CliError> {
        let cfg = build(cli)?;
        let outcome = execute(&cfg)?;
        emit(&cfg, &outcome.records)?;
        Ok(outcome.exit_code())
    };
    match run() {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("jones: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
