//! `nwave`: simulations, diagnostics and scaling scans for the defocusing
//! quintic Neumann wave equation.

mod config;
mod data;
mod output;
mod run;
mod scan;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use config::Overrides;
use output::{read_meta, Outcome};
use scan::ScanKind;

#[derive(Parser)]
#[command(
    name = "nwave",
    version,
    about = "Numerical lab for u_tt - Δu + u⁵ = 0 with Neumann walls"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// JSON experiment file; omitted fields take their defaults.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    dt: Option<f64>,
    #[arg(long)]
    t_final: Option<f64>,
    #[arg(long)]
    dt_record: Option<f64>,
    #[arg(long)]
    n_modes: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
}

impl Common {
    fn load(&self) -> Outcome<config::ExperimentConfig> {
        let o = Overrides {
            output: self.out.clone(),
            dt: self.dt,
            t_final: self.t_final,
            dt_record: self.dt_record,
            n_modes: self.n_modes,
            seed: self.seed,
        };
        Ok(config::load(self.config.as_deref(), &o)?)
    }
}

#[derive(Subcommand)]
enum Command {
    /// Evolve the configured data and evaluate the diagnostics.
    Simulate {
        #[command(flatten)]
        common: Common,
        /// Exit with status 4 when a threshold check fails.
        #[arg(long)]
        strict: bool,
    },
    /// Run a scaling experiment.
    Scan {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_enum)]
        kind: ScanKind,
    },
    /// Run the refinement ladder and report convergence orders.
    Converge {
        #[command(flatten)]
        common: Common,
    },
    /// Recompute diagnostics from a saved run.
    Report {
        run_dir: PathBuf,
        /// Output directory; defaults to the run directory.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        strict: bool,
    },
    /// Check a configuration and print it fully resolved.
    Validate {
        #[command(flatten)]
        common: Common,
    },
}

fn dispatch(cmd: Command) -> Outcome {
    match cmd {
        Command::Simulate { common, strict } => run::simulate(&common.load()?, strict),
        Command::Scan { common, kind } => scan::scan(&common.load()?, kind),
        Command::Converge { common } => run::converge(&common.load()?),
        Command::Report {
            run_dir,
            out,
            strict,
        } => {
            let cfg = read_meta(&run_dir)?;
            let out = out.unwrap_or_else(|| run_dir.clone());
            run::report(&run_dir, &cfg, &out, strict)
        }
        Command::Validate { common } => {
            let cfg = common.load()?;
            let text = serde_json::to_string_pretty(&cfg).map_err(anyhow::Error::from)?;
            println!("{text}");
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("nwave: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
