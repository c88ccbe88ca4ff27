use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use homqst::tomography::Likelihood;
use homqst::NegativeStrategy;
use homqst_cli::commands::{parse_likelihood, parse_strategy};
use homqst_cli::{
    cmd_dip_scan, cmd_reconstruct, cmd_run_all, cmd_simulate, cmd_visibility, CliResult, Format, Globals,
    ReconstructArgs, VisibilityArgs,
};

/// Tomography of photonic states from Hong-Ou-Mandel dips against known probes.
#[derive(Debug, Parser)]
#[command(name = "homqst", version)]
struct Cli {
    /// Override the acquisition seed (and the resampling seed).
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    format: Format,
    /// Suppress tables on standard output.
    #[arg(long, global = true)]
    quiet: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Simulate the configured experiment and write dataset.json and dataset.csv.
    Simulate { config: PathBuf },
    /// Reconstruct from a dataset or a depth table.
    Reconstruct {
        input: PathBuf,
        /// Handling of negative depths: zero or drop.
        #[arg(long, value_parser = parse_strategy)]
        strategy: Option<NegativeStrategy>,
        /// Report both negative-depth strategies.
        #[arg(long)]
        both: bool,
        /// Poisson resamples for fidelity error bars.
        #[arg(long)]
        resamples: Option<usize>,
        /// Objective for datasets: counts or depths.
        #[arg(long, value_parser = parse_likelihood)]
        likelihood: Option<Likelihood>,
        #[arg(long)]
        max_iterations: Option<usize>,
    },
    /// Export a delay scan of one probe setting.
    DipScan {
        config: PathBuf,
        #[arg(long)]
        label: String,
    },
    /// Balanced-splitter visibility, or the mode overlap behind a measured one.
    Visibility {
        /// Probe to target mean photon ratio.
        #[arg(long, default_value_t = 1.0)]
        zeta: f64,
        #[arg(long, default_value_t = 0.0)]
        g2s: f64,
        #[arg(long, default_value_t = 0.0)]
        g2p: f64,
        #[arg(long, default_value_t = 1.0)]
        overlap: f64,
        /// Solve for the mode overlap given --vex.
        #[arg(long)]
        invert: bool,
        #[arg(long)]
        vex: Option<f64>,
    },
    /// Simulate, reconstruct and report against the simulated state.
    RunAll { config: PathBuf },
}

fn run(cli: Cli) -> CliResult<()> {
    let g = Globals {
        seed: cli.seed,
        out: cli.out,
        format: cli.format,
        quiet: cli.quiet,
    };
    match cli.command {
        Command::Simulate { config } => cmd_simulate(&config, &g).map(drop),
        Command::Reconstruct {
            input,
            strategy,
            both,
            resamples,
            likelihood,
            max_iterations,
        } => {
            let args = ReconstructArgs {
                strategy,
                likelihood,
                both,
                resamples,
                max_iterations,
            };
            cmd_reconstruct(&input, &args, &g).map(drop)
        }
        Command::DipScan { config, label } => cmd_dip_scan(&config, &label, &g).map(drop),
        Command::Visibility {
            zeta,
            g2s,
            g2p,
            overlap,
            invert,
            vex,
        } => {
            let args = VisibilityArgs {
                zeta,
                g2s,
                g2p,
                overlap,
                vex,
                invert,
            };
            cmd_visibility(&args, &g).map(drop)
        }
        Command::RunAll { config } => cmd_run_all(&config, &g).map(drop),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("homqst: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
