use std::path::PathBuf;

use clap::{Parser, Subcommand};

use crate::config_file::parse_config;
use crate::run::{compare_report, fit_report, plot, replay, run_experiment, CliError};

#[derive(Parser)]
#[command(name = "nandpuf", version)]
#[command(about = "Simulated NAND disturb fingerprinting: run extractions, compare and plot signatures")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,

    /// Suppress progress output.
    #[arg(long, global = true)]
    pub quiet: bool,
}

#[derive(Subcommand)]
pub enum Command {
    /// Run a configured extraction on a freshly seeded simulated chip.
    Run {
        /// Experiment config file (key = value lines).
        #[arg(long)]
        config: PathBuf,
        /// Output directory for trace, signatures and manifest.
        #[arg(long)]
        out: PathBuf,
        /// Override the chip seed from the config.
        #[arg(long)]
        seed: Option<u64>,
        /// Override the experiment seed from the config.
        #[arg(long = "experiment-seed")]
        experiment_seed: Option<u64>,
    },
    /// Compare two signature files.
    Compare { sig_a: PathBuf, sig_b: PathBuf },
    /// Fit the exponential first-flip laws to a sweep trace.
    Fit { trace: PathBuf },
    /// Render a signature file as a heatmap.
    Plot {
        signature: PathBuf,
        /// Write the heatmap as SVG here.
        #[arg(long)]
        svg: Option<PathBuf>,
        /// Write the class grid as CSV here.
        #[arg(long)]
        csv: Option<PathBuf>,
    },
    /// Re-run a manifest and verify the outputs are byte-identical.
    Replay { run_dir: PathBuf },
}

pub fn dispatch(cli: Cli) -> Result<(), CliError> {
    let quiet = cli.quiet;
    let log = |line: &str| {
        if !quiet {
            println!("{line}");
        }
    };
    match cli.command {
        Command::Run { config, out, seed, experiment_seed } => {
            let text = std::fs::read_to_string(&config)
                .map_err(|source| CliError::Io { path: config.clone(), source })?;
            let mut run_config = parse_config(&text)?;
            if let Some(seed) = seed {
                run_config.chip_seed = seed;
            }
            if let Some(seed) = experiment_seed {
                run_config.experiment.experiment_seed = seed;
            }
            run_experiment(&run_config, &out, log)
        }
        Command::Compare { sig_a, sig_b } => {
            let report = compare_report(&sig_a, &sig_b)?;
            print!("{report}");
            Ok(())
        }
        Command::Fit { trace } => {
            let report = fit_report(&trace)?;
            print!("{report}");
            Ok(())
        }
        Command::Plot { signature, svg, csv } => plot(&signature, svg.as_deref(), csv.as_deref()),
        Command::Replay { run_dir } => replay(&run_dir, log),
    }
}
