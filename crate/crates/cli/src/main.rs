use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Result;
use clap::{Parser, Subcommand};
use gravinv::commands::{self, Overrides};
use gravinv::io::fmt;

/// Focused 3-D gravity inversion with randomized and Krylov solvers.
#[derive(Parser)]
#[command(name = "gravinv", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build a synthetic case: config, stations, true model and noisy data.
    Synth {
        #[command(flatten)]
        overrides: Overrides,
        #[arg(long, default_value = ".")]
        out_dir: PathBuf,
    },
    /// Predict data for a model.
    Forward {
        #[command(flatten)]
        overrides: Overrides,
        #[arg(long, default_value = ".")]
        in_dir: PathBuf,
        /// Model file; defaults to model.csv in the input directory.
        #[arg(long)]
        model: Option<PathBuf>,
        /// Station file; defaults to stations.csv in the input directory.
        #[arg(long)]
        stations: Option<PathBuf>,
        /// Add noise drawn from the configured noise model.
        #[arg(long)]
        noisy: bool,
        #[arg(long)]
        out_dir: PathBuf,
    },
    /// Invert data.csv; model.csv in the input directory, when present,
    /// is used as the true model for relative errors.
    Invert {
        #[command(flatten)]
        overrides: Overrides,
        #[arg(long, default_value = ".")]
        in_dir: PathBuf,
        /// Defaults to a directory named after the solver inside the input
        /// directory.
        #[arg(long)]
        out_dir: Option<PathBuf>,
    },
    /// Singular values of the first-iteration system.
    Svd {
        #[command(flatten)]
        overrides: Overrides,
        #[arg(long, default_value = ".")]
        in_dir: PathBuf,
        #[arg(long)]
        out_dir: PathBuf,
        /// Also compute the full spectrum.
        #[arg(long)]
        dense: bool,
    },
    /// Run RSVD and LSQR side by side.
    Compare {
        #[command(flatten)]
        overrides: Overrides,
        #[arg(long, default_value = ".")]
        in_dir: PathBuf,
        #[arg(long)]
        out_dir: PathBuf,
        /// Include the full-SVD solver.
        #[arg(long)]
        dense: bool,
    },
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Synth { overrides, out_dir } => {
            let cfg = overrides.resolve(None)?;
            let data = commands::synth(&cfg, &out_dir)?;
            println!(
                "wrote {:?} case to {}: {} stations, {} cells",
                cfg.case,
                out_dir.display(),
                data.gz.len(),
                cfg.mesh()?.len()
            );
        }
        Command::Forward {
            overrides,
            in_dir,
            model,
            stations,
            noisy,
            out_dir,
        } => {
            let cfg = overrides.resolve(Some(&in_dir))?;
            let model = model.unwrap_or_else(|| in_dir.join("model.csv"));
            let stations = stations.unwrap_or_else(|| in_dir.join("stations.csv"));
            let data = commands::forward_data(&cfg, &stations, &model, &out_dir, noisy)?;
            println!("wrote {} data to {}", data.gz.len(), out_dir.join("data.csv").display());
        }
        Command::Invert {
            overrides,
            in_dir,
            out_dir,
        } => {
            let cfg = overrides.resolve(Some(&in_dir))?;
            let out_dir = out_dir.unwrap_or_else(|| in_dir.join(format!("{:?}", cfg.solver).to_lowercase()));
            let result = commands::invert_run(&cfg, &in_dir, &out_dir)?;
            let last = result.last();
            println!("iterations: {}", result.iterations());
            println!("termination: {}", result.termination.as_str());
            println!("alpha: {}", fmt(last.alpha));
            println!("chi2: {}", fmt(last.chi2));
            if let Some(re) = last.relative_error {
                println!("re: {}", fmt(re));
            }
            println!("seconds: {:.3}", last.seconds);
        }
        Command::Svd {
            overrides,
            in_dir,
            out_dir,
            dense,
        } => {
            let cfg = overrides.resolve(Some(&in_dir))?;
            commands::spectra(&cfg, &in_dir, &out_dir, dense)?;
            println!("wrote spectra to {}", out_dir.display());
        }
        Command::Compare {
            overrides,
            in_dir,
            out_dir,
            dense,
        } => {
            let cfg = overrides.resolve(Some(&in_dir))?;
            for row in commands::compare(&cfg, &in_dir, &out_dir, dense)? {
                let re = row.re.map(|v| format!("{v:.4}")).unwrap_or_else(|| "-".into());
                println!(
                    "{:<5} subspace {:>5}  re {re}  k {:>2}  {:.2} s",
                    row.solver, row.subspace, row.k, row.seconds
                );
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
