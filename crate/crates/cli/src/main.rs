//! `sqa`: run, analyze and merge simulated quantum annealing experiments.
//!
//! Exit codes: 0 on success, 1 for configuration errors, 2 for failures
//! while running.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::Context;
use clap::{Parser, Subcommand};
use log::info;

use sqa_core::oracle::{compare_mcmc_to_exact, enumerate_boltzmann};
use sqa_core::pimc::{CouplingSet, TrotterSites};
use sqa_core::runner::{
    analyze_results, merge_results, run_experiment, CellSummary, ExperimentSpec, RunOptions, THREADS_ENV,
};

#[derive(Parser)]
#[command(name = "sqa", version, about = "Simulated quantum annealing of the transverse-field Ising chain")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run (or resume) every cell of an experiment.
    Run {
        /// Experiment spec, TOML or JSON (by extension).
        #[arg(long)]
        config: PathBuf,
        /// Override the master seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Override the number of replicas per annealing time.
        #[arg(long)]
        samples: Option<usize>,
        /// Override the output directory.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Worker threads (default: $SQA_THREADS, else all cores).
        #[arg(long, env = THREADS_ENV)]
        threads: Option<usize>,
    },
    /// Recompute eres.csv and summary.json of every cell from the raw files.
    Analyze {
        /// An output directory or a single cell directory.
        #[arg(long)]
        out: PathBuf,
    },
    /// Pool result directories and write cross-cell tables.
    Merge {
        /// Directory receiving the merged tables.
        #[arg(long)]
        out: PathBuf,
        /// Output or cell directories to merge.
        #[arg(required = true)]
        inputs: Vec<PathBuf>,
    },
    /// Compare frozen-coupling Metropolis sampling with exact enumeration.
    OracleCheck {
        #[arg(long, default_value_t = 2)]
        l: usize,
        #[arg(long, default_value_t = 4)]
        p: usize,
        #[arg(long, default_value_t = 0.5)]
        j: f64,
        /// Transverse field.
        #[arg(long, default_value_t = 0.5)]
        gamma: f64,
        #[arg(long, default_value_t = 0.0)]
        alpha: f64,
        #[arg(long, default_value_t = 1.0)]
        beta_eff: f64,
        #[arg(long, default_value_t = 1_000_000)]
        sweeps: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Largest acceptable L1 distance.
        #[arg(long, default_value_t = 0.01)]
        tolerance: f64,
    },
}

/// Failure classified by exit code.
enum Failure {
    Config(anyhow::Error),
    Runtime(anyhow::Error),
}

fn config<T>(r: anyhow::Result<T>) -> Result<T, Failure> {
    r.map_err(Failure::Config)
}

fn runtime<T>(r: anyhow::Result<T>) -> Result<T, Failure> {
    r.map_err(Failure::Runtime)
}

fn load_spec(path: &Path) -> anyhow::Result<ExperimentSpec> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let spec: ExperimentSpec = match path.extension().and_then(|e| e.to_str()) {
        Some("json") => serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))?,
        _ => toml::from_str(&text).with_context(|| format!("parsing {}", path.display()))?,
    };
    Ok(spec)
}

fn print_fits(summaries: &[CellSummary]) {
    for s in summaries {
        let name = s.cell.dir_name();
        match (&s.power_law, &s.power_law_error) {
            (Some(f), _) => println!(
                "{name}: b = {:.4} +- {:.4} over {} points",
                f.param("b").unwrap_or(f64::NAN),
                f.stderr.unwrap_or(f64::NAN),
                f.n_points
            ),
            (None, Some(e)) => println!("{name}: no power-law fit ({e})"),
            (None, None) => println!("{name}: no power-law fit"),
        }
    }
}

fn execute(command: Command) -> Result<(), Failure> {
    match command {
        Command::Run {
            config: path,
            seed,
            samples,
            out,
            threads,
        } => {
            let mut spec = config(load_spec(&path))?;
            if let Some(seed) = seed {
                spec.master_seed = seed;
            }
            if let Some(samples) = samples {
                spec.samples = samples;
            }
            if let Some(out) = out {
                spec.output_dir = out;
            }
            config(spec.validate().context("invalid experiment spec"))?;
            if threads == Some(0) {
                return Err(Failure::Config(anyhow::anyhow!("--threads must be >= 1")));
            }
            let reports = runtime(run_experiment(&spec, &RunOptions { threads }).map_err(Into::into))?;
            for r in &reports {
                info!(
                    "{}: computed {:?}, skipped {:?}",
                    r.cell.dir_name(),
                    r.computed,
                    r.skipped
                );
            }
            print_fits(&reports.iter().map(|r| r.summary.clone()).collect::<Vec<_>>());
            Ok(())
        }
        Command::Analyze { out } => {
            let summaries = runtime(analyze_results(&out).map_err(Into::into))?;
            print_fits(&summaries);
            Ok(())
        }
        Command::Merge { out, inputs } => {
            let report = runtime(merge_results(&inputs, &out, None).map_err(Into::into))?;
            println!(
                "merged {} cells into {} ({} duplicate times dropped)",
                report.summaries.len(),
                out.display(),
                report.duplicates.len()
            );
            print_fits(&report.summaries);
            Ok(())
        }
        Command::OracleCheck {
            l,
            p,
            j,
            gamma,
            alpha,
            beta_eff,
            sweeps,
            seed,
            tolerance,
        } => {
            let couplings = config(CouplingSet::from_transverse(j, gamma, beta_eff, alpha).map_err(Into::into))?;
            let exact = config(enumerate_boltzmann(l, p, &couplings, TrotterSites::All).map_err(Into::into))?;
            let l1 = runtime(compare_mcmc_to_exact(&exact, sweeps, seed).map_err(Into::into))?;
            println!("L1 = {l1:.6} after {sweeps} sweeps (tolerance {tolerance})");
            if l1 >= tolerance {
                return Err(Failure::Runtime(anyhow::anyhow!(
                    "sampled distribution deviates from exact enumeration"
                )));
            }
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match execute(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Config(e)) => {
            eprintln!("configuration error: {e:#}");
            ExitCode::from(1)
        }
        Err(Failure::Runtime(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
