use std::fs::File;
use std::io::BufWriter;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use ensemble_forge::experiment::{run_experiment, ExperimentConfig};
use ensemble_forge::profile::{load_pool, synth_pool, write_pool, Mixture, TargetDistribution};
use ensemble_forge::records::load_records;
use ensemble_forge::report::render_reports;
use ensemble_forge::rng::seeded;
use ensemble_forge::stats::Alternative;
use ensemble_forge::{exact_tvd, sampled_tvd, Error, Result};

const THREADS_ENV: &str = "ENSEMBLE_FORGE_THREADS";

#[derive(Parser)]
#[command(name = "ensemble-forge", version, about = "Evolve generator mixtures that balance class frequencies")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run an experiment described by a key = value config file.
    Run {
        #[arg(long)]
        config: PathBuf,
    },
    /// Re-render report tables from the records in an experiment directory.
    Report {
        #[arg(long)]
        dir: PathBuf,
        #[arg(long, default_value = "two-sided")]
        alternative: Alternative,
    },
    /// Write a synthetic generator pool as label-count CSV.
    SynthPool {
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 10)]
        classes: usize,
        #[arg(long, default_value_t = 0.5)]
        concentration: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 30.0)]
        fid_min: f64,
        #[arg(long, default_value_t = 40.0)]
        fid_max: f64,
        /// Labels per generator the counts are scaled to.
        #[arg(long, default_value_t = 50_000)]
        samples: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Evaluate the TVD of one mixture, e.g. --mixture 5:13,2:15,0:72.
    Tvd {
        #[arg(long)]
        pool: PathBuf,
        #[arg(long)]
        mixture: Mixture,
        #[arg(long, conflicts_with = "samples")]
        exact: bool,
        #[arg(long)]
        samples: Option<usize>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Comma-separated target class frequencies (default uniform).
        #[arg(long)]
        target: Option<String>,
    },
}

fn configure_threads() -> Result<()> {
    if let Ok(v) = std::env::var(THREADS_ENV) {
        let threads: usize = v
            .trim()
            .parse()
            .ok()
            .filter(|&t| t > 0)
            .ok_or_else(|| Error::Config(format!("{THREADS_ENV} must be a positive integer")))?;
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global()
            .map_err(|e| Error::Config(e.to_string()))?;
    }
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    configure_threads()?;
    match cli.command {
        Command::Run { config } => {
            let cfg = ExperimentConfig::from_file(&config)?;
            let report = run_experiment(&cfg)?;
            for s in &report.skipped {
                eprintln!("skipped {s}");
            }
            for (size, budget) in &report.matched_budgets {
                println!("matched budget for size {size}: {budget}");
            }
            println!("method,size,runs,min,median,iqr,max");
            for s in &report.summaries {
                let x = &s.summary;
                println!(
                    "{},{},{},{:.6},{:.6},{:.6},{:.6}",
                    s.method, s.ensemble_size, x.count, x.min, x.median, x.iqr, x.max
                );
            }
            println!("wrote {} runs to {}", report.records.len(), cfg.out_dir.display());
        }
        Command::Report { dir, alternative } => {
            let records = load_records(&dir)?;
            if records.is_empty() {
                return Err(Error::EmptyInput("no run records found"));
            }
            let files = render_reports(&records, &dir, alternative)?;
            for f in files {
                println!("{}", f.display());
            }
        }
        Command::SynthPool {
            n,
            classes,
            concentration,
            seed,
            fid_min,
            fid_max,
            samples,
            out,
        } => {
            let pool = synth_pool(n, classes, concentration, (fid_min, fid_max), &mut seeded(seed))?;
            write_pool(&pool, samples, BufWriter::new(File::create(&out)?))?;
            println!("wrote {} generators to {}", pool.len(), out.display());
        }
        Command::Tvd {
            pool,
            mixture,
            exact,
            samples,
            seed,
            target,
        } => {
            let mut pool = load_pool(&pool)?;
            if let Some(t) = target {
                let freqs = t
                    .split(',')
                    .map(|v| v.trim().parse::<f64>())
                    .collect::<std::result::Result<Vec<_>, _>>()
                    .map_err(|_| Error::Config(format!("bad target {t:?}")))?;
                pool = pool.with_target(TargetDistribution::new(freqs)?)?;
            }
            let tvd = match samples {
                Some(n) if !exact => sampled_tvd(&mixture, &pool, n, &mut seeded(seed))?,
                _ => exact_tvd(&mixture, &pool)?,
            };
            println!("{tvd}");
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
