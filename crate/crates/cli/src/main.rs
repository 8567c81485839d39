use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use proxnest_cli::checks::run_checks;
use proxnest_cli::experiment::sample_model_prior;
use proxnest_cli::image_io::write_image;
use proxnest_cli::{compare_models, run_experiment, CliError, CliResult, ExperimentConfig, MetricsReport};

#[derive(Parser)]
#[command(name = "proxnest", version, about = "Evidence estimation and model comparison for imaging priors")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate data, run nested sampling and write a report.
    Run {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        output_dir: Option<PathBuf>,
        /// Replaces the sampler seed (the observation is unchanged).
        #[arg(long)]
        seed_override: Option<u64>,
    },
    /// Bayes factor between two reports computed on the same data.
    Compare {
        report_a: PathBuf,
        report_b: PathBuf,
    },
    /// Draw independent samples from the configured prior.
    PriorSample {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, default_value_t = 4)]
        count: usize,
        #[arg(long)]
        output_dir: Option<PathBuf>,
        #[arg(long)]
        seed_override: Option<u64>,
    },
    /// Numerical self-checks of the operator, prior and projection.
    ProxCheck {
        #[arg(long)]
        config: PathBuf,
    },
}

fn load(path: &Path, output_dir: Option<PathBuf>, seed: Option<u64>) -> CliResult<ExperimentConfig> {
    let mut cfg = ExperimentConfig::load(path)?;
    if let Some(dir) = output_dir {
        cfg.output_dir = dir;
    }
    if let Some(seed) = seed {
        cfg.run.rng_seed = seed;
    }
    Ok(cfg)
}

fn print_json<T: serde::Serialize>(value: &T) {
    println!("{}", serde_json::to_string_pretty(value).expect("value serialises"));
}

fn execute(cli: Cli) -> CliResult<ExitCode> {
    match cli.command {
        Command::Run {
            config,
            output_dir,
            seed_override,
        } => {
            let cfg = load(&config, output_dir, seed_override)?;
            print_json(&run_experiment(&cfg)?);
        }
        Command::Compare { report_a, report_b } => {
            let a = MetricsReport::read(&report_a)?;
            let b = MetricsReport::read(&report_b)?;
            print_json(&compare_models(&a, &b)?);
        }
        Command::PriorSample {
            config,
            count,
            output_dir,
            seed_override,
        } => {
            let cfg = load(&config, output_dir, seed_override)?;
            let samples = sample_model_prior(&cfg, count)?;
            fs::create_dir_all(&cfg.output_dir)
                .map_err(|e| CliError::io(format!("creating {}", cfg.output_dir.display()), e))?;
            for (i, s) in samples.iter().enumerate() {
                let path = cfg.output_dir.join(format!("prior_sample_{i:03}.bin"));
                write_image(&path, s)?;
                println!("{}", path.display());
            }
        }
        Command::ProxCheck { config } => {
            let cfg = load(&config, None, None)?;
            let results = run_checks(&cfg)?;
            print_json(&results);
            if results.iter().any(|r| !r.passed) {
                return Ok(ExitCode::from(2));
            }
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    match execute(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
