use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use rmab::harness::{self, ExperimentConfig, Mode};
use rmab::{rng, Error};

/// Restless-bandit Thompson sampling experiments.
#[derive(Debug, Parser)]
#[command(name = "rmab", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run a regret experiment and write its CSV.
    Run {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        mode: Option<Mode>,
        #[arg(long)]
        mapping: Option<String>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        episodes: Option<usize>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Print the benchmark value of a mapping as JSON.
    Value {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        mapping: String,
    },
    /// Fit the log-log slope of a regret CSV's cumulative regret.
    Slope {
        #[arg(long)]
        csv: PathBuf,
        #[arg(long)]
        from: Option<usize>,
        #[arg(long)]
        to: Option<usize>,
    },
}

const DEFAULT_OUTPUT: &str = "regret.csv";

fn run(command: Command) -> rmab::Result<()> {
    match command {
        Command::Run {
            config,
            mode,
            mapping,
            seed,
            episodes,
            out,
        } => {
            let mut cfg = ExperimentConfig::load(&config)?;
            if let Some(mode) = mode {
                cfg.mode = mode;
            }
            if let Some(mapping) = mapping {
                cfg.mapping_name = mapping;
            }
            if let Some(seed) = seed {
                cfg.master_seed = seed;
            }
            if let Some(m) = episodes {
                cfg.episodes = m;
            }
            if let Some(out) = out {
                cfg.output = Some(out);
            }
            cfg.validate()?;
            let series = harness::run_experiment(&cfg)?;
            let path = cfg.output.clone().unwrap_or_else(|| PathBuf::from(DEFAULT_OUTPUT));
            harness::emit_csv(&series, &path)?;
            println!("wrote {}", path.display());
            if series.posterior_weights.is_some() {
                let weights = path
                    .parent()
                    .unwrap_or(Path::new(""))
                    .join("posterior_weights.csv");
                harness::emit_posterior_weights(&series, &weights)?;
                println!("wrote {}", weights.display());
            }
            if let Some(last) = series.rows.last() {
                println!("cumulative regret after {} episodes: {:.4}", last.episode, last.cum_regret);
            }
            Ok(())
        }
        Command::Value { config, mapping } => {
            let mut cfg = ExperimentConfig::load(&config)?;
            cfg.mapping_name = mapping;
            cfg.validate()?;
            let seed = rng::derive_seed(cfg.master_seed, u64::MAX);
            let estimate = match cfg.mode {
                Mode::Frequentist => harness::benchmark_value(&cfg, &cfg.theta_star()?, seed)?,
                Mode::Bayesian => harness::prior_averaged_value(
                    &cfg.prior()?,
                    cfg.mapping()?,
                    cfg.n_active,
                    cfg.episode_length,
                    cfg.prior_value.draws,
                    cfg.prior_value.episodes_per_draw,
                    seed,
                )?,
            };
            println!("{}", serde_json::to_string(&estimate).expect("estimates serialize"));
            Ok(())
        }
        Command::Slope { csv, from, to } => {
            let series = harness::read_csv(&csv)?;
            let (default_from, default_to) = harness::default_window(series.rows.len());
            let window = (from.unwrap_or(default_from), to.unwrap_or(default_to));
            println!("{}", harness::loglog_slope(&series, Some(window))?);
            Ok(())
        }
    }
}

fn exit_code(err: &Error) -> u8 {
    if err.is_config() {
        1
    } else {
        2
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
