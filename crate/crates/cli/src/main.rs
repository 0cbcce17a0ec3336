use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use ctbandit_core::harness::{self, format_sig9, ExperimentConfig, SUMMARY_FILE, SWEEP_FILE, TRAJECTORIES_FILE};
use ctbandit_core::model::{oracle_payoff, oracle_sample_count};
use ctbandit_core::{Error, ProblemInstance};

const EXIT_CONFIG: u8 = 2;
const EXIT_IO: u8 = 3;

#[derive(Parser)]
#[command(name = "ctbandit", version, about = "Continuous-time bandits with sampling costs")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run every algorithm in a config file and write trajectories.csv and summary.csv.
    Run {
        #[command(flatten)]
        common: Common,
    },
    /// Single-arm regret at the horizon over a grid of means; writes sweep.csv.
    SweepMu {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_delimiter = ',', required = true)]
        mu: Vec<f64>,
    },
    /// Optimal sample count and payoff for known means.
    Oracle {
        #[arg(long, value_delimiter = ',', required = true)]
        means: Vec<f64>,
        #[arg(long)]
        horizon: f64,
        #[arg(long, default_value_t = 1.0)]
        lambda: f64,
    },
}

#[derive(Args)]
struct Common {
    #[arg(long)]
    config: PathBuf,
    /// Base seed; run r uses seed + r.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    runs: Option<usize>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
}

impl Common {
    fn load(&self) -> Result<ExperimentConfig, Error> {
        let mut config = ExperimentConfig::load(&self.config)?;
        if let Some(seed) = self.seed {
            config.base_seed = seed;
        }
        if let Some(runs) = self.runs {
            config.runs = runs;
        }
        if let Some(out) = &self.out {
            config.output_dir = out.clone();
        }
        config.validate()?;
        Ok(config)
    }
}

fn run(cli: Cli) -> Result<(), Error> {
    match cli.command {
        Command::Run { common } => {
            let config = common.load()?;
            let out = harness::run_experiment(&config)?;
            println!("oracle payoff {}", format_sig9(out.oracle_payoff));
            for a in &out.summary.algorithms {
                println!(
                    "{:<20} regret {:>14}  failed {}  truncated {}  errored {}",
                    a.algorithm,
                    format_sig9(a.regret_at_horizon),
                    a.failed_runs,
                    a.truncated_runs,
                    a.errored_runs
                );
            }
            let dir = config.output_dir.display();
            println!("wrote {dir}/{TRAJECTORIES_FILE} and {dir}/{SUMMARY_FILE}");
        }
        Command::SweepMu { common, mu } => {
            let config = common.load()?;
            let table = harness::regret_vs_mu_sweep(&mu, &config)?;
            std::fs::create_dir_all(&config.output_dir).map_err(|e| Error::Io {
                path: config.output_dir.clone(),
                source: e,
            })?;
            let path = config.output_dir.join(SWEEP_FILE);
            table.write_file(&path)?;
            for r in &table.rows {
                println!("mu {:<10} regret {:>14}  stderr {}", format_sig9(r.mu), format_sig9(r.regret), format_sig9(r.stderr));
            }
            match table.slope {
                Some(s) => println!("log-log slope {}", format_sig9(s)),
                None => println!("log-log slope undefined"),
            }
            println!("wrote {}", path.display());
        }
        Command::Oracle { means, horizon, lambda } => {
            let inst = ProblemInstance::new(means, lambda, horizon)?;
            println!("best_arm {}", inst.best_arm());
            println!("sample_count {}", oracle_sample_count(&inst));
            println!("payoff {}", format_sig9(oracle_payoff(&inst)));
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            match e {
                Error::Io { .. } => ExitCode::from(EXIT_IO),
                _ => ExitCode::from(EXIT_CONFIG),
            }
        }
    }
}
