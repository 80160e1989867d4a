use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use dosfl::cli::{self, Overrides, SweepParam};
use dosfl::Result;

/// Federated-learning aggregation experiments.
#[derive(Parser)]
#[command(name = "dosfl", version)]
struct Args {
    #[command(subcommand)]
    command: Command,
}

#[derive(clap::Args)]
struct Common {
    #[arg(long)]
    config: PathBuf,
    /// Overrides `seed` from the file and DOSFL_SEED.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    output_dir: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Run one experiment.
    Run {
        #[command(flatten)]
        common: Common,
    },
    /// Run several aggregators under the same seed.
    Compare {
        #[command(flatten)]
        common: Common,
        /// Comma-separated, e.g. fedavg,median,trimmed_mean,krum,dos
        #[arg(long)]
        aggregators: String,
        /// Comma-separated scenario presets; defaults to the config's.
        #[arg(long)]
        scenarios: Option<String>,
    },
    /// Sweep malicious_fraction or client_count.
    Sweep {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        param: String,
        /// Comma-separated values; defaults to 0.1..0.6 or 5,10,20,40.
        #[arg(long)]
        values: Option<String>,
    },
    /// COPOD utilities.
    Copod {
        #[command(subcommand)]
        command: CopodCommand,
    },
}

#[derive(Subcommand)]
enum CopodCommand {
    /// Print one outlier score per row of a headerless numeric CSV.
    Score {
        #[arg(long)]
        input: PathBuf,
    },
}

fn load(common: &Common) -> Result<dosfl::ExperimentConfig> {
    let env = std::env::var("DOSFL_SEED").ok();
    let overrides = Overrides {
        seed: Overrides::with_env_seed(common.seed, env.as_deref())?,
        output_dir: common.output_dir.clone(),
    };
    cli::load_config(&common.config, &overrides)
}

fn run(args: Args) -> Result<()> {
    match args.command {
        Command::Run { common } => {
            let cfg = load(&common)?;
            let s = cli::cmd_run(&cfg)?;
            println!(
                "{} / {}: final accuracy {:.4}, macro AUC {:.4} ({} rounds) -> {}",
                s.aggregator,
                s.scenario,
                s.final_round.accuracy,
                s.final_round.macro_auc,
                s.rounds,
                cfg.output_dir.display()
            );
        }
        Command::Compare {
            common,
            aggregators,
            scenarios,
        } => {
            let cfg = load(&common)?;
            let kinds = cli::parse_aggregators(&aggregators)?;
            let scenarios: Option<Vec<String>> =
                scenarios.map(|s| s.split(',').map(|x| x.trim().to_string()).collect());
            for r in cli::cmd_compare(&cfg, &kinds, scenarios.as_deref())? {
                println!("{:<13} {:<16} {:.4} {:.4}", r.aggregator, r.scenario, r.avg_metric, r.final_metric);
            }
        }
        Command::Sweep {
            common,
            param,
            values,
        } => {
            let cfg = load(&common)?;
            let param: SweepParam = param.parse()?;
            let values = match values {
                Some(v) => cli::parse_values(&v)?,
                None => param.default_values(),
            };
            for r in cli::cmd_sweep(&cfg, param, &values)? {
                println!("{} {} {:.4} {:.4}", r.sweep_param, r.value, r.avg_metric, r.final_metric);
            }
        }
        Command::Copod {
            command: CopodCommand::Score { input },
        } => {
            for s in cli::cmd_copod_score(&input)? {
                println!("{}", cli::format_sig9(s));
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Args::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
