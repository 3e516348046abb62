use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use fairserve::config::RunConfig;
use fairserve::harness::{
    cmd_compare, cmd_evaluate, cmd_gen_detector_data, cmd_train, cmd_train_detector,
};
use fairserve::learner::Algorithm;
use fairserve::FairserveError;

#[derive(Parser)]
#[command(name = "fairserve", version, about = "Fairness-sensitive service-agent training")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Flat key-value config file; unknown keys are rejected
    #[arg(long)]
    config: Option<PathBuf>,
    /// Overrides run.seed from the config
    #[arg(long)]
    seed: Option<u64>,
}

impl Common {
    fn resolve(&self) -> Result<RunConfig, FairserveError> {
        let mut cfg = match &self.config {
            Some(path) => RunConfig::load(path)?,
            None => RunConfig::default(),
        };
        if let Some(seed) = self.seed {
            cfg.seed = seed;
            cfg.train.seed = seed;
        }
        Ok(cfg)
    }
}

#[derive(Subcommand)]
enum Command {
    /// Generate synthetic labeled detector-training epochs
    GenDetectorData {
        #[command(flatten)]
        common: Common,
        /// Output dataset file (line-delimited records)
        #[arg(long)]
        out: PathBuf,
    },
    /// Fit the PCA + logistic detector on a labeled dataset
    TrainDetector {
        #[command(flatten)]
        common: Common,
        /// Labeled dataset produced by gen-detector-data
        dataset: PathBuf,
        /// Output detector checkpoint
        #[arg(long)]
        out: PathBuf,
    },
    /// Train a service policy, optionally under detector guidance
    Train {
        #[command(flatten)]
        common: Common,
        /// Run output directory
        #[arg(long)]
        out: PathBuf,
        /// Detector checkpoint (required when guidance is on)
        #[arg(long)]
        detector: Option<PathBuf>,
        /// Enable the detection reward penalty
        #[arg(long)]
        guidance: Option<bool>,
        /// Policy-gradient algorithm
        #[arg(long, value_parser = parse_algorithm)]
        algorithm: Option<Algorithm>,
        /// Number of training epochs
        #[arg(long)]
        epochs: Option<usize>,
    },
    /// Roll out a trained policy checkpoint and report issue metrics
    Evaluate {
        #[command(flatten)]
        common: Common,
        /// Policy checkpoint to evaluate
        policy: PathBuf,
        /// Optional detector checkpoint for a verdict on the rollout
        #[arg(long)]
        detector: Option<PathBuf>,
        /// Report output directory
        #[arg(long)]
        out: PathBuf,
    },
    /// Compare two completed run directories epoch by epoch
    Compare {
        run_a: PathBuf,
        run_b: PathBuf,
        /// Output table file
        #[arg(long)]
        out: PathBuf,
    },
}

fn parse_algorithm(s: &str) -> Result<Algorithm, String> {
    match s {
        "reinforce" => Ok(Algorithm::Reinforce),
        "ppo" => Ok(Algorithm::Ppo),
        other => Err(format!("unknown algorithm '{other}' (expected reinforce or ppo)")),
    }
}

fn run(cli: Cli) -> Result<(), FairserveError> {
    match cli.command {
        Command::GenDetectorData { common, out } => {
            let cfg = common.resolve()?;
            let n = cmd_gen_detector_data(&cfg, &out)?;
            println!("wrote {n} labeled epochs to {}", out.display());
        }
        Command::TrainDetector { common, dataset, out } => {
            let cfg = common.resolve()?;
            let fit = cmd_train_detector(&cfg, &dataset, &out)?;
            println!(
                "trained on {} epochs, held-out accuracy {:.4} on {} epochs; saved {}",
                fit.train_size,
                fit.holdout_accuracy,
                fit.holdout_size,
                out.display()
            );
        }
        Command::Train { common, out, detector, guidance, algorithm, epochs } => {
            let mut cfg = common.resolve()?;
            if let Some(g) = guidance {
                cfg.train.guidance = g;
            }
            if let Some(a) = algorithm {
                cfg.train.algorithm = a;
            }
            if let Some(e) = epochs {
                cfg.train.total_epochs = e;
            }
            let run = cmd_train(&cfg, detector.as_deref(), &out)?;
            let last = run.epoch_logs.last();
            println!(
                "trained {} epochs (detector queries: {}); final issue scalar {}; run dir {}",
                run.epoch_logs.len(),
                run.detector_queries,
                last.map_or("n/a".into(), |l| format!("{:.4}", l.scalar)),
                out.display()
            );
        }
        Command::Evaluate { common, policy, detector, out } => {
            let cfg = common.resolve()?;
            let report = cmd_evaluate(&cfg, &policy, detector.as_deref(), &out)?;
            println!(
                "evaluated {} episodes: issue scalar {:.4}, ignore rate {:.4}; report in {}",
                report.episodes,
                report.scalar,
                report.ignore_rate,
                out.display()
            );
        }
        Command::Compare { run_a, run_b, out } => {
            let cmp = cmd_compare(&run_a, &run_b, &out)?;
            println!(
                "epochs {}; biased epochs {} vs {}; mean scalar {:.4} vs {:.4} ({:+.2}%)",
                cmp.epochs,
                cmp.biased_epochs_a,
                cmp.biased_epochs_b,
                cmp.mean_scalar_a,
                cmp.mean_scalar_b,
                cmp.percent_difference
            );
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
