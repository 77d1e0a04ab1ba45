use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use langcorr::pipeline;
use langcorr::{PipelineConfig, Result};

#[derive(Parser)]
#[command(name = "langcorr", version, about = "Community-level outcome prediction from message text")]
struct Cli {
    /// Configuration file of `key = value` lines.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true)]
    workdir: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads (0 = one per core).
    #[arg(long, global = true)]
    workers: Option<usize>,
    #[arg(long, short, global = true)]
    verbose: bool,
    /// Override any configuration key, e.g. `--set folds=5`.
    #[arg(long = "set", global = true, value_name = "KEY=VALUE")]
    overrides: Vec<String>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Read sentences and yearly target files into the workdir.
    Ingest,
    /// Embed sentences and write the community feature matrix.
    EmbedAggregate,
    /// Fit the cross-validated ridge model (every ingested target by default).
    Fit {
        #[arg(long)]
        target: Vec<String>,
    },
    /// Recompute metrics from stored out-of-fold predictions.
    Evaluate {
        #[arg(long)]
        target: Vec<String>,
    },
    /// Cluster sentences and rank clusters by model prediction.
    Rank {
        #[arg(long)]
        target: Vec<String>,
        /// Use this model file instead of the workdir's (needs exactly one target).
        #[arg(long)]
        model: Option<PathBuf>,
    },
    /// Write a synthetic corpus with a known ground truth.
    Synth,
    /// Check sentences and targets for coverage problems.
    Validate,
}

fn config(cli: &Cli) -> Result<PipelineConfig> {
    let mut cfg = match &cli.config {
        Some(p) => PipelineConfig::load(p)?,
        None => PipelineConfig::default(),
    };
    for o in &cli.overrides {
        cfg.apply_override(o)?;
    }
    if let Some(w) = &cli.workdir {
        cfg.workdir = w.clone();
    }
    if let Some(s) = cli.seed {
        cfg.seed = s;
    }
    if let Some(w) = cli.workers {
        cfg.workers = w;
    }
    cfg.verbose |= cli.verbose;
    Ok(cfg)
}

fn run(cli: &Cli) -> Result<()> {
    let cfg = config(cli)?;
    match &cli.command {
        Command::Ingest => println!("{}", pipeline::ingest(&cfg)?),
        Command::EmbedAggregate => println!("{}", pipeline::embed_aggregate(&cfg)?),
        Command::Fit { target } => {
            for t in pipeline::resolve_targets(&cfg, target)? {
                println!("== {t}\n{}", pipeline::fit(&cfg, &t)?);
            }
        }
        Command::Evaluate { target } => {
            for t in pipeline::resolve_targets(&cfg, target)? {
                println!("== {t}\n{}", pipeline::evaluate(&cfg, &t)?);
            }
        }
        Command::Rank { target, model } => {
            let targets = match model {
                Some(_) if target.len() != 1 => {
                    return Err(langcorr::Error::InvalidArgument(
                        "--model needs exactly one --target".into(),
                    ))
                }
                Some(_) => target.clone(),
                None => pipeline::resolve_targets(&cfg, target)?,
            };
            for t in targets {
                println!("== {t}\n{}", pipeline::rank(&cfg, &t, model.as_deref())?);
            }
        }
        Command::Synth => println!("{}", pipeline::synth(&cfg)?),
        Command::Validate => println!("{}", pipeline::validate(&cfg)?),
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error[{}]: {e}", e.code());
            ExitCode::FAILURE
        }
    }
}
