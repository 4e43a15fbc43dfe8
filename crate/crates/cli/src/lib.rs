//! Command-line front end: configuration, the data pipeline shared by all
//! commands, and the comparison report.

pub mod commands;
pub mod config;
pub mod error;
pub mod pipeline;
pub mod report;

use std::path::PathBuf;

use clap::{Parser, Subcommand};

pub use config::{ModelKind, Overrides, RunConfig};
pub use error::CliError;

#[derive(Debug, Parser)]
#[command(name = "roadgnn", version, about = "Train and compare graph neural networks for traffic density forecasting")]
pub struct Cli {
    /// TOML run configuration; built-in defaults when omitted.
    #[arg(long, global = true, value_name = "PATH")]
    pub config: Option<PathBuf>,
    /// Seed for data generation and training (overrides the config).
    #[arg(long, global = true, value_name = "U64")]
    pub seed: Option<u64>,
    /// Output directory (overrides the config; default `out`).
    #[arg(long, global = true, value_name = "DIR")]
    pub out: Option<PathBuf>,
    /// Print only errors.
    #[arg(long, global = true)]
    pub quiet: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Write a synthetic dataset (graph.json, features.csv, manifest.json).
    Generate,
    /// Train one model and score it on the test split.
    Train {
        #[arg(long, value_parser = clap::value_parser!(ModelKind))]
        model: ModelKind,
    },
    /// Train the configured models on identical splits and report RMSE/MAE.
    Compare,
    /// Score the per-node historical-mean predictor.
    Baseline,
}

impl clap::ValueEnum for ModelKind {
    fn value_variants<'a>() -> &'a [Self] {
        &ModelKind::ALL
    }

    fn to_possible_value(&self) -> Option<clap::builder::PossibleValue> {
        Some(clap::builder::PossibleValue::new(self.key()))
    }
}

/// Resolves the effective configuration: file (or defaults), then flags.
pub fn resolve_config(cli: &Cli) -> Result<RunConfig, CliError> {
    let mut cfg = match &cli.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    cfg.apply(&Overrides {
        seed: cli.seed,
        out: cli.out.clone(),
    });
    cfg.validate()?;
    Ok(cfg)
}

/// Runs a parsed command line; results go to stdout unless `--quiet`.
pub fn run(cli: &Cli) -> Result<(), CliError> {
    let cfg = resolve_config(cli)?;
    let say = |text: &str| {
        if !cli.quiet {
            print!("{text}");
        }
    };
    match &cli.command {
        Command::Generate => {
            let m = commands::cmd_generate(&cfg)?;
            say(&format!(
                "wrote {} and {} ({} nodes, {} edges, {} timesteps) to {}\n",
                m.graph,
                m.features,
                m.num_nodes,
                m.num_edges,
                m.num_timesteps,
                cfg.out_dir().display()
            ));
        }
        Command::Train { model } => {
            let a = commands::cmd_train(&cfg, *model)?;
            say(&format!(
                "{}: test RMSE {:.4}, MAE {:.4} (artifacts in {})\n",
                a.metrics.name,
                a.metrics.test.rmse,
                a.metrics.test.mae,
                a.dir.display()
            ));
        }
        Command::Compare => {
            let r = commands::cmd_compare(&cfg)?;
            say(&r.report.render_table());
            let failed = r.report.failures();
            if failed > 0 {
                return Err(CliError::PartialComparison {
                    failed,
                    requested: r.report.rows.len(),
                });
            }
        }
        Command::Baseline => {
            let m = commands::cmd_baseline(&cfg)?;
            say(&format!("{}: test RMSE {:.4}, MAE {:.4}\n", m.name, m.test.rmse, m.test.mae));
        }
    }
    Ok(())
}
