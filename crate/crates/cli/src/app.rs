use std::path::PathBuf;

use bofscan_core::classifiers::Classifier;
use bofscan_core::evaluation::{format_table_row, Method};
use clap::{Args, Parser, Subcommand};

use crate::config::PipelineConfig;
use crate::error::{CliError, CliResult};
use crate::pipeline::{cmd_bench, cmd_eval, cmd_predict, cmd_register, cmd_synth, cmd_train, table_text};

#[derive(Debug, Parser)]
#[command(name = "bofscan", version, about = "Bag-of-features classification of B-scan patches")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Args)]
pub struct Common {
    /// Pipeline config JSON; missing keys take their defaults.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Output directory.
    #[arg(long)]
    pub out: PathBuf,
    /// Master seed, overriding the config's `master_seed`.
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate synthetic B-scans, patches and a manifest.
    Synth {
        #[command(flatten)]
        common: Common,
    },
    /// Fit the vocabulary and the BOF+MLP model.
    Train {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        manifest: PathBuf,
    },
    /// Score saved artifacts on their test split.
    Eval {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        manifest: PathBuf,
        /// Directory holding vocab.json, model.json and split.json.
        #[arg(long)]
        artifacts: PathBuf,
    },
    /// Compare all methods and run the hidden-size sweep.
    Bench {
        #[command(flatten)]
        common: Common,
        /// Use this corpus instead of synthesizing one.
        #[arg(long)]
        manifest: Option<PathBuf>,
        /// Comma-separated method names, e.g. `BOF+MLP,PCA+KNN`.
        #[arg(long)]
        methods: Option<String>,
    },
    /// Rigidly register two PGM images (or a synthetic pair).
    Register {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        fixed: Option<PathBuf>,
        #[arg(long)]
        moving: Option<PathBuf>,
    },
    /// Apply a saved model to a term-vector CSV.
    Predict {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        input: PathBuf,
    },
}

impl Command {
    fn common(&self) -> &Common {
        match self {
            Command::Synth { common }
            | Command::Train { common, .. }
            | Command::Eval { common, .. }
            | Command::Bench { common, .. }
            | Command::Register { common, .. }
            | Command::Predict { common, .. } => common,
        }
    }
}

fn load_config(common: &Common) -> CliResult<PipelineConfig> {
    let mut cfg = match &common.config {
        Some(p) => PipelineConfig::load(p)?,
        None => PipelineConfig::default(),
    };
    if let Some(seed) = common.seed {
        cfg.master_seed = seed;
    }
    Ok(cfg)
}

/// Runs one parsed command, returning the lines to print on success.
pub fn run(cli: &Cli) -> CliResult<Vec<String>> {
    let common = cli.command.common();
    let mut cfg = load_config(common)?;
    let out = &common.out;
    let lines = match &cli.command {
        Command::Synth { .. } => {
            let (m, path) = cmd_synth(&cfg, out)?;
            let ma = m.rows.iter().filter(|r| r.label.is_positive()).count();
            vec![format!(
                "wrote {} patches ({ma} MA, {} NORMAL) to {}",
                m.rows.len(),
                m.rows.len() - ma,
                path.display()
            )]
        }
        Command::Train { manifest, .. } => {
            let a = cmd_train(&cfg, manifest, out)?;
            vec![format!(
                "vocabulary K={} (wcss {:.4}); MLP {}-{}-1 kept epoch {}; artifacts in {}",
                a.vocab.k(),
                a.vocab.wcss(),
                Classifier::input_dim(&a.model),
                a.model.hidden(),
                a.best_epoch,
                out.display()
            )]
        }
        Command::Eval { manifest, artifacts, .. } => {
            let e = cmd_eval(&cfg, manifest, artifacts, out)?;
            vec![format!(
                "{} (test split, n={})",
                format_table_row(&e.row.method.name(), &e.row.metrics),
                e.test_indices.len()
            )]
        }
        Command::Bench { manifest, methods, .. } => {
            if let Some(list) = methods {
                cfg.methods =
                    Method::parse_list(list).map_err(CliError::from_core_usage)?.iter().map(Method::name).collect();
            }
            let b = cmd_bench(&cfg, manifest.as_deref(), out)?;
            table_text(&b.rows).lines().map(str::to_string).collect()
        }
        Command::Register { fixed, moving, .. } => {
            let r = cmd_register(&cfg, fixed.as_deref(), moving.as_deref(), out)?;
            let p = r.result;
            let mut lines = vec![format!(
                "angle {:.2} scale {:.3} tx {:.1} ty {:.1} score {:.4}",
                p.angle, p.scale, p.tx, p.ty, p.score
            )];
            if let Some(e) = r.expected {
                lines.push(format!("expected angle {:.2} scale {:.3} tx {:.1} ty {:.1}", e.angle, e.scale, e.tx, e.ty));
            }
            lines
        }
        Command::Predict { model, input, .. } => {
            let p = cmd_predict(model, input, out)?;
            let ma = p.predictions.iter().filter(|l| l.is_positive()).count();
            let mut lines = vec![format!("{} rows: {ma} MA, {} NORMAL", p.predictions.len(), p.predictions.len() - ma)];
            if let Some(m) = p.metrics {
                lines.push(format_table_row("model", &m));
            }
            lines
        }
    };
    Ok(lines)
}
