use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use apptopic::config::PipelineConfig;
use apptopic::pipeline;
use clap::{Args, Parser, Subcommand};

/// Classify Android apps by topic modeling the text found inside them.
///
/// Every stage reads and writes files in the output directory (config key
/// `output_dir`, default `.`) unless paths are given explicitly.
#[derive(Parser, Debug)]
#[command(name = "apptopic", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug)]
struct Common {
    /// Pipeline config file (`key = value` lines)
    #[arg(long, short)]
    config: Option<PathBuf>,
    /// Override the random seed
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Scan decompiled app directories into Dataset-1
    Extract {
        #[command(flatten)]
        common: Common,
        /// Directory holding one `<sha256>__<package>` directory per app
        #[arg(long)]
        input: Option<PathBuf>,
        #[arg(long)]
        dataset: Option<PathBuf>,
        #[arg(long)]
        quality: Option<PathBuf>,
    },
    /// Clean Dataset-1 into Dataset-2
    Preprocess {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        input: Option<PathBuf>,
        /// Quality flags from `extract`; measured from the dataset when absent
        #[arg(long)]
        quality: Option<PathBuf>,
        #[arg(long)]
        output: Option<PathBuf>,
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Fit the topic model on Dataset-2
    Fit {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        input: Option<PathBuf>,
        #[arg(long)]
        model: Option<PathBuf>,
        #[arg(long)]
        keys: Option<PathBuf>,
        #[arg(long)]
        composition: Option<PathBuf>,
        /// Number of topics (alpha is rescaled unless set in the config)
        #[arg(long)]
        topics: Option<usize>,
    },
    /// Assign categories and flag anomaly candidates
    Classify {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        model: Option<PathBuf>,
        #[arg(long)]
        input: Option<PathBuf>,
        #[arg(long)]
        quality: Option<PathBuf>,
        #[arg(long)]
        output: Option<PathBuf>,
        #[arg(long)]
        label_map: Option<PathBuf>,
    },
    /// Score a classification against reference labels
    Similarity {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        classification: Option<PathBuf>,
        #[arg(long)]
        reference: Option<PathBuf>,
        #[arg(long)]
        output: Option<PathBuf>,
        #[arg(long)]
        label_map: Option<PathBuf>,
    },
    /// Write topic-map plot data as JSON
    Topicmap {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        model: Option<PathBuf>,
        #[arg(long)]
        output: Option<PathBuf>,
    },
}

fn load_config(common: &Common) -> Result<PipelineConfig> {
    let mut cfg = match &common.config {
        Some(path) => PipelineConfig::load(path).with_context(|| format!("loading {}", path.display()))?,
        None => PipelineConfig::default(),
    };
    if let Some(seed) = common.seed {
        cfg.lda.seed = seed;
    }
    Ok(cfg)
}

fn ready(cfg: &PipelineConfig) -> Result<()> {
    cfg.validate()?;
    std::fs::create_dir_all(&cfg.output_dir).with_context(|| format!("creating {}", cfg.output_dir.display()))?;
    Ok(())
}

/// An explicit path, or `name` inside the output directory.
fn or_default(cfg: &PipelineConfig, path: Option<PathBuf>, name: &str) -> PathBuf {
    path.unwrap_or_else(|| cfg.output_dir.join(name))
}

/// Like [`or_default`], but only if the default file exists.
fn optional(cfg: &PipelineConfig, path: Option<PathBuf>, name: &str) -> Option<PathBuf> {
    path.or_else(|| Some(cfg.output_dir.join(name)).filter(|p| p.exists()))
}

const DATASET_1: &str = "dataset1.tsv";
const QUALITY: &str = "quality.tsv";
const DATASET_2: &str = "dataset2.tsv";
const REMOVED: &str = "removed.tsv";
const MODEL: &str = "model.lda";
const KEYS: &str = "topic_keys.tsv";
const COMPOSITION: &str = "composition.tsv";
const CLASSIFICATION: &str = "classification.tsv";
const SIMILARITY: &str = "similarity.tsv";
const TOPIC_MAP: &str = "topicmap.json";

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Extract {
            common,
            input,
            dataset,
            quality,
        } => {
            let mut cfg = load_config(&common)?;
            if input.is_some() {
                cfg.input_root = input;
            }
            ready(&cfg)?;
            let root = cfg
                .input_root
                .clone()
                .context("no input directory: pass --input or set input_root")?;
            let dataset = or_default(&cfg, dataset, DATASET_1);
            let quality = or_default(&cfg, quality, QUALITY);
            pipeline::cmd_extract(&cfg, &root, &dataset, &quality)?;
        }
        Command::Preprocess {
            common,
            input,
            quality,
            output,
            report,
        } => {
            let cfg = load_config(&common)?;
            ready(&cfg)?;
            let input = or_default(&cfg, input, DATASET_1);
            let quality = optional(&cfg, quality, QUALITY);
            let output = or_default(&cfg, output, DATASET_2);
            let report = or_default(&cfg, report, REMOVED);
            pipeline::cmd_preprocess(&cfg, &input, quality.as_deref(), &output, &report)?;
        }
        Command::Fit {
            common,
            input,
            model,
            keys,
            composition,
            topics,
        } => {
            let mut cfg = load_config(&common)?;
            if let Some(k) = topics {
                cfg.set_topics(k);
            }
            ready(&cfg)?;
            let input = or_default(&cfg, input, DATASET_2);
            let model = or_default(&cfg, model, MODEL);
            let keys = or_default(&cfg, keys, KEYS);
            let composition = or_default(&cfg, composition, COMPOSITION);
            pipeline::cmd_fit(&cfg, &input, &model, &keys, &composition)?;
        }
        Command::Classify {
            common,
            model,
            input,
            quality,
            output,
            label_map,
        } => {
            let mut cfg = load_config(&common)?;
            if label_map.is_some() {
                cfg.label_map = label_map;
            }
            ready(&cfg)?;
            let model = or_default(&cfg, model, MODEL);
            let input = or_default(&cfg, input, DATASET_2);
            let quality = optional(&cfg, quality, QUALITY);
            let output = or_default(&cfg, output, CLASSIFICATION);
            pipeline::cmd_classify(&cfg, &model, &input, quality.as_deref(), &output)?;
        }
        Command::Similarity {
            common,
            classification,
            reference,
            output,
            label_map,
        } => {
            let mut cfg = load_config(&common)?;
            if label_map.is_some() {
                cfg.label_map = label_map;
            }
            ready(&cfg)?;
            let classification = or_default(&cfg, classification, CLASSIFICATION);
            let reference = reference
                .or_else(|| cfg.reference_labels.clone())
                .context("no reference labels: pass --reference or set reference_labels")?;
            let output = or_default(&cfg, output, SIMILARITY);
            pipeline::cmd_similarity(&cfg, &classification, &reference, &output)?;
        }
        Command::Topicmap { common, model, output } => {
            let cfg = load_config(&common)?;
            ready(&cfg)?;
            let model = or_default(&cfg, model, MODEL);
            let output = or_default(&cfg, output, TOPIC_MAP);
            pipeline::cmd_topicmap(&cfg, &model, &output)?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
