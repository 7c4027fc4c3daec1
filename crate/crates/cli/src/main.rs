mod commands;

use std::path::PathBuf;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};
use ghrm_core::harness::ExperimentConfig;

#[derive(Parser)]
#[command(
    name = "ghrm",
    version,
    about = "Graph-based hierarchical relevance matching reranker"
)]
struct Cli {
    /// Repeat for more log output.
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

/// Model, training and BM25 settings. Each flag overrides the same key of
/// `--config`; `--set key=value` reaches the keys without a dedicated flag.
#[derive(Args, Debug, Clone, Default)]
pub struct Knobs {
    /// Experiment config file of `key = value` lines.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub blocks: Option<usize>,
    #[arg(long)]
    pub rate: Option<f64>,
    #[arg(long)]
    pub topk: Option<usize>,
    #[arg(long)]
    pub window: Option<usize>,
    #[arg(long)]
    pub query_len: Option<usize>,
    #[arg(long)]
    pub doc_len: Option<usize>,
    #[arg(long)]
    pub lr: Option<f64>,
    #[arg(long)]
    pub epochs: Option<usize>,
    #[arg(long)]
    pub batches: Option<usize>,
    #[arg(long)]
    pub batch_pos: Option<usize>,
    /// Seeds both parameter initialization and sampling.
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub bm25_k1: Option<f64>,
    #[arg(long)]
    pub bm25_b: Option<f64>,
    #[arg(long, value_name = "KEY=VALUE")]
    pub set: Vec<String>,
}

impl Knobs {
    pub fn resolve(&self, mut cfg: ExperimentConfig) -> Result<ExperimentConfig> {
        if let Some(path) = &self.config {
            cfg = ExperimentConfig::read(path)?;
        }
        let mut pairs: Vec<(&str, String)> = Vec::new();
        let mut put = |k: &'static str, v: Option<String>| {
            if let Some(v) = v {
                pairs.push((k, v));
            }
        };
        put("blocks", self.blocks.map(|v| v.to_string()));
        put("rate", self.rate.map(|v| v.to_string()));
        put("topk", self.topk.map(|v| v.to_string()));
        put("window", self.window.map(|v| v.to_string()));
        put("query_len", self.query_len.map(|v| v.to_string()));
        put("doc_len", self.doc_len.map(|v| v.to_string()));
        put("lr", self.lr.map(|v| v.to_string()));
        put("epochs", self.epochs.map(|v| v.to_string()));
        put("batches", self.batches.map(|v| v.to_string()));
        put("batch_pos", self.batch_pos.map(|v| v.to_string()));
        put("seed", self.seed.map(|v| v.to_string()));
        put("model_seed", self.seed.map(|v| v.to_string()));
        put("bm25_k1", self.bm25_k1.map(|v| v.to_string()));
        put("bm25_b", self.bm25_b.map(|v| v.to_string()));
        for (k, v) in pairs {
            cfg.set(k, &v)?;
        }
        for kv in &self.set {
            let (k, v) = kv
                .split_once('=')
                .with_context(|| format!("--set expects KEY=VALUE, got {kv:?}"))?;
            cfg.set(k, v)?;
        }
        cfg.model.validate()?;
        Ok(cfg)
    }
}

/// Corpus, queries, judgments and optional pretrained vectors.
#[derive(Args, Debug, Clone)]
pub struct DataArgs {
    /// JSON lines with `doc_id` and `text`.
    #[arg(long)]
    pub corpus: PathBuf,
    /// `qid<TAB>title` lines.
    #[arg(long)]
    pub queries: PathBuf,
    #[arg(long)]
    pub qrels: PathBuf,
    /// word2vec text file; random vectors when absent.
    #[arg(long)]
    pub embeddings: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Build the vocabulary and inverted index of a corpus.
    Index {
        #[arg(long)]
        corpus: PathBuf,
        #[arg(long, default_value_t = 10)]
        min_count: usize,
        /// Output directory for vocab.json and index.json.
        #[arg(long)]
        out: PathBuf,
    },
    /// BM25 top-N run from an index.
    Candidates {
        /// Directory written by `index`.
        #[arg(long)]
        index: PathBuf,
        #[arg(long)]
        queries: PathBuf,
        #[arg(long, default_value_t = 150)]
        depth: usize,
        #[arg(long, default_value_t = 0.9)]
        bm25_k1: f64,
        #[arg(long, default_value_t = 0.4)]
        bm25_b: f64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Train a model and write a checkpoint directory.
    Train {
        #[command(flatten)]
        data: DataArgs,
        /// `qid<TAB>role` split; without it every judged query trains and
        /// nothing validates.
        #[arg(long)]
        split: Option<PathBuf>,
        #[command(flatten)]
        knobs: Knobs,
        #[arg(long)]
        out: PathBuf,
    },
    /// Rescore BM25 candidates with a trained model.
    Rerank {
        /// Checkpoint directory written by `train`.
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        corpus: PathBuf,
        #[arg(long)]
        queries: PathBuf,
        #[arg(long)]
        embeddings: Option<PathBuf>,
        /// Existing candidate run; BM25 over the corpus when absent.
        #[arg(long)]
        candidates: Option<PathBuf>,
        #[arg(long, default_value_t = 150)]
        depth: usize,
        /// Rerank only the queries of this role in the split file.
        #[arg(long, requires = "role")]
        split: Option<PathBuf>,
        #[arg(long, value_parser = ["train", "valid", "test"])]
        role: Option<String>,
        #[arg(long)]
        out: PathBuf,
    },
    /// nDCG and precision of a run.
    Eval {
        #[arg(long)]
        run: PathBuf,
        #[arg(long)]
        qrels: PathBuf,
        #[arg(long = "cutoff", default_values_t = [20])]
        cutoffs: Vec<usize>,
        /// Write the table here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Vary one setting at a time and report fold-averaged test metrics.
    Sweep {
        #[command(flatten)]
        data: DataArgs,
        #[command(flatten)]
        knobs: Knobs,
        #[arg(long, value_delimiter = ',')]
        grid_rate: Vec<f64>,
        #[arg(long, value_delimiter = ',')]
        grid_blocks: Vec<usize>,
        #[arg(long, value_delimiter = ',')]
        grid_topk: Vec<usize>,
        #[arg(long, default_value_t = 0)]
        split_seed: u64,
        /// How many of the five folds to run.
        #[arg(long, default_value_t = 5)]
        folds: usize,
        #[arg(long)]
        out: PathBuf,
    },
    /// Compare analytic and finite-difference gradients on random graphs.
    Gradcheck {
        #[arg(long, default_value_t = 20)]
        instances: usize,
        #[arg(long, default_value_t = 12)]
        max_nodes: usize,
        #[arg(long, default_value_t = 1e-5)]
        eps: f64,
        #[arg(long, default_value_t = 1e-4)]
        tolerance: f64,
        #[command(flatten)]
        knobs: Knobs,
    },
    /// Generate the planted-relevance synthetic corpus.
    Toy {
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Seeded five-fold split of the judged queries.
    Split {
        #[arg(long)]
        qrels: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Output directory for fold0.tsv … fold4.tsv.
        #[arg(long)]
        out: PathBuf,
    },
}

fn main() -> Result<()> {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    match cli.command {
        Command::Index {
            corpus,
            min_count,
            out,
        } => commands::index(&corpus, min_count, &out),
        Command::Candidates {
            index,
            queries,
            depth,
            bm25_k1,
            bm25_b,
            out,
        } => commands::candidates(&index, &queries, depth, bm25_k1, bm25_b, &out),
        Command::Train {
            data,
            split,
            knobs,
            out,
        } => commands::train(&data, split.as_deref(), &knobs, &out),
        Command::Rerank {
            model,
            corpus,
            queries,
            embeddings,
            candidates,
            depth,
            split,
            role,
            out,
        } => commands::rerank(commands::RerankArgs {
            model: &model,
            corpus: &corpus,
            queries: &queries,
            embeddings: embeddings.as_deref(),
            candidates: candidates.as_deref(),
            depth,
            split: split.as_deref().zip(role.as_deref()),
            out: &out,
        }),
        Command::Eval {
            run,
            qrels,
            cutoffs,
            out,
        } => commands::eval(&run, &qrels, &cutoffs, out.as_deref()),
        Command::Sweep {
            data,
            knobs,
            grid_rate,
            grid_blocks,
            grid_topk,
            split_seed,
            folds,
            out,
        } => commands::sweep(
            &data,
            &knobs,
            (grid_rate, grid_blocks, grid_topk),
            split_seed,
            folds,
            &out,
        ),
        Command::Gradcheck {
            instances,
            max_nodes,
            eps,
            tolerance,
            knobs,
        } => commands::gradcheck(instances, max_nodes, eps, tolerance, &knobs),
        Command::Toy { seed, out } => commands::toy(seed, &out),
        Command::Split { qrels, seed, out } => commands::split(&qrels, seed, &out),
    }
}
