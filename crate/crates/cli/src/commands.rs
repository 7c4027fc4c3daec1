use std::fmt::Write as _;
use std::path::Path;

use anyhow::{bail, Context, Result};
use ghrm_core::autodiff::{grad_check, Matrix};
use ghrm_core::candidates::{Bm25Params, InvertedIndex};
use ghrm_core::corpus::{
    prepare_doc, read_corpus, read_queries, tokenize_all, PreparedQuery, TermId, Tokenizer,
    Vocabulary,
};
use ghrm_core::docgraph::GraphInput;
use ghrm_core::ghrm::Ghrm;
use ghrm_core::harness::{
    format_reports, format_sweep, generate_toy, ndcg_at, precision_at, rerank as rerank_run,
    split_folds, sweep as run_sweep, train as run_train, write_sweep, Dataset, EmbeddingSource,
    ExperimentConfig, Fold, GraphCache, Qrels, RunFile, SweepAxis, ToySpec, TrainReport,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::{DataArgs, Knobs};

pub const VOCAB_FILE: &str = "vocab.json";
pub const INDEX_FILE: &str = "index.json";
pub const EXPERIMENT_FILE: &str = "experiment.conf";
pub const TRAIN_LOG_FILE: &str = "train_log.tsv";

fn create_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        create_dir(parent)?;
    }
    std::fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

pub fn index(corpus: &Path, min_count: usize, out: &Path) -> Result<()> {
    let docs = read_corpus(corpus)?;
    let tokenizer = Tokenizer::new();
    let vocab = Vocabulary::build(tokenize_all(&tokenizer, &docs), min_count)?;
    let prepared: Vec<_> = docs
        .iter()
        .map(|d| prepare_doc(&d.doc_id, &d.text, &tokenizer, &vocab, usize::MAX))
        .collect();
    let index = InvertedIndex::build(&prepared)?;
    create_dir(out)?;
    vocab.save(&out.join(VOCAB_FILE))?;
    index.save(&out.join(INDEX_FILE))?;
    println!(
        "indexed {} documents, {} terms",
        index.n_docs(),
        vocab.len()
    );
    Ok(())
}

pub fn candidates(
    index_dir: &Path,
    queries: &Path,
    depth: usize,
    k1: f64,
    b: f64,
    out: &Path,
) -> Result<()> {
    let vocab = Vocabulary::load(&index_dir.join(VOCAB_FILE))?;
    let index = InvertedIndex::load(&index_dir.join(INDEX_FILE))?;
    let tokenizer = Tokenizer::new();
    let params = Bm25Params { k1, b };
    let lists = read_queries(queries)?.into_iter().map(|q| {
        let terms = vocab.ids_of(&tokenizer.tokenize(&q.title));
        index.top_candidates(&q.qid, &terms, depth, params)
    });
    let run = RunFile::from_candidates("bm25", lists);
    run.write(out)?;
    Ok(())
}

fn embedding_source(path: Option<&Path>) -> EmbeddingSource<'_> {
    path.map_or(EmbeddingSource::Random, EmbeddingSource::File)
}

fn load_dataset(data: &DataArgs, cfg: &ExperimentConfig) -> Result<Dataset> {
    let docs = read_corpus(&data.corpus)?;
    let queries = read_queries(&data.queries)?;
    let qrels = Qrels::read(&data.qrels)?;
    Ok(Dataset::build(
        &docs,
        &queries,
        qrels,
        cfg,
        None,
        embedding_source(data.embeddings.as_deref()),
    )?)
}

fn train_log(report: &TrainReport) -> String {
    let mut out = String::from("epoch\tloss\tmonitor_loss\tvalid_ndcg\n");
    for (i, (loss, monitor)) in report
        .epoch_losses
        .iter()
        .zip(&report.monitor_losses)
        .enumerate()
    {
        let valid = report
            .valid_ndcg
            .get(i)
            .map_or("-".to_string(), |v| format!("{v:.4}"));
        writeln!(out, "{}\t{loss:.6}\t{monitor:.6}\t{valid}", i + 1)
            .expect("writing to a String cannot fail");
    }
    out
}

pub fn train(data: &DataArgs, split: Option<&Path>, knobs: &Knobs, out: &Path) -> Result<()> {
    let cfg = knobs.resolve(ExperimentConfig::default())?;
    let dataset = load_dataset(data, &cfg)?;
    let (train_qids, valid_qids) = match split {
        Some(path) => {
            let fold = Fold::read(path)?;
            (fold.train, fold.valid)
        }
        None => (
            dataset.qrels.qids().map(str::to_string).collect(),
            Vec::new(),
        ),
    };
    let mut model = Ghrm::new(cfg.model.clone())?;
    let report = run_train(&mut model, &dataset, &train_qids, &valid_qids, &cfg.train)?;
    model.save(out)?;
    cfg.write(&out.join(EXPERIMENT_FILE))?;
    dataset.vocab.save(&out.join(VOCAB_FILE))?;
    write_text(&out.join(TRAIN_LOG_FILE), &train_log(&report))?;
    if report.skipped_queries > 0 {
        log::warn!(
            "{} training queries lacked a positive or a negative",
            report.skipped_queries
        );
    }
    println!(
        "trained {} for {} epochs, kept epoch {}, final loss {:.6}",
        model.config().variant(),
        report.epoch_losses.len(),
        report.best_epoch.map_or("-".to_string(), |e| e.to_string()),
        report.epoch_losses.last().copied().unwrap_or(f64::NAN)
    );
    Ok(())
}

pub struct RerankArgs<'a> {
    pub model: &'a Path,
    pub corpus: &'a Path,
    pub queries: &'a Path,
    pub embeddings: Option<&'a Path>,
    pub candidates: Option<&'a Path>,
    pub depth: usize,
    pub split: Option<(&'a Path, &'a str)>,
    pub out: &'a Path,
}

pub fn rerank(args: RerankArgs<'_>) -> Result<()> {
    let model = Ghrm::load(args.model)?;
    let mut cfg = ExperimentConfig::read(&args.model.join(EXPERIMENT_FILE))?;
    cfg.model = model.config().clone();
    cfg.candidates = args.depth;
    let vocab = Vocabulary::load(&args.model.join(VOCAB_FILE))?;
    let docs = read_corpus(args.corpus)?;
    let queries = read_queries(args.queries)?;
    let mut data = Dataset::build(
        &docs,
        &queries,
        Qrels::new(),
        &cfg,
        Some(vocab),
        embedding_source(args.embeddings),
    )?;
    if let Some(path) = args.candidates {
        data.candidates = RunFile::read(path)?;
    }
    let qids = match args.split {
        Some((path, role)) => {
            let fold = Fold::read(path)?;
            match role {
                "train" => fold.train,
                "valid" => fold.valid,
                _ => fold.test,
            }
        }
        None => data.qids(),
    };
    let (run, log) = rerank_run(
        &model,
        &data,
        &qids,
        &GraphCache::new(),
        args.depth,
        model.config().variant(),
    )?;
    if !log.skipped_docs.is_empty() {
        log::warn!("{} candidates had no document text", log.skipped_docs.len());
    }
    if !log.fallback_queries.is_empty() {
        log::warn!(
            "{} queries kept their BM25 order",
            log.fallback_queries.len()
        );
    }
    run.write(args.out)?;
    Ok(())
}

pub fn eval(run: &Path, qrels: &Path, cutoffs: &[usize], out: Option<&Path>) -> Result<()> {
    let run = RunFile::read(run)?;
    let qrels = Qrels::read(qrels)?;
    let mut reports = Vec::new();
    for &k in cutoffs {
        reports.push(ndcg_at(&run, &qrels, k)?);
        reports.push(precision_at(&run, &qrels, k)?);
    }
    if let Some(excluded) = reports.first().map(|r| r.excluded).filter(|&n| n > 0) {
        log::warn!("{excluded} queries without relevant documents were excluded");
    }
    let text = format_reports(&reports);
    match out {
        Some(path) => write_text(path, &text),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

pub fn sweep(
    data: &DataArgs,
    knobs: &Knobs,
    grids: (Vec<f64>, Vec<usize>, Vec<usize>),
    split_seed: u64,
    folds: usize,
    out: &Path,
) -> Result<()> {
    let cfg = knobs.resolve(ExperimentConfig::default())?;
    let (rates, blocks, topks) = grids;
    let mut axes = Vec::new();
    if !rates.is_empty() {
        axes.push(SweepAxis::Rate(rates));
    }
    if !blocks.is_empty() {
        axes.push(SweepAxis::Blocks(blocks));
    }
    if !topks.is_empty() {
        axes.push(SweepAxis::Topk(topks));
    }
    if axes.is_empty() {
        bail!("give at least one of --grid-rate, --grid-blocks, --grid-topk");
    }
    let dataset = load_dataset(data, &cfg)?;
    let qids: Vec<String> = dataset
        .qids()
        .into_iter()
        .filter(|q| dataset.qrels.query(q).is_some())
        .collect();
    let mut all = split_folds(&qids, split_seed)?;
    all.truncate(folds.max(1));
    let rows = run_sweep(&dataset, &all, &cfg, &axes)?;
    write_sweep(out, &rows, cfg.eval_cutoff)?;
    print!("{}", format_sweep(&rows, cfg.eval_cutoff));
    Ok(())
}

fn random_query(rng: &mut ChaCha8Rng, m: usize) -> PreparedQuery {
    let real = rng.random_range(1..=m);
    let pad_mask: Vec<bool> = (0..m).map(|i| i < real).collect();
    PreparedQuery {
        term_ids: (0..m)
            .map(|i| (i < real).then_some(TermId(i as u32)))
            .collect(),
        idf: pad_mask
            .iter()
            .map(|&r| if r { rng.random_range(0.1..5.0) } else { 0.0 })
            .collect(),
        pad_mask,
    }
}

fn random_graph(rng: &mut ChaCha8Rng, n: usize, query: &PreparedQuery) -> GraphInput {
    let mut adjacency = Matrix::zeros(n, n);
    for i in 0..n {
        for j in i + 1..n {
            if rng.random_bool(0.5) {
                let w = rng.random_range(1..=4) as f64;
                adjacency.set(i, j, w);
                adjacency.set(j, i, w);
            }
        }
    }
    let interaction = Matrix::from_fn(n, query.len(), |_, c| {
        if query.pad_mask[c] {
            rng.random_range(-1.0..=1.0)
        } else {
            0.0
        }
    });
    GraphInput {
        adjacency,
        interaction,
    }
}

pub fn gradcheck(
    instances: usize,
    max_nodes: usize,
    eps: f64,
    tolerance: f64,
    knobs: &Knobs,
) -> Result<()> {
    if max_nodes == 0 {
        bail!("--max-nodes must be positive");
    }
    let mut base = ExperimentConfig::default();
    base.model.blocks = 2;
    base.model.rate = 0.8;
    base.model.topk = 3;
    base.model.query_len = 4;
    base.model.hidden = 8;
    let cfg = knobs.resolve(base)?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.train.seed);
    let (mut worst, mut checked, mut skipped) = (0.0f64, 0, 0);
    for i in 0..instances {
        let mut model_cfg = cfg.model.clone();
        model_cfg.seed = cfg.model.seed.wrapping_add(i as u64);
        let model = Ghrm::new(model_cfg)?;
        let query = random_query(&mut rng, cfg.model.query_len);
        let (n_pos, n_neg) = (
            rng.random_range(1..=max_nodes),
            rng.random_range(1..=max_nodes),
        );
        let pos = random_graph(&mut rng, n_pos, &query);
        let neg = random_graph(&mut rng, n_neg, &query);
        let report = grad_check(model.params(), eps, |tape, bound| {
            model.record_hinge(tape, bound, &query, &pos, &neg)
        })?;
        log::info!("instance {i}: max rel error {:.3e}", report.max_rel_error);
        worst = worst.max(report.max_rel_error);
        checked += report.checked;
        skipped += report.skipped;
    }
    println!("instances\t{instances}\nchecked\t{checked}\nskipped\t{skipped}\nmax_rel_error\t{worst:.3e}");
    if worst >= tolerance {
        bail!("max relative error {worst:.3e} exceeds {tolerance:.1e}");
    }
    Ok(())
}

pub fn toy(seed: u64, out: &Path) -> Result<()> {
    let spec = ToySpec {
        seed,
        ..ToySpec::default()
    };
    let toy = generate_toy(&spec)?;
    toy.write(out)?;
    let mut cfg = ExperimentConfig::default();
    cfg.model.topk = 5;
    cfg.train.epochs = 20;
    cfg.train.batches = 16;
    cfg.min_count = 1;
    cfg.embedding_dim = spec.embedding_dim;
    cfg.eval_cutoff = 5;
    cfg.write(&out.join("toy.conf"))?;
    println!(
        "{} documents, {} queries",
        toy.docs.len(),
        toy.queries.len()
    );
    Ok(())
}

pub fn split(qrels: &Path, seed: u64, out: &Path) -> Result<()> {
    let qrels = Qrels::read(qrels)?;
    let qids: Vec<String> = qrels.qids().map(str::to_string).collect();
    create_dir(out)?;
    for (f, fold) in split_folds(&qids, seed)?.iter().enumerate() {
        fold.write(&out.join(format!("fold{f}.tsv")))?;
    }
    Ok(())
}
