use std::path::Path;
use std::process::{Command, Output};

fn ghrm(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ghrm"))
        .args(args)
        .output()
        .expect("running ghrm")
}

fn ok(args: &[&str]) -> String {
    let out = ghrm(args);
    assert!(
        out.status.success(),
        "ghrm {args:?} failed:\n{}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

/// toy → split → index → candidates → train → rerank → eval in `dir`;
/// returns the rerank run and the metrics table.
fn pipeline(dir: &Path) -> (String, String) {
    let toy = dir.join("toy");
    ok(&["toy", "--out", s(&toy)]);
    let folds = dir.join("folds");
    ok(&[
        "split",
        "--qrels",
        s(&toy.join("qrels.txt")),
        "--seed",
        "0",
        "--out",
        s(&folds),
    ]);
    let index = dir.join("index");
    let out = ok(&[
        "index",
        "--corpus",
        s(&toy.join("corpus.jsonl")),
        "--min-count",
        "1",
        "--out",
        s(&index),
    ]);
    assert!(out.contains("200 documents"), "{out}");
    let bm25 = dir.join("bm25.run");
    ok(&[
        "candidates",
        "--index",
        s(&index),
        "--queries",
        s(&toy.join("queries.tsv")),
        "--out",
        s(&bm25),
    ]);

    let model = dir.join("model");
    let (corpus, queries, qrels, emb) = (
        toy.join("corpus.jsonl"),
        toy.join("queries.tsv"),
        toy.join("qrels.txt"),
        toy.join("embeddings.txt"),
    );
    let (conf, fold0) = (toy.join("toy.conf"), folds.join("fold0.tsv"));
    let train = [
        "train",
        "--corpus",
        s(&corpus),
        "--queries",
        s(&queries),
        "--qrels",
        s(&qrels),
        "--embeddings",
        s(&emb),
        "--config",
        s(&conf),
        "--split",
        s(&fold0),
        "--epochs",
        "2",
        "--batches",
        "4",
        "--seed",
        "7",
        "--out",
        s(&model),
    ];
    ok(&train);
    for f in [
        "params.json",
        "config.json",
        "experiment.conf",
        "vocab.json",
        "train_log.tsv",
    ] {
        assert!(model.join(f).exists(), "missing {f}");
    }
    let log = std::fs::read_to_string(model.join("train_log.tsv")).unwrap();
    assert_eq!(log.lines().count(), 3);

    let run = dir.join("ghrm.run");
    ok(&[
        "rerank",
        "--model",
        s(&model),
        "--corpus",
        s(&toy.join("corpus.jsonl")),
        "--queries",
        s(&toy.join("queries.tsv")),
        "--embeddings",
        s(&toy.join("embeddings.txt")),
        "--candidates",
        s(&bm25),
        "--split",
        s(&folds.join("fold0.tsv")),
        "--role",
        "test",
        "--out",
        s(&run),
    ]);
    let metrics = dir.join("metrics.tsv");
    ok(&[
        "eval",
        "--run",
        s(&run),
        "--qrels",
        s(&toy.join("qrels.txt")),
        "--cutoff",
        "5",
        "--cutoff",
        "20",
        "--out",
        s(&metrics),
    ]);
    (
        std::fs::read_to_string(run).unwrap(),
        std::fs::read_to_string(metrics).unwrap(),
    )
}

#[test]
fn pipeline_is_deterministic_and_well_formed() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let (run_a, metrics_a) = pipeline(a.path());
    let (run_b, metrics_b) = pipeline(b.path());
    assert_eq!(run_a, run_b);
    assert_eq!(metrics_a, metrics_b);

    let test_qids: Vec<String> = std::fs::read_to_string(a.path().join("folds/fold0.tsv"))
        .unwrap()
        .lines()
        .filter(|l| l.ends_with("\ttest"))
        .map(|l| l.split('\t').next().unwrap().to_string())
        .collect();
    assert_eq!(test_qids.len(), 4);
    for line in run_a.lines() {
        let f: Vec<&str> = line.split_whitespace().collect();
        assert_eq!(f.len(), 6, "{line}");
        assert_eq!(f[1], "Q0");
        assert_eq!(f[5], "GHRM");
        assert!(test_qids.iter().any(|q| q == f[0]));
    }
    for metric in ["ndcg@5", "P@5", "ndcg@20", "P@20"] {
        assert!(
            metrics_a
                .lines()
                .any(|l| l.starts_with(&format!("{metric}\tall\t"))),
            "{metrics_a}"
        );
    }
}

#[test]
fn candidates_respect_depth() {
    let dir = tempfile::tempdir().unwrap();
    let toy = dir.path().join("toy");
    ok(&["toy", "--out", s(&toy), "--seed", "3"]);
    let index = dir.path().join("index");
    ok(&[
        "index",
        "--corpus",
        s(&toy.join("corpus.jsonl")),
        "--min-count",
        "1",
        "--out",
        s(&index),
    ]);
    let run = dir.path().join("bm25.run");
    ok(&[
        "candidates",
        "--index",
        s(&index),
        "--queries",
        s(&toy.join("queries.tsv")),
        "--depth",
        "3",
        "--out",
        s(&run),
    ]);
    let text = std::fs::read_to_string(run).unwrap();
    assert_eq!(text.lines().count(), 20 * 3);
    assert!(text.lines().all(|l| l.ends_with(" bm25")));
}

#[test]
fn gradcheck_passes_on_small_instances() {
    let out = ok(&[
        "gradcheck",
        "--instances",
        "2",
        "--max-nodes",
        "6",
        "--seed",
        "1",
    ]);
    let err: f64 = out
        .lines()
        .find_map(|l| l.strip_prefix("max_rel_error\t"))
        .unwrap()
        .parse()
        .unwrap();
    assert!(err < 1e-4, "{out}");
}

#[test]
fn eval_prints_table_to_stdout() {
    let dir = tempfile::tempdir().unwrap();
    let run = dir.path().join("r.run");
    let qrels = dir.path().join("q.txt");
    std::fs::write(&run, "1 Q0 a 1 3.0 t\n1 Q0 b 2 2.0 t\n1 Q0 c 3 1.0 t\n").unwrap();
    std::fs::write(&qrels, "1 0 a 1\n1 0 c 1\n").unwrap();
    let out = ok(&[
        "eval",
        "--run",
        s(&run),
        "--qrels",
        s(&qrels),
        "--cutoff",
        "2",
    ]);
    assert!(out.contains("ndcg@2\tall\t0.6131"), "{out}");
    assert!(out.contains("P@2\tall\t0.5000"), "{out}");
}

#[test]
fn bad_input_fails_with_a_message() {
    let out = ghrm(&[
        "eval",
        "--run",
        "/nonexistent/run",
        "--qrels",
        "/nonexistent/qrels",
    ]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("/nonexistent/run"));

    let out = ghrm(&["gradcheck", "--instances", "1", "--rate", "1.5"]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("rate"));

    let out = ghrm(&["gradcheck", "--instances", "1", "--set", "nonsense=1"]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("nonsense"));
}
