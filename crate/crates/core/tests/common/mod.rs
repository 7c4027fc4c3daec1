//! Loop-based reference implementations and random fixtures shared by the
//! integration tests. Nothing here touches the tape.

#![allow(dead_code)]

use std::collections::{BTreeMap, HashSet};

use ghrm_core::autodiff::{Matrix, ParamStore};
use ghrm_core::corpus::{PreparedQuery, TermId};
use ghrm_core::docgraph::GraphInput;
use ghrm_core::ghrm::{Ghrm, ModelConfig, Pooling};
use rand::Rng;

pub type Rows = Vec<Vec<f64>>;

pub fn to_rows(m: &Matrix) -> Rows {
    (0..m.rows()).map(|i| m.row(i).to_vec()).collect()
}

pub fn matmul(a: &Rows, b: &Rows) -> Rows {
    let inner = b.len();
    let cols = b.first().map_or(0, Vec::len);
    a.iter()
        .map(|row| {
            (0..cols)
                .map(|j| (0..inner).map(|k| row[k] * b[k][j]).sum())
                .collect()
        })
        .collect()
}

fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

/// `a[i][j] / sqrt(d_i d_j)`, zero where a degree is zero.
pub fn normalize_loop(a: &Rows) -> Rows {
    let d: Vec<f64> = a.iter().map(|r| r.iter().sum()).collect();
    (0..a.len())
        .map(|i| {
            (0..a.len())
                .map(|j| {
                    if d[i] > 0.0 && d[j] > 0.0 {
                        a[i][j] / (d[i] * d[j]).sqrt()
                    } else {
                        0.0
                    }
                })
                .collect()
        })
        .collect()
}

/// The ten gated-layer weights in `w_a, w_z, u_z, b_z, w_r, u_r, b_r, w_h, u_h, b_h` order.
pub struct Gru {
    pub w: [Rows; 10],
}

impl Gru {
    pub fn from_store(params: &ParamStore, prefix: &str) -> Self {
        let names = [
            "w_a", "w_z", "u_z", "b_z", "w_r", "u_r", "b_r", "w_h", "u_h", "b_h",
        ];
        Self {
            w: names.map(|n| to_rows(params.get(params.id(&format!("{prefix}.{n}")).unwrap()))),
        }
    }
}

/// Element by element: every product and sum spelled out.
pub fn gnn_layer_loop(h: &Rows, a_norm: &Rows, g: &Gru) -> Rows {
    let m = h.len();
    let width = h.first().map_or(0, Vec::len);
    let [w_a, w_z, u_z, b_z, w_r, u_r, b_r, w_h, u_h, b_h] = &g.w;
    let mut ah = vec![vec![0.0; width]; m];
    for i in 0..m {
        for j in 0..m {
            for c in 0..width {
                ah[i][c] += a_norm[i][j] * h[j][c];
            }
        }
    }
    let a = matmul(&ah, w_a);
    let mut z = vec![vec![0.0; width]; m];
    let mut r = vec![vec![0.0; width]; m];
    for i in 0..m {
        for c in 0..width {
            let mut zp = b_z[0][c];
            let mut rp = b_r[0][c];
            for k in 0..width {
                zp += a[i][k] * w_z[k][c] + h[i][k] * u_z[k][c];
                rp += a[i][k] * w_r[k][c] + h[i][k] * u_r[k][c];
            }
            z[i][c] = sigmoid(zp);
            r[i][c] = sigmoid(rp);
        }
    }
    let mut out = vec![vec![0.0; width]; m];
    for i in 0..m {
        for c in 0..width {
            let mut hp = b_h[0][c];
            for k in 0..width {
                hp += a[i][k] * w_h[k][c] + r[i][k] * h[i][k] * u_h[k][c];
            }
            out[i][c] = hp.tanh() * z[i][c] + h[i][c] * (1.0 - z[i][c]);
        }
    }
    out
}

/// `Σ_j g_j · (relu(col_j · W1 + b1) · W2 + b2)`.
pub fn score_loop(signal: &Rows, gates: &[f64], w1: &Rows, b1: &Rows, w2: &Rows, b2: &Rows) -> f64 {
    let rows = signal.len();
    let m = gates.len();
    let hidden = b1[0].len();
    let mut total = 0.0;
    for j in 0..m {
        let mut f = b2[0][0];
        for u in 0..hidden {
            let mut pre = b1[0][u];
            for r in 0..rows {
                pre += signal[r][j] * w1[r][u];
            }
            f += pre.max(0.0) * w2[u][0];
        }
        total += gates[j] * f;
    }
    total
}

/// Per column, the `k` largest values in descending order, zero-padded.
pub fn topk_loop(h: &Rows, width: usize, k: usize) -> Rows {
    let mut out = vec![vec![0.0; width]; k];
    for c in 0..width {
        let mut col: Vec<f64> = h.iter().map(|r| r[c]).collect();
        col.sort_by(|a, b| b.total_cmp(a));
        for (slot, v) in col.into_iter().take(k).enumerate() {
            out[slot][c] = v;
        }
    }
    out
}

/// Indices of the `keep` largest scores, ties to the lower index.
pub fn top_rank_loop(scores: &[f64], keep: usize) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..scores.len()).collect();
    idx.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]).then(a.cmp(&b)));
    idx.truncate(keep);
    idx
}

pub fn ceil_keep(m: usize, rate: f64) -> usize {
    if m == 0 {
        return 0;
    }
    // exact for rates given in tenths or hundredths
    let scaled = (rate * 1000.0).round() as usize;
    ((m * scaled).div_ceil(1000)).clamp(1, m)
}

pub fn gates_loop(idf: &[f64], mask: &[bool], c: f64) -> Vec<f64> {
    let max = idf
        .iter()
        .zip(mask)
        .filter(|(_, &m)| m)
        .map(|(v, _)| c * v)
        .fold(f64::NEG_INFINITY, f64::max);
    let e: Vec<f64> = idf
        .iter()
        .zip(mask)
        .map(|(v, &m)| if m { (c * v - max).exp() } else { 0.0 })
        .collect();
    let s: f64 = e.iter().sum();
    e.into_iter().map(|x| x / s).collect()
}

/// The whole forward pass built from the loop pieces above.
pub fn forward_loop(model: &Ghrm, input: &GraphInput, query: &PreparedQuery) -> f64 {
    let cfg = model.config();
    let p = model.params();
    let get = |n: &str| to_rows(p.get(p.id(n).unwrap()));
    let m = cfg.query_len;
    let mut h = to_rows(&input.interaction);
    let mut adj = to_rows(&input.adjacency);
    let mut signal = topk_loop(&h, m, cfg.topk);
    for t in 0..cfg.blocks {
        let a_norm = normalize_loop(&adj);
        let h_hat = gnn_layer_loop(&h, &a_norm, &Gru::from_store(p, &format!("block{t}.gnn")));
        if cfg.pooling == Pooling::Rsap && !h_hat.is_empty() {
            let proj = matmul(&h_hat, &get(&format!("block{t}.w_p")));
            let scores = gnn_layer_loop(
                &proj,
                &a_norm,
                &Gru::from_store(p, &format!("block{t}.scorer")),
            );
            let flat: Vec<f64> = scores.iter().map(|r| r[0]).collect();
            let kept = top_rank_loop(&flat, ceil_keep(flat.len(), cfg.rate));
            h = kept
                .iter()
                .map(|&i| h_hat[i].iter().map(|v| v * flat[i]).collect())
                .collect();
            adj = kept
                .iter()
                .map(|&i| kept.iter().map(|&j| adj[i][j]).collect())
                .collect();
        } else {
            h = h_hat;
        }
        signal.extend(topk_loop(&h, m, cfg.topk));
    }
    let c = get("gate.c")[0][0];
    let gates = gates_loop(&query.idf, &query.pad_mask, c);
    score_loop(
        &signal,
        &gates,
        &get("mlp.w1"),
        &get("mlp.b1"),
        &get("mlp.w2"),
        &get("mlp.b2"),
    )
}

/// Random graph input with `n` nodes: symmetric small integer weights,
/// zero diagonal, interaction in `[-1, 1]` with padded columns zeroed.
pub fn random_input(rng: &mut impl Rng, n: usize, query: &PreparedQuery) -> GraphInput {
    let m = query.len();
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
    let interaction = Matrix::from_fn(n, m, |_, c| {
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

/// `M` slots, at least one real term, random positive IDF.
pub fn random_query(rng: &mut impl Rng, m: usize) -> PreparedQuery {
    let real = rng.random_range(1..=m);
    let term_ids = (0..m)
        .map(|i| (i < real).then_some(TermId(i as u32)))
        .collect();
    let pad_mask: Vec<bool> = (0..m).map(|i| i < real).collect();
    let idf = pad_mask
        .iter()
        .map(|&r| if r { rng.random_range(0.1..5.0) } else { 0.0 })
        .collect();
    PreparedQuery {
        term_ids,
        pad_mask,
        idf,
    }
}

pub fn small_config(seed: u64) -> ModelConfig {
    ModelConfig {
        blocks: 2,
        rate: 0.8,
        topk: 3,
        query_len: 4,
        hidden: 8,
        seed,
        ..ModelConfig::default()
    }
}

/// BM25 by scanning every document for every query term.
pub fn bm25_brute(
    docs: &BTreeMap<String, Vec<TermId>>,
    query: &[TermId],
    k1: f64,
    b: f64,
) -> Vec<(String, f64)> {
    let n = docs.len() as f64;
    let avg = docs.values().map(|d| d.len() as f64).sum::<f64>() / n;
    let mut seen = HashSet::new();
    let terms: Vec<TermId> = query.iter().copied().filter(|t| seen.insert(*t)).collect();
    let mut out = Vec::new();
    for (id, doc) in docs {
        let mut score = 0.0;
        let mut hit = false;
        for &t in &terms {
            let tf = doc.iter().filter(|&&x| x == t).count() as f64;
            if tf == 0.0 {
                continue;
            }
            hit = true;
            let df = docs.values().filter(|d| d.contains(&t)).count() as f64;
            let idf = (1.0 + (n - df + 0.5) / (df + 0.5)).ln();
            let norm = k1 * (1.0 - b + b * doc.len() as f64 / avg);
            score += idf * tf * (k1 + 1.0) / (tf + norm);
        }
        if hit {
            out.push((id.clone(), score));
        }
    }
    out.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
    out
}

/// nDCG@k straight from the definition.
pub fn ndcg_brute(ranking: &[String], grades: &BTreeMap<String, u32>, k: usize) -> f64 {
    let mut dcg = 0.0;
    for (i, d) in ranking.iter().take(k).enumerate() {
        let g = grades.get(d).copied().unwrap_or(0) as f64;
        dcg += g / ((i + 2) as f64).log2();
    }
    let mut ideal: Vec<u32> = grades.values().copied().collect();
    ideal.sort_unstable_by(|a, b| b.cmp(a));
    let mut idcg = 0.0;
    for (i, g) in ideal.into_iter().take(k).enumerate() {
        idcg += g as f64 / ((i + 2) as f64).log2();
    }
    dcg / idcg
}

pub fn precision_brute(ranking: &[String], grades: &BTreeMap<String, u32>, k: usize) -> f64 {
    let mut hits = 0usize;
    for i in 0..k {
        if let Some(d) = ranking.get(i) {
            if grades.get(d).copied().unwrap_or(0) > 0 {
                hits += 1;
            }
        }
    }
    hits as f64 / k as f64
}
