use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::config::ModelConfig;
use super::layers::{
    assemble_signal, gate_weights, gnn_layer, hinge_loss, normalized_constant, readout, rsap,
    score, BlockVars, GruVars, MlpVars,
};
use crate::autodiff::{Bound, Matrix, ParamId, ParamStore, Tape, Var};
use crate::corpus::PreparedQuery;
use crate::docgraph::GraphInput;
use crate::error::{Error, Result};

pub const PARAMS_FILE: &str = "params.json";
pub const CONFIG_FILE: &str = "config.json";

const GRU_NAMES: [&str; 10] = [
    "w_a", "w_z", "u_z", "b_z", "w_r", "u_r", "b_r", "w_h", "u_h", "b_h",
];

#[derive(Debug, Clone, Copy)]
struct GruIds([ParamId; 10]);

impl GruIds {
    fn resolve(params: &ParamStore, prefix: &str) -> Result<Self> {
        let mut ids = [None; 10];
        for (slot, name) in ids.iter_mut().zip(GRU_NAMES) {
            *slot = Some(params.expect_id(&format!("{prefix}.{name}"))?);
        }
        Ok(Self(ids.map(|id| id.expect("filled above"))))
    }

    fn bind(&self, b: &Bound) -> GruVars {
        let v = self.0.map(|id| b.var(id));
        GruVars {
            w_a: v[0],
            w_z: v[1],
            u_z: v[2],
            b_z: v[3],
            w_r: v[4],
            u_r: v[5],
            b_r: v[6],
            w_h: v[7],
            u_h: v[8],
            b_h: v[9],
        }
    }
}

#[derive(Debug, Clone)]
struct BlockIds {
    gnn: GruIds,
    w_p: ParamId,
    scorer: GruIds,
}

#[derive(Debug, Clone)]
struct ModelIds {
    blocks: Vec<BlockIds>,
    c: ParamId,
    w1: ParamId,
    b1: ParamId,
    w2: ParamId,
    b2: ParamId,
}

impl ModelIds {
    fn resolve(params: &ParamStore, config: &ModelConfig) -> Result<Self> {
        let blocks = (0..config.blocks)
            .map(|t| {
                Ok(BlockIds {
                    gnn: GruIds::resolve(params, &format!("block{t}.gnn"))?,
                    w_p: params.expect_id(&format!("block{t}.w_p"))?,
                    scorer: GruIds::resolve(params, &format!("block{t}.scorer"))?,
                })
            })
            .collect::<Result<_>>()?;
        Ok(Self {
            blocks,
            c: params.expect_id("gate.c")?,
            w1: params.expect_id("mlp.w1")?,
            b1: params.expect_id("mlp.b1")?,
            w2: params.expect_id("mlp.w2")?,
            b2: params.expect_id("mlp.b2")?,
        })
    }
}

/// What a recorded forward pass exposes besides the score.
#[derive(Debug, Clone)]
pub struct Forward {
    pub score: Var,
    /// `k(T+1)×M` assembled signal.
    pub signal: Var,
    /// `1×M` gate weights.
    pub gates: Var,
    /// Node count entering each block, plus the count after the last one.
    pub node_counts: Vec<usize>,
}

/// The hierarchical matching model: configuration plus named parameters.
#[derive(Debug, Clone)]
pub struct Ghrm {
    config: ModelConfig,
    params: ParamStore,
    ids: ModelIds,
}

fn uniform(rng: &mut ChaCha8Rng, rows: usize, cols: usize, bound: f64) -> Matrix {
    Matrix::from_fn(rows, cols, |_, _| rng.random_range(-bound..=bound))
}

fn insert_gru(params: &mut ParamStore, rng: &mut ChaCha8Rng, prefix: &str, width: usize) {
    let bound = 1.0 / (width as f64).sqrt();
    for name in GRU_NAMES {
        let rows = if name.starts_with('b') { 1 } else { width };
        params.insert(format!("{prefix}.{name}"), uniform(rng, rows, width, bound));
    }
}

impl Ghrm {
    /// Fresh parameters drawn uniformly from `±1/sqrt(fan_in)` with `config.seed`.
    pub fn new(config: ModelConfig) -> Result<Self> {
        config.validate()?;
        let m = config.query_len;
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        let mut params = ParamStore::new();
        for t in 0..config.blocks {
            insert_gru(&mut params, &mut rng, &format!("block{t}.gnn"), m);
            params.insert(
                format!("block{t}.w_p"),
                uniform(&mut rng, m, 1, 1.0 / (m as f64).sqrt()),
            );
            insert_gru(&mut params, &mut rng, &format!("block{t}.scorer"), 1);
        }
        params.insert("gate.c", Matrix::scalar(config.gate_init));
        let k = config.signal_rows();
        let h = config.hidden;
        let b1 = 1.0 / (k as f64).sqrt();
        let b2 = 1.0 / (h as f64).sqrt();
        params.insert("mlp.w1", uniform(&mut rng, k, h, b1));
        params.insert("mlp.b1", uniform(&mut rng, 1, h, b1));
        params.insert("mlp.w2", uniform(&mut rng, h, 1, b2));
        params.insert("mlp.b2", uniform(&mut rng, 1, 1, b2));
        Self::from_parts(config, params)
    }

    /// Wraps existing parameters, checking every expected name and shape.
    pub fn from_parts(config: ModelConfig, params: ParamStore) -> Result<Self> {
        config.validate()?;
        let ids = ModelIds::resolve(&params, &config)?;
        let m = config.query_len;
        let expect = |id: ParamId, shape: (usize, usize)| -> Result<()> {
            let got = params.get(id).shape();
            if got != shape {
                return Err(Error::ShapeMismatch {
                    op: "model_params",
                    left: shape,
                    right: got,
                });
            }
            Ok(())
        };
        for block in &ids.blocks {
            for (gru, w) in [(&block.gnn, m), (&block.scorer, 1)] {
                for (id, name) in gru.0.iter().zip(GRU_NAMES) {
                    expect(*id, (if name.starts_with('b') { 1 } else { w }, w))?;
                }
            }
            expect(block.w_p, (m, 1))?;
        }
        expect(ids.c, (1, 1))?;
        expect(ids.w1, (config.signal_rows(), config.hidden))?;
        expect(ids.b1, (1, config.hidden))?;
        expect(ids.w2, (config.hidden, 1))?;
        expect(ids.b2, (1, 1))?;
        Ok(Self {
            config,
            params,
            ids,
        })
    }

    pub fn config(&self) -> &ModelConfig {
        &self.config
    }

    pub fn params(&self) -> &ParamStore {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut ParamStore {
        &mut self.params
    }

    pub fn set_params(&mut self, params: ParamStore) -> Result<()> {
        *self = Self::from_parts(self.config.clone(), params)?;
        Ok(())
    }

    /// Records the full forward pass on `tape` using parameters bound from
    /// [`Ghrm::params`] (or a same-layout store).
    pub fn record(
        &self,
        tape: &mut Tape,
        bound: &Bound,
        input: &GraphInput,
        query: &PreparedQuery,
    ) -> Result<Forward> {
        let cfg = &self.config;
        let m = cfg.query_len;
        if query.len() != m || input.interaction.cols() != m {
            return Err(Error::ShapeMismatch {
                op: "forward",
                left: (input.num_nodes(), m),
                right: input.interaction.shape(),
            });
        }
        if input.interaction.rows() != input.num_nodes()
            || input.adjacency.cols() != input.num_nodes()
        {
            return Err(Error::ShapeMismatch {
                op: "forward",
                left: input.adjacency.shape(),
                right: input.interaction.shape(),
            });
        }
        let c = bound.var(self.ids.c);
        let gates = gate_weights(tape, &query.idf, &query.pad_mask, c)?;

        let n = input.num_nodes();
        let (signal, node_counts) = if n == 0 {
            let zeros = tape.constant(Matrix::zeros(cfg.signal_rows(), m));
            (zeros, vec![0; cfg.blocks + 1])
        } else {
            let mut h = tape.constant(input.interaction.clone());
            let mut adjacency = input.adjacency.clone();
            let mut signals = vec![readout(tape, h, cfg.topk)];
            let mut node_counts = vec![n];
            for block in &self.ids.blocks {
                let vars = BlockVars {
                    gnn: block.gnn.bind(bound),
                    w_p: bound.var(block.w_p),
                    scorer: block.scorer.bind(bound),
                };
                let a_norm = normalized_constant(tape, &adjacency);
                let h_hat = gnn_layer(tape, h, a_norm, &vars.gnn)?;
                let pooled = rsap(
                    tape,
                    h_hat,
                    &adjacency,
                    a_norm,
                    &vars,
                    cfg.rate,
                    cfg.pooling,
                )?;
                h = pooled.h;
                adjacency = pooled.adjacency;
                node_counts.push(pooled.kept.len());
                signals.push(readout(tape, h, cfg.topk));
            }
            (assemble_signal(tape, &signals)?, node_counts)
        };

        let mlp = MlpVars {
            w1: bound.var(self.ids.w1),
            b1: bound.var(self.ids.b1),
            w2: bound.var(self.ids.w2),
            b2: bound.var(self.ids.b2),
        };
        let score = score(tape, signal, gates, &mlp)?;
        Ok(Forward {
            score,
            signal,
            gates,
            node_counts,
        })
    }

    /// Relevance score of one pair.
    pub fn score(&self, input: &GraphInput, query: &PreparedQuery) -> Result<f64> {
        let mut tape = Tape::new();
        let bound = self.params.bind(&mut tape);
        let fwd = self.record(&mut tape, &bound, input, query)?;
        Ok(tape.value(fwd.score).item())
    }

    /// Records `max(0, 1 − rel(q, d⁺) + rel(q, d⁻))`.
    pub fn record_hinge(
        &self,
        tape: &mut Tape,
        bound: &Bound,
        query: &PreparedQuery,
        positive: &GraphInput,
        negative: &GraphInput,
    ) -> Result<Var> {
        let pos = self.record(tape, bound, positive, query)?.score;
        let neg = self.record(tape, bound, negative, query)?.score;
        hinge_loss(tape, pos, neg)
    }

    /// Writes `params.json` and `config.json` into `dir`.
    pub fn save(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir)
            .map_err(|e| Error::io(format!("creating {}", dir.display()), e))?;
        self.params.save(&dir.join(PARAMS_FILE))?;
        let cfg = serde_json::to_string_pretty(&self.config)
            .map_err(|e| Error::json("serializing config", e))?;
        let path = dir.join(CONFIG_FILE);
        std::fs::write(&path, cfg).map_err(|e| Error::io(format!("writing {}", path.display()), e))
    }

    pub fn load(dir: &Path) -> Result<Self> {
        let path = dir.join(CONFIG_FILE);
        let text = std::fs::read_to_string(&path)
            .map_err(|e| Error::io(format!("reading {}", path.display()), e))?;
        let config: ModelConfig = serde_json::from_str(&text)
            .map_err(|e| Error::json(format!("parsing {}", path.display()), e))?;
        let params = ParamStore::load(&dir.join(PARAMS_FILE))?;
        Self::from_parts(config, params)
    }
}
