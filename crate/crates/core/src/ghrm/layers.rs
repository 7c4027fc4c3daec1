//! Individual stages of the matching network, recorded on a [`Tape`].
//!
//! Node features are rows: `H` is `m×M` and every weight acts by right
//! multiplication, so the neighbor message is `a = Ã·H·W_a`.

use crate::autodiff::{top_indices, Matrix, Tape, Var};
use crate::docgraph::normalize;
use crate::error::{Error, Result};

use super::config::{pooled_size, Pooling};

/// Gated update weights for one graph layer of width `w`
/// (`W_*`, `U_*` are `w×w`, `b_*` are `1×w`).
#[derive(Debug, Clone, Copy)]
pub struct GruVars {
    pub w_a: Var,
    pub w_z: Var,
    pub u_z: Var,
    pub b_z: Var,
    pub w_r: Var,
    pub u_r: Var,
    pub b_r: Var,
    pub w_h: Var,
    pub u_h: Var,
    pub b_h: Var,
}

/// Per-block weights: the feature layer, the `M×1` attention projection
/// and a width-1 gated layer that turns projections into node scores.
#[derive(Debug, Clone, Copy)]
pub struct BlockVars {
    pub gnn: GruVars,
    pub w_p: Var,
    pub scorer: GruVars,
}

#[derive(Debug, Clone, Copy)]
pub struct MlpVars {
    pub w1: Var,
    pub b1: Var,
    pub w2: Var,
    pub b2: Var,
}

fn affine_gate(tape: &mut Tape, a: Var, w: Var, h: Var, u: Var, b: Var) -> Result<Var> {
    let aw = tape.matmul(a, w)?;
    let hu = tape.matmul(h, u)?;
    let sum = tape.add(aw, hu)?;
    tape.add_row_broadcast(sum, b)
}

/// One message-passing step with the gated update:
///
/// ```text
/// a  = Ã H W_a
/// z  = σ(a W_z + H U_z + b_z)
/// r  = σ(a W_r + H U_r + b_r)
/// H̃  = tanh(a W_h + (r ⊙ H) U_h + b_h)
/// Ĥ  = H̃ ⊙ z + H ⊙ (1 − z)
/// ```
pub fn gnn_layer(tape: &mut Tape, h: Var, a_norm: Var, p: &GruVars) -> Result<Var> {
    let (m, _) = tape.shape(h);
    let (ar, ac) = tape.shape(a_norm);
    if ar != m || ac != m {
        return Err(Error::ShapeMismatch {
            op: "gnn_layer",
            left: tape.shape(h),
            right: (ar, ac),
        });
    }
    let ah = tape.matmul(a_norm, h)?;
    let a = tape.matmul(ah, p.w_a)?;

    let z_pre = affine_gate(tape, a, p.w_z, h, p.u_z, p.b_z)?;
    let z = tape.sigmoid(z_pre);
    let r_pre = affine_gate(tape, a, p.w_r, h, p.u_r, p.b_r)?;
    let r = tape.sigmoid(r_pre);

    let rh = tape.hadamard(r, h)?;
    let cand_pre = affine_gate(tape, a, p.w_h, rh, p.u_h, p.b_h)?;
    let cand = tape.tanh(cand_pre);

    let keep_new = tape.hadamard(cand, z)?;
    let one_minus_z = tape.affine(z, -1.0, 1.0);
    let keep_old = tape.hadamard(h, one_minus_z)?;
    tape.add(keep_new, keep_old)
}

#[derive(Debug, Clone)]
pub struct PoolOutput {
    /// Features entering the next block.
    pub h: Var,
    /// Raw adjacency among the kept nodes.
    pub adjacency: Matrix,
    /// Kept node positions (into this block's nodes), best score first.
    pub kept: Vec<usize>,
    /// Attention score of every node of this block.
    pub scores: Vec<f64>,
}

/// Relevance-signal attention pooling.
///
/// Scores `P = GNN(Ĥ W_p)` on the block's graph, keeps the
/// `ceil(m·rate)` best nodes (ties to the lower index), and rescales each
/// kept row of `Ĥ` by its score. With [`Pooling::None`] the input passes
/// through unchanged.
pub fn rsap(
    tape: &mut Tape,
    h_hat: Var,
    adjacency: &Matrix,
    a_norm: Var,
    block: &BlockVars,
    rate: f64,
    pooling: Pooling,
) -> Result<PoolOutput> {
    let m = tape.shape(h_hat).0;
    if pooling == Pooling::None {
        return Ok(PoolOutput {
            h: h_hat,
            adjacency: adjacency.clone(),
            kept: (0..m).collect(),
            scores: vec![1.0; m],
        });
    }
    let projected = tape.matmul(h_hat, block.w_p)?;
    let p = gnn_layer(tape, projected, a_norm, &block.scorer)?;
    let scores = tape.value(p).data().to_vec();

    let kept = top_indices(&scores, pooled_size(m, rate));
    let h_sel = tape.gather_rows(h_hat, &kept)?;
    let p_sel = tape.gather_rows(p, &kept)?;
    let h = tape.broadcast_mul(h_sel, p_sel)?;
    Ok(PoolOutput {
        h,
        adjacency: adjacency.select_square(&kept),
        kept,
        scores,
    })
}

/// Per query term, the `k` largest node values, zero-padded when `m < k`.
pub fn readout(tape: &mut Tape, h: Var, k: usize) -> Var {
    tape.topk_per_column(h, k)
}

/// Row-wise concatenation of per-block readouts, each `k×M`.
pub fn assemble_signal(tape: &mut Tape, signals: &[Var]) -> Result<Var> {
    let Some(&first) = signals.first() else {
        return Err(Error::ShapeMismatch {
            op: "assemble_signal",
            left: (0, 0),
            right: (0, 0),
        });
    };
    let shape = tape.shape(first);
    if let Some(&bad) = signals.iter().find(|&&s| tape.shape(s) != shape) {
        return Err(Error::ShapeMismatch {
            op: "assemble_signal",
            left: shape,
            right: tape.shape(bad),
        });
    }
    tape.concat_rows(signals)
}

/// Softmax of `c · idf` over real query terms; padded slots get zero.
pub fn gate_weights(tape: &mut Tape, idf: &[f64], pad_mask: &[bool], c: Var) -> Result<Var> {
    if !pad_mask.iter().any(|&m| m) {
        return Err(Error::NoQueryTerms);
    }
    let idf = tape.constant(Matrix::from_vec(1, idf.len(), idf.to_vec())?);
    let scaled = tape.scale_by(idf, c)?;
    tape.masked_softmax_rows(scaled, pad_mask)
}

/// `rel = Σ_j g_j · f(SIGNAL[:, j])` with one MLP `f` shared by all terms.
pub fn score(tape: &mut Tape, signal: Var, gates: Var, mlp: &MlpVars) -> Result<Var> {
    let (_, m) = tape.shape(signal);
    if tape.shape(gates) != (1, m) {
        return Err(Error::ShapeMismatch {
            op: "score",
            left: tape.shape(signal),
            right: tape.shape(gates),
        });
    }
    let columns = tape.transpose(signal);
    let hidden_pre = tape.matmul(columns, mlp.w1)?;
    let hidden_pre = tape.add_row_broadcast(hidden_pre, mlp.b1)?;
    let hidden = tape.relu(hidden_pre);
    let per_term = tape.matmul(hidden, mlp.w2)?;
    let per_term = tape.add_row_broadcast(per_term, mlp.b2)?;
    tape.matmul(gates, per_term)
}

/// `max(0, 1 − pos + neg)` on the tape.
pub fn hinge_loss(tape: &mut Tape, pos: Var, neg: Var) -> Result<Var> {
    let diff = tape.sub(pos, neg)?;
    let margin = tape.affine(diff, -1.0, 1.0);
    Ok(tape.relu(margin))
}

/// `max(0, 1 − pos + neg)`.
pub fn hinge(pos: f64, neg: f64) -> f64 {
    let m = 1.0 - (pos - neg);
    if m < 0.0 {
        0.0
    } else {
        m
    }
}

/// Normalized adjacency as a tape constant.
pub(crate) fn normalized_constant(tape: &mut Tape, adjacency: &Matrix) -> Var {
    tape.constant(normalize(adjacency))
}
