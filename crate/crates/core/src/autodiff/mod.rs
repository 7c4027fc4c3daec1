//! Dense-matrix reverse-mode differentiation, gradient checking and Adam.

mod adam;
mod gradcheck;
mod matrix;
mod params;
mod tape;

pub use adam::{AdamConfig, AdamState};
pub use gradcheck::{grad_check, GradCheckReport};
pub use matrix::Matrix;
pub use params::{Bound, GradStore, ParamId, ParamStore, CHECKPOINT_FORMAT, CHECKPOINT_VERSION};
pub use tape::{top_indices, Gradients, Tape, Var};
