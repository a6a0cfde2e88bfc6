//! Explicit weights that solve the task exactly, each paired with a verifier.

pub mod deep;
pub mod mlp;
pub mod rnn;
pub mod waring;

pub use deep::{deep_mlp_solution, verify_deep, DeepReport, DeepSolution};
pub use mlp::{full_mlp_solution, sps_block, sps_solution, verify_mlp, verify_sps, MlpReport, MlpSolution, SpsReport};
pub use rnn::{block_leakage, mix_block_structure_check, rnn_solution, verify_rnn, BlockReport, RnnReport, RnnSolution};
pub use waring::{waring_scheme, WaringScheme};
