use nalgebra::DMatrix;
use serde::Serialize;

use super::mlp::{full_mlp_solution, MlpSolution};
use crate::encoding::{Dataset, EncodingSpec, SequenceSampler};
use crate::error::ConstructionError;
use crate::networks::{Activation, QuadraticRnn};
use crate::reps::IrrepTable;

#[derive(Debug, Clone, Serialize)]
pub struct RnnSolution {
    pub rnn: QuadraticRnn,
    pub binary: MlpSolution,
}

/// `W_in = W_left`, `W_drive = W_right`, `W_mix = W_left W_out`, `W_out = W_out` from the
/// binary quadratic solution.
pub fn rnn_solution(table: &IrrepTable, spec: &EncodingSpec) -> Result<RnnSolution, ConstructionError> {
    let binary = full_mlp_solution(table, spec, 2, &Activation::monomial(2))?;
    let n = table.group().order();
    let left = binary.mlp.w_in.columns(0, n).into_owned();
    let right = binary.mlp.w_in.columns(n, n).into_owned();
    let w_out = binary.mlp.w_out.clone();
    let rnn = QuadraticRnn { w_mix: &left * &w_out, w_in: left, w_drive: right, w_out };
    Ok(RnnSolution { rnn, binary })
}

#[derive(Debug, Clone, Serialize)]
pub struct RnnReport {
    pub width: usize,
    pub max_k: usize,
    pub sequences: usize,
    /// Max error of `W_out h_i` against `x_{g_1...g_i}` over all prefixes.
    pub running_product_error: f64,
}

pub fn verify_rnn(
    table: &IrrepTable,
    spec: &EncodingSpec,
    sol: &RnnSolution,
    max_k: usize,
    sequences: usize,
    seed: u64,
) -> Result<RnnReport, ConstructionError> {
    if max_k < 2 {
        return Err(ConstructionError::DegreeTooSmall(max_k));
    }
    let g = table.group();
    let mut sampler = SequenceSampler::new(g.order(), max_k, seed);
    let seqs = sampler.batch(sequences);
    let data = Dataset::from_sequences(g, max_k, &spec.x, &seqs);
    let outs = sol.rnn.running_outputs(&data.inputs(&data.all_rows()));
    let mut worst: f64 = 0.0;
    for (step, out) in outs.iter().enumerate() {
        let len = step + 2;
        for (col, s) in seqs.iter().enumerate() {
            let p = g.compose_sequence(&s[..len]).expect("nonempty");
            let target = data.orbit(p);
            for (h, t) in target.iter().enumerate() {
                worst = worst.max((out[(h, col)] - t).abs());
            }
        }
    }
    Ok(RnnReport { width: sol.rnn.hidden(), max_k, sequences, running_product_error: worst })
}

/// Largest entry of `m` coupling different classes, relative to the largest entry overall.
/// `row_class[i]` and `col_class[j]` label the hidden units.
pub fn block_leakage(m: &DMatrix<f64>, row_class: &[usize], col_class: &[usize]) -> f64 {
    let scale = m.amax();
    if scale == 0.0 {
        return 0.0;
    }
    let mut worst: f64 = 0.0;
    for i in 0..m.nrows() {
        for j in 0..m.ncols() {
            if row_class[i] != col_class[j] {
                worst = worst.max(m[(i, j)].abs());
            }
        }
    }
    worst / scale
}

#[derive(Debug, Clone, Serialize)]
pub struct BlockReport {
    pub classes: usize,
    pub leakage: f64,
}

/// Checks that `W_mix` only couples hidden units aligned to the same irrep class.
pub fn mix_block_structure_check(rnn: &QuadraticRnn, table: &IrrepTable, neuron_irrep: &[usize]) -> BlockReport {
    let labels: Vec<usize> = neuron_irrep.iter().map(|&i| table.class_of(i)).collect();
    let mut distinct = labels.clone();
    distinct.sort_unstable();
    distinct.dedup();
    BlockReport { classes: distinct.len(), leakage: block_leakage(&rnn.w_mix, &labels, &labels) }
}
