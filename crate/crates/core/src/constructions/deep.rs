use nalgebra::DMatrix;
use serde::Serialize;

use super::mlp::{full_mlp_solution, verification_dataset, MlpSolution};
use super::rnn::block_leakage;
use crate::encoding::{self, Dataset, DatasetMode, EncodingSpec};
use crate::error::ConstructionError;
use crate::networks::{Activation, DeepMlp};
use crate::reps::IrrepTable;

#[derive(Debug, Clone, Serialize)]
pub struct DeepSolution {
    pub k: usize,
    pub deep: DeepMlp,
    pub merge: DMatrix<f64>,
    pub binary: MlpSolution,
}

/// Balanced tree: `W_1 = I_{k/2} (x) W_in`, `W_l = I_{k/2^l} (x) W_merge` with
/// `W_merge = W_in (I_2 (x) W_out)`, and a final `W_out`.
pub fn deep_mlp_solution(table: &IrrepTable, spec: &EncodingSpec, k: usize) -> Result<DeepSolution, ConstructionError> {
    if k < 2 || !k.is_power_of_two() {
        return Err(ConstructionError::NotPowerOfTwo(k));
    }
    let binary = full_mlp_solution(table, spec, 2, &Activation::monomial(2))?;
    let w_in = &binary.mlp.w_in;
    let w_out = &binary.mlp.w_out;
    let merge = w_in * DMatrix::<f64>::identity(2, 2).kronecker(w_out);
    let mut layers = vec![DMatrix::<f64>::identity(k / 2, k / 2).kronecker(w_in)];
    let mut blocks = k / 4;
    while blocks >= 1 {
        layers.push(DMatrix::<f64>::identity(blocks, blocks).kronecker(&merge));
        blocks /= 2;
    }
    layers.push(w_out.clone());
    Ok(DeepSolution { k, deep: DeepMlp { layers }, merge, binary })
}

#[derive(Debug, Clone, Serialize)]
pub struct DeepReport {
    pub k: usize,
    pub depth: usize,
    pub widths: Vec<usize>,
    pub rows: usize,
    pub exhaustive: bool,
    pub relative_loss: f64,
    pub output_error: f64,
    /// Max error of each level's unembedded blocks against their pairwise partial products.
    pub level_errors: Vec<f64>,
    pub merge_leakage: f64,
}

impl DeepReport {
    pub fn passed(&self) -> bool {
        self.relative_loss < 1e-12 && self.output_error < 1e-8 && self.level_errors.iter().all(|e| *e < 1e-8) && self.merge_leakage < 1e-9
    }
}

pub fn verify_deep(
    table: &IrrepTable,
    spec: &EncodingSpec,
    sol: &DeepSolution,
    samples: Option<usize>,
) -> Result<DeepReport, ConstructionError> {
    let g = table.group();
    let data: Dataset = match samples {
        Some(rows) => encoding::make_dataset(g, sol.k, spec, DatasetMode::Sampled { rows, seed: super::mlp::VERIFY_SEED })?,
        None => verification_dataset(table, spec, sol.k)?,
    };
    let rows = data.all_rows();
    let x = data.inputs(&rows);
    let y = data.targets(&rows);
    let f = sol.deep.forward(&x);
    let diff = &f - &y;
    let relative_loss = 0.5 * diff.norm_squared() / rows.len() as f64 / (0.5 * spec.norm_sq());
    let hidden = sol.binary.mlp.hidden();
    let w_out = &sol.binary.mlp.w_out;
    let mut level_errors = Vec::new();
    for (l, h) in sol.deep.hidden_states(&x).iter().enumerate() {
        let span = 2usize << l;
        let mut worst: f64 = 0.0;
        for b in 0..h.nrows() / hidden {
            let un = w_out * h.rows(b * hidden, hidden);
            for (col, &row) in rows.iter().enumerate() {
                let seq = &data.sequence(row)[b * span..(b + 1) * span];
                let target = data.orbit(g.compose_sequence(seq).expect("nonempty"));
                for (i, t) in target.iter().enumerate() {
                    worst = worst.max((un[(i, col)] - t).abs());
                }
            }
        }
        level_errors.push(worst);
    }
    let labels: Vec<usize> = sol.binary.neuron_irrep.iter().map(|&i| table.class_of(i)).collect();
    let doubled: Vec<usize> = labels.iter().chain(&labels).copied().collect();
    Ok(DeepReport {
        k: sol.k,
        depth: sol.deep.depth(),
        widths: sol.deep.widths(),
        rows: rows.len(),
        exhaustive: data.mode == DatasetMode::Exhaustive,
        relative_loss,
        output_error: diff.amax(),
        level_errors,
        merge_leakage: block_leakage(&sol.merge, &labels, &doubled),
    })
}
