//! Two-layer solutions assembled from sigma-pi-sigma neurons aligned to single irreps.
//!
//! For irrep `rho` with block `X = x_hat[rho]` and index tuple `(i_0, ..., i_k)`, an sps neuron
//! computes `w[h] prod_j z_j` with `z_j = <u_j, x_{g_j}> = Re Tr(rho(g_j) A_j)` and
//! `w[h] = Re Tr(rho(h) M)`, where `A_j = E_{i_j, i_{j-1}}` and `M = X E_{i_k, i_0}` (both
//! scaled). Summed over tuples, `b * prod conj(a_j)` telescopes into
//! `Tr(rho(h) X rho(g_1...g_k)^+)`. The other conjugation patterns of the real parts are
//! removed by `k+1` phase copies: inputs carry `e^{i pi c/(k+1)}`, the output `e^{i pi c k/(k+1)}`
//! (real parts of both for real irreps).

use std::f64::consts::PI;

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::Serialize;

use super::waring::{waring_scheme, WaringScheme};
use crate::encoding::{self, Dataset, DatasetMode, EncodingSpec, SINGULAR_TOL};
use crate::error::ConstructionError;
use crate::linalg::{self, cplx, CMat};
use crate::networks::{self, Activation, Model, TwoLayerMlp};
use crate::reps::IrrepTable;
use crate::theory::{self, LearnedSet};

/// Above this many sequences, verifiers fall back to a seeded sample.
pub const VERIFY_EXHAUSTIVE_ROWS: u128 = 100_000;
pub const VERIFY_SAMPLE_ROWS: usize = 1_000;
pub const VERIFY_SEED: u64 = 0x5eed;

/// One sigma-pi-sigma neuron; `a[j]` and `m` are the effective matrices with phases applied.
#[derive(Debug, Clone, Serialize)]
pub struct SpsNeuron {
    pub copy: usize,
    pub tuple: Vec<usize>,
    /// Input coefficient matrices: `u_j[g] = Re Tr(rho(g) s_j)`.
    pub s: Vec<CMat>,
    pub s_w: CMat,
    /// `A_j = X^+ s_j`, so that `<u_j, x_g> = Re Tr(rho(g) A_j)`.
    pub a: Vec<CMat>,
}

#[derive(Debug, Clone, Serialize)]
pub struct SpsBlock {
    pub irrep: usize,
    pub k: usize,
    /// Overall scale of the telescoped product.
    pub kappa: f64,
    /// Whether `X` was zero, in which case outputs vanish and inputs are unscaled.
    pub silent: bool,
    pub neurons: Vec<SpsNeuron>,
}

fn input_phase(irrep_real: bool, c: usize, k: usize) -> Complex64 {
    let z = Complex64::from_polar(1.0, PI * c as f64 / (k + 1) as f64);
    if irrep_real {
        cplx(z.re, 0.0)
    } else {
        z
    }
}

fn output_phase(irrep_real: bool, c: usize, k: usize) -> Complex64 {
    let z = Complex64::from_polar(1.0, PI * (c * k) as f64 / (k + 1) as f64);
    if irrep_real {
        cplx(z.re, 0.0)
    } else {
        z
    }
}

/// Sum over copies of `output_phase * prod conj(input_phase)`, the weight of the surviving term.
fn phase_gain(irrep_real: bool, k: usize) -> f64 {
    (1..=k + 1)
        .map(|c| output_phase(irrep_real, c, k) * input_phase(irrep_real, c, k).conj().powi(k as i32))
        .sum::<Complex64>()
        .re
}

/// All `n^{k+1}` index tuples, last index fastest.
fn tuples(n: usize, len: usize) -> Vec<Vec<usize>> {
    let mut out = vec![vec![]];
    for _ in 0..len {
        out = out.into_iter().flat_map(|t| (0..n).map(move |i| [t.clone(), vec![i]].concat())).collect();
    }
    out
}

/// Sps neurons for one irrep. `share` scales the function: 1 gives
/// `(n/|G|) Re Tr(rho(h) X rho(g)^+)`, `C_rho` gives the whole class increment.
pub fn sps_block(
    table: &IrrepTable,
    spec: &EncodingSpec,
    irrep: usize,
    k: usize,
    share: f64,
) -> Result<SpsBlock, ConstructionError> {
    if k < 2 {
        return Err(ConstructionError::DegreeTooSmall(k));
    }
    let r = table.irrep(irrep);
    let n = r.dim;
    let order = table.group().order() as f64;
    let x = &spec.x_hat.blocks[irrep];
    let silent = linalg::max_abs(x) <= SINGULAR_TOL;
    let x_adj_inv = if silent {
        None
    } else {
        if linalg::min_singular(x) <= SINGULAR_TOL {
            return Err(ConstructionError::SingularBlock(r.name.clone()));
        }
        Some(x.adjoint().try_inverse().ok_or_else(|| ConstructionError::SingularBlock(r.name.clone()))?)
    };
    // Real parts of a complex product keep half of each surviving pair per factor.
    let gain = phase_gain(r.is_real, k) * if r.is_real { 1.0 } else { 0.5f64.powi(k as i32) };
    let kappa = share * n as f64 / order / gain;
    // Spread |kappa| evenly over the k+1 factors.
    let beta = kappa.abs().powf(1.0 / (k + 1) as f64);
    let out_scale = if silent { 0.0 } else { kappa.signum() * beta };
    let mut neurons = Vec::new();
    for c in 1..=k + 1 {
        let (pin, pout) = (input_phase(r.is_real, c, k), output_phase(r.is_real, c, k));
        for t in tuples(n, k + 1) {
            let a: Vec<CMat> = (1..=k).map(|j| linalg::unit(n, t[j], t[j - 1]) * pin * cplx(beta, 0.0)).collect();
            let s: Vec<CMat> = match &x_adj_inv {
                Some(inv) => a.iter().map(|aj| inv * aj).collect(),
                None => a.clone(),
            };
            let s_w = x * linalg::unit(n, t[k], t[0]) * pout * cplx(out_scale, 0.0);
            neurons.push(SpsNeuron { copy: c, tuple: t, s, s_w, a });
        }
    }
    Ok(SpsBlock { irrep, k, kappa, silent, neurons })
}

impl SpsBlock {
    /// MLP rows/columns for this block under `scheme`: `(w_in rows, w_out columns)`.
    fn expand(&self, table: &IrrepTable, scheme: &WaringScheme) -> Result<(Vec<Vec<f64>>, Vec<Vec<f64>>), ConstructionError> {
        let mut rows = Vec::new();
        let mut cols = Vec::new();
        for nrn in &self.neurons {
            let neuron = theory::aligned_neuron(table, self.irrep, &nrn.s, &nrn.s_w)?;
            for term in &scheme.terms {
                let row: Vec<f64> = neuron
                    .u
                    .iter()
                    .zip(&term.signs)
                    .flat_map(|(u, &e)| u.iter().map(move |v| e as f64 * v))
                    .collect();
                rows.push(row);
                cols.push(neuron.w.iter().map(|v| term.coeff * v).collect());
            }
        }
        Ok((rows, cols))
    }

    /// Max deviation of `sum_i M_i[m, b] prod_j conj(A_ij[p_j, q_j])` from the chain tensor
    /// `gain * kappa * X[m, p_k] [b = q_1] prod_{j >= 2} [q_j = p_{j-1}]`.
    pub fn tensor_identity_residual(&self, table: &IrrepTable, spec: &EncodingSpec) -> f64 {
        let r = table.irrep(self.irrep);
        let n = r.dim;
        let k = self.k;
        let x = &spec.x_hat.blocks[self.irrep];
        let gain = phase_gain(r.is_real, k);
        // M_i = s_w, carrying X.
        let mut worst: f64 = 0.0;
        for idx in tuples(n, 2 * k + 2) {
            let (m, b) = (idx[0], idx[1]);
            let pq: Vec<(usize, usize)> = (0..k).map(|j| (idx[2 + 2 * j], idx[3 + 2 * j])).collect();
            let lhs: Complex64 = self
                .neurons
                .iter()
                .map(|nrn| nrn.s_w[(m, b)] * nrn.a.iter().zip(&pq).map(|(a, &(p, q))| a[(p, q)].conj()).product::<Complex64>())
                .sum();
            let chain = b == pq[0].1 && (1..k).all(|j| pq[j].1 == pq[j - 1].0);
            let rhs = if chain && !self.silent { x[(m, pq[k - 1].0)] * gain * self.kappa } else { cplx(0.0, 0.0) };
            worst = worst.max((lhs - rhs).norm());
        }
        worst
    }

    /// Max magnitude over every other conjugation pattern of the same tensor (complex irreps).
    pub fn cross_term_residual(&self, table: &IrrepTable) -> Option<f64> {
        let r = table.irrep(self.irrep);
        if r.is_real {
            return None;
        }
        let n = r.dim;
        let k = self.k;
        let mut worst: f64 = 0.0;
        for pattern in 0..(1usize << (k + 1)) {
            // Bit 0: conjugate the output; bit j: conjugate input j. The surviving patterns are
            // "inputs conjugated, output not" and its mirror.
            let inputs_all = (pattern >> 1) == (1 << k) - 1;
            let inputs_none = (pattern >> 1) == 0;
            let out_conj = pattern & 1 == 1;
            if (inputs_all && !out_conj) || (inputs_none && out_conj) {
                continue;
            }
            let op = |z: Complex64, conj: bool| if conj { z.conj() } else { z };
            for idx in tuples(n, 2 * k + 2) {
                let v: Complex64 = self
                    .neurons
                    .iter()
                    .map(|nrn| {
                        op(nrn.s_w[(idx[0], idx[1])], out_conj)
                            * (0..k)
                                .map(|j| op(nrn.a[j][(idx[2 + 2 * j], idx[3 + 2 * j])], (pattern >> (j + 1)) & 1 == 1))
                                .product::<Complex64>()
                    })
                    .sum();
                worst = worst.max(v.norm());
            }
        }
        Some(worst)
    }
}

fn scheme_for(activation: &Activation, k: usize) -> Result<WaringScheme, ConstructionError> {
    waring_scheme(k, activation.is_monomial(), activation)
}

fn assemble(blocks_rows: Vec<Vec<f64>>, blocks_cols: Vec<Vec<f64>>, order: usize, k: usize, activation: Activation) -> TwoLayerMlp {
    let h = blocks_rows.len();
    let w_in = DMatrix::from_fn(h, k * order, |i, j| blocks_rows[i][j]);
    let w_out = DMatrix::from_fn(order, h, |i, j| blocks_cols[j][i]);
    TwoLayerMlp { w_in, w_out, activation }
}

/// Solution for one conjugate class, computing exactly its target increment.
#[derive(Debug, Clone, Serialize)]
pub struct SpsSolution {
    pub class: Vec<usize>,
    pub block: SpsBlock,
    pub mlp: TwoLayerMlp,
}

pub fn sps_solution(
    table: &IrrepTable,
    spec: &EncodingSpec,
    irrep: usize,
    k: usize,
    activation: &Activation,
) -> Result<SpsSolution, ConstructionError> {
    let scheme = scheme_for(activation, k)?;
    let r = table.irrep(irrep);
    let block = sps_block(table, spec, irrep, k, r.c_rho())?;
    let (rows, cols) = block.expand(table, &scheme)?;
    let class = table.classes().into_iter().find(|c| c.contains(&irrep)).expect("every irrep has a class");
    Ok(SpsSolution { class, block, mlp: assemble(rows, cols, table.group().order(), k, activation.clone()) })
}

/// Exhaustive dataset when small enough, else a seeded sample.
pub fn verification_dataset(table: &IrrepTable, spec: &EncodingSpec, k: usize) -> Result<Dataset, ConstructionError> {
    let g = table.group();
    let mode = if encoding::exhaustive_rows(g.order(), k) <= VERIFY_EXHAUSTIVE_ROWS {
        DatasetMode::Exhaustive
    } else {
        DatasetMode::Sampled { rows: VERIFY_SAMPLE_ROWS, seed: VERIFY_SEED }
    };
    Ok(encoding::make_dataset(g, k, spec, mode)?)
}

#[derive(Debug, Clone, Serialize)]
pub struct SpsReport {
    pub irrep: String,
    pub sps_neurons: usize,
    pub mlp_neurons: usize,
    pub tensor_identity: f64,
    pub cross_terms: Option<f64>,
    pub increment_error: f64,
    pub f_plus: f64,
}

impl SpsReport {
    pub fn passed(&self, tol: f64) -> bool {
        self.tensor_identity < tol && self.cross_terms.is_none_or(|c| c < tol) && self.increment_error < tol && self.f_plus < tol
    }
}

pub fn verify_sps(table: &IrrepTable, spec: &EncodingSpec, sol: &SpsSolution) -> Result<SpsReport, ConstructionError> {
    let data = verification_dataset(table, spec, sol.block.k)?;
    let base = LearnedSet::trivial(table);
    let with = base.with_class(table, &sol.class);
    let rows = data.all_rows();
    let x = data.inputs(&rows);
    let f = sol.mlp.forward(&x);
    let (_, f_plus) = sol.mlp.sigma_pi_decompose(&x);
    let mut increment_error: f64 = 0.0;
    for (col, &row) in rows.iter().enumerate() {
        let g = data.product(row);
        let a = theory::partial_target(table, spec, &with, g);
        let b = theory::partial_target(table, spec, &base, g);
        for h in 0..data.order() {
            increment_error = increment_error.max((f[(h, col)] - (a[h] - b[h])).abs());
        }
    }
    Ok(SpsReport {
        irrep: table.irrep(sol.block.irrep).name.clone(),
        sps_neurons: sol.block.neurons.len(),
        mlp_neurons: sol.mlp.hidden(),
        tensor_identity: sol.block.tensor_identity_residual(table, spec),
        cross_terms: sol.block.cross_term_residual(table),
        increment_error,
        f_plus: f_plus.amax(),
    })
}

/// Stacked per-irrep blocks over all of `Irr(G)`, ordered by irrep index.
#[derive(Debug, Clone, Serialize)]
pub struct MlpSolution {
    pub k: usize,
    pub blocks: Vec<SpsBlock>,
    pub mlp: TwoLayerMlp,
    /// Irrep index of each hidden unit.
    pub neuron_irrep: Vec<usize>,
}

pub fn full_mlp_solution(
    table: &IrrepTable,
    spec: &EncodingSpec,
    k: usize,
    activation: &Activation,
) -> Result<MlpSolution, ConstructionError> {
    let scheme = scheme_for(activation, k)?;
    let mut rows = Vec::new();
    let mut cols = Vec::new();
    let mut neuron_irrep = Vec::new();
    let mut blocks = Vec::new();
    for i in 0..table.len() {
        let block = sps_block(table, spec, i, k, 1.0)?;
        let (r, c) = block.expand(table, &scheme)?;
        neuron_irrep.extend(std::iter::repeat_n(i, r.len()));
        rows.extend(r);
        cols.extend(c);
        blocks.push(block);
    }
    let mlp = assemble(rows, cols, table.group().order(), k, activation.clone());
    Ok(MlpSolution { k, blocks, mlp, neuron_irrep })
}

#[derive(Debug, Clone, Serialize)]
pub struct MlpReport {
    pub width: usize,
    pub sufficient_width: usize,
    pub rows: usize,
    pub exhaustive: bool,
    pub loss: f64,
    pub initial_loss: f64,
    pub relative_loss: f64,
    pub f_plus: f64,
    pub tensor_identity: f64,
    pub cross_terms: f64,
}

impl MlpReport {
    pub fn passed(&self) -> bool {
        self.width == self.sufficient_width
            && self.relative_loss < 1e-12
            && self.f_plus < 1e-10
            && self.tensor_identity < 1e-10
            && self.cross_terms < 1e-10
    }
}

pub fn verify_mlp(table: &IrrepTable, spec: &EncodingSpec, sol: &MlpSolution) -> Result<MlpReport, ConstructionError> {
    let data = verification_dataset(table, spec, sol.k)?;
    let rows = data.all_rows();
    let model = Model::Mlp(sol.mlp.clone());
    let loss = networks::loss(&model, &data, &rows).map_err(|e| ConstructionError::Shape(e.to_string()))?;
    let initial_loss = 0.5 * spec.norm_sq();
    let mut f_plus: f64 = 0.0;
    for chunk in rows.chunks(4096) {
        f_plus = f_plus.max(sol.mlp.sigma_pi_decompose(&data.inputs(chunk)).1.amax());
    }
    let scheme = if sol.mlp.activation.is_monomial() { theory::WidthScheme::Monomial } else { theory::WidthScheme::Monic };
    Ok(MlpReport {
        width: sol.mlp.hidden(),
        sufficient_width: theory::sufficient_width(table, sol.k, scheme),
        rows: rows.len(),
        exhaustive: data.mode == DatasetMode::Exhaustive,
        loss,
        initial_loss,
        relative_loss: loss / initial_loss,
        f_plus,
        tensor_identity: sol.blocks.iter().map(|b| b.tensor_identity_residual(table, spec)).fold(0.0, f64::max),
        cross_terms: sol.blocks.iter().filter_map(|b| b.cross_term_residual(table)).fold(0.0, f64::max),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::encoding::{centered_one_hot, from_fourier_spec};
    use crate::group::{make_cyclic, make_dihedral};

    #[test]
    fn phase_gains() {
        assert!((phase_gain(false, 2) - 3.0).abs() < 1e-12);
        assert!((phase_gain(true, 2) - 0.75).abs() < 1e-12);
        assert!((phase_gain(true, 3) - 0.5).abs() < 1e-12);
    }

    #[test]
    fn cyclic_pair_uses_six_neurons() {
        let t = IrrepTable::for_group(&make_cyclic(5).unwrap());
        let e = centered_one_hot(&t);
        let sol = sps_solution(&t, &e, 1, 2, &Activation::monomial(2)).unwrap();
        assert_eq!(sol.block.neurons.len(), 3);
        assert_eq!(sol.mlp.hidden(), 6);
        let rep = verify_sps(&t, &e, &sol).unwrap();
        assert!(rep.passed(1e-10), "{rep:?}");
    }

    #[test]
    fn dihedral_blocks() {
        let t = IrrepTable::for_group(&make_dihedral(3).unwrap());
        let alphas = [("sign".to_string(), 2.0), ("2d_1".to_string(), 0.7)].into();
        let e = from_fourier_spec(&t, &alphas).unwrap();
        let act = Activation::monic(&[0.2, 0.5]);
        for name in ["sign", "2d_1"] {
            let sol = sps_solution(&t, &e, t.index_of(name).unwrap(), 2, &act).unwrap();
            let rep = verify_sps(&t, &e, &sol).unwrap();
            assert!(rep.passed(1e-10), "{rep:?}");
        }
        let sol = sps_solution(&t, &e, t.index_of("2d_1").unwrap(), 2, &act).unwrap();
        assert_eq!(sol.block.neurons.len(), 24);
    }

    #[test]
    fn singular_block_rejected() {
        let g = make_dihedral(3).unwrap();
        let t = IrrepTable::for_group(&g);
        // Fourier block of the 2D irrep has rank one.
        let mut blocks = crate::harmonic::FourierCoefficients::zeros(&t);
        blocks.blocks[2][(0, 0)] = cplx(1.0, 0.0);
        let (x, _) = crate::harmonic::igft_real(&t, &blocks).unwrap();
        let e = encoding::explicit(&t, x).unwrap();
        assert!(matches!(sps_block(&t, &e, 2, 2, 1.0), Err(ConstructionError::SingularBlock(_))));
    }

    #[test]
    fn full_solution_c5() {
        let t = IrrepTable::for_group(&make_cyclic(5).unwrap());
        let e = centered_one_hot(&t);
        let sol = full_mlp_solution(&t, &e, 2, &Activation::monomial(2)).unwrap();
        let rep = verify_mlp(&t, &e, &sol).unwrap();
        assert_eq!(rep.width, 30);
        assert!(rep.passed(), "{rep:?}");
    }
}
