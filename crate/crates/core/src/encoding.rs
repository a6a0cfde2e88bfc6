//! Encoding vectors, their orbits, and sequence datasets.

use std::collections::BTreeMap;

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::EncodingError;
use crate::group::FiniteGroup;
use crate::harmonic::{self, FourierCoefficients};
use crate::linalg::{self, cplx};
use crate::reps::IrrepTable;
use crate::theory;

pub const DEFAULT_ROW_CAP: u128 = 10_000_000;
pub const CENTER_TOL: f64 = 1e-12;
pub const REAL_TOL: f64 = 1e-10;
/// Blocks with smallest singular value below this are treated as singular (or zero).
pub const SINGULAR_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum EncodingSource {
    CenteredOneHot,
    Fourier { alphas: BTreeMap<String, f64> },
    Explicit,
}

#[derive(Debug, Clone)]
pub struct EncodingSpec {
    pub x: Vec<f64>,
    pub source: EncodingSource,
    pub x_hat: FourierCoefficients,
}

impl EncodingSpec {
    pub fn norm_sq(&self) -> f64 {
        self.x.iter().map(|v| v * v).sum()
    }

    /// Indices of irreps whose block is nonzero.
    pub fn support(&self) -> Vec<usize> {
        (0..self.x_hat.blocks.len()).filter(|&i| linalg::max_abs(&self.x_hat.blocks[i]) > SINGULAR_TOL).collect()
    }
}

/// `x = e_1 - (1/|G|) 1`.
pub fn centered_one_hot(table: &IrrepTable) -> EncodingSpec {
    let group = table.group();
    let n = group.order() as f64;
    let mut x = vec![-1.0 / n; group.order()];
    x[group.identity()] += 1.0;
    let x_hat = harmonic::gft_real(table, &x).expect("length matches by construction");
    EncodingSpec { x, source: EncodingSource::CenteredOneHot, x_hat }
}

/// Builds `x` from blocks `alpha_rho I`. Keys are irrep names or class names (`"rho1|rho4"`);
/// a class key assigns every member. Missing irreps get 0.
pub fn from_fourier_spec(
    table: &IrrepTable,
    alphas: &BTreeMap<String, f64>,
) -> Result<EncodingSpec, EncodingError> {
    let mut per_irrep = vec![0.0; table.len()];
    for (key, &alpha) in alphas {
        let members: Vec<usize> = match table.index_of(key) {
            Some(i) => vec![i],
            None => table
                .classes()
                .into_iter()
                .find(|c| table.class_name(c) == *key)
                .ok_or_else(|| EncodingError::UnknownIrrep(key.clone()))?,
        };
        for i in members {
            per_irrep[i] = alpha;
        }
    }
    if per_irrep[table.trivial_index()] != 0.0 {
        return Err(EncodingError::NonzeroTrivial);
    }
    let blocks = table
        .irreps()
        .iter()
        .zip(&per_irrep)
        .map(|(r, &a)| linalg::identity(r.dim) * cplx(a, 0.0))
        .collect();
    let coeffs = FourierCoefficients { blocks };
    let (x, max_im) = harmonic::igft_real(table, &coeffs)?;
    if max_im > REAL_TOL {
        return Err(EncodingError::NonReal(max_im));
    }
    if x.iter().all(|v| v.abs() < CENTER_TOL) {
        return Err(EncodingError::Degenerate);
    }
    let x_hat = harmonic::gft_real(table, &x)?;
    Ok(EncodingSpec { x, source: EncodingSource::Fourier { alphas: alphas.clone() }, x_hat })
}

/// Any real vector; centering is reported by [`check_assumptions`], not enforced.
pub fn explicit(table: &IrrepTable, x: Vec<f64>) -> Result<EncodingSpec, EncodingError> {
    let x_hat = harmonic::gft_real(table, &x)?;
    if x.iter().all(|v| *v == 0.0) {
        return Err(EncodingError::Degenerate);
    }
    Ok(EncodingSpec { x, source: EncodingSource::Explicit, x_hat })
}

/// `x_g = lambda(g) x`, i.e. `x_g[m] = x[g^-1 m]`.
pub fn orbit_encode(group: &FiniteGroup, x: &[f64], g: usize) -> Vec<f64> {
    let gi = group.inv(g);
    group.elements().map(|m| x[group.mul(gi, m)]).collect()
}

#[derive(Debug, Clone, Serialize)]
pub struct BlockStatus {
    pub irrep: String,
    pub min_singular: f64,
    pub max_singular: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct AssumptionReport {
    pub centering_residual: f64,
    pub centered: bool,
    pub blocks: Vec<BlockStatus>,
    pub invertible_or_zero: bool,
    /// Pairs of class names with equal utility score.
    pub score_ties: Vec<(String, String)>,
    pub smallest_score_gap: Option<f64>,
}

impl AssumptionReport {
    pub fn warnings(&self) -> Vec<String> {
        let mut out = Vec::new();
        if !self.centered {
            out.push(format!("encoding is not mean-centered (residual {:e})", self.centering_residual));
        }
        if !self.invertible_or_zero {
            out.push("some Fourier block is neither invertible nor zero".to_string());
        }
        for (a, b) in &self.score_ties {
            out.push(format!("utility scores tie between {a} and {b}"));
        }
        out
    }
}

pub fn check_assumptions(table: &IrrepTable, spec: &EncodingSpec, k: usize) -> AssumptionReport {
    let centering_residual = spec.x_hat.blocks[table.trivial_index()][(0, 0)].norm();
    let blocks: Vec<BlockStatus> = table
        .irreps()
        .iter()
        .zip(&spec.x_hat.blocks)
        .map(|(r, b)| BlockStatus {
            irrep: r.name.clone(),
            min_singular: linalg::min_singular(b),
            max_singular: linalg::op_norm(b),
        })
        .collect();
    let invertible_or_zero = blocks
        .iter()
        .all(|b| b.max_singular < SINGULAR_TOL || b.min_singular > SINGULAR_TOL);
    let scored: Vec<(String, f64)> = table
        .classes()
        .iter()
        .filter(|c| c[0] != table.trivial_index())
        .map(|c| (table.class_name(c), theory::utility_score(table, spec, c[0], k)))
        .filter(|(_, s)| *s > 0.0)
        .collect();
    let mut score_ties = Vec::new();
    let mut smallest_score_gap: Option<f64> = None;
    for i in 0..scored.len() {
        for j in i + 1..scored.len() {
            let gap = (scored[i].1 - scored[j].1).abs();
            let scale = scored[i].1.abs().max(scored[j].1.abs());
            if gap <= theory::TIE_TOL * scale {
                score_ties.push((scored[i].0.clone(), scored[j].0.clone()));
            }
            smallest_score_gap = Some(smallest_score_gap.map_or(gap, |g| g.min(gap)));
        }
    }
    AssumptionReport {
        centering_residual,
        centered: centering_residual < CENTER_TOL,
        blocks,
        invertible_or_zero,
        score_ties,
        smallest_score_gap,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum DatasetMode {
    Exhaustive,
    Sampled { rows: usize, seed: u64 },
}

/// Sequences with their precomputed products. Inputs and targets are materialized per batch.
#[derive(Debug, Clone)]
pub struct Dataset {
    pub group: FiniteGroup,
    pub k: usize,
    pub x: Vec<f64>,
    pub mode: DatasetMode,
    sequences: Vec<usize>,
    products: Vec<usize>,
    /// `orbit[g]` is `x_g`.
    orbit: Vec<Vec<f64>>,
}

pub fn exhaustive_rows(order: usize, k: usize) -> u128 {
    (order as u128).checked_pow(k as u32).unwrap_or(u128::MAX)
}

pub fn make_dataset(
    group: &FiniteGroup,
    k: usize,
    spec: &EncodingSpec,
    mode: DatasetMode,
) -> Result<Dataset, EncodingError> {
    make_dataset_with_cap(group, k, spec, mode, DEFAULT_ROW_CAP)
}

pub fn make_dataset_with_cap(
    group: &FiniteGroup,
    k: usize,
    spec: &EncodingSpec,
    mode: DatasetMode,
    cap: u128,
) -> Result<Dataset, EncodingError> {
    if k < 2 {
        return Err(EncodingError::SequenceTooShort(k));
    }
    if spec.x.len() != group.order() {
        return Err(crate::error::HarmonicError::LengthMismatch { expected: group.order(), got: spec.x.len() }.into());
    }
    let sequences = match mode {
        DatasetMode::Exhaustive => {
            let rows = exhaustive_rows(group.order(), k);
            if rows > cap {
                return Err(EncodingError::TooManyRows { rows, cap });
            }
            odometer(group.order(), k)
        }
        DatasetMode::Sampled { rows, seed } => {
            let mut sampler = SequenceSampler::new(group.order(), k, seed);
            (0..rows).flat_map(|_| sampler.next_sequence()).collect()
        }
    };
    Ok(Dataset::from_flat(group, k, &spec.x, mode, sequences))
}

/// All `order^k` sequences, last index fastest, flattened.
fn odometer(order: usize, k: usize) -> Vec<usize> {
    let rows = order.pow(k as u32);
    let mut out = Vec::with_capacity(rows * k);
    let mut digits = vec![0usize; k];
    for _ in 0..rows {
        out.extend_from_slice(&digits);
        for d in digits.iter_mut().rev() {
            *d += 1;
            if *d < order {
                break;
            }
            *d = 0;
        }
    }
    out
}

impl Dataset {
    fn from_flat(group: &FiniteGroup, k: usize, x: &[f64], mode: DatasetMode, sequences: Vec<usize>) -> Self {
        let products =
            sequences.chunks(k).map(|s| s.iter().skip(1).fold(s[0], |acc, &g| group.mul(acc, g))).collect();
        let orbit = group.elements().map(|g| orbit_encode(group, x, g)).collect();
        Dataset { group: group.clone(), k, x: x.to_vec(), mode, sequences, products, orbit }
    }

    /// Dataset over explicit sequences (each of length `k`).
    pub fn from_sequences(group: &FiniteGroup, k: usize, x: &[f64], sequences: &[Vec<usize>]) -> Self {
        let flat = sequences.iter().flat_map(|s| s.iter().copied()).collect();
        Dataset::from_flat(group, k, x, DatasetMode::Sampled { rows: sequences.len(), seed: 0 }, flat)
    }

    pub fn len(&self) -> usize {
        self.products.len()
    }

    pub fn is_empty(&self) -> bool {
        self.products.is_empty()
    }

    pub fn order(&self) -> usize {
        self.group.order()
    }

    pub fn sequence(&self, row: usize) -> &[usize] {
        &self.sequences[row * self.k..(row + 1) * self.k]
    }

    pub fn product(&self, row: usize) -> usize {
        self.products[row]
    }

    pub fn orbit(&self, g: usize) -> &[f64] {
        &self.orbit[g]
    }

    /// Input column `(x_{g1}, ..., x_{gk})`.
    pub fn input(&self, row: usize) -> Vec<f64> {
        self.sequence(row).iter().flat_map(|&g| self.orbit[g].iter().copied()).collect()
    }

    pub fn target(&self, row: usize) -> &[f64] {
        &self.orbit[self.products[row]]
    }

    /// Inputs for `rows` as a `(k|G|) x B` matrix, one sample per column.
    pub fn inputs(&self, rows: &[usize]) -> DMatrix<f64> {
        let n = self.order();
        let mut m = DMatrix::zeros(self.k * n, rows.len());
        for (c, &r) in rows.iter().enumerate() {
            for (j, &g) in self.sequence(r).iter().enumerate() {
                for (i, &v) in self.orbit[g].iter().enumerate() {
                    m[(j * n + i, c)] = v;
                }
            }
        }
        m
    }

    /// Position-`j` inputs for `rows` as a `|G| x B` matrix.
    pub fn inputs_at(&self, rows: &[usize], j: usize) -> DMatrix<f64> {
        let n = self.order();
        DMatrix::from_fn(n, rows.len(), |i, c| self.orbit[self.sequence(rows[c])[j]][i])
    }

    pub fn targets(&self, rows: &[usize]) -> DMatrix<f64> {
        let n = self.order();
        DMatrix::from_fn(n, rows.len(), |i, c| self.orbit[self.products[rows[c]]][i])
    }

    pub fn all_rows(&self) -> Vec<usize> {
        (0..self.len()).collect()
    }
}

/// Seeded uniform sampler over `G^k`; the stream depends only on the seed.
#[derive(Debug, Clone)]
pub struct SequenceSampler {
    order: usize,
    k: usize,
    rng: ChaCha8Rng,
}

impl SequenceSampler {
    pub fn new(order: usize, k: usize, seed: u64) -> Self {
        SequenceSampler { order, k, rng: ChaCha8Rng::seed_from_u64(seed) }
    }

    pub fn next_sequence(&mut self) -> Vec<usize> {
        (0..self.k).map(|_| self.rng.random_range(0..self.order)).collect()
    }

    pub fn batch(&mut self, rows: usize) -> Vec<Vec<usize>> {
        (0..rows).map(|_| self.next_sequence()).collect()
    }
}

/// Relative residual `||Y - A X||^2 / ||Y - mean(Y)||^2` of the best linear map `A` (no bias).
pub fn linear_fit_residual(data: &Dataset) -> f64 {
    let rows = data.all_rows();
    let x = data.inputs(&rows);
    let y = data.targets(&rows);
    let gram = &x * x.transpose();
    let pinv = gram.pseudo_inverse(1e-10).expect("non-negative eps");
    let a = &y * x.transpose() * pinv;
    let resid = &y - &a * &x;
    let mean = y.column_mean();
    let mut var = 0.0;
    for c in 0..y.ncols() {
        var += (y.column(c) - &mean).norm_squared();
    }
    resid.norm_squared() / var
}
