//! Group Fourier transform and the identities it satisfies.
//!
//! Conventions: `x_hat[rho] = sum_g rho(g)^+ x[g]`, inverse
//! `x[g] = (1/|G|) sum_rho n_rho Tr(rho(g) x_hat[rho])`, and
//! `<A, B>_rho = n_rho Tr(A^+ B)`. All transforms are direct summations.

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::Serialize;

use crate::error::HarmonicError;
use crate::group::FiniteGroup;
use crate::linalg::{self, CMat, ZERO};
use crate::reps::{matrix_to_json, regular_rep, IrrepTable};

#[derive(Debug, Clone, PartialEq)]
pub struct FourierCoefficients {
    pub blocks: Vec<CMat>,
}

impl FourierCoefficients {
    pub fn zeros(table: &IrrepTable) -> Self {
        FourierCoefficients { blocks: table.irreps().iter().map(|r| CMat::zeros(r.dim, r.dim)).collect() }
    }

    pub fn block(&self, i: usize) -> &CMat {
        &self.blocks[i]
    }

    pub fn check_shape(&self, table: &IrrepTable) -> Result<(), HarmonicError> {
        if self.blocks.len() != table.len() {
            return Err(HarmonicError::BlockCount { expected: table.len(), got: self.blocks.len() });
        }
        for (i, (b, r)) in self.blocks.iter().zip(table.irreps()).enumerate() {
            if b.shape() != (r.dim, r.dim) {
                return Err(HarmonicError::BlockShape { index: i, expected: r.dim, got: b.shape() });
            }
        }
        Ok(())
    }

    /// Keeps only the blocks whose irrep index is in `keep`.
    pub fn restrict(&self, keep: &[usize]) -> Self {
        let blocks = self
            .blocks
            .iter()
            .enumerate()
            .map(|(i, b)| if keep.contains(&i) { b.clone() } else { CMat::zeros(b.nrows(), b.ncols()) })
            .collect();
        FourierCoefficients { blocks }
    }

    pub fn to_json(&self, table: &IrrepTable) -> FourierJson {
        FourierJson {
            irreps: table.irreps().iter().map(|r| r.name.clone()).collect(),
            blocks: self.blocks.iter().map(matrix_to_json).collect(),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct FourierJson {
    pub irreps: Vec<String>,
    pub blocks: Vec<Vec<Vec<[f64; 2]>>>,
}

fn check_len(table: &IrrepTable, len: usize) -> Result<(), HarmonicError> {
    let n = table.group().order();
    if len != n {
        Err(HarmonicError::LengthMismatch { expected: n, got: len })
    } else {
        Ok(())
    }
}

pub fn gft(table: &IrrepTable, x: &[Complex64]) -> Result<FourierCoefficients, HarmonicError> {
    check_len(table, x.len())?;
    let blocks = table
        .irreps()
        .iter()
        .map(|r| {
            let mut acc = CMat::zeros(r.dim, r.dim);
            for (g, &xg) in x.iter().enumerate() {
                if xg != ZERO {
                    acc += r.matrix(g).adjoint() * xg;
                }
            }
            acc
        })
        .collect();
    Ok(FourierCoefficients { blocks })
}

pub fn gft_real(table: &IrrepTable, x: &[f64]) -> Result<FourierCoefficients, HarmonicError> {
    let xc: Vec<Complex64> = x.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    gft(table, &xc)
}

pub fn igft(table: &IrrepTable, coeffs: &FourierCoefficients) -> Result<Vec<Complex64>, HarmonicError> {
    coeffs.check_shape(table)?;
    let order = table.group().order();
    let inv_order = 1.0 / order as f64;
    Ok((0..order)
        .map(|g| {
            table
                .irreps()
                .iter()
                .zip(&coeffs.blocks)
                .map(|(r, b)| (r.matrix(g) * b).trace() * r.dim as f64)
                .sum::<Complex64>()
                * inv_order
        })
        .collect())
}

/// Real part of the inverse transform together with the largest discarded imaginary part.
pub fn igft_real(table: &IrrepTable, coeffs: &FourierCoefficients) -> Result<(Vec<f64>, f64), HarmonicError> {
    let x = igft(table, coeffs)?;
    let max_im = x.iter().map(|z| z.im.abs()).fold(0.0, f64::max);
    Ok((x.iter().map(|z| z.re).collect(), max_im))
}

/// `||x_hat[rho]||_rho^2 = n_rho Tr(x_hat^+ x_hat)`.
pub fn power(table: &IrrepTable, coeffs: &FourierCoefficients, irrep: usize) -> f64 {
    let b = &coeffs.blocks[irrep];
    table.irrep(irrep).dim as f64 * b.iter().map(|z| z.norm_sqr()).sum::<f64>()
}

/// `|<x, y> - (1/|G|) sum_rho <x_hat, y_hat>_rho|`.
pub fn plancherel_check(table: &IrrepTable, x: &[Complex64], y: &[Complex64]) -> Result<f64, HarmonicError> {
    let xh = gft(table, x)?;
    let yh = gft(table, y)?;
    check_len(table, y.len())?;
    let lhs: Complex64 = x.iter().zip(y).map(|(a, b)| a.conj() * b).sum();
    let rhs: Complex64 = xh
        .blocks
        .iter()
        .zip(&yh.blocks)
        .map(|(a, b)| linalg::irrep_inner(a, b))
        .sum::<Complex64>()
        / table.group().order() as f64;
    Ok((lhs - rhs).norm())
}

/// `(x * y)[g] = x^+ lambda(g) y = sum_h conj(x[h]) y[g h]`.
pub fn group_convolution(
    group: &FiniteGroup,
    x: &[Complex64],
    y: &[Complex64],
) -> Result<Vec<Complex64>, HarmonicError> {
    let n = group.order();
    for len in [x.len(), y.len()] {
        if len != n {
            return Err(HarmonicError::LengthMismatch { expected: n, got: len });
        }
    }
    Ok(group
        .elements()
        .map(|g| group.elements().map(|h| x[h].conj() * y[group.mul(g, h)]).sum())
        .collect())
}

/// Unitary Fourier basis. Column `(rho, a, b)` holds `sqrt(n_rho/|G|) rho(g)[b, a]`, so that
/// `F^+ x` lists the entries `x_hat[rho][a, b]` scaled by `sqrt(n_rho/|G|)`.
pub fn fourier_basis(table: &IrrepTable) -> CMat {
    let order = table.group().order();
    let mut f = CMat::zeros(order, order);
    let mut col = 0;
    for r in table.irreps() {
        let scale = (r.dim as f64 / order as f64).sqrt();
        for a in 0..r.dim {
            for b in 0..r.dim {
                for g in 0..order {
                    f[(g, col)] = r.matrix(g)[(b, a)] * scale;
                }
                col += 1;
            }
        }
    }
    f
}

/// Max residual of `F^+ lambda(g) F = direct sum of blocks` over all `g`.
///
/// With the basis of [`fourier_basis`], the block for rows `(rho, a, *)` and columns
/// `(rho, a, *)` equals `conj(rho(g))`, which is the stored conjugate irrep evaluated at
/// `g`; every other entry must vanish. `F^+ F = I` is included in the residual.
pub fn block_diagonalize_check(table: &IrrepTable, f: &CMat) -> f64 {
    let group = table.group();
    let order = group.order();
    let mut residual = linalg::max_abs_diff(&(f.adjoint() * f), &linalg::identity(order));
    for g in group.elements() {
        let lam: DMatrix<f64> = regular_rep(group, g);
        let lam = lam.map(|v| Complex64::new(v, 0.0));
        let conj_lam = f.adjoint() * lam * f;
        let mut expected = CMat::zeros(order, order);
        let mut offset = 0;
        for r in table.irreps() {
            let n = r.dim;
            let m = linalg::conj(r.matrix(g));
            for a in 0..n {
                let base = offset + a * n;
                for b in 0..n {
                    for d in 0..n {
                        expected[(base + b, base + d)] = m[(b, d)];
                    }
                }
            }
            offset += n * n;
        }
        residual = residual.max(linalg::max_abs_diff(&conj_lam, &expected));
    }
    residual
}

/// Max residual of `(x * y)^[rho] = x_hat[rho]^+ y_hat[rho]`.
pub fn convolution_theorem_check(table: &IrrepTable, x: &[Complex64], y: &[Complex64]) -> Result<f64, HarmonicError> {
    let conv = gft(table, &group_convolution(table.group(), x, y)?)?;
    let xh = gft(table, x)?;
    let yh = gft(table, y)?;
    Ok((0..table.len())
        .map(|i| linalg::max_abs_diff(&conv.blocks[i], &(xh.blocks[i].adjoint() * &yh.blocks[i])))
        .fold(0.0, f64::max))
}

/// Max residual of `chi_rho^[sigma] = (|G|/n_rho) I` when `sigma = rho` and `0` otherwise.
pub fn character_transform_check(table: &IrrepTable) -> f64 {
    let order = table.group().order() as f64;
    let mut worst: f64 = 0.0;
    for (i, r) in table.irreps().iter().enumerate() {
        let chi: Vec<Complex64> = table.group().elements().map(|g| r.character(g)).collect();
        let xh = gft(table, &chi).expect("length matches the group");
        for (j, b) in xh.blocks.iter().enumerate() {
            let n = b.nrows();
            let expected =
                if i == j { linalg::identity(n) * Complex64::new(order / n as f64, 0.0) } else { CMat::zeros(n, n) };
            worst = worst.max(linalg::max_abs_diff(b, &expected));
        }
    }
    worst
}

/// Worst residuals of the harmonic identities over `trials` seeded random complex signals.
#[derive(Debug, Clone, Serialize)]
pub struct HarmonicReport {
    pub trials: usize,
    pub round_trip: f64,
    pub plancherel: f64,
    pub convolution: f64,
    pub character: f64,
    pub block_diagonal: f64,
}

impl HarmonicReport {
    pub fn passed(&self, tol: f64) -> bool {
        [self.round_trip, self.plancherel, self.convolution, self.character, self.block_diagonal]
            .iter()
            .all(|r| *r < tol)
    }
}

pub fn validate_harmonics(table: &IrrepTable, trials: usize, seed: u64) -> HarmonicReport {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let n = table.group().order();
    let mut draw = || -> Vec<Complex64> {
        (0..n).map(|_| Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))).collect()
    };
    let mut report = HarmonicReport {
        trials,
        round_trip: 0.0,
        plancherel: 0.0,
        convolution: 0.0,
        character: character_transform_check(table),
        block_diagonal: block_diagonalize_check(table, &fourier_basis(table)),
    };
    for _ in 0..trials {
        let x = draw();
        let y = draw();
        let back = igft(table, &gft(table, &x).expect("length")).expect("shape");
        let rt = back.iter().zip(&x).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
        report.round_trip = report.round_trip.max(rt);
        report.plancherel = report.plancherel.max(plancherel_check(table, &x, &y).expect("length"));
        report.convolution = report.convolution.max(convolution_theorem_check(table, &x, &y).expect("length"));
    }
    report
}
