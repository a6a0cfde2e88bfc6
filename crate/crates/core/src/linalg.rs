//! Small dense complex-matrix helpers shared by the harmonic and theory modules.

use nalgebra::DMatrix;
use num_complex::Complex64;

pub type CMat = DMatrix<Complex64>;

pub const ZERO: Complex64 = Complex64::new(0.0, 0.0);
pub const ONE: Complex64 = Complex64::new(1.0, 0.0);

pub fn cplx(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

pub fn identity(n: usize) -> CMat {
    CMat::identity(n, n)
}

/// Matrix unit `E_{a,b}`.
pub fn unit(n: usize, a: usize, b: usize) -> CMat {
    let mut m = CMat::zeros(n, n);
    m[(a, b)] = ONE;
    m
}

pub fn max_abs_diff(a: &CMat, b: &CMat) -> f64 {
    a.iter().zip(b.iter()).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
}

pub fn max_abs(a: &CMat) -> f64 {
    a.iter().map(|x| x.norm()).fold(0.0, f64::max)
}

/// Largest singular value.
pub fn op_norm(m: &CMat) -> f64 {
    if m.is_empty() {
        return 0.0;
    }
    m.clone().svd(false, false).singular_values.max()
}

/// Smallest singular value.
pub fn min_singular(m: &CMat) -> f64 {
    if m.is_empty() {
        return 0.0;
    }
    m.clone().svd(false, false).singular_values.min()
}

/// `<A, B>_rho = n Tr(A^dagger B)`.
pub fn irrep_inner(a: &CMat, b: &CMat) -> Complex64 {
    let n = a.nrows() as f64;
    a.iter().zip(b.iter()).map(|(x, y)| x.conj() * y).sum::<Complex64>() * n
}

/// Entrywise conjugate.
pub fn conj(a: &CMat) -> CMat {
    a.map(|z| z.conj())
}

pub fn trace(a: &CMat) -> Complex64 {
    a.trace()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn op_norm_of_diagonal() {
        let mut m = CMat::zeros(3, 3);
        m[(0, 0)] = cplx(0.5, 0.0);
        m[(1, 1)] = cplx(0.0, -2.0);
        m[(2, 2)] = cplx(1.0, 1.0);
        assert!((op_norm(&m) - 2.0).abs() < 1e-12);
        assert!((min_singular(&m) - 0.5).abs() < 1e-12);
    }

    #[test]
    fn inner_product_weighting() {
        let i2 = identity(2);
        assert!((irrep_inner(&i2, &i2).re - 4.0).abs() < 1e-15);
    }
}
