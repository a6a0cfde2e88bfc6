use serde::{Deserialize, Serialize};

/// Monic polynomial activation; `coeffs[i]` multiplies `z^i` and the last entry is 1.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Activation {
    coeffs: Vec<f64>,
}

impl Activation {
    /// `sigma(z) = z^k`.
    pub fn monomial(k: usize) -> Self {
        let mut coeffs = vec![0.0; k + 1];
        coeffs[k] = 1.0;
        Activation { coeffs }
    }

    /// `sigma(z) = z^k + sum_i lower[i] z^i`, with `lower.len() == k`.
    pub fn monic(lower: &[f64]) -> Self {
        let mut coeffs = lower.to_vec();
        coeffs.push(1.0);
        Activation { coeffs }
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn is_monomial(&self) -> bool {
        self.coeffs[..self.degree()].iter().all(|&c| c == 0.0)
    }

    pub fn eval(&self, z: f64) -> f64 {
        self.coeffs.iter().rev().fold(0.0, |acc, &c| acc * z + c)
    }

    pub fn deriv(&self, z: f64) -> f64 {
        self.coeffs
            .iter()
            .enumerate()
            .skip(1)
            .rev()
            .fold(0.0, |acc, (i, &c)| acc * z + c * i as f64)
    }
}
