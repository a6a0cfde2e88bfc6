use serde::Serialize;

use crate::error::ConstructionError;
use crate::networks::Activation;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WaringTerm {
    pub signs: Vec<i8>,
    /// Includes the sign product, so `z_1...z_k = sum coeff * sigma(<signs, z>)`.
    pub coeff: f64,
}

/// `z_1 ... z_k = 1/(k! 2^k) sum_eps (prod eps) sigma(sum eps_i z_i)`; the half-sum keeps
/// `eps_1 = +1` and doubles the coefficient, valid only for `sigma(z) = z^k`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WaringScheme {
    pub k: usize,
    pub half_sum: bool,
    pub terms: Vec<WaringTerm>,
}

pub fn waring_scheme(k: usize, half_sum: bool, activation: &Activation) -> Result<WaringScheme, ConstructionError> {
    if k < 2 {
        return Err(ConstructionError::DegreeTooSmall(k));
    }
    if activation.degree() != k {
        return Err(ConstructionError::Shape(format!(
            "activation degree {} does not match k = {k}",
            activation.degree()
        )));
    }
    if half_sum && !activation.is_monomial() {
        return Err(ConstructionError::HalfSumNeedsMonomial);
    }
    let fact: f64 = (1..=k).map(|v| v as f64).product();
    let count = if half_sum { 1usize << (k - 1) } else { 1usize << k };
    let base = 1.0 / (fact * count as f64);
    let terms = (0..count)
        .map(|mask| {
            // Bit i set flips sign i; the half-sum never flips sign 0.
            let signs: Vec<i8> = (0..k)
                .map(|i| {
                    let bit = if half_sum { i > 0 && (mask >> (i - 1)) & 1 == 1 } else { (mask >> i) & 1 == 1 };
                    if bit {
                        -1
                    } else {
                        1
                    }
                })
                .collect();
            let sign: f64 = signs.iter().map(|&s| s as f64).product();
            WaringTerm { signs, coeff: sign * base }
        })
        .collect();
    Ok(WaringScheme { k, half_sum, terms })
}

impl WaringScheme {
    pub fn evaluate(&self, activation: &Activation, z: &[f64]) -> f64 {
        self.terms
            .iter()
            .map(|t| t.coeff * activation.eval(t.signs.iter().zip(z).map(|(&s, v)| s as f64 * v).sum()))
            .sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use std::collections::BTreeMap;

    /// Polynomial in `k` variables keyed by exponent vectors.
    type Poly = BTreeMap<Vec<u32>, f64>;

    fn mul(a: &Poly, b: &Poly) -> Poly {
        let mut out = Poly::new();
        for (ea, ca) in a {
            for (eb, cb) in b {
                let e: Vec<u32> = ea.iter().zip(eb).map(|(x, y)| x + y).collect();
                *out.entry(e).or_insert(0.0) += ca * cb;
            }
        }
        out
    }

    fn expand(scheme: &WaringScheme, activation: &Activation) -> Poly {
        let k = scheme.k;
        let mut total = Poly::new();
        for t in &scheme.terms {
            let linear: Poly = (0..k)
                .map(|i| {
                    let mut e = vec![0; k];
                    e[i] = 1;
                    (e, t.signs[i] as f64)
                })
                .collect();
            let mut power: Poly = [(vec![0; k], 1.0)].into();
            for (m, &c) in activation.coeffs().iter().enumerate() {
                if m > 0 {
                    power = mul(&power, &linear);
                }
                for (e, v) in &power {
                    *total.entry(e.clone()).or_insert(0.0) += t.coeff * c * v;
                }
            }
        }
        total.retain(|_, v| v.abs() > 1e-12);
        total
    }

    #[test]
    fn symbolic_reconstruction() {
        for k in 2..=6 {
            let target: Poly = [(vec![1; k], 1.0)].into();
            let mono = Activation::monomial(k);
            let lower: Vec<f64> = (0..k).map(|i| 0.3 * i as f64 - 0.7).collect();
            let monic = Activation::monic(&lower);
            for (act, half) in [(&mono, false), (&mono, true), (&monic, false)] {
                let s = waring_scheme(k, half, act).unwrap();
                assert_eq!(s.terms.len(), if half { 1 << (k - 1) } else { 1 << k });
                let p = expand(&s, act);
                assert_eq!(p.len(), 1, "k={k} half={half}");
                assert!((p[&vec![1; k]] - 1.0).abs() < 1e-12);
                assert_eq!(p.keys().collect::<Vec<_>>(), target.keys().collect::<Vec<_>>());
            }
        }
    }

    #[test]
    fn k2_coefficients() {
        let s = waring_scheme(2, true, &Activation::monomial(2)).unwrap();
        let pairs: Vec<(Vec<i8>, f64)> = s.terms.iter().map(|t| (t.signs.clone(), t.coeff)).collect();
        assert_eq!(pairs, vec![(vec![1, 1], 0.25), (vec![1, -1], -0.25)]);
        let full = waring_scheme(2, false, &Activation::monomial(2)).unwrap();
        assert!(full.terms.iter().all(|t| t.coeff.abs() == 0.125));
    }

    #[test]
    fn numeric_k3() {
        let act = Activation::monomial(3);
        let s = waring_scheme(3, false, &act).unwrap();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(4);
        for _ in 0..100 {
            let z: Vec<f64> = (0..3).map(|_| rng.random_range(-2.0..2.0)).collect();
            assert!((s.evaluate(&act, &z) - z[0] * z[1] * z[2]).abs() < 1e-10);
        }
    }

    #[test]
    fn rejects_bad_requests() {
        let monic = Activation::monic(&[0.0, 1.0]);
        assert!(matches!(waring_scheme(2, true, &monic), Err(ConstructionError::HalfSumNeedsMonomial)));
        assert!(matches!(waring_scheme(1, false, &Activation::monomial(1)), Err(ConstructionError::DegreeTooSmall(1))));
        assert!(waring_scheme(3, false, &Activation::monomial(2)).is_err());
    }
}
