//! Closed-form predictions for small-initialization training: utility scores, acquisition
//! order, plateau levels, sufficient widths and the partial targets they imply.

use std::collections::BTreeSet;

use num_complex::Complex64;
use serde::Serialize;

use crate::encoding::{self, EncodingSpec, SINGULAR_TOL};
use crate::error::{ConstructionError, EncodingError};
use crate::harmonic::{self, FourierCoefficients};
use crate::linalg::{self, CMat};
use crate::reps::IrrepTable;

/// Relative tolerance under which two scores count as tied.
pub const TIE_TOL: f64 = 1e-9;

/// `||x_hat[rho]||_op^{k+1} (C_rho n_rho)^{(1-k)/2}`.
pub fn utility_score(table: &IrrepTable, spec: &EncodingSpec, irrep: usize, k: usize) -> f64 {
    let r = table.irrep(irrep);
    let op = linalg::op_norm(&spec.x_hat.blocks[irrep]);
    op.powi(k as i32 + 1) * (r.c_rho() * r.dim as f64).powf((1.0 - k as f64) / 2.0)
}

#[derive(Debug, Clone, Serialize)]
pub struct ClassScore {
    pub name: String,
    pub members: Vec<usize>,
    pub dim: usize,
    pub c_rho: f64,
    pub score: f64,
    /// `C_rho ||x_hat[rho]||_rho^2`, the power of the whole class.
    pub power: f64,
}

/// Nontrivial classes with nonzero power, by descending score; ties keep ascending index order.
pub fn predicted_order(table: &IrrepTable, spec: &EncodingSpec, k: usize) -> Vec<ClassScore> {
    let mut out: Vec<ClassScore> = table
        .classes()
        .into_iter()
        .filter(|c| c[0] != table.trivial_index())
        .filter(|c| linalg::max_abs(&spec.x_hat.blocks[c[0]]) > SINGULAR_TOL)
        .map(|c| {
            let r = table.irrep(c[0]);
            ClassScore {
                name: table.class_name(&c),
                dim: r.dim,
                c_rho: r.c_rho(),
                score: utility_score(table, spec, c[0], k),
                power: r.c_rho() * harmonic::power(table, &spec.x_hat, c[0]),
                members: c,
            }
        })
        .collect();
    out.sort_by(|a, b| b.score.partial_cmp(&a.score).unwrap().then(a.members[0].cmp(&b.members[0])));
    out
}

/// Groups consecutive classes of an ordered list whose scores tie.
pub fn tie_groups(order: &[ClassScore]) -> Vec<Vec<String>> {
    let mut groups: Vec<Vec<String>> = Vec::new();
    let mut last: Option<f64> = None;
    for c in order {
        match last {
            Some(s) if (s - c.score).abs() <= TIE_TOL * s.abs().max(c.score.abs()) => {
                groups.last_mut().unwrap().push(c.name.clone())
            }
            _ => groups.push(vec![c.name.clone()]),
        }
        last = Some(c.score);
    }
    groups
}

/// `L_0 = ||x||^2 / 2`, then each class removes `C_rho ||x_hat[rho]||^2 / (2|G|)`.
pub fn plateau_losses(table: &IrrepTable, spec: &EncodingSpec, order: &[ClassScore]) -> Vec<f64> {
    let n = table.group().order() as f64;
    let mut level = 0.5 * spec.norm_sq();
    let mut out = vec![level];
    for c in order {
        level -= c.power / (2.0 * n);
        out.push(level.max(0.0));
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum WidthScheme {
    /// Any monic degree-k activation; full `2^k` Waring terms.
    Monic,
    /// `sigma(z) = z^k`; the half-sum uses `2^(k-1)` terms.
    Monomial,
}

impl WidthScheme {
    pub fn waring_terms(self, k: usize) -> usize {
        match self {
            WidthScheme::Monic => 1 << k,
            WidthScheme::Monomial => 1 << (k - 1),
        }
    }
}

/// `(k+1) 2^k sum_rho n_rho^{k+1}` over all of `Irr(G)`, or the `2^(k-1)` variant.
pub fn sufficient_width(table: &IrrepTable, k: usize, scheme: WidthScheme) -> usize {
    let dims: usize = table.irreps().iter().map(|r| r.dim.pow(k as u32 + 1)).sum();
    (k + 1) * scheme.waring_terms(k) * dims
}

/// As [`sufficient_width`] but over nontrivial irreps only.
pub fn learnable_width(table: &IrrepTable, k: usize, scheme: WidthScheme) -> usize {
    let dims: usize = table
        .irreps()
        .iter()
        .enumerate()
        .filter(|(i, _)| *i != table.trivial_index())
        .map(|(_, r)| r.dim.pow(k as u32 + 1))
        .sum();
    (k + 1) * scheme.waring_terms(k) * dims
}

/// Conjugation-closed set of irreps, always containing the trivial one.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LearnedSet {
    indices: BTreeSet<usize>,
}

impl LearnedSet {
    pub fn trivial(table: &IrrepTable) -> Self {
        LearnedSet { indices: [table.trivial_index()].into() }
    }

    pub fn full(table: &IrrepTable) -> Self {
        LearnedSet { indices: (0..table.len()).collect() }
    }

    /// Closes `indices` under conjugation and adds the trivial irrep.
    pub fn new(table: &IrrepTable, indices: impl IntoIterator<Item = usize>) -> Self {
        let mut set = LearnedSet::trivial(table);
        for i in indices {
            set.indices.insert(i);
            set.indices.insert(table.irrep(i).conjugate_index);
        }
        set
    }

    pub fn with_class(&self, table: &IrrepTable, class: &[usize]) -> Self {
        LearnedSet::new(table, self.indices.iter().copied().chain(class.iter().copied()))
    }

    pub fn contains(&self, i: usize) -> bool {
        self.indices.contains(&i)
    }

    pub fn indices(&self) -> impl Iterator<Item = usize> + '_ {
        self.indices.iter().copied()
    }
}

/// `f[h] = (1/|G|) sum_{rho in I} n_rho Re Tr(rho(h) x_hat[rho] rho(g)^+)` for product `g`,
/// the projection of the target `x_g` onto the isotypic components of `I`.
pub fn partial_target(table: &IrrepTable, spec: &EncodingSpec, learned: &LearnedSet, g: usize) -> Vec<f64> {
    let group = table.group();
    let n = group.order() as f64;
    let mut out = vec![0.0; group.order()];
    for i in learned.indices() {
        let r = table.irrep(i);
        let m = &spec.x_hat.blocks[i] * r.matrix(g).adjoint();
        for (h, o) in out.iter_mut().enumerate() {
            *o += r.dim as f64 * (r.matrix(h) * &m).trace().re / n;
        }
    }
    out
}

/// Partial target for a whole sequence.
pub fn partial_target_seq(
    table: &IrrepTable,
    spec: &EncodingSpec,
    learned: &LearnedSet,
    seq: &[usize],
) -> Result<Vec<f64>, crate::error::GroupError> {
    let g = table.group().compose_sequence(seq)?;
    Ok(partial_target(table, spec, learned, g))
}

/// Single neuron `theta = (u_1, ..., u_k, w)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Neuron {
    pub u: Vec<Vec<f64>>,
    pub w: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum UtilityMode {
    Direct,
    Frequency,
}

/// Utility of a dormant neuron with activation `z^k` against the residual left by `learned`.
pub fn neuron_utility(
    table: &IrrepTable,
    spec: &EncodingSpec,
    learned: &LearnedSet,
    neuron: &Neuron,
    mode: UtilityMode,
) -> Result<f64, EncodingError> {
    let k = neuron.u.len();
    let group = table.group();
    let order = group.order();
    match mode {
        UtilityMode::Direct => {
            let rows = encoding::exhaustive_rows(order, k);
            if rows > encoding::DEFAULT_ROW_CAP {
                return Err(EncodingError::TooManyRows { rows, cap: encoding::DEFAULT_ROW_CAP });
            }
            let orbit: Vec<Vec<f64>> = group.elements().map(|g| encoding::orbit_encode(group, &spec.x, g)).collect();
            // <w, x_g - partial_target(g)> depends only on the product g.
            let resid: Vec<f64> = group
                .elements()
                .map(|g| {
                    let p = partial_target(table, spec, learned, g);
                    neuron.w.iter().zip(orbit[g].iter().zip(&p)).map(|(w, (t, q))| w * (t - q)).sum()
                })
                .collect();
            // proj[j][g] = <u_j, x_g>
            let proj: Vec<Vec<f64>> = neuron
                .u
                .iter()
                .map(|u| orbit.iter().map(|xg| u.iter().zip(xg).map(|(a, b)| a * b).sum()).collect())
                .collect();
            let mut total = 0.0;
            let mut digits = vec![0usize; k];
            for _ in 0..rows {
                let z: f64 = digits.iter().enumerate().map(|(j, &g)| proj[j][g]).sum();
                let prod = digits.iter().skip(1).fold(digits[0], |acc, &g| group.mul(acc, g));
                total += z.powi(k as i32) * resid[prod];
                for d in digits.iter_mut().rev() {
                    *d += 1;
                    if *d < order {
                        break;
                    }
                    *d = 0;
                }
            }
            Ok(total / rows as f64)
        }
        UtilityMode::Frequency => {
            let uh: Vec<FourierCoefficients> =
                neuron.u.iter().map(|u| harmonic::gft_real(table, u)).collect::<Result<_, _>>()?;
            let wh = harmonic::gft_real(table, &neuron.w)?;
            let mut total = Complex64::new(0.0, 0.0);
            for (i, r) in table.irreps().iter().enumerate() {
                if learned.contains(i) {
                    continue;
                }
                let x = &spec.x_hat.blocks[i];
                let mut prod = linalg::identity(r.dim);
                for u in &uh {
                    prod = prod * u.blocks[i].adjoint() * x;
                }
                let b = wh.blocks[i].adjoint() * x;
                total += linalg::irrep_inner(&b, &prod);
            }
            let fact: f64 = (1..=k).map(|v| v as f64).product();
            Ok(fact * total.re / (order as f64).powi(k as i32 + 1))
        }
    }
}

/// `v[g] = Re Tr(rho(g) s)`.
pub fn aligned_vector(table: &IrrepTable, irrep: usize, s: &CMat) -> Result<Vec<f64>, ConstructionError> {
    let r = table.irrep(irrep);
    if s.shape() != (r.dim, r.dim) {
        return Err(ConstructionError::Shape(format!(
            "expected {0}x{0} coefficient matrix for {1}, got {2:?}",
            r.dim,
            r.name,
            s.shape()
        )));
    }
    Ok(table.group().elements().map(|g| (r.matrix(g) * s).trace().re).collect())
}

/// Neuron with `u_j[g] = Re Tr(rho(g) s_j)` and `w[g] = Re Tr(rho(g) s_w)`.
pub fn aligned_neuron(table: &IrrepTable, irrep: usize, s: &[CMat], s_w: &CMat) -> Result<Neuron, ConstructionError> {
    let r = table.irrep(irrep);
    if r.is_real && s.iter().chain([s_w]).any(|m| m.iter().any(|z| z.im != 0.0)) {
        return Err(ConstructionError::Shape(format!("{} is real; coefficient matrices must be real", r.name)));
    }
    Ok(Neuron {
        u: s.iter().map(|m| aligned_vector(table, irrep, m)).collect::<Result<_, _>>()?,
        w: aligned_vector(table, irrep, s_w)?,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct Prediction {
    pub group: String,
    pub k: usize,
    pub order: Vec<ClassScore>,
    pub tie_groups: Vec<Vec<String>>,
    pub has_ties: bool,
    pub plateaus: Vec<f64>,
    pub sufficient_width_monic: usize,
    pub sufficient_width_monomial: usize,
    pub learnable_width_monic: usize,
    pub learnable_width_monomial: usize,
    pub warnings: Vec<String>,
}

pub fn predict(table: &IrrepTable, spec: &EncodingSpec, k: usize) -> Prediction {
    let order = predicted_order(table, spec, k);
    let groups = tie_groups(&order);
    let has_ties = groups.iter().any(|g| g.len() > 1);
    let plateaus = plateau_losses(table, spec, &order);
    let mut warnings = encoding::check_assumptions(table, spec, k).warnings();
    if has_ties {
        warnings.push("tied classes are outside the theory; their relative order is not predicted".to_string());
    }
    Prediction {
        group: table.group().kind().to_string(),
        k,
        plateaus,
        tie_groups: groups,
        has_ties,
        order,
        sufficient_width_monic: sufficient_width(table, k, WidthScheme::Monic),
        sufficient_width_monomial: sufficient_width(table, k, WidthScheme::Monomial),
        learnable_width_monic: learnable_width(table, k, WidthScheme::Monic),
        learnable_width_monomial: learnable_width(table, k, WidthScheme::Monomial),
        warnings,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::encoding::{centered_one_hot, from_fourier_spec};
    use crate::group::{make_cyclic, make_dihedral};
    use crate::linalg::cplx;
    use std::collections::BTreeMap;
    use std::f64::consts::PI;

    #[test]
    fn dihedral_one_hot_scores() {
        let t = IrrepTable::for_group(&make_dihedral(3).unwrap());
        let e = centered_one_hot(&t);
        let sign = t.index_of("sign").unwrap();
        let two = t.index_of("2d_1").unwrap();
        assert!((utility_score(&t, &e, sign, 2) - 1.0).abs() < 1e-12);
        assert!((utility_score(&t, &e, two, 2) - 0.5f64.sqrt()).abs() < 1e-12);
        assert!((utility_score(&t, &e, two, 3) - 0.5).abs() < 1e-12);
        let order = predicted_order(&t, &e, 3);
        assert_eq!(order[0].name, "sign");
        let p = plateau_losses(&t, &e, &order);
        let want = [5.0 / 12.0, 4.0 / 12.0, 0.0];
        assert!(p.iter().zip(want).all(|(a, b)| (a - b).abs() < 1e-12));
    }

    #[test]
    fn cyclic_plateaus_and_ties() {
        let t = IrrepTable::for_group(&make_cyclic(5).unwrap());
        let e = centered_one_hot(&t);
        let order = predicted_order(&t, &e, 2);
        let p = plateau_losses(&t, &e, &order);
        assert!(p.iter().zip([0.4, 0.2, 0.0]).all(|(a, b)| (a - b).abs() < 1e-12));
        assert_eq!(tie_groups(&order).len(), 1);
        let alphas: BTreeMap<String, f64> = [("rho1|rho4".into(), 1.0), ("rho2|rho3".into(), 3.0)].into();
        let e = from_fourier_spec(&t, &alphas).unwrap();
        let order = predicted_order(&t, &e, 2);
        assert_eq!(order[0].name, "rho2|rho3");
        assert!(!predict(&t, &e, 2).has_ties);
    }

    #[test]
    fn widths() {
        let c5 = IrrepTable::for_group(&make_cyclic(5).unwrap());
        let d3 = IrrepTable::for_group(&make_dihedral(3).unwrap());
        let c1 = IrrepTable::for_group(&make_cyclic(1).unwrap());
        assert_eq!(sufficient_width(&c5, 2, WidthScheme::Monomial), 30);
        assert_eq!(sufficient_width(&d3, 2, WidthScheme::Monic), 120);
        assert_eq!(learnable_width(&c1, 2, WidthScheme::Monic), 0);
    }

    #[test]
    fn full_partial_target_is_target() {
        let g = make_dihedral(3).unwrap();
        let t = IrrepTable::for_group(&g);
        let e = centered_one_hot(&t);
        let full = LearnedSet::full(&t);
        for h in g.elements() {
            let p = partial_target(&t, &e, &full, h);
            let x = encoding::orbit_encode(&g, &e.x, h);
            assert!(p.iter().zip(&x).all(|(a, b)| (a - b).abs() < 1e-12));
        }
        let triv = LearnedSet::trivial(&t);
        assert!(partial_target(&t, &e, &triv, 2).iter().all(|v| v.abs() < 1e-15));
    }

    #[test]
    fn cosine_neuron() {
        let t = IrrepTable::for_group(&make_cyclic(5).unwrap());
        let v = aligned_vector(&t, 1, &linalg::identity(1)).unwrap();
        for (g, x) in v.iter().enumerate() {
            assert!((x - (2.0 * PI * g as f64 / 5.0).cos()).abs() < 1e-12);
        }
        assert!(aligned_vector(&t, 1, &linalg::identity(2)).is_err());
        let s = [linalg::identity(1) * cplx(0.0, 1.0)];
        let sign = IrrepTable::for_group(&make_dihedral(3).unwrap());
        assert!(aligned_neuron(&sign, 1, &s, &linalg::identity(1)).is_err());
    }

    #[test]
    fn zero_output_has_no_utility() {
        let t = IrrepTable::for_group(&make_cyclic(3).unwrap());
        let e = centered_one_hot(&t);
        let n = Neuron { u: vec![vec![1.0, 0.5, -0.2], vec![0.3, 0.1, 0.9]], w: vec![0.0; 3] };
        let triv = LearnedSet::trivial(&t);
        for mode in [UtilityMode::Direct, UtilityMode::Frequency] {
            assert_eq!(neuron_utility(&t, &e, &triv, &n, mode).unwrap(), 0.0);
        }
    }

    #[test]
    fn utility_modes_agree() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        for t in [make_cyclic(3), make_dihedral(3)].map(|g| IrrepTable::for_group(&g.unwrap())) {
            let e = centered_one_hot(&t);
            let n = t.group().order();
            for k in [2, 3] {
                let sets = [LearnedSet::trivial(&t), LearnedSet::new(&t, [1])];
                for learned in &sets {
                    let mut v = || (0..n).map(|_| rng.random_range(-1.0..1.0)).collect::<Vec<f64>>();
                    let neuron = Neuron { u: (0..k).map(|_| v()).collect(), w: v() };
                    let a = neuron_utility(&t, &e, learned, &neuron, UtilityMode::Direct).unwrap();
                    let b = neuron_utility(&t, &e, learned, &neuron, UtilityMode::Frequency).unwrap();
                    assert!((a - b).abs() < 1e-10, "{a} vs {b}");
                }
            }
        }
    }
}
