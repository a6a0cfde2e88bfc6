//! Unitary irreducible representations of the supported groups.
//!
//! Dihedral 2D irreps are stored in the real orthogonal basis (rotation matrices for `r`,
//! `diag(1, -1)` for `s`), so for every table built here the conjugate irrep is the
//! entrywise complex conjugate of a stored irrep and real irreps are entrywise real.

use std::f64::consts::PI;

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::Serialize;

use crate::group::{FiniteGroup, GroupKind};
use crate::linalg::{self, cplx, CMat, ONE};

/// Tolerance used by every representation-theoretic check.
pub const REP_TOL: f64 = 1e-10;

#[derive(Debug, Clone)]
pub struct Irrep {
    pub name: String,
    pub dim: usize,
    /// `matrices[g]` is `rho(g)`.
    pub matrices: Vec<CMat>,
    pub is_real: bool,
    pub conjugate_index: usize,
}

impl Irrep {
    fn new(name: impl Into<String>, matrices: Vec<CMat>) -> Self {
        let dim = matrices.first().map(|m| m.nrows()).unwrap_or(0);
        Irrep { name: name.into(), dim, matrices, is_real: false, conjugate_index: usize::MAX }
    }

    /// `C_rho`: 1 for real irreps, 2 otherwise.
    pub fn c_rho(&self) -> f64 {
        if self.is_real {
            1.0
        } else {
            2.0
        }
    }

    pub fn matrix(&self, g: usize) -> &CMat {
        &self.matrices[g]
    }

    /// `chi_rho(g) = Tr rho(g)`.
    pub fn character(&self, g: usize) -> Complex64 {
        self.matrices[g].trace()
    }
}

#[derive(Debug, Clone)]
pub struct IrrepTable {
    group: FiniteGroup,
    irreps: Vec<Irrep>,
}

impl IrrepTable {
    /// Dispatches on the group's constructor tag.
    pub fn for_group(group: &FiniteGroup) -> Self {
        let irreps = irreps_for_kind(group.kind());
        Self::from_irreps(group.clone(), irreps)
    }

    /// Assembles a table from explicit matrices, pairing each irrep with its entrywise
    /// conjugate. No validation beyond pairing; run [`validate_table`] for that.
    pub fn from_irreps(group: FiniteGroup, mut irreps: Vec<Irrep>) -> Self {
        let conj: Vec<usize> = (0..irreps.len())
            .map(|i| {
                (0..irreps.len())
                    .find(|&j| {
                        irreps[j].dim == irreps[i].dim
                            && irreps[i].matrices.iter().zip(&irreps[j].matrices).all(|(a, b)| {
                                linalg::max_abs_diff(&linalg::conj(a), b) < REP_TOL
                            })
                    })
                    .unwrap_or(i)
            })
            .collect();
        for (irrep, c) in irreps.iter_mut().zip(conj) {
            irrep.conjugate_index = c;
        }
        for i in 0..irreps.len() {
            irreps[i].is_real = irreps[i].conjugate_index == i;
        }
        IrrepTable { group, irreps }
    }

    pub fn group(&self) -> &FiniteGroup {
        &self.group
    }

    pub fn irreps(&self) -> &[Irrep] {
        &self.irreps
    }

    pub fn irrep(&self, i: usize) -> &Irrep {
        &self.irreps[i]
    }

    pub fn len(&self) -> usize {
        self.irreps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.irreps.is_empty()
    }

    pub const fn trivial_index(&self) -> usize {
        0
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.irreps.iter().position(|r| r.name == name)
    }

    /// Conjugate-closed classes `{rho, conj(rho)}` as sorted index lists, ordered by their
    /// smallest member. The trivial class comes first.
    pub fn classes(&self) -> Vec<Vec<usize>> {
        let mut seen = vec![false; self.len()];
        let mut out = Vec::new();
        for i in 0..self.len() {
            if seen[i] {
                continue;
            }
            let j = self.irreps[i].conjugate_index;
            seen[i] = true;
            seen[j] = true;
            let mut class = vec![i];
            if j != i {
                class.push(j);
            }
            class.sort_unstable();
            out.push(class);
        }
        out
    }

    /// Index of the class containing irrep `i` in [`Self::classes`].
    pub fn class_of(&self, i: usize) -> usize {
        self.classes().iter().position(|c| c.contains(&i)).expect("every irrep has a class")
    }

    pub fn class_name(&self, class: &[usize]) -> String {
        class.iter().map(|&i| self.irreps[i].name.as_str()).collect::<Vec<_>>().join("|")
    }

    pub fn dims_squared_sum(&self) -> usize {
        self.irreps.iter().map(|r| r.dim * r.dim).sum()
    }

    /// `(1/|G|) sum_g chi(g^2)`; 1 for real type, 0 for complex type.
    pub fn frobenius_schur(&self, i: usize) -> f64 {
        let g = &self.group;
        let s: Complex64 = g.elements().map(|x| self.irreps[i].character(g.mul(x, x))).sum();
        s.re / g.order() as f64
    }

    pub fn to_json(&self) -> IrrepTableJson {
        IrrepTableJson {
            group: self.group.kind().to_string(),
            order: self.group.order(),
            irreps: self
                .irreps
                .iter()
                .map(|r| IrrepJson {
                    name: r.name.clone(),
                    dim: r.dim,
                    is_real: r.is_real,
                    conjugate_index: r.conjugate_index,
                    c_rho: r.c_rho(),
                    matrices: r.matrices.iter().map(matrix_to_json).collect(),
                })
                .collect(),
        }
    }
}

/// Row-major `[re, im]` pairs.
pub fn matrix_to_json(m: &CMat) -> Vec<Vec<[f64; 2]>> {
    (0..m.nrows())
        .map(|i| (0..m.ncols()).map(|j| [m[(i, j)].re, m[(i, j)].im]).collect())
        .collect()
}

#[derive(Debug, Clone, Serialize)]
pub struct IrrepJson {
    pub name: String,
    pub dim: usize,
    pub is_real: bool,
    pub conjugate_index: usize,
    pub c_rho: f64,
    pub matrices: Vec<Vec<Vec<[f64; 2]>>>,
}

#[derive(Debug, Clone, Serialize)]
pub struct IrrepTableJson {
    pub group: String,
    pub order: usize,
    pub irreps: Vec<IrrepJson>,
}

fn scalar(z: Complex64) -> CMat {
    CMat::from_element(1, 1, z)
}

fn irreps_for_kind(kind: &GroupKind) -> Vec<Irrep> {
    match kind {
        GroupKind::Cyclic(p) => cyclic_irreps(*p),
        GroupKind::Dihedral(p) => dihedral_irreps(*p),
        GroupKind::Product(a, b) => product_irreps(&irreps_for_kind(a), &irreps_for_kind(b)),
    }
}

/// `rho_k(g) = exp(2 pi i g k / p)`.
fn cyclic_irreps(p: usize) -> Vec<Irrep> {
    (0..p)
        .map(|k| {
            let name = if k == 0 { "triv".to_string() } else { format!("rho{k}") };
            let mats = (0..p)
                .map(|g| scalar(Complex64::from_polar(1.0, 2.0 * PI * ((g * k) % p) as f64 / p as f64)))
                .collect();
            Irrep::new(name, mats)
        })
        .collect()
}

fn dihedral_irreps(p: usize) -> Vec<Irrep> {
    let elems: Vec<(usize, usize)> = (0..2 * p).map(|g| (g / p, g % p)).collect();
    let one_d = |name: &str, f: &dyn Fn(usize, usize) -> f64| {
        Irrep::new(name, elems.iter().map(|&(e, a)| scalar(cplx(f(e, a), 0.0))).collect())
    };
    let sign = |k: usize| if k % 2 == 0 { 1.0 } else { -1.0 };
    let mut out = vec![one_d("triv", &|_, _| 1.0), one_d("sign", &|e, _| sign(e))];
    if p % 2 == 0 {
        out.push(one_d("alt", &|_, a| sign(a)));
        out.push(one_d("alt_sign", &|e, a| sign(a + e)));
    }
    let two_d_count = if p % 2 == 0 { p / 2 - 1 } else { (p - 1) / 2 };
    let refl = CMat::from_row_slice(2, 2, &[ONE, cplx(0.0, 0.0), cplx(0.0, 0.0), -ONE]);
    for j in 1..=two_d_count {
        let mats = elems
            .iter()
            .map(|&(e, a)| {
                let theta = 2.0 * PI * ((j * a) % p) as f64 / p as f64;
                let (s, c) = theta.sin_cos();
                let rot = CMat::from_row_slice(2, 2, &[cplx(c, 0.0), cplx(-s, 0.0), cplx(s, 0.0), cplx(c, 0.0)]);
                if e == 0 {
                    rot
                } else {
                    &refl * rot
                }
            })
            .collect();
        out.push(Irrep::new(format!("2d_{j}"), mats));
    }
    out
}

fn kron(a: &CMat, b: &CMat) -> CMat {
    a.kronecker(b)
}

fn product_irreps(a: &[Irrep], b: &[Irrep]) -> Vec<Irrep> {
    let nb = b[0].matrices.len();
    let order = a[0].matrices.len() * nb;
    let mut out = Vec::with_capacity(a.len() * b.len());
    for ra in a {
        for rb in b {
            let name = if ra.name == "triv" && rb.name == "triv" {
                "triv".to_string()
            } else {
                format!("{}*{}", ra.name, rb.name)
            };
            let mats = (0..order).map(|g| kron(&ra.matrices[g / nb], &rb.matrices[g % nb])).collect();
            out.push(Irrep::new(name, mats));
        }
    }
    out
}

/// Left regular representation: entry `(i, j)` is 1 iff `g * j == i`.
pub fn regular_rep(group: &FiniteGroup, g: usize) -> DMatrix<f64> {
    let n = group.order();
    let mut m = DMatrix::zeros(n, n);
    for j in 0..n {
        m[(group.mul(g, j), j)] = 1.0;
    }
    m
}

/// Maximum violation of each representation-theoretic identity.
#[derive(Debug, Clone, Serialize)]
pub struct RepReport {
    pub homomorphism: f64,
    pub unitarity: f64,
    pub identity: f64,
    pub completeness_sum: usize,
    pub group_order: usize,
    pub schur: f64,
    pub conjugation_involution: bool,
    pub trivial_unique: bool,
    /// Max |indicator - expected| where expected is 1 for real irreps and 0 otherwise.
    pub frobenius_schur: f64,
}

impl RepReport {
    pub fn passed(&self) -> bool {
        self.homomorphism < REP_TOL
            && self.unitarity < REP_TOL
            && self.identity < REP_TOL
            && self.completeness_sum == self.group_order
            && self.schur < REP_TOL
            && self.conjugation_involution
            && self.trivial_unique
            && self.frobenius_schur < REP_TOL
    }

    pub fn failures(&self) -> Vec<String> {
        let mut out = Vec::new();
        let mut check = |ok: bool, what: String| {
            if !ok {
                out.push(what);
            }
        };
        check(self.homomorphism < REP_TOL, format!("homomorphism {:e}", self.homomorphism));
        check(self.unitarity < REP_TOL, format!("unitarity {:e}", self.unitarity));
        check(self.identity < REP_TOL, format!("identity {:e}", self.identity));
        check(
            self.completeness_sum == self.group_order,
            format!("completeness {} != {}", self.completeness_sum, self.group_order),
        );
        check(self.schur < REP_TOL, format!("schur {:e}", self.schur));
        check(self.conjugation_involution, "conjugate pairing is not an involution".into());
        check(self.trivial_unique, "trivial irrep missing or repeated".into());
        check(self.frobenius_schur < REP_TOL, format!("frobenius-schur {:e}", self.frobenius_schur));
        out
    }
}

/// Full validation suite, including Schur orthogonality over every pair of irreps and every
/// pair of matrix units:
/// `sum_g <rho1(g)^+, A1> <rho2(g)^+, A2> = |G| <conj(A1), A2>` if `rho1 = conj(rho2)`, else 0.
pub fn validate_table(table: &IrrepTable) -> RepReport {
    let g = table.group();
    let order = g.order();
    let mut homomorphism: f64 = 0.0;
    let mut unitarity: f64 = 0.0;
    let mut identity: f64 = 0.0;
    for r in table.irreps() {
        let eye = linalg::identity(r.dim);
        identity = identity.max(linalg::max_abs_diff(r.matrix(g.identity()), &eye));
        for a in g.elements() {
            let m = r.matrix(a);
            unitarity = unitarity.max(linalg::max_abs_diff(&(m.adjoint() * m), &eye));
            for b in g.elements() {
                let lhs = r.matrix(g.mul(a, b));
                homomorphism = homomorphism.max(linalg::max_abs_diff(lhs, &(m * r.matrix(b))));
            }
        }
    }

    // With matrix units A1 = E_{ab}, A2 = E_{cd}: <rho(g)^+, E_ab> = n rho(g)[b, a].
    let mut schur: f64 = 0.0;
    for r1 in table.irreps() {
        for (i2, r2) in table.irreps().iter().enumerate() {
            let paired = r1.conjugate_index == i2;
            let (n1, n2) = (r1.dim, r2.dim);
            let scale = (n1 * n2) as f64;
            for a in 0..n1 {
                for b in 0..n1 {
                    for c in 0..n2 {
                        for d in 0..n2 {
                            let lhs: Complex64 = g
                                .elements()
                                .map(|x| r1.matrix(x)[(b, a)] * r2.matrix(x)[(d, c)])
                                .sum::<Complex64>()
                                * scale;
                            let rhs = if paired && a == c && b == d {
                                (order * n1) as f64
                            } else {
                                0.0
                            };
                            schur = schur.max((lhs - rhs).norm());
                        }
                    }
                }
            }
        }
    }

    let conjugation_involution = table
        .irreps()
        .iter()
        .enumerate()
        .all(|(i, r)| r.conjugate_index < table.len() && table.irrep(r.conjugate_index).conjugate_index == i)
        && table.irreps().iter().enumerate().all(|(i, r)| r.is_real == (r.conjugate_index == i));
    let trivial_count = table
        .irreps()
        .iter()
        .filter(|r| r.dim == 1 && r.matrices.iter().all(|m| (m[(0, 0)] - ONE).norm() < REP_TOL))
        .count();
    let trivial_first = table
        .irreps()
        .first()
        .map(|r| r.dim == 1 && r.matrices.iter().all(|m| (m[(0, 0)] - ONE).norm() < REP_TOL))
        .unwrap_or(false);
    let frobenius_schur = (0..table.len())
        .map(|i| {
            let expected = if table.irrep(i).is_real { 1.0 } else { 0.0 };
            (table.frobenius_schur(i) - expected).abs()
        })
        .fold(0.0, f64::max);

    RepReport {
        homomorphism,
        unitarity,
        identity,
        completeness_sum: table.dims_squared_sum(),
        group_order: order,
        schur,
        conjugation_involution,
        trivial_unique: trivial_count == 1 && trivial_first,
        frobenius_schur,
    }
}
