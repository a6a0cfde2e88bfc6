//! Finite groups stored as explicit multiplication tables.
//!
//! Elements are plain indices in `0..order`. Every constructor fixes its element ordering, so
//! all downstream matrices (regular representation, Fourier basis, datasets) are reproducible.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::GroupError;

/// Default cap on the order of constructed groups.
pub const DEFAULT_MAX_ORDER: usize = 256;

/// Constructor tag used to rebuild irreps and to print the group.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum GroupKind {
    Cyclic(usize),
    Dihedral(usize),
    Product(Box<GroupKind>, Box<GroupKind>),
}

impl fmt::Display for GroupKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GroupKind::Cyclic(p) => write!(f, "C{p}"),
            GroupKind::Dihedral(p) => write!(f, "D{p}"),
            GroupKind::Product(a, b) => write!(f, "{a}x{b}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FiniteGroup {
    order: usize,
    mul_table: Vec<usize>,
    inv_table: Vec<usize>,
    identity: usize,
    labels: Vec<String>,
    kind: GroupKind,
}

impl FiniteGroup {
    /// Builds a group from a raw row-major multiplication table, validating every axiom.
    pub fn from_table(
        mul_table: Vec<usize>,
        labels: Vec<String>,
        kind: GroupKind,
    ) -> Result<Self, GroupError> {
        let order = labels.len();
        if order == 0 {
            return Err(GroupError::ZeroOrder);
        }
        if mul_table.len() != order * order {
            return Err(GroupError::InvalidTable(format!(
                "table has {} entries, expected {}",
                mul_table.len(),
                order * order
            )));
        }
        if let Some(&bad) = mul_table.iter().find(|&&e| e >= order) {
            return Err(GroupError::BadElement { index: bad, order });
        }
        let identity = (0..order)
            .find(|&e| (0..order).all(|g| mul_table[e * order + g] == g && mul_table[g * order + e] == g))
            .ok_or_else(|| GroupError::InvalidTable("no identity element".into()))?;
        let mut inv_table = vec![usize::MAX; order];
        for g in 0..order {
            let inv = (0..order)
                .find(|&h| mul_table[g * order + h] == identity && mul_table[h * order + g] == identity)
                .ok_or_else(|| GroupError::InvalidTable(format!("element {g} has no inverse")))?;
            inv_table[g] = inv;
        }
        let group = FiniteGroup { order, mul_table, inv_table, identity, labels, kind };
        let report = group.validate();
        if !report.passed() {
            return Err(GroupError::InvalidTable(format!("{report:?}")));
        }
        Ok(group)
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn identity(&self) -> usize {
        self.identity
    }

    pub fn kind(&self) -> &GroupKind {
        &self.kind
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn label(&self, g: usize) -> &str {
        &self.labels[g]
    }

    #[inline]
    pub fn mul(&self, g: usize, h: usize) -> usize {
        self.mul_table[g * self.order + h]
    }

    #[inline]
    pub fn inv(&self, g: usize) -> usize {
        self.inv_table[g]
    }

    pub fn elements(&self) -> std::ops::Range<usize> {
        0..self.order
    }

    pub fn is_abelian(&self) -> bool {
        self.elements()
            .all(|g| self.elements().all(|h| self.mul(g, h) == self.mul(h, g)))
    }

    pub fn check_element(&self, g: usize) -> Result<(), GroupError> {
        if g < self.order {
            Ok(())
        } else {
            Err(GroupError::BadElement { index: g, order: self.order })
        }
    }

    /// Left-to-right product `g_1 g_2 ... g_k`.
    pub fn compose_sequence(&self, seq: &[usize]) -> Result<usize, GroupError> {
        let (&first, rest) = seq.split_first().ok_or(GroupError::EmptySequence)?;
        self.check_element(first)?;
        rest.iter().try_fold(first, |acc, &g| {
            self.check_element(g)?;
            Ok(self.mul(acc, g))
        })
    }

    /// Exhaustive axiom check. Associativity is `O(|G|^3)`.
    pub fn validate(&self) -> GroupReport {
        let n = self.order;
        let mut latin = true;
        for i in 0..n {
            let mut row_seen = vec![false; n];
            let mut col_seen = vec![false; n];
            for j in 0..n {
                row_seen[self.mul(i, j)] = true;
                col_seen[self.mul(j, i)] = true;
            }
            latin &= row_seen.iter().all(|&b| b) && col_seen.iter().all(|&b| b);
        }
        let mut associative = true;
        'outer: for g in 0..n {
            for h in 0..n {
                let gh = self.mul(g, h);
                for k in 0..n {
                    if self.mul(gh, k) != self.mul(g, self.mul(h, k)) {
                        associative = false;
                        break 'outer;
                    }
                }
            }
        }
        let e = self.identity;
        let identity = (0..n).all(|g| self.mul(e, g) == g && self.mul(g, e) == g);
        let inverse = (0..n).all(|g| self.mul(self.inv(g), g) == e && self.mul(g, self.inv(g)) == e);
        GroupReport { latin_square: latin, associative, identity, inverse }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct GroupReport {
    pub latin_square: bool,
    pub associative: bool,
    pub identity: bool,
    pub inverse: bool,
}

impl GroupReport {
    pub fn passed(&self) -> bool {
        self.latin_square && self.associative && self.identity && self.inverse
    }
}

fn check_limit(order: usize, limit: usize) -> Result<(), GroupError> {
    if order > limit {
        Err(GroupError::OrderLimit { order, limit })
    } else {
        Ok(())
    }
}

/// `C_p = Z/pZ` under addition mod `p`.
pub fn make_cyclic(p: usize) -> Result<FiniteGroup, GroupError> {
    make_cyclic_with_limit(p, DEFAULT_MAX_ORDER)
}

pub fn make_cyclic_with_limit(p: usize, limit: usize) -> Result<FiniteGroup, GroupError> {
    if p == 0 {
        return Err(GroupError::ZeroOrder);
    }
    check_limit(p, limit)?;
    let mul_table = (0..p * p).map(|i| (i / p + i % p) % p).collect();
    let inv_table = (0..p).map(|a| (p - a) % p).collect();
    Ok(FiniteGroup {
        order: p,
        mul_table,
        inv_table,
        identity: 0,
        labels: (0..p).map(|a| a.to_string()).collect(),
        kind: GroupKind::Cyclic(p),
    })
}

/// `D_p`, symmetries of the regular `p`-gon.
///
/// Index `a` in `0..p` is the rotation `r^a`, index `p + a` is the reflection `s r^a`, with
/// `r^p = s^2 = 1` and `s r s = r^{-1}`.
pub fn make_dihedral(p: usize) -> Result<FiniteGroup, GroupError> {
    make_dihedral_with_limit(p, DEFAULT_MAX_ORDER)
}

pub fn make_dihedral_with_limit(p: usize, limit: usize) -> Result<FiniteGroup, GroupError> {
    if p < 2 {
        return Err(GroupError::DihedralTooSmall(p));
    }
    let order = 2 * p;
    check_limit(order, limit)?;
    let split = |g: usize| (g / p, g % p);
    let join = |e: usize, a: usize| e * p + a;
    let mut mul_table = vec![0; order * order];
    for g in 0..order {
        let (e1, a) = split(g);
        for h in 0..order {
            let (e2, b) = split(h);
            // s^e1 r^a s^e2 r^b = s^(e1+e2) r^((-1)^e2 a + b)
            let rot = if e2 == 0 { (a + b) % p } else { (p - a + b) % p };
            mul_table[g * order + h] = join((e1 + e2) % 2, rot);
        }
    }
    let inv_table = (0..order)
        .map(|g| {
            let (e, a) = split(g);
            if e == 0 {
                (p - a) % p
            } else {
                g
            }
        })
        .collect();
    let labels = (0..order)
        .map(|g| {
            let (e, a) = split(g);
            match (e, a) {
                (0, 0) => "1".to_string(),
                (0, a) => format!("r^{a}"),
                (_, 0) => "s".to_string(),
                (_, a) => format!("sr^{a}"),
            }
        })
        .collect();
    Ok(FiniteGroup { order, mul_table, inv_table, identity: 0, labels, kind: GroupKind::Dihedral(p) })
}

/// Direct product with lexicographic ordering: `(g, h)` has index `g * |H| + h`.
pub fn make_product(g: &FiniteGroup, h: &FiniteGroup) -> Result<FiniteGroup, GroupError> {
    make_product_with_limit(g, h, DEFAULT_MAX_ORDER)
}

pub fn make_product_with_limit(
    g: &FiniteGroup,
    h: &FiniteGroup,
    limit: usize,
) -> Result<FiniteGroup, GroupError> {
    let (ng, nh) = (g.order, h.order);
    let order = ng * nh;
    check_limit(order, limit)?;
    let mut mul_table = vec![0; order * order];
    for a in 0..order {
        for b in 0..order {
            let (a1, a2) = (a / nh, a % nh);
            let (b1, b2) = (b / nh, b % nh);
            mul_table[a * order + b] = g.mul(a1, b1) * nh + h.mul(a2, b2);
        }
    }
    let inv_table = (0..order).map(|a| g.inv(a / nh) * nh + h.inv(a % nh)).collect();
    let labels = (0..order)
        .map(|a| format!("({},{})", g.labels[a / nh], h.labels[a % nh]))
        .collect();
    Ok(FiniteGroup {
        order,
        mul_table,
        inv_table,
        identity: g.identity * nh + h.identity,
        labels,
        kind: GroupKind::Product(Box::new(g.kind.clone()), Box::new(h.kind.clone())),
    })
}

/// Rebuilds a group from its constructor tag.
pub fn build(kind: &GroupKind) -> Result<FiniteGroup, GroupError> {
    match kind {
        GroupKind::Cyclic(p) => make_cyclic(*p),
        GroupKind::Dihedral(p) => make_dihedral(*p),
        GroupKind::Product(a, b) => make_product(&build(a)?, &build(b)?),
    }
}

impl FromStr for GroupKind {
    type Err = GroupError;

    /// Parses specs such as `C5`, `D3`, `C2xC2`, `C3xD3`. Products associate to the left.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || GroupError::Parse(s.to_string());
        let mut factors = s.trim().split(['x', 'X']).map(|f| {
            let f = f.trim();
            let mut chars = f.chars();
            let head = chars.next().ok_or_else(bad)?;
            let p: usize = chars.as_str().parse().map_err(|_| bad())?;
            match head {
                'C' | 'c' => Ok(GroupKind::Cyclic(p)),
                'D' | 'd' => Ok(GroupKind::Dihedral(p)),
                _ => Err(bad()),
            }
        });
        let first = factors.next().ok_or_else(bad)??;
        factors.try_fold(first, |acc, f| Ok(GroupKind::Product(Box::new(acc), Box::new(f?))))
    }
}

/// Parses a group spec string and constructs the group.
pub fn parse_group(spec: &str) -> Result<FiniteGroup, GroupError> {
    build(&spec.parse()?)
}
