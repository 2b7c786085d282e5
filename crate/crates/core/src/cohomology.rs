//! Degree-1 classes in dual-basis coordinates, cup products read off from
//! normal-form relations, and the Z/4 lifting oracle.
//!
//! For a relation `r_l = prod [x_h, x_h']^a(l)_{h,h'} prod x_k^(2 b(l)_k)`
//! (modulo `G^4 [G^2, G^2]`), the coordinate `tr_l` of `chi_h . chi_h'` is
//! `a(l)_{h,h'}` off the diagonal and `b(l)_h` on it. Each relation is stored
//! as a symmetric F2 matrix, so `tr_l(alpha . beta) = alpha^T Q_l beta`.

use std::fmt;
use std::ops::{Add, Range};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::gf2::{AffineSystem, BitRow};
use crate::groupexpr::{ExprError, Factor, GeneratorRoles, GroupExpr, Presentation};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CohomologyError {
    #[error("class dimension {0} does not match {1}")]
    DimMismatch(usize, usize),
    #[error("relation {relation} is not in normal form: {detail}")]
    NotNormalForm { relation: usize, detail: String },
    #[error(transparent)]
    Expr(#[from] ExprError),
}

/// Canonical generator names, in presentation order.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BasisRegistry {
    names: Vec<String>,
}

impl BasisRegistry {
    pub fn new(names: Vec<String>) -> Self {
        BasisRegistry { names }
    }

    pub fn from_presentation(pres: &Presentation) -> Self {
        BasisRegistry::new(pres.names())
    }

    pub fn dim(&self) -> usize {
        self.names.len()
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn index(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|n| n == name)
    }

    pub fn basis(&self, i: usize) -> CohClass {
        CohClass::basis(self.dim(), i)
    }

    /// Renders a class as `x1*+z*`, or `0`.
    pub fn render(&self, class: &CohClass) -> String {
        if class.is_zero() {
            return "0".into();
        }
        class
            .support()
            .map(|i| format!("{}*", self.names[i]))
            .collect::<Vec<_>>()
            .join("+")
    }
}

/// Dual-basis registry of the canonical generators of `expr`.
pub fn h1_basis(expr: &GroupExpr) -> Result<BasisRegistry, CohomologyError> {
    Ok(BasisRegistry::from_presentation(&expr.presentation()?))
}

/// An element of H^1 = Hom(G, F2), as coordinates over the dual basis.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct CohClass {
    bits: u64,
    dim: usize,
}

impl CohClass {
    pub fn zero(dim: usize) -> Self {
        assert!(dim <= 64);
        CohClass { bits: 0, dim }
    }

    pub fn basis(dim: usize, i: usize) -> Self {
        assert!(i < dim && dim <= 64);
        CohClass { bits: 1 << i, dim }
    }

    pub fn from_bits(dim: usize, bits: u64) -> Self {
        assert!(dim <= 64);
        let mask = if dim == 64 { u64::MAX } else { (1u64 << dim) - 1 };
        assert_eq!(bits & !mask, 0, "bits outside dimension {dim}");
        CohClass { bits, dim }
    }

    pub fn bits(&self) -> u64 {
        self.bits
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Value on the `i`-th generator.
    pub fn get(&self, i: usize) -> bool {
        (self.bits >> i) & 1 == 1
    }

    pub fn is_zero(&self) -> bool {
        self.bits == 0
    }

    pub fn support(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.dim).filter(move |&i| self.get(i))
    }

    /// Coordinates on a contiguous block of generators (restriction to a
    /// sub-brick).
    pub fn restrict(&self, range: Range<usize>) -> CohClass {
        let len = range.end - range.start;
        let mask = if len == 64 { u64::MAX } else { (1u64 << len) - 1 };
        CohClass {
            bits: (self.bits >> range.start) & mask,
            dim: len,
        }
    }

    /// Inverse of [`CohClass::restrict`]: places a sub-brick class at `offset`
    /// inside a space of dimension `dim`, zero elsewhere.
    pub fn extend(&self, offset: usize, dim: usize) -> CohClass {
        CohClass::from_bits(dim, self.bits << offset)
    }

    /// `alpha_1(g), ..., alpha_n(g)`: the superdiagonal a witness must put on
    /// generator `g`.
    pub fn column(seq: &[CohClass], g: usize) -> Vec<bool> {
        seq.iter().map(|c| c.get(g)).collect()
    }
}

impl Add for CohClass {
    type Output = CohClass;
    fn add(self, rhs: CohClass) -> CohClass {
        assert_eq!(self.dim, rhs.dim);
        CohClass {
            bits: self.bits ^ rhs.bits,
            dim: self.dim,
        }
    }
}

impl fmt::Debug for CohClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s: String = (0..self.dim).map(|i| if self.get(i) { '1' } else { '0' }).collect();
        write!(f, "CohClass({s})")
    }
}

/// An element of H^2 through its `tr_l` coordinates.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct H2Class(pub Vec<bool>);

impl H2Class {
    pub fn is_zero(&self) -> bool {
        self.0.iter().all(|b| !b)
    }

    pub fn xor(&self, other: &H2Class) -> H2Class {
        H2Class(self.0.iter().zip(&other.0).map(|(a, b)| a ^ b).collect())
    }
}

/// Per-relation symmetric tables realizing the cup product H^1 x H^1 -> H^2.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CupForm {
    dim: usize,
    /// `tables[l][h]` is row `h` of `Q_l`, packed.
    tables: Vec<Vec<u64>>,
}

impl CupForm {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn relation_count(&self) -> usize {
        self.tables.len()
    }

    /// `a(l)_{h,h'}` for `h != h'`.
    pub fn a(&self, l: usize, h: usize, h2: usize) -> bool {
        debug_assert_ne!(h, h2);
        (self.tables[l][h] >> h2) & 1 == 1
    }

    /// `b(l)_k`.
    pub fn b(&self, l: usize, k: usize) -> bool {
        (self.tables[l][k] >> k) & 1 == 1
    }

    /// Packed rows of `Q_l`.
    pub fn table(&self, l: usize) -> &[u64] {
        &self.tables[l]
    }

    pub fn cup(&self, alpha: &CohClass, beta: &CohClass) -> Result<H2Class, CohomologyError> {
        for c in [alpha, beta] {
            if c.dim() != self.dim {
                return Err(CohomologyError::DimMismatch(c.dim(), self.dim));
            }
        }
        Ok(H2Class(
            self.tables
                .iter()
                .map(|q| {
                    let mut acc = 0u32;
                    for h in alpha.support() {
                        acc ^= (q[h] & beta.bits()).count_ones() & 1;
                    }
                    acc == 1
                })
                .collect(),
        ))
    }

    /// Whether `alpha . beta = 0`; dimension errors count as non-zero.
    pub fn cup_vanishes(&self, alpha: &CohClass, beta: &CohClass) -> bool {
        self.cup(alpha, beta).map(|c| c.is_zero()).unwrap_or(false)
    }

    /// Block direct sum: generators and relations of `other` follow ours.
    pub fn direct_sum(&self, other: &CupForm) -> CupForm {
        let dim = self.dim + other.dim;
        let mut tables: Vec<Vec<u64>> = self
            .tables
            .iter()
            .map(|q| {
                let mut t = q.clone();
                t.resize(dim, 0);
                t
            })
            .collect();
        for q in &other.tables {
            let mut t = vec![0u64; self.dim];
            t.extend(q.iter().map(|r| r << self.dim));
            tables.push(t);
        }
        CupForm { dim, tables }
    }
}

fn toggle(q: &mut [u64], h: usize, h2: usize) {
    q[h] ^= 1 << h2;
    if h != h2 {
        q[h2] ^= 1 << h;
    }
}

/// Reads the coefficients `a(l)` and `b(l)` off each normal-form relation:
/// a commutator `[y, v]` toggles `a(l)_{y,v}`, a power `v^e` adds `e/2` to
/// `b(l)_v`, and a square `u^2` toggles `b(l)_u`.
pub fn extract_cup_form(pres: &Presentation) -> Result<CupForm, CohomologyError> {
    if let Some(detail) = pres.normal_form_violations().into_iter().next() {
        let relation = detail
            .strip_prefix("relation ")
            .and_then(|s| s.split(':').next())
            .and_then(|s| s.parse().ok())
            .unwrap_or(0);
        return Err(CohomologyError::NotNormalForm { relation, detail });
    }
    let dim = pres.generators.len();
    let tables = pres
        .relations
        .iter()
        .map(|word| {
            let mut q = vec![0u64; dim];
            for factor in word.factors() {
                match *factor {
                    Factor::Square(u) => toggle(&mut q, u, u),
                    Factor::Commutator(g, h) => toggle(&mut q, g, h),
                    Factor::Action { y, v, theta_y } => {
                        toggle(&mut q, y, v);
                        // e/2 mod 2 only depends on e mod 4
                        let e = theta_y.one_minus(8);
                        if (e >> 1) & 1 == 1 {
                            toggle(&mut q, v, v);
                        }
                    }
                }
            }
            q
        })
        .collect();
    Ok(CupForm { dim, tables })
}

/// `alpha . beta` under `form`.
pub fn cup(form: &CupForm, alpha: &CohClass, beta: &CohClass) -> Result<H2Class, CohomologyError> {
    form.cup(alpha, beta)
}

/// Whether every consecutive cup product of `seq` vanishes.
pub fn is_massey_admissible(form: &CupForm, seq: &[CohClass]) -> bool {
    seq.windows(2).all(|w| form.cup_vanishes(&w[0], &w[1]))
}

/// Whether `alpha` lifts to a homomorphism `G -> Z/4`.
///
/// Z/4 is abelian, so only the exponent sum of each generator in each
/// relation matters. Writing the lift as `alpha(g) + 2 t_g` turns the
/// conditions into an affine F2 system in the `t_g`.
pub fn bockstein_lift_exists(pres: &Presentation, alpha: &CohClass) -> bool {
    let d = pres.generators.len();
    if alpha.dim() != d {
        return false;
    }
    let mut system = AffineSystem::new(d);
    for word in &pres.relations {
        let sums = word.exponent_sums(d, 2);
        let s: i64 = (0..d)
            .filter(|&g| alpha.get(g))
            .map(|g| sums[g])
            .sum::<i64>()
            .rem_euclid(4);
        if s % 2 == 1 {
            return false;
        }
        let mut row = BitRow::zeros(d);
        for (g, &c) in sums.iter().enumerate() {
            if c.rem_euclid(2) == 1 {
                row.set(g, true);
            }
        }
        // 2 * (row . t) = -s (mod 4)
        system.push(row, (s / 2) % 2 == 1);
    }
    system.solve().is_some()
}

/// How a pair of non-zero classes with vanishing cup product sits relative
/// to a semidirect decomposition `Z x| G_0`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum PairShape {
    /// Both classes vanish on `z`.
    Interior,
    /// Both take the value 1 on `z` and differ by `chi_0`.
    Alternating,
    /// Neither pattern holds.
    Other,
}

/// Classifies a pair by the semidirect dichotomy. `roles.z` must be set.
pub fn pair_shape(roles: &GeneratorRoles, alpha: &CohClass, beta: &CohClass) -> PairShape {
    let z = roles.z.expect("semidirect roles");
    match (alpha.get(z), beta.get(z)) {
        (false, false) => PairShape::Interior,
        (true, true) if alpha.bits() ^ beta.bits() == roles.chi0_bits() => PairShape::Alternating,
        _ => PairShape::Other,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::groupexpr::{DemushkinCase, TwoPower};

    fn form_of(expr: &GroupExpr) -> (Presentation, CupForm) {
        let p = expr.presentation().unwrap();
        let f = extract_cup_form(&p).unwrap();
        (p, f)
    }

    fn cls(dim: usize, idx: &[usize]) -> CohClass {
        idx.iter().fold(CohClass::zero(dim), |acc, &i| acc + CohClass::basis(dim, i))
    }

    #[test]
    fn basis_dimensions() {
        assert_eq!(h1_basis(&GroupExpr::c2()).unwrap().dim(), 1);
        assert_eq!(h1_basis(&GroupExpr::infinite_dihedral()).unwrap().dim(), 2);
    }

    #[test]
    fn dihedral_form() {
        let (_, f) = form_of(&GroupExpr::infinite_dihedral());
        assert!(f.b(0, 0) && !f.b(0, 1) && f.b(1, 1) && !f.b(1, 0));
        assert!(!f.a(0, 0, 1) && !f.a(1, 0, 1));
        let (x1, x2) = (cls(2, &[0]), cls(2, &[1]));
        assert!(f.cup(&x1, &x2).unwrap().is_zero());
        assert_eq!(f.cup(&x1, &x1).unwrap(), H2Class(vec![true, false]));
        // chi = chi1 + chi2, psi = chi2
        let chi = x1 + x2;
        let psi = x2;
        assert_eq!(f.cup(&chi, &psi).unwrap(), H2Class(vec![false, true]));
        assert_eq!(f.cup(&psi, &psi).unwrap(), H2Class(vec![false, true]));
    }

    #[test]
    fn demushkin_case_i_extraction() {
        let (_, f) = form_of(&GroupExpr::demushkin(DemushkinCase::I, 2, TwoPower::Finite(2)));
        assert!(f.a(0, 0, 1));
        assert!(!f.b(0, 1));
        assert!(!f.b(0, 0));
    }

    #[test]
    fn semidirect_c2_extraction() {
        let (_, f) = form_of(&GroupExpr::semidirect(GroupExpr::c2()));
        assert!(f.b(0, 0));
        assert!(f.a(1, 0, 1) && f.b(1, 1));
        assert!(!f.b(1, 0));
        let omega = cls(2, &[0]);
        let psi = cls(2, &[1]);
        assert!(f.cup(&(omega + psi), &psi).unwrap().is_zero());
        assert!(!f.cup(&(omega + psi), &(omega + psi)).unwrap().is_zero());
    }

    #[test]
    fn cup_dimension_mismatch() {
        let (_, f) = form_of(&GroupExpr::c2());
        assert_eq!(
            f.cup(&CohClass::zero(2), &CohClass::zero(1)).unwrap_err(),
            CohomologyError::DimMismatch(2, 1)
        );
    }

    #[test]
    fn admissibility_examples() {
        let (_, f) = form_of(&GroupExpr::c2());
        let chi = cls(1, &[0]);
        let zero = CohClass::zero(1);
        assert!(is_massey_admissible(&f, &[chi, zero, chi]));
        assert!(!is_massey_admissible(&f, &[chi, chi, zero]));
        let (_, f) = form_of(&GroupExpr::infinite_dihedral());
        let chi = cls(2, &[0, 1]);
        let psi = cls(2, &[1]);
        assert!(is_massey_admissible(&f, &[chi + psi, psi, chi + psi]));
    }

    #[test]
    fn bockstein_examples() {
        let p = GroupExpr::c2().presentation().unwrap();
        assert!(!bockstein_lift_exists(&p, &cls(1, &[0])));
        assert!(bockstein_lift_exists(&p, &CohClass::zero(1)));
        let p = GroupExpr::free(vec![crate::groupexpr::OrientationValue::Minus1; 3]).presentation().unwrap();
        for bits in 0..8 {
            assert!(bockstein_lift_exists(&p, &CohClass::from_bits(3, bits)));
        }
        let p = GroupExpr::infinite_dihedral().presentation().unwrap();
        assert!(!bockstein_lift_exists(&p, &cls(2, &[0, 1])));
    }

    #[test]
    fn pair_shapes() {
        let expr = GroupExpr::semidirect(GroupExpr::c2());
        let roles = expr.generator_roles().unwrap();
        let (w, psi) = (cls(2, &[0]), cls(2, &[1]));
        assert_eq!(pair_shape(&roles, &w, &w), PairShape::Interior);
        assert_eq!(pair_shape(&roles, &(w + psi), &psi), PairShape::Alternating);
        assert_eq!(pair_shape(&roles, &(w + psi), &(w + psi)), PairShape::Other);
        assert_eq!(pair_shape(&roles, &w, &psi), PairShape::Other);
    }

    #[test]
    fn render_classes() {
        let reg = h1_basis(&GroupExpr::semidirect(GroupExpr::c2())).unwrap();
        assert_eq!(reg.render(&cls(2, &[0, 1])), "x1*+z*");
        assert_eq!(reg.render(&CohClass::zero(2)), "0");
    }

    #[test]
    fn restrict_and_extend() {
        let c = CohClass::from_bits(5, 0b10110);
        assert_eq!(c.restrict(1..4), CohClass::from_bits(3, 0b011));
        assert_eq!(c.restrict(1..4).extend(1, 5), CohClass::from_bits(5, 0b00110));
    }
}
