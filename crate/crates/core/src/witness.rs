//! Dwyer witnesses: homomorphisms `G -> U_{n+1}(F2)` whose superdiagonal
//! entries on each generator reproduce a prescribed sequence of classes.
//!
//! [`build_witness`] follows the recursive structure of an elementary-type
//! expression. Demushkin bricks with at least two generators, and
//! semidirect extensions whose inner group has no generator with
//! `theta = -1 mod 4`, are handed to the layered lifting solver
//! [`solve_by_lifting`]. Every witness is verified before it is returned.

use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::cohomology::{extract_cup_form, is_massey_admissible, pair_shape, CohClass, CohomologyError, CupForm, PairShape};
use crate::f2mat::{UniMatrix, MAX_DIM};
use crate::gf2::{AffineSystem, BitRow};
use crate::groupexpr::{signed_residue, ExprError, GeneratorRoles, GroupExpr, Presentation, Word};

/// Default node limit for the lifting solver.
pub const DEFAULT_LIFT_BUDGET: u64 = 1_000_000;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum WitnessError {
    #[error("no matrix assigned to generator {0}")]
    MissingAssignment(String),
    #[error("matrix for {name} has dimension {found}, expected {expected}")]
    DimMismatch { name: String, found: usize, expected: usize },
    #[error("sequence is not Massey-admissible: some consecutive cup product is non-zero")]
    Inadmissible,
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error("search budget of {0} nodes exceeded")]
    BudgetExceeded(u64),
    #[error("internal failure: {0}")]
    Internal(String),
    #[error(transparent)]
    Cohomology(#[from] CohomologyError),
    #[error(transparent)]
    Expr(#[from] ExprError),
}

/// Bits of 2-adic precision used when exponents act on U_{n+1}.
pub fn precision_bits(n: usize) -> u32 {
    let ceil_log2 = usize::BITS - (n + 1).leading_zeros(); // ceil(log2(n + 2))
    ceil_log2 + 2
}

/// A sequence `alpha_1, ..., alpha_n` of degree-1 classes, `n >= 2`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MasseySequence {
    classes: Vec<CohClass>,
}

impl MasseySequence {
    pub fn new(classes: Vec<CohClass>) -> Result<Self, WitnessError> {
        if classes.len() < 2 {
            return Err(WitnessError::Precondition(format!(
                "sequence length {} is below 2",
                classes.len()
            )));
        }
        let d = classes[0].dim();
        if classes.iter().any(|c| c.dim() != d) {
            return Err(WitnessError::Precondition("classes over different registries".into()));
        }
        if classes.len() + 1 > MAX_DIM {
            return Err(WitnessError::Precondition(format!("length {} too large", classes.len())));
        }
        Ok(MasseySequence { classes })
    }

    pub fn n(&self) -> usize {
        self.classes.len()
    }

    pub fn classes(&self) -> &[CohClass] {
        &self.classes
    }

    pub fn dim(&self) -> usize {
        self.classes[0].dim()
    }
}

/// Generator-indexed matrices, all of dimension `n + 1`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Witness {
    pub names: Vec<String>,
    pub matrices: Vec<UniMatrix>,
}

impl Witness {
    pub fn get(&self, name: &str) -> Option<&UniMatrix> {
        self.names.iter().position(|n| n == name).map(|i| &self.matrices[i])
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RelationFailure {
    pub relation: usize,
    pub value: UniMatrix,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SuperdiagonalFailure {
    pub generator: String,
    pub expected: Vec<bool>,
    pub actual: Vec<bool>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct WitnessReport {
    pub verified: bool,
    pub relation_failures: Vec<RelationFailure>,
    pub superdiagonal_failures: Vec<SuperdiagonalFailure>,
}

/// Value of a relation word under an assignment.
pub fn evaluate_word(word: &Word, matrices: &[UniMatrix], bits: u32) -> UniMatrix {
    let dim = matrices[0].dim();
    let mut acc = UniMatrix::identity(dim);
    for (g, e) in word.syllables(bits) {
        acc = acc.mul(&matrices[g].power(e));
    }
    acc
}

/// Checks that `w` kills every relation and carries the prescribed
/// superdiagonals.
pub fn verify_witness(pres: &Presentation, seq: &MasseySequence, w: &Witness) -> Result<WitnessReport, WitnessError> {
    let dim = seq.n() + 1;
    if seq.dim() != pres.generators.len() {
        return Err(WitnessError::Precondition(format!(
            "sequence over {} generators, presentation has {}",
            seq.dim(),
            pres.generators.len()
        )));
    }
    for (i, g) in pres.generators.iter().enumerate() {
        let Some(m) = w.matrices.get(i) else {
            return Err(WitnessError::MissingAssignment(g.name.clone()));
        };
        if m.dim() != dim {
            return Err(WitnessError::DimMismatch {
                name: g.name.clone(),
                found: m.dim(),
                expected: dim,
            });
        }
    }
    let bits = precision_bits(seq.n());
    let relation_failures: Vec<RelationFailure> = pres
        .relations
        .iter()
        .enumerate()
        .filter_map(|(l, word)| {
            let value = evaluate_word(word, &w.matrices, bits);
            (!value.is_identity()).then_some(RelationFailure { relation: l, value })
        })
        .collect();
    let superdiagonal_failures: Vec<SuperdiagonalFailure> = pres
        .generators
        .iter()
        .enumerate()
        .filter_map(|(g, gen)| {
            let expected = CohClass::column(seq.classes(), g);
            let actual = w.matrices[g].superdiagonal();
            (expected != actual).then(|| SuperdiagonalFailure {
                generator: gen.name.clone(),
                expected,
                actual,
            })
        })
        .collect();
    Ok(WitnessReport {
        verified: relation_failures.is_empty() && superdiagonal_failures.is_empty(),
        relation_failures,
        superdiagonal_failures,
    })
}

/// A matrix `C` in the third term of the central series with
/// `[C, A] = A^mu`, for `A` with all-ones superdiagonal and `mu = 0 mod 4`.
///
/// `[C, A] = A^mu` is equivalent to `C A = A^(mu+1) C`, which is linear in
/// the entries of `C`. Writing `C = I + X` gives `X A + A' X = A + A'` with
/// `A' = A^(mu+1)` and `X` supported on diagonals two and above. Free
/// variables are set to zero.
pub fn build_c_matrix(a: &UniMatrix, mu: i64) -> Result<UniMatrix, WitnessError> {
    if !a.superdiagonal().iter().all(|&b| b) {
        return Err(WitnessError::Precondition("A must have all-ones superdiagonal".into()));
    }
    if mu.rem_euclid(4) != 0 {
        return Err(WitnessError::Precondition(format!("mu = {mu} is not a multiple of 4")));
    }
    let dim = a.dim();
    let target = a.power(mu);
    if target.is_identity() {
        return Ok(UniMatrix::identity(dim));
    }
    let shifted = target.mul(a);
    // unknowns (p, q) with q >= p + 2; one equation per (i, j) with j > i
    let unknowns: Vec<(usize, usize)> = (0..dim).flat_map(|p| (p + 2..dim).map(move |q| (p, q))).collect();
    let eq_count = dim * (dim - 1) / 2;
    let eq = |i: usize, j: usize| eq_index(i, j, dim);
    let mut rows = vec![BitRow::zeros(unknowns.len()); eq_count];
    for (col, &(p, q)) in unknowns.iter().enumerate() {
        // (X A)_{p, j} gets X_{p,q} A_{q,j}
        for j in q..dim {
            if a.get(q, j) {
                rows[eq(p, j)].flip(col);
            }
        }
        // (A' X)_{i, q} gets A'_{i,p} X_{p,q}
        for i in 0..=p {
            if shifted.get(i, p) {
                rows[eq(i, q)].flip(col);
            }
        }
    }
    let mut system = AffineSystem::new(unknowns.len());
    for (i, row) in rows.into_iter().enumerate() {
        let (r, c) = eq_position(i, dim);
        system.push(row, a.get(r, c) ^ shifted.get(r, c));
    }
    let space = system
        .solve()
        .ok_or_else(|| WitnessError::Internal(format!("no C({mu}) exists for this A")))?;
    let mut c = UniMatrix::identity(dim);
    for (col, &(p, q)) in unknowns.iter().enumerate() {
        if space.particular.get(col) {
            c.set(p, q, true);
        }
    }
    if c.comm(a) != target || c.filtration_level().0 < 3.min(dim) {
        return Err(WitnessError::Internal(format!("C({mu}) failed post-verification")));
    }
    Ok(c)
}

/// Position of `(i, j)`, `j > i`, in row-major order of the strict upper triangle.
fn eq_index(i: usize, j: usize, dim: usize) -> usize {
    i * dim - i * (i + 1) / 2 + (j - i - 1)
}

fn eq_position(index: usize, dim: usize) -> (usize, usize) {
    let mut k = index;
    for i in 0..dim {
        let len = dim - i - 1;
        if k < len {
            return (i, i + 1 + k);
        }
        k -= len;
    }
    unreachable!("equation index out of range")
}

/// Matrices `A`, `B` in U_{n+1} with `B^2 = I`, `[B, A] = A^-2`, `A` carrying
/// an all-ones superdiagonal and `B` the pattern `(1,0,1,...)` (variant 1) or
/// `(0,1,0,...)` (variant 2).
///
/// Built from the witness of `C2 * C2 = <x1, x2 | x1^2, x2^2>` for the
/// alternating sequence: `x1` and `x2` go to complementary pure-superdiagonal
/// involutions, `B = rho(x1)` and `A = rho(x1 x2)`.
pub fn dihedral_pair(n: usize, variant: u8) -> Result<(UniMatrix, UniMatrix), WitnessError> {
    if n < 2 || n + 1 > MAX_DIM {
        return Err(WitnessError::Precondition(format!("n = {n} out of range")));
    }
    let first_odd = match variant {
        1 => true,
        2 => false,
        v => return Err(WitnessError::Precondition(format!("variant {v} is not 1 or 2"))),
    };
    let pattern: Vec<bool> = (0..n).map(|i| (i % 2 == 0) == first_odd).collect();
    let complement: Vec<bool> = pattern.iter().map(|b| !b).collect();
    let b = UniMatrix::from_superdiagonal(&pattern);
    let other = UniMatrix::from_superdiagonal(&complement);
    let a = b.mul(&other);
    Ok((a, b))
}

/// Position of a sequence relative to a semidirect root.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SemidirectCase {
    /// Every class vanishes on `z`.
    Interior,
    /// Every class is 1 on `z`; odd terms equal the base class and even terms
    /// equal base + `chi_0`.
    Alternating(CohClass),
    Inadmissible,
}

/// Decides which case of the semidirect construction applies to a sequence
/// of non-zero classes.
///
/// Admissibility is the caller's job; the decision reads only the shape of
/// consecutive pairs, so `form` is not consulted. On admissible input the
/// two shapes are exhaustive, and anything else is reported as
/// `Inadmissible`.
pub fn classify_semidirect_sequence(roles: &GeneratorRoles, _form: &CupForm, seq: &MasseySequence) -> SemidirectCase {
    let classes = seq.classes();
    if classes.iter().any(|c| c.is_zero()) {
        return SemidirectCase::Inadmissible;
    }
    let shapes: Vec<PairShape> = classes.windows(2).map(|w| pair_shape(roles, &w[0], &w[1])).collect();
    if shapes.iter().all(|&s| s == PairShape::Interior) {
        SemidirectCase::Interior
    } else if shapes.iter().all(|&s| s == PairShape::Alternating) {
        SemidirectCase::Alternating(classes[0])
    } else {
        SemidirectCase::Inadmissible
    }
}

/// Outcome of a search-based solver.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SearchOutcome {
    Found(Witness),
    /// The search space was exhausted without a witness.
    None,
    BudgetExceeded,
}

impl SearchOutcome {
    pub fn witness(self) -> Option<Witness> {
        match self {
            SearchOutcome::Found(w) => Some(w),
            _ => None,
        }
    }

    pub fn is_found(&self) -> bool {
        matches!(self, SearchOutcome::Found(_))
    }
}

struct Lifter<'a> {
    pres: &'a Presentation,
    dim: usize,
    bits: u32,
    mats: Vec<UniMatrix>,
    nodes: u64,
    budget: u64,
}

impl Lifter<'_> {
    fn relation_values(&self) -> Vec<UniMatrix> {
        self.pres
            .relations
            .iter()
            .map(|w| evaluate_word(w, &self.mats, self.bits))
            .collect()
    }

    fn diagonal_bits(values: &[UniMatrix], k: usize) -> Vec<bool> {
        values.iter().flat_map(|v| v.diagonal(k)).collect()
    }

    fn layer_unknowns(&self, k: usize) -> Vec<(usize, usize)> {
        (0..self.mats.len())
            .flat_map(|g| (0..self.dim - k).map(move |i| (g, i)))
            .collect()
    }

    /// Fills diagonal `k` of every generator so that diagonal `k + 1` of every
    /// relation vanishes, recursing to deeper layers. Layers above `k` are
    /// zero on entry and on a failed return.
    fn lift(&mut self, k: usize) -> Result<bool, ()> {
        if k + 1 >= self.dim {
            return Ok(true);
        }
        let unknowns = self.layer_unknowns(k);
        let base = Self::diagonal_bits(&self.relation_values(), k + 1);
        let mut columns = Vec::with_capacity(unknowns.len());
        for &(g, i) in &unknowns {
            self.mats[g].set(i, i + k, true);
            let probe = Self::diagonal_bits(&self.relation_values(), k + 1);
            self.mats[g].set(i, i + k, false);
            columns.push(probe.iter().zip(&base).map(|(a, b)| a ^ b).collect::<Vec<bool>>());
        }
        let mut system = AffineSystem::new(unknowns.len());
        for (eq, &rhs) in base.iter().enumerate() {
            let mut row = BitRow::zeros(unknowns.len());
            for (col, c) in columns.iter().enumerate() {
                if c[eq] {
                    row.set(col, true);
                }
            }
            system.push(row, rhs);
        }
        let Some(space) = system.solve() else {
            return Ok(false);
        };
        let mut choice: u128 = 0;
        while choice < space.count() {
            self.nodes += 1;
            if self.nodes > self.budget {
                return Err(());
            }
            let x = space.nth(choice);
            for (col, &(g, i)) in unknowns.iter().enumerate() {
                self.mats[g].set(i, i + k, x.get(col));
            }
            if self.lift(k + 1)? {
                return Ok(true);
            }
            choice += 1;
        }
        for &(g, i) in &unknowns {
            self.mats[g].set(i, i + k, false);
        }
        Ok(false)
    }
}

/// Layered search over the central series.
///
/// Superdiagonals are fixed by the sequence. Because every relation has even
/// exponent sums, the entries on diagonal `k` do not move diagonal `k` of any
/// relation value and act affinely on diagonal `k + 1`; each layer is
/// therefore an F2 linear system. Solutions are tried in binary-counter
/// order of the free variables (all zero first), backtracking into earlier
/// layers on inconsistency. Returns only verified witnesses.
pub fn solve_by_lifting(pres: &Presentation, seq: &MasseySequence, budget: u64) -> SearchOutcome {
    let n = seq.n();
    let dim = n + 1;
    let mats: Vec<UniMatrix> = (0..pres.generators.len())
        .map(|g| UniMatrix::from_superdiagonal(&CohClass::column(seq.classes(), g)))
        .collect();
    let mut lifter = Lifter {
        pres,
        dim,
        bits: precision_bits(n),
        mats,
        nodes: 0,
        budget,
    };
    if pres.generators.is_empty() {
        return SearchOutcome::Found(Witness {
            names: vec![],
            matrices: vec![],
        });
    }
    let values = lifter.relation_values();
    if Lifter::diagonal_bits(&values, 1).iter().any(|&b| b) || Lifter::diagonal_bits(&values, 2).iter().any(|&b| b) {
        return SearchOutcome::None;
    }
    match lifter.lift(2) {
        Ok(true) => {
            let w = Witness {
                names: pres.names(),
                matrices: lifter.mats,
            };
            match verify_witness(pres, seq, &w) {
                Ok(r) if r.verified => SearchOutcome::Found(w),
                _ => SearchOutcome::None,
            }
        }
        Ok(false) => SearchOutcome::None,
        Err(()) => SearchOutcome::BudgetExceeded,
    }
}

/// Limits for [`brute_force_search`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct BruteForceBudget {
    pub max_nodes: u64,
    pub max_dim: usize,
    pub max_generators: usize,
}

impl Default for BruteForceBudget {
    fn default() -> Self {
        BruteForceBudget {
            max_nodes: 1 << 22,
            max_dim: 5,
            max_generators: 3,
        }
    }
}

/// Exhaustive enumeration of every completion of the prescribed
/// superdiagonals, in binary-counter order over the free entries.
pub fn brute_force_search(pres: &Presentation, seq: &MasseySequence, budget: BruteForceBudget) -> SearchOutcome {
    let n = seq.n();
    let dim = n + 1;
    let gens = pres.generators.len();
    if dim > budget.max_dim || gens > budget.max_generators {
        return SearchOutcome::BudgetExceeded;
    }
    let base: Vec<UniMatrix> = (0..gens)
        .map(|g| UniMatrix::from_superdiagonal(&CohClass::column(seq.classes(), g)))
        .collect();
    let slots: Vec<(usize, usize, usize)> = (0..gens)
        .flat_map(|g| (0..dim).flat_map(move |i| (i + 2..dim).map(move |j| (g, i, j))))
        .collect();
    if slots.len() >= 63 || (1u64 << slots.len()) > budget.max_nodes {
        return SearchOutcome::BudgetExceeded;
    }
    let bits = precision_bits(n);
    let mut mats = base;
    for counter in 0u64..(1u64 << slots.len()) {
        for (s, &(g, i, j)) in slots.iter().enumerate() {
            mats[g].set(i, j, (counter >> s) & 1 == 1);
        }
        let ok = pres
            .relations
            .iter()
            .all(|w| evaluate_word(w, &mats, bits).is_identity());
        if ok {
            return SearchOutcome::Found(Witness {
                names: pres.names(),
                matrices: mats,
            });
        }
    }
    SearchOutcome::None
}

/// How the parts of a witness were obtained.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Provenance {
    /// Pieces assigned by explicit construction.
    pub constructive: u32,
    /// Demushkin bricks and length-2 runs solved by lifting.
    pub searched: u32,
    /// Semidirect nodes without a u-generator solved by lifting.
    pub fallback: u32,
}

impl Provenance {
    fn absorb(&mut self, other: Provenance) {
        self.constructive += other.constructive;
        self.searched += other.searched;
        self.fallback += other.fallback;
    }

    pub fn path(&self) -> &'static str {
        if self.fallback > 0 {
            "fallback"
        } else if self.searched > 0 {
            "searched"
        } else {
            "constructive"
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BuiltWitness {
    pub witness: Witness,
    pub provenance: Provenance,
}

struct Builder {
    budget: u64,
    provenance: Provenance,
}

impl Builder {
    fn identities(count: usize, dim: usize) -> Vec<UniMatrix> {
        vec![UniMatrix::identity(dim); count]
    }

    fn lift(&mut self, expr: &GroupExpr, seq: &[CohClass]) -> Result<Vec<UniMatrix>, WitnessError> {
        let pres = expr.presentation()?;
        let seq = MasseySequence::new(seq.to_vec())?;
        match solve_by_lifting(&pres, &seq, self.budget) {
            SearchOutcome::Found(w) => Ok(w.matrices),
            SearchOutcome::None => Err(WitnessError::Internal(format!("lifting found no witness for {expr}"))),
            SearchOutcome::BudgetExceeded => Err(WitnessError::BudgetExceeded(self.budget)),
        }
    }

    fn build(&mut self, expr: &GroupExpr, seq: &[CohClass]) -> Result<Vec<UniMatrix>, WitnessError> {
        let count = expr.generator_count();
        let n = seq.len();
        let dim = n + 1;
        if seq.iter().all(|c| c.is_zero()) {
            return Ok(Self::identities(count, dim));
        }
        if seq.iter().any(|c| c.is_zero()) {
            return self.split_at_zeros(expr, seq);
        }
        match expr {
            GroupExpr::Free { .. } => {
                self.provenance.constructive += 1;
                Ok((0..count)
                    .map(|g| UniMatrix::from_superdiagonal(&CohClass::column(seq, g)))
                    .collect())
            }
            GroupExpr::Demushkin { d: 1, .. } => {
                // only the all-chi sequence reaches here, and it is inadmissible for n >= 2
                self.provenance.constructive += 1;
                Ok(vec![UniMatrix::from_superdiagonal(&CohClass::column(seq, 0))])
            }
            GroupExpr::Demushkin { .. } => {
                self.provenance.searched += 1;
                self.lift(expr, seq)
            }
            GroupExpr::FreeProduct(a, b) => {
                let ca = a.generator_count();
                let cb = b.generator_count();
                let left: Vec<CohClass> = seq.iter().map(|c| c.restrict(0..ca)).collect();
                let right: Vec<CohClass> = seq.iter().map(|c| c.restrict(ca..ca + cb)).collect();
                let mut out = if ca > 0 { self.build(a, &left)? } else { vec![] };
                if cb > 0 {
                    out.extend(self.build(b, &right)?);
                }
                Ok(out)
            }
            GroupExpr::Semidirect(inner) => self.semidirect(expr, inner, seq),
        }
    }

    /// Assembles block-diagonal witnesses for the maximal runs of non-zero
    /// classes. A zero at position `p` lets the matrix split into blocks on
    /// indices `..=p` and `p+1..`; the block matrices form a subgroup
    /// isomorphic to the product of the smaller unitriangular groups.
    fn split_at_zeros(&mut self, expr: &GroupExpr, seq: &[CohClass]) -> Result<Vec<UniMatrix>, WitnessError> {
        let count = expr.generator_count();
        let dim = seq.len() + 1;
        let mut out = Self::identities(count, dim);
        let mut i = 0;
        while i < seq.len() {
            if seq[i].is_zero() {
                i += 1;
                continue;
            }
            let start = i;
            while i < seq.len() && !seq[i].is_zero() {
                i += 1;
            }
            let run = &seq[start..i];
            let blocks = match run.len() {
                1 => {
                    self.provenance.constructive += 1;
                    (0..count)
                        .map(|g| UniMatrix::from_superdiagonal(&[run[0].get(g)]))
                        .collect()
                }
                2 => {
                    self.provenance.searched += 1;
                    self.lift(expr, run)?
                }
                _ => self.build(expr, run)?,
            };
            for (m, block) in out.iter_mut().zip(&blocks) {
                m.embed(block, start);
            }
        }
        Ok(out)
    }

    fn semidirect(&mut self, expr: &GroupExpr, inner: &GroupExpr, seq: &[CohClass]) -> Result<Vec<UniMatrix>, WitnessError> {
        let pres = expr.presentation()?;
        let form = extract_cup_form(&pres)?;
        let roles = expr.generator_roles()?;
        let mseq = MasseySequence::new(seq.to_vec())?;
        let inner_count = inner.generator_count();
        let dim = seq.len() + 1;
        match classify_semidirect_sequence(&roles, &form, &mseq) {
            SemidirectCase::Inadmissible => Err(WitnessError::Inadmissible),
            SemidirectCase::Interior => {
                let restricted: Vec<CohClass> = seq.iter().map(|c| c.restrict(0..inner_count)).collect();
                let mut out = self.build(inner, &restricted)?;
                out.push(UniMatrix::identity(dim));
                Ok(out)
            }
            SemidirectCase::Alternating(base) => {
                if roles.u.is_empty() {
                    self.provenance.fallback += 1;
                    return self.lift(expr, seq);
                }
                self.provenance.constructive += 1;
                alternating_assignment(&pres, &roles, seq, base)
            }
        }
    }
}

/// The explicit assignment for an alternating sequence over `Z x| G_0`:
/// `z -> A`; u-generators to `B C(mu)` or `A B C(mu)` with
/// `mu = -(1 + theta(u))`; v-generators to `C(mu)` or `A C(mu)` with
/// `mu = theta(v) - 1`. The `A`-shifted variant is used exactly when the
/// unshifted superdiagonal does not match the prescribed one.
fn alternating_assignment(
    pres: &Presentation,
    roles: &GeneratorRoles,
    seq: &[CohClass],
    base: CohClass,
) -> Result<Vec<UniMatrix>, WitnessError> {
    let n = seq.len();
    let bits = precision_bits(n);
    let u1 = roles.u[0];
    let variant = if base.get(u1) { 1 } else { 2 };
    let (a, b) = dihedral_pair(n, variant)?;
    let ab = a.mul(&b);
    let z = roles.z.expect("semidirect roles carry z");
    let mut out = vec![UniMatrix::identity(n + 1); pres.generators.len()];
    out[z] = a.clone();
    let pick = |g: usize, plain: UniMatrix, shifted: UniMatrix| -> Result<UniMatrix, WitnessError> {
        let want = CohClass::column(seq, g);
        if plain.superdiagonal() == want {
            Ok(plain)
        } else if shifted.superdiagonal() == want {
            Ok(shifted)
        } else {
            Err(WitnessError::Internal(format!(
                "no admissible superdiagonal for {}",
                pres.generators[g].name
            )))
        }
    };
    for &u in &roles.u {
        let theta = pres.generators[u].theta.truncate(bits);
        let mu = signed_residue(0u64.wrapping_sub(1u64.wrapping_add(theta)), bits);
        let c = build_c_matrix(&a, mu)?;
        out[u] = pick(u, b.mul(&c), ab.mul(&c))?;
    }
    for &v in &roles.v {
        let mu = -pres.generators[v].theta.one_minus(bits);
        let c = build_c_matrix(&a, mu)?;
        out[v] = pick(v, c.clone(), a.mul(&c))?;
    }
    Ok(out)
}

/// Builds a verified witness for an admissible sequence over `expr`.
pub fn build_witness(expr: &GroupExpr, seq: &MasseySequence) -> Result<BuiltWitness, WitnessError> {
    build_witness_with_budget(expr, seq, DEFAULT_LIFT_BUDGET)
}

pub fn build_witness_with_budget(expr: &GroupExpr, seq: &MasseySequence, budget: u64) -> Result<BuiltWitness, WitnessError> {
    let pres = expr.presentation()?;
    if seq.dim() != pres.generators.len() {
        return Err(WitnessError::Precondition(format!(
            "sequence over {} generators, group has {}",
            seq.dim(),
            pres.generators.len()
        )));
    }
    let form = extract_cup_form(&pres)?;
    if !is_massey_admissible(&form, seq.classes()) {
        return Err(WitnessError::Inadmissible);
    }
    let mut builder = Builder {
        budget,
        provenance: Provenance::default(),
    };
    let matrices = builder.build(expr, seq.classes())?;
    let witness = Witness {
        names: pres.names(),
        matrices,
    };
    let report = verify_witness(&pres, seq, &witness)?;
    if !report.verified {
        return Err(WitnessError::Internal(format!(
            "post-verification failed: {} relation and {} superdiagonal failures",
            report.relation_failures.len(),
            report.superdiagonal_failures.len()
        )));
    }
    let mut provenance = Provenance::default();
    provenance.absorb(builder.provenance);
    Ok(BuiltWitness { witness, provenance })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum AuditMode {
    Exhaustive,
    Sampled { count: usize, seed: u64 },
}

/// Largest number of sequences an exhaustive audit will enumerate.
pub const EXHAUSTIVE_LIMIT: u128 = 5_000_000;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AuditFailure {
    pub index: usize,
    pub sequence: Vec<String>,
    pub error: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AuditReport {
    pub group: String,
    pub n: usize,
    pub mode: AuditMode,
    /// Sequences of non-zero classes examined.
    pub examined: u64,
    pub admissible: u64,
    pub verified: u64,
    pub constructive: u64,
    pub searched: u64,
    pub fallback: u64,
    pub failures: Vec<AuditFailure>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub elapsed_ms: Option<u64>,
}

impl AuditReport {
    pub fn passed(&self) -> bool {
        self.failures.is_empty() && self.verified == self.admissible
    }
}

/// Checks strong n-fold vanishing at desk scale: every admissible sequence
/// of non-zero classes (all of them, or a seeded sample) must yield a
/// verified witness.
///
/// Sampling draws `alpha_1` uniformly among non-zero classes and each next
/// term uniformly among non-zero classes whose cup product with the previous
/// term vanishes, restarting on dead ends.
pub fn strong_massey_audit(expr: &GroupExpr, n: usize, mode: AuditMode) -> Result<AuditReport, WitnessError> {
    let started = Instant::now();
    let pres = expr.presentation()?;
    let form = extract_cup_form(&pres)?;
    let d = pres.generators.len();
    if n < 2 {
        return Err(WitnessError::Precondition("n must be at least 2".into()));
    }
    if d == 0 {
        return Ok(AuditReport {
            group: expr.to_string(),
            n,
            mode,
            examined: 0,
            admissible: 0,
            verified: 0,
            constructive: 0,
            searched: 0,
            fallback: 0,
            failures: vec![],
            elapsed_ms: Some(started.elapsed().as_millis() as u64),
        });
    }
    let (examined, sequences) = match mode {
        AuditMode::Exhaustive => exhaustive_sequences(&form, d, n)?,
        AuditMode::Sampled { count, seed } => sampled_sequences(&form, d, n, count, seed)?,
    };
    let outcomes = run_all(expr, &sequences);
    let names = pres.names();
    let mut report = AuditReport {
        group: expr.to_string(),
        n,
        mode,
        examined,
        admissible: sequences.len() as u64,
        verified: 0,
        constructive: 0,
        searched: 0,
        fallback: 0,
        failures: vec![],
        elapsed_ms: None,
    };
    let registry = crate::cohomology::BasisRegistry::new(names);
    for (index, (seq, outcome)) in sequences.iter().zip(outcomes).enumerate() {
        match outcome {
            Ok(built) => {
                report.verified += 1;
                match built.provenance.path() {
                    "fallback" => report.fallback += 1,
                    "searched" => report.searched += 1,
                    _ => report.constructive += 1,
                }
            }
            Err(e) => report.failures.push(AuditFailure {
                index,
                sequence: seq.iter().map(|c| registry.render(c)).collect(),
                error: e.to_string(),
            }),
        }
    }
    report.elapsed_ms = Some(started.elapsed().as_millis() as u64);
    Ok(report)
}

fn run_one(expr: &GroupExpr, seq: &[CohClass]) -> Result<BuiltWitness, WitnessError> {
    let mseq = MasseySequence::new(seq.to_vec())?;
    build_witness(expr, &mseq)
}

#[cfg(feature = "parallel")]
fn run_all(expr: &GroupExpr, sequences: &[Vec<CohClass>]) -> Vec<Result<BuiltWitness, WitnessError>> {
    use rayon::prelude::*;
    sequences.par_iter().map(|s| run_one(expr, s)).collect()
}

#[cfg(not(feature = "parallel"))]
fn run_all(expr: &GroupExpr, sequences: &[Vec<CohClass>]) -> Vec<Result<BuiltWitness, WitnessError>> {
    sequences.iter().map(|s| run_one(expr, s)).collect()
}

fn exhaustive_sequences(form: &CupForm, d: usize, n: usize) -> Result<(u64, Vec<Vec<CohClass>>), WitnessError> {
    let classes = (1u64 << d) - 1;
    let total = (classes as u128).checked_pow(n as u32).unwrap_or(u128::MAX);
    if d >= 24 || total > EXHAUSTIVE_LIMIT {
        return Err(WitnessError::Precondition(format!(
            "exhaustive audit over {total} sequences exceeds the limit of {EXHAUSTIVE_LIMIT}"
        )));
    }
    let all: Vec<CohClass> = (1..=classes).map(|b| CohClass::from_bits(d, b)).collect();
    // depth-first over admissible prefixes, in lexicographic order
    let mut out = Vec::new();
    let mut prefix = Vec::with_capacity(n);
    extend_admissible(form, &all, n, &mut prefix, &mut out);
    Ok((total as u64, out))
}

fn extend_admissible(form: &CupForm, all: &[CohClass], n: usize, prefix: &mut Vec<CohClass>, out: &mut Vec<Vec<CohClass>>) {
    if prefix.len() == n {
        out.push(prefix.clone());
        return;
    }
    for &c in all {
        if let Some(last) = prefix.last() {
            if !form.cup_vanishes(last, &c) {
                continue;
            }
        }
        prefix.push(c);
        extend_admissible(form, all, n, prefix, out);
        prefix.pop();
    }
}

fn sampled_sequences(
    form: &CupForm,
    d: usize,
    n: usize,
    count: usize,
    seed: u64,
) -> Result<(u64, Vec<Vec<CohClass>>), WitnessError> {
    if d > 20 {
        return Err(WitnessError::Precondition(format!("sampling supports at most 20 generators, got {d}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let all: Vec<CohClass> = (1..(1u64 << d)).map(|b| CohClass::from_bits(d, b)).collect();
    let successors: Vec<Vec<CohClass>> = all
        .iter()
        .map(|a| all.iter().copied().filter(|b| form.cup_vanishes(a, b)).collect())
        .collect();
    let mut out = Vec::with_capacity(count);
    let mut attempts = 0usize;
    while out.len() < count {
        attempts += 1;
        if attempts > count * 50 + 1000 {
            break;
        }
        let mut seq = vec![all[rng.gen_range(0..all.len())]];
        while seq.len() < n {
            let last = seq[seq.len() - 1];
            let next = &successors[(last.bits() - 1) as usize];
            if next.is_empty() {
                break;
            }
            seq.push(next[rng.gen_range(0..next.len())]);
        }
        if seq.len() == n {
            out.push(seq);
        }
    }
    Ok((attempts as u64, out))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::groupexpr::{DemushkinCase, TwoPower};

    fn e(dim: usize, entries: &[(usize, usize)]) -> UniMatrix {
        UniMatrix::from_elementary(dim, entries)
    }

    fn seq_of(dim: usize, items: &[&[usize]]) -> MasseySequence {
        MasseySequence::new(
            items
                .iter()
                .map(|idx| idx.iter().fold(CohClass::zero(dim), |a, &i| a + CohClass::basis(dim, i)))
                .collect(),
        )
        .unwrap()
    }

    #[test]
    fn precision_grows_with_n() {
        assert_eq!(precision_bits(2), 4);
        assert_eq!(precision_bits(3), 5);
        assert_eq!(precision_bits(6), 5);
        assert_eq!(precision_bits(7), 6);
    }

    #[test]
    fn verify_dihedral_witness() {
        let pres = GroupExpr::infinite_dihedral().presentation().unwrap();
        // alternating sequence chi1, chi2, chi1 in x1/x2 coordinates
        let seq = seq_of(2, &[&[0], &[1], &[0]]);
        let good = Witness {
            names: pres.names(),
            matrices: vec![e(4, &[(1, 2), (3, 4)]), e(4, &[(2, 3)])],
        };
        assert!(verify_witness(&pres, &seq, &good).unwrap().verified);
        let bad = Witness {
            names: pres.names(),
            matrices: vec![e(4, &[(1, 2), (3, 4)]), e(4, &[(2, 3), (1, 2)])],
        };
        let report = verify_witness(&pres, &seq, &bad).unwrap();
        assert!(!report.verified);
        assert_eq!(report.relation_failures.len(), 1);
        assert_eq!(report.relation_failures[0].relation, 1);
        assert!(report.relation_failures[0].value.get(0, 2));
    }

    #[test]
    fn verify_identity_for_zero_sequence() {
        let expr = GroupExpr::semidirect(GroupExpr::c2());
        let pres = expr.presentation().unwrap();
        let seq = seq_of(2, &[&[], &[], &[]]);
        let w = Witness {
            names: pres.names(),
            matrices: vec![UniMatrix::identity(4); 2],
        };
        assert!(verify_witness(&pres, &seq, &w).unwrap().verified);
        let short = Witness {
            names: pres.names(),
            matrices: vec![UniMatrix::identity(4)],
        };
        assert_eq!(
            verify_witness(&pres, &seq, &short).unwrap_err(),
            WitnessError::MissingAssignment("z".into())
        );
    }

    #[test]
    fn c_matrix_examples() {
        let a3 = UniMatrix::from_superdiagonal(&[true; 3]);
        assert!(a3.power(4).is_identity());
        assert!(build_c_matrix(&a3, 4).unwrap().is_identity());
        let a4 = UniMatrix::from_superdiagonal(&[true; 4]);
        assert_eq!(a4.power(4), e(5, &[(1, 5)]));
        // the documented answer also satisfies the identity
        assert_eq!(e(5, &[(1, 4)]).comm(&a4), e(5, &[(1, 5)]));
        for mu in [4, -4] {
            let c = build_c_matrix(&a4, mu).unwrap();
            assert_eq!(c.comm(&a4), e(5, &[(1, 5)]));
            assert!(c.filtration_level().0 >= 3);
        }
        assert!(build_c_matrix(&a4, 2).is_err());
        assert!(build_c_matrix(&UniMatrix::identity(5), 4).is_err());
    }

    #[test]
    fn dihedral_examples() {
        let (a, b) = dihedral_pair(3, 1).unwrap();
        assert_eq!(b, e(4, &[(1, 2), (3, 4)]));
        assert_eq!(a, e(4, &[(1, 2), (2, 3), (3, 4), (1, 3)]));
        let (a2, b2) = dihedral_pair(3, 2).unwrap();
        assert_eq!(b2, e(4, &[(2, 3)]));
        assert_eq!(a2.superdiagonal(), vec![true; 3]);
        for (a, b) in [(a, b), (a2, b2)] {
            assert!(b.mul(&b).is_identity());
            assert_eq!(b.comm(&a), a.power(-2));
        }
        assert!(dihedral_pair(1, 1).is_err());
        assert!(dihedral_pair(4, 3).is_err());
    }

    #[test]
    fn classify_examples() {
        let expr = GroupExpr::semidirect(GroupExpr::c2());
        let pres = expr.presentation().unwrap();
        let form = extract_cup_form(&pres).unwrap();
        let roles = expr.generator_roles().unwrap();
        // (w1, w1, w1) is not admissible, but its shape is interior
        let interior = seq_of(2, &[&[0], &[0], &[0]]);
        assert_eq!(classify_semidirect_sequence(&roles, &form, &interior), SemidirectCase::Interior);
        let alt = seq_of(2, &[&[0, 1], &[1], &[0, 1]]);
        assert_eq!(
            classify_semidirect_sequence(&roles, &form, &alt),
            SemidirectCase::Alternating(CohClass::from_bits(2, 0b11))
        );
        let bad = seq_of(2, &[&[0, 1], &[0, 1], &[0, 1]]);
        assert_eq!(classify_semidirect_sequence(&roles, &form, &bad), SemidirectCase::Inadmissible);
    }

    #[test]
    fn classify_interior_on_free_inner() {
        let expr = GroupExpr::semidirect(GroupExpr::free(vec![crate::groupexpr::OrientationValue::Minus1]));
        let pres = expr.presentation().unwrap();
        let form = extract_cup_form(&pres).unwrap();
        let roles = expr.generator_roles().unwrap();
        let seq = seq_of(2, &[&[0], &[0], &[0]]);
        assert_eq!(classify_semidirect_sequence(&roles, &form, &seq), SemidirectCase::Interior);
    }

    #[test]
    fn lifting_examples() {
        let pres = GroupExpr::demushkin(DemushkinCase::IV, 3, TwoPower::Infinite).presentation().unwrap();
        let seq = seq_of(3, &[&[0], &[1], &[0]]);
        let w = solve_by_lifting(&pres, &seq, DEFAULT_LIFT_BUDGET).witness().unwrap();
        assert!(verify_witness(&pres, &seq, &w).unwrap().verified);

        let pres = GroupExpr::free(vec![crate::groupexpr::OrientationValue::Plus1; 2]).presentation().unwrap();
        let seq = seq_of(2, &[&[0, 1], &[1], &[0]]);
        let w = solve_by_lifting(&pres, &seq, DEFAULT_LIFT_BUDGET).witness().unwrap();
        for (g, m) in w.matrices.iter().enumerate() {
            assert_eq!(*m, UniMatrix::from_superdiagonal(&CohClass::column(seq.classes(), g)));
        }

        let pres = GroupExpr::c2().presentation().unwrap();
        let seq = seq_of(1, &[&[0], &[0]]);
        assert_eq!(solve_by_lifting(&pres, &seq, DEFAULT_LIFT_BUDGET), SearchOutcome::None);
    }

    #[test]
    fn brute_force_examples() {
        let pres = GroupExpr::c2().presentation().unwrap();
        let budget = BruteForceBudget::default();
        assert_eq!(brute_force_search(&pres, &seq_of(1, &[&[0], &[0], &[]]), budget), SearchOutcome::None);
        let w = brute_force_search(&pres, &seq_of(1, &[&[0], &[], &[0]]), budget).witness().unwrap();
        assert_eq!(w.matrices[0].superdiagonal(), vec![true, false, true]);
        assert!(w.matrices[0].mul(&w.matrices[0]).is_identity());

        let pres = GroupExpr::infinite_dihedral().presentation().unwrap();
        let seq = seq_of(2, &[&[0], &[1], &[0]]);
        let w = brute_force_search(&pres, &seq, budget).witness().unwrap();
        let (_, b) = dihedral_pair(3, 1).unwrap();
        assert_eq!(w.matrices[0].superdiagonal(), b.superdiagonal());
    }

    #[test]
    fn build_witness_examples() {
        let built = build_witness(&GroupExpr::c2(), &seq_of(1, &[&[0], &[], &[0]])).unwrap();
        assert_eq!(built.witness.matrices[0], e(4, &[(1, 2), (3, 4)]));

        let expr = GroupExpr::semidirect(GroupExpr::c2());
        let seq = seq_of(2, &[&[0, 1], &[1], &[0, 1]]);
        let built = build_witness(&expr, &seq).unwrap();
        let (a1, b1) = dihedral_pair(3, 1).unwrap();
        assert_eq!(built.witness.get("z"), Some(&a1));
        assert_eq!(built.witness.get("x1"), Some(&b1));
        assert_eq!(built.provenance.path(), "constructive");

        assert_eq!(
            build_witness(&GroupExpr::c2(), &seq_of(1, &[&[0], &[0], &[0]])).unwrap_err(),
            WitnessError::Inadmissible
        );
    }

    #[test]
    fn fallback_is_reported() {
        // no u-generator inside, so alternating sequences go to the solver
        let expr = GroupExpr::semidirect(GroupExpr::free(vec![crate::groupexpr::OrientationValue::Plus1]));
        let seq = seq_of(2, &[&[1], &[1], &[1]]);
        let built = build_witness(&expr, &seq).unwrap();
        assert_eq!(built.provenance.fallback, 1);
        assert_eq!(built.provenance.path(), "fallback");
    }

    #[test]
    fn audit_small_groups() {
        let report = strong_massey_audit(&GroupExpr::c2(), 3, AuditMode::Exhaustive).unwrap();
        assert_eq!((report.examined, report.admissible), (1, 0));
        assert!(report.passed());
        let report = strong_massey_audit(&GroupExpr::infinite_dihedral(), 3, AuditMode::Exhaustive).unwrap();
        assert_eq!(report.examined, 27);
        assert!(report.admissible > 0 && report.passed(), "{report:?}");
    }

    #[test]
    fn eq_position_enumerates_upper_triangle() {
        let dim = 5;
        let mut k = 0;
        for i in 0..dim {
            for j in i + 1..dim {
                assert_eq!(eq_position(k, dim), (i, j));
                assert_eq!(eq_index(i, j, dim), k);
                k += 1;
            }
        }
    }
}
