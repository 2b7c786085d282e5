//! Oriented pro-2 groups of elementary type: expression trees, their
//! canonical generators and minimal presentations.
//!
//! Every relation produced here is a product of factors of two shapes:
//! `u^2` with `theta(u) = -1`, and `[y, v] v^(1 - theta(y))` with
//! `theta(v) = 1`. Cup products and the witness constructions both rely on
//! this normal form.

use std::fmt;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Maximum number of canonical generators an expression may carry (classes
/// are packed into one `u64`).
pub const MAX_GENERATORS: usize = 64;

/// The exponent `f` in `1 + 2^f`, with `f = inf` meaning `2^f = 0`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum TwoPower {
    Finite(u32),
    Infinite,
}

impl TwoPower {
    /// `2^f mod 2^bits`.
    pub fn residue(self, bits: u32) -> u64 {
        match self {
            TwoPower::Finite(f) if f < bits => 1u64 << f,
            _ => 0,
        }
    }

    pub fn is_valid(self) -> bool {
        match self {
            TwoPower::Finite(f) => f >= 2,
            TwoPower::Infinite => true,
        }
    }
}

impl fmt::Display for TwoPower {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TwoPower::Finite(v) => write!(f, "{v}"),
            TwoPower::Infinite => f.write_str("inf"),
        }
    }
}

/// A 2-adic unit kept in symbolic form; precision is only committed when
/// [`OrientationValue::truncate`] is called.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum OrientationValue {
    Plus1,
    Minus1,
    OnePlus(TwoPower),
    MinusOnePlus(TwoPower),
    /// The unit whose residue mod `2^bits` is `value`; higher bits are read
    /// as those of the representative `value` itself.
    Residue { value: u64, bits: u32 },
}

/// The class of a unit modulo 4.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Mod4 {
    One,
    MinusOne,
}

fn mask(bits: u32) -> u64 {
    if bits >= 64 {
        u64::MAX
    } else {
        (1u64 << bits) - 1
    }
}

impl OrientationValue {
    /// Residue modulo `2^bits` (`bits <= 63`); always odd for valid values.
    pub fn truncate(self, bits: u32) -> u64 {
        let m = mask(bits);
        match self {
            OrientationValue::Plus1 => 1 & m,
            OrientationValue::Minus1 => m,
            OrientationValue::OnePlus(f) => (1 + f.residue(bits)) & m,
            OrientationValue::MinusOnePlus(f) => m.wrapping_add(f.residue(bits)) & m,
            OrientationValue::Residue { value, .. } => value & m,
        }
    }

    pub fn mod4(self) -> Mod4 {
        if self.truncate(2) == 1 {
            Mod4::One
        } else {
            Mod4::MinusOne
        }
    }

    /// Symbolically equal to 1 (no truncation involved).
    pub fn is_one(self) -> bool {
        matches!(
            self,
            OrientationValue::Plus1 | OrientationValue::OnePlus(TwoPower::Infinite)
        )
    }

    pub fn is_minus_one(self) -> bool {
        matches!(
            self,
            OrientationValue::Minus1 | OrientationValue::MinusOnePlus(TwoPower::Infinite)
        )
    }

    /// `1 - theta`, reduced mod `2^bits` to the representative in
    /// `(-2^(bits-1), 2^(bits-1)]`.
    pub fn one_minus(self, bits: u32) -> i64 {
        signed_residue(1u64.wrapping_sub(self.truncate(bits)), bits)
    }

    /// `1 - theta` as an exact integer when the value is symbolic and small.
    pub fn one_minus_exact(self) -> Option<i64> {
        let pow = |f: TwoPower| match f {
            TwoPower::Finite(f) if f < 62 => Some(1i64 << f),
            TwoPower::Finite(_) => None,
            TwoPower::Infinite => Some(0),
        };
        match self {
            OrientationValue::Plus1 => Some(0),
            OrientationValue::Minus1 => Some(2),
            OrientationValue::OnePlus(f) => pow(f).map(|p| -p),
            OrientationValue::MinusOnePlus(f) => pow(f).map(|p| 2 - p),
            OrientationValue::Residue { .. } => None,
        }
    }

    fn check(self) -> Result<(), String> {
        match self {
            OrientationValue::OnePlus(f) | OrientationValue::MinusOnePlus(f) if !f.is_valid() => {
                Err(format!("exponent f = {f} must be at least 2"))
            }
            OrientationValue::Residue { value, bits } => {
                if !(2..=62).contains(&bits) {
                    Err(format!("residue precision {bits} outside 2..=62"))
                } else if value & 1 == 0 {
                    Err(format!("residue {value} is not a unit"))
                } else if value > mask(bits) {
                    Err(format!("residue {value} exceeds 2^{bits}"))
                } else {
                    Ok(())
                }
            }
            _ => Ok(()),
        }
    }
}

/// Representative of `x mod 2^bits` in `(-2^(bits-1), 2^(bits-1)]`.
pub fn signed_residue(x: u64, bits: u32) -> i64 {
    let m = mask(bits);
    let x = x & m;
    let half = 1u64 << (bits - 1);
    if x > half {
        -((m - x + 1) as i64)
    } else {
        x as i64
    }
}

impl fmt::Display for OrientationValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            OrientationValue::Plus1 => f.write_str("1"),
            OrientationValue::Minus1 => f.write_str("-1"),
            OrientationValue::OnePlus(p) => write!(f, "1+2^{p}"),
            OrientationValue::MinusOnePlus(p) => write!(f, "-1+2^{p}"),
            OrientationValue::Residue { value, bits } => write!(f, "res:{value}/{bits}"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum DemushkinCase {
    I,
    II,
    III,
    IV,
}

impl DemushkinCase {
    pub fn number(self) -> u8 {
        match self {
            DemushkinCase::I => 1,
            DemushkinCase::II => 2,
            DemushkinCase::III => 3,
            DemushkinCase::IV => 4,
        }
    }

    pub fn from_number(n: u64) -> Option<Self> {
        match n {
            1 => Some(DemushkinCase::I),
            2 => Some(DemushkinCase::II),
            3 => Some(DemushkinCase::III),
            4 => Some(DemushkinCase::IV),
            _ => None,
        }
    }
}

impl fmt::Display for DemushkinCase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            DemushkinCase::I => "I",
            DemushkinCase::II => "II",
            DemushkinCase::III => "III",
            DemushkinCase::IV => "IV",
        })
    }
}

/// An oriented pro-2 group of elementary type, as a construction tree.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum GroupExpr {
    /// Free pro-2 group on `thetas.len()` generators with arbitrary orientation.
    Free { thetas: Vec<OrientationValue> },
    /// Demushkin group with its canonical orientation.
    Demushkin { case: DemushkinCase, d: usize, f: TwoPower },
    FreeProduct(Box<GroupExpr>, Box<GroupExpr>),
    /// `Z_2 x| inner` with action `g z g^-1 = z^theta(g)`.
    Semidirect(Box<GroupExpr>),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Violation {
    pub path: String,
    pub message: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.path, self.message)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ExprError {
    #[error("invalid group expression: {}", .0.iter().map(|v| v.to_string()).collect::<Vec<_>>().join("; "))]
    Invalid(Vec<Violation>),
}

impl GroupExpr {
    pub fn trivial() -> Self {
        GroupExpr::Free { thetas: Vec::new() }
    }

    pub fn c2() -> Self {
        GroupExpr::Demushkin {
            case: DemushkinCase::IV,
            d: 1,
            f: TwoPower::Infinite,
        }
    }

    pub fn free(thetas: Vec<OrientationValue>) -> Self {
        GroupExpr::Free { thetas }
    }

    pub fn demushkin(case: DemushkinCase, d: usize, f: TwoPower) -> Self {
        GroupExpr::Demushkin { case, d, f }
    }

    pub fn product(a: GroupExpr, b: GroupExpr) -> Self {
        GroupExpr::FreeProduct(Box::new(a), Box::new(b))
    }

    pub fn semidirect(inner: GroupExpr) -> Self {
        GroupExpr::Semidirect(Box::new(inner))
    }

    /// `D_inf = C2 * C2`.
    pub fn infinite_dihedral() -> Self {
        Self::product(Self::c2(), Self::c2())
    }

    pub fn is_c2(&self) -> bool {
        matches!(
            self,
            GroupExpr::Demushkin {
                case: DemushkinCase::IV,
                d: 1,
                ..
            }
        )
    }

    /// Number of canonical generators.
    pub fn generator_count(&self) -> usize {
        match self {
            GroupExpr::Free { thetas } => thetas.len(),
            GroupExpr::Demushkin { d, .. } => *d,
            GroupExpr::FreeProduct(a, b) => a.generator_count() + b.generator_count(),
            GroupExpr::Semidirect(inner) => inner.generator_count() + 1,
        }
    }

    pub fn relation_count(&self) -> usize {
        match self {
            GroupExpr::Free { .. } => 0,
            GroupExpr::Demushkin { .. } => 1,
            GroupExpr::FreeProduct(a, b) => a.relation_count() + b.relation_count(),
            GroupExpr::Semidirect(inner) => inner.relation_count() + inner.generator_count(),
        }
    }

    pub fn semidirect_count(&self) -> usize {
        match self {
            GroupExpr::Free { .. } | GroupExpr::Demushkin { .. } => 0,
            GroupExpr::FreeProduct(a, b) => a.semidirect_count() + b.semidirect_count(),
            GroupExpr::Semidirect(inner) => inner.semidirect_count() + 1,
        }
    }

    /// True when the tree uses only trivial and C2 bricks.
    pub fn is_ee2(&self) -> bool {
        match self {
            GroupExpr::Free { thetas } => thetas.is_empty(),
            GroupExpr::Demushkin { .. } => self.is_c2(),
            GroupExpr::FreeProduct(a, b) => a.is_ee2() && b.is_ee2(),
            GroupExpr::Semidirect(inner) => inner.is_ee2(),
        }
    }

    /// Checks every structural invariant. On success, returns informational
    /// notes (such as bricks that are cyclic of order 2).
    pub fn validate(&self) -> Result<Vec<String>, Vec<Violation>> {
        let mut violations = Vec::new();
        let mut notes = Vec::new();
        self.validate_at("root", &mut violations, &mut notes);
        let count = self.generator_count();
        if count > MAX_GENERATORS {
            violations.push(Violation {
                path: "root".into(),
                message: format!("{count} generators exceed the limit of {MAX_GENERATORS}"),
            });
        }
        if violations.is_empty() {
            Ok(notes)
        } else {
            Err(violations)
        }
    }

    fn validate_at(&self, path: &str, out: &mut Vec<Violation>, notes: &mut Vec<String>) {
        let mut push = |message: String| {
            out.push(Violation {
                path: path.to_string(),
                message,
            })
        };
        match self {
            GroupExpr::Free { thetas } => {
                for (i, t) in thetas.iter().enumerate() {
                    if let Err(msg) = t.check() {
                        push(format!("theta[{}]: {msg}", i + 1));
                    }
                }
            }
            GroupExpr::Demushkin { case, d, f } => {
                if !f.is_valid() {
                    push(format!("f = {f} must be at least 2"));
                }
                let d = *d;
                match case {
                    DemushkinCase::I | DemushkinCase::II | DemushkinCase::III if d % 2 == 1 => {
                        push(format!("case {case} requires d even"));
                    }
                    DemushkinCase::I | DemushkinCase::III if d < 2 => {
                        push(format!("case {case} requires d >= 2"));
                    }
                    DemushkinCase::II if d < 4 => {
                        push("case II requires d >= 4 (use case III with f = inf for [x1,x2]x2^2)".into());
                    }
                    DemushkinCase::IV if d % 2 == 0 => push("case IV requires d odd".into()),
                    DemushkinCase::IV if d == 1 && *f != TwoPower::Infinite => {
                        push("case IV with d = 1 requires f = inf".into());
                    }
                    DemushkinCase::IV if d == 1 => notes.push(format!("{path}: cyclic of order 2")),
                    _ => {}
                }
            }
            GroupExpr::FreeProduct(a, b) => {
                a.validate_at(&format!("{path}.left"), out, notes);
                b.validate_at(&format!("{path}.right"), out, notes);
            }
            GroupExpr::Semidirect(inner) => inner.validate_at(&format!("{path}.inner"), out, notes),
        }
    }

    pub fn ensure_valid(&self) -> Result<(), ExprError> {
        self.validate().map(|_| ()).map_err(ExprError::Invalid)
    }

    /// Minimal presentation over the canonical generators.
    pub fn presentation(&self) -> Result<Presentation, ExprError> {
        self.ensure_valid()?;
        let mut b = Builder::default();
        let single_z = self.semidirect_count() == 1;
        b.walk(self, single_z);
        Ok(Presentation {
            generators: b.generators,
            relations: b.relations,
        })
    }

    /// Classifies canonical generators by their orientation mod 4. For a
    /// semidirect root the cyclic generator is reported separately and the
    /// lists cover the inner generators only.
    pub fn generator_roles(&self) -> Result<GeneratorRoles, ExprError> {
        let pres = self.presentation()?;
        let (range, z) = match self {
            GroupExpr::Semidirect(inner) => {
                let c = inner.generator_count();
                (0..c, Some(c))
            }
            _ => (0..pres.generators.len(), None),
        };
        let mut u = Vec::new();
        let mut v = Vec::new();
        for i in range {
            match pres.generators[i].theta.mod4() {
                Mod4::MinusOne => u.push(i),
                Mod4::One => v.push(i),
            }
        }
        Ok(GeneratorRoles { u, v, z })
    }
}

impl fmt::Display for GroupExpr {
    /// Serializes in the same textual grammar the parser accepts.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GroupExpr::Free { thetas } if thetas.is_empty() => f.write_str("triv"),
            GroupExpr::Free { thetas } => {
                let list: Vec<String> = thetas.iter().map(|t| t.to_string()).collect();
                write!(f, "free({}; {})", thetas.len(), list.join(", "))
            }
            GroupExpr::Demushkin { .. } if self.is_c2() => f.write_str("c2"),
            GroupExpr::Demushkin { case, d, f: p } => {
                write!(f, "demushkin(case={}, d={d}, f={p})", case.number())
            }
            GroupExpr::FreeProduct(a, b) => write!(f, "prod({a}, {b})"),
            GroupExpr::Semidirect(inner) => write!(f, "semi({inner})"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Generator {
    pub name: String,
    pub theta: OrientationValue,
}

/// One factor of a normal-form relation word; indices refer to
/// [`Presentation::generators`].
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum Factor {
    /// `g^2`, with `theta(g) = -1`.
    Square(usize),
    /// `[y, v] v^(1 - theta(y))`, with `theta(v) = 1`.
    Action { y: usize, v: usize, theta_y: OrientationValue },
    /// `[g, h]`: the action factor with `theta(g) = 1`.
    Commutator(usize, usize),
}

impl Factor {
    /// Syllables `(generator, exponent)` of the expanded factor, exponents
    /// reduced mod `2^bits`.
    pub fn syllables(&self, bits: u32) -> Vec<(usize, i64)> {
        match *self {
            Factor::Square(g) => vec![(g, 2)],
            Factor::Commutator(g, h) => vec![(g, 1), (h, 1), (g, -1), (h, -1)],
            Factor::Action { y, v, theta_y } => {
                let mut s = vec![(y, 1), (v, 1), (y, -1), (v, -1)];
                let e = theta_y.one_minus(bits);
                if e != 0 {
                    s.push((v, e));
                }
                s
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Word(pub Vec<Factor>);

impl Word {
    pub fn factors(&self) -> &[Factor] {
        &self.0
    }

    pub fn syllables(&self, bits: u32) -> Vec<(usize, i64)> {
        self.0.iter().flat_map(|f| f.syllables(bits)).collect()
    }

    /// Exponent sum of each generator, mod `2^bits`.
    pub fn exponent_sums(&self, generators: usize, bits: u32) -> Vec<i64> {
        let mut sums = vec![0i64; generators];
        for (g, e) in self.syllables(bits) {
            sums[g] = sums[g].wrapping_add(e);
        }
        sums.into_iter()
            .map(|s| signed_residue(s as u64, bits))
            .collect()
    }

    pub fn render(&self, names: &[String]) -> String {
        let mut out = String::new();
        for factor in &self.0 {
            match *factor {
                Factor::Square(g) => out.push_str(&format!("{}^2", names[g])),
                Factor::Commutator(g, h) => out.push_str(&format!("[{},{}]", names[g], names[h])),
                Factor::Action { y, v, theta_y } => {
                    out.push_str(&format!("[{},{}]", names[y], names[v]));
                    match theta_y.one_minus_exact() {
                        Some(0) => {}
                        Some(e) => out.push_str(&format!("{}^{}", names[v], e)),
                        None => out.push_str(&format!("{}^(1-({}))", names[v], theta_y)),
                    }
                }
            }
        }
        if out.is_empty() {
            out.push('1');
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Presentation {
    pub generators: Vec<Generator>,
    pub relations: Vec<Word>,
}

impl Presentation {
    pub fn names(&self) -> Vec<String> {
        self.generators.iter().map(|g| g.name.clone()).collect()
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.generators.iter().position(|g| g.name == name)
    }

    /// Structural scan for the normal-form invariant.
    pub fn normal_form_violations(&self) -> Vec<String> {
        let mut out = Vec::new();
        for (l, word) in self.relations.iter().enumerate() {
            for factor in word.factors() {
                match *factor {
                    Factor::Square(g) => {
                        if !self.generators[g].theta.is_minus_one() {
                            out.push(format!("relation {}: square of {} with theta != -1", l + 1, self.generators[g].name));
                        }
                    }
                    Factor::Commutator(g, h) => {
                        if !self.generators[g].theta.is_one() || !self.generators[h].theta.is_one() {
                            out.push(format!("relation {}: plain commutator on non-kernel generators", l + 1));
                        }
                    }
                    Factor::Action { y, v, theta_y } => {
                        if theta_y != self.generators[y].theta {
                            out.push(format!("relation {}: stale orientation for {}", l + 1, self.generators[y].name));
                        }
                        if !self.generators[v].theta.is_one() {
                            out.push(format!("relation {}: {} is not in the kernel", l + 1, self.generators[v].name));
                        }
                    }
                }
            }
        }
        out
    }

    pub fn is_normal_form(&self) -> bool {
        self.normal_form_violations().is_empty()
    }

    pub fn render_relations(&self) -> Vec<String> {
        let names = self.names();
        self.relations.iter().map(|w| w.render(&names)).collect()
    }
}

#[derive(Default)]
struct Builder {
    generators: Vec<Generator>,
    relations: Vec<Word>,
    bricks: usize,
    zs: usize,
}

impl Builder {
    fn push_gen(&mut self, theta: OrientationValue) -> usize {
        self.bricks += 1;
        self.generators.push(Generator {
            name: format!("x{}", self.bricks),
            theta,
        });
        self.generators.len() - 1
    }

    fn action(&self, y: usize, v: usize) -> Factor {
        let theta_y = self.generators[y].theta;
        if theta_y.is_one() {
            Factor::Commutator(y, v)
        } else {
            Factor::Action { y, v, theta_y }
        }
    }

    fn walk(&mut self, expr: &GroupExpr, single_z: bool) {
        match expr {
            GroupExpr::Free { thetas } => {
                for &t in thetas {
                    self.push_gen(t);
                }
            }
            GroupExpr::Demushkin { case, d, f } => self.demushkin(*case, *d, *f),
            GroupExpr::FreeProduct(a, b) => {
                self.walk(a, single_z);
                self.walk(b, single_z);
            }
            GroupExpr::Semidirect(inner) => {
                let start = self.generators.len();
                self.walk(inner, single_z);
                let end = self.generators.len();
                self.zs += 1;
                let name = if single_z { "z".to_string() } else { format!("z{}", self.zs) };
                self.generators.push(Generator {
                    name,
                    theta: OrientationValue::Plus1,
                });
                let z = end;
                for y in start..end {
                    let factor = self.action(y, z);
                    self.relations.push(Word(vec![factor]));
                }
            }
        }
    }

    fn demushkin(&mut self, case: DemushkinCase, d: usize, f: TwoPower) {
        use OrientationValue::*;
        let thetas: Vec<OrientationValue> = (0..d)
            .map(|h| match (case, h) {
                (DemushkinCase::I, 0) => OnePlus(f),
                (DemushkinCase::II, 0) => Minus1,
                (DemushkinCase::II, 2) => OnePlus(f),
                (DemushkinCase::III, 0) => MinusOnePlus(f),
                (DemushkinCase::IV, 0) => Minus1,
                (DemushkinCase::IV, 1) => OnePlus(f),
                _ => Plus1,
            })
            .collect();
        let first = self.generators.len();
        for t in thetas {
            self.push_gen(t);
        }
        let x = |h: usize| first + h - 1;
        let mut factors = Vec::new();
        // pairs of consecutive generators after the optional leading square
        let pair_start = if case == DemushkinCase::IV {
            factors.push(Factor::Square(x(1)));
            2
        } else {
            1
        };
        let mut h = pair_start;
        while h < d {
            factors.push(self.action(x(h), x(h + 1)));
            h += 2;
        }
        self.relations.push(Word(factors));
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GeneratorRoles {
    /// Generators with `theta = -1 mod 4`.
    pub u: Vec<usize>,
    /// Generators with `theta = 1 mod 4`.
    pub v: Vec<usize>,
    /// The cyclic generator of a semidirect root.
    pub z: Option<usize>,
}

impl GeneratorRoles {
    /// Coordinates of `chi_0 = sum of the u-duals`, packed as a class.
    pub fn chi0_bits(&self) -> u64 {
        self.u.iter().fold(0, |acc, &i| acc | (1u64 << i))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Family {
    /// All elementary-type bricks.
    Et,
    /// Trivial and C2 bricks only.
    Ee2,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CorpusParams {
    pub max_bricks: usize,
    pub max_d: usize,
    pub family: Family,
    /// Number of random expressions drawn after the fixed small members.
    pub count: usize,
    /// Upper bound on generators per expression.
    pub max_generators: usize,
}

impl Default for CorpusParams {
    fn default() -> Self {
        CorpusParams {
            max_bricks: 3,
            max_d: 4,
            family: Family::Et,
            count: 20,
            max_generators: 8,
        }
    }
}

/// Deterministic pseudo-random corpus. The list opens with the smallest
/// members of the family (C2, its semidirect extension and, for ET, a free
/// brick), followed by `count` random trees. ChaCha8 seeded with `seed`
/// drives every choice, so the same inputs always give the same list.
pub fn generate_corpus(seed: u64, params: CorpusParams) -> Vec<GroupExpr> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = vec![GroupExpr::c2(), GroupExpr::semidirect(GroupExpr::c2())];
    if params.family == Family::Et {
        out.push(GroupExpr::free(vec![OrientationValue::Minus1]));
    }
    let max_bricks = params.max_bricks.max(1);
    let max_gens = params.max_generators.max(2);
    let mut produced = 0;
    let mut attempts = 0;
    while produced < params.count && attempts < params.count * 100 + 100 {
        attempts += 1;
        let bricks = rng.gen_range(1..=max_bricks);
        let expr = random_tree(&mut rng, bricks, &params);
        if expr.generator_count() > max_gens || expr.validate().is_err() {
            continue;
        }
        out.push(expr);
        produced += 1;
    }
    out
}

fn random_tree(rng: &mut ChaCha8Rng, bricks: usize, params: &CorpusParams) -> GroupExpr {
    let mut expr = if bricks <= 1 {
        random_brick(rng, params)
    } else {
        let left = rng.gen_range(1..bricks);
        GroupExpr::product(
            random_tree(rng, left, params),
            random_tree(rng, bricks - left, params),
        )
    };
    if rng.gen_bool(0.4) {
        // EE2 semidirect nodes always sit over an inner group with a u-generator
        if params.family == Family::Et || has_u_generator(&expr) {
            expr = GroupExpr::semidirect(expr);
        }
    }
    expr
}

fn has_u_generator(expr: &GroupExpr) -> bool {
    expr.presentation()
        .map(|p| p.generators.iter().any(|g| g.theta.mod4() == Mod4::MinusOne))
        .unwrap_or(false)
}

fn random_brick(rng: &mut ChaCha8Rng, params: &CorpusParams) -> GroupExpr {
    if params.family == Family::Ee2 {
        return if rng.gen_bool(0.85) {
            GroupExpr::c2()
        } else {
            GroupExpr::trivial()
        };
    }
    let max_d = params.max_d.max(1);
    let f = if rng.gen_bool(0.3) {
        TwoPower::Infinite
    } else {
        TwoPower::Finite(rng.gen_range(2..=4))
    };
    match rng.gen_range(0..6) {
        0 => GroupExpr::c2(),
        1 => {
            let d = rng.gen_range(1..=max_d.min(3));
            let thetas = (0..d).map(|_| random_theta(rng)).collect();
            GroupExpr::free(thetas)
        }
        choice => {
            let case = [DemushkinCase::I, DemushkinCase::II, DemushkinCase::III, DemushkinCase::IV][choice - 2];
            let candidates: Vec<usize> = (1..=max_d)
                .filter(|&d| match case {
                    DemushkinCase::I | DemushkinCase::III => d % 2 == 0 && d >= 2,
                    DemushkinCase::II => d % 2 == 0 && d >= 4,
                    DemushkinCase::IV => d % 2 == 1 && d >= 3,
                })
                .collect();
            match candidates.choose(rng) {
                Some(&d) => GroupExpr::demushkin(case, d, f),
                None => GroupExpr::c2(),
            }
        }
    }
}

fn random_theta(rng: &mut ChaCha8Rng) -> OrientationValue {
    let f = TwoPower::Finite(rng.gen_range(2..=4));
    match rng.gen_range(0..5) {
        0 => OrientationValue::Plus1,
        1 => OrientationValue::Minus1,
        2 => OrientationValue::OnePlus(f),
        3 => OrientationValue::MinusOnePlus(f),
        _ => {
            let bits = rng.gen_range(3..=6);
            let value = rng.gen_range(0..(1u64 << (bits - 1))) * 2 + 1;
            OrientationValue::Residue { value, bits }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use OrientationValue::*;

    #[test]
    fn truncation_is_odd_and_classes_mod4() {
        let values = [
            Plus1,
            Minus1,
            OnePlus(TwoPower::Finite(2)),
            OnePlus(TwoPower::Infinite),
            MinusOnePlus(TwoPower::Finite(3)),
            MinusOnePlus(TwoPower::Infinite),
            Residue { value: 11, bits: 5 },
        ];
        for v in values {
            for k in 2..=10 {
                assert_eq!(v.truncate(k) & 1, 1, "{v} mod 2^{k}");
            }
        }
        assert_eq!(OnePlus(TwoPower::Finite(2)).truncate(4), 5);
        assert_eq!(MinusOnePlus(TwoPower::Finite(2)).truncate(4), 3);
        assert_eq!(Minus1.truncate(3), 7);
        assert_eq!(OnePlus(TwoPower::Finite(5)).truncate(4), 1);
        assert_eq!(MinusOnePlus(TwoPower::Finite(2)).mod4(), Mod4::MinusOne);
        assert_eq!(OnePlus(TwoPower::Finite(3)).mod4(), Mod4::One);
        assert_eq!(Residue { value: 7, bits: 3 }.mod4(), Mod4::MinusOne);
    }

    #[test]
    fn one_minus_matches_exact_values() {
        assert_eq!(OnePlus(TwoPower::Finite(2)).one_minus(6), -4);
        assert_eq!(MinusOnePlus(TwoPower::Finite(2)).one_minus(6), -2);
        assert_eq!(Minus1.one_minus(6), 2);
        assert_eq!(OnePlus(TwoPower::Infinite).one_minus(6), 0);
        assert_eq!(MinusOnePlus(TwoPower::Finite(3)).one_minus_exact(), Some(-6));
    }

    #[test]
    fn validate_examples() {
        let errs = GroupExpr::demushkin(DemushkinCase::I, 3, TwoPower::Finite(2))
            .validate()
            .unwrap_err();
        assert_eq!(errs[0].message, "case I requires d even");
        let notes = GroupExpr::demushkin(DemushkinCase::IV, 1, TwoPower::Infinite)
            .validate()
            .unwrap();
        assert_eq!(notes, vec!["root: cyclic of order 2".to_string()]);
        assert!(GroupExpr::infinite_dihedral().validate().is_ok());
        assert!(GroupExpr::demushkin(DemushkinCase::IV, 1, TwoPower::Finite(2)).validate().is_err());
        assert!(GroupExpr::demushkin(DemushkinCase::II, 2, TwoPower::Finite(2)).validate().is_err());
        assert!(GroupExpr::demushkin(DemushkinCase::IV, 2, TwoPower::Finite(2)).validate().is_err());
        assert!(GroupExpr::demushkin(DemushkinCase::III, 2, TwoPower::Finite(1)).validate().is_err());
        let bad_free = GroupExpr::product(GroupExpr::c2(), GroupExpr::free(vec![Residue { value: 4, bits: 3 }]));
        let errs = bad_free.validate().unwrap_err();
        assert_eq!(errs[0].path, "root.right");
    }

    #[test]
    fn presentation_free_product_of_c2() {
        let p = GroupExpr::infinite_dihedral().presentation().unwrap();
        assert_eq!(p.names(), vec!["x1", "x2"]);
        assert!(p.generators.iter().all(|g| g.theta == Minus1));
        assert_eq!(p.render_relations(), vec!["x1^2", "x2^2"]);
    }

    #[test]
    fn presentation_case_iv_and_semidirect() {
        let p = GroupExpr::demushkin(DemushkinCase::IV, 3, TwoPower::Infinite).presentation().unwrap();
        assert_eq!(p.render_relations(), vec!["x1^2[x2,x3]"]);

        let p = GroupExpr::semidirect(GroupExpr::c2()).presentation().unwrap();
        assert_eq!(p.names(), vec!["x1", "z"]);
        assert_eq!(p.generators[0].theta, Minus1);
        assert_eq!(p.generators[1].theta, Plus1);
        assert_eq!(p.render_relations(), vec!["x1^2", "[x1,z]z^2"]);
    }

    #[test]
    fn presentation_demushkin_shapes() {
        let f2 = TwoPower::Finite(2);
        let rels = |case, d| GroupExpr::demushkin(case, d, f2).presentation().unwrap().render_relations();
        assert_eq!(rels(DemushkinCase::I, 4), vec!["[x1,x2]x2^-4[x3,x4]"]);
        assert_eq!(rels(DemushkinCase::II, 4), vec!["[x1,x2]x2^2[x3,x4]x4^-4"]);
        assert_eq!(rels(DemushkinCase::III, 2), vec!["[x1,x2]x2^-2"]);
        assert_eq!(rels(DemushkinCase::IV, 5), vec!["x1^2[x2,x3]x3^-4[x4,x5]"]);
    }

    #[test]
    fn composite_example_naming() {
        let g1 = GroupExpr::demushkin(DemushkinCase::IV, 3, TwoPower::Infinite);
        let g2 = GroupExpr::free(vec![OnePlus(TwoPower::Finite(2))]);
        let g3 = GroupExpr::demushkin(DemushkinCase::III, 2, TwoPower::Finite(2));
        let expr = GroupExpr::semidirect(GroupExpr::product(
            GroupExpr::semidirect(GroupExpr::product(g1, g2)),
            g3,
        ));
        let p = expr.presentation().unwrap();
        assert_eq!(p.names(), vec!["x1", "x2", "x3", "x4", "z1", "x5", "x6", "z2"]);
        assert_eq!(p.relations.len(), expr.relation_count());
        assert!(p.is_normal_form());
        let rels = p.render_relations();
        assert!(rels.contains(&"[x4,z1]z1^-4".to_string()));
        assert!(rels.contains(&"[x5,x6]x6^-2".to_string()));
        let roles = expr.generator_roles().unwrap();
        assert_eq!(roles.u, vec![0, 5]);
        assert_eq!(roles.z, Some(7));
    }

    #[test]
    fn generator_roles_examples() {
        let roles = GroupExpr::demushkin(DemushkinCase::III, 2, TwoPower::Finite(2))
            .generator_roles()
            .unwrap();
        assert_eq!((roles.u, roles.v, roles.z), (vec![0], vec![1], None));
        let roles = GroupExpr::free(vec![Minus1]).generator_roles().unwrap();
        assert_eq!(roles.u, vec![0]);
        let roles = GroupExpr::semidirect(GroupExpr::c2()).generator_roles().unwrap();
        assert_eq!((roles.u, roles.v, roles.z), (vec![0], vec![], Some(1)));
    }

    #[test]
    fn corpus_is_deterministic_and_ee2_is_pure() {
        let params = CorpusParams {
            family: Family::Ee2,
            max_bricks: 1,
            count: 5,
            ..CorpusParams::default()
        };
        let a = generate_corpus(1, params);
        assert!(a.contains(&GroupExpr::c2()));
        assert!(a.contains(&GroupExpr::semidirect(GroupExpr::c2())));
        assert_eq!(a, generate_corpus(1, params));
        let params = CorpusParams {
            family: Family::Ee2,
            max_bricks: 4,
            count: 50,
            ..CorpusParams::default()
        };
        for e in generate_corpus(9, params) {
            assert!(e.is_ee2(), "{e}");
            assert!(e.validate().is_ok());
        }
    }

    #[test]
    fn display_round_trips_structure() {
        let expr = GroupExpr::semidirect(GroupExpr::product(
            GroupExpr::free(vec![Residue { value: 5, bits: 4 }, MinusOnePlus(TwoPower::Infinite)]),
            GroupExpr::demushkin(DemushkinCase::II, 4, TwoPower::Finite(3)),
        ));
        assert_eq!(
            expr.to_string(),
            "semi(prod(free(2; res:5/4, -1+2^inf), demushkin(case=2, d=4, f=3)))"
        );
    }
}
