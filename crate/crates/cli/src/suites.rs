//! Invariant suites shared by `massey selftest` and the acceptance tests.
//!
//! Each suite compares a constructive answer against an independent one
//! (exhaustive search, the Z/4-lift oracle, direct matrix identities) and
//! returns a [`SuiteResult`] instead of panicking.

use std::time::Instant;

use massey_core::cohomology::{bockstein_lift_exists, extract_cup_form, is_massey_admissible, CohClass, CupForm};
use massey_core::f2mat::UniMatrix;
use massey_core::groupexpr::{generate_corpus, CorpusParams, DemushkinCase, Family, GroupExpr, TwoPower};
use massey_core::syntax::parse_group;
use massey_core::witness::{
    brute_force_search, build_c_matrix, build_witness_with_budget, dihedral_pair, strong_massey_audit,
    verify_witness, AuditMode, BruteForceBudget, MasseySequence, SearchOutcome, WitnessError,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

const MAX_RECORDED_FAILURES: usize = 10;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SuiteResult {
    pub name: String,
    pub passed: bool,
    pub checked: u64,
    pub detail: String,
    pub failures: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub elapsed_ms: Option<u64>,
}

struct Tally {
    name: String,
    started: Instant,
    checked: u64,
    failed: u64,
    failures: Vec<String>,
}

impl Tally {
    fn new(name: &str) -> Self {
        Tally {
            name: name.to_string(),
            started: Instant::now(),
            checked: 0,
            failed: 0,
            failures: Vec::new(),
        }
    }

    fn check(&mut self, ok: bool, describe: impl FnOnce() -> String) {
        self.checked += 1;
        if !ok {
            self.failed += 1;
            if self.failures.len() < MAX_RECORDED_FAILURES {
                self.failures.push(describe());
            }
        }
    }

    fn finish(self, detail: String) -> SuiteResult {
        SuiteResult {
            name: self.name,
            passed: self.failed == 0,
            checked: self.checked,
            detail: format!("{detail}; {} of {} checks failed", self.failed, self.checked),
            failures: self.failures,
            elapsed_ms: Some(self.started.elapsed().as_millis() as u64),
        }
    }
}

/// The composite example: two nested semidirect extensions over Demushkin
/// and free bricks, eight generators.
pub const COMPOSITE_EXAMPLE: &str =
    "semi(prod(semi(prod(demushkin(case=4, d=3, f=inf), free(1; 1+2^2))), demushkin(case=3, d=2, f=2)))";

pub fn composite_example() -> GroupExpr {
    parse_group(COMPOSITE_EXAMPLE).expect("composite example parses")
}

/// Small named groups that every corpus starts from.
pub fn named_groups() -> Vec<GroupExpr> {
    use massey_core::groupexpr::OrientationValue::*;
    vec![
        GroupExpr::c2(),
        GroupExpr::infinite_dihedral(),
        GroupExpr::semidirect(GroupExpr::c2()),
        GroupExpr::demushkin(DemushkinCase::III, 2, TwoPower::Finite(2)),
        GroupExpr::demushkin(DemushkinCase::I, 2, TwoPower::Finite(2)),
        GroupExpr::demushkin(DemushkinCase::IV, 3, TwoPower::Infinite),
        GroupExpr::free(vec![Plus1, Minus1]),
        GroupExpr::semidirect(GroupExpr::free(vec![OnePlus(TwoPower::Finite(2))])),
        GroupExpr::semidirect(GroupExpr::free(vec![Minus1, Plus1])),
        GroupExpr::product(GroupExpr::c2(), GroupExpr::free(vec![Minus1])),
    ]
}

/// Named groups followed by a seeded random corpus of the given family.
pub fn builtin_corpus(seed: u64, family: Family, count: usize, max_generators: usize) -> Vec<GroupExpr> {
    let mut out: Vec<GroupExpr> = named_groups()
        .into_iter()
        .filter(|g| family == Family::Et || g.is_ee2())
        .collect();
    let params = CorpusParams {
        max_bricks: 3,
        max_d: 4,
        family,
        count,
        max_generators,
    };
    for g in generate_corpus(seed, params) {
        if !out.contains(&g) {
            out.push(g);
        }
    }
    out
}

fn random_full_superdiagonal(rng: &mut ChaCha8Rng, dim: usize) -> UniMatrix {
    let rows = (0..dim)
        .map(|i| {
            let above: u64 = if i + 2 < dim {
                let width = dim - i - 2;
                let mask = if width == 64 { u64::MAX } else { (1u64 << width) - 1 };
                (rng.gen::<u64>() & mask) << (i + 2)
            } else {
                0
            };
            let superdiag = if i + 1 < dim { 1u64 << (i + 1) } else { 0 };
            above | superdiag
        })
        .collect();
    UniMatrix::from_rows(rows).expect("strictly upper rows")
}

/// `[C(mu), A] = A^mu` and `C(mu)` in the third central term, for random
/// `A` with all-ones superdiagonal.
pub fn c_matrix_suite(seed: u64, ns: std::ops::RangeInclusive<usize>, per_n: usize, mus: &[i64]) -> SuiteResult {
    let mut tally = Tally::new("c-matrix");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for n in ns.clone() {
        for _ in 0..per_n {
            let a = random_full_superdiagonal(&mut rng, n + 1);
            for &mu in mus {
                let outcome = build_c_matrix(&a, mu);
                let ok = match &outcome {
                    Ok(c) => c.comm(&a) == a.power(mu) && c.filtration_level().0 >= 3.min(n + 1),
                    Err(_) => false,
                };
                tally.check(ok, || format!("n={n} mu={mu} A={} -> {outcome:?}", a.to_text().replace('\n', "/")));
            }
        }
    }
    tally.finish(format!("n in {ns:?}, {per_n} matrices per n, mu in {mus:?}"))
}

/// Involution, action and superdiagonal checks for both dihedral variants.
pub fn dihedral_suite(ns: std::ops::RangeInclusive<usize>) -> SuiteResult {
    let mut tally = Tally::new("dihedral");
    for n in ns.clone() {
        for variant in [1u8, 2] {
            let Ok((a, b)) = dihedral_pair(n, variant) else {
                tally.check(false, || format!("n={n} variant={variant}: construction failed"));
                continue;
            };
            let ab = a.mul(&b);
            let a_inv2 = a.power(-2);
            let pattern: Vec<bool> = (0..n).map(|i| (i % 2 == 0) == (variant == 1)).collect();
            tally.check(b.mul(&b).is_identity(), || format!("n={n} v={variant}: B^2 != I"));
            tally.check(b.comm(&a) == a_inv2, || format!("n={n} v={variant}: [B,A] != A^-2"));
            tally.check(ab.comm(&a) == a_inv2, || format!("n={n} v={variant}: [AB,A] != A^-2"));
            tally.check(a.superdiagonal() == vec![true; n], || format!("n={n} v={variant}: A superdiagonal"));
            tally.check(b.superdiagonal() == pattern, || format!("n={n} v={variant}: B superdiagonal"));
        }
    }
    tally.finish(format!("n in {ns:?}, variants 1 and 2"))
}

fn form_of(expr: &GroupExpr) -> Option<CupForm> {
    extract_cup_form(&expr.presentation().ok()?).ok()
}

fn cup_vector(form: &CupForm, a: &CohClass, b: &CohClass) -> Vec<bool> {
    form.cup(a, b).map(|h| h.0).unwrap_or_default()
}

/// Free-product block sums, the semidirect identities `psi^2 = chi_0 psi`
/// and injectivity of `beta -> beta psi` on inner classes, and the cup table
/// of the infinite dihedral group in both of its presentations.
pub fn cup_cross_checks(corpus: &[GroupExpr], samples: usize, seed: u64) -> SuiteResult {
    let mut tally = Tally::new("cup-form");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let small: Vec<&GroupExpr> = corpus.iter().filter(|g| g.generator_count() <= 16).collect();

    for _ in 0..samples {
        let a = small[rng.gen_range(0..small.len())];
        let b = small[rng.gen_range(0..small.len())];
        let prod = GroupExpr::product(a.clone(), b.clone());
        let ok = match (form_of(a), form_of(b), form_of(&prod)) {
            (Some(fa), Some(fb), Some(fp)) => fa.direct_sum(&fb) == fp,
            _ => false,
        };
        tally.check(ok, || format!("block sum fails for prod({a}, {b})"));
    }

    for _ in 0..samples {
        let inner = small[rng.gen_range(0..small.len())].clone();
        let d0 = inner.generator_count();
        let semi = GroupExpr::semidirect(inner);
        let (Some(form), Ok(roles)) = (form_of(&semi), semi.generator_roles()) else {
            tally.check(false, || format!("{semi}: no cup form"));
            continue;
        };
        let d = d0 + 1;
        let psi = CohClass::basis(d, d0);
        let chi0 = CohClass::from_bits(d, roles.chi0_bits());
        tally.check(cup_vector(&form, &psi, &psi) == cup_vector(&form, &chi0, &psi), || {
            format!("{semi}: psi^2 != chi0 psi")
        });
        let injective = (1u64..(1u64 << d0.min(12))).all(|bits| {
            let beta = CohClass::from_bits(d, bits);
            cup_vector(&form, &beta, &psi).iter().any(|&x| x)
        });
        tally.check(injective, || format!("{semi}: beta -> beta psi not injective"));
    }

    // infinite dihedral: as C2 * C2 and as Z x| C2
    let h = |bits: [bool; 2]| bits.to_vec();
    if let (Some(prod), Some(semi)) = (
        form_of(&GroupExpr::infinite_dihedral()),
        form_of(&GroupExpr::semidirect(GroupExpr::c2())),
    ) {
        let c = |bits| CohClass::from_bits(2, bits);
        let (chi1, chi2) = (c(0b01), c(0b10));
        tally.check(cup_vector(&prod, &chi1, &chi1) == h([true, false]), || "chi1^2".into());
        tally.check(cup_vector(&prod, &chi2, &chi2) == h([false, true]), || "chi2^2".into());
        tally.check(cup_vector(&prod, &chi1, &chi2) == h([false, false]), || "chi1 chi2".into());
        // chi = chi1 + chi2, psi = chi2; {chi^2, chi psi = psi^2} is a basis
        let (chi, psi) = (c(0b11), c(0b10));
        let chi_sq = cup_vector(&prod, &chi, &chi);
        let chi_psi = cup_vector(&prod, &chi, &psi);
        tally.check(chi_psi == cup_vector(&prod, &psi, &psi), || "chi psi != psi^2 in C2*C2".into());
        tally.check(chi_sq != chi_psi && !chi_sq.iter().all(|x| !x) && !chi_psi.iter().all(|x| !x), || {
            "{chi^2, chi psi} not a basis".into()
        });
        // generators x, z: chi = x*, psi = z*
        let (x, z) = (c(0b01), c(0b10));
        tally.check(cup_vector(&semi, &x, &x) == h([true, false]), || "semi: chi^2".into());
        tally.check(cup_vector(&semi, &x, &z) == h([false, true]), || "semi: chi psi".into());
        tally.check(cup_vector(&semi, &z, &z) == h([false, true]), || "semi: psi^2".into());
        tally.check(cup_vector(&semi, &c(0b11), &z).iter().all(|x| !x), || "semi: (chi+psi) psi".into());
    } else {
        tally.check(false, || "infinite dihedral: no cup form".into());
    }
    tally.finish(format!("{samples} free products, {samples} semidirect extensions, dihedral table"))
}

/// `alpha^2 = 0` exactly when `alpha` lifts to Z/4, for every class of every
/// corpus group with at most `max_generators` generators.
pub fn bockstein_suite(corpus: &[GroupExpr], max_generators: usize) -> SuiteResult {
    let mut tally = Tally::new("bockstein");
    let mut groups = 0;
    for g in corpus.iter().filter(|g| g.generator_count() <= max_generators) {
        let Ok(pres) = g.presentation() else { continue };
        let Some(form) = form_of(g) else { continue };
        groups += 1;
        let d = pres.generators.len();
        for bits in 0..(1u64 << d) {
            let alpha = CohClass::from_bits(d, bits);
            let square_zero = form.cup_vanishes(&alpha, &alpha);
            tally.check(square_zero == bockstein_lift_exists(&pres, &alpha), || {
                format!("{g}: class {bits:b} square_zero={square_zero}")
            });
        }
    }
    tally.finish(format!("{groups} groups with at most {max_generators} generators"))
}

/// An inadmissible sequence kept for the negative controls.
#[derive(Debug, Clone)]
pub struct Inadmissible {
    pub group: GroupExpr,
    pub sequence: MasseySequence,
}

fn all_sequences(d: usize, n: usize) -> Vec<Vec<CohClass>> {
    let classes: Vec<CohClass> = (1..(1u64 << d)).map(|b| CohClass::from_bits(d, b)).collect();
    let mut out = vec![vec![]];
    for _ in 0..n {
        out = out
            .into_iter()
            .flat_map(|prefix| {
                classes.iter().map(move |c| {
                    let mut p = prefix.clone();
                    p.push(*c);
                    p
                })
            })
            .collect();
    }
    out
}

/// Dwyer criterion three ways: exhaustive search finds a witness exactly
/// when the sequence is admissible, exactly when the constructive builder
/// succeeds, and every witness verifies.
pub fn oracle_suite(corpus: &[GroupExpr], max_generators: usize, n: usize, budget: u64) -> (SuiteResult, Vec<Inadmissible>) {
    let mut tally = Tally::new("oracle");
    let mut negatives = Vec::new();
    let mut groups = 0;
    let mut admissible_count = 0u64;
    let bf = BruteForceBudget {
        max_nodes: 1 << 24,
        max_dim: n + 1,
        max_generators,
    };
    for g in corpus.iter().filter(|g| g.generator_count() >= 1 && g.generator_count() <= max_generators) {
        let (Ok(pres), Some(form)) = (g.presentation(), form_of(g)) else { continue };
        groups += 1;
        for classes in all_sequences(pres.generators.len(), n) {
            let seq = MasseySequence::new(classes).expect("n >= 2");
            let admissible = is_massey_admissible(&form, seq.classes());
            let searched = brute_force_search(&pres, &seq, bf);
            let built = build_witness_with_budget(g, &seq, budget);
            let search_ok = match &searched {
                SearchOutcome::Found(w) => verify_witness(&pres, &seq, w).map(|r| r.verified).unwrap_or(false),
                _ => false,
            };
            let built_ok = match &built {
                Ok(b) => verify_witness(&pres, &seq, &b.witness).map(|r| r.verified).unwrap_or(false),
                Err(_) => false,
            };
            let agree = if admissible {
                search_ok && built_ok
            } else {
                searched == SearchOutcome::None && built.as_ref().err() == Some(&WitnessError::Inadmissible)
            };
            tally.check(agree, || {
                format!(
                    "{g} {:?}: admissible={admissible} search={} build={}",
                    seq.classes().iter().map(|c| c.bits()).collect::<Vec<_>>(),
                    match searched {
                        SearchOutcome::Found(_) => "found",
                        SearchOutcome::None => "none",
                        SearchOutcome::BudgetExceeded => "budget",
                    },
                    match &built {
                        Ok(_) => "ok".to_string(),
                        Err(e) => e.to_string(),
                    }
                )
            });
            if admissible {
                admissible_count += 1;
            } else {
                negatives.push(Inadmissible {
                    group: g.clone(),
                    sequence: seq,
                });
            }
        }
    }
    let detail = format!(
        "{groups} groups, n = {n}, {admissible_count} admissible and {} inadmissible sequences",
        negatives.len()
    );
    (tally.finish(detail), negatives)
}

/// Each target must have every admissible sequence witnessed.
pub fn audit_suite(name: &str, targets: &[(GroupExpr, usize, AuditMode)]) -> SuiteResult {
    let mut tally = Tally::new(name);
    let mut admissible = 0;
    for (g, n, mode) in targets {
        match strong_massey_audit(g, *n, *mode) {
            Ok(report) => {
                admissible += report.admissible;
                let passed = report.passed();
                tally.check(passed, || {
                    format!("{g} n={n}: {} of {} verified; {:?}", report.verified, report.admissible, report.failures.first())
                });
            }
            Err(e) => tally.check(false, || format!("{g} n={n}: {e}")),
        }
    }
    tally.finish(format!("{} audits, {admissible} admissible sequences", targets.len()))
}

/// Sampled audits over seeded EE2 expressions; requires zero fallbacks.
pub fn ee2_suite(seed: u64, count: usize, ns: &[usize], samples: usize) -> SuiteResult {
    let mut tally = Tally::new("ee2-corpus");
    let params = CorpusParams {
        max_bricks: 4,
        max_d: 1,
        family: Family::Ee2,
        count,
        max_generators: 6,
    };
    let corpus: Vec<GroupExpr> = generate_corpus(seed, params).into_iter().take(count).collect();
    let (mut verified, mut constructive, mut searched, mut fallback) = (0, 0, 0, 0);
    for (i, g) in corpus.iter().enumerate() {
        tally.check(g.is_ee2() && g.generator_count() <= 6, || format!("{g} is not an EE2 expression"));
        for &n in ns {
            let mode = AuditMode::Sampled {
                count: samples,
                seed: seed.wrapping_add(i as u64 * 31 + n as u64),
            };
            match strong_massey_audit(g, n, mode) {
                Ok(r) => {
                    verified += r.verified;
                    constructive += r.constructive;
                    searched += r.searched;
                    fallback += r.fallback;
                    tally.check(r.passed(), || format!("{g} n={n}: {:?}", r.failures.first()));
                    tally.check(r.fallback == 0, || format!("{g} n={n}: {} fallbacks", r.fallback));
                }
                Err(e) => tally.check(false, || format!("{g} n={n}: {e}")),
            }
        }
    }
    tally.finish(format!(
        "{} expressions, n in {ns:?}: {verified} verified ({constructive} constructive, {searched} searched, {fallback} fallback)",
        corpus.len()
    ))
}

/// The constant sequence on C2 and every inadmissible sequence from the
/// oracle suite must be rejected by both the search and the builder.
pub fn negative_controls(inadmissible: &[Inadmissible], c2_lengths: std::ops::RangeInclusive<usize>, budget: u64) -> SuiteResult {
    let mut tally = Tally::new("negative-controls");
    let c2 = GroupExpr::c2();
    let mut cases: Vec<(GroupExpr, MasseySequence)> = c2_lengths
        .clone()
        .map(|n| (c2.clone(), MasseySequence::new(vec![CohClass::basis(1, 0); n]).expect("n >= 2")))
        .collect();
    cases.extend(inadmissible.iter().map(|x| (x.group.clone(), x.sequence.clone())));
    for (g, seq) in &cases {
        let Ok(pres) = g.presentation() else { continue };
        let bf = BruteForceBudget {
            max_nodes: 1 << 24,
            max_dim: seq.n() + 1,
            max_generators: pres.generators.len(),
        };
        let searched = brute_force_search(&pres, seq, bf);
        tally.check(searched == SearchOutcome::None, || format!("{g} n={}: search gave {searched:?}", seq.n()));
        let built = build_witness_with_budget(g, seq, budget);
        tally.check(built.as_ref().err() == Some(&WitnessError::Inadmissible), || {
            format!("{g} n={}: builder returned {:?}", seq.n(), built.as_ref().map(|b| b.provenance))
        });
    }
    tally.finish(format!("{} sequences", cases.len()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn composite_has_eight_generators() {
        let g = composite_example();
        assert_eq!(g.generator_count(), 8);
        assert_eq!(g.to_string(), COMPOSITE_EXAMPLE);
    }

    #[test]
    fn random_matrices_have_full_superdiagonal() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for dim in [2, 5, 64] {
            let a = random_full_superdiagonal(&mut rng, dim);
            assert_eq!(a.superdiagonal(), vec![true; dim - 1]);
        }
    }

    #[test]
    fn small_suites_pass() {
        assert!(dihedral_suite(2..=5).passed);
        assert!(c_matrix_suite(1, 3..=5, 3, &[4, -4]).passed);
        let corpus = builtin_corpus(5, Family::Et, 4, 4);
        assert!(bockstein_suite(&corpus, 4).passed);
        let (oracle, negatives) = oracle_suite(&named_groups()[..3], 2, 2, 10_000);
        assert!(oracle.passed, "{oracle:?}");
        assert!(negative_controls(&negatives, 2..=3, 10_000).passed);
    }
}
