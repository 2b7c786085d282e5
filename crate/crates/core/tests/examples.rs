//! Worked examples with expected values derived by hand from the relations.

use massey_core::cohomology::{extract_cup_form, BasisRegistry, CohClass};
use massey_core::syntax::{parse_group, parse_sequence};
use massey_core::witness::{
    build_witness, classify_semidirect_sequence, strong_massey_audit, AuditMode, SemidirectCase,
};
use massey_core::GroupExpr;

const COMPOSITE: &str =
    "semi(prod(semi(prod(demushkin(case=4, d=3, f=inf), free(1; 1+2^2))), demushkin(case=3, d=2, f=2)))";

fn relation_set(bits: &[usize], relations: usize) -> Vec<bool> {
    (0..relations).map(|l| bits.contains(&l)).collect()
}

#[test]
fn composite_relations() {
    let g = parse_group(COMPOSITE).unwrap();
    let pres = g.presentation().unwrap();
    assert_eq!(pres.names(), ["x1", "x2", "x3", "x4", "z1", "x5", "x6", "z2"]);
    assert_eq!(
        pres.render_relations(),
        [
            "x1^2[x2,x3]",
            "[x1,z1]z1^2",
            "[x2,z1]",
            "[x3,z1]",
            "[x4,z1]z1^-4",
            "[x5,x6]x6^-2",
            "[x1,z2]z2^2",
            "[x2,z2]",
            "[x3,z2]",
            "[x4,z2]z2^-4",
            "[z1,z2]",
            "[x5,z2]z2^-2",
            "[x6,z2]",
        ]
    );
    let roles = g.generator_roles().unwrap();
    assert_eq!(roles.u, [0, 5]);
    assert_eq!(roles.z, Some(7));
}

#[test]
fn composite_cup_products() {
    let g = parse_group(COMPOSITE).unwrap();
    let pres = g.presentation().unwrap();
    let reg = BasisRegistry::from_presentation(&pres);
    let form = extract_cup_form(&pres).unwrap();
    let r = pres.relations.len();
    let class = |names: &[&str]| {
        names
            .iter()
            .fold(CohClass::zero(8), |acc, n| acc + reg.basis(reg.index(n).unwrap()))
    };
    let cup = |a: &[&str], b: &[&str]| form.cup(&class(a), &class(b)).unwrap().0;

    // x1^2 appears only in the Demushkin relation
    assert_eq!(cup(&["x1"], &["x1"]), relation_set(&[0], r));
    // z2 carries z2^2 in [x1,z2]z2^2 and z2^-2 in [x5,z2]z2^-2
    assert_eq!(cup(&["z2"], &["z2"]), relation_set(&[6, 11], r));
    // psi^2 = chi_0 psi with chi_0 = x1* + x5*
    assert_eq!(cup(&["x1", "x5"], &["z2"]), cup(&["z2"], &["z2"]));
    // x6^-2 gives x6*^2 = x5* x6*
    assert_eq!(cup(&["x6"], &["x6"]), relation_set(&[5], r));
    assert_eq!(cup(&["x5"], &["x6"]), relation_set(&[5], r));
    assert!(cup(&["x6"], &["x5", "x6"]).iter().all(|b| !b));
    // z1^-4 contributes nothing to the square
    assert_eq!(cup(&["z1"], &["z1"]), relation_set(&[1], r));
}

#[test]
fn composite_interior_sequence_recurses() {
    let g = parse_group(COMPOSITE).unwrap();
    let pres = g.presentation().unwrap();
    let reg = BasisRegistry::from_presentation(&pres);
    let form = extract_cup_form(&pres).unwrap();
    // x2* x3* = [rel 0] so alternate x2* with x2*: x2*^2 = 0
    let seq = parse_sequence("[x2*; x2*+x4*; x2*; x4*]", &reg).unwrap();
    let roles = g.generator_roles().unwrap();
    assert_eq!(classify_semidirect_sequence(&roles, &form, &seq), SemidirectCase::Interior);
    let built = build_witness(&g, &seq).unwrap();
    assert!(built.witness.get("z2").unwrap().is_identity());
    assert!(built.provenance.searched > 0);
    assert_eq!(built.provenance.fallback, 0);
}

#[test]
fn c2_split_at_zero() {
    let g = GroupExpr::c2();
    let reg = BasisRegistry::from_presentation(&g.presentation().unwrap());
    let seq = parse_sequence("[x1*; 0; x1*]", &reg).unwrap();
    let w = build_witness(&g, &seq).unwrap().witness;
    assert_eq!(w.matrices[0].to_text(), "1100\n0100\n0011\n0001");
}

#[test]
fn semidirect_c2_exhaustive_n4() {
    let report = strong_massey_audit(&GroupExpr::semidirect(GroupExpr::c2()), 4, AuditMode::Exhaustive).unwrap();
    assert_eq!(report.examined, 81);
    assert!(report.admissible > 0);
    assert!(report.passed(), "{:?}", report.failures);
}

#[test]
fn sampled_audit_is_replayable() {
    let g = parse_group(COMPOSITE).unwrap();
    let mode = AuditMode::Sampled { count: 30, seed: 11 };
    let a = strong_massey_audit(&g, 4, mode).unwrap();
    let b = strong_massey_audit(&g, 4, mode).unwrap();
    assert_eq!(a.admissible, 30);
    assert_eq!((a.verified, a.constructive, a.searched), (b.verified, b.constructive, b.searched));
    assert!(a.passed());
}
