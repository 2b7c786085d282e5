//! Strong Massey vanishing for elementary-type pro-2 groups at the level of
//! finite presentations: unitriangular matrices over F2, group expressions,
//! degree-1 cohomology with cup products, and explicit Dwyer witnesses.

pub mod cohomology;
pub mod f2mat;
pub mod gf2;
pub mod groupexpr;
pub mod syntax;
pub mod witness;

pub use cohomology::{cup, extract_cup_form, h1_basis, is_massey_admissible, BasisRegistry, CohClass, CupForm};
pub use f2mat::{FiltrationLevel, MatrixError, UniMatrix};
pub use groupexpr::{DemushkinCase, GroupExpr, OrientationValue, Presentation, TwoPower};
pub use witness::{
    brute_force_search, build_c_matrix, build_witness, classify_semidirect_sequence, dihedral_pair,
    solve_by_lifting, strong_massey_audit, verify_witness, AuditMode, AuditReport, MasseySequence,
    SemidirectCase, Witness, WitnessError, WitnessReport,
};
