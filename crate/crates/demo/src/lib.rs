//! Browser bindings. Every export takes plain strings or numbers and returns
//! a JSON string, so the page needs no generated type glue beyond
//! wasm-bindgen's.

use massey_core::cohomology::BasisRegistry;
use massey_core::syntax::{parse_group, parse_sequence};
use massey_core::witness::{build_witness, dihedral_pair};
use serde_json::{json, Value};
use wasm_bindgen::prelude::*;

fn rows(m: &massey_core::UniMatrix) -> Value {
    json!(m.text_rows())
}

fn error(message: impl ToString) -> Value {
    json!({ "ok": false, "error": message.to_string() })
}

pub fn describe(group: &str) -> Value {
    let expr = match parse_group(group) {
        Ok(e) => e,
        Err(e) => return error(e),
    };
    let (pres, roles) = match (expr.presentation(), expr.generator_roles()) {
        (Ok(p), Ok(r)) => (p, r),
        (Err(e), _) | (_, Err(e)) => return error(e),
    };
    let generators: Vec<Value> = pres
        .generators
        .iter()
        .enumerate()
        .map(|(i, g)| {
            let role = if roles.z == Some(i) {
                "z"
            } else if roles.u.contains(&i) {
                "u"
            } else {
                "v"
            };
            json!({ "name": g.name, "theta": g.theta.to_string(), "role": role })
        })
        .collect();
    json!({
        "ok": true,
        "group": expr.to_string(),
        "generators": generators,
        "relations": pres.render_relations(),
    })
}

pub fn witness(group: &str, classes: &str) -> Value {
    let expr = match parse_group(group) {
        Ok(e) => e,
        Err(e) => return error(e),
    };
    let pres = match expr.presentation() {
        Ok(p) => p,
        Err(e) => return error(e),
    };
    let registry = BasisRegistry::from_presentation(&pres);
    let seq = match parse_sequence(classes, &registry) {
        Ok(s) => s,
        Err(e) => return error(e),
    };
    match build_witness(&expr, &seq) {
        Ok(built) => {
            let matrices: Vec<Value> = built
                .witness
                .names
                .iter()
                .zip(&built.witness.matrices)
                .map(|(name, m)| json!({ "generator": name, "rows": rows(m) }))
                .collect();
            json!({
                "ok": true,
                "n": seq.n(),
                "path": built.provenance.path(),
                "matrices": matrices,
            })
        }
        Err(e) => error(e),
    }
}

pub fn dihedral(n: usize, variant: u8) -> Value {
    match dihedral_pair(n, variant) {
        Ok((a, b)) => json!({
            "ok": true,
            "A": rows(&a),
            "B": rows(&b),
            "AB": rows(&a.mul(&b)),
            "B_squared_is_identity": b.mul(&b).is_identity(),
            "action_holds": b.comm(&a) == a.power(-2),
        }),
        Err(e) => error(e),
    }
}

#[wasm_bindgen]
pub fn describe_group(group: &str) -> String {
    describe(group).to_string()
}

#[wasm_bindgen]
pub fn build_witness_json(group: &str, classes: &str) -> String {
    witness(group, classes).to_string()
}

#[wasm_bindgen]
pub fn dihedral_pair_json(n: usize, variant: u8) -> String {
    dihedral(n, variant).to_string()
}
