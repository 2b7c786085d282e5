//! Golden-file cases shared by the golden tests and the acceptance target.
#![allow(dead_code)]

use std::path::PathBuf;
use std::process::Command;

pub struct GoldenCase {
    pub name: &'static str,
    pub args: &'static [&'static str],
    pub exit_code: i32,
}

pub const CASES: &[GoldenCase] = &[
    GoldenCase {
        name: "witness_semi_c2",
        args: &["witness", "--group", "semi(c2)", "--classes", "[x1*+z*; z*; x1*+z*]", "--deterministic"],
        exit_code: 0,
    },
    GoldenCase {
        name: "oracle_c2_none",
        args: &["oracle", "--group", "c2", "--classes", "[x1*; x1*; 0]", "--n", "3", "--deterministic"],
        exit_code: 1,
    },
    GoldenCase {
        name: "selftest_ee2_seed7",
        args: &["selftest", "--family", "ee2", "--seed", "7", "--deterministic"],
        exit_code: 0,
    },
    GoldenCase {
        name: "describe_composite",
        args: &[
            "describe",
            "--group",
            "semi(prod(semi(prod(demushkin(case=4, d=3, f=inf), free(1; 1+2^2))), demushkin(case=3, d=2, f=2)))",
            "--deterministic",
        ],
        exit_code: 0,
    },
    GoldenCase {
        name: "cup_dihedral",
        args: &["cup", "--group", "prod(c2, c2)", "--deterministic"],
        exit_code: 0,
    },
    GoldenCase {
        name: "admissible_c2_negative",
        args: &["admissible", "--group", "c2", "--classes", "[x1*; x1*]", "--deterministic"],
        exit_code: 1,
    },
    GoldenCase {
        name: "witness_inadmissible",
        args: &["witness", "--group", "c2", "--classes", "[x1*; x1*; x1*]", "--deterministic"],
        exit_code: 1,
    },
    GoldenCase {
        name: "audit_dihedral",
        args: &["audit", "--group", "prod(c2, c2)", "--n", "3", "--deterministic"],
        exit_code: 0,
    },
    GoldenCase {
        name: "parse_error_case_one",
        args: &["describe", "--group", "demushkin(case=1, d=3, f=2)", "--deterministic"],
        exit_code: 2,
    },
    GoldenCase {
        name: "parse_error_position",
        args: &["describe", "--group", "semi(prod(c2, c3))", "--deterministic"],
        exit_code: 2,
    },
    GoldenCase {
        name: "sequence_too_short",
        args: &["witness", "--group", "c2", "--classes", "[x1*]", "--deterministic"],
        exit_code: 2,
    },
];

pub fn golden_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests").join("golden")
}

pub fn run_massey(args: &[&str]) -> (String, i32) {
    let out = Command::new(env!("CARGO_BIN_EXE_massey"))
        .args(args)
        .env_remove("MASSEY_BUDGET")
        .output()
        .expect("massey binary runs");
    (String::from_utf8(out.stdout).expect("utf-8 output"), out.status.code().unwrap_or(-1))
}

/// Runs a case and compares it with its golden file. With `UPDATE_GOLDEN`
/// set, the golden file is rewritten instead.
pub fn check_case(case: &GoldenCase) -> Result<(), String> {
    let (stdout, code) = run_massey(case.args);
    let path = golden_dir().join(format!("{}.json", case.name));
    if std::env::var_os("UPDATE_GOLDEN").is_some() {
        std::fs::write(&path, &stdout).map_err(|e| e.to_string())?;
    }
    if code != case.exit_code {
        return Err(format!("{}: exit code {code}, expected {}", case.name, case.exit_code));
    }
    let expected = std::fs::read_to_string(&path).map_err(|e| format!("{}: {e}", path.display()))?;
    if stdout != expected {
        return Err(format!("{}: output differs from {}", case.name, path.display()));
    }
    Ok(())
}
