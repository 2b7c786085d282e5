//! Versioned JSON reports, one body type per command.

use massey_core::f2mat::UniMatrix;
use massey_core::witness::{AuditReport, Provenance, Witness};
use serde::{Deserialize, Serialize};

use crate::suites::SuiteResult;

pub const SCHEMA: &str = "massey-report/1";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Report {
    pub schema: String,
    #[serde(flatten)]
    pub body: Body,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub total_ms: Option<u64>,
}

impl Report {
    pub fn new(body: Body) -> Self {
        Report {
            schema: SCHEMA.to_string(),
            body,
            total_ms: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "command", rename_all = "lowercase")]
pub enum Body {
    Describe(DescribeReport),
    Cup(CupReport),
    Admissible(AdmissibleReport),
    Witness(WitnessBody),
    Oracle(OracleReport),
    Audit(AuditReport),
    Corpus(CorpusReport),
    Selftest(SelftestReport),
    Error(ErrorReport),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GeneratorInfo {
    pub name: String,
    pub theta: String,
    /// `u` (theta = -1 mod 4), `v` (theta = 1 mod 4) or `z`.
    pub role: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DescribeReport {
    pub group: String,
    pub generators: Vec<GeneratorInfo>,
    pub relations: Vec<String>,
    pub normal_form: bool,
    pub notes: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CupProduct {
    pub left: String,
    pub right: String,
    /// Coordinates `tr_l`, one digit per relation.
    pub value: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CupReport {
    pub group: String,
    pub generators: Vec<String>,
    pub relations: Vec<String>,
    /// Per relation, the rows of its symmetric table.
    pub tables: Vec<Vec<String>>,
    /// Non-zero products of basis classes, `left <= right`.
    pub products: Vec<CupProduct>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConsecutiveCup {
    pub position: usize,
    pub value: String,
    pub vanishes: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AdmissibleReport {
    pub group: String,
    pub sequence: String,
    pub n: usize,
    pub admissible: bool,
    pub cups: Vec<ConsecutiveCup>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NamedMatrix {
    pub generator: String,
    pub rows: UniMatrix,
}

pub fn named_matrices(w: &Witness) -> Vec<NamedMatrix> {
    w.names
        .iter()
        .zip(&w.matrices)
        .map(|(name, m)| NamedMatrix {
            generator: name.clone(),
            rows: m.clone(),
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct WitnessBody {
    pub group: String,
    pub sequence: String,
    pub n: usize,
    pub admissible: bool,
    pub verified: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub path: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub provenance: Option<Provenance>,
    pub matrices: Vec<NamedMatrix>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verdict {
    Witness,
    None,
    BudgetExceeded,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct OracleReport {
    pub group: String,
    pub sequence: String,
    pub n: usize,
    pub budget: u64,
    pub verdict: Verdict,
    pub admissible: bool,
    pub verified: bool,
    pub matrices: Vec<NamedMatrix>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CorpusEntry {
    pub group: String,
    pub generators: usize,
    pub relations: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CorpusReport {
    pub seed: u64,
    pub family: String,
    pub expressions: Vec<CorpusEntry>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SelftestReport {
    pub seed: u64,
    pub family: String,
    pub passed: bool,
    pub suites: Vec<SuiteResult>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ErrorReport {
    /// `usage` or `parse`.
    pub kind: String,
    pub message: String,
}
