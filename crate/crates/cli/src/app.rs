//! Argument parsing and command dispatch.

use std::ffi::OsString;
use std::fmt::Write as _;
use std::time::Instant;

use clap::{Parser, Subcommand, ValueEnum};
use massey_core::cohomology::{extract_cup_form, is_massey_admissible, BasisRegistry, CohClass};
use massey_core::groupexpr::{generate_corpus, CorpusParams, Family, GroupExpr};
use massey_core::syntax::{parse_group, parse_sequence, render_sequence};
use massey_core::witness::{
    brute_force_search, build_witness_with_budget, strong_massey_audit, verify_witness, AuditMode,
    BruteForceBudget, MasseySequence, SearchOutcome, WitnessError, DEFAULT_LIFT_BUDGET,
};

use crate::report::*;
use crate::suites;

/// Exit status for a mathematical negative: inadmissible input, no witness,
/// a failed audit or self-test.
pub const EXIT_NEGATIVE: i32 = 1;
/// Exit status for malformed arguments or input text.
pub const EXIT_USAGE: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "massey", version, about = "Massey products and Dwyer witnesses for elementary-type pro-2 groups")]
pub struct Cli {
    /// Output format. Only JSON is stable.
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    pub format: Format,
    /// Omit timings so that output is byte-stable.
    #[arg(long, global = true)]
    pub deterministic: bool,
    /// Node budget for lifting and exhaustive search.
    #[arg(long, global = true, env = "MASSEY_BUDGET", default_value_t = DEFAULT_LIFT_BUDGET)]
    pub budget: u64,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Table,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum FamilyArg {
    Et,
    Ee2,
}

impl From<FamilyArg> for Family {
    fn from(f: FamilyArg) -> Family {
        match f {
            FamilyArg::Et => Family::Et,
            FamilyArg::Ee2 => Family::Ee2,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModeArg {
    Exhaustive,
    Sampled,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Canonical presentation, generator roles and validation notes.
    Describe {
        #[arg(long)]
        group: String,
    },
    /// Cup-product tables read off the relations.
    Cup {
        #[arg(long)]
        group: String,
    },
    /// Whether all consecutive cup products of a sequence vanish.
    Admissible {
        #[arg(long)]
        group: String,
        #[arg(long)]
        classes: String,
        #[arg(long)]
        n: Option<usize>,
    },
    /// Build and verify a witness.
    Witness {
        #[arg(long)]
        group: String,
        #[arg(long)]
        classes: String,
        #[arg(long)]
        n: Option<usize>,
    },
    /// Exhaustive search for a witness, independent of the constructions.
    Oracle {
        #[arg(long)]
        group: String,
        #[arg(long)]
        classes: String,
        #[arg(long)]
        n: Option<usize>,
    },
    /// Witness every admissible sequence of length n.
    Audit {
        #[arg(long)]
        group: String,
        #[arg(long)]
        n: usize,
        #[arg(long, value_enum, default_value_t = ModeArg::Exhaustive)]
        mode: ModeArg,
        #[arg(long, default_value_t = 200)]
        count: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Seeded random expressions of a family.
    Corpus {
        #[arg(long, value_enum, default_value_t = FamilyArg::Et)]
        family: FamilyArg,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 10)]
        count: usize,
        #[arg(long, default_value_t = 8)]
        max_generators: usize,
    },
    /// Run the invariant suites over a built-in corpus.
    Selftest {
        #[arg(long, value_enum, default_value_t = FamilyArg::Et)]
        family: FamilyArg,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

pub struct Outcome {
    pub report: Report,
    pub exit_code: i32,
}

struct Failure {
    kind: &'static str,
    message: String,
}

impl Failure {
    fn usage(message: impl Into<String>) -> Self {
        Failure {
            kind: "usage",
            message: message.into(),
        }
    }

    fn parse(message: impl ToString) -> Self {
        Failure {
            kind: "parse",
            message: message.to_string(),
        }
    }
}

/// Parses `args` (including the program name) and runs the command,
/// returning the text to print on stdout and the exit code. Help and version
/// requests are returned as plain text with exit code 0.
pub fn run_args<I, T>(args: I) -> (String, i32)
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    match Cli::try_parse_from(args) {
        Ok(cli) => {
            let format = cli.format;
            let outcome = run(&cli);
            (render(&outcome.report, format), outcome.exit_code)
        }
        Err(e) => {
            use clap::error::ErrorKind;
            match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => (e.to_string(), 0),
                _ => {
                    let report = Report::new(Body::Error(ErrorReport {
                        kind: "usage".into(),
                        message: e.render().to_string().trim_end().to_string(),
                    }));
                    (render(&report, Format::Json), EXIT_USAGE)
                }
            }
        }
    }
}

pub fn run(cli: &Cli) -> Outcome {
    let started = Instant::now();
    match dispatch(cli) {
        Ok((body, exit_code)) => {
            let mut report = Report::new(body);
            if !cli.deterministic {
                report.total_ms = Some(started.elapsed().as_millis() as u64);
            }
            Outcome { report, exit_code }
        }
        Err(f) => Outcome {
            report: Report::new(Body::Error(ErrorReport {
                kind: f.kind.into(),
                message: f.message,
            })),
            exit_code: EXIT_USAGE,
        },
    }
}

fn group_of(text: &str) -> Result<GroupExpr, Failure> {
    parse_group(text).map_err(Failure::parse)
}

fn sequence_of(expr: &GroupExpr, text: &str, n: Option<usize>) -> Result<(BasisRegistry, MasseySequence), Failure> {
    let pres = expr.presentation().map_err(Failure::parse)?;
    let registry = BasisRegistry::from_presentation(&pres);
    let seq = parse_sequence(text, &registry).map_err(Failure::parse)?;
    if let Some(n) = n {
        if n != seq.n() {
            return Err(Failure::usage(format!("--n {n} does not match the sequence length {}", seq.n())));
        }
    }
    Ok((registry, seq))
}

fn bit_string(bits: &[bool]) -> String {
    bits.iter().map(|&b| if b { '1' } else { '0' }).collect()
}

fn exit_if(ok: bool) -> i32 {
    if ok {
        0
    } else {
        EXIT_NEGATIVE
    }
}

fn dispatch(cli: &Cli) -> Result<(Body, i32), Failure> {
    match &cli.command {
        Command::Describe { group } => {
            let expr = group_of(group)?;
            let notes = expr.validate().unwrap_or_default();
            let pres = expr.presentation().map_err(Failure::parse)?;
            let roles = expr.generator_roles().map_err(Failure::parse)?;
            let generators = pres
                .generators
                .iter()
                .enumerate()
                .map(|(i, g)| GeneratorInfo {
                    name: g.name.clone(),
                    theta: g.theta.to_string(),
                    role: if roles.z == Some(i) {
                        "z"
                    } else if roles.u.contains(&i) {
                        "u"
                    } else {
                        "v"
                    }
                    .to_string(),
                })
                .collect();
            Ok((
                Body::Describe(DescribeReport {
                    group: expr.to_string(),
                    generators,
                    relations: pres.render_relations(),
                    normal_form: pres.is_normal_form(),
                    notes,
                }),
                0,
            ))
        }
        Command::Cup { group } => {
            let expr = group_of(group)?;
            let pres = expr.presentation().map_err(Failure::parse)?;
            let form = extract_cup_form(&pres).map_err(Failure::parse)?;
            let names = pres.names();
            let d = names.len();
            let tables = (0..form.relation_count())
                .map(|l| {
                    form.table(l)
                        .iter()
                        .map(|&row| (0..d).map(|j| if (row >> j) & 1 == 1 { '1' } else { '0' }).collect())
                        .collect()
                })
                .collect();
            let mut products = Vec::new();
            for i in 0..d {
                for j in i..d {
                    let value = form
                        .cup(&CohClass::basis(d, i), &CohClass::basis(d, j))
                        .map_err(Failure::parse)?;
                    if !value.is_zero() {
                        products.push(CupProduct {
                            left: format!("{}*", names[i]),
                            right: format!("{}*", names[j]),
                            value: bit_string(&value.0),
                        });
                    }
                }
            }
            Ok((
                Body::Cup(CupReport {
                    group: expr.to_string(),
                    generators: names,
                    relations: pres.render_relations(),
                    tables,
                    products,
                }),
                0,
            ))
        }
        Command::Admissible { group, classes, n } => {
            let expr = group_of(group)?;
            let (registry, seq) = sequence_of(&expr, classes, *n)?;
            let form = extract_cup_form(&expr.presentation().map_err(Failure::parse)?).map_err(Failure::parse)?;
            let mut cups = Vec::new();
            for (i, w) in seq.classes().windows(2).enumerate() {
                let value = form.cup(&w[0], &w[1]).map_err(Failure::parse)?;
                cups.push(ConsecutiveCup {
                    position: i + 1,
                    value: bit_string(&value.0),
                    vanishes: value.is_zero(),
                });
            }
            let admissible = cups.iter().all(|c| c.vanishes);
            Ok((
                Body::Admissible(AdmissibleReport {
                    group: expr.to_string(),
                    sequence: render_sequence(&seq, &registry),
                    n: seq.n(),
                    admissible,
                    cups,
                }),
                exit_if(admissible),
            ))
        }
        Command::Witness { group, classes, n } => {
            let expr = group_of(group)?;
            let (registry, seq) = sequence_of(&expr, classes, *n)?;
            let mut body = WitnessBody {
                group: expr.to_string(),
                sequence: render_sequence(&seq, &registry),
                n: seq.n(),
                admissible: true,
                verified: false,
                path: None,
                provenance: None,
                matrices: vec![],
                error: None,
            };
            match build_witness_with_budget(&expr, &seq, cli.budget) {
                Ok(built) => {
                    body.verified = true;
                    body.path = Some(built.provenance.path().to_string());
                    body.provenance = Some(built.provenance);
                    body.matrices = named_matrices(&built.witness);
                }
                Err(e) => {
                    body.admissible = e != WitnessError::Inadmissible;
                    body.error = Some(e.to_string());
                }
            }
            let code = exit_if(body.verified);
            Ok((Body::Witness(body), code))
        }
        Command::Oracle { group, classes, n } => {
            let expr = group_of(group)?;
            let (registry, seq) = sequence_of(&expr, classes, *n)?;
            let pres = expr.presentation().map_err(Failure::parse)?;
            let form = extract_cup_form(&pres).map_err(Failure::parse)?;
            let budget = BruteForceBudget {
                max_nodes: cli.budget,
                max_dim: seq.n() + 1,
                max_generators: pres.generators.len(),
            };
            let (verdict, matrices, verified) = match brute_force_search(&pres, &seq, budget) {
                SearchOutcome::Found(w) => {
                    let verified = verify_witness(&pres, &seq, &w).map(|r| r.verified).unwrap_or(false);
                    (Verdict::Witness, named_matrices(&w), verified)
                }
                SearchOutcome::None => (Verdict::None, vec![], false),
                SearchOutcome::BudgetExceeded => (Verdict::BudgetExceeded, vec![], false),
            };
            Ok((
                Body::Oracle(OracleReport {
                    group: expr.to_string(),
                    sequence: render_sequence(&seq, &registry),
                    n: seq.n(),
                    budget: cli.budget,
                    verdict,
                    admissible: is_massey_admissible(&form, seq.classes()),
                    verified,
                    matrices,
                }),
                exit_if(verdict == Verdict::Witness),
            ))
        }
        Command::Audit {
            group,
            n,
            mode,
            count,
            seed,
        } => {
            let expr = group_of(group)?;
            let mode = match mode {
                ModeArg::Exhaustive => AuditMode::Exhaustive,
                ModeArg::Sampled => AuditMode::Sampled {
                    count: *count,
                    seed: *seed,
                },
            };
            let mut report = strong_massey_audit(&expr, *n, mode).map_err(|e| Failure::usage(e.to_string()))?;
            if cli.deterministic {
                report.elapsed_ms = None;
            }
            let code = exit_if(report.passed());
            Ok((Body::Audit(report), code))
        }
        Command::Corpus {
            family,
            seed,
            count,
            max_generators,
        } => {
            let params = CorpusParams {
                family: (*family).into(),
                count: *count,
                max_generators: *max_generators,
                ..CorpusParams::default()
            };
            let expressions = generate_corpus(*seed, params)
                .into_iter()
                .map(|g| CorpusEntry {
                    group: g.to_string(),
                    generators: g.generator_count(),
                    relations: g.relation_count(),
                })
                .collect();
            Ok((
                Body::Corpus(CorpusReport {
                    seed: *seed,
                    family: family_name(*family).into(),
                    expressions,
                }),
                0,
            ))
        }
        Command::Selftest { family, seed } => {
            let mut results = selftest((*family).into(), *seed, cli.budget);
            if cli.deterministic {
                for r in &mut results {
                    r.elapsed_ms = None;
                }
            }
            let passed = results.iter().all(|r| r.passed);
            Ok((
                Body::Selftest(SelftestReport {
                    seed: *seed,
                    family: family_name(*family).into(),
                    passed,
                    suites: results,
                }),
                exit_if(passed),
            ))
        }
    }
}

fn family_name(f: FamilyArg) -> &'static str {
    match f {
        FamilyArg::Et => "et",
        FamilyArg::Ee2 => "ee2",
    }
}

/// A scaled-down run of the acceptance suites.
pub fn selftest(family: Family, seed: u64, budget: u64) -> Vec<suites::SuiteResult> {
    let corpus = suites::builtin_corpus(seed, family, 12, 6);
    let mut out = vec![
        suites::c_matrix_suite(seed, 3..=8, 5, &[4, 8, -4]),
        suites::dihedral_suite(2..=10),
        suites::cup_cross_checks(&corpus, 20, seed),
        suites::bockstein_suite(&corpus, 6),
    ];
    let (oracle, negatives) = suites::oracle_suite(&corpus, 3, 3, budget);
    out.push(oracle);
    let targets: Vec<(GroupExpr, usize, AuditMode)> = corpus
        .iter()
        .filter(|g| g.generator_count() <= 6)
        .take(8)
        .flat_map(|g| {
            [3, 4].map(|n| {
                (
                    g.clone(),
                    n,
                    AuditMode::Sampled {
                        count: 10,
                        seed: seed ^ n as u64,
                    },
                )
            })
        })
        .collect();
    out.push(suites::audit_suite("audit", &targets));
    if family == Family::Ee2 {
        out.push(suites::ee2_suite(seed, 10, &[3, 4], 5));
    }
    out.push(suites::negative_controls(&negatives, 2..=4, budget));
    out
}

/// Serializes a report. JSON is pretty-printed with a trailing newline.
pub fn render(report: &Report, format: Format) -> String {
    match format {
        Format::Json => {
            let mut s = serde_json::to_string_pretty(report).expect("reports serialize");
            s.push('\n');
            s
        }
        Format::Table => table(report),
    }
}

fn table(report: &Report) -> String {
    let mut s = String::new();
    let matrices = |s: &mut String, ms: &[NamedMatrix]| {
        for m in ms {
            let _ = writeln!(s, "  {}:", m.generator);
            for row in m.rows.text_rows() {
                let _ = writeln!(s, "    {row}");
            }
        }
    };
    match &report.body {
        Body::Describe(d) => {
            let _ = writeln!(s, "group      {}", d.group);
            for g in &d.generators {
                let _ = writeln!(s, "  {:<6} theta={:<10} {}", g.name, g.theta, g.role);
            }
            for r in &d.relations {
                let _ = writeln!(s, "  {r} = 1");
            }
            for n in &d.notes {
                let _ = writeln!(s, "note       {n}");
            }
        }
        Body::Cup(c) => {
            let _ = writeln!(s, "group      {}", c.group);
            for (rel, t) in c.relations.iter().zip(&c.tables) {
                let _ = writeln!(s, "  {rel}");
                for row in t {
                    let _ = writeln!(s, "    {row}");
                }
            }
            for p in &c.products {
                let _ = writeln!(s, "  {} . {} = {}", p.left, p.right, p.value);
            }
        }
        Body::Admissible(a) => {
            let _ = writeln!(s, "{} over {}: admissible={}", a.sequence, a.group, a.admissible);
            for c in &a.cups {
                let _ = writeln!(s, "  cup {} = {}", c.position, c.value);
            }
        }
        Body::Witness(w) => {
            let _ = writeln!(s, "{} over {}: verified={}", w.sequence, w.group, w.verified);
            if let Some(e) = &w.error {
                let _ = writeln!(s, "  {e}");
            }
            matrices(&mut s, &w.matrices);
        }
        Body::Oracle(o) => {
            let _ = writeln!(s, "{} over {}: verdict={:?}", o.sequence, o.group, o.verdict);
            matrices(&mut s, &o.matrices);
        }
        Body::Audit(a) => {
            let _ = writeln!(
                s,
                "{} n={}: {} examined, {} admissible, {} verified ({} constructive, {} searched, {} fallback)",
                a.group, a.n, a.examined, a.admissible, a.verified, a.constructive, a.searched, a.fallback
            );
            for f in &a.failures {
                let _ = writeln!(s, "  FAIL [{}] {}", f.sequence.join("; "), f.error);
            }
        }
        Body::Corpus(c) => {
            for e in &c.expressions {
                let _ = writeln!(s, "{:>3} {}", e.generators, e.group);
            }
        }
        Body::Selftest(t) => {
            for r in &t.suites {
                let _ = writeln!(s, "{} {:<18} {}", if r.passed { "PASS" } else { "FAIL" }, r.name, r.detail);
                for f in &r.failures {
                    let _ = writeln!(s, "     {f}");
                }
            }
        }
        Body::Error(e) => {
            let _ = writeln!(s, "error ({}): {}", e.kind, e.message);
        }
    }
    s
}
