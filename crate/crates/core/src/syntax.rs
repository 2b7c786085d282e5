//! Text syntax for group expressions and class sequences.
//!
//! ```text
//! expr  := "c2" | "triv" | "free(" d ";" theta ("," theta)* ")"
//!        | "demushkin(case=" 1..4 ", d=" int ", f=" (int | "inf") ")"
//!        | "prod(" expr "," expr ")" | "semi(" expr ")"
//! theta := "1" | "-1" | "1+2^" f | "-1+2^" f | "res:" odd "/" K
//! seq   := "[" class (";" class)* "]"
//! class := "0" | name "*" ("+" name "*")*
//! ```
//!
//! Whitespace is ignored between tokens. The `Display` impls of
//! [`GroupExpr`] and [`OrientationValue`] produce this syntax.

use thiserror::Error;

use crate::cohomology::{BasisRegistry, CohClass};
use crate::groupexpr::{DemushkinCase, GroupExpr, OrientationValue, TwoPower, Violation};
use crate::witness::{MasseySequence, WitnessError};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ParseError {
    #[error("{line}:{column}: {message}")]
    Syntax { line: usize, column: usize, message: String },
    #[error("invalid group expression: {}", .0.iter().map(|v| v.to_string()).collect::<Vec<_>>().join("; "))]
    Invalid(Vec<Violation>),
    #[error("{line}:{column}: unknown generator {name}")]
    UnknownGenerator { line: usize, column: usize, name: String },
    #[error("sequence has length {0}, at least 2 is required")]
    TooShort(usize),
    #[error(transparent)]
    Sequence(#[from] WitnessError),
}

struct Cursor<'a> {
    text: &'a str,
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn new(text: &'a str) -> Self {
        Cursor { text, pos: 0 }
    }

    fn location(&self, pos: usize) -> (usize, usize) {
        let before = &self.text[..pos];
        let line = before.matches('\n').count() + 1;
        let column = before.rsplit('\n').next().map_or(0, |l| l.chars().count()) + 1;
        (line, column)
    }

    fn error_at(&self, pos: usize, message: impl Into<String>) -> ParseError {
        let (line, column) = self.location(pos);
        ParseError::Syntax {
            line,
            column,
            message: message.into(),
        }
    }

    fn error(&self, message: impl Into<String>) -> ParseError {
        self.error_at(self.pos, message)
    }

    fn skip_ws(&mut self) {
        let rest = &self.text[self.pos..];
        self.pos += rest.len() - rest.trim_start().len();
    }

    fn peek(&mut self) -> Option<char> {
        self.skip_ws();
        self.text[self.pos..].chars().next()
    }

    fn eat(&mut self, token: &str) -> bool {
        self.skip_ws();
        if self.text[self.pos..].starts_with(token) {
            self.pos += token.len();
            true
        } else {
            false
        }
    }

    fn expect(&mut self, token: &str) -> Result<(), ParseError> {
        if self.eat(token) {
            Ok(())
        } else {
            Err(self.error(format!("expected '{token}'")))
        }
    }

    fn word(&mut self) -> &'a str {
        self.skip_ws();
        let rest = &self.text[self.pos..];
        let len = rest
            .find(|c: char| !(c.is_ascii_alphanumeric() || c == '_'))
            .unwrap_or(rest.len());
        self.pos += len;
        &rest[..len]
    }

    fn number(&mut self) -> Result<u64, ParseError> {
        self.skip_ws();
        let start = self.pos;
        let rest = &self.text[self.pos..];
        let len = rest.find(|c: char| !c.is_ascii_digit()).unwrap_or(rest.len());
        if len == 0 {
            return Err(self.error("expected a number"));
        }
        self.pos += len;
        rest[..len]
            .parse()
            .map_err(|_| self.error_at(start, "number out of range"))
    }

    fn two_power(&mut self) -> Result<TwoPower, ParseError> {
        if self.eat("inf") {
            return Ok(TwoPower::Infinite);
        }
        let start = self.pos;
        let v = self.number()?;
        u32::try_from(v)
            .map(TwoPower::Finite)
            .map_err(|_| self.error_at(start, "exponent out of range"))
    }

    fn finish(&mut self) -> Result<(), ParseError> {
        self.skip_ws();
        if self.pos < self.text.len() {
            Err(self.error("unexpected trailing input"))
        } else {
            Ok(())
        }
    }
}

/// Parses and validates a group expression.
pub fn parse_group(text: &str) -> Result<GroupExpr, ParseError> {
    let mut cur = Cursor::new(text);
    let expr = expr(&mut cur)?;
    cur.finish()?;
    expr.validate().map_err(ParseError::Invalid)?;
    Ok(expr)
}

fn expr(cur: &mut Cursor) -> Result<GroupExpr, ParseError> {
    let start = {
        cur.skip_ws();
        cur.pos
    };
    match cur.word() {
        "c2" => Ok(GroupExpr::c2()),
        "triv" => Ok(GroupExpr::trivial()),
        "free" => {
            cur.expect("(")?;
            let d = cur.number()? as usize;
            let mut thetas = Vec::with_capacity(d);
            if cur.eat(";") && cur.peek() != Some(')') {
                thetas.push(theta(cur)?);
                while cur.eat(",") {
                    thetas.push(theta(cur)?);
                }
            }
            let close = cur.pos;
            cur.expect(")")?;
            if thetas.len() != d {
                return Err(cur.error_at(
                    close,
                    format!("free({d}; ...) lists {} orientation values", thetas.len()),
                ));
            }
            Ok(GroupExpr::free(thetas))
        }
        "demushkin" => {
            cur.expect("(")?;
            cur.expect("case")?;
            cur.expect("=")?;
            let at = cur.pos;
            let case = DemushkinCase::from_number(cur.number()?)
                .ok_or_else(|| cur.error_at(at, "case must be 1, 2, 3 or 4"))?;
            cur.expect(",")?;
            cur.expect("d")?;
            cur.expect("=")?;
            let d = cur.number()? as usize;
            cur.expect(",")?;
            cur.expect("f")?;
            cur.expect("=")?;
            let f = cur.two_power()?;
            cur.expect(")")?;
            Ok(GroupExpr::demushkin(case, d, f))
        }
        "prod" => {
            cur.expect("(")?;
            let a = expr(cur)?;
            cur.expect(",")?;
            let b = expr(cur)?;
            cur.expect(")")?;
            Ok(GroupExpr::product(a, b))
        }
        "semi" => {
            cur.expect("(")?;
            let inner = expr(cur)?;
            cur.expect(")")?;
            Ok(GroupExpr::semidirect(inner))
        }
        "" => Err(cur.error_at(start, "expected a group expression")),
        other => Err(cur.error_at(start, format!("unknown group constructor '{other}'"))),
    }
}

fn theta(cur: &mut Cursor) -> Result<OrientationValue, ParseError> {
    if cur.eat("res:") {
        let value = cur.number()?;
        cur.expect("/")?;
        let at = cur.pos;
        let bits = cur.number()?;
        let bits = u32::try_from(bits).map_err(|_| cur.error_at(at, "precision out of range"))?;
        return Ok(OrientationValue::Residue { value, bits });
    }
    let negative = cur.eat("-");
    if !cur.eat("1") {
        return Err(cur.error("expected an orientation value"));
    }
    if cur.eat("+") {
        cur.expect("2")?;
        cur.expect("^")?;
        let f = cur.two_power()?;
        Ok(if negative {
            OrientationValue::MinusOnePlus(f)
        } else {
            OrientationValue::OnePlus(f)
        })
    } else if negative {
        Ok(OrientationValue::Minus1)
    } else {
        Ok(OrientationValue::Plus1)
    }
}

/// Parses a class sequence against the dual basis of `registry`.
pub fn parse_sequence(text: &str, registry: &BasisRegistry) -> Result<MasseySequence, ParseError> {
    let mut cur = Cursor::new(text);
    cur.expect("[")?;
    let mut raw: Vec<Vec<(usize, &str)>> = Vec::new();
    loop {
        raw.push(class_terms(&mut cur)?);
        if !cur.eat(";") {
            break;
        }
    }
    cur.expect("]")?;
    cur.finish()?;
    if raw.len() < 2 {
        return Err(ParseError::TooShort(raw.len()));
    }
    let mut classes = Vec::with_capacity(raw.len());
    for terms in raw {
        let mut class = CohClass::zero(registry.dim());
        for (pos, name) in terms {
            let idx = registry.index(name).ok_or_else(|| {
                let (line, column) = cur.location(pos);
                ParseError::UnknownGenerator {
                    line,
                    column,
                    name: name.to_string(),
                }
            })?;
            class = class + CohClass::basis(registry.dim(), idx);
        }
        classes.push(class);
    }
    Ok(MasseySequence::new(classes)?)
}

fn class_terms<'a>(cur: &mut Cursor<'a>) -> Result<Vec<(usize, &'a str)>, ParseError> {
    cur.skip_ws();
    let start = cur.pos;
    let name = cur.word();
    if name == "0" {
        return Ok(Vec::new());
    }
    if name.is_empty() {
        return Err(cur.error_at(start, "expected a class"));
    }
    let mut terms = vec![(start, name)];
    cur.expect("*")?;
    while cur.eat("+") {
        cur.skip_ws();
        let at = cur.pos;
        let name = cur.word();
        if name.is_empty() {
            return Err(cur.error_at(at, "expected a generator name"));
        }
        cur.expect("*")?;
        terms.push((at, name));
    }
    Ok(terms)
}

/// Renders a sequence in the syntax accepted by [`parse_sequence`].
pub fn render_sequence(seq: &MasseySequence, registry: &BasisRegistry) -> String {
    let parts: Vec<String> = seq.classes().iter().map(|c| registry.render(c)).collect();
    format!("[{}]", parts.join("; "))
}
