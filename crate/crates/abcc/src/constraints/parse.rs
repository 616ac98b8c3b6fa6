//! Line-oriented constraint parser.
//!
//! One constraint per line; blank lines and `#` comments are skipped.
//!
//! ```text
//! constraint := "DC:" conj
//!             | "TGD:" (conj | "true") "->" "EXISTS" var ("," var)* "." conj
//!             | "TGD:" (conj | "true") "->" conj
//! conj       := atom ("&" atom)*
//! atom       := NAME "(" term ("," term)* ")" | term OP term
//! OP         := "=" | "!=" | "<" | "<=" | ">" | ">="
//! term       := VARIABLE | INT | '"' TEXT '"'
//! ```
//!
//! Variables match `[a-z][A-Za-z0-9_]*`. Text constants carry no escapes.
//! TGD bodies and heads admit relational atoms only; `Com` atoms are
//! relational and always unary.

use std::collections::HashSet;

use thiserror::Error;

use crate::constraints::ast::{
    vars_in_order, Atom, CmpAtom, CmpOp, Constraint, ConstraintSet, Dc, RelAtom, Term, Tgd,
};
use crate::relational::{Schema, Value, COM};

#[derive(Debug, Error)]
pub enum ParseError {
    #[error("line {line}, col {col}: {msg}")]
    Syntax { line: usize, col: usize, msg: String },
    #[error("line {line}: unknown relation {relation}")]
    UnknownRelation { line: usize, relation: String },
    #[error("line {line}: {relation} expects {expected} terms, found {found}")]
    ArityMismatch {
        line: usize,
        relation: String,
        expected: usize,
        found: usize,
    },
    #[error("line {line}: unsafe variable {var}: {why}")]
    UnsafeVariable {
        line: usize,
        var: String,
        why: String,
    },
}

/// Parses and validates a whole constraint file against `schema`.
pub fn parse_constraints(text: &str, schema: &Schema) -> Result<ConstraintSet, ParseError> {
    let mut constraints = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        constraints.push(parse_line(line, line_no, schema)?);
    }
    Ok(ConstraintSet::new(constraints))
}

/// Parses a single constraint; `line_no` is used in errors only.
pub fn parse_line(
    line: &str,
    line_no: usize,
    schema: &Schema,
) -> Result<Constraint, ParseError> {
    let tokens = lex(line, line_no)?;
    let mut p = Parser {
        tokens,
        pos: 0,
        line: line_no,
    };
    let constraint = p.constraint()?;
    validate(&constraint, line_no, schema)?;
    Ok(constraint)
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Ident(String),
    Int(i64),
    Str(String),
    LParen,
    RParen,
    Comma,
    Amp,
    Dot,
    Colon,
    Arrow,
    Op(CmpOp),
}

impl Tok {
    fn describe(&self) -> String {
        match self {
            Tok::Ident(s) => format!("identifier {s}"),
            Tok::Int(n) => format!("integer {n}"),
            Tok::Str(s) => format!("string \"{s}\""),
            Tok::LParen => "'('".into(),
            Tok::RParen => "')'".into(),
            Tok::Comma => "','".into(),
            Tok::Amp => "'&'".into(),
            Tok::Dot => "'.'".into(),
            Tok::Colon => "':'".into(),
            Tok::Arrow => "'->'".into(),
            Tok::Op(op) => format!("'{}'", op.symbol()),
        }
    }
}

fn syntax(line: usize, col: usize, msg: impl Into<String>) -> ParseError {
    ParseError::Syntax {
        line,
        col,
        msg: msg.into(),
    }
}

fn lex(line: &str, line_no: usize) -> Result<Vec<(Tok, usize)>, ParseError> {
    let chars: Vec<char> = line.chars().collect();
    let mut out = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let col = i + 1;
        let ch = chars[i];
        match ch {
            ' ' | '\t' => i += 1,
            '(' => {
                out.push((Tok::LParen, col));
                i += 1;
            }
            ')' => {
                out.push((Tok::RParen, col));
                i += 1;
            }
            ',' => {
                out.push((Tok::Comma, col));
                i += 1;
            }
            '&' => {
                out.push((Tok::Amp, col));
                i += 1;
            }
            '.' => {
                out.push((Tok::Dot, col));
                i += 1;
            }
            ':' => {
                out.push((Tok::Colon, col));
                i += 1;
            }
            '=' => {
                out.push((Tok::Op(CmpOp::Eq), col));
                i += 1;
            }
            '!' => {
                if chars.get(i + 1) == Some(&'=') {
                    out.push((Tok::Op(CmpOp::Ne), col));
                    i += 2;
                } else {
                    return Err(syntax(line_no, col, "expected '=' after '!'"));
                }
            }
            '<' => {
                if chars.get(i + 1) == Some(&'=') {
                    out.push((Tok::Op(CmpOp::Le), col));
                    i += 2;
                } else {
                    out.push((Tok::Op(CmpOp::Lt), col));
                    i += 1;
                }
            }
            '>' => {
                if chars.get(i + 1) == Some(&'=') {
                    out.push((Tok::Op(CmpOp::Ge), col));
                    i += 2;
                } else {
                    out.push((Tok::Op(CmpOp::Gt), col));
                    i += 1;
                }
            }
            '-' => {
                if chars.get(i + 1) == Some(&'>') {
                    out.push((Tok::Arrow, col));
                    i += 2;
                } else if chars.get(i + 1).is_some_and(|c| c.is_ascii_digit()) {
                    let start = i;
                    i += 1;
                    while i < chars.len() && chars[i].is_ascii_digit() {
                        i += 1;
                    }
                    let text: String = chars[start..i].iter().collect();
                    let n = text
                        .parse()
                        .map_err(|_| syntax(line_no, col, format!("bad integer {text}")))?;
                    out.push((Tok::Int(n), col));
                } else {
                    return Err(syntax(line_no, col, "expected '->' or a negative integer"));
                }
            }
            '"' => {
                let start = i + 1;
                let mut j = start;
                while j < chars.len() && chars[j] != '"' {
                    j += 1;
                }
                if j == chars.len() {
                    return Err(syntax(line_no, col, "unterminated string"));
                }
                out.push((Tok::Str(chars[start..j].iter().collect()), col));
                i = j + 1;
            }
            c if c.is_ascii_digit() => {
                let start = i;
                while i < chars.len() && chars[i].is_ascii_digit() {
                    i += 1;
                }
                let text: String = chars[start..i].iter().collect();
                let n = text
                    .parse()
                    .map_err(|_| syntax(line_no, col, format!("bad integer {text}")))?;
                out.push((Tok::Int(n), col));
            }
            c if c.is_ascii_alphabetic() || c == '_' => {
                let start = i;
                while i < chars.len()
                    && (chars[i].is_ascii_alphanumeric() || chars[i] == '_')
                {
                    i += 1;
                }
                out.push((Tok::Ident(chars[start..i].iter().collect()), col));
            }
            c => {
                return Err(syntax(line_no, col, format!("unexpected character {c:?}")));
            }
        }
    }
    Ok(out)
}

struct Parser {
    tokens: Vec<(Tok, usize)>,
    pos: usize,
    line: usize,
}

impl Parser {
    fn peek(&self) -> Option<&Tok> {
        self.tokens.get(self.pos).map(|(t, _)| t)
    }

    fn peek_at(&self, ahead: usize) -> Option<&Tok> {
        self.tokens.get(self.pos + ahead).map(|(t, _)| t)
    }

    fn col(&self) -> usize {
        self.tokens
            .get(self.pos)
            .map(|&(_, c)| c)
            .unwrap_or_else(|| self.tokens.last().map(|&(_, c)| c + 1).unwrap_or(1))
    }

    fn next(&mut self) -> Option<Tok> {
        let t = self.tokens.get(self.pos).map(|(t, _)| t.clone());
        if t.is_some() {
            self.pos += 1;
        }
        t
    }

    fn expect(&mut self, want: &Tok, what: &str) -> Result<(), ParseError> {
        let col = self.col();
        match self.next() {
            Some(ref t) if t == want => Ok(()),
            Some(t) => Err(syntax(
                self.line,
                col,
                format!("expected {what}, found {}", t.describe()),
            )),
            None => Err(syntax(self.line, col, format!("expected {what}"))),
        }
    }

    fn constraint(&mut self) -> Result<Constraint, ParseError> {
        let col = self.col();
        let kind = match self.next() {
            Some(Tok::Ident(s)) => s,
            other => {
                return Err(syntax(
                    self.line,
                    col,
                    format!(
                        "expected 'DC' or 'TGD', found {}",
                        other.map_or("end of line".into(), |t| t.describe())
                    ),
                ))
            }
        };
        self.expect(&Tok::Colon, "':'")?;
        let c = match kind.as_str() {
            "DC" => Constraint::Dc(self.dc()?),
            "TGD" => Constraint::Tgd(self.tgd()?),
            other => {
                return Err(syntax(
                    self.line,
                    col,
                    format!("expected 'DC' or 'TGD', found {other}"),
                ))
            }
        };
        if let Some(t) = self.peek() {
            return Err(syntax(
                self.line,
                self.col(),
                format!("trailing {}", t.describe()),
            ));
        }
        Ok(c)
    }

    fn dc(&mut self) -> Result<Dc, ParseError> {
        let atoms = self.conj()?;
        Ok(Dc {
            universal_vars: vars_in_order(&atoms),
            atoms,
        })
    }

    fn tgd(&mut self) -> Result<Tgd, ParseError> {
        // `true ->` is the empty body; `true(` would be an ordinary atom.
        let body = if matches!(self.peek(), Some(Tok::Ident(s)) if s == "true")
            && self.peek_at(1) == Some(&Tok::Arrow)
        {
            self.next();
            Vec::new()
        } else {
            self.relational_conj("TGD body")?
        };
        self.expect(&Tok::Arrow, "'->'")?;

        let mut existential_vars = Vec::new();
        if matches!(self.peek(), Some(Tok::Ident(s)) if s == "EXISTS")
            && self.peek_at(1) != Some(&Tok::LParen)
        {
            self.next();
            loop {
                let col = self.col();
                match self.next() {
                    Some(Tok::Ident(v)) if is_variable(&v) => existential_vars.push(v),
                    other => {
                        return Err(syntax(
                            self.line,
                            col,
                            format!(
                                "expected variable, found {}",
                                other.map_or("end of line".into(), |t| t.describe())
                            ),
                        ))
                    }
                }
                if self.peek() == Some(&Tok::Comma) {
                    self.next();
                } else {
                    break;
                }
            }
            self.expect(&Tok::Dot, "'.'")?;
        }

        let head = self.relational_conj("TGD head")?;
        let universal_vars = {
            let body_atoms: Vec<Atom> = body.iter().cloned().map(Atom::Rel).collect();
            vars_in_order(&body_atoms)
        };
        Ok(Tgd {
            universal_vars,
            existential_vars,
            body,
            head,
        })
    }

    fn conj(&mut self) -> Result<Vec<Atom>, ParseError> {
        let mut atoms = vec![self.atom()?];
        while self.peek() == Some(&Tok::Amp) {
            self.next();
            atoms.push(self.atom()?);
        }
        Ok(atoms)
    }

    /// A conjunction where comparisons are not allowed.
    fn relational_conj(&mut self, what: &str) -> Result<Vec<RelAtom>, ParseError> {
        let col = self.col();
        let atoms = self.conj()?;
        atoms
            .into_iter()
            .map(|a| match a {
                Atom::Rel(r) => Ok(r),
                Atom::Cmp(c) => Err(syntax(
                    self.line,
                    col,
                    format!("comparison {c} is not allowed in a {what}"),
                )),
            })
            .collect()
    }

    fn atom(&mut self) -> Result<Atom, ParseError> {
        if matches!(self.peek(), Some(Tok::Ident(_)))
            && self.peek_at(1) == Some(&Tok::LParen)
        {
            let name = match self.next() {
                Some(Tok::Ident(s)) => s,
                _ => unreachable!(),
            };
            self.next(); // '('
            let mut terms = vec![self.term()?];
            while self.peek() == Some(&Tok::Comma) {
                self.next();
                terms.push(self.term()?);
            }
            self.expect(&Tok::RParen, "')'")?;
            return Ok(Atom::Rel(RelAtom::new(name, terms)));
        }
        let left = self.term()?;
        let col = self.col();
        let op = match self.next() {
            Some(Tok::Op(op)) => op,
            other => {
                return Err(syntax(
                    self.line,
                    col,
                    format!(
                        "expected comparison operator, found {}",
                        other.map_or("end of line".into(), |t| t.describe())
                    ),
                ))
            }
        };
        let right = self.term()?;
        Ok(Atom::Cmp(CmpAtom { op, left, right }))
    }

    fn term(&mut self) -> Result<Term, ParseError> {
        let col = self.col();
        match self.next() {
            Some(Tok::Ident(v)) if is_variable(&v) => Ok(Term::Var(v)),
            Some(Tok::Ident(v)) => Err(syntax(
                self.line,
                col,
                format!("{v} is not a variable (variables start lowercase); quote text constants"),
            )),
            Some(Tok::Int(n)) => Ok(Term::Const(Value::Int(n))),
            Some(Tok::Str(s)) => Ok(Term::Const(Value::Text(s))),
            other => Err(syntax(
                self.line,
                col,
                format!(
                    "expected term, found {}",
                    other.map_or("end of line".into(), |t| t.describe())
                ),
            )),
        }
    }
}

fn is_variable(s: &str) -> bool {
    let mut chars = s.chars();
    chars.next().is_some_and(|c| c.is_ascii_lowercase())
        && chars.all(|c| c.is_ascii_alphanumeric() || c == '_')
}

fn validate(
    constraint: &Constraint,
    line: usize,
    schema: &Schema,
) -> Result<(), ParseError> {
    let rel_atoms: Vec<&RelAtom> = match constraint {
        Constraint::Dc(dc) => dc.relational_atoms().collect(),
        Constraint::Tgd(tgd) => tgd.body.iter().chain(&tgd.head).collect(),
    };
    for atom in &rel_atoms {
        let expected = if atom.relation == COM {
            1
        } else {
            schema
                .get(&atom.relation)
                .ok_or_else(|| ParseError::UnknownRelation {
                    line,
                    relation: atom.relation.clone(),
                })?
                .arity()
        };
        if atom.terms.len() != expected {
            return Err(ParseError::ArityMismatch {
                line,
                relation: atom.relation.clone(),
                expected,
                found: atom.terms.len(),
            });
        }
    }

    match constraint {
        Constraint::Dc(dc) => {
            // Comparison variables must be bound by some relational atom.
            let bound: HashSet<&str> = dc
                .relational_atoms()
                .flat_map(|a| a.vars())
                .collect();
            for cmp in dc.comparison_atoms() {
                for v in cmp.vars() {
                    if !bound.contains(v) {
                        return Err(ParseError::UnsafeVariable {
                            line,
                            var: v.to_owned(),
                            why: "comparison variable does not occur in any relational atom"
                                .into(),
                        });
                    }
                }
            }
        }
        Constraint::Tgd(tgd) => {
            let universal: HashSet<&str> =
                tgd.universal_vars.iter().map(String::as_str).collect();
            let mut existential: HashSet<&str> = HashSet::new();
            for v in &tgd.existential_vars {
                if universal.contains(v.as_str()) {
                    return Err(ParseError::UnsafeVariable {
                        line,
                        var: v.clone(),
                        why: "declared existential but already bound by the body".into(),
                    });
                }
                if !existential.insert(v) {
                    return Err(ParseError::UnsafeVariable {
                        line,
                        var: v.clone(),
                        why: "declared existential twice".into(),
                    });
                }
            }
            let head_vars: HashSet<&str> =
                tgd.head.iter().flat_map(|a| a.vars()).collect();
            for v in &head_vars {
                if !universal.contains(v) && !existential.contains(v) {
                    return Err(ParseError::UnsafeVariable {
                        line,
                        var: (*v).to_owned(),
                        why: "head variable is neither universal nor existential".into(),
                    });
                }
            }
            for v in &tgd.existential_vars {
                if !head_vars.contains(v.as_str()) {
                    return Err(ParseError::UnsafeVariable {
                        line,
                        var: v.clone(),
                        why: "existential variable does not occur in the head".into(),
                    });
                }
            }
        }
    }
    Ok(())
}
