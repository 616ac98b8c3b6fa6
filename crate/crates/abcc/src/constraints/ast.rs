//! Constraint syntax trees.
//!
//! Constraints speak about a database extended with the reserved unary
//! relation `Com` holding the committee. A [`Tgd`] demands that every match
//! of its body extends to a match of its head; a [`Dc`] forbids any match of
//! its atom conjunction.

use std::fmt;

use crate::relational::{Value, COM};

/// A variable or a constant.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Term {
    Var(String),
    Const(Value),
}

impl Term {
    pub fn var(name: impl Into<String>) -> Self {
        Term::Var(name.into())
    }

    pub fn as_var(&self) -> Option<&str> {
        match self {
            Term::Var(v) => Some(v),
            Term::Const(_) => None,
        }
    }
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Term::Var(v) => write!(f, "{v}"),
            Term::Const(Value::Int(n)) => write!(f, "{n}"),
            Term::Const(Value::Text(s)) => write!(f, "\"{s}\""),
        }
    }
}

/// Comparison operator of a comparison atom.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum CmpOp {
    Eq,
    Ne,
    Lt,
    Le,
    Gt,
    Ge,
}

impl CmpOp {
    pub fn symbol(self) -> &'static str {
        match self {
            CmpOp::Eq => "=",
            CmpOp::Ne => "!=",
            CmpOp::Lt => "<",
            CmpOp::Le => "<=",
            CmpOp::Gt => ">",
            CmpOp::Ge => ">=",
        }
    }

    /// Order comparisons are defined on integers only; `=` and `!=` apply to
    /// any pair of values.
    pub fn is_order(self) -> bool {
        matches!(self, CmpOp::Lt | CmpOp::Le | CmpOp::Gt | CmpOp::Ge)
    }
}

impl fmt::Display for CmpOp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.symbol())
    }
}

/// A relational atom `R(t1, ..., tn)`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct RelAtom {
    pub relation: String,
    pub terms: Vec<Term>,
}

impl RelAtom {
    pub fn new(relation: impl Into<String>, terms: Vec<Term>) -> Self {
        RelAtom {
            relation: relation.into(),
            terms,
        }
    }

    pub fn is_com(&self) -> bool {
        self.relation == COM
    }

    pub fn vars(&self) -> impl Iterator<Item = &str> {
        self.terms.iter().filter_map(Term::as_var)
    }
}

impl fmt::Display for RelAtom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}(", self.relation)?;
        for (i, t) in self.terms.iter().enumerate() {
            if i > 0 {
                f.write_str(",")?;
            }
            write!(f, "{t}")?;
        }
        f.write_str(")")
    }
}

/// A comparison atom `left op right`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct CmpAtom {
    pub op: CmpOp,
    pub left: Term,
    pub right: Term,
}

impl CmpAtom {
    pub fn vars(&self) -> impl Iterator<Item = &str> {
        self.left.as_var().into_iter().chain(self.right.as_var())
    }
}

impl fmt::Display for CmpAtom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {} {}", self.left, self.op, self.right)
    }
}

/// Either kind of atom, in written order inside a conjunction.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Atom {
    Rel(RelAtom),
    Cmp(CmpAtom),
}

impl Atom {
    pub fn vars(&self) -> Box<dyn Iterator<Item = &str> + '_> {
        match self {
            Atom::Rel(a) => Box::new(a.vars()),
            Atom::Cmp(a) => Box::new(a.vars()),
        }
    }
}

impl fmt::Display for Atom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Atom::Rel(a) => write!(f, "{a}"),
            Atom::Cmp(a) => write!(f, "{a}"),
        }
    }
}

/// A tuple-generating dependency: whenever the body matches, the head must
/// match for some choice of the existential variables.
///
/// Body and head hold relational atoms only (including `Com` atoms); the
/// parser rejects comparisons in either. `universal_vars` lists the body
/// variables in first-appearance order, `existential_vars` the declared head
/// variables; the two sets are disjoint and every head variable belongs to
/// one of them.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Tgd {
    pub universal_vars: Vec<String>,
    pub existential_vars: Vec<String>,
    pub body: Vec<RelAtom>,
    pub head: Vec<RelAtom>,
}

impl fmt::Display for Tgd {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("TGD: ")?;
        if self.body.is_empty() {
            f.write_str("true")?;
        } else {
            for (i, a) in self.body.iter().enumerate() {
                if i > 0 {
                    f.write_str(" & ")?;
                }
                write!(f, "{a}")?;
            }
        }
        f.write_str(" -> ")?;
        if !self.existential_vars.is_empty() {
            f.write_str("EXISTS ")?;
            for (i, v) in self.existential_vars.iter().enumerate() {
                if i > 0 {
                    f.write_str(",")?;
                }
                f.write_str(v)?;
            }
            f.write_str(" . ")?;
        }
        for (i, a) in self.head.iter().enumerate() {
            if i > 0 {
                f.write_str(" & ")?;
            }
            write!(f, "{a}")?;
        }
        Ok(())
    }
}

/// A denial constraint: the conjunction of `atoms` must have no match.
///
/// `universal_vars` lists all variables in first-appearance order. Every
/// comparison variable also occurs in some relational atom.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Dc {
    pub universal_vars: Vec<String>,
    pub atoms: Vec<Atom>,
}

impl Dc {
    pub fn relational_atoms(&self) -> impl Iterator<Item = &RelAtom> {
        self.atoms.iter().filter_map(|a| match a {
            Atom::Rel(r) => Some(r),
            Atom::Cmp(_) => None,
        })
    }

    pub fn comparison_atoms(&self) -> impl Iterator<Item = &CmpAtom> {
        self.atoms.iter().filter_map(|a| match a {
            Atom::Cmp(c) => Some(c),
            Atom::Rel(_) => None,
        })
    }
}

impl fmt::Display for Dc {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("DC: ")?;
        for (i, a) in self.atoms.iter().enumerate() {
            if i > 0 {
                f.write_str(" & ")?;
            }
            write!(f, "{a}")?;
        }
        Ok(())
    }
}

/// One constraint of either kind.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Constraint {
    Tgd(Tgd),
    Dc(Dc),
}

impl fmt::Display for Constraint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Constraint::Tgd(t) => write!(f, "{t}"),
            Constraint::Dc(d) => write!(f, "{d}"),
        }
    }
}

/// Ordered list of constraints, in source order.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ConstraintSet {
    pub constraints: Vec<Constraint>,
}

impl ConstraintSet {
    pub fn new(constraints: Vec<Constraint>) -> Self {
        ConstraintSet { constraints }
    }

    pub fn is_empty(&self) -> bool {
        self.constraints.is_empty()
    }

    pub fn len(&self) -> usize {
        self.constraints.len()
    }

    pub fn tgds(&self) -> impl Iterator<Item = &Tgd> {
        self.constraints.iter().filter_map(|c| match c {
            Constraint::Tgd(t) => Some(t),
            Constraint::Dc(_) => None,
        })
    }

    pub fn dcs(&self) -> impl Iterator<Item = &Dc> {
        self.constraints.iter().filter_map(|c| match c {
            Constraint::Dc(d) => Some(d),
            Constraint::Tgd(_) => None,
        })
    }
}

/// Renders a constraint in the concrete syntax accepted by the parser.
pub fn pretty_print(constraint: &Constraint) -> String {
    constraint.to_string()
}

/// Variables of `atoms` in first-appearance order, without duplicates.
pub(crate) fn vars_in_order<'a, I>(atoms: I) -> Vec<String>
where
    I: IntoIterator<Item = &'a Atom>,
{
    let mut seen = std::collections::HashSet::new();
    let mut out = Vec::new();
    for atom in atoms {
        for v in atom.vars() {
            if seen.insert(v.to_owned()) {
                out.push(v.to_owned());
            }
        }
    }
    out
}
