//! Constraint language: syntax trees, parser, and legality checking.

mod ast;
mod check;
mod parse;

pub use ast::{
    pretty_print, Atom, CmpAtom, CmpOp, Constraint, ConstraintSet, Dc, RelAtom, Term, Tgd,
};
pub use check::{check_constraint, is_legal};
pub use parse::{parse_constraints, parse_line, ParseError};

pub(crate) use check::{com_only_vars, com_values, enumerate_over, split_com};
