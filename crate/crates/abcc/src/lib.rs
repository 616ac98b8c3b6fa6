//! Approval-based committee selection under relational constraints.
//!
//! A committee of `k` candidates is chosen from an approval profile, subject
//! to constraints that the selection must satisfy *together with* a relational
//! database describing the candidates. Constraints come in two forms:
//! tuple-generating dependencies (every match of a body pattern must extend to
//! a head pattern) and denial constraints (a pattern that must never match).
//! Both may mention the reserved unary relation `Com`, which is interpreted as
//! the committee itself.
//!
//! The crate provides:
//!
//! * [`relational`] - values, schemas, databases, key validation, and
//!   conjunctive-pattern grounding;
//! * [`constraints`] - the constraint AST, a line-oriented parser, and the
//!   committee legality checker;
//! * [`election`] - approval profiles and exact rational committee scoring;
//! * [`mip`] - a mixed-integer encoding of the selection problem with
//!   optional model-shrinking transformations;
//! * [`solver`] - an exact branch-and-bound solver over the encoded model and
//!   an LP-format exporter;
//! * [`poly`] - polynomial-time algorithms for recognized constraint shapes
//!   (key-guarded dependency patterns), including a min-cost max-flow
//!   reduction;
//! * [`oracle`] - a brute-force winner finder used as ground truth in tests.

pub mod constraints;
pub mod election;
pub mod mip;
pub mod numfmt;
pub mod oracle;
pub mod poly;
pub mod relational;
pub mod solver;

#[cfg(test)]
pub mod testutil;

pub use constraints::{Atom, CmpOp, Constraint, ConstraintSet, Dc, Term, Tgd};
pub use election::{Committee, Election, ScoringRule, Voter};
pub use relational::{Assignment, Database, Schema, Value};
