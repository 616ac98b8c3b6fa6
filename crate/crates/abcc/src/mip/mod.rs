//! Mixed-integer model of constrained committee selection.
//!
//! [`MipModel`] is a plain linear model: named typed variables, linear rows,
//! and a maximization objective, all with exact rational coefficients.
//! [`encode`](encode::encode) builds one from an election, a scoring rule,
//! and a constraint set.

mod encode;

pub use encode::{encode, EncodeError, EncodedModel, EncoderOptions};

use std::collections::HashMap;

use num::{BigInt, BigRational, Zero};
use serde::Serialize;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VarKind {
    Binary,
    Integer,
    Continuous,
}

#[derive(Debug, Clone)]
pub struct Variable {
    pub name: String,
    pub kind: VarKind,
    pub lower: BigRational,
    pub upper: BigRational,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RelOp {
    Le,
    Ge,
    Eq,
}

impl RelOp {
    pub fn symbol(self) -> &'static str {
        match self {
            RelOp::Le => "<=",
            RelOp::Ge => ">=",
            RelOp::Eq => "=",
        }
    }
}

/// `sum of coeff * var  op  rhs`. Terms may be empty; such rows are
/// vacuously true or false depending on `rhs`.
#[derive(Debug, Clone)]
pub struct LinConstraint {
    pub terms: Vec<(usize, BigRational)>,
    pub op: RelOp,
    pub rhs: BigRational,
}

/// Model size counters. `nonzeros` counts constraint-matrix entries only.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct ModelStats {
    pub variables: usize,
    pub binaries: usize,
    pub integers: usize,
    pub continuous: usize,
    pub constraints: usize,
    pub nonzeros: usize,
}

#[derive(Debug, Clone, Default)]
pub struct MipModel {
    vars: Vec<Variable>,
    by_name: HashMap<String, usize>,
    constraints: Vec<LinConstraint>,
    /// Maximization terms, one per variable at most.
    objective: Vec<(usize, BigRational)>,
}

impl MipModel {
    pub fn new() -> Self {
        MipModel::default()
    }

    /// Adds a variable and returns its index.
    ///
    /// Panics on a duplicate name; callers mint names through
    /// [`fresh_name`](MipModel::fresh_name).
    pub fn add_var(
        &mut self,
        name: impl Into<String>,
        kind: VarKind,
        lower: BigRational,
        upper: BigRational,
    ) -> usize {
        let name = name.into();
        let id = self.vars.len();
        let prev = self.by_name.insert(name.clone(), id);
        assert!(prev.is_none(), "duplicate variable name {name}");
        self.vars.push(Variable {
            name,
            kind,
            lower,
            upper,
        });
        id
    }

    pub fn add_binary(&mut self, name: impl Into<String>) -> usize {
        self.add_var(
            name,
            VarKind::Binary,
            BigRational::zero(),
            BigRational::from_integer(BigInt::from(1)),
        )
    }

    /// Turns `base` into a name no existing variable uses, keeping `base`
    /// itself whenever it is free.
    pub fn fresh_name(&self, base: &str) -> String {
        if !self.by_name.contains_key(base) {
            return base.to_owned();
        }
        let mut n = 2usize;
        loop {
            let candidate = format!("{base}_{n}");
            if !self.by_name.contains_key(&candidate) {
                return candidate;
            }
            n += 1;
        }
    }

    pub fn add_constraint(&mut self, terms: Vec<(usize, BigRational)>, op: RelOp, rhs: BigRational) {
        debug_assert!(terms.iter().all(|&(v, _)| v < self.vars.len()));
        self.constraints.push(LinConstraint { terms, op, rhs });
    }

    /// Adds `weight * var` to the maximization objective.
    pub fn add_objective_term(&mut self, var: usize, weight: BigRational) {
        self.objective.push((var, weight));
    }

    pub fn vars(&self) -> &[Variable] {
        &self.vars
    }

    pub fn var(&self, id: usize) -> &Variable {
        &self.vars[id]
    }

    pub fn lookup(&self, name: &str) -> Option<usize> {
        self.by_name.get(name).copied()
    }

    pub fn constraints(&self) -> &[LinConstraint] {
        &self.constraints
    }

    pub fn objective(&self) -> &[(usize, BigRational)] {
        &self.objective
    }

    pub fn stats(&self) -> ModelStats {
        let mut binaries = 0;
        let mut integers = 0;
        let mut continuous = 0;
        for v in &self.vars {
            match v.kind {
                VarKind::Binary => binaries += 1,
                VarKind::Integer => integers += 1,
                VarKind::Continuous => continuous += 1,
            }
        }
        ModelStats {
            variables: self.vars.len(),
            binaries,
            integers,
            continuous,
            constraints: self.constraints.len(),
            nonzeros: self.constraints.iter().map(|c| c.terms.len()).sum(),
        }
    }
}
