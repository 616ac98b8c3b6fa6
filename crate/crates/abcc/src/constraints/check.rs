//! Committee legality checking.
//!
//! A committee `B` satisfies a constraint when the database extended with
//! `Com = B` satisfies it. `Com` atoms are split off and decided against `B`
//! directly; the remaining atoms are grounded against the database. Variables
//! that occur only in `Com` atoms range over `B`, since `Com` holds for no
//! other value.

use std::collections::{BTreeSet, HashSet};

use crate::constraints::ast::{CmpAtom, Constraint, ConstraintSet, Dc, RelAtom, Term, Tgd};
use crate::relational::{
    ground_conjunction, Assignment, Database, RelationalError, Value,
};

/// Non-`Com` atoms of a conjunction plus the terms of its `Com` atoms.
pub(crate) struct ComSplit {
    pub com_terms: Vec<Term>,
    pub rel: Vec<RelAtom>,
}

pub(crate) fn split_com(atoms: &[RelAtom]) -> ComSplit {
    let mut com_terms = Vec::new();
    let mut rel = Vec::new();
    for atom in atoms {
        if atom.is_com() {
            com_terms.push(atom.terms[0].clone());
        } else {
            rel.push(atom.clone());
        }
    }
    ComSplit { com_terms, rel }
}

/// Variables of `com_terms` that no atom in `rel` binds, in first-appearance
/// order. These range over the committee (or candidate set) directly.
pub(crate) fn com_only_vars(com_terms: &[Term], rel: &[RelAtom]) -> Vec<String> {
    let bound: HashSet<&str> = rel.iter().flat_map(|a| a.vars()).collect();
    let mut seen = HashSet::new();
    let mut out = Vec::new();
    for term in com_terms {
        if let Term::Var(v) = term {
            if !bound.contains(v.as_str()) && seen.insert(v.clone()) {
                out.push(v.clone());
            }
        }
    }
    out
}

/// All assignments of values from `domain` to `vars`, extending `base`, in
/// lexicographic order of the chosen values.
pub(crate) fn enumerate_over<'a>(
    base: &Assignment,
    vars: &[String],
    domain: &[&'a Value],
) -> Vec<Assignment> {
    let mut out = vec![base.clone()];
    for var in vars {
        let mut next = Vec::with_capacity(out.len() * domain.len());
        for a in &out {
            for &value in domain {
                let mut ext = a.clone();
                ext.bind(var.clone(), value.clone());
                next.push(ext);
            }
        }
        out = next;
    }
    out
}

/// Resolves the `Com` terms under `a`; `None` when some variable is unbound.
pub(crate) fn com_values(com_terms: &[Term], a: &Assignment) -> Option<Vec<Value>> {
    com_terms
        .iter()
        .map(|t| match t {
            Term::Const(c) => Some(c.clone()),
            Term::Var(v) => a.get(v).cloned(),
        })
        .collect()
}

/// True when `committee` satisfies `constraint` together with `db`.
pub fn check_constraint(
    db: &Database,
    committee: &BTreeSet<Value>,
    constraint: &Constraint,
) -> Result<bool, RelationalError> {
    match constraint {
        Constraint::Dc(dc) => check_dc(db, committee, dc),
        Constraint::Tgd(tgd) => check_tgd(db, committee, tgd),
    }
}

fn check_dc(
    db: &Database,
    committee: &BTreeSet<Value>,
    dc: &Dc,
) -> Result<bool, RelationalError> {
    let rel_atoms: Vec<RelAtom> = dc.relational_atoms().cloned().collect();
    let cmp_atoms: Vec<CmpAtom> = dc.comparison_atoms().cloned().collect();
    let split = split_com(&rel_atoms);

    // A Com constant outside the committee falsifies every grounding.
    for term in &split.com_terms {
        if let Term::Const(c) = term {
            if !committee.contains(c) {
                return Ok(true);
            }
        }
    }

    let members: Vec<&Value> = committee.iter().collect();
    let com_only = com_only_vars(&split.com_terms, &split.rel);
    for seed in enumerate_over(&Assignment::new(), &com_only, &members) {
        for a in ground_conjunction(db, &split.rel, &cmp_atoms, &seed)? {
            let values = com_values(&split.com_terms, &a)
                .expect("all Com variables are bound after grounding");
            if values.iter().all(|v| committee.contains(v)) {
                return Ok(false);
            }
        }
    }
    Ok(true)
}

fn check_tgd(
    db: &Database,
    committee: &BTreeSet<Value>,
    tgd: &Tgd,
) -> Result<bool, RelationalError> {
    let body = split_com(&tgd.body);
    let head = split_com(&tgd.head);

    for term in &body.com_terms {
        if let Term::Const(c) = term {
            if !committee.contains(c) {
                return Ok(true); // premise can never fire
            }
        }
    }

    let members: Vec<&Value> = committee.iter().collect();
    let body_com_only = com_only_vars(&body.com_terms, &body.rel);

    // Existential head variables bound by no head atom other than Com; any
    // committee member witnesses them.
    let existential: HashSet<&str> =
        tgd.existential_vars.iter().map(String::as_str).collect();
    let head_rel_vars: HashSet<&str> = head.rel.iter().flat_map(|a| a.vars()).collect();
    let head_com_free = head.com_terms.iter().any(|t| match t {
        Term::Var(v) => existential.contains(v.as_str()) && !head_rel_vars.contains(v.as_str()),
        Term::Const(_) => false,
    });

    for seed in enumerate_over(&Assignment::new(), &body_com_only, &members) {
        for alpha in ground_conjunction(db, &body.rel, &[], &seed)? {
            let premise = com_values(&body.com_terms, &alpha)
                .expect("all body Com variables are bound");
            if !premise.iter().all(|v| committee.contains(v)) {
                continue;
            }
            let mut satisfied = false;
            for beta in ground_conjunction(db, &head.rel, &[], &alpha)? {
                let ok = head.com_terms.iter().all(|t| match t {
                    Term::Const(c) => committee.contains(c),
                    Term::Var(v) => match beta.get(v) {
                        Some(value) => committee.contains(value),
                        None => true, // Com-only existential, handled below
                    },
                });
                if ok && (!head_com_free || !committee.is_empty()) {
                    satisfied = true;
                    break;
                }
            }
            if !satisfied {
                return Ok(false);
            }
        }
    }
    Ok(true)
}

/// True when `committee` has exactly `k` members and satisfies every
/// constraint of `gamma` together with `db`.
pub fn is_legal(
    db: &Database,
    committee: &BTreeSet<Value>,
    gamma: &ConstraintSet,
    k: usize,
) -> Result<bool, RelationalError> {
    if committee.len() != k {
        return Ok(false);
    }
    for constraint in &gamma.constraints {
        if !check_constraint(db, committee, constraint)? {
            return Ok(false);
        }
    }
    Ok(true)
}
