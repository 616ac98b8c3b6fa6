//! Grounding of conjunctive patterns against a database.

use std::collections::{HashMap, HashSet};

use crate::constraints::{CmpAtom, CmpOp, RelAtom, Term};
use crate::relational::{Assignment, Database, RelationalError, Value};

/// Computes every extension of `seed` that satisfies all relational atoms in
/// `db` and all comparison atoms.
///
/// `Com` atoms must not appear here; the committee is not a database
/// relation. Every variable of a comparison atom must be bound by the seed or
/// by some relational atom.
///
/// The result is duplicate-free and sorted by the values bound to the
/// variables in first-appearance order over `relational_atoms` then
/// `comparison_atoms`, so the output is independent of join strategy. With no
/// atoms at all the seed itself is the single result.
pub fn ground_conjunction(
    db: &Database,
    relational_atoms: &[RelAtom],
    comparison_atoms: &[CmpAtom],
    seed: &Assignment,
) -> Result<Vec<Assignment>, RelationalError> {
    for atom in relational_atoms {
        let rel = db
            .relation(&atom.relation)
            .ok_or_else(|| RelationalError::UnknownRelation(atom.relation.clone()))?;
        if atom.terms.len() != rel.arity() {
            return Err(RelationalError::ArityMismatch {
                relation: atom.relation.clone(),
                expected: rel.arity(),
                found: atom.terms.len(),
            });
        }
    }

    // Cheapest relations first; ties keep written order.
    let mut order: Vec<usize> = (0..relational_atoms.len()).collect();
    order.sort_by_key(|&i| {
        (
            db.relation(&relational_atoms[i].relation).unwrap().len(),
            i,
        )
    });

    // Slot j of the plan evaluates relational_atoms[order[j]]; each comparison
    // runs at the first slot where all its variables are bound.
    let mut bound: HashSet<&str> = seed.iter().map(|(v, _)| v).collect();
    let mut bound_after: Vec<HashSet<&str>> = Vec::with_capacity(order.len() + 1);
    bound_after.push(bound.clone());
    for &i in &order {
        bound.extend(relational_atoms[i].vars());
        bound_after.push(bound.clone());
    }
    let mut cmp_at: Vec<Vec<&CmpAtom>> = vec![Vec::new(); order.len() + 1];
    for cmp in comparison_atoms {
        let slot = bound_after
            .iter()
            .position(|b| cmp.vars().all(|v| b.contains(v)));
        match slot {
            Some(s) => cmp_at[s].push(cmp),
            None => {
                let var = cmp
                    .vars()
                    .find(|v| !bound.contains(*v))
                    .expect("some variable is unbound")
                    .to_owned();
                return Err(RelationalError::UnboundComparisonVariable(var));
            }
        }
    }

    for cmp in &cmp_at[0] {
        if !eval_cmp(cmp, seed)? {
            return Ok(Vec::new());
        }
    }

    // Hash index per slot on the first statically resolvable position.
    struct Plan<'a> {
        atom: &'a RelAtom,
        tuples: Vec<&'a Vec<Value>>,
        pivot: Option<(usize, HashMap<&'a Value, Vec<&'a Vec<Value>>>)>,
    }
    let mut plan: Vec<Plan> = Vec::with_capacity(order.len());
    for (slot, &i) in order.iter().enumerate() {
        let atom = &relational_atoms[i];
        let tuples: Vec<&Vec<Value>> =
            db.relation(&atom.relation).unwrap().tuples().collect();
        let pivot_pos = atom.terms.iter().position(|t| match t {
            Term::Const(_) => true,
            Term::Var(v) => bound_after[slot].contains(v.as_str()),
        });
        let pivot = pivot_pos.map(|pos| {
            let mut index: HashMap<&Value, Vec<&Vec<Value>>> = HashMap::new();
            for &tuple in &tuples {
                index.entry(&tuple[pos]).or_default().push(tuple);
            }
            (pos, index)
        });
        plan.push(Plan {
            atom,
            tuples,
            pivot,
        });
    }

    let mut results = Vec::new();
    let mut stack: Vec<(usize, Assignment)> = vec![(0, seed.clone())];
    while let Some((slot, partial)) = stack.pop() {
        if slot == plan.len() {
            results.push(partial);
            continue;
        }
        let step = &plan[slot];
        let empty = Vec::new();
        let candidates: &Vec<&Vec<Value>> = match &step.pivot {
            Some((pos, index)) => {
                let want = match &step.atom.terms[*pos] {
                    Term::Const(c) => c,
                    Term::Var(v) => partial.get(v).expect("pivot variable is bound"),
                };
                index.get(want).unwrap_or(&empty)
            }
            None => &step.tuples,
        };
        // Reverse keeps DFS in tuple order; output order is fixed by the
        // final sort regardless.
        'tuple: for &tuple in candidates.iter().rev() {
            let mut ext = partial.clone();
            for (term, value) in step.atom.terms.iter().zip(tuple) {
                match term {
                    Term::Const(c) => {
                        if c != value {
                            continue 'tuple;
                        }
                    }
                    Term::Var(v) => match ext.get(v) {
                        Some(prev) => {
                            if prev != value {
                                continue 'tuple;
                            }
                        }
                        None => ext.bind(v.clone(), value.clone()),
                    },
                }
            }
            for cmp in &cmp_at[slot + 1] {
                match eval_cmp(cmp, &ext) {
                    Ok(true) => {}
                    Ok(false) => continue 'tuple,
                    Err(e) => {
                        return Err(e);
                    }
                }
            }
            stack.push((slot + 1, ext));
        }
    }

    let canonical = canonical_vars(relational_atoms, comparison_atoms);
    results.sort_by_cached_key(|a| {
        canonical
            .iter()
            .map(|v| a.get(v).cloned())
            .collect::<Vec<_>>()
    });
    results.dedup();
    Ok(results)
}

/// Variables in first-appearance order over the atoms.
fn canonical_vars(rel: &[RelAtom], cmp: &[CmpAtom]) -> Vec<String> {
    let mut seen = HashSet::new();
    let mut out = Vec::new();
    let rel_vars = rel.iter().flat_map(|a| a.vars());
    let cmp_vars = cmp.iter().flat_map(|a| a.vars());
    for v in rel_vars.chain(cmp_vars) {
        if seen.insert(v.to_owned()) {
            out.push(v.to_owned());
        }
    }
    out
}

fn resolve<'a>(term: &'a Term, a: &'a Assignment) -> &'a Value {
    match term {
        Term::Const(c) => c,
        Term::Var(v) => a.get(v).expect("comparison variable is bound"),
    }
}

/// Evaluates one comparison under a total assignment of its variables.
/// `=` and `!=` apply to any values; order comparisons need two integers.
pub(crate) fn eval_cmp(cmp: &CmpAtom, a: &Assignment) -> Result<bool, RelationalError> {
    let left = resolve(&cmp.left, a);
    let right = resolve(&cmp.right, a);
    match cmp.op {
        CmpOp::Eq => Ok(left == right),
        CmpOp::Ne => Ok(left != right),
        op => match (left, right) {
            (Value::Int(l), Value::Int(r)) => Ok(match op {
                CmpOp::Lt => l < r,
                CmpOp::Le => l <= r,
                CmpOp::Gt => l > r,
                CmpOp::Ge => l >= r,
                CmpOp::Eq | CmpOp::Ne => unreachable!(),
            }),
            _ => Err(RelationalError::TypeError {
                op: op.symbol().to_owned(),
                left: left.clone(),
                right: right.clone(),
            }),
        },
    }
}
