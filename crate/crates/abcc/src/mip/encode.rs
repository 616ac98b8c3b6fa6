//! Builds the selection model.
//!
//! Selection variables `z_<cand>` are binary. Each voter block links an
//! integer selected-count `u` to its approved `z` variables and bounds a
//! continuous satisfaction variable `s` by the rule value at every possible
//! count through an exact absolute-value gadget, so maximizing the weighted
//! sum of `s` maximizes the committee score. Dependencies and denials are
//! grounded against the database and enter as rows over `z` plus indicator
//! binaries.
//!
//! Three independent model-shrinking switches: `group` merges voters with
//! identical approval sets into one weighted block, `prune` caps the count
//! range of a block at what the committee size and ballot allow, and
//! `contract` replaces bundles of same-size denial rows by hyperclique rows
//! that accept exactly the same selections.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::time::Instant;

use num::{BigInt, BigRational, One, Zero};
use serde::Serialize;
use thiserror::Error;

use crate::constraints::{com_only_vars, com_values, split_com, ConstraintSet, Dc, Tgd};
use crate::constraints::{enumerate_over, CmpAtom, RelAtom};
use crate::election::{rule_value, Election, ElectionError, ScoringRule};
use crate::relational::{ground_conjunction, Assignment, Database, RelationalError, Value};

use super::{MipModel, RelOp, VarKind};

#[derive(Debug, Error)]
pub enum EncodeError {
    #[error(transparent)]
    Relational(#[from] RelationalError),
    #[error(transparent)]
    Election(#[from] ElectionError),
    #[error("malformed constraint: {0}")]
    Malformed(String),
}

/// Model-shrinking switches; all on by default.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct EncoderOptions {
    pub group: bool,
    pub prune: bool,
    pub contract: bool,
}

impl Default for EncoderOptions {
    fn default() -> Self {
        EncoderOptions {
            group: true,
            prune: true,
            contract: true,
        }
    }
}

impl EncoderOptions {
    pub fn none() -> Self {
        EncoderOptions {
            group: false,
            prune: false,
            contract: false,
        }
    }
}

/// A built model plus everything needed to interpret or rebuild it.
#[derive(Debug, Clone)]
pub struct EncodedModel {
    pub model: MipModel,
    /// Variable index of `z_j` per candidate, in declaration order.
    pub z_vars: Vec<usize>,
    pub options: EncoderOptions,
    /// Voter blocks after grouping.
    pub num_groups: usize,
    pub ground_ms: u128,
    pub build_ms: u128,
}

fn rat(n: i64) -> BigRational {
    BigRational::from_integer(BigInt::from(n))
}

fn sanitize(s: &str) -> String {
    s.chars()
        .map(|c| if c.is_ascii_alphanumeric() || c == '_' { c } else { '_' })
        .collect()
}

struct Group {
    label: String,
    approvals: Vec<usize>,
    weight: i64,
}

fn build_groups(election: &Election, group: bool) -> Vec<Group> {
    if group {
        let mut by_ballot: BTreeMap<BTreeSet<usize>, i64> = BTreeMap::new();
        for voter in election.voters() {
            *by_ballot.entry(voter.approvals.clone()).or_insert(0) += 1;
        }
        by_ballot
            .into_iter()
            .enumerate()
            .map(|(idx, (approvals, weight))| Group {
                label: format!("g{idx}"),
                approvals: approvals.into_iter().collect(),
                weight,
            })
            .collect()
    } else {
        election
            .voters()
            .iter()
            .map(|voter| Group {
                label: sanitize(&voter.id),
                approvals: voter.approvals.iter().copied().collect(),
                weight: 1,
            })
            .collect()
    }
}

/// One grounded premise of a dependency: the committee members the premise
/// needs, and the alternative member sets that would satisfy its head.
#[derive(Debug, PartialEq, Eq, PartialOrd, Ord)]
struct AlphaGround {
    premise: Vec<usize>,
    exts: Vec<Vec<usize>>,
}

#[derive(Debug, Default)]
struct TgdGround {
    alphas: Vec<AlphaGround>,
}

#[derive(Debug, Default)]
struct DcGround {
    /// A grounding with no committee members at all: the database alone
    /// violates the denial.
    infeasible: bool,
    conflicts: Vec<Vec<usize>>,
}

fn members_in(
    values: &[Value],
    index: &HashMap<&Value, usize>,
) -> Option<Vec<usize>> {
    let mut out = BTreeSet::new();
    for v in values {
        out.insert(*index.get(v)?);
    }
    Some(out.into_iter().collect())
}

fn bound_com_values(terms: &[crate::constraints::Term], a: &Assignment) -> Result<Vec<Value>, EncodeError> {
    com_values(terms, a).ok_or_else(|| {
        EncodeError::Malformed("committee atom variable left unbound by grounding".into())
    })
}

fn ground_tgd(
    db: &Database,
    candidates: &[Value],
    index: &HashMap<&Value, usize>,
    tgd: &Tgd,
) -> Result<TgdGround, EncodeError> {
    let body = split_com(&tgd.body);
    let head = split_com(&tgd.head);
    let domain: Vec<&Value> = candidates.iter().collect();
    let body_only = com_only_vars(&body.com_terms, &body.rel);
    // Premise members range over the candidate pool, not the database.
    let seeds = enumerate_over(&Assignment::new(), &body_only, &domain);
    let mut dedup: BTreeSet<AlphaGround> = BTreeSet::new();
    for seed in &seeds {
        for alpha in ground_conjunction(db, &body.rel, &[], seed)? {
            let vals = bound_com_values(&body.com_terms, &alpha)?;
            // A premise mentioning a non-candidate can never fire.
            let Some(premise) = members_in(&vals, index) else {
                continue;
            };
            let head_only: Vec<String> = com_only_vars(&head.com_terms, &head.rel)
                .into_iter()
                .filter(|v| alpha.get(v).is_none())
                .collect();
            let mut exts: BTreeSet<Vec<usize>> = BTreeSet::new();
            for hseed in enumerate_over(&alpha, &head_only, &domain) {
                for beta in ground_conjunction(db, &head.rel, &[], &hseed)? {
                    let hvals = bound_com_values(&head.com_terms, &beta)?;
                    if let Some(ext) = members_in(&hvals, index) {
                        exts.insert(ext);
                    }
                }
            }
            dedup.insert(AlphaGround {
                premise,
                exts: exts.into_iter().collect(),
            });
        }
    }
    Ok(TgdGround {
        alphas: dedup.into_iter().collect(),
    })
}

fn ground_dc(
    db: &Database,
    candidates: &[Value],
    index: &HashMap<&Value, usize>,
    dc: &Dc,
) -> Result<DcGround, EncodeError> {
    let rel_atoms: Vec<RelAtom> = dc.relational_atoms().cloned().collect();
    let cmp_atoms: Vec<CmpAtom> = dc.comparison_atoms().cloned().collect();
    let split = split_com(&rel_atoms);
    let domain: Vec<&Value> = candidates.iter().collect();
    let only = com_only_vars(&split.com_terms, &split.rel);
    let mut ground = DcGround::default();
    let mut dedup: BTreeSet<Vec<usize>> = BTreeSet::new();
    for seed in enumerate_over(&Assignment::new(), &only, &domain) {
        for alpha in ground_conjunction(db, &split.rel, &cmp_atoms, &seed)? {
            let vals = bound_com_values(&split.com_terms, &alpha)?;
            // A conflict mentioning a non-candidate can never materialize.
            let Some(conflict) = members_in(&vals, index) else {
                continue;
            };
            if conflict.is_empty() {
                ground.infeasible = true;
            } else {
                dedup.insert(conflict);
            }
        }
    }
    ground.conflicts = dedup.into_iter().collect();
    Ok(ground)
}

/// Every `r`-subset of `set` (sorted) passes `pred`.
fn all_subsets(set: &[usize], r: usize, pred: &mut dyn FnMut(&[usize]) -> bool) -> bool {
    fn rec(
        set: &[usize],
        r: usize,
        start: usize,
        acc: &mut Vec<usize>,
        pred: &mut dyn FnMut(&[usize]) -> bool,
    ) -> bool {
        if acc.len() == r {
            return pred(acc);
        }
        let need = r - acc.len();
        for i in start..set.len() {
            if set.len() - i < need {
                break;
            }
            acc.push(set[i]);
            let ok = rec(set, r, i + 1, acc, pred);
            acc.pop();
            if !ok {
                return false;
            }
        }
        true
    }
    rec(set, r, 0, &mut Vec::new(), pred)
}

fn insert_sorted(sorted: &[usize], extra: usize) -> Vec<usize> {
    let mut out = Vec::with_capacity(sorted.len() + 1);
    let pos = sorted.partition_point(|&x| x < extra);
    out.extend_from_slice(&sorted[..pos]);
    out.push(extra);
    out.extend_from_slice(&sorted[pos..]);
    out
}

/// Covers the `q`-uniform hypergraph `edges` by hypercliques: every returned
/// vertex set has all of its `q`-subsets among `edges`, and every edge is a
/// subset of some returned set. Deterministic.
fn hyperclique_cover(edges: &[Vec<usize>], q: usize) -> Vec<Vec<usize>> {
    let edge_set: BTreeSet<&[usize]> = edges.iter().map(|e| e.as_slice()).collect();
    let vertices: BTreeSet<usize> = edges.iter().flatten().copied().collect();
    let mut uncovered: Vec<bool> = vec![true; edges.len()];
    let mut out = Vec::new();
    while uncovered.iter().any(|&u| u) {
        let mut deg: BTreeMap<usize, usize> = BTreeMap::new();
        for (i, e) in edges.iter().enumerate() {
            if uncovered[i] {
                for &v in e {
                    *deg.entry(v).or_insert(0) += 1;
                }
            }
        }
        // Max uncovered degree, smallest vertex on ties.
        let (&vstar, _) = deg
            .iter()
            .max_by(|a, b| a.1.cmp(b.1).then(b.0.cmp(a.0)))
            .expect("uncovered edge exists");
        let seed = edges
            .iter()
            .enumerate()
            .find(|(i, e)| uncovered[*i] && e.contains(&vstar))
            .expect("vstar has an uncovered edge")
            .1;
        let mut clique: Vec<usize> = seed.clone();
        // Grow keeps the invariant that every q-subset of `clique` is an
        // edge; adding w needs every (q-1)-subset to close with w.
        for &w in &vertices {
            if clique.binary_search(&w).is_ok() {
                continue;
            }
            let closes = all_subsets(&clique, q - 1, &mut |s| {
                edge_set.contains(insert_sorted(s, w).as_slice())
            });
            if closes {
                clique = insert_sorted(&clique, w);
            }
        }
        for (i, e) in edges.iter().enumerate() {
            if uncovered[i] && e.iter().all(|v| clique.binary_search(v).is_ok()) {
                uncovered[i] = false;
            }
        }
        out.push(clique);
    }
    out
}

fn emit_tgd(model: &mut MipModel, z_vars: &[usize], idx: usize, ground: &TgdGround) {
    let one = BigRational::one();
    let mut a_counter = 0usize;
    let mut b_counter = 0usize;
    for alpha in &ground.alphas {
        let premise_terms = || -> Vec<(usize, BigRational)> {
            alpha.premise.iter().map(|&j| (z_vars[j], one.clone())).collect()
        };
        if alpha.exts.is_empty() {
            if alpha.premise.is_empty() {
                // The database alone fires the premise and nothing can
                // satisfy the head.
                model.add_constraint(Vec::new(), RelOp::Ge, one.clone());
            } else {
                // The premise must never fire.
                model.add_constraint(
                    premise_terms(),
                    RelOp::Le,
                    rat(alpha.premise.len() as i64 - 1),
                );
            }
            continue;
        }
        let a_name = model.fresh_name(&format!("tgd{idx}_a{a_counter}"));
        a_counter += 1;
        let b_alpha = if alpha.premise.is_empty() {
            // Premise holds outright; the indicator is pinned on.
            model.add_var(a_name, VarKind::Binary, one.clone(), one.clone())
        } else {
            let b = model.add_binary(a_name);
            let n = rat(alpha.premise.len() as i64);
            // b = 1 exactly when all premise members are selected.
            let mut lo = premise_terms();
            lo.push((b, -n.clone()));
            model.add_constraint(lo, RelOp::Ge, BigRational::zero());
            let mut hi = premise_terms();
            hi.push((b, -one.clone()));
            model.add_constraint(hi, RelOp::Le, n - one.clone());
            b
        };
        let mut covering: Vec<(usize, BigRational)> = Vec::new();
        for ext in &alpha.exts {
            let b_name = model.fresh_name(&format!("tgd{idx}_b{b_counter}"));
            b_counter += 1;
            let b_ext = if ext.is_empty() {
                // Head witness needs no committee members; always available.
                model.add_var(b_name, VarKind::Binary, one.clone(), one.clone())
            } else {
                let b = model.add_binary(b_name);
                // b = 1 only if all witness members are selected.
                let mut row: Vec<(usize, BigRational)> =
                    ext.iter().map(|&j| (z_vars[j], one.clone())).collect();
                row.push((b, -rat(ext.len() as i64)));
                model.add_constraint(row, RelOp::Ge, BigRational::zero());
                b
            };
            covering.push((b_ext, one.clone()));
        }
        // A fired premise needs at least one available witness.
        covering.push((b_alpha, -one.clone()));
        model.add_constraint(covering, RelOp::Ge, BigRational::zero());
    }
}

fn emit_dc(
    model: &mut MipModel,
    z_vars: &[usize],
    ground: &DcGround,
    contract: bool,
) {
    let one = BigRational::one();
    if ground.infeasible {
        model.add_constraint(Vec::new(), RelOp::Ge, one.clone());
    }
    if ground.conflicts.is_empty() {
        return;
    }
    let row = |model: &mut MipModel, members: &[usize], cap: i64| {
        let terms: Vec<(usize, BigRational)> =
            members.iter().map(|&j| (z_vars[j], one.clone())).collect();
        model.add_constraint(terms, RelOp::Le, rat(cap));
    };
    if !contract {
        for conflict in &ground.conflicts {
            row(model, conflict, conflict.len() as i64 - 1);
        }
        return;
    }
    let q = ground.conflicts.iter().map(|c| c.len()).max().unwrap();
    let edges: Vec<Vec<usize>> = ground
        .conflicts
        .iter()
        .filter(|c| c.len() == q)
        .cloned()
        .collect();
    for clique in hyperclique_cover(&edges, q) {
        row(model, &clique, q as i64 - 1);
    }
    for conflict in ground.conflicts.iter().filter(|c| c.len() < q) {
        row(model, conflict, conflict.len() as i64 - 1);
    }
}

/// Encodes the full selection problem: base scoring model plus one block of
/// rows per constraint.
pub fn encode(
    db: &Database,
    election: &Election,
    rule: &ScoringRule,
    gamma: &ConstraintSet,
    options: EncoderOptions,
) -> Result<EncodedModel, EncodeError> {
    let candidates = election.candidates();
    let index: HashMap<&Value, usize> = candidates
        .iter()
        .enumerate()
        .map(|(i, c)| (c, i))
        .collect();

    let ground_start = Instant::now();
    let mut tgd_grounds = Vec::new();
    for tgd in gamma.tgds() {
        tgd_grounds.push(ground_tgd(db, candidates, &index, tgd)?);
    }
    let mut dc_grounds = Vec::new();
    for dc in gamma.dcs() {
        dc_grounds.push(ground_dc(db, candidates, &index, dc)?);
    }
    let ground_ms = ground_start.elapsed().as_millis();

    let build_start = Instant::now();
    let k = election.committee_size();
    let one = BigRational::one();
    let groups = build_groups(election, options.group);

    let mut model = MipModel::new();
    let z_vars: Vec<usize> = candidates
        .iter()
        .map(|c| {
            let name = model.fresh_name(&format!("z_{}", sanitize(&c.to_string())));
            model.add_binary(name)
        })
        .collect();
    model.add_constraint(
        z_vars.iter().map(|&z| (z, one.clone())).collect(),
        RelOp::Eq,
        rat(k as i64),
    );

    // Strictly larger than any single voter contribution.
    let mut big_m = BigRational::zero();
    for g in &groups {
        let v = rule_value(rule, k, g.approvals.len())?;
        if v > big_m {
            big_m = v;
        }
    }
    big_m += one.clone();

    let k1 = rat(k as i64 + 1);
    for g in &groups {
        let y = g.approvals.len();
        let u_max = k.min(y);
        let range_max = if options.prune { u_max } else { k };
        let u_name = model.fresh_name(&format!("u_{}", g.label));
        let u = model.add_var(u_name, VarKind::Integer, BigRational::zero(), rat(u_max as i64));
        let s_name = model.fresh_name(&format!("s_{}", g.label));
        let s = model.add_var(s_name, VarKind::Continuous, BigRational::zero(), big_m.clone());
        // u counts selected approved candidates.
        let mut link: Vec<(usize, BigRational)> =
            g.approvals.iter().map(|&j| (z_vars[j], one.clone())).collect();
        link.push((u, -one.clone()));
        model.add_constraint(link, RelOp::Eq, BigRational::zero());
        for kp in 0..=range_max {
            let b_name = model.fresh_name(&format!("abs_b_{}_{kp}", g.label));
            let b = model.add_binary(b_name);
            let tp_name = model.fresh_name(&format!("abs_tp_{}_{kp}", g.label));
            let tp = model.add_var(tp_name, VarKind::Integer, BigRational::zero(), k1.clone());
            let tm_name = model.fresh_name(&format!("abs_tm_{}_{kp}", g.label));
            let tm = model.add_var(tm_name, VarKind::Integer, BigRational::zero(), k1.clone());
            // tp - tm = kp - u, with b picking the sign, so tp + tm = |kp - u|.
            model.add_constraint(
                vec![(tp, one.clone()), (tm, -one.clone()), (u, one.clone())],
                RelOp::Eq,
                rat(kp as i64),
            );
            model.add_constraint(
                vec![(tp, one.clone()), (b, -k1.clone())],
                RelOp::Le,
                BigRational::zero(),
            );
            model.add_constraint(
                vec![(tm, one.clone()), (b, k1.clone())],
                RelOp::Le,
                k1.clone(),
            );
            // s is capped by the rule value at kp unless u differs from kp.
            model.add_constraint(
                vec![(s, one.clone()), (tp, -big_m.clone()), (tm, -big_m.clone())],
                RelOp::Le,
                rule_value(rule, kp, y)?,
            );
        }
        model.add_objective_term(s, rat(g.weight));
    }

    for (idx, ground) in tgd_grounds.iter().enumerate() {
        emit_tgd(&mut model, &z_vars, idx, ground);
    }
    for ground in &dc_grounds {
        emit_dc(&mut model, &z_vars, ground, options.contract);
    }
    let build_ms = build_start.elapsed().as_millis();

    Ok(EncodedModel {
        model,
        z_vars,
        options,
        num_groups: groups.len(),
        ground_ms,
        build_ms,
    })
}
