//! Fast exact algorithms for three narrow constraint shapes under plain
//! approval scoring, plus the matcher that certifies an instance has one of
//! those shapes.
//!
//! The shapes: a single coverage demand `∀x [R(x) -> ∃c S(c,x) & Com(c)]`
//! whose witness relation `S` has its first attribute declared key, two such
//! demands, and the exclusion rule forbidding two members that share their
//! (key-unique) second attribute in a binary relation. Detection is purely
//! syntactic plus a key check over the data; a key that merely happens to
//! hold is not enough, it must be declared.

mod flow;

pub use flow::{min_cost_max_flow, FlowEdge, FlowNetwork, FlowResult, VertexKind};

use std::collections::{BTreeMap, BTreeSet};

use num::{BigInt, BigRational, Zero};
use thiserror::Error;

use crate::constraints::{CmpOp, ConstraintSet, Dc, RelAtom, Term, Tgd};
use crate::election::{Committee, Election};
use crate::relational::{validate_keys, Database, Schema, Value};

#[derive(Debug, Error)]
pub enum PolyError {
    #[error("instance violates the certified pattern: {0}")]
    PatternViolation(String),
}

/// One coverage demand: every value of `unary` must be witnessed by a
/// member holding that value in `binary` (whose first attribute is a key).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SingleTgdPattern {
    pub unary: String,
    pub binary: String,
}

/// Two coverage demands solved jointly through a flow network.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DoubleTgdPattern {
    pub first: SingleTgdPattern,
    pub second: SingleTgdPattern,
}

/// No two members may share the second attribute of `relation`; the first
/// attribute is a key, so each candidate sits in at most one conflict group.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DcKeyPattern {
    pub relation: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum PatternMatch {
    Single(SingleTgdPattern),
    Double(DoubleTgdPattern),
    DcKey(DcKeyPattern),
}

fn match_single_shape(schema: &Schema, tgd: &Tgd) -> Option<SingleTgdPattern> {
    if tgd.body.len() != 1 || tgd.head.len() != 2 || tgd.existential_vars.len() != 1 {
        return None;
    }
    let body = &tgd.body[0];
    if body.is_com() || body.terms.len() != 1 {
        return None;
    }
    let x = body.terms[0].as_var()?;
    let c = tgd.existential_vars[0].as_str();
    if x == c || schema.get(&body.relation)?.arity() != 1 {
        return None;
    }
    let coms: Vec<&RelAtom> = tgd.head.iter().filter(|a| a.is_com()).collect();
    let rest: Vec<&RelAtom> = tgd.head.iter().filter(|a| !a.is_com()).collect();
    if coms.len() != 1 || rest.len() != 1 {
        return None;
    }
    if coms[0].terms != vec![Term::var(c)] {
        return None;
    }
    let witness = rest[0];
    if witness.terms != vec![Term::var(c), Term::var(x)] {
        return None;
    }
    let decl = schema.get(&witness.relation)?;
    if decl.arity() != 2 || !decl.keys.contains(&1) {
        return None;
    }
    Some(SingleTgdPattern {
        unary: body.relation.clone(),
        binary: witness.relation.clone(),
    })
}

fn match_dc_shape(schema: &Schema, dc: &Dc) -> Option<DcKeyPattern> {
    let rel: Vec<&RelAtom> = dc.relational_atoms().collect();
    let cmp: Vec<_> = dc.comparison_atoms().collect();
    if rel.len() != 4 || cmp.len() != 1 {
        return None;
    }
    let coms: Vec<&RelAtom> = rel.iter().copied().filter(|a| a.is_com()).collect();
    let pairs: Vec<&RelAtom> = rel.iter().copied().filter(|a| !a.is_com()).collect();
    if coms.len() != 2 || pairs.len() != 2 {
        return None;
    }
    let c1 = coms[0].terms.first().and_then(Term::as_var)?;
    let c2 = coms[1].terms.first().and_then(Term::as_var)?;
    if coms[0].terms.len() != 1 || coms[1].terms.len() != 1 || c1 == c2 {
        return None;
    }
    if pairs[0].relation != pairs[1].relation {
        return None;
    }
    if pairs[0].terms.len() != 2 || pairs[1].terms.len() != 2 {
        return None;
    }
    let a1 = pairs[0].terms[0].as_var()?;
    let y1 = pairs[0].terms[1].as_var()?;
    let a2 = pairs[1].terms[0].as_var()?;
    let y2 = pairs[1].terms[1].as_var()?;
    if y1 != y2 || y1 == c1 || y1 == c2 {
        return None;
    }
    if !((a1 == c1 && a2 == c2) || (a1 == c2 && a2 == c1)) {
        return None;
    }
    let ne = cmp[0];
    if ne.op != CmpOp::Ne {
        return None;
    }
    let l = ne.left.as_var()?;
    let r = ne.right.as_var()?;
    if !((l == c1 && r == c2) || (l == c2 && r == c1)) {
        return None;
    }
    let decl = schema.get(&pairs[0].relation)?;
    if decl.arity() != 2 || !decl.keys.contains(&1) {
        return None;
    }
    Some(DcKeyPattern {
        relation: pairs[0].relation.clone(),
    })
}

/// Certifies that `gamma` consists exactly of constraints in one of the
/// supported shapes and that every required key holds in `db`. Anything
/// else, including data that breaks a declared key, yields `None`.
pub fn detect_pattern(
    schema: &Schema,
    db: &Database,
    gamma: &ConstraintSet,
) -> Option<PatternMatch> {
    let violations = validate_keys(db, schema).ok()?;
    let clean = |rel: &str| {
        !violations
            .iter()
            .any(|kv| kv.relation == rel && kv.attribute == 1)
    };
    let tgds: Vec<&Tgd> = gamma.tgds().collect();
    let dcs: Vec<&Dc> = gamma.dcs().collect();
    match (tgds.as_slice(), dcs.as_slice()) {
        ([tgd], []) => {
            let p = match_single_shape(schema, tgd)?;
            clean(&p.binary).then_some(PatternMatch::Single(p))
        }
        ([first, second], []) => {
            let first = match_single_shape(schema, first)?;
            let second = match_single_shape(schema, second)?;
            (clean(&first.binary) && clean(&second.binary))
                .then_some(PatternMatch::Double(DoubleTgdPattern { first, second }))
        }
        ([], [dc]) => {
            let p = match_dc_shape(schema, dc)?;
            clean(&p.relation).then_some(PatternMatch::DcKey(p))
        }
        _ => None,
    }
}

/// First-attribute-to-second-attribute map of a binary relation whose first
/// attribute is a key. A repeated first attribute is a pattern violation.
fn key_map(db: &Database, relation: &str) -> Result<BTreeMap<Value, Value>, PolyError> {
    let mut map = BTreeMap::new();
    let Some(rel) = db.relation(relation) else {
        return Ok(map);
    };
    if rel.arity() != 2 {
        return Err(PolyError::PatternViolation(format!(
            "{relation} must be binary"
        )));
    }
    for t in rel.tuples() {
        if map.insert(t[0].clone(), t[1].clone()).is_some() {
            return Err(PolyError::PatternViolation(format!(
                "first attribute of {relation} is not a key: {} repeats",
                t[0]
            )));
        }
    }
    Ok(map)
}

fn unary_values(db: &Database, relation: &str) -> Result<Vec<Value>, PolyError> {
    let Some(rel) = db.relation(relation) else {
        return Ok(Vec::new());
    };
    if rel.arity() != 1 {
        return Err(PolyError::PatternViolation(format!(
            "{relation} must be unary"
        )));
    }
    Ok(rel.tuples().map(|t| t[0].clone()).collect())
}

/// Strictly better candidate under approval counts, ties to the smaller id.
fn beats(election: &Election, a: usize, b: usize) -> bool {
    let (ca, cb) = (election.approval_count(a), election.approval_count(b));
    ca > cb || (ca == cb && election.candidates()[a] < election.candidates()[b])
}

fn group_best(election: &Election, members: &[usize]) -> usize {
    members
        .iter()
        .copied()
        .reduce(|best, next| if beats(election, next, best) { next } else { best })
        .expect("group is non-empty")
}

/// Fills `selected` up to `k` members with the highest-approval remaining
/// candidates, ties to the smaller id.
fn top_up(election: &Election, selected: &mut BTreeSet<usize>, k: usize) {
    let mut rest: Vec<usize> = (0..election.num_candidates())
        .filter(|j| !selected.contains(j))
        .collect();
    rest.sort_by(|&a, &b| {
        election
            .approval_count(b)
            .cmp(&election.approval_count(a))
            .then_with(|| election.candidates()[a].cmp(&election.candidates()[b]))
    });
    for j in rest {
        if selected.len() == k {
            break;
        }
        selected.insert(j);
    }
}

fn av_committee(election: &Election, selected: &BTreeSet<usize>) -> Committee {
    let score: usize = selected.iter().map(|&j| election.approval_count(j)).sum();
    Committee {
        members: election.members_of(selected),
        score: BigRational::from_integer(BigInt::from(score)),
    }
}

/// Greedy optimum for one coverage demand under approval scoring: take the
/// best candidate of every demanded group, then top up freely. `None` means
/// no legal committee exists.
pub fn greedy_single_tgd(
    election: &Election,
    db: &Database,
    pattern: &SingleTgdPattern,
) -> Result<Option<Committee>, PolyError> {
    let k = election.committee_size();
    let smap = key_map(db, &pattern.binary)?;
    let mut by_group: BTreeMap<&Value, Vec<usize>> = BTreeMap::new();
    for (j, c) in election.candidates().iter().enumerate() {
        if let Some(a) = smap.get(c) {
            by_group.entry(a).or_default().push(j);
        }
    }
    let mut selected = BTreeSet::new();
    for a in unary_values(db, &pattern.unary)? {
        // The key makes groups disjoint, so each demand adds a new member.
        let Some(members) = by_group.get(&a) else {
            return Ok(None);
        };
        selected.insert(group_best(election, members));
    }
    if selected.len() > k {
        return Ok(None);
    }
    top_up(election, &mut selected, k);
    Ok(Some(av_committee(election, &selected)))
}

/// Builds the selection network for two coverage demands. One unit of flow
/// per seat: demanded groups and filler seats feed candidate in/out pairs
/// whose arc cost is the number of voters not approving the candidate, and
/// the second side mirrors the first. Capacities are all one.
pub fn build_mcmf_network(
    election: &Election,
    db: &Database,
    pattern: &DoubleTgdPattern,
) -> Result<FlowNetwork, PolyError> {
    let k = election.committee_size();
    let nv = election.voters().len();
    let first_vals = unary_values(db, &pattern.first.unary)?;
    let second_vals = unary_values(db, &pattern.second.unary)?;
    let smap1 = key_map(db, &pattern.first.binary)?;
    let smap2 = key_map(db, &pattern.second.binary)?;

    let mut vertices = vec![VertexKind::Source, VertexKind::Sink];
    let (source, sink) = (0, 1);
    let mut cand_in = Vec::new();
    let mut cand_out = Vec::new();
    for c in election.candidates() {
        cand_in.push(vertices.len());
        vertices.push(VertexKind::CandidateIn(c.clone()));
        cand_out.push(vertices.len());
        vertices.push(VertexKind::CandidateOut(c.clone()));
    }
    let mut first_idx = BTreeMap::new();
    for a in &first_vals {
        first_idx.insert(a.clone(), vertices.len());
        vertices.push(VertexKind::FirstTuple(a.clone()));
    }
    let first_slack: Vec<usize> = (1..=k.saturating_sub(first_vals.len()))
        .map(|i| {
            vertices.push(VertexKind::FirstSlack(i));
            vertices.len() - 1
        })
        .collect();
    let mut second_idx = BTreeMap::new();
    for b in &second_vals {
        second_idx.insert(b.clone(), vertices.len());
        vertices.push(VertexKind::SecondTuple(b.clone()));
    }
    let second_slack: Vec<usize> = (1..=k.saturating_sub(second_vals.len()))
        .map(|i| {
            vertices.push(VertexKind::SecondSlack(i));
            vertices.len() - 1
        })
        .collect();

    let unit = |from: usize, to: usize, cost: BigRational| FlowEdge {
        from,
        to,
        capacity: 1,
        cost,
    };
    let mut edges = Vec::new();
    for &u in first_idx.values() {
        edges.push(unit(source, u, BigRational::zero()));
    }
    for &u in &first_slack {
        edges.push(unit(source, u, BigRational::zero()));
    }
    for (j, c) in election.candidates().iter().enumerate() {
        if let Some(&u) = smap1.get(c).and_then(|a| first_idx.get(a)) {
            edges.push(unit(u, cand_in[j], BigRational::zero()));
        }
        for &u in &first_slack {
            edges.push(unit(u, cand_in[j], BigRational::zero()));
        }
        let skipped = nv - election.approval_count(j);
        edges.push(unit(
            cand_in[j],
            cand_out[j],
            BigRational::from_integer(BigInt::from(skipped)),
        ));
        if let Some(&w) = smap2.get(c).and_then(|b| second_idx.get(b)) {
            edges.push(unit(cand_out[j], w, BigRational::zero()));
        }
        for &w in &second_slack {
            edges.push(unit(cand_out[j], w, BigRational::zero()));
        }
    }
    for &w in second_idx.values() {
        edges.push(unit(w, sink, BigRational::zero()));
    }
    for &w in &second_slack {
        edges.push(unit(w, sink, BigRational::zero()));
    }
    Ok(FlowNetwork {
        vertices,
        edges,
        source,
        sink,
    })
}

/// Flow optimum for two coverage demands under approval scoring. `None`
/// means no legal committee exists: a demand side larger than the committee,
/// or a maximum flow below the seat count.
pub fn mcmf_two_tgds(
    election: &Election,
    db: &Database,
    pattern: &DoubleTgdPattern,
) -> Result<Option<Committee>, PolyError> {
    let k = election.committee_size();
    if unary_values(db, &pattern.first.unary)?.len() > k
        || unary_values(db, &pattern.second.unary)?.len() > k
    {
        return Ok(None);
    }
    let net = build_mcmf_network(election, db, pattern)?;
    let result = min_cost_max_flow(&net);
    if result.flow_value < k as u64 {
        return Ok(None);
    }
    let mut selected = BTreeSet::new();
    for (e, &sent) in net.edges.iter().zip(&result.edge_flows) {
        if sent == 1 {
            if let VertexKind::CandidateIn(c) = &net.vertices[e.from] {
                let j = election
                    .candidate_index(c)
                    .expect("network candidate is registered");
                selected.insert(j);
            }
        }
    }
    assert_eq!(selected.len(), k, "each flow unit crosses one member arc");
    Ok(Some(av_committee(election, &selected)))
}

/// Greedy optimum for the exclusion rule under approval scoring: keep only
/// the best member of every conflict group, then take the top seats.
pub fn dc_key_greedy(
    election: &Election,
    db: &Database,
    pattern: &DcKeyPattern,
) -> Result<Option<Committee>, PolyError> {
    let k = election.committee_size();
    let rmap = key_map(db, &pattern.relation)?;
    let mut by_group: BTreeMap<&Value, Vec<usize>> = BTreeMap::new();
    for (j, c) in election.candidates().iter().enumerate() {
        if let Some(a) = rmap.get(c) {
            by_group.entry(a).or_default().push(j);
        }
    }
    let mut excluded = vec![false; election.num_candidates()];
    for members in by_group.values() {
        if members.len() >= 2 {
            let best = group_best(election, members);
            for &j in members {
                excluded[j] = j != best;
            }
        }
    }
    let pool: Vec<usize> = (0..election.num_candidates())
        .filter(|&j| !excluded[j])
        .collect();
    if pool.len() < k {
        return Ok(None);
    }
    let mut selected = BTreeSet::new();
    let mut ordered = pool;
    ordered.sort_by(|&a, &b| {
        election
            .approval_count(b)
            .cmp(&election.approval_count(a))
            .then_with(|| election.candidates()[a].cmp(&election.candidates()[b]))
    });
    selected.extend(ordered.into_iter().take(k));
    Ok(Some(av_committee(election, &selected)))
}
