//! Exact depth-first branch-and-bound over the selection variables.
//!
//! Branching follows candidate declaration order with the selected branch
//! first, so complete committees are reached in lexicographic order of their
//! member index sets. The incumbent therefore only ever improves strictly,
//! and pruning on `bound <= incumbent` keeps the lexicographically smallest
//! maximum-score committee.

mod lp;

pub use lp::export_lp;

use std::collections::{BTreeSet, HashMap};
use std::time::{Duration, Instant};

use num::{BigRational, One, ToPrimitive};
use serde::Serialize;
use thiserror::Error;

use crate::constraints::{is_legal, ConstraintSet};
use crate::election::{Committee, Election, ElectionError, ScoreCache, ScoringRule};
use crate::mip::{encode, EncodeError, EncodedModel, ModelStats, RelOp};
use crate::relational::{Database, RelationalError, Value};

#[derive(Debug, Error)]
pub enum SolverError {
    #[error(transparent)]
    Encode(#[from] EncodeError),
    #[error(transparent)]
    Relational(#[from] RelationalError),
    #[error(transparent)]
    Election(#[from] ElectionError),
    #[error("model disagrees with a fresh encoding of its inputs: {found:?} vs {expected:?}")]
    ModelMismatch {
        expected: ModelStats,
        found: ModelStats,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum SolveStatus {
    Optimal,
    Infeasible,
    Timeout,
}

#[derive(Debug, Clone)]
pub struct SolveReport {
    pub status: SolveStatus,
    /// The proven optimum, or the incumbent on timeout.
    pub committee: Option<Committee>,
    pub nodes_explored: u64,
    pub build_ms: u128,
    pub solve_ms: u128,
}

/// A row usable for propagation: unit coefficients, selection variables
/// only, integer right-hand side. Holds candidate ordinals.
struct PropRow {
    members: Vec<usize>,
    op: RelOp,
    rhs: i64,
}

fn prop_rows(enc: &EncodedModel) -> Vec<PropRow> {
    let cand_of: HashMap<usize, usize> = enc
        .z_vars
        .iter()
        .enumerate()
        .map(|(c, &var)| (var, c))
        .collect();
    let one = BigRational::one();
    enc.model
        .constraints()
        .iter()
        .filter_map(|row| {
            let mut members = Vec::with_capacity(row.terms.len());
            for (var, coeff) in &row.terms {
                if *coeff != one {
                    return None;
                }
                members.push(*cand_of.get(var)?);
            }
            if !row.rhs.is_integer() {
                return None;
            }
            let rhs = row.rhs.to_integer().to_i64()?;
            Some(PropRow {
                members,
                op: row.op,
                rhs,
            })
        })
        .collect()
}

struct Search<'a> {
    election: &'a Election,
    db: &'a Database,
    gamma: &'a ConstraintSet,
    cache: ScoreCache<'a>,
    rows: Vec<PropRow>,
    k: usize,
    deadline: Option<Instant>,
    nodes: u64,
    timed_out: bool,
    best: Option<(BigRational, Vec<usize>)>,
}

impl Search<'_> {
    /// Fixpoint over the propagation rows; false means conflict.
    fn propagate(&self, fixed: &mut [Option<bool>]) -> bool {
        loop {
            let mut changed = false;
            for row in &self.rows {
                let mut sel = 0i64;
                let mut free = Vec::new();
                for &c in &row.members {
                    match fixed[c] {
                        Some(true) => sel += 1,
                        Some(false) => {}
                        None => free.push(c),
                    }
                }
                let max = sel + free.len() as i64;
                let (lo_bad, hi_bad) = match row.op {
                    RelOp::Le => (false, sel > row.rhs),
                    RelOp::Ge => (max < row.rhs, false),
                    RelOp::Eq => (max < row.rhs, sel > row.rhs),
                };
                if lo_bad || hi_bad {
                    return false;
                }
                if !free.is_empty() {
                    let fix_zero = matches!(row.op, RelOp::Le | RelOp::Eq) && sel == row.rhs;
                    let fix_one = matches!(row.op, RelOp::Ge | RelOp::Eq) && max == row.rhs;
                    if fix_zero {
                        for c in &free {
                            fixed[*c] = Some(false);
                        }
                        changed = true;
                    } else if fix_one {
                        for c in &free {
                            fixed[*c] = Some(true);
                        }
                        changed = true;
                    }
                }
            }
            if !changed {
                return true;
            }
        }
    }

    /// Upper bound on any completion: each voter independently reaches the
    /// best count allowed by the remaining seats. Admissible because rule
    /// values never decrease in the count.
    fn bound(&self, fixed: &[Option<bool>]) -> Result<BigRational, ElectionError> {
        let sel_total = fixed.iter().filter(|f| **f == Some(true)).count();
        let remaining = self.k.saturating_sub(sel_total);
        let mut total = BigRational::new(0.into(), 1.into());
        for voter in self.election.voters() {
            let mut sel = 0usize;
            let mut free = 0usize;
            for &j in &voter.approvals {
                match fixed[j] {
                    Some(true) => sel += 1,
                    Some(false) => {}
                    None => free += 1,
                }
            }
            total += self.cache.value(sel + remaining.min(free), voter.approvals.len())?;
        }
        Ok(total)
    }

    fn node(&mut self, mut fixed: Vec<Option<bool>>) -> Result<(), SolverError> {
        self.nodes += 1;
        if let Some(deadline) = self.deadline {
            if Instant::now() >= deadline {
                self.timed_out = true;
                return Ok(());
            }
        }
        if !self.propagate(&mut fixed) {
            return Ok(());
        }
        let branch = fixed.iter().position(|f| f.is_none());
        let Some(j) = branch else {
            let members: BTreeSet<usize> = fixed
                .iter()
                .enumerate()
                .filter_map(|(c, f)| (*f == Some(true)).then_some(c))
                .collect();
            if members.len() != self.k {
                return Ok(());
            }
            let committee: BTreeSet<Value> = self.election.members_of(&members).into_iter().collect();
            if !is_legal(self.db, &committee, self.gamma, self.k)? {
                return Ok(());
            }
            let score = self.election.score_indices(&self.cache, &members)?;
            // Leaves arrive in lexicographic order; ties keep the incumbent.
            let improves = match &self.best {
                Some((incumbent, _)) => score > *incumbent,
                None => true,
            };
            if improves {
                self.best = Some((score, members.into_iter().collect()));
            }
            return Ok(());
        };
        if let Some((incumbent, _)) = &self.best {
            if self.bound(&fixed)? <= *incumbent {
                return Ok(());
            }
        }
        let mut take = fixed.clone();
        take[j] = Some(true);
        self.node(take)?;
        if self.timed_out {
            return Ok(());
        }
        fixed[j] = Some(false);
        self.node(fixed)
    }
}

/// Exposed for property tests: the node bound at an explicit partial fix.
pub fn completion_bound(
    election: &Election,
    rule: &ScoringRule,
    fixed: &[Option<bool>],
    k: usize,
) -> Result<BigRational, ElectionError> {
    let search = Search {
        election,
        db: &Database::new(),
        gamma: &ConstraintSet::default(),
        cache: ScoreCache::new(rule),
        rows: Vec::new(),
        k,
        deadline: None,
        nodes: 0,
        timed_out: false,
        best: None,
    };
    search.bound(fixed)
}

/// Finds a maximum-score legal committee for the encoded model, breaking
/// score ties toward the lexicographically smallest member set.
///
/// The model is cross-checked against a fresh encoding of the same inputs;
/// a statistics mismatch aborts the solve rather than answering for the
/// wrong instance.
pub fn solve(
    enc: &EncodedModel,
    db: &Database,
    election: &Election,
    rule: &ScoringRule,
    gamma: &ConstraintSet,
    time_limit_ms: Option<u64>,
) -> Result<SolveReport, SolverError> {
    let fresh = encode(db, election, rule, gamma, enc.options)?;
    let expected = fresh.model.stats();
    let found = enc.model.stats();
    if expected != found {
        return Err(SolverError::ModelMismatch { expected, found });
    }

    let start = Instant::now();
    let deadline = time_limit_ms.map(|ms| start + Duration::from_millis(ms));
    let mut search = Search {
        election,
        db,
        gamma,
        cache: ScoreCache::new(rule),
        rows: prop_rows(enc),
        k: election.committee_size(),
        deadline,
        nodes: 0,
        timed_out: false,
        best: None,
    };
    search.node(vec![None; election.num_candidates()])?;

    let committee = search.best.map(|(score, members)| Committee {
        members: election.members_of(&members.into_iter().collect()),
        score,
    });
    let status = if search.timed_out {
        SolveStatus::Timeout
    } else if committee.is_some() {
        SolveStatus::Optimal
    } else {
        SolveStatus::Infeasible
    };
    Ok(SolveReport {
        status,
        committee,
        nodes_explored: search.nodes,
        build_ms: enc.build_ms,
        solve_ms: start.elapsed().as_millis(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constraints::parse_constraints;
    use crate::mip::EncoderOptions;
    use crate::testutil::{coverage_db, coverage_tgds, fig_db, fig_election, staff_schema, supervise_dc, v};
    use num::BigInt;

    fn rat(n: i64) -> BigRational {
        BigRational::from_integer(BigInt::from(n))
    }

    fn solve_fig(
        db: &Database,
        gamma: &ConstraintSet,
        options: EncoderOptions,
    ) -> SolveReport {
        let e = fig_election(3);
        let enc = encode(db, &e, &ScoringRule::Av, gamma, options).unwrap();
        solve(&enc, db, &e, &ScoringRule::Av, gamma, None).unwrap()
    }

    #[test]
    fn supervision_conflict_instance_is_solved() {
        let db = fig_db();
        let report = solve_fig(&db, &supervise_dc(), EncoderOptions::default());
        assert_eq!(report.status, SolveStatus::Optimal);
        let committee = report.committee.unwrap();
        assert_eq!(committee.members, vec![v("Ann"), v("Cale"), v("Dave")]);
        assert_eq!(committee.score, rat(7));
    }

    #[test]
    fn coverage_dependency_instance_is_solved() {
        let db = coverage_db();
        let report = solve_fig(&db, &coverage_tgds(), EncoderOptions::default());
        assert_eq!(report.status, SolveStatus::Optimal);
        let committee = report.committee.unwrap();
        assert_eq!(committee.members, vec![v("Ann"), v("Bob"), v("Dave")]);
        assert_eq!(committee.score, rat(8));
    }

    #[test]
    fn unconstrained_fig_instance_scores_eight() {
        let db = fig_db();
        let report = solve_fig(&db, &ConstraintSet::default(), EncoderOptions::default());
        let committee = report.committee.unwrap();
        assert_eq!(committee.members, vec![v("Ann"), v("Bob"), v("Dave")]);
        assert_eq!(committee.score, rat(8));
    }

    #[test]
    fn blanket_denial_is_infeasible() {
        let db = fig_db();
        let gamma = parse_constraints("DC: Com(c)", &staff_schema()).unwrap();
        let report = solve_fig(&db, &gamma, EncoderOptions::default());
        assert_eq!(report.status, SolveStatus::Infeasible);
        assert!(report.committee.is_none());
    }

    #[test]
    fn all_option_combinations_agree() {
        let db = fig_db();
        for bits in 0..8u8 {
            let options = EncoderOptions {
                group: bits & 1 != 0,
                prune: bits & 2 != 0,
                contract: bits & 4 != 0,
            };
            let report = solve_fig(&db, &supervise_dc(), options);
            let committee = report.committee.unwrap();
            assert_eq!(committee.score, rat(7), "options {options:?}");
            assert_eq!(committee.members, vec![v("Ann"), v("Cale"), v("Dave")]);
        }
    }

    #[test]
    fn mismatched_model_is_rejected() {
        let db = fig_db();
        let e3 = fig_election(3);
        let e2 = fig_election(2);
        let gamma = ConstraintSet::default();
        let enc = encode(&db, &e3, &ScoringRule::Av, &gamma, EncoderOptions::default()).unwrap();
        let err = solve(&enc, &db, &e2, &ScoringRule::Av, &gamma, None).unwrap_err();
        assert!(matches!(err, SolverError::ModelMismatch { .. }));
    }

    #[test]
    fn zero_time_limit_reports_timeout() {
        let db = fig_db();
        let e = fig_election(3);
        let gamma = ConstraintSet::default();
        let enc = encode(&db, &e, &ScoringRule::Av, &gamma, EncoderOptions::default()).unwrap();
        let report = solve(&enc, &db, &e, &ScoringRule::Av, &gamma, Some(0)).unwrap();
        assert_eq!(report.status, SolveStatus::Timeout);
    }

    #[test]
    fn pav_rule_is_scored_exactly() {
        let db = fig_db();
        let e = fig_election(3);
        let gamma = supervise_dc();
        let enc = encode(&db, &e, &ScoringRule::Pav, &gamma, EncoderOptions::default()).unwrap();
        let report = solve(&enc, &db, &e, &ScoringRule::Pav, &gamma, None).unwrap();
        let committee = report.committee.unwrap();
        // Best PAV committee among supervision-legal triples.
        let mut best: Option<(BigRational, Vec<Value>)> = None;
        let all = ["Ann", "Bob", "Cale", "Dave", "Eva"];
        for i in 0..5 {
            for j in i + 1..5 {
                for l in j + 1..5 {
                    let set: std::collections::BTreeSet<Value> =
                        [all[i], all[j], all[l]].iter().map(|c| v(c)).collect();
                    if !is_legal(&db, &set, &gamma, 3).unwrap() {
                        continue;
                    }
                    let score =
                        crate::election::committee_score(&e, &ScoringRule::Pav, &set).unwrap();
                    let better = match &best {
                        Some((s, _)) => score > *s,
                        None => true,
                    };
                    if better {
                        best = Some((score, set.into_iter().collect()));
                    }
                }
            }
        }
        let (score, _) = best.unwrap();
        assert_eq!(committee.score, score);
    }

    #[test]
    fn bound_is_loose_enough_at_the_root() {
        let e = fig_election(3);
        let fixed = vec![None; 5];
        let b = completion_bound(&e, &ScoringRule::Av, &fixed, 3).unwrap();
        // True optimum without constraints is 8.
        assert!(b >= rat(8));
    }
}
