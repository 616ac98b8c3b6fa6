//! Brute-force ground truth: enumerate every k-subset, keep the best legal
//! one. Subsets are visited in combinatorial (colex) order with a hard cap
//! on their number; ties go to the lexicographically smallest member set.

use std::collections::BTreeSet;

use num::BigRational;
use thiserror::Error;

use crate::constraints::{is_legal, ConstraintSet};
use crate::election::{Committee, Election, ElectionError, ScoreCache, ScoringRule};
use crate::relational::{Database, RelationalError, Value};

/// Default ceiling on the number of enumerated subsets.
pub const DEFAULT_SUBSET_CAP: u128 = 2_000_000;

#[derive(Debug, Error)]
pub enum OracleError {
    #[error(transparent)]
    Election(#[from] ElectionError),
    #[error(transparent)]
    Relational(#[from] RelationalError),
    #[error("{subsets} committees exceed the enumeration cap of {cap}")]
    InstanceTooLarge { subsets: u128, cap: u128 },
}

/// C(n, k), saturating at `u128::MAX`.
pub fn binomial(n: usize, k: usize) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        let num = (n - i) as u128;
        acc = match acc.checked_mul(num) {
            Some(v) => v / (i as u128 + 1),
            None => return u128::MAX,
        };
    }
    acc
}

/// Walks all k-subsets of 0..n in colex order.
struct Subsets {
    indexes: Vec<usize>,
    n: usize,
    done: bool,
}

impl Subsets {
    fn new(n: usize, k: usize) -> Self {
        Subsets {
            indexes: (0..k).collect(),
            n,
            done: k > n,
        }
    }
}

impl Iterator for Subsets {
    type Item = Vec<usize>;

    fn next(&mut self) -> Option<Vec<usize>> {
        if self.done {
            return None;
        }
        let current = self.indexes.clone();
        let k = self.indexes.len();
        if k == 0 {
            self.done = true;
            return Some(current);
        }
        // Smallest position whose successor is free moves up; everything
        // below it resets. The last subset is {n-k..n-1}.
        let mut i = 0;
        while i + 1 < k && self.indexes[i] + 1 == self.indexes[i + 1] {
            i += 1;
        }
        self.indexes[i] += 1;
        if self.indexes[i] >= self.n {
            self.done = true;
        } else {
            for j in 0..i {
                self.indexes[j] = j;
            }
        }
        Some(current)
    }
}

type Best = Option<(BigRational, Vec<usize>)>;

fn better(candidate: &(BigRational, Vec<usize>), best: &Best) -> bool {
    match best {
        None => true,
        Some((score, members)) => {
            candidate.0 > *score || (candidate.0 == *score && candidate.1 < *members)
        }
    }
}

fn scan_stripe(
    db: &Database,
    election: &Election,
    rule: &ScoringRule,
    gamma: &ConstraintSet,
    stripe: usize,
    stripes: usize,
) -> Result<Best, OracleError> {
    let k = election.committee_size();
    let cache = ScoreCache::new(rule);
    let mut best: Best = None;
    for (ordinal, subset) in Subsets::new(election.num_candidates(), k).enumerate() {
        if ordinal % stripes != stripe {
            continue;
        }
        let members: BTreeSet<usize> = subset.iter().copied().collect();
        let committee: BTreeSet<Value> = election.members_of(&members).into_iter().collect();
        if !is_legal(db, &committee, gamma, k)? {
            continue;
        }
        let score = election.score_indices(&cache, &members)?;
        let entry = (score, subset);
        if better(&entry, &best) {
            best = Some(entry);
        }
    }
    Ok(best)
}

/// Exhaustive winner search. `Ok(None)` means no legal committee exists.
///
/// `jobs > 1` stripes the subset space across threads; the merged result is
/// identical to the sequential one.
pub fn brute_force_winner(
    db: &Database,
    election: &Election,
    rule: &ScoringRule,
    gamma: &ConstraintSet,
    cap: u128,
    jobs: usize,
) -> Result<Option<Committee>, OracleError> {
    let n = election.num_candidates();
    let k = election.committee_size();
    let subsets = binomial(n, k);
    if subsets > cap {
        return Err(OracleError::InstanceTooLarge { subsets, cap });
    }
    let stripes = jobs.max(1);
    let best = if stripes == 1 {
        scan_stripe(db, election, rule, gamma, 0, 1)?
    } else {
        let results: Vec<Result<Best, OracleError>> = std::thread::scope(|scope| {
            let handles: Vec<_> = (0..stripes)
                .map(|stripe| {
                    scope.spawn(move || scan_stripe(db, election, rule, gamma, stripe, stripes))
                })
                .collect();
            handles.into_iter().map(|h| h.join().expect("stripe panicked")).collect()
        });
        let mut merged: Best = None;
        for result in results {
            if let Some(entry) = result? {
                if better(&entry, &merged) {
                    merged = Some(entry);
                }
            }
        }
        merged
    };
    Ok(best.map(|(score, members)| Committee {
        members: election.members_of(&members.into_iter().collect()),
        score,
    }))
}
