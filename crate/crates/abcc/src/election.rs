//! Approval elections and exact rational committee scoring.
//!
//! A committee is scored voter by voter: a voter whose approval set has `y`
//! members, `x` of them selected, contributes `rule_value(rule, x, y)`. All
//! arithmetic is exact rational; nothing is floated.

use std::cell::RefCell;
use std::collections::{BTreeMap, BTreeSet, HashMap};

use num::{BigInt, BigRational, One, Zero};
use thiserror::Error;

use crate::relational::Value;

#[derive(Debug, Error)]
pub enum ElectionError {
    #[error("duplicate candidate {0}")]
    DuplicateCandidate(Value),
    #[error("duplicate voter id {0}")]
    DuplicateVoter(String),
    #[error("unknown candidate {0}")]
    UnknownCandidate(Value),
    #[error("committee size {k} must be between 1 and {m}")]
    BadCommitteeSize { k: usize, m: usize },
    #[error("rule is undefined for an empty approval set")]
    EmptyApprovalSet,
    #[error("score table has no entry for ({x}, {y})")]
    MissingTableEntry { x: usize, y: usize },
    #[error("bad rule spec: {0}")]
    BadRule(String),
    #[error("bad score table: {0}")]
    BadTable(String),
    #[error("approvals line {line}: {detail}")]
    BadProfileLine { line: usize, detail: String },
}

/// How much a voter with `y` approved candidates, `x` of them selected, adds
/// to the committee score.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ScoringRule {
    /// `x`: each selected approved candidate counts once.
    Av,
    /// Harmonic: `1 + 1/2 + ... + 1/x`.
    Pav,
    /// Coverage: `min(x, 1)`.
    Cc,
    /// Satisfaction share: `x / y`.
    Sav,
    /// `min(p, x)` with `p >= 1`.
    TruncatedAv(usize),
    /// Explicit weights `w[0..]` with `w[0] = 0`, non-decreasing; `x` beyond
    /// the table keeps the last weight.
    ThieleTable(Vec<BigRational>),
    /// Explicit values per `(x, y)` pair, non-decreasing and non-negative in
    /// `x` for each `y`.
    ScoreTable(BTreeMap<(usize, usize), BigRational>),
}

fn rat(n: i64) -> BigRational {
    BigRational::from_integer(BigInt::from(n))
}

impl ScoringRule {
    pub fn truncated(p: usize) -> Result<Self, ElectionError> {
        if p == 0 {
            return Err(ElectionError::BadRule("trunc threshold must be >= 1".into()));
        }
        Ok(ScoringRule::TruncatedAv(p))
    }

    /// Weights must start at zero and never decrease.
    pub fn thiele_table(w: Vec<BigRational>) -> Result<Self, ElectionError> {
        if w.first() != Some(&BigRational::zero()) {
            return Err(ElectionError::BadTable("first weight must be 0".into()));
        }
        if w.windows(2).any(|p| p[0] > p[1]) {
            return Err(ElectionError::BadTable("weights must be non-decreasing".into()));
        }
        Ok(ScoringRule::ThieleTable(w))
    }

    /// Entries must be non-negative and non-decreasing in `x` for each `y`.
    pub fn score_table(
        table: BTreeMap<(usize, usize), BigRational>,
    ) -> Result<Self, ElectionError> {
        for (&(x, y), v) in &table {
            if v < &BigRational::zero() {
                return Err(ElectionError::BadTable(format!(
                    "negative value at ({x}, {y})"
                )));
            }
            if x > 0 {
                if let Some(prev) = table.get(&(x - 1, y)) {
                    if prev > v {
                        return Err(ElectionError::BadTable(format!(
                            "value decreases from ({}, {y}) to ({x}, {y})",
                            x - 1
                        )));
                    }
                }
            }
        }
        Ok(ScoringRule::ScoreTable(table))
    }

    /// Parses a rule spec: `av`, `pav`, `cc`, `sav`, `trunc:<p>`, or
    /// `thiele:<w1,w2,...>` with rational weights like `3/2`.
    pub fn parse_spec(spec: &str) -> Result<Self, ElectionError> {
        match spec {
            "av" => return Ok(ScoringRule::Av),
            "pav" => return Ok(ScoringRule::Pav),
            "cc" => return Ok(ScoringRule::Cc),
            "sav" => return Ok(ScoringRule::Sav),
            _ => {}
        }
        if let Some(p) = spec.strip_prefix("trunc:") {
            let p: usize = p
                .parse()
                .map_err(|_| ElectionError::BadRule(format!("bad trunc threshold {p:?}")))?;
            return ScoringRule::truncated(p);
        }
        if let Some(list) = spec.strip_prefix("thiele:") {
            let mut w = vec![BigRational::zero()];
            for part in list.split(',') {
                w.push(parse_rational(part.trim())?);
            }
            if w.len() == 1 {
                return Err(ElectionError::BadRule("thiele needs at least one weight".into()));
            }
            return ScoringRule::thiele_table(w);
        }
        Err(ElectionError::BadRule(format!(
            "unknown rule {spec:?} (expected av|pav|cc|sav|trunc:<p>|thiele:<w1,...>)"
        )))
    }

    /// Short name for reports.
    pub fn name(&self) -> String {
        match self {
            ScoringRule::Av => "av".into(),
            ScoringRule::Pav => "pav".into(),
            ScoringRule::Cc => "cc".into(),
            ScoringRule::Sav => "sav".into(),
            ScoringRule::TruncatedAv(p) => format!("trunc:{p}"),
            ScoringRule::ThieleTable(_) => "thiele".into(),
            ScoringRule::ScoreTable(_) => "table".into(),
        }
    }
}

fn parse_rational(s: &str) -> Result<BigRational, ElectionError> {
    let bad = || ElectionError::BadRule(format!("bad rational {s:?}"));
    match s.split_once('/') {
        Some((n, d)) => {
            let n: BigInt = n.trim().parse().map_err(|_| bad())?;
            let d: BigInt = d.trim().parse().map_err(|_| bad())?;
            if d.is_zero() {
                return Err(bad());
            }
            Ok(BigRational::new(n, d))
        }
        None => {
            let n: BigInt = s.parse().map_err(|_| bad())?;
            Ok(BigRational::from_integer(n))
        }
    }
}

/// Evaluates a rule at `x` selected out of `y` approved. Values of `x` above
/// `y` score as `x = y`; a committee can never select more approved
/// candidates than the voter has.
pub fn rule_value(
    rule: &ScoringRule,
    x: usize,
    y: usize,
) -> Result<BigRational, ElectionError> {
    if matches!(rule, ScoringRule::Sav) && y == 0 {
        return Err(ElectionError::EmptyApprovalSet);
    }
    let x = x.min(y);
    Ok(match rule {
        ScoringRule::Av => rat(x as i64),
        ScoringRule::Pav => {
            let mut sum = BigRational::zero();
            for i in 1..=x {
                sum += BigRational::new(BigInt::one(), BigInt::from(i as i64));
            }
            sum
        }
        ScoringRule::Cc => rat(x.min(1) as i64),
        ScoringRule::Sav => BigRational::new(BigInt::from(x as i64), BigInt::from(y as i64)),
        ScoringRule::TruncatedAv(p) => rat(x.min(*p) as i64),
        ScoringRule::ThieleTable(w) => w[x.min(w.len() - 1)].clone(),
        ScoringRule::ScoreTable(table) => table
            .get(&(x, y))
            .cloned()
            .ok_or(ElectionError::MissingTableEntry { x, y })?,
    })
}

/// Memoizes `rule_value` per `(x, y)`; scoring loops hit few distinct pairs.
pub struct ScoreCache<'a> {
    rule: &'a ScoringRule,
    memo: RefCell<HashMap<(usize, usize), BigRational>>,
}

impl<'a> ScoreCache<'a> {
    pub fn new(rule: &'a ScoringRule) -> Self {
        ScoreCache {
            rule,
            memo: RefCell::new(HashMap::new()),
        }
    }

    pub fn rule(&self) -> &ScoringRule {
        self.rule
    }

    pub fn value(&self, x: usize, y: usize) -> Result<BigRational, ElectionError> {
        if let Some(v) = self.memo.borrow().get(&(x, y)) {
            return Ok(v.clone());
        }
        let v = rule_value(self.rule, x, y)?;
        self.memo.borrow_mut().insert((x, y), v.clone());
        Ok(v)
    }
}

/// One voter: an id and the indexes of approved candidates.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Voter {
    pub id: String,
    pub approvals: BTreeSet<usize>,
}

/// Candidates (in declaration order), voters, and the committee size.
#[derive(Debug, Clone)]
pub struct Election {
    candidates: Vec<Value>,
    index: HashMap<Value, usize>,
    voters: Vec<Voter>,
    approvals_per_candidate: Vec<usize>,
    k: usize,
}

impl Election {
    /// Builds an election. Candidate order is the declaration order and fixes
    /// index-based tie-breaking everywhere. Voters with empty approval sets
    /// are dropped (their count is logged).
    pub fn new(
        candidates: Vec<Value>,
        profile: Vec<(String, Vec<Value>)>,
        k: usize,
    ) -> Result<Self, ElectionError> {
        let mut index = HashMap::new();
        for (i, c) in candidates.iter().enumerate() {
            if index.insert(c.clone(), i).is_some() {
                return Err(ElectionError::DuplicateCandidate(c.clone()));
            }
        }
        if k == 0 || k > candidates.len() {
            return Err(ElectionError::BadCommitteeSize {
                k,
                m: candidates.len(),
            });
        }
        let mut seen_ids = BTreeSet::new();
        let mut voters = Vec::new();
        let mut dropped = 0usize;
        for (id, approvals) in profile {
            if !seen_ids.insert(id.clone()) {
                return Err(ElectionError::DuplicateVoter(id));
            }
            let mut set = BTreeSet::new();
            for value in approvals {
                let &i = index
                    .get(&value)
                    .ok_or(ElectionError::UnknownCandidate(value))?;
                set.insert(i);
            }
            if set.is_empty() {
                dropped += 1;
                continue;
            }
            voters.push(Voter { id, approvals: set });
        }
        if dropped > 0 {
            log::info!("dropped {dropped} voter(s) with empty approval sets");
        }
        let mut approvals_per_candidate = vec![0usize; candidates.len()];
        for voter in &voters {
            for &j in &voter.approvals {
                approvals_per_candidate[j] += 1;
            }
        }
        Ok(Election {
            candidates,
            index,
            voters,
            approvals_per_candidate,
            k,
        })
    }

    pub fn candidates(&self) -> &[Value] {
        &self.candidates
    }

    pub fn num_candidates(&self) -> usize {
        self.candidates.len()
    }

    pub fn voters(&self) -> &[Voter] {
        &self.voters
    }

    pub fn committee_size(&self) -> usize {
        self.k
    }

    pub fn candidate_index(&self, id: &Value) -> Option<usize> {
        self.index.get(id).copied()
    }

    /// How many voters approve candidate `j`.
    pub fn approval_count(&self, j: usize) -> usize {
        self.approvals_per_candidate[j]
    }

    /// Maps ids to indexes; unknown ids are an error.
    pub fn resolve_members(
        &self,
        members: &BTreeSet<Value>,
    ) -> Result<BTreeSet<usize>, ElectionError> {
        members
            .iter()
            .map(|v| {
                self.candidate_index(v)
                    .ok_or_else(|| ElectionError::UnknownCandidate(v.clone()))
            })
            .collect()
    }

    /// Candidate set of the committee, sorted by declaration order.
    pub fn members_of(&self, indexes: &BTreeSet<usize>) -> Vec<Value> {
        indexes.iter().map(|&j| self.candidates[j].clone()).collect()
    }

    /// Exact committee score by candidate indexes.
    pub fn score_indices(
        &self,
        cache: &ScoreCache,
        members: &BTreeSet<usize>,
    ) -> Result<BigRational, ElectionError> {
        let mut total = BigRational::zero();
        for voter in &self.voters {
            let x = voter.approvals.intersection(members).count();
            total += cache.value(x, voter.approvals.len())?;
        }
        Ok(total)
    }
}

/// A committee with its score. Members are sorted by candidate declaration
/// order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Committee {
    pub members: Vec<Value>,
    pub score: BigRational,
}

/// Exact score of `members` under `rule`.
pub fn committee_score(
    election: &Election,
    rule: &ScoringRule,
    members: &BTreeSet<Value>,
) -> Result<BigRational, ElectionError> {
    let indexes = election.resolve_members(members)?;
    let cache = ScoreCache::new(rule);
    election.score_indices(&cache, &indexes)
}

/// Parses an approvals file: one `voter_id: cand,cand,...` line per voter.
/// Blank lines and `#` comments are skipped; duplicate candidates within a
/// line collapse. Candidate tokens that round-trip as integers become `Int`
/// values, everything else is `Text`.
pub fn parse_approvals(text: &str) -> Result<Vec<(String, Vec<Value>)>, ElectionError> {
    let mut profile = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (id, rest) = line.split_once(':').ok_or(ElectionError::BadProfileLine {
            line: line_no,
            detail: "expected voter_id: cand,cand,...".into(),
        })?;
        let id = id.trim();
        if id.is_empty() {
            return Err(ElectionError::BadProfileLine {
                line: line_no,
                detail: "empty voter id".into(),
            });
        }
        let mut approvals = Vec::new();
        for token in rest.split(',') {
            let token = token.trim();
            if token.is_empty() {
                continue;
            }
            let value = token_to_value(token);
            if !approvals.contains(&value) {
                approvals.push(value);
            }
        }
        profile.push((id.to_owned(), approvals));
    }
    Ok(profile)
}

/// Candidate universe of a profile: the sorted union of all approvals.
pub fn candidates_from_profile(profile: &[(String, Vec<Value>)]) -> Vec<Value> {
    let set: BTreeSet<Value> = profile
        .iter()
        .flat_map(|(_, approvals)| approvals.iter().cloned())
        .collect();
    set.into_iter().collect()
}

/// Parses an explicit candidate list, one id per line, in declaration order.
pub fn parse_candidates(text: &str) -> Result<Vec<Value>, ElectionError> {
    let mut out = Vec::new();
    for raw in text.lines() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let value = token_to_value(line);
        if out.contains(&value) {
            return Err(ElectionError::DuplicateCandidate(value));
        }
        out.push(value);
    }
    Ok(out)
}

/// `"42"` becomes `Int(42)` only when the text is the canonical rendering of
/// an integer; `"007"` stays text.
pub fn token_to_value(token: &str) -> Value {
    match token.parse::<i64>() {
        Ok(n) if n.to_string() == token => Value::Int(n),
        _ => Value::text(token),
    }
}
