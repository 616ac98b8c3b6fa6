//! Pipeline behind the `abcc` binary: load inputs, pick a solver, solve,
//! and emit a machine-readable report.
//!
//! Exit codes (applied by `main`): 0 for an optimum or a completed export,
//! 2 when no legal committee exists, 3 on timeout, 1 for any input error.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::Parser;
use serde::Serialize;
use thiserror::Error;

use abcc::constraints::{parse_constraints, ParseError};
use abcc::election::{
    candidates_from_profile, parse_approvals, parse_candidates, Committee, Election,
    ElectionError, ScoringRule,
};
use abcc::mip::{encode, EncodeError, EncoderOptions, ModelStats};
use abcc::numfmt::decimal_fixed;
use abcc::oracle::{brute_force_winner, OracleError, DEFAULT_SUBSET_CAP};
use abcc::poly::{
    dc_key_greedy, detect_pattern, greedy_single_tgd, mcmf_two_tgds, PatternMatch, PolyError,
};
use abcc::relational::{
    load_database, load_schema, validate_keys, Database, KeyViolation, RelationalError, Schema,
};
use abcc::solver::{export_lp, solve, SolveStatus, SolverError};
use abcc::ConstraintSet;

/// Selects a committee maximizing an approval-based score subject to
/// database constraints.
#[derive(Debug, Parser)]
#[command(name = "abcc", version, disable_help_subcommand = true)]
pub struct RunConfig {
    /// Relation declarations (JSON).
    #[arg(long)]
    pub schema: PathBuf,

    /// Directory holding one headerless CSV file per relation.
    #[arg(long)]
    pub db: PathBuf,

    /// Approval profile, one `voter: candidate, ...` line each.
    #[arg(long)]
    pub approvals: PathBuf,

    /// Constraint file; omitted means unconstrained.
    #[arg(long)]
    pub constraints: Option<PathBuf>,

    /// Candidate list file; defaults to the candidates named in the profile.
    #[arg(long)]
    pub candidates: Option<PathBuf>,

    /// Committee size.
    #[arg(long)]
    pub k: usize,

    /// Scoring rule: av | pav | cc | sav | trunc:<p> | thiele:<w1,w2,...>.
    #[arg(long, default_value = "av")]
    pub rule: String,

    /// auto | bnb | oracle | greedy-tgd | mcmf | greedy-dc | lp-export.
    /// auto takes a fast path when the constraints allow one, else bnb.
    #[arg(long, default_value = "auto")]
    pub solver: String,

    /// Encoder reductions: comma list of group,prune,contract, or all/none.
    #[arg(long, default_value = "all")]
    pub opt: String,

    /// Give up on the search after this many milliseconds.
    #[arg(long)]
    pub time_limit_ms: Option<u64>,

    /// Worker threads for the exhaustive solver.
    #[arg(long, default_value_t = 1)]
    pub jobs: usize,

    /// Output file: the report copy, or the LP text under lp-export
    /// (required there). The report always goes to stdout.
    #[arg(long)]
    pub out: Option<PathBuf>,

    /// Log filter, overriding the ABCC_LOG environment variable.
    #[arg(long)]
    pub log: Option<String>,
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Relational(#[from] RelationalError),
    #[error(transparent)]
    Election(#[from] ElectionError),
    #[error(transparent)]
    Constraints(#[from] ParseError),
    #[error(transparent)]
    Encode(#[from] EncodeError),
    #[error(transparent)]
    Solver(#[from] SolverError),
    #[error(transparent)]
    Oracle(#[from] OracleError),
    #[error(transparent)]
    Poly(#[from] PolyError),
    #[error("{0}")]
    Config(String),
    #[error("{}", render_key_violations(.0))]
    Keys(Vec<KeyViolation>),
    #[error("cannot write {path}: {source}")]
    Write {
        path: String,
        source: std::io::Error,
    },
    #[error("cannot read {path}: {source}")]
    Read {
        path: String,
        source: std::io::Error,
    },
}

fn render_key_violations(violations: &[KeyViolation]) -> String {
    let mut out = format!("{} key violation(s):", violations.len());
    for v in violations {
        let _ = write!(out, "\n  {v}");
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum RunStatus {
    Optimal,
    Infeasible,
    Timeout,
    Exported,
}

impl RunStatus {
    pub fn exit_code(self) -> i32 {
        match self {
            RunStatus::Optimal | RunStatus::Exported => 0,
            RunStatus::Infeasible => 2,
            RunStatus::Timeout => 3,
        }
    }
}

#[derive(Debug, Serialize)]
pub struct MemberReport {
    pub id: String,
    pub approvals: usize,
}

#[derive(Debug, Serialize)]
pub struct ObjectiveReport {
    /// Exact value, e.g. "22/3".
    pub rational: String,
    /// Decimal rendering, within 1e-9 of the exact value.
    pub decimal: String,
}

#[derive(Debug, Default, Serialize)]
pub struct Timings {
    pub load: u128,
    pub ground: u128,
    pub build: u128,
    pub solve: u128,
}

#[derive(Debug, Serialize)]
pub struct RunReport {
    pub status: RunStatus,
    /// Solver that actually ran, after auto-selection.
    pub solver: String,
    pub rule: String,
    pub k: usize,
    pub committee: Option<Vec<MemberReport>>,
    pub objective: Option<ObjectiveReport>,
    pub model_stats: Option<ModelStats>,
    pub optimizations: Option<EncoderOptions>,
    pub timings_ms: Timings,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum SolverChoice {
    Auto,
    Bnb,
    Oracle,
    GreedyTgd,
    Mcmf,
    GreedyDc,
    LpExport,
}

fn parse_solver(spec: &str) -> Result<SolverChoice, CliError> {
    match spec {
        "auto" => Ok(SolverChoice::Auto),
        "bnb" => Ok(SolverChoice::Bnb),
        "oracle" => Ok(SolverChoice::Oracle),
        "greedy-tgd" => Ok(SolverChoice::GreedyTgd),
        "mcmf" => Ok(SolverChoice::Mcmf),
        "greedy-dc" => Ok(SolverChoice::GreedyDc),
        "lp-export" => Ok(SolverChoice::LpExport),
        other => Err(CliError::Config(format!(
            "unknown solver {other:?} (expected auto|bnb|oracle|greedy-tgd|mcmf|greedy-dc|lp-export)"
        ))),
    }
}

fn parse_opt(spec: &str) -> Result<EncoderOptions, CliError> {
    match spec {
        "all" => return Ok(EncoderOptions::default()),
        "none" => return Ok(EncoderOptions::none()),
        _ => {}
    }
    let mut options = EncoderOptions::none();
    for part in spec.split(',') {
        match part.trim() {
            "group" => options.group = true,
            "prune" => options.prune = true,
            "contract" => options.contract = true,
            other => {
                return Err(CliError::Config(format!(
                    "unknown optimization {other:?} (expected group, prune, contract, all, or none)"
                )))
            }
        }
    }
    Ok(options)
}

fn read_file(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(|source| CliError::Read {
        path: path.display().to_string(),
        source,
    })
}

fn write_file(path: &Path, content: &str) -> Result<(), CliError> {
    fs::write(path, content).map_err(|source| CliError::Write {
        path: path.display().to_string(),
        source,
    })
}

fn member_reports(election: &Election, committee: &Committee) -> Vec<MemberReport> {
    committee
        .members
        .iter()
        .map(|c| MemberReport {
            id: c.to_string(),
            approvals: election
                .candidate_index(c)
                .map(|j| election.approval_count(j))
                .unwrap_or(0),
        })
        .collect()
}

fn objective_report(committee: &Committee) -> ObjectiveReport {
    ObjectiveReport {
        rational: committee.score.to_string(),
        decimal: decimal_fixed(&committee.score, 12),
    }
}

struct Inputs {
    schema: Schema,
    db: Database,
    election: Election,
    gamma: ConstraintSet,
    rule: ScoringRule,
    options: EncoderOptions,
    choice: SolverChoice,
    load_ms: u128,
}

fn load_inputs(config: &RunConfig) -> Result<Inputs, CliError> {
    let start = Instant::now();
    if config.k == 0 {
        return Err(CliError::Config("--k must be at least 1".into()));
    }
    let rule = ScoringRule::parse_spec(&config.rule)?;
    let options = parse_opt(&config.opt)?;
    let choice = parse_solver(&config.solver)?;

    let schema = load_schema(&config.schema)?;
    let db = load_database(&schema, &config.db)?;
    let violations = validate_keys(&db, &schema)?;
    if !violations.is_empty() {
        for v in &violations {
            log::error!("{v}");
        }
        return Err(CliError::Keys(violations));
    }

    let profile = parse_approvals(&read_file(&config.approvals)?)?;
    let candidates = match &config.candidates {
        Some(path) => parse_candidates(&read_file(path)?)?,
        None => candidates_from_profile(&profile),
    };
    let election = Election::new(candidates, profile, config.k)?;

    let gamma = match &config.constraints {
        Some(path) => parse_constraints(&read_file(path)?, &schema)?,
        None => ConstraintSet::default(),
    };

    Ok(Inputs {
        schema,
        db,
        election,
        gamma,
        rule,
        options,
        choice,
        load_ms: start.elapsed().as_millis(),
    })
}

/// Resolves `auto` against the constraint shape and checks that an
/// explicitly requested fast path actually applies.
fn resolve_solver(inputs: &Inputs) -> Result<(SolverChoice, Option<PatternMatch>), CliError> {
    let is_av = matches!(inputs.rule, ScoringRule::Av);
    let pattern = || detect_pattern(&inputs.schema, &inputs.db, &inputs.gamma);
    match inputs.choice {
        SolverChoice::Auto => {
            if !is_av {
                return Ok((SolverChoice::Bnb, None));
            }
            Ok(match pattern() {
                Some(p @ PatternMatch::Single(_)) => (SolverChoice::GreedyTgd, Some(p)),
                Some(p @ PatternMatch::Double(_)) => (SolverChoice::Mcmf, Some(p)),
                Some(p @ PatternMatch::DcKey(_)) => (SolverChoice::GreedyDc, Some(p)),
                None => (SolverChoice::Bnb, None),
            })
        }
        SolverChoice::GreedyTgd => {
            if !is_av {
                return Err(CliError::Config("greedy-tgd requires --rule av".into()));
            }
            match pattern() {
                Some(p @ PatternMatch::Single(_)) => Ok((SolverChoice::GreedyTgd, Some(p))),
                _ => Err(CliError::Config(
                    "constraints do not form the single coverage shape greedy-tgd needs".into(),
                )),
            }
        }
        SolverChoice::Mcmf => {
            if !is_av {
                return Err(CliError::Config("mcmf requires --rule av".into()));
            }
            match pattern() {
                Some(p @ PatternMatch::Double(_)) => Ok((SolverChoice::Mcmf, Some(p))),
                _ => Err(CliError::Config(
                    "constraints do not form the two-coverage shape mcmf needs".into(),
                )),
            }
        }
        SolverChoice::GreedyDc => {
            if !is_av {
                return Err(CliError::Config("greedy-dc requires --rule av".into()));
            }
            match pattern() {
                Some(p @ PatternMatch::DcKey(_)) => Ok((SolverChoice::GreedyDc, Some(p))),
                _ => Err(CliError::Config(
                    "constraints do not form the exclusion shape greedy-dc needs".into(),
                )),
            }
        }
        other => Ok((other, None)),
    }
}

fn committee_outcome(
    election: &Election,
    solver: &str,
    rule: &ScoringRule,
    k: usize,
    committee: Option<Committee>,
    timings: Timings,
) -> RunReport {
    let status = if committee.is_some() {
        RunStatus::Optimal
    } else {
        RunStatus::Infeasible
    };
    RunReport {
        status,
        solver: solver.to_owned(),
        rule: rule.name(),
        k,
        committee: committee
            .as_ref()
            .map(|c| member_reports(election, c)),
        objective: committee.as_ref().map(objective_report),
        model_stats: None,
        optimizations: None,
        timings_ms: timings,
    }
}

/// Runs the full pipeline and writes any requested output file. Printing
/// the report to stdout is the caller's job.
pub fn run(config: &RunConfig) -> Result<RunReport, CliError> {
    let inputs = load_inputs(config)?;
    let (choice, pattern) = resolve_solver(&inputs)?;
    let k = inputs.election.committee_size();

    let report = match choice {
        SolverChoice::Bnb => {
            let enc = encode(
                &inputs.db,
                &inputs.election,
                &inputs.rule,
                &inputs.gamma,
                inputs.options,
            )?;
            let solved = solve(
                &enc,
                &inputs.db,
                &inputs.election,
                &inputs.rule,
                &inputs.gamma,
                config.time_limit_ms,
            )?;
            let status = match solved.status {
                SolveStatus::Optimal => RunStatus::Optimal,
                SolveStatus::Infeasible => RunStatus::Infeasible,
                SolveStatus::Timeout => RunStatus::Timeout,
            };
            RunReport {
                status,
                solver: "bnb".into(),
                rule: inputs.rule.name(),
                k,
                committee: solved
                    .committee
                    .as_ref()
                    .map(|c| member_reports(&inputs.election, c)),
                objective: solved.committee.as_ref().map(objective_report),
                model_stats: Some(enc.model.stats()),
                optimizations: Some(enc.options),
                timings_ms: Timings {
                    load: inputs.load_ms,
                    ground: enc.ground_ms,
                    build: enc.build_ms,
                    solve: solved.solve_ms,
                },
            }
        }
        SolverChoice::Oracle => {
            let start = Instant::now();
            let committee = brute_force_winner(
                &inputs.db,
                &inputs.election,
                &inputs.rule,
                &inputs.gamma,
                DEFAULT_SUBSET_CAP,
                inputs_jobs(config)?,
            )?;
            committee_outcome(
                &inputs.election,
                "oracle",
                &inputs.rule,
                k,
                committee,
                Timings {
                    load: inputs.load_ms,
                    solve: start.elapsed().as_millis(),
                    ..Timings::default()
                },
            )
        }
        SolverChoice::GreedyTgd | SolverChoice::Mcmf | SolverChoice::GreedyDc => {
            let start = Instant::now();
            let (name, committee) = match pattern.expect("resolver certified a pattern") {
                PatternMatch::Single(p) => (
                    "greedy-tgd",
                    greedy_single_tgd(&inputs.election, &inputs.db, &p)?,
                ),
                PatternMatch::Double(p) => {
                    ("mcmf", mcmf_two_tgds(&inputs.election, &inputs.db, &p)?)
                }
                PatternMatch::DcKey(p) => {
                    ("greedy-dc", dc_key_greedy(&inputs.election, &inputs.db, &p)?)
                }
            };
            committee_outcome(
                &inputs.election,
                name,
                &inputs.rule,
                k,
                committee,
                Timings {
                    load: inputs.load_ms,
                    solve: start.elapsed().as_millis(),
                    ..Timings::default()
                },
            )
        }
        SolverChoice::LpExport => {
            let Some(out) = &config.out else {
                return Err(CliError::Config("lp-export requires --out".into()));
            };
            let enc = encode(
                &inputs.db,
                &inputs.election,
                &inputs.rule,
                &inputs.gamma,
                inputs.options,
            )?;
            write_file(out, &export_lp(&enc.model))?;
            RunReport {
                status: RunStatus::Exported,
                solver: "lp-export".into(),
                rule: inputs.rule.name(),
                k,
                committee: None,
                objective: None,
                model_stats: Some(enc.model.stats()),
                optimizations: Some(enc.options),
                timings_ms: Timings {
                    load: inputs.load_ms,
                    ground: enc.ground_ms,
                    build: enc.build_ms,
                    solve: 0,
                },
            }
        }
        SolverChoice::Auto => unreachable!("auto resolves to a concrete solver"),
    };

    if choice != SolverChoice::LpExport {
        if let Some(out) = &config.out {
            let json = serde_json::to_string_pretty(&report)
                .expect("report serialization cannot fail");
            write_file(out, &json)?;
        }
    }
    Ok(report)
}

fn inputs_jobs(config: &RunConfig) -> Result<usize, CliError> {
    if config.jobs == 0 {
        return Err(CliError::Config("--jobs must be at least 1".into()));
    }
    Ok(config.jobs)
}
