//! Shared support for the integration suites: fixture loading, seeded
//! instance generators, an independent legality evaluator, a completion
//! checker for encoded models, and a line-oriented LP reader.
//!
//! Everything is deterministic in the seed so failures reproduce exactly.

#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet};
use std::path::PathBuf;

use num::{BigInt, BigRational, ToPrimitive, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use abcc::constraints::{parse_constraints, CmpAtom, CmpOp, Constraint, RelAtom, Term};
use abcc::election::{candidates_from_profile, parse_approvals, Committee};
use abcc::mip::{EncodedModel, LinConstraint, ModelStats, RelOp, VarKind};
use abcc::relational::{
    load_database, load_schema, RelationSchema, ValueType,
};
use abcc::{ConstraintSet, Database, Election, Schema, ScoringRule, Value};

pub fn rat(n: i64) -> BigRational {
    BigRational::from_integer(BigInt::from(n))
}

pub fn ratio(n: i64, d: i64) -> BigRational {
    BigRational::new(BigInt::from(n), BigInt::from(d))
}

pub fn texts(names: &[&str]) -> Vec<Value> {
    names.iter().map(|n| Value::text(*n)).collect()
}

// ---------------------------------------------------------------------------
// Fixtures

pub fn fixture_dir(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../../fixtures")
        .join(name)
}

pub struct Fixture {
    pub schema: Schema,
    pub db: Database,
    pub election: Election,
    pub gamma: ConstraintSet,
}

/// Loads `fixtures/<name>` through the real input pipeline.
pub fn load_fixture(name: &str, constraints: Option<&str>, k: usize) -> Fixture {
    let dir = fixture_dir(name);
    let schema = load_schema(dir.join("schema.json")).expect("fixture schema");
    let db = load_database(&schema, dir.join("db")).expect("fixture database");
    let text = std::fs::read_to_string(dir.join("approvals.txt")).expect("approvals file");
    let profile = parse_approvals(&text).expect("approvals parse");
    let candidates = candidates_from_profile(&profile);
    let election = Election::new(candidates, profile, k).expect("election");
    let gamma = match constraints {
        Some(file) => {
            let text = std::fs::read_to_string(dir.join(file)).expect("constraints file");
            parse_constraints(&text, &schema).expect("constraints parse")
        }
        None => ConstraintSet::default(),
    };
    Fixture {
        schema,
        db,
        election,
        gamma,
    }
}

// ---------------------------------------------------------------------------
// Seeded instance generation

pub struct Instance {
    pub seed: u64,
    pub schema: Schema,
    pub db: Database,
    pub election: Election,
    pub gamma: ConstraintSet,
    pub rule: ScoringRule,
}

pub struct GenConfig {
    pub max_candidates: usize,
    pub max_voters: usize,
    pub max_k: usize,
    pub max_tgds: usize,
    pub max_dcs: usize,
    pub rotate_rules: bool,
}

impl GenConfig {
    /// The mixed-constraint sweep family.
    pub fn sweep() -> Self {
        GenConfig {
            max_candidates: 12,
            max_voters: 30,
            max_k: 5,
            max_tgds: 2,
            max_dcs: 2,
            rotate_rules: true,
        }
    }
}

fn cand(i: usize) -> Value {
    Value::text(format!("c{i}"))
}

fn tag(i: usize) -> Value {
    Value::text(format!("t{i}"))
}

fn relation(name: &str, attrs: &[(&str, ValueType)], keys: &[usize]) -> RelationSchema {
    RelationSchema {
        name: name.into(),
        attributes: attrs.iter().map(|(a, _)| (*a).into()).collect(),
        keys: keys.iter().copied().collect(),
        types: attrs.iter().map(|(_, t)| *t).collect(),
    }
}

fn sweep_schema() -> Schema {
    Schema::new(vec![
        relation(
            "Owns",
            &[("member", ValueType::Text), ("tag", ValueType::Text)],
            &[],
        ),
        relation("Wanted", &[("tag", ValueType::Text)], &[]),
    ])
    .expect("static schema")
}

fn random_profile(
    rng: &mut ChaCha8Rng,
    n_c: usize,
    n_v: usize,
) -> Vec<(String, Vec<Value>)> {
    let p = rng.random_range(0.25..0.75);
    (0..n_v)
        .map(|v| {
            let mut ballot: Vec<Value> =
                (0..n_c).filter(|_| rng.random_bool(p)).map(cand).collect();
            if ballot.is_empty() {
                ballot.push(cand(rng.random_range(0..n_c)));
            }
            (format!("v{v}"), ballot)
        })
        .collect()
}

fn random_tgd_line(rng: &mut ChaCha8Rng, n_tags: usize) -> String {
    match rng.random_range(0..3) {
        0 => "TGD: Wanted(x) -> EXISTS c . Owns(c, x) & Com(c)".into(),
        1 => format!(
            "TGD: true -> EXISTS c . Owns(c, \"t{}\") & Com(c)",
            rng.random_range(0..n_tags)
        ),
        _ => {
            let a = rng.random_range(0..n_tags);
            let b = rng.random_range(0..n_tags);
            format!("TGD: Owns(c, \"t{a}\") & Com(c) -> EXISTS d . Owns(d, \"t{b}\") & Com(d)")
        }
    }
}

fn random_dc_line(rng: &mut ChaCha8Rng, n_tags: usize) -> String {
    match rng.random_range(0..4) {
        0 => "DC: Com(c1) & Com(c2) & Owns(c1, x) & Owns(c2, x) & c1 != c2".into(),
        1 => format!("DC: Com(c) & Owns(c, \"t{}\")", rng.random_range(0..n_tags)),
        2 => {
            let a = rng.random_range(0..n_tags);
            let b = rng.random_range(0..n_tags);
            format!(
                "DC: Com(c1) & Com(c2) & Owns(c1, \"t{a}\") & Owns(c2, \"t{b}\") & c1 != c2"
            )
        }
        _ => {
            let a = rng.random_range(0..n_tags);
            let b = rng.random_range(0..n_tags);
            format!("DC: Com(c1) & Com(c2) & Owns(c1, \"t{a}\") & Owns(c2, \"t{b}\")")
        }
    }
}

fn rotate_rule(seed: u64) -> ScoringRule {
    match seed % 5 {
        0 => ScoringRule::Av,
        1 => ScoringRule::Pav,
        2 => ScoringRule::Cc,
        3 => ScoringRule::Sav,
        _ => ScoringRule::truncated(2).expect("p >= 1"),
    }
}

/// A random instance over two synthetic relations with up to
/// `max_tgds`/`max_dcs` constraints drawn from fixed template families.
pub fn gen_instance(seed: u64, cfg: &GenConfig) -> Instance {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n_c = rng.random_range(3..=cfg.max_candidates);
    let n_v = rng.random_range(1..=cfg.max_voters);
    let k = rng.random_range(1..=cfg.max_k.min(n_c));
    let n_tags = rng.random_range(2..=4usize);

    let schema = sweep_schema();
    let mut db = Database::with_schema(&schema);
    for t in 0..n_tags {
        if rng.random_bool(0.6) {
            db.insert("Wanted", vec![tag(t)]).unwrap();
        }
    }
    for c in 0..n_c {
        let count = [0usize, 1, 1, 2][rng.random_range(0..4)];
        let mut picked = BTreeSet::new();
        while picked.len() < count {
            picked.insert(rng.random_range(0..n_tags));
        }
        for t in picked {
            db.insert("Owns", vec![cand(c), tag(t)]).unwrap();
        }
    }

    let profile = random_profile(&mut rng, n_c, n_v);
    let election = Election::new((0..n_c).map(cand).collect(), profile, k).unwrap();

    let mut lines = Vec::new();
    for _ in 0..rng.random_range(0..=cfg.max_tgds) {
        lines.push(random_tgd_line(&mut rng, n_tags));
    }
    for _ in 0..rng.random_range(0..=cfg.max_dcs) {
        lines.push(random_dc_line(&mut rng, n_tags));
    }
    let gamma = parse_constraints(&lines.join("\n"), &schema).expect("template constraints");

    let rule = if cfg.rotate_rules {
        rotate_rule(seed)
    } else {
        ScoringRule::Av
    };
    Instance {
        seed,
        schema,
        db,
        election,
        gamma,
        rule,
    }
}

// ---------------------------------------------------------------------------
// Key-guarded pattern instances (always AV)

/// Coverage demand with a keyed witness relation: every listed district must
/// contribute a committee member living there, members live in one district.
pub fn gen_single_tgd_instance(seed: u64) -> Instance {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n_c = rng.random_range(3..=10usize);
    let n_d = rng.random_range(1..=4usize);
    let schema = Schema::new(vec![
        relation("District", &[("name", ValueType::Text)], &[]),
        relation(
            "Lives",
            &[("member", ValueType::Text), ("district", ValueType::Text)],
            &[1],
        ),
    ])
    .expect("static schema");

    let mut db = Database::with_schema(&schema);
    for d in 0..n_d {
        if rng.random_bool(0.7) {
            db.insert("District", vec![Value::text(format!("d{d}"))]).unwrap();
        }
    }
    for c in 0..n_c {
        if rng.random_bool(0.85) {
            let d = rng.random_range(0..n_d);
            db.insert("Lives", vec![cand(c), Value::text(format!("d{d}"))])
                .unwrap();
        }
    }

    let n_v = rng.random_range(1..=12usize);
    let k = rng.random_range(1..=5usize.min(n_c));
    let profile = random_profile(&mut rng, n_c, n_v);
    let election = Election::new((0..n_c).map(cand).collect(), profile, k).unwrap();
    let gamma = parse_constraints(
        "TGD: District(x) -> EXISTS c . Lives(c, x) & Com(c)",
        &schema,
    )
    .unwrap();
    Instance {
        seed,
        schema,
        db,
        election,
        gamma,
        rule: ScoringRule::Av,
    }
}

/// Two independent coverage demands over keyed witness relations.
pub fn gen_double_tgd_instance(seed: u64) -> Instance {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n_c = rng.random_range(3..=10usize);
    let n_a = rng.random_range(1..=3usize);
    let n_b = rng.random_range(1..=3usize);
    let schema = Schema::new(vec![
        relation("NeedA", &[("val", ValueType::Text)], &[]),
        relation("NeedB", &[("val", ValueType::Text)], &[]),
        relation(
            "HasA",
            &[("member", ValueType::Text), ("val", ValueType::Text)],
            &[1],
        ),
        relation(
            "HasB",
            &[("member", ValueType::Text), ("val", ValueType::Text)],
            &[1],
        ),
    ])
    .expect("static schema");

    let mut db = Database::with_schema(&schema);
    for a in 0..n_a {
        if rng.random_bool(0.7) {
            db.insert("NeedA", vec![Value::text(format!("a{a}"))]).unwrap();
        }
    }
    for b in 0..n_b {
        if rng.random_bool(0.7) {
            db.insert("NeedB", vec![Value::text(format!("b{b}"))]).unwrap();
        }
    }
    for c in 0..n_c {
        if rng.random_bool(0.8) {
            let a = rng.random_range(0..n_a);
            db.insert("HasA", vec![cand(c), Value::text(format!("a{a}"))])
                .unwrap();
        }
        if rng.random_bool(0.8) {
            let b = rng.random_range(0..n_b);
            db.insert("HasB", vec![cand(c), Value::text(format!("b{b}"))])
                .unwrap();
        }
    }

    let n_v = rng.random_range(1..=12usize);
    let k = rng.random_range(1..=5usize.min(n_c));
    let profile = random_profile(&mut rng, n_c, n_v);
    let election = Election::new((0..n_c).map(cand).collect(), profile, k).unwrap();
    let gamma = parse_constraints(
        "TGD: NeedA(x) -> EXISTS c . HasA(c, x) & Com(c)\n\
         TGD: NeedB(x) -> EXISTS c . HasB(c, x) & Com(c)",
        &schema,
    )
    .unwrap();
    Instance {
        seed,
        schema,
        db,
        election,
        gamma,
        rule: ScoringRule::Av,
    }
}

/// At most one committee member per ward, with ward membership keyed.
pub fn gen_dc_key_instance(seed: u64) -> Instance {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n_c = rng.random_range(3..=10usize);
    let n_w = rng.random_range(1..=4usize);
    let schema = Schema::new(vec![relation(
        "Ward",
        &[("member", ValueType::Text), ("ward", ValueType::Text)],
        &[1],
    )])
    .expect("static schema");

    let mut db = Database::with_schema(&schema);
    for c in 0..n_c {
        if rng.random_bool(0.8) {
            let w = rng.random_range(0..n_w);
            db.insert("Ward", vec![cand(c), Value::text(format!("w{w}"))])
                .unwrap();
        }
    }

    let n_v = rng.random_range(1..=12usize);
    let k = rng.random_range(1..=6usize.min(n_c));
    let profile = random_profile(&mut rng, n_c, n_v);
    let election = Election::new((0..n_c).map(cand).collect(), profile, k).unwrap();
    let gamma = parse_constraints(
        "DC: Com(c1) & Com(c2) & Ward(c1, x) & Ward(c2, x) & c1 != c2",
        &schema,
    )
    .unwrap();
    Instance {
        seed,
        schema,
        db,
        election,
        gamma,
        rule: ScoringRule::Av,
    }
}

/// The worked two-coverage example: five candidates, three first-kind
/// demands, two second-kind demands, k = 4.
pub fn census_instance() -> Instance {
    let schema = Schema::new(vec![
        relation("NeedA", &[("val", ValueType::Int)], &[]),
        relation("NeedB", &[("val", ValueType::Int)], &[]),
        relation(
            "HasA",
            &[("member", ValueType::Text), ("val", ValueType::Int)],
            &[1],
        ),
        relation(
            "HasB",
            &[("member", ValueType::Text), ("val", ValueType::Int)],
            &[1],
        ),
    ])
    .expect("static schema");
    let mut db = Database::with_schema(&schema);
    for v in [1i64, 2, 3] {
        db.insert("NeedA", vec![Value::Int(v)]).unwrap();
    }
    for v in [1i64, 2] {
        db.insert("NeedB", vec![Value::Int(v)]).unwrap();
    }
    for (c, v) in [("c1", 1i64), ("c2", 1), ("c3", 2), ("c4", 3)] {
        db.insert("HasA", vec![Value::text(c), Value::Int(v)]).unwrap();
    }
    for (c, v) in [("c1", 1i64), ("c2", 2), ("c4", 2)] {
        db.insert("HasB", vec![Value::text(c), Value::Int(v)]).unwrap();
    }
    let profile = vec![
        ("v1".into(), texts(&["c1", "c2", "c3", "c4", "c5"])),
        ("v2".into(), texts(&["c1", "c2", "c4", "c5"])),
        ("v3".into(), texts(&["c2", "c5"])),
        ("v4".into(), texts(&["c5"])),
        ("v5".into(), texts(&["c5"])),
    ];
    let election = Election::new(texts(&["c1", "c2", "c3", "c4", "c5"]), profile, 4).unwrap();
    let gamma = parse_constraints(
        "TGD: NeedA(x) -> EXISTS c . HasA(c, x) & Com(c)\n\
         TGD: NeedB(x) -> EXISTS c . HasB(c, x) & Com(c)",
        &schema,
    )
    .unwrap();
    Instance {
        seed: 0,
        schema,
        db,
        election,
        gamma,
        rule: ScoringRule::Av,
    }
}

// ---------------------------------------------------------------------------
// Independent legality evaluation

fn resolve(term: &Term, a: &BTreeMap<String, Value>) -> Value {
    match term {
        Term::Const(v) => v.clone(),
        Term::Var(x) => a.get(x).expect("variable is bound").clone(),
    }
}

fn atoms_hold(
    db: &Database,
    committee: &BTreeSet<Value>,
    atoms: &[RelAtom],
    a: &BTreeMap<String, Value>,
) -> bool {
    atoms.iter().all(|atom| {
        let tuple: Vec<Value> = atom.terms.iter().map(|t| resolve(t, a)).collect();
        if atom.is_com() {
            committee.contains(&tuple[0])
        } else {
            db.relation(&atom.relation)
                .expect("constraint names a database relation")
                .contains(&tuple)
        }
    })
}

fn cmp_holds(cmp: &CmpAtom, a: &BTreeMap<String, Value>) -> bool {
    let l = resolve(&cmp.left, a);
    let r = resolve(&cmp.right, a);
    match cmp.op {
        CmpOp::Eq => l == r,
        CmpOp::Ne => l != r,
        op => match (l, r) {
            (Value::Int(l), Value::Int(r)) => match op {
                CmpOp::Lt => l < r,
                CmpOp::Le => l <= r,
                CmpOp::Gt => l > r,
                CmpOp::Ge => l >= r,
                CmpOp::Eq | CmpOp::Ne => unreachable!(),
            },
            _ => panic!("order comparison on non-integers"),
        },
    }
}

fn every(
    domain: &[Value],
    vars: &[String],
    base: &mut BTreeMap<String, Value>,
    pred: &mut dyn FnMut(&BTreeMap<String, Value>) -> bool,
) -> bool {
    let Some((head, rest)) = vars.split_first() else {
        return pred(base);
    };
    for value in domain {
        base.insert(head.clone(), value.clone());
        if !every(domain, rest, base, pred) {
            base.remove(head);
            return false;
        }
    }
    base.remove(head);
    true
}

fn some(
    domain: &[Value],
    vars: &[String],
    base: &mut BTreeMap<String, Value>,
    pred: &mut dyn FnMut(&BTreeMap<String, Value>) -> bool,
) -> bool {
    let Some((head, rest)) = vars.split_first() else {
        return pred(base);
    };
    for value in domain {
        base.insert(head.clone(), value.clone());
        if some(domain, rest, base, pred) {
            base.remove(head);
            return true;
        }
    }
    base.remove(head);
    false
}

/// Legality by exhaustive enumeration over the active domain (database
/// values plus committee members). Shares nothing with the join-based
/// checker, so the two can cross-validate each other.
pub fn naive_is_legal(
    db: &Database,
    gamma: &ConstraintSet,
    committee: &BTreeSet<Value>,
    k: usize,
) -> bool {
    if committee.len() != k {
        return false;
    }
    let mut domain: BTreeSet<Value> = committee.clone();
    let names: Vec<String> = db.relation_names().map(str::to_owned).collect();
    for name in &names {
        for tuple in db.relation(name).expect("listed relation").tuples() {
            domain.extend(tuple.iter().cloned());
        }
    }
    let domain: Vec<Value> = domain.into_iter().collect();

    gamma.constraints.iter().all(|constraint| match constraint {
        Constraint::Tgd(tgd) => every(
            &domain,
            &tgd.universal_vars,
            &mut BTreeMap::new(),
            &mut |uv| {
                if !atoms_hold(db, committee, &tgd.body, uv) {
                    return true;
                }
                some(
                    &domain,
                    &tgd.existential_vars,
                    &mut uv.clone(),
                    &mut |full| atoms_hold(db, committee, &tgd.head, full),
                )
            },
        ),
        Constraint::Dc(dc) => {
            let rels: Vec<RelAtom> = dc.relational_atoms().cloned().collect();
            let cmps: Vec<CmpAtom> = dc.comparison_atoms().cloned().collect();
            every(
                &domain,
                &dc.universal_vars,
                &mut BTreeMap::new(),
                &mut |uv| {
                    !(atoms_hold(db, committee, &rels, uv)
                        && cmps.iter().all(|c| cmp_holds(c, uv)))
                },
            )
        }
    })
}

// ---------------------------------------------------------------------------
// Model completion

/// Extends the 0/1 selection `members` (candidate ordinals) to a full model
/// assignment when one exists and returns its objective value.
///
/// Count variables are forced by their defining equalities, deviation pairs
/// split their row's residual by sign, indicator variables take the largest
/// value their coupling rows allow, and satisfaction variables take their
/// tightest cap. Every bound and row is then re-checked numerically, so
/// `Some` is a verified feasible assignment and `None` means this selection
/// cannot be extended at all.
pub fn feasible_at(enc: &EncodedModel, members: &BTreeSet<usize>) -> Option<BigRational> {
    let model = &enc.model;
    let zero = BigRational::zero();
    let nv = model.vars().len();
    let mut vals: Vec<Option<BigRational>> = vec![None; nv];

    let zset: BTreeSet<usize> = enc.z_vars.iter().copied().collect();
    for (j, &zv) in enc.z_vars.iter().enumerate() {
        vals[zv] = Some(rat(members.contains(&j) as i64));
    }
    for (i, var) in model.vars().iter().enumerate() {
        if vals[i].is_none() && var.lower == var.upper {
            vals[i] = Some(var.lower.clone());
        }
    }

    let open_and_residual = |row: &LinConstraint, vals: &[Option<BigRational>]| {
        let mut open: Vec<(usize, BigRational)> = Vec::new();
        let mut acc = row.rhs.clone();
        for (v, c) in &row.terms {
            match &vals[*v] {
                Some(x) => acc -= c * x,
                None => open.push((*v, c.clone())),
            }
        }
        (open, acc)
    };

    // Equalities with one open variable pin the count variables.
    loop {
        let mut progress = false;
        for row in model.constraints() {
            if row.op != RelOp::Eq {
                continue;
            }
            let (open, residual) = open_and_residual(row, &vals);
            if let [(v, c)] = open.as_slice() {
                vals[*v] = Some(&residual / c);
                progress = true;
            }
        }
        if !progress {
            break;
        }
    }

    // Deviation rows: exactly two open variables, a nonnegative pair whose
    // difference must equal the residual. The minimal split is forced.
    for row in model.constraints() {
        if row.op != RelOp::Eq {
            continue;
        }
        let (open, residual) = open_and_residual(row, &vals);
        if open.len() != 2 {
            continue;
        }
        let up = open
            .iter()
            .find(|(v, _)| model.var(*v).name.starts_with("abs_tp_"))
            .expect("positive deviation variable");
        let down = open
            .iter()
            .find(|(v, _)| model.var(*v).name.starts_with("abs_tm_"))
            .expect("negative deviation variable");
        assert_eq!(up.1, rat(1), "deviation row shape");
        assert_eq!(down.1, rat(-1), "deviation row shape");
        if residual >= zero {
            vals[up.0] = Some(residual);
            vals[down.0] = Some(zero.clone());
        } else {
            vals[up.0] = Some(zero.clone());
            vals[down.0] = Some(-residual);
        }
    }

    // Sign indicators pair with their deviation variables by name.
    for i in 0..nv {
        if vals[i].is_some() {
            continue;
        }
        let name = model.var(i).name.clone();
        let Some(suffix) = name.strip_prefix("abs_b_") else {
            continue;
        };
        let up = model
            .lookup(&format!("abs_tp_{suffix}"))
            .expect("paired positive deviation");
        let down = model
            .lookup(&format!("abs_tm_{suffix}"))
            .expect("paired negative deviation");
        let positive = vals[up].as_ref().expect("deviation assigned") > &zero;
        let negative = vals[down].as_ref().expect("deviation assigned") > &zero;
        vals[i] = Some(rat(if positive {
            1
        } else if negative {
            0
        } else {
            1
        }));
    }

    // Dependency indicators: 1 exactly when every selection variable of
    // their defining row is picked. For premise indicators this is forced;
    // for witness indicators it is the maximal feasible choice.
    for i in 0..nv {
        if vals[i].is_some() || !model.var(i).name.starts_with("tgd") {
            continue;
        }
        let defining = model
            .constraints()
            .iter()
            .find(|row| {
                row.op == RelOp::Ge
                    && row.rhs == zero
                    && row
                        .terms
                        .iter()
                        .any(|(v, c)| *v == i && c < &zero)
                    && row.terms.iter().all(|(v, _)| *v == i || zset.contains(v))
            })
            .expect("indicator has a defining row");
        let all_picked = defining
            .terms
            .iter()
            .filter(|(v, _)| *v != i)
            .all(|(v, _)| vals[*v].as_ref() == Some(&rat(1)));
        vals[i] = Some(rat(all_picked as i64));
    }

    // Satisfaction variables take the tightest cap among their rows.
    for i in 0..nv {
        if vals[i].is_some() {
            continue;
        }
        let var = model.var(i);
        assert!(
            var.name.starts_with("s_"),
            "unexpected open variable {}",
            var.name
        );
        let mut best = var.upper.clone();
        for row in model.constraints() {
            let Some((_, coeff)) = row.terms.iter().find(|(v, _)| *v == i) else {
                continue;
            };
            assert_eq!(row.op, RelOp::Le, "satisfaction rows are caps");
            assert!(coeff > &zero);
            let mut cap = row.rhs.clone();
            for (v, c) in &row.terms {
                if *v != i {
                    cap -= c * vals[*v].as_ref().expect("cap row is otherwise assigned");
                }
            }
            cap /= coeff.clone();
            if cap < best {
                best = cap;
            }
        }
        vals[i] = Some(best);
    }

    // Full numeric re-check; the construction above is only a candidate.
    for (i, var) in model.vars().iter().enumerate() {
        let val = vals[i].as_ref().expect("assignment is complete");
        if *val < var.lower || *val > var.upper {
            return None;
        }
        if !matches!(var.kind, VarKind::Continuous) && !val.is_integer() {
            return None;
        }
    }
    for row in model.constraints() {
        let mut lhs = BigRational::zero();
        for (v, c) in &row.terms {
            lhs += c * vals[*v].as_ref().expect("assignment is complete");
        }
        let ok = match row.op {
            RelOp::Le => lhs <= row.rhs,
            RelOp::Ge => lhs >= row.rhs,
            RelOp::Eq => lhs == row.rhs,
        };
        if !ok {
            return None;
        }
    }

    let mut objective = BigRational::zero();
    for (v, c) in model.objective() {
        objective += c * vals[*v].as_ref().expect("assignment is complete");
    }
    Some(objective)
}

// ---------------------------------------------------------------------------
// Selection-only rows

/// An inequality over selection variables only, rebased to candidate
/// ordinals. Coefficients in these rows are small integers.
pub struct ZRow {
    pub terms: Vec<(usize, i64)>,
    pub le: bool,
    pub rhs: i64,
}

fn small_int(r: &BigRational) -> i64 {
    assert!(r.is_integer(), "selection row entries are integers");
    r.to_integer().to_i64().expect("selection row entry fits i64")
}

/// Every inequality whose variables are all selection variables. The
/// committee-size equality is excluded so the comparison stays meaningful
/// for vectors of any weight.
pub fn selection_rows(enc: &EncodedModel) -> Vec<ZRow> {
    let pos: BTreeMap<usize, usize> = enc
        .z_vars
        .iter()
        .enumerate()
        .map(|(j, &v)| (v, j))
        .collect();
    enc.model
        .constraints()
        .iter()
        .filter(|row| {
            row.op != RelOp::Eq && row.terms.iter().all(|(v, _)| pos.contains_key(v))
        })
        .map(|row| ZRow {
            terms: row
                .terms
                .iter()
                .map(|(v, c)| (pos[v], small_int(c)))
                .collect(),
            le: row.op == RelOp::Le,
            rhs: small_int(&row.rhs),
        })
        .collect()
}

/// Whether the 0/1 vector encoded in `mask` (bit j = candidate j) satisfies
/// every row.
pub fn rows_accept(rows: &[ZRow], mask: u32) -> bool {
    rows.iter().all(|row| {
        let lhs: i64 = row
            .terms
            .iter()
            .map(|(j, c)| if mask >> *j & 1 == 1 { *c } else { 0 })
            .sum();
        if row.le {
            lhs <= row.rhs
        } else {
            lhs >= row.rhs
        }
    })
}

// ---------------------------------------------------------------------------
// LP reading

/// Reads the size counters back out of an LP document. Zero-coefficient
/// placeholder terms (rendered for otherwise empty rows) do not count as
/// matrix entries.
pub fn parse_lp_stats(text: &str) -> ModelStats {
    #[derive(PartialEq, Clone, Copy)]
    enum Section {
        None,
        Objective,
        Constraints,
        Bounds,
        Generals,
        Binaries,
        Done,
    }
    let mut section = Section::None;
    let mut variables = 0usize;
    let mut binaries = 0usize;
    let mut integers = 0usize;
    let mut constraints = 0usize;
    let mut nonzeros = 0usize;
    for line in text.lines() {
        match line {
            "Maximize" => {
                section = Section::Objective;
                continue;
            }
            "Subject To" => {
                section = Section::Constraints;
                continue;
            }
            "Bounds" => {
                section = Section::Bounds;
                continue;
            }
            "Generals" => {
                section = Section::Generals;
                continue;
            }
            "Binaries" => {
                section = Section::Binaries;
                continue;
            }
            "End" => {
                section = Section::Done;
                continue;
            }
            _ => {}
        }
        if line.trim().is_empty() {
            continue;
        }
        match section {
            Section::Constraints => {
                constraints += 1;
                nonzeros += count_terms(line);
            }
            Section::Bounds => variables += 1,
            Section::Generals => integers += 1,
            Section::Binaries => binaries += 1,
            Section::None | Section::Objective | Section::Done => {}
        }
    }
    ModelStats {
        variables,
        binaries,
        integers,
        continuous: variables - binaries - integers,
        constraints,
        nonzeros,
    }
}

fn count_terms(line: &str) -> usize {
    let expr = line.split_once(':').map(|(_, rest)| rest).unwrap_or(line);
    let mut count = 0usize;
    let mut tokens = expr.split_whitespace();
    while let Some(token) = tokens.next() {
        match token {
            "<=" | ">=" | "=" => break,
            "+" | "-" => continue,
            coeff => {
                tokens.next().expect("coefficient is followed by a name");
                if coeff != "0" {
                    count += 1;
                }
            }
        }
    }
    count
}

// ---------------------------------------------------------------------------
// Outcome comparison

/// Both answers must agree on feasibility, the exact objective, and the
/// returned members.
pub fn assert_same_outcome(a: &Option<Committee>, b: &Option<Committee>, ctx: &str) {
    match (a, b) {
        (None, None) => {}
        (Some(x), Some(y)) => {
            assert_eq!(x.score, y.score, "objective mismatch: {ctx}");
            assert_eq!(x.members, y.members, "member mismatch: {ctx}");
        }
        _ => panic!(
            "verdict mismatch: {ctx} ({} vs {})",
            a.as_ref().map_or("infeasible".into(), |c| c.score.to_string()),
            b.as_ref().map_or("infeasible".into(), |c| c.score.to_string()),
        ),
    }
}

/// Both answers must agree on feasibility and the exact objective; members
/// may differ when several committees tie.
pub fn assert_same_objective(a: &Option<Committee>, b: &Option<Committee>, ctx: &str) {
    match (a, b) {
        (None, None) => {}
        (Some(x), Some(y)) => {
            assert_eq!(x.score, y.score, "objective mismatch: {ctx}");
        }
        _ => panic!(
            "verdict mismatch: {ctx} ({} vs {})",
            a.as_ref().map_or("infeasible".into(), |c| c.score.to_string()),
            b.as_ref().map_or("infeasible".into(), |c| c.score.to_string()),
        ),
    }
}
