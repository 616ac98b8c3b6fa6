//! Fixture builders shared by unit tests: a small conference-committee
//! database with five candidates and five voters.

use crate::constraints::{parse_constraints, ConstraintSet};
use crate::election::Election;
use crate::relational::{load_schema_str, Database, Schema, Value};

pub fn v(s: &str) -> Value {
    Value::text(s)
}

pub fn staff_schema() -> Schema {
    load_schema_str(
        r#"{"relations":[
            {"name":"Supervise","attributes":["boss","student"],"types":["text","text"]},
            {"name":"Author","attributes":["person","paper"],"types":["text","text"]},
            {"name":"Pub","attributes":["paper","topic"],"types":["text","text"],"keys":[1]},
            {"name":"Topic","attributes":["topic"],"types":["text"]}
        ]}"#,
    )
    .unwrap()
}

pub fn staff_db(topics: &[&str]) -> Database {
    let schema = staff_schema();
    let mut db = Database::with_schema(&schema);
    for (a, b) in [
        ("Ann", "Bob"),
        ("Bob", "Fred"),
        ("Cale", "Eva"),
        ("Dave", "Fred"),
    ] {
        db.insert("Supervise", vec![v(a), v(b)]).unwrap();
    }
    for (a, p) in [
        ("Ann", "p1"),
        ("Ann", "p2"),
        ("Bob", "p1"),
        ("Bob", "p3"),
        ("Cale", "p4"),
        ("Dave", "p5"),
    ] {
        db.insert("Author", vec![v(a), v(p)]).unwrap();
    }
    for (p, t) in [
        ("p1", "ML"),
        ("p2", "PL"),
        ("p3", "OS"),
        ("p4", "AI"),
        ("p5", "OS"),
    ] {
        db.insert("Pub", vec![v(p), v(t)]).unwrap();
    }
    for t in topics {
        db.insert("Topic", vec![v(t)]).unwrap();
    }
    db
}

/// Full database: all four publication topics listed.
pub fn fig_db() -> Database {
    staff_db(&["AI", "ML", "OS", "PL"])
}

/// Variant whose Topic relation lists only the topics the voters' favorite
/// candidates cover; used by the dependency-set fixture.
pub fn coverage_db() -> Database {
    staff_db(&["ML", "OS", "PL"])
}

pub fn fig_election(k: usize) -> Election {
    let candidates = ["Ann", "Bob", "Cale", "Dave", "Eva"]
        .iter()
        .map(|c| v(c))
        .collect();
    let profile = vec![
        ("v1".into(), vec![v("Ann"), v("Dave")]),
        ("v2".into(), vec![v("Ann"), v("Bob"), v("Dave")]),
        ("v3".into(), vec![v("Ann"), v("Eva")]),
        ("v4".into(), vec![v("Cale")]),
        ("v5".into(), vec![v("Bob"), v("Dave")]),
    ];
    Election::new(candidates, profile, k).unwrap()
}

/// No member may supervise another member.
pub fn supervise_dc() -> ConstraintSet {
    parse_constraints(
        "DC: Supervise(c1, c2) & Com(c1) & Com(c2)",
        &staff_schema(),
    )
    .unwrap()
}

/// Three dependencies: every listed topic is covered by a member's
/// publication, some member published in both ML and PL, and supervision
/// between members requires the supervisor to have an ML publication.
pub fn coverage_tgds() -> ConstraintSet {
    parse_constraints(
        "\
TGD: Topic(t) -> EXISTS c, p . Author(c, p) & Pub(p, t) & Com(c)
TGD: true -> EXISTS c, f, g . Author(c, f) & Author(c, g) & Pub(f, \"ML\") & Pub(g, \"PL\") & Com(c)
TGD: Supervise(c1, c2) & Com(c1) & Com(c2) -> EXISTS p . Author(c1, p) & Pub(p, \"ML\")
",
        &staff_schema(),
    )
    .unwrap()
}
