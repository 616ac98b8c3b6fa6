//! Values, schemas, databases, and conjunctive-pattern grounding.
//!
//! A [`Database`] is a finite set of named relations over [`Value`]s. A
//! [`Schema`] declares each relation's attributes, attribute types, and key
//! attributes. The relation name `Com` is reserved: it denotes the committee
//! and may appear in constraints but never in a schema or database.

mod ground;

pub use ground::ground_conjunction;

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;
use std::path::Path;

use serde::Deserialize;
use thiserror::Error;

/// A database value: a 64-bit integer or a text string.
///
/// Equality is by type and content; `Int(5)` and `Text("5")` are distinct.
/// The ordering (integers before texts, each ordered naturally) is the
/// canonical order used for deterministic enumeration.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Value {
    Int(i64),
    Text(String),
}

impl Value {
    pub fn text(s: impl Into<String>) -> Self {
        Value::Text(s.into())
    }

    pub fn type_of(&self) -> ValueType {
        match self {
            Value::Int(_) => ValueType::Int,
            Value::Text(_) => ValueType::Text,
        }
    }
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Int(n) => write!(f, "{n}"),
            Value::Text(s) => write!(f, "{s}"),
        }
    }
}

impl From<i64> for Value {
    fn from(n: i64) -> Self {
        Value::Int(n)
    }
}

impl From<&str> for Value {
    fn from(s: &str) -> Self {
        Value::Text(s.to_owned())
    }
}

/// Declared type of an attribute.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ValueType {
    Int,
    Text,
}

/// Name reserved for the committee relation in constraints.
pub const COM: &str = "Com";

/// Schema of one relation: name, attribute names, 1-based key attributes,
/// and per-attribute types.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RelationSchema {
    pub name: String,
    pub attributes: Vec<String>,
    pub keys: BTreeSet<usize>,
    pub types: Vec<ValueType>,
}

impl RelationSchema {
    pub fn arity(&self) -> usize {
        self.attributes.len()
    }
}

/// A validated collection of relation schemas with unique names.
#[derive(Debug, Clone)]
pub struct Schema {
    relations: Vec<RelationSchema>,
    by_name: HashMap<String, usize>,
}

impl Schema {
    /// Validates and indexes the declarations. Rejects duplicate or reserved
    /// names, empty attribute lists, key indexes out of range, and
    /// type/attribute length mismatches.
    pub fn new(relations: Vec<RelationSchema>) -> Result<Self, RelationalError> {
        let mut by_name = HashMap::new();
        for (i, rel) in relations.iter().enumerate() {
            if rel.name == COM {
                return Err(RelationalError::ReservedRelation(rel.name.clone()));
            }
            if by_name.insert(rel.name.clone(), i).is_some() {
                return Err(RelationalError::DuplicateRelation(rel.name.clone()));
            }
            if rel.attributes.is_empty() {
                return Err(RelationalError::SchemaShape {
                    relation: rel.name.clone(),
                    detail: "relation must have at least one attribute".into(),
                });
            }
            if rel.types.len() != rel.attributes.len() {
                return Err(RelationalError::SchemaShape {
                    relation: rel.name.clone(),
                    detail: format!(
                        "{} attributes but {} types",
                        rel.attributes.len(),
                        rel.types.len()
                    ),
                });
            }
            for &k in &rel.keys {
                if k == 0 || k > rel.arity() {
                    return Err(RelationalError::BadKeyIndex {
                        relation: rel.name.clone(),
                        index: k,
                        arity: rel.arity(),
                    });
                }
            }
        }
        Ok(Schema { relations, by_name })
    }

    pub fn relations(&self) -> &[RelationSchema] {
        &self.relations
    }

    pub fn get(&self, name: &str) -> Option<&RelationSchema> {
        self.by_name.get(name).map(|&i| &self.relations[i])
    }
}

/// Tuples of one relation, all of the same arity.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Relation {
    arity: usize,
    tuples: BTreeSet<Vec<Value>>,
}

impl Relation {
    pub fn new(arity: usize) -> Self {
        Relation {
            arity,
            tuples: BTreeSet::new(),
        }
    }

    pub fn arity(&self) -> usize {
        self.arity
    }

    pub fn len(&self) -> usize {
        self.tuples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tuples.is_empty()
    }

    pub fn tuples(&self) -> impl Iterator<Item = &Vec<Value>> {
        self.tuples.iter()
    }

    pub fn contains(&self, tuple: &[Value]) -> bool {
        self.tuples.contains(tuple)
    }

    /// Inserts a tuple; duplicates are absorbed (relations are sets).
    pub fn insert(&mut self, tuple: Vec<Value>) -> Result<(), RelationalError> {
        if tuple.len() != self.arity {
            return Err(RelationalError::ArityMismatch {
                relation: String::new(),
                expected: self.arity,
                found: tuple.len(),
            });
        }
        self.tuples.insert(tuple);
        Ok(())
    }
}

/// A database: named relations in deterministic (name) order.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Database {
    relations: BTreeMap<String, Relation>,
}

impl Database {
    pub fn new() -> Self {
        Database::default()
    }

    /// Creates an empty database with one relation per schema declaration.
    pub fn with_schema(schema: &Schema) -> Self {
        let mut db = Database::new();
        for rel in schema.relations() {
            db.relations
                .insert(rel.name.clone(), Relation::new(rel.arity()));
        }
        db
    }

    pub fn declare(&mut self, name: impl Into<String>, arity: usize) {
        self.relations.entry(name.into()).or_insert(Relation::new(arity));
    }

    pub fn insert(
        &mut self,
        name: &str,
        tuple: Vec<Value>,
    ) -> Result<(), RelationalError> {
        let rel = self
            .relations
            .get_mut(name)
            .ok_or_else(|| RelationalError::UnknownRelation(name.to_owned()))?;
        rel.insert(tuple).map_err(|e| match e {
            RelationalError::ArityMismatch {
                expected, found, ..
            } => RelationalError::ArityMismatch {
                relation: name.to_owned(),
                expected,
                found,
            },
            other => other,
        })
    }

    pub fn relation(&self, name: &str) -> Option<&Relation> {
        self.relations.get(name)
    }

    pub fn relation_names(&self) -> impl Iterator<Item = &str> {
        self.relations.keys().map(String::as_str)
    }
}

/// A finite map from variable names to values.
#[derive(Debug, Clone, Default, PartialEq, Eq, PartialOrd, Ord)]
pub struct Assignment {
    bindings: BTreeMap<String, Value>,
}

impl Assignment {
    pub fn new() -> Self {
        Assignment::default()
    }

    pub fn get(&self, var: &str) -> Option<&Value> {
        self.bindings.get(var)
    }

    pub fn bind(&mut self, var: impl Into<String>, value: Value) {
        self.bindings.insert(var.into(), value);
    }

    pub fn contains(&self, var: &str) -> bool {
        self.bindings.contains_key(var)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &Value)> {
        self.bindings.iter().map(|(k, v)| (k.as_str(), v))
    }

    pub fn len(&self) -> usize {
        self.bindings.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bindings.is_empty()
    }
}

impl FromIterator<(String, Value)> for Assignment {
    fn from_iter<I: IntoIterator<Item = (String, Value)>>(iter: I) -> Self {
        Assignment {
            bindings: iter.into_iter().collect(),
        }
    }
}

/// Two tuples of one relation agreeing on a declared key attribute.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct KeyViolation {
    pub relation: String,
    /// 1-based attribute index.
    pub attribute: usize,
    pub first: Vec<Value>,
    pub second: Vec<Value>,
}

impl fmt::Display for KeyViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "key violation on {}[{}]: {:?} vs {:?}",
            self.relation, self.attribute, self.first, self.second
        )
    }
}

/// Checks every declared key of every relation present in `db`.
///
/// Returns one violation per (relation, key attribute, shared value) group,
/// witnessed by the two smallest conflicting tuples. The empty list means all
/// keys hold.
pub fn validate_keys(
    db: &Database,
    schema: &Schema,
) -> Result<Vec<KeyViolation>, RelationalError> {
    let mut violations = Vec::new();
    for (name, rel) in &db.relations {
        let decl = schema
            .get(name)
            .ok_or_else(|| RelationalError::UnknownRelation(name.clone()))?;
        for &attr in &decl.keys {
            let mut seen: BTreeMap<&Value, &Vec<Value>> = BTreeMap::new();
            let mut reported: BTreeSet<&Value> = BTreeSet::new();
            for tuple in rel.tuples() {
                let key = &tuple[attr - 1];
                match seen.get(key) {
                    None => {
                        seen.insert(key, tuple);
                    }
                    Some(&first) if !reported.contains(key) => {
                        violations.push(KeyViolation {
                            relation: name.clone(),
                            attribute: attr,
                            first: first.clone(),
                            second: tuple.clone(),
                        });
                        reported.insert(key);
                    }
                    Some(_) => {}
                }
            }
        }
    }
    Ok(violations)
}

/// Errors from schema validation, data loading, and grounding.
#[derive(Debug, Error)]
pub enum RelationalError {
    #[error("unknown relation {0}")]
    UnknownRelation(String),
    #[error("relation name {0} is reserved")]
    ReservedRelation(String),
    #[error("duplicate relation {0}")]
    DuplicateRelation(String),
    #[error("arity mismatch on {relation}: expected {expected}, found {found}")]
    ArityMismatch {
        relation: String,
        expected: usize,
        found: usize,
    },
    #[error("bad key index {index} for {relation} (arity {arity})")]
    BadKeyIndex {
        relation: String,
        index: usize,
        arity: usize,
    },
    #[error("bad schema for {relation}: {detail}")]
    SchemaShape { relation: String, detail: String },
    #[error("order comparison {op} needs two integers, got {left} and {right}")]
    TypeError {
        op: String,
        left: Value,
        right: Value,
    },
    #[error("comparison variable {0} is not bound by any relational atom or seed")]
    UnboundComparisonVariable(String),
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {source}")]
    Csv {
        path: String,
        #[source]
        source: csv::Error,
    },
    #[error("{path} line {line}: {detail}")]
    BadField {
        path: String,
        line: u64,
        detail: String,
    },
    #[error("{path}: {detail}")]
    BadSchemaJson { path: String, detail: String },
}

#[derive(Deserialize)]
struct SchemaFile {
    relations: Vec<RelationDecl>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RelationDecl {
    name: String,
    attributes: Vec<String>,
    #[serde(default)]
    keys: Vec<usize>,
    types: Vec<ValueType>,
}

/// Loads a schema from a JSON file of the form
/// `{"relations": [{"name", "attributes", "keys", "types"}, ...]}`
/// where `keys` holds 1-based attribute indexes and may be omitted.
pub fn load_schema(path: impl AsRef<Path>) -> Result<Schema, RelationalError> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|source| RelationalError::Io {
        path: path.display().to_string(),
        source,
    })?;
    parse_schema(&text, &path.display().to_string())
}

/// Parses schema JSON from a string; `load_schema` for in-memory text.
pub fn load_schema_str(text: &str) -> Result<Schema, RelationalError> {
    parse_schema(text, "<schema>")
}

fn parse_schema(text: &str, path: &str) -> Result<Schema, RelationalError> {
    let file: SchemaFile =
        serde_json::from_str(text).map_err(|e| RelationalError::BadSchemaJson {
            path: path.to_owned(),
            detail: e.to_string(),
        })?;
    let relations = file
        .relations
        .into_iter()
        .map(|d| RelationSchema {
            name: d.name,
            attributes: d.attributes,
            keys: d.keys.into_iter().collect(),
            types: d.types,
        })
        .collect();
    Schema::new(relations)
}

/// Loads one headerless CSV file per schema relation from `dir`.
///
/// The file for relation `R` is `dir/R.csv` and must exist (it may be empty).
/// Fields are typed per the schema; duplicate rows collapse.
pub fn load_database(
    schema: &Schema,
    dir: impl AsRef<Path>,
) -> Result<Database, RelationalError> {
    let dir = dir.as_ref();
    let mut db = Database::with_schema(schema);
    for decl in schema.relations() {
        let path = dir.join(format!("{}.csv", decl.name));
        let display = path.display().to_string();
        let mut reader = csv::ReaderBuilder::new()
            .has_headers(false)
            .flexible(true)
            .from_path(&path)
            .map_err(|e| match e.kind() {
                csv::ErrorKind::Io(_) => {
                    if let csv::ErrorKind::Io(io) = e.into_kind() {
                        RelationalError::Io {
                            path: display.clone(),
                            source: io,
                        }
                    } else {
                        unreachable!()
                    }
                }
                _ => RelationalError::Csv {
                    path: display.clone(),
                    source: e,
                },
            })?;
        for record in reader.records() {
            let record = record.map_err(|e| RelationalError::Csv {
                path: display.clone(),
                source: e,
            })?;
            let line = record.position().map_or(0, |p| p.line());
            if record.len() != decl.arity() {
                return Err(RelationalError::BadField {
                    path: display.clone(),
                    line,
                    detail: format!(
                        "expected {} fields, found {}",
                        decl.arity(),
                        record.len()
                    ),
                });
            }
            let mut tuple = Vec::with_capacity(decl.arity());
            for (field, ty) in record.iter().zip(&decl.types) {
                let value = match ty {
                    ValueType::Text => Value::Text(field.to_owned()),
                    ValueType::Int => {
                        Value::Int(field.parse().map_err(|_| RelationalError::BadField {
                            path: display.clone(),
                            line,
                            detail: format!("not an integer: {field:?}"),
                        })?)
                    }
                };
                tuple.push(value);
            }
            db.insert(&decl.name, tuple)?;
        }
    }
    Ok(db)
}
