//! Relations, schemas, tuples, and the hash indexes the executors probe.
//!
//! Everything here is positional at heart: a tuple's values line up with its
//! relation's schema, and the executors address columns by index after one
//! name-resolution pass. Attribute names only matter at the edges (CSV
//! headers, semijoins over renamed schemas, error messages).

mod csv;
mod index;

pub use csv::{load_csv, write_csv};
pub use index::{BucketId, HashIndex};

use std::collections::HashMap;
use std::fmt;

/// A single column value. Integers and strings hash and compare consistently,
/// with all integers ordering before all strings.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Value {
    Int(i64),
    Str(String),
}

impl Value {
    /// CSV field convention: the whole field parses as a decimal integer,
    /// or it stays a string.
    pub fn from_field(field: &str) -> Value {
        match field.parse::<i64>() {
            Ok(n) => Value::Int(n),
            Err(_) => Value::Str(field.to_string()),
        }
    }
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Int(n) => write!(f, "{}", n),
            Value::Str(s) => write!(f, "{}", s),
        }
    }
}

impl From<i64> for Value {
    fn from(n: i64) -> Value {
        Value::Int(n)
    }
}

impl From<&str> for Value {
    fn from(s: &str) -> Value {
        Value::Str(s.to_string())
    }
}

/// Ordered list of distinct attribute names.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Schema(Vec<String>);

impl Schema {
    pub fn new<S: Into<String>>(attrs: Vec<S>) -> Result<Schema, CatalogError> {
        let attrs: Vec<String> = attrs.into_iter().map(Into::into).collect();
        for (i, a) in attrs.iter().enumerate() {
            if attrs[..i].contains(a) {
                return Err(CatalogError::DuplicateAttr(a.clone()));
            }
        }
        Ok(Schema(attrs))
    }

    pub fn attrs(&self) -> &[String] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn position(&self, attr: &str) -> Option<usize> {
        self.0.iter().position(|a| a == attr)
    }

    pub fn contains(&self, attr: &str) -> bool {
        self.position(attr).is_some()
    }
}

impl fmt::Display for Schema {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({})", self.0.join(", "))
    }
}

/// Row values plus a row id that stays unique within the owning relation,
/// so duplicate value rows remain distinct tuples under bag semantics.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Tuple {
    pub row_id: u64,
    pub values: Vec<Value>,
}

/// Named relation with immutable contents. Deletion during execution happens
/// in indexes, never here.
#[derive(Clone, Debug)]
pub struct Relation {
    name: String,
    schema: Schema,
    tuples: Vec<Tuple>,
}

impl Relation {
    pub fn new(name: impl Into<String>, schema: Schema) -> Relation {
        Relation {
            name: name.into(),
            schema,
            tuples: Vec::new(),
        }
    }

    /// Builds a relation from value rows, assigning row ids 0..n-1 in order.
    /// With `dedup` set, a row whose values match an earlier row is dropped
    /// and ids stay contiguous over the survivors.
    pub fn from_rows(
        name: impl Into<String>,
        schema: Schema,
        rows: Vec<Vec<Value>>,
        dedup: bool,
    ) -> Result<Relation, CatalogError> {
        let mut rel = Relation::new(name, schema);
        for row in rows {
            rel.push_row(row, dedup)?;
        }
        Ok(rel)
    }

    pub fn push_row(&mut self, values: Vec<Value>, dedup: bool) -> Result<(), CatalogError> {
        if values.len() != self.schema.len() {
            return Err(CatalogError::ArityMismatch {
                relation: self.name.clone(),
                expected: self.schema.len(),
                got: values.len(),
            });
        }
        if dedup && self.tuples.iter().any(|t| t.values == values) {
            return Ok(());
        }
        self.tuples.push(Tuple {
            row_id: self.tuples.len() as u64,
            values,
        });
        Ok(())
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn schema(&self) -> &Schema {
        &self.schema
    }

    pub fn tuples(&self) -> &[Tuple] {
        &self.tuples
    }

    pub fn len(&self) -> usize {
        self.tuples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tuples.is_empty()
    }

    /// Same tuples under a renamed schema. Arity must match; used to bind a
    /// relation's columns to query variables positionally.
    pub fn renamed(&self, name: impl Into<String>, schema: Schema) -> Result<Relation, CatalogError> {
        if schema.len() != self.schema.len() {
            return Err(CatalogError::ArityMismatch {
                relation: self.name.clone(),
                expected: self.schema.len(),
                got: schema.len(),
            });
        }
        Ok(Relation {
            name: name.into(),
            schema,
            tuples: self.tuples.clone(),
        })
    }
}

/// Name -> relation map handed to the executors.
#[derive(Clone, Debug, Default)]
pub struct Database {
    relations: HashMap<String, Relation>,
}

impl Database {
    pub fn new() -> Database {
        Database::default()
    }

    pub fn insert(&mut self, rel: Relation) -> Result<(), CatalogError> {
        if self.relations.contains_key(rel.name()) {
            return Err(CatalogError::DuplicateRelation(rel.name().to_string()));
        }
        self.relations.insert(rel.name().to_string(), rel);
        Ok(())
    }

    pub fn get(&self, name: &str) -> Option<&Relation> {
        self.relations.get(name)
    }

    pub fn names(&self) -> Vec<&str> {
        let mut names: Vec<&str> = self.relations.keys().map(String::as_str).collect();
        names.sort_unstable();
        names
    }

    pub fn len(&self) -> usize {
        self.relations.len()
    }

    pub fn is_empty(&self) -> bool {
        self.relations.is_empty()
    }
}

/// Projection of a row onto `attrs`, in the order given.
pub fn project(schema: &Schema, values: &[Value], attrs: &[&str]) -> Result<Vec<Value>, CatalogError> {
    let mut out = Vec::with_capacity(attrs.len());
    for attr in attrs {
        let pos = schema
            .position(attr)
            .ok_or_else(|| CatalogError::UnknownAttr((*attr).to_string()))?;
        out.push(values[pos].clone());
    }
    Ok(out)
}

/// Combines two rows over the union of their schemas. Shared attributes
/// appear once and must agree; the right row's remaining attributes are
/// appended in its schema order.
pub fn concat(
    left_schema: &Schema,
    left: &[Value],
    right_schema: &Schema,
    right: &[Value],
) -> Result<(Schema, Vec<Value>), CatalogError> {
    let mut attrs: Vec<String> = left_schema.attrs().to_vec();
    let mut values = left.to_vec();
    for (i, attr) in right_schema.attrs().iter().enumerate() {
        match left_schema.position(attr) {
            Some(j) => {
                if left[j] != right[i] {
                    return Err(CatalogError::ValueDisagreement(attr.clone()));
                }
            }
            None => {
                attrs.push(attr.clone());
                values.push(right[i].clone());
            }
        }
    }
    Ok((Schema(attrs), values))
}

#[derive(Debug)]
pub enum CatalogError {
    DuplicateAttr(String),
    UnknownAttr(String),
    DuplicateRelation(String),
    ValueDisagreement(String),
    ArityMismatch {
        relation: String,
        expected: usize,
        got: usize,
    },
    NotInBucket {
        relation: String,
        row_id: u64,
    },
    MalformedRow {
        path: String,
        line: usize,
        detail: String,
    },
    EmptyFile(String),
    Io(std::io::Error),
}

impl fmt::Display for CatalogError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CatalogError::DuplicateAttr(a) => write!(f, "duplicate attribute `{}` in schema", a),
            CatalogError::UnknownAttr(a) => write!(f, "attribute `{}` not in schema", a),
            CatalogError::DuplicateRelation(r) => write!(f, "relation `{}` already loaded", r),
            CatalogError::ValueDisagreement(a) => {
                write!(f, "rows disagree on shared attribute `{}`", a)
            }
            CatalogError::ArityMismatch {
                relation,
                expected,
                got,
            } => write!(
                f,
                "relation `{}` expects {} values, got {}",
                relation, expected, got
            ),
            CatalogError::NotInBucket { relation, row_id } => write!(
                f,
                "no live tuple of `{}` with row id {} under that key",
                relation, row_id
            ),
            CatalogError::MalformedRow { path, line, detail } => {
                write!(f, "{}:{}: {}", path, line, detail)
            }
            CatalogError::EmptyFile(p) => write!(f, "{}: empty file, expected a header row", p),
            CatalogError::Io(e) => write!(f, "io error: {}", e),
        }
    }
}

impl std::error::Error for CatalogError {}

impl From<std::io::Error> for CatalogError {
    fn from(e: std::io::Error) -> CatalogError {
        CatalogError::Io(e)
    }
}
