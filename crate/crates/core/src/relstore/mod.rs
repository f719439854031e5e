//! Embedded relational backend for the SQL subset used by mapping sources.

mod fixture;
mod sql;

use std::collections::BTreeMap;
use std::fmt;

use chrono::{DateTime, Utc};
use indexmap::IndexMap;
use parking_lot::RwLock;
use thiserror::Error;

pub use fixture::{parse_fixture, IngestReport};
pub use sql::{parse_sql, Projection, ProjectionExpr, SqlQuery};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum StoreError {
    #[error("fixture line {line}: {message}")]
    Fixture { line: usize, message: String },
    #[error("fixture line {line}: column `{column}` expects {kind}, got {value:?}")]
    TypeMismatch {
        line: usize,
        column: String,
        kind: ColumnKind,
        value: String,
    },
    #[error("unknown table `{0}`")]
    UnknownTable(String),
    #[error("duplicate table `{0}`")]
    DuplicateTable(String),
    #[error("unknown column `{column}` in table `{table}`")]
    UnknownColumn { table: String, column: String },
    #[error("{function} cannot be applied to column `{column}` of kind {kind}")]
    FunctionKind {
        function: &'static str,
        column: String,
        kind: ColumnKind,
    },
    #[error("SQL syntax error at offset {offset}: {message}")]
    Syntax { offset: usize, message: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ColumnKind {
    Text,
    Int64,
    Float64,
    Bool,
    EpochSeconds,
    TextArray,
    WktText,
}

impl ColumnKind {
    pub fn parse(name: &str) -> Option<Self> {
        Some(match name {
            "text" => ColumnKind::Text,
            "int64" => ColumnKind::Int64,
            "float64" => ColumnKind::Float64,
            "bool" => ColumnKind::Bool,
            "epoch-seconds" => ColumnKind::EpochSeconds,
            "text-array" => ColumnKind::TextArray,
            "wkt-text" => ColumnKind::WktText,
            _ => return None,
        })
    }

    pub fn name(self) -> &'static str {
        match self {
            ColumnKind::Text => "text",
            ColumnKind::Int64 => "int64",
            ColumnKind::Float64 => "float64",
            ColumnKind::Bool => "bool",
            ColumnKind::EpochSeconds => "epoch-seconds",
            ColumnKind::TextArray => "text-array",
            ColumnKind::WktText => "wkt-text",
        }
    }

    /// Parses a fixture cell (already unescaped, not `\N`).
    pub fn parse_value(self, cell: &str) -> Option<Value> {
        Some(match self {
            ColumnKind::Text => Value::Text(cell.to_string()),
            ColumnKind::WktText => Value::Wkt(cell.to_string()),
            ColumnKind::Int64 => Value::Int(cell.trim().parse().ok()?),
            ColumnKind::EpochSeconds => Value::Epoch(cell.trim().parse().ok()?),
            ColumnKind::Float64 => {
                let v: f64 = cell.trim().parse().ok()?;
                if !v.is_finite() {
                    return None;
                }
                Value::Float(v)
            }
            ColumnKind::Bool => match cell.trim() {
                "true" | "t" | "1" => Value::Bool(true),
                "false" | "f" | "0" => Value::Bool(false),
                _ => return None,
            },
            ColumnKind::TextArray => Value::TextArray(if cell.is_empty() {
                Vec::new()
            } else {
                cell.split('|').map(str::to_string).collect()
            }),
        })
    }
}

impl fmt::Display for ColumnKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// A cell value. `Timestamp` only appears in query output (TO_TIMESTAMP).
#[derive(Debug, Clone, PartialEq)]
pub enum Value {
    Null,
    Text(String),
    Int(i64),
    Float(f64),
    Bool(bool),
    Epoch(i64),
    TextArray(Vec<String>),
    Wkt(String),
    Timestamp(DateTime<Utc>),
}

impl Value {
    pub fn is_null(&self) -> bool {
        matches!(self, Value::Null)
    }

    pub fn matches_kind(&self, kind: ColumnKind) -> bool {
        matches!(
            (self, kind),
            (Value::Null, _)
                | (Value::Text(_), ColumnKind::Text)
                | (Value::Int(_), ColumnKind::Int64)
                | (Value::Float(_), ColumnKind::Float64)
                | (Value::Bool(_), ColumnKind::Bool)
                | (Value::Epoch(_), ColumnKind::EpochSeconds)
                | (Value::TextArray(_), ColumnKind::TextArray)
                | (Value::Wkt(_), ColumnKind::WktText)
        )
    }

    /// SQL literal rendering, used for diagnostics.
    pub fn to_sql(&self) -> String {
        match self {
            Value::Null => "NULL".into(),
            Value::Text(s) | Value::Wkt(s) => format!("'{}'", s.replace('\'', "''")),
            Value::Int(v) | Value::Epoch(v) => v.to_string(),
            Value::Float(v) => format!("{v:?}"),
            Value::Bool(b) => b.to_string(),
            Value::TextArray(items) => format!("'{{{}}}'", items.join(",")),
            Value::Timestamp(t) => format!("'{}'", t.to_rfc3339()),
        }
    }
}

/// Output row keyed by projection output name.
pub type Row = BTreeMap<String, Value>;

#[derive(Debug, Clone, PartialEq)]
pub struct TableSchema {
    pub name: String,
    pub columns: Vec<(String, ColumnKind)>,
}

impl TableSchema {
    pub fn column(&self, name: &str) -> Option<(usize, ColumnKind)> {
        self.columns
            .iter()
            .position(|(c, _)| c == name)
            .map(|i| (i, self.columns[i].1))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub schema: TableSchema,
    pub rows: Vec<Vec<Value>>,
}

/// In-memory database. Ingestion swaps in fully parsed tables under a
/// write lock, so readers never see a partial fixture.
#[derive(Debug, Default)]
pub struct Database {
    tables: RwLock<IndexMap<String, Table>>,
}

impl Database {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_fixture(document: &str) -> Result<Self, StoreError> {
        let db = Database::new();
        db.load_fixture(document)?;
        Ok(db)
    }

    pub fn load_fixture(&self, document: &str) -> Result<IngestReport, StoreError> {
        let parsed = parse_fixture(document)?;
        let mut tables = self.tables.write();
        for t in &parsed {
            if tables.contains_key(&t.schema.name) {
                return Err(StoreError::DuplicateTable(t.schema.name.clone()));
            }
        }
        let mut report = IngestReport::default();
        for t in parsed {
            report.tables.push((t.schema.name.clone(), t.rows.len()));
            tables.insert(t.schema.name.clone(), t);
        }
        Ok(report)
    }

    pub fn schema(&self, table: &str) -> Option<TableSchema> {
        self.tables.read().get(table).map(|t| t.schema.clone())
    }

    pub fn table_names(&self) -> Vec<String> {
        self.tables.read().keys().cloned().collect()
    }

    pub fn row_count(&self, table: &str) -> Option<usize> {
        self.tables.read().get(table).map(|t| t.rows.len())
    }

    /// Checks `q` against the current schema without running it.
    pub fn validate(&self, q: &SqlQuery) -> Result<(), StoreError> {
        let tables = self.tables.read();
        let table = tables
            .get(&q.table)
            .ok_or_else(|| StoreError::UnknownTable(q.table.clone()))?;
        q.resolve(&table.schema).map(|_| ())
    }

    pub fn execute(&self, q: &SqlQuery) -> Result<Vec<Row>, StoreError> {
        let tables = self.tables.read();
        let table = tables
            .get(&q.table)
            .ok_or_else(|| StoreError::UnknownTable(q.table.clone()))?;
        let plan = q.resolve(&table.schema)?;
        let mut out = Vec::new();
        'rows: for row in &table.rows {
            for (idx, wanted) in &plan.constraints {
                if &row[*idx] != wanted {
                    continue 'rows;
                }
            }
            let unnested: Vec<(usize, &[String])> = plan
                .projections
                .iter()
                .enumerate()
                .filter(|(_, (_, f, _))| *f == ProjectionExpr::Unnest)
                .map(|(i, (col, _, _))| match &row[*col] {
                    Value::TextArray(items) => (i, items.as_slice()),
                    _ => (i, &[][..]),
                })
                .collect();
            // set-returning functions run in lockstep, shorter ones padded with NULL
            let repeat = if unnested.is_empty() {
                1
            } else {
                unnested.iter().map(|(_, a)| a.len()).max().unwrap_or(0)
            };
            for k in 0..repeat {
                let mut r = Row::new();
                for (i, (col, func, name)) in plan.projections.iter().enumerate() {
                    let v = &row[*col];
                    let value = match func {
                        ProjectionExpr::Column => v.clone(),
                        ProjectionExpr::ToTimestamp => match v {
                            Value::Epoch(secs) => DateTime::from_timestamp(*secs, 0)
                                .map(Value::Timestamp)
                                .unwrap_or(Value::Null),
                            _ => Value::Null,
                        },
                        ProjectionExpr::StAsText => match v {
                            Value::Wkt(s) => Value::Text(s.clone()),
                            _ => Value::Null,
                        },
                        ProjectionExpr::Unnest => unnested
                            .iter()
                            .find(|(j, _)| *j == i)
                            .and_then(|(_, items)| items.get(k))
                            .map(|s| Value::Text(s.clone()))
                            .unwrap_or(Value::Null),
                    };
                    r.insert(name.clone(), value);
                }
                out.push(r);
            }
        }
        Ok(out)
    }
}
