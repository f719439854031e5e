//! The SQL subset: `SELECT <proj>, ... FROM <table> [WHERE col = lit AND ...]`
//! where a projection is a column reference or `TO_TIMESTAMP(col)`,
//! `unnest(col)`, `ST_AsText(col)`, optionally aliased with `AS`.

use std::fmt;

use super::{ColumnKind, StoreError, TableSchema, Value};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ProjectionExpr {
    Column,
    ToTimestamp,
    Unnest,
    StAsText,
}

impl ProjectionExpr {
    fn name(self) -> &'static str {
        match self {
            ProjectionExpr::Column => "",
            ProjectionExpr::ToTimestamp => "TO_TIMESTAMP",
            ProjectionExpr::Unnest => "unnest",
            ProjectionExpr::StAsText => "ST_AsText",
        }
    }

    fn accepts(self, kind: ColumnKind) -> bool {
        match self {
            ProjectionExpr::Column => true,
            ProjectionExpr::ToTimestamp => kind == ColumnKind::EpochSeconds,
            ProjectionExpr::Unnest => kind == ColumnKind::TextArray,
            ProjectionExpr::StAsText => kind == ColumnKind::WktText,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Projection {
    pub expr: ProjectionExpr,
    /// Table qualifier as written (`feed` in `feed.id`).
    pub qualifier: Option<String>,
    pub column: String,
    /// Name of the output column: the alias, or the reference as written.
    pub output: String,
}

impl Projection {
    fn reference(&self) -> String {
        match &self.qualifier {
            Some(q) => format!("{q}.{}", self.column),
            None => self.column.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SqlQuery {
    pub projections: Vec<Projection>,
    pub table: String,
    /// Equality predicates on table columns.
    pub constraints: Vec<(String, Value)>,
}

pub(super) struct Plan {
    pub projections: Vec<(usize, ProjectionExpr, String)>,
    pub constraints: Vec<(usize, Value)>,
}

impl SqlQuery {
    pub fn output_names(&self) -> impl Iterator<Item = &str> {
        self.projections.iter().map(|p| p.output.as_str())
    }

    pub fn projection(&self, output: &str) -> Option<&Projection> {
        self.projections.iter().find(|p| p.output == output)
    }

    pub fn with_constraints(&self, constraints: Vec<(String, Value)>) -> SqlQuery {
        let mut q = self.clone();
        q.constraints.extend(constraints);
        q
    }

    pub(super) fn resolve(&self, schema: &TableSchema) -> Result<Plan, StoreError> {
        let column = |qualifier: Option<&String>, name: &str| {
            if qualifier.is_some_and(|q| *q != schema.name) {
                return Err(StoreError::UnknownTable(qualifier.cloned().unwrap_or_default()));
            }
            schema.column(name).ok_or_else(|| StoreError::UnknownColumn {
                table: schema.name.clone(),
                column: name.to_string(),
            })
        };
        let mut projections = Vec::with_capacity(self.projections.len());
        for p in &self.projections {
            let (idx, kind) = column(p.qualifier.as_ref(), &p.column)?;
            if !p.expr.accepts(kind) {
                return Err(StoreError::FunctionKind {
                    function: p.expr.name(),
                    column: p.column.clone(),
                    kind,
                });
            }
            projections.push((idx, p.expr, p.output.clone()));
        }
        let mut constraints = Vec::with_capacity(self.constraints.len());
        for (name, value) in &self.constraints {
            let (col, qualifier) = match name.split_once('.') {
                Some((q, c)) => (c, Some(q.to_string())),
                None => (name.as_str(), None),
            };
            let (idx, kind) = column(qualifier.as_ref(), col)?;
            constraints.push((idx, coerce(value, kind).ok_or_else(|| StoreError::FunctionKind {
                function: "=",
                column: col.to_string(),
                kind,
            })?));
        }
        Ok(Plan {
            projections,
            constraints,
        })
    }
}

fn coerce(v: &Value, kind: ColumnKind) -> Option<Value> {
    if v.matches_kind(kind) {
        return Some(v.clone());
    }
    match (v, kind) {
        (Value::Text(s), _) => kind.parse_value(s),
        (Value::Int(i), ColumnKind::Float64) => Some(Value::Float(*i as f64)),
        (Value::Int(i), ColumnKind::EpochSeconds) => Some(Value::Epoch(*i)),
        _ => None,
    }
}

impl fmt::Display for SqlQuery {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("SELECT ")?;
        for (i, p) in self.projections.iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            let reference = p.reference();
            match p.expr {
                ProjectionExpr::Column => f.write_str(&reference)?,
                other => write!(f, "{}({reference})", other.name())?,
            }
            if p.output != reference {
                write!(f, " AS {}", p.output)?;
            }
        }
        write!(f, " FROM {}", self.table)?;
        for (i, (col, v)) in self.constraints.iter().enumerate() {
            let col = if col.contains('.') { col.clone() } else { format!("{}.{col}", self.table) };
            let kw = if i == 0 { "WHERE" } else { "AND" };
            write!(f, " {kw} {col} = {}", v.to_sql())?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Ident(String),
    Str(String),
    Num(String),
    Comma,
    LParen,
    RParen,
    Eq,
}

fn tokenize(src: &str) -> Result<Vec<(usize, Tok)>, StoreError> {
    let bytes = src.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i] as char;
        let start = i;
        match c {
            c if c.is_whitespace() => i += 1,
            ',' => {
                out.push((start, Tok::Comma));
                i += 1;
            }
            '(' => {
                out.push((start, Tok::LParen));
                i += 1;
            }
            ')' => {
                out.push((start, Tok::RParen));
                i += 1;
            }
            '=' => {
                out.push((start, Tok::Eq));
                i += 1;
            }
            '\'' => {
                let mut s = String::new();
                i += 1;
                loop {
                    let rest = &src[i..];
                    let Some(ch) = rest.chars().next() else {
                        return Err(StoreError::Syntax {
                            offset: start,
                            message: "unterminated string".into(),
                        });
                    };
                    i += ch.len_utf8();
                    if ch == '\'' {
                        if src[i..].starts_with('\'') {
                            s.push('\'');
                            i += 1;
                        } else {
                            break;
                        }
                    } else {
                        s.push(ch);
                    }
                }
                out.push((start, Tok::Str(s)));
            }
            c if c.is_ascii_digit() || c == '-' => {
                i += 1;
                while i < bytes.len() && (bytes[i].is_ascii_digit() || matches!(bytes[i], b'.' | b'e' | b'E')) {
                    i += 1;
                }
                out.push((start, Tok::Num(src[start..i].to_string())));
            }
            c if c.is_ascii_alphabetic() || c == '_' => {
                while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || matches!(bytes[i], b'_' | b'.')) {
                    i += 1;
                }
                out.push((start, Tok::Ident(src[start..i].to_string())));
            }
            other => {
                return Err(StoreError::Syntax {
                    offset: start,
                    message: format!("unexpected character {other:?}"),
                })
            }
        }
    }
    Ok(out)
}

pub fn parse_sql(src: &str) -> Result<SqlQuery, StoreError> {
    let toks = tokenize(src)?;
    let mut p = SqlParser { toks, pos: 0, len: src.len() };
    p.keyword("SELECT")?;
    let mut projections = vec![p.projection()?];
    while p.eat(&Tok::Comma) {
        projections.push(p.projection()?);
    }
    p.keyword("FROM")?;
    let table = p.ident()?;
    if table.contains('.') {
        return p.fail("table name must be unqualified");
    }
    let mut constraints = Vec::new();
    if p.eat_keyword("WHERE") {
        loop {
            let col = p.ident()?;
            if !p.eat(&Tok::Eq) {
                return p.fail("expected '='");
            }
            constraints.push((col, p.literal()?));
            if !p.eat_keyword("AND") {
                break;
            }
        }
    }
    if p.pos < p.toks.len() {
        return p.fail("trailing input");
    }
    Ok(SqlQuery {
        projections,
        table,
        constraints,
    })
}

struct SqlParser {
    toks: Vec<(usize, Tok)>,
    pos: usize,
    len: usize,
}

impl SqlParser {
    fn offset(&self) -> usize {
        self.toks.get(self.pos).map(|(o, _)| *o).unwrap_or(self.len)
    }

    fn fail<T>(&self, message: &str) -> Result<T, StoreError> {
        Err(StoreError::Syntax {
            offset: self.offset(),
            message: message.into(),
        })
    }

    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|(_, t)| t)
    }

    fn eat(&mut self, t: &Tok) -> bool {
        if self.peek() == Some(t) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn eat_keyword(&mut self, kw: &str) -> bool {
        match self.peek() {
            Some(Tok::Ident(s)) if s.eq_ignore_ascii_case(kw) => {
                self.pos += 1;
                true
            }
            _ => false,
        }
    }

    fn keyword(&mut self, kw: &str) -> Result<(), StoreError> {
        if self.eat_keyword(kw) {
            Ok(())
        } else {
            self.fail(&format!("expected {kw}"))
        }
    }

    fn ident(&mut self) -> Result<String, StoreError> {
        match self.peek() {
            Some(Tok::Ident(s)) => {
                let s = s.clone();
                self.pos += 1;
                Ok(s)
            }
            _ => self.fail("expected identifier"),
        }
    }

    fn literal(&mut self) -> Result<Value, StoreError> {
        let v = match self.peek() {
            Some(Tok::Str(s)) => Value::Text(s.clone()),
            Some(Tok::Num(n)) => match n.parse::<i64>() {
                Ok(i) => Value::Int(i),
                Err(_) => match n.parse::<f64>() {
                    Ok(f) => Value::Float(f),
                    Err(_) => return self.fail("invalid number"),
                },
            },
            Some(Tok::Ident(s)) if s.eq_ignore_ascii_case("true") => Value::Bool(true),
            Some(Tok::Ident(s)) if s.eq_ignore_ascii_case("false") => Value::Bool(false),
            _ => return self.fail("expected literal"),
        };
        self.pos += 1;
        Ok(v)
    }

    fn projection(&mut self) -> Result<Projection, StoreError> {
        let name = self.ident()?;
        let func = [
            ("TO_TIMESTAMP", ProjectionExpr::ToTimestamp),
            ("unnest", ProjectionExpr::Unnest),
            ("ST_AsText", ProjectionExpr::StAsText),
        ]
        .into_iter()
        .find(|(n, _)| n.eq_ignore_ascii_case(&name))
        .map(|(_, f)| f);
        let (expr, reference) = match func {
            Some(f) if self.eat(&Tok::LParen) => {
                let r = self.ident()?;
                if !self.eat(&Tok::RParen) {
                    return self.fail("expected ')'");
                }
                (f, r)
            }
            _ => {
                if self.peek() == Some(&Tok::LParen) {
                    return self.fail(&format!("unsupported function {name}"));
                }
                (ProjectionExpr::Column, name)
            }
        };
        let (qualifier, column) = match reference.split_once('.') {
            Some((q, c)) if !c.contains('.') => (Some(q.to_string()), c.to_string()),
            Some(_) => return self.fail("column reference has too many parts"),
            None => (None, reference.clone()),
        };
        let output = if self.eat_keyword("AS") {
            self.ident()?
        } else if expr != ProjectionExpr::Column {
            return self.fail("function projections need an AS alias");
        } else {
            reference
        };
        Ok(Projection {
            expr,
            qualifier,
            column,
            output,
        })
    }
}
