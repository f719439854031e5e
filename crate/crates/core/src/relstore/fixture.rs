use std::fmt;

use super::{ColumnKind, StoreError, Table, TableSchema, Value};

/// Row counts per table, in declaration order.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct IngestReport {
    pub tables: Vec<(String, usize)>,
}

impl IngestReport {
    pub fn count(&self, table: &str) -> Option<usize> {
        self.tables.iter().find(|(t, _)| t == table).map(|(_, n)| *n)
    }
}

impl fmt::Display for IngestReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (t, n) in &self.tables {
            writeln!(f, "{t}\t{n}")?;
        }
        Ok(())
    }
}

/// Parses the fixture format:
///
/// ```text
/// table feed
/// col id text
/// col tag text-array
/// row f1	weather|temp
/// ```
///
/// Cells are tab separated; `\N` is NULL, arrays are `|`-joined and the
/// empty cell is the empty array. Text cells understand `\\`, `\t`, `\n`
/// and `\r` escapes.
pub fn parse_fixture(document: &str) -> Result<Vec<Table>, StoreError> {
    let mut tables: Vec<Table> = Vec::new();
    for (idx, raw) in document.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.strip_suffix('\r').unwrap_or(raw);
        if line.trim().is_empty() || line.trim_start().starts_with('#') {
            continue;
        }
        let err = |message: String| StoreError::Fixture {
            line: line_no,
            message,
        };
        let (keyword, rest) = match line.find([' ', '\t']) {
            Some(i) => (&line[..i], &line[i + 1..]),
            None => (line, ""),
        };
        match keyword {
            "table" => {
                let name = rest.trim();
                if !is_identifier(name) {
                    return Err(err(format!("invalid table name {name:?}")));
                }
                if tables.iter().any(|t| t.schema.name == name) {
                    return Err(StoreError::DuplicateTable(name.to_string()));
                }
                tables.push(Table {
                    schema: TableSchema {
                        name: name.to_string(),
                        columns: Vec::new(),
                    },
                    rows: Vec::new(),
                });
            }
            "col" => {
                let table = tables
                    .last_mut()
                    .ok_or_else(|| err("column declared before any table".into()))?;
                if !table.rows.is_empty() {
                    return Err(err("column declared after rows".into()));
                }
                let mut parts = rest.split_whitespace();
                let (Some(name), Some(kind), None) = (parts.next(), parts.next(), parts.next()) else {
                    return Err(err("expected `col <name> <kind>`".into()));
                };
                let kind = ColumnKind::parse(kind)
                    .ok_or_else(|| err(format!("unknown column kind {kind:?}")))?;
                if !is_identifier(name) {
                    return Err(err(format!("invalid column name {name:?}")));
                }
                if table.schema.column(name).is_some() {
                    return Err(err(format!("duplicate column `{name}` in table `{}`", table.schema.name)));
                }
                table.schema.columns.push((name.to_string(), kind));
            }
            "row" => {
                let table = tables
                    .last_mut()
                    .ok_or_else(|| StoreError::UnknownTable(String::new()))?;
                let cells: Vec<&str> = rest.split('\t').collect();
                if cells.len() != table.schema.columns.len() {
                    return Err(err(format!(
                        "table `{}` has {} columns, row has {} cells",
                        table.schema.name,
                        table.schema.columns.len(),
                        cells.len()
                    )));
                }
                let mut values = Vec::with_capacity(cells.len());
                for (cell, (col, kind)) in cells.iter().zip(&table.schema.columns) {
                    if *cell == "\\N" {
                        values.push(Value::Null);
                        continue;
                    }
                    let text = unescape(cell).ok_or_else(|| err(format!("bad escape in {cell:?}")))?;
                    let v = kind.parse_value(&text).ok_or_else(|| StoreError::TypeMismatch {
                        line: line_no,
                        column: col.clone(),
                        kind: *kind,
                        value: text.clone(),
                    })?;
                    values.push(v);
                }
                table.rows.push(values);
            }
            other => return Err(err(format!("unknown directive {other:?}"))),
        }
    }
    Ok(tables)
}

fn unescape(cell: &str) -> Option<String> {
    if !cell.contains('\\') {
        return Some(cell.to_string());
    }
    let mut out = String::with_capacity(cell.len());
    let mut chars = cell.chars();
    while let Some(c) = chars.next() {
        if c != '\\' {
            out.push(c);
            continue;
        }
        out.push(match chars.next()? {
            '\\' => '\\',
            't' => '\t',
            'n' => '\n',
            'r' => '\r',
            _ => return None,
        });
    }
    Some(out)
}

pub(crate) fn is_identifier(s: &str) -> bool {
    let mut chars = s.chars();
    matches!(chars.next(), Some(c) if c.is_ascii_alphabetic() || c == '_')
        && chars.all(|c| c.is_ascii_alphanumeric() || c == '_')
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_document_has_no_tables() {
        assert!(parse_fixture("").unwrap().is_empty());
        assert!(parse_fixture("# only a comment\n\n").unwrap().is_empty());
    }

    #[test]
    fn text_in_int_column_names_the_column() {
        let err = parse_fixture("table t\ncol n int64\nrow abc\n").unwrap_err();
        match err {
            StoreError::TypeMismatch { line, column, kind, .. } => {
                assert_eq!(line, 3);
                assert_eq!(column, "n");
                assert_eq!(kind, ColumnKind::Int64);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn nulls_arrays_and_escapes() {
        let t = parse_fixture("table t\ncol a text\ncol b text-array\ncol c bool\nrow x\\ty\t\t\\N\nrow \\N\ta|b\ttrue\n")
            .unwrap()
            .remove(0);
        assert_eq!(t.rows[0], vec![Value::Text("x\ty".into()), Value::TextArray(vec![]), Value::Null]);
        assert_eq!(
            t.rows[1],
            vec![Value::Null, Value::TextArray(vec!["a".into(), "b".into()]), Value::Bool(true)]
        );
    }

    #[test]
    fn wrong_cell_count() {
        assert!(parse_fixture("table t\ncol a text\ncol b text\nrow x\n").is_err());
    }

    #[test]
    fn row_without_table() {
        assert!(matches!(parse_fixture("row x\n"), Err(StoreError::UnknownTable(_))));
    }

    #[test]
    fn duplicate_table_in_document() {
        assert_eq!(
            parse_fixture("table t\ncol a text\ntable t\n").unwrap_err(),
            StoreError::DuplicateTable("t".into())
        );
    }
}
