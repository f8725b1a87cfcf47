//! The two provider databases, the id join that enables fusion, and exact
//! CSV persistence.
//!
//! Table values are numeric; the id key is a separate integer column that
//! always comes first. CSV files use LF line endings and serialize floats
//! with the shortest decimal representation that parses back to the same
//! bits (std's `Display`), so exports are byte-stable across runs.

use crate::sampler::Person;
use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::io::Write as _;
use std::path::Path;
use thiserror::Error;

/// Column layout of a table: the id key plus named numeric columns.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TableSchema {
    pub name: String,
    /// All column names in order, starting with the key column `id`.
    pub columns: Vec<String>,
}

impl TableSchema {
    pub fn new(name: &str, columns: &[&str]) -> Self {
        Self {
            name: name.to_string(),
            columns: columns.iter().map(|c| c.to_string()).collect(),
        }
    }

    pub fn header(&self) -> String {
        self.columns.join(",")
    }
}

/// A keyed tabular store for one provider's database.
///
/// Rows are held in id order; every row carries exactly one value per
/// non-id column. Tables are immutable after construction in practice.
#[derive(Clone, Debug, PartialEq)]
pub struct DbTable {
    pub schema: TableSchema,
    rows: BTreeMap<u64, Vec<f64>>,
}

/// Result of joining two provider tables on the shared id.
pub type JoinedTable = DbTable;

#[derive(Clone, Debug, PartialEq, Error)]
pub enum StoreError {
    #[error("schema mismatch for {table}: expected header '{expected}', found '{found}'")]
    Schema {
        table: String,
        expected: String,
        found: String,
    },
    #[error("missing key column 'id' in table {0}")]
    MissingKey(String),
    #[error("row width mismatch in table {table}: expected {expected} values, got {got}")]
    RowWidth {
        table: String,
        expected: usize,
        got: usize,
    },
    #[error("duplicate id {id} in table {table}")]
    DuplicateId { table: String, id: u64 },
    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("io error on {path}: {message}")]
    Io { path: String, message: String },
}

impl DbTable {
    pub fn new(schema: TableSchema) -> Result<Self, StoreError> {
        if schema.columns.first().map(String::as_str) != Some("id") {
            return Err(StoreError::MissingKey(schema.name));
        }
        Ok(Self {
            schema,
            rows: BTreeMap::new(),
        })
    }

    /// Insert one row; `values` are the non-id columns in schema order.
    pub fn insert(&mut self, id: u64, values: Vec<f64>) -> Result<(), StoreError> {
        let expected = self.schema.columns.len() - 1;
        if values.len() != expected {
            return Err(StoreError::RowWidth {
                table: self.schema.name.clone(),
                expected,
                got: values.len(),
            });
        }
        if self.rows.insert(id, values).is_some() {
            return Err(StoreError::DuplicateId {
                table: self.schema.name.clone(),
                id,
            });
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    /// Rows in ascending id order.
    pub fn iter(&self) -> impl Iterator<Item = (u64, &[f64])> {
        self.rows
            .iter()
            .map(|(&id, values)| (id, values.as_slice()))
    }

    pub fn ids(&self) -> impl Iterator<Item = u64> + '_ {
        self.rows.keys().copied()
    }

    pub fn get(&self, id: u64) -> Option<&[f64]> {
        self.rows.get(&id).map(Vec::as_slice)
    }

    /// Position of a named column among the value columns.
    pub fn column_index(&self, name: &str) -> Option<usize> {
        self.schema
            .columns
            .iter()
            .position(|c| c == name)
            .and_then(|i| i.checked_sub(1))
    }

    /// All values of a named column in id order.
    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let idx = self.column_index(name)?;
        Some(self.rows.values().map(|row| row[idx]).collect())
    }

    /// Serialize to CSV text: header line plus one line per row, LF endings.
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        out.push_str(&self.schema.header());
        out.push('\n');
        for (id, values) in self.iter() {
            let _ = write!(out, "{id}");
            for v in values {
                let _ = write!(out, ",{v}");
            }
            out.push('\n');
        }
        out
    }
}

/// Schema of the demographic provider's table.
pub fn db_a_schema() -> TableSchema {
    TableSchema::new("db_a", &["id", "a"])
}

/// Schema of the social-media provider's table; the vote label lives here
/// because the survey is the platform's own.
pub fn db_b_schema() -> TableSchema {
    TableSchema::new("db_b", &["id", "b", "y"])
}

/// Schema of the training join.
pub fn joined_schema() -> TableSchema {
    TableSchema::new("joined", &["id", "a", "b", "y"])
}

/// Schema of the full internal population dump (includes latent columns).
pub fn population_schema() -> TableSchema {
    TableSchema::new("population", &["id", "a", "b", "x0", "x", "p", "y"])
}

/// Project a population into the two provider tables.
///
/// The latent columns `x0`, `x`, `p` are never exported: neither provider
/// can observe them.
pub fn split(population: &[Person]) -> (DbTable, DbTable) {
    let mut db_a = DbTable::new(db_a_schema()).expect("static schema");
    let mut db_b = DbTable::new(db_b_schema()).expect("static schema");
    for person in population {
        db_a.insert(person.id, vec![person.a])
            .expect("population ids are unique");
        db_b.insert(person.id, vec![person.b, person.y as f64])
            .expect("population ids are unique");
    }
    (db_a, db_b)
}

/// Dump the full population including latent columns.
pub fn population_table(population: &[Person]) -> DbTable {
    let mut table = DbTable::new(population_schema()).expect("static schema");
    for person in population {
        table
            .insert(
                person.id,
                vec![
                    person.a,
                    person.b,
                    person.x0,
                    person.x,
                    person.p,
                    person.y as f64,
                ],
            )
            .expect("population ids are unique");
    }
    table
}

/// Rebuild `Person` records from a population table.
pub fn population_from_table(table: &DbTable) -> Result<Vec<Person>, StoreError> {
    let expected = population_schema();
    if table.schema.columns != expected.columns {
        return Err(StoreError::Schema {
            table: table.schema.name.clone(),
            expected: expected.header(),
            found: table.schema.header(),
        });
    }
    Ok(table
        .iter()
        .map(|(id, v)| Person {
            id,
            a: v[0],
            b: v[1],
            x0: v[2],
            x: v[3],
            p: v[4],
            y: v[5] as u8,
        })
        .collect())
}

/// Inner join on the id key; row order is ascending id. Non-id columns of
/// `db_a` come first, then those of `db_b`, values copied unmodified.
pub fn join(db_a: &DbTable, db_b: &DbTable) -> Result<JoinedTable, StoreError> {
    for table in [db_a, db_b] {
        if table.schema.columns.first().map(String::as_str) != Some("id") {
            return Err(StoreError::MissingKey(table.schema.name.clone()));
        }
    }
    let mut columns = vec!["id".to_string()];
    columns.extend(db_a.schema.columns.iter().skip(1).cloned());
    columns.extend(db_b.schema.columns.iter().skip(1).cloned());
    let schema = TableSchema {
        name: "joined".to_string(),
        columns,
    };
    let mut joined = DbTable {
        schema,
        rows: BTreeMap::new(),
    };
    for (id, left) in db_a.iter() {
        if let Some(right) = db_b.get(id) {
            let mut row = Vec::with_capacity(left.len() + right.len());
            row.extend_from_slice(left);
            row.extend_from_slice(right);
            joined.rows.insert(id, row);
        }
    }
    Ok(joined)
}

/// Write a table to disk as CSV.
pub fn export_csv(table: &DbTable, path: &Path) -> Result<(), StoreError> {
    let io_err = |e: std::io::Error| StoreError::Io {
        path: path.display().to_string(),
        message: e.to_string(),
    };
    let mut file = std::fs::File::create(path).map_err(io_err)?;
    file.write_all(table.to_csv().as_bytes()).map_err(io_err)?;
    Ok(())
}

/// Read a table back, enforcing an exact header match against `schema`.
pub fn import_csv(path: &Path, schema: &TableSchema) -> Result<DbTable, StoreError> {
    let text = std::fs::read_to_string(path).map_err(|e| StoreError::Io {
        path: path.display().to_string(),
        message: e.to_string(),
    })?;
    parse_csv(&text, schema)
}

/// Parse CSV text against a schema. Lines are 1-based in errors.
pub fn parse_csv(text: &str, schema: &TableSchema) -> Result<DbTable, StoreError> {
    let mut lines = text.lines().enumerate();
    let header = match lines.next() {
        Some((_, h)) => h,
        None => {
            return Err(StoreError::Parse {
                line: 1,
                message: "empty file".into(),
            });
        }
    };
    if header != schema.header() {
        return Err(StoreError::Schema {
            table: schema.name.clone(),
            expected: schema.header(),
            found: header.to_string(),
        });
    }
    let mut table = DbTable::new(schema.clone())?;
    let width = schema.columns.len();
    for (index, line) in lines {
        let line_no = index + 1;
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != width {
            return Err(StoreError::Parse {
                line: line_no,
                message: format!("expected {width} fields, found {}", fields.len()),
            });
        }
        let id: u64 = fields[0].parse().map_err(|e| StoreError::Parse {
            line: line_no,
            message: format!("bad id '{}': {e}", fields[0]),
        })?;
        let mut values = Vec::with_capacity(width - 1);
        for field in &fields[1..] {
            let value: f64 = field.parse().map_err(|e| StoreError::Parse {
                line: line_no,
                message: format!("bad number '{field}': {e}"),
            })?;
            values.push(value);
        }
        table.insert(id, values).map_err(|e| StoreError::Parse {
            line: line_no,
            message: e.to_string(),
        })?;
    }
    Ok(table)
}
