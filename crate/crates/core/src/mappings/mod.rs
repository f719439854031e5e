//! Mapping documents: each mapping pairs a triple template with a SQL
//! source whose rows instantiate it. Together they define the virtual RDF
//! graph over a database.

mod document;
mod template;

use std::collections::{BTreeSet, HashMap};

use thiserror::Error;

use crate::rdf::RdfTriple;
use crate::relstore::{Database, SqlQuery, StoreError};

pub use document::parse_mapping_document;
pub use template::{
    canonical_literal, expand_template, value_text, ObjectTemplate, Template, TemplatePart, TripleTemplate,
};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MappingError {
    #[error("mapping document line {line}: {message}")]
    Syntax { line: usize, message: String },
    #[error("mapping document line {line}: unknown prefix `{prefix}`")]
    UnknownPrefix { line: usize, prefix: String },
    #[error("{mapping}: placeholder {{{placeholder}}} is not a projection of the source query")]
    Placeholder { mapping: String, placeholder: String },
    #[error("duplicate mapping id `{0}`")]
    DuplicateId(String),
    #[error("{mapping}: {source}")]
    Source {
        mapping: String,
        #[source]
        source: StoreError,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct MappingDefinition {
    pub id: String,
    pub target: TripleTemplate,
    pub source_text: String,
    pub source: SqlQuery,
}

#[derive(Debug, Clone, Default)]
pub struct MappingRegistry {
    prefixes: Vec<(String, String)>,
    mappings: Vec<MappingDefinition>,
    by_predicate: HashMap<String, Vec<usize>>,
    by_class: HashMap<String, Vec<usize>>,
}

impl MappingRegistry {
    pub fn new(prefixes: Vec<(String, String)>) -> Self {
        MappingRegistry {
            prefixes,
            ..Default::default()
        }
    }

    pub fn add(&mut self, mapping: MappingDefinition) -> Result<(), MappingError> {
        if self.mappings.iter().any(|m| m.id == mapping.id) {
            return Err(MappingError::DuplicateId(mapping.id));
        }
        check_placeholders(&mapping)?;
        self.mappings.push(mapping);
        self.reindex();
        Ok(())
    }

    pub fn remove(&mut self, id: &str) -> Option<MappingDefinition> {
        let idx = self.mappings.iter().position(|m| m.id == id)?;
        let m = self.mappings.remove(idx);
        self.reindex();
        Some(m)
    }

    fn reindex(&mut self) {
        self.by_predicate.clear();
        self.by_class.clear();
        for (i, m) in self.mappings.iter().enumerate() {
            self.by_predicate.entry(m.target.predicate.clone()).or_default().push(i);
            if let Some(class) = m.target.constant_class() {
                self.by_class.entry(class.to_string()).or_default().push(i);
            }
        }
    }

    pub fn prefixes(&self) -> &[(String, String)] {
        &self.prefixes
    }

    pub fn mappings(&self) -> &[MappingDefinition] {
        &self.mappings
    }

    pub fn get(&self, id: &str) -> Option<&MappingDefinition> {
        self.mappings.iter().find(|m| m.id == id)
    }

    pub fn len(&self) -> usize {
        self.mappings.len()
    }

    pub fn is_empty(&self) -> bool {
        self.mappings.is_empty()
    }

    pub fn by_predicate(&self, predicate: &str) -> impl Iterator<Item = &MappingDefinition> {
        self.by_predicate
            .get(predicate)
            .into_iter()
            .flatten()
            .map(|i| &self.mappings[*i])
    }

    /// `rdf:type` mappings asserting exactly `class`.
    pub fn by_class(&self, class: &str) -> impl Iterator<Item = &MappingDefinition> {
        self.by_class
            .get(class)
            .into_iter()
            .flatten()
            .map(|i| &self.mappings[*i])
    }

    /// Checks every source query against the database schema.
    pub fn validate(&self, db: &Database) -> Result<(), MappingError> {
        for m in &self.mappings {
            db.validate(&m.source).map_err(|source| MappingError::Source {
                mapping: m.id.clone(),
                source,
            })?;
        }
        Ok(())
    }
}

pub(crate) fn check_placeholders(m: &MappingDefinition) -> Result<(), MappingError> {
    for ph in m.target.placeholders() {
        if m.source.projection(ph).is_none() {
            return Err(MappingError::Placeholder {
                mapping: m.id.clone(),
                placeholder: ph.to_string(),
            });
        }
    }
    Ok(())
}

/// Expands one mapping over its source rows.
pub fn materialize_mapping(m: &MappingDefinition, db: &Database) -> Result<Vec<RdfTriple>, MappingError> {
    let rows = db.execute(&m.source).map_err(|source| MappingError::Source {
        mapping: m.id.clone(),
        source,
    })?;
    Ok(rows.iter().filter_map(|r| expand_template(&m.target, r)).collect())
}

/// The full virtual graph of a registry over a database.
pub fn materialize_all(registry: &MappingRegistry, db: &Database) -> Result<BTreeSet<RdfTriple>, MappingError> {
    let mut out = BTreeSet::new();
    for m in registry.mappings() {
        out.extend(materialize_mapping(m, db)?);
    }
    Ok(out)
}
