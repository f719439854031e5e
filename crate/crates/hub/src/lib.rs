//! Semantic IoT data hub: per-database SPARQL endpoints backed by
//! ontology-aware SPARQL-to-SQL rewriting, a federated SPARQL endpoint,
//! and Hypercat catalogues of the feeds and datastreams held.

pub mod catalogue;
pub mod config;
pub mod server;
pub mod state;

use std::path::PathBuf;

use semhub_core::eval::EvalError;
use semhub_core::federation::FederationError;
use semhub_core::mappings::MappingError;
use semhub_core::ntriples::NTriplesError;
use semhub_core::ontology::OntologyError;
use semhub_core::relstore::StoreError;
use semhub_core::sparql::ParseError;
use thiserror::Error;

pub use config::HubConfig;
pub use state::Hub;

/// Failures while loading the hub from its configuration.
#[derive(Debug, Error)]
pub enum HubError {
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{}: {message}", path.display())]
    Config { path: PathBuf, message: String },
    #[error("{}: {source}", path.display())]
    Ontology {
        path: PathBuf,
        #[source]
        source: OntologyError,
    },
    #[error("{}: {source}", path.display())]
    Fixture {
        path: PathBuf,
        #[source]
        source: StoreError,
    },
    #[error("{}: {source}", path.display())]
    Mappings {
        path: PathBuf,
        #[source]
        source: MappingError,
    },
    #[error("{}: {source}", path.display())]
    MockGraph {
        path: PathBuf,
        #[source]
        source: NTriplesError,
    },
    #[error("remote <{iri}>: {message}")]
    Remote { iri: String, message: String },
}

/// Why a query could not be answered.
#[derive(Debug, Error)]
pub enum QueryError {
    #[error("parse error at {0}")]
    Parse(#[from] ParseError),
    #[error("unsupported feature: {0}")]
    Unsupported(String),
    #[error("unknown database {0:?}")]
    UnknownDatabase(String),
    #[error(transparent)]
    Evaluation(EvalError),
    #[error(transparent)]
    Mapping(#[from] MappingError),
    #[error(transparent)]
    Federation(FederationError),
}

impl From<EvalError> for QueryError {
    fn from(e: EvalError) -> Self {
        match e {
            EvalError::Unsupported(f) => QueryError::Unsupported(f),
            other => QueryError::Evaluation(other),
        }
    }
}

impl From<FederationError> for QueryError {
    fn from(e: FederationError) -> Self {
        match e.unsupported() {
            Some(f) => QueryError::Unsupported(f.to_string()),
            None => QueryError::Federation(e),
        }
    }
}

impl QueryError {
    /// Errors the client can fix by changing the query.
    pub fn is_user_error(&self) -> bool {
        match self {
            QueryError::Parse(_) | QueryError::Unsupported(_) => true,
            QueryError::Federation(FederationError::UnknownEndpoint(_)) => true,
            _ => false,
        }
    }

    pub fn is_remote_failure(&self) -> bool {
        matches!(self, QueryError::Federation(e) if e.is_remote_failure())
    }
}
