//! Core of the semantic IoT data hub: relational fixtures exposed as a
//! virtual RDF graph through mapping templates, ontology-aware SPARQL
//! evaluation over that graph, and SPARQL federation across endpoints.

pub mod ntriples;
pub mod ontology;
pub mod rdf;
pub mod relstore;
pub mod sparql;
pub mod mappings;
pub mod eval;
pub mod rewriter;
pub mod results;
pub mod federation;
