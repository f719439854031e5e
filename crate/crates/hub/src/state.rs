use std::collections::BTreeSet;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use log::info;
use semhub_core::eval::{Graph, SolutionTable};
use semhub_core::federation::{
    evaluate_federated, EndpointRegistry, FederationPolicy, RemoteEndpoint, SparqlEndpoint,
};
use semhub_core::mappings::{materialize_all, parse_mapping_document};
use semhub_core::ontology::{load_ontology, OntologyModel};
use semhub_core::rdf::RdfTriple;
use semhub_core::relstore::{Database, IngestReport};
use semhub_core::results::ResultFormat;
use semhub_core::rewriter::{PatternPlan, RewriteContext, Source};
use semhub_core::sparql::{parse_query, Query};

use crate::config::HubConfig;
use crate::{HubError, QueryError};

/// IRI under which SERVICE clauses reach this hub's own data.
pub const HUB_ENDPOINT_IRI: &str = "http://portal.bt-hypercat.com/BT-SPARQL-Endpoint/sparql";

/// Route name of the federated endpoint.
pub const FEDERATED: &str = "federated";

/// Everything needed to answer queries. Immutable once loaded.
pub struct Hub {
    ontology: Arc<OntologyModel>,
    databases: Vec<(Source, IngestReport)>,
    contexts: Vec<RewriteContext>,
    combined: Arc<RewriteContext>,
    endpoints: EndpointRegistry,
    pub policy: FederationPolicy,
    pub default_format: ResultFormat,
    pub listen: String,
    pub editor_dir: Option<PathBuf>,
}

fn read(path: &Path) -> Result<String, HubError> {
    std::fs::read_to_string(path).map_err(|source| HubError::Io {
        path: path.to_path_buf(),
        source,
    })
}

/// Loads one configured database: fixture rows plus mapping document,
/// with the mappings checked against the schema.
pub fn load_database(name: &str, fixture: &Path, mappings: &Path) -> Result<(Source, IngestReport), HubError> {
    let db = Database::new();
    let report = db.load_fixture(&read(fixture)?).map_err(|source| HubError::Fixture {
        path: fixture.to_path_buf(),
        source,
    })?;
    let registry = parse_mapping_document(&read(mappings)?).map_err(|source| HubError::Mappings {
        path: mappings.to_path_buf(),
        source,
    })?;
    registry.validate(&db).map_err(|source| HubError::Mappings {
        path: mappings.to_path_buf(),
        source,
    })?;
    let source = Source {
        name: name.to_string(),
        registry: Arc::new(registry),
        db: Arc::new(db),
    };
    Ok((source, report))
}

impl Hub {
    pub fn load(config: &HubConfig) -> Result<Hub, HubError> {
        let ontology = Arc::new(load_ontology(&read(&config.ontology)?).map_err(|source| HubError::Ontology {
            path: config.ontology.clone(),
            source,
        })?);
        let databases = config
            .databases
            .iter()
            .map(|d| load_database(&d.name, &d.fixture, &d.mappings))
            .collect::<Result<Vec<_>, _>>()?;
        for (source, report) in &databases {
            info!("database {}: {}", source.name, report.to_string().trim_end().replace('\n', ", "));
        }
        let contexts: Vec<RewriteContext> = databases
            .iter()
            .map(|(s, _)| RewriteContext::new(ontology.clone(), vec![s.clone()]))
            .collect();
        let combined = Arc::new(RewriteContext::new(
            ontology.clone(),
            databases.iter().map(|(s, _)| s.clone()).collect(),
        ));
        let policy = FederationPolicy::default();

        let mut endpoints = EndpointRegistry::new();
        endpoints
            .register(HUB_ENDPOINT_IRI, combined.clone() as Arc<dyn SparqlEndpoint>)
            .expect("empty registry");
        endpoints.set_default(HUB_ENDPOINT_IRI);
        for remote in &config.remotes {
            let endpoint: Arc<dyn SparqlEndpoint> = match remote.url.strip_prefix("file:") {
                Some(path) => {
                    let path = PathBuf::from(path);
                    let graph = Graph::parse(&read(&path)?).map_err(|source| HubError::MockGraph { path, source })?;
                    Arc::new(graph)
                }
                None => Arc::new(RemoteEndpoint::new(remote.url.clone(), policy.timeout).map_err(|e| {
                    HubError::Remote {
                        iri: remote.iri.clone(),
                        message: e.to_string(),
                    }
                })?),
            };
            endpoints.register(remote.iri.clone(), endpoint).map_err(|e| HubError::Remote {
                iri: remote.iri.clone(),
                message: e.to_string(),
            })?;
        }

        Ok(Hub {
            ontology,
            databases,
            contexts,
            combined,
            endpoints,
            policy,
            default_format: config.default_format,
            listen: config.listen.clone(),
            editor_dir: config.editor_dir.clone(),
        })
    }

    pub fn ontology(&self) -> &OntologyModel {
        &self.ontology
    }

    pub fn database_names(&self) -> impl Iterator<Item = &str> {
        self.databases.iter().map(|(s, _)| s.name.as_str())
    }

    pub fn ingest_report(&self, db: &str) -> Option<&IngestReport> {
        self.databases.iter().find(|(s, _)| s.name == db).map(|(_, r)| r)
    }

    /// Rewriting context over a single database.
    pub fn context(&self, db: &str) -> Option<&RewriteContext> {
        self.databases
            .iter()
            .position(|(s, _)| s.name == db)
            .map(|i| &self.contexts[i])
    }

    /// Rewriting context over every database at once.
    pub fn combined(&self) -> &RewriteContext {
        &self.combined
    }

    pub fn endpoints(&self) -> &EndpointRegistry {
        &self.endpoints
    }

    /// Every route that answers SPARQL, as served under /sparql/.
    pub fn routes(&self) -> Vec<String> {
        let mut out: Vec<String> = self.database_names().map(str::to_string).collect();
        out.push(FEDERATED.to_string());
        out
    }

    /// Answers `query` on a route: a database name or `federated`.
    pub fn evaluate(&self, route: &str, query: &Query) -> Result<SolutionTable, QueryError> {
        if route == FEDERATED {
            return Ok(evaluate_federated(query, &self.endpoints, &self.policy)?);
        }
        let ctx = self
            .context(route)
            .ok_or_else(|| QueryError::UnknownDatabase(route.to_string()))?;
        if query.has_service() {
            return Err(QueryError::Unsupported(format!(
                "SERVICE on the {route} endpoint; use /sparql/{FEDERATED}"
            )));
        }
        Ok(ctx.evaluate(query)?)
    }

    pub fn evaluate_text(&self, route: &str, text: &str) -> Result<SolutionTable, QueryError> {
        self.evaluate(route, &parse_query(text)?)
    }

    /// Matched mappings and SQL per triple pattern, over one database or
    /// all of them.
    pub fn translate(&self, db: Option<&str>, text: &str) -> Result<Vec<PatternPlan>, QueryError> {
        let ctx = match db {
            Some(db) => self.context(db).ok_or_else(|| QueryError::UnknownDatabase(db.to_string()))?,
            None => self.combined(),
        };
        Ok(ctx.translate(&parse_query(text)?)?)
    }

    /// The full virtual graph of one database.
    pub fn materialize(&self, db: &str) -> Result<BTreeSet<RdfTriple>, QueryError> {
        let (source, _) = self
            .databases
            .iter()
            .find(|(s, _)| s.name == db)
            .ok_or_else(|| QueryError::UnknownDatabase(db.to_string()))?;
        Ok(materialize_all(&source.registry, &source.db)?)
    }
}
