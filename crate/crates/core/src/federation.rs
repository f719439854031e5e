//! SPARQL to SPARQL: queries with SERVICE blocks are answered by sending
//! sub-queries to registered endpoints and joining their answers left to
//! right. With bind-join on, each block sees the bindings accumulated so
//! far as constants, which lets a block filter on variables bound by an
//! earlier block.

use std::collections::HashMap;
use std::sync::Arc;
use std::time::Duration;

use indexmap::IndexMap;
use log::debug;
use thiserror::Error;

use crate::eval::{
    compatible, evaluate_select, filter_passes, finish, join, merge, EvalError, Graph, Solution, SolutionTable,
};
use crate::rdf::{Literal, RdfTerm};
use crate::results::{parse_results, ResultFormat, ResultsError};
use crate::rewriter::RewriteContext;
use crate::sparql::{pattern_variables, serialize_query, Expr, Func, GroupElement, Projection, Query, Service, Term, TriplePattern};

/// Why a single endpoint failed to answer.
#[derive(Debug, Error)]
pub enum EndpointError {
    #[error("transport failure: {0}")]
    Transport(String),
    #[error("no answer within {0:?}")]
    Timeout(Duration),
    #[error("HTTP status {status}: {body}")]
    Status { status: u16, body: String },
    #[error("malformed results: {0}")]
    MalformedResults(#[from] ResultsError),
    #[error(transparent)]
    Evaluation(#[from] EvalError),
}

#[derive(Debug, Error)]
pub enum FederationError {
    #[error("no endpoint registered for <{0}>")]
    UnknownEndpoint(String),
    #[error("endpoint <{0}> is already registered")]
    DuplicateEndpoint(String),
    #[error("endpoint <{endpoint}>: {source}")]
    Endpoint {
        endpoint: String,
        #[source]
        source: EndpointError,
    },
    #[error("endpoint <{endpoint}> returned more than {limit} solutions")]
    LimitExceeded { endpoint: String, limit: usize },
}

impl FederationError {
    /// Failures caused by a remote party rather than by the query.
    pub fn is_remote_failure(&self) -> bool {
        matches!(
            self,
            FederationError::Endpoint {
                source: EndpointError::Transport(_)
                    | EndpointError::Timeout(_)
                    | EndpointError::Status { .. }
                    | EndpointError::MalformedResults(_),
                ..
            } | FederationError::LimitExceeded { .. }
        )
    }

    pub fn unsupported(&self) -> Option<&str> {
        match self {
            FederationError::Endpoint {
                source: EndpointError::Evaluation(EvalError::Unsupported(f)),
                ..
            } => Some(f),
            _ => None,
        }
    }
}

/// Something that answers SELECT queries without SERVICE blocks.
pub trait SparqlEndpoint: Send + Sync {
    fn select(&self, query: &Query) -> Result<SolutionTable, EndpointError>;
}

impl SparqlEndpoint for RewriteContext {
    fn select(&self, query: &Query) -> Result<SolutionTable, EndpointError> {
        Ok(self.evaluate(query)?)
    }
}

impl SparqlEndpoint for Graph {
    fn select(&self, query: &Query) -> Result<SolutionTable, EndpointError> {
        Ok(evaluate_select(self, query)?)
    }
}

/// An endpoint reached over the SPARQL protocol.
#[derive(Debug, Clone)]
pub struct RemoteEndpoint {
    url: String,
    timeout: Duration,
    client: reqwest::blocking::Client,
}

const ACCEPT: &str = "application/sparql-results+json, application/sparql-results+xml;q=0.9";

impl RemoteEndpoint {
    pub fn new(url: impl Into<String>, timeout: Duration) -> Result<Self, EndpointError> {
        let client = reqwest::blocking::Client::builder()
            .timeout(timeout)
            .build()
            .map_err(|e| EndpointError::Transport(e.to_string()))?;
        Ok(RemoteEndpoint {
            url: url.into(),
            timeout,
            client,
        })
    }

    pub fn url(&self) -> &str {
        &self.url
    }
}

impl SparqlEndpoint for RemoteEndpoint {
    fn select(&self, query: &Query) -> Result<SolutionTable, EndpointError> {
        let text = serialize_query(query);
        let transport = |e: reqwest::Error| {
            if e.is_timeout() {
                EndpointError::Timeout(self.timeout)
            } else {
                EndpointError::Transport(e.to_string())
            }
        };
        let resp = self
            .client
            .get(&self.url)
            .query(&[("query", text.as_str())])
            .header(reqwest::header::ACCEPT, ACCEPT)
            .send()
            .map_err(transport)?;
        let status = resp.status();
        let content_type = resp
            .headers()
            .get(reqwest::header::CONTENT_TYPE)
            .and_then(|v| v.to_str().ok())
            .unwrap_or("")
            .to_ascii_lowercase();
        let body = resp.text().map_err(transport)?;
        if !status.is_success() {
            return Err(EndpointError::Status {
                status: status.as_u16(),
                body,
            });
        }
        let format = if content_type.contains("xml") {
            ResultFormat::Xml
        } else {
            ResultFormat::Json
        };
        Ok(parse_results(format, &body)?)
    }
}

/// Endpoints by IRI, plus the IRI that answers bare patterns.
#[derive(Clone, Default)]
pub struct EndpointRegistry {
    entries: IndexMap<String, Arc<dyn SparqlEndpoint>>,
    default: Option<String>,
}

impl EndpointRegistry {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn register(&mut self, iri: impl Into<String>, endpoint: Arc<dyn SparqlEndpoint>) -> Result<(), FederationError> {
        let iri = iri.into();
        if self.entries.contains_key(&iri) {
            return Err(FederationError::DuplicateEndpoint(iri));
        }
        self.entries.insert(iri, endpoint);
        Ok(())
    }

    pub fn remove(&mut self, iri: &str) -> Option<Arc<dyn SparqlEndpoint>> {
        if self.default.as_deref() == Some(iri) {
            self.default = None;
        }
        self.entries.shift_remove(iri)
    }

    pub fn set_default(&mut self, iri: impl Into<String>) {
        self.default = Some(iri.into());
    }

    pub fn default_iri(&self) -> Option<&str> {
        self.default.as_deref()
    }

    pub fn get(&self, iri: &str) -> Result<&Arc<dyn SparqlEndpoint>, FederationError> {
        self.entries
            .get(iri)
            .ok_or_else(|| FederationError::UnknownEndpoint(iri.to_string()))
    }

    pub fn iris(&self) -> impl Iterator<Item = &str> {
        self.entries.keys().map(String::as_str)
    }
}

impl std::fmt::Debug for EndpointRegistry {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("EndpointRegistry")
            .field("endpoints", &self.entries.keys().collect::<Vec<_>>())
            .field("default", &self.default)
            .finish()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FederationPolicy {
    pub bind_join: bool,
    /// Per remote call.
    pub timeout: Duration,
    pub max_solutions_per_service: usize,
}

impl Default for FederationPolicy {
    fn default() -> Self {
        FederationPolicy {
            bind_join: true,
            timeout: Duration::from_secs(10),
            max_solutions_per_service: 100_000,
        }
    }
}

/// Per-query state: answers of identical sub-queries are reused and
/// remote calls are counted.
#[derive(Debug, Default)]
pub struct Session {
    cache: HashMap<(String, String), SolutionTable>,
    pub calls: usize,
}

impl Session {
    fn call(
        &mut self,
        reg: &EndpointRegistry,
        policy: &FederationPolicy,
        iri: &str,
        query: &Query,
    ) -> Result<SolutionTable, FederationError> {
        let key = (iri.to_string(), serialize_query(query));
        if let Some(hit) = self.cache.get(&key) {
            return Ok(hit.clone());
        }
        let endpoint = reg.get(iri)?;
        self.calls += 1;
        debug!("SERVICE <{iri}>: {}", key.1);
        let table = endpoint.select(query).map_err(|source| FederationError::Endpoint {
            endpoint: iri.to_string(),
            source,
        })?;
        if table.len() > policy.max_solutions_per_service {
            return Err(FederationError::LimitExceeded {
                endpoint: iri.to_string(),
                limit: policy.max_solutions_per_service,
            });
        }
        self.cache.insert(key, table.clone());
        Ok(table)
    }
}

/// Joins the answers of `block` into `incoming`.
pub fn execute_service(
    block: &Service,
    incoming: &SolutionTable,
    reg: &EndpointRegistry,
    policy: &FederationPolicy,
    session: &mut Session,
) -> Result<SolutionTable, FederationError> {
    reg.get(&block.endpoint)?;
    let block_vars = pattern_variables(&block.body);
    let mut out_vars = incoming.variables.clone();
    for v in &block_vars {
        if !out_vars.contains(v) {
            out_vars.push(v.clone());
        }
    }
    if incoming.is_empty() {
        return Ok(SolutionTable::empty(out_vars));
    }
    let unconditioned = incoming.variables.is_empty() && incoming.solutions.iter().all(|s| s.is_empty());
    if unconditioned || !policy.bind_join {
        // filters on variables from earlier groups cannot run remotely
        let (local, lifted): (Vec<&GroupElement>, Vec<&GroupElement>) = block.body.iter().partition(|el| match el {
            GroupElement::Filter(f) => f.variables().iter().all(|v| block_vars.iter().any(|b| b == v)),
            _ => true,
        });
        let body: Vec<GroupElement> = local.into_iter().cloned().collect();
        let sub = sub_query(body);
        let answer = session.call(reg, policy, &block.endpoint, &sub)?;
        let mut joined = join(incoming, &answer);
        for el in lifted {
            if let GroupElement::Filter(f) = el {
                joined.solutions.retain(|s| filter_passes(f, s));
            }
        }
        joined.variables = out_vars;
        return Ok(joined);
    }
    let mut solutions = Vec::new();
    for s in &incoming.solutions {
        let body: Vec<GroupElement> = block.body.iter().map(|el| substitute_element(el, s)).collect();
        let answer = session.call(reg, policy, &block.endpoint, &sub_query(body))?;
        for r in &answer.solutions {
            if compatible(s, r) {
                solutions.push(merge(s, r));
            }
        }
    }
    Ok(SolutionTable::new(out_vars, solutions))
}

fn sub_query(body: Vec<GroupElement>) -> Query {
    let vars = pattern_variables(&body);
    let projection = if vars.is_empty() {
        Projection::All
    } else {
        Projection::Vars(vars)
    };
    Query::select(projection, body)
}

fn substitute_element(el: &GroupElement, s: &Solution) -> GroupElement {
    match el {
        GroupElement::Pattern(p) => GroupElement::Pattern(TriplePattern::new(
            substitute_term(&p.subject, s),
            substitute_term(&p.predicate, s),
            substitute_term(&p.object, s),
        )),
        GroupElement::Filter(f) => GroupElement::Filter(substitute_expr(f, s)),
        GroupElement::Service(inner) => GroupElement::Service(inner.clone()),
    }
}

fn substitute_term(t: &Term, s: &Solution) -> Term {
    match t {
        // blank nodes are scoped to the answering endpoint; keep the variable
        Term::Var(v) => s.get(v).and_then(Term::from_rdf).unwrap_or_else(|| t.clone()),
        Term::List(items) => Term::List(items.iter().map(|i| substitute_term(i, s)).collect()),
        Term::Iri(_) | Term::Literal(_) => t.clone(),
    }
}

fn substitute_expr(e: &Expr, s: &Solution) -> Expr {
    match e {
        Expr::Var(v) => match s.get(v) {
            Some(t @ (RdfTerm::Iri(_) | RdfTerm::Literal(_))) => Expr::Const(t.clone()),
            _ => e.clone(),
        },
        Expr::Call(Func::Bound, args) if matches!(args.as_slice(), [Expr::Var(v)] if s.contains_key(v)) => {
            Expr::Const(RdfTerm::Literal(Literal::boolean(true)))
        }
        Expr::Const(_) => e.clone(),
        Expr::Binary(op, l, r) => Expr::binary(*op, substitute_expr(l, s), substitute_expr(r, s)),
        Expr::Not(x) => Expr::Not(Box::new(substitute_expr(x, s))),
        Expr::Neg(x) => Expr::Neg(Box::new(substitute_expr(x, s))),
        Expr::Call(f, args) => Expr::Call(f.clone(), args.iter().map(|a| substitute_expr(a, s)).collect()),
    }
}

/// Full evaluation of a query that may contain SERVICE blocks. Runs of
/// bare patterns go to the default endpoint; top-level filters apply to
/// the joined groups.
pub fn evaluate_federated(
    query: &Query,
    reg: &EndpointRegistry,
    policy: &FederationPolicy,
) -> Result<SolutionTable, FederationError> {
    evaluate_federated_in(query, reg, policy, &mut Session::default())
}

pub fn evaluate_federated_in(
    query: &Query,
    reg: &EndpointRegistry,
    policy: &FederationPolicy,
    session: &mut Session,
) -> Result<SolutionTable, FederationError> {
    let default_iri = || {
        reg.default_iri()
            .map(str::to_string)
            .ok_or_else(|| FederationError::UnknownEndpoint("(default)".into()))
    };
    if !query.has_service() {
        let iri = default_iri()?;
        return session.call(reg, policy, &iri, query);
    }
    let mut acc = SolutionTable::unit();
    let mut filters = Vec::new();
    let mut pending: Vec<GroupElement> = Vec::new();
    for el in &query.body {
        match el {
            GroupElement::Pattern(_) => pending.push(el.clone()),
            GroupElement::Filter(f) => filters.push(f),
            GroupElement::Service(block) => {
                if !pending.is_empty() {
                    let local = Service {
                        endpoint: default_iri()?,
                        body: std::mem::take(&mut pending),
                    };
                    acc = execute_service(&local, &acc, reg, policy, session)?;
                }
                acc = execute_service(block, &acc, reg, policy, session)?;
            }
        }
    }
    if !pending.is_empty() {
        let local = Service {
            endpoint: default_iri()?,
            body: pending,
        };
        acc = execute_service(&local, &acc, reg, policy, session)?;
    }
    for f in filters {
        acc.solutions.retain(|s| filter_passes(f, s));
    }
    Ok(finish(acc, query))
}
