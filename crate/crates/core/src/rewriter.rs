//! SPARQL to SQL: triple patterns are matched against mapping templates
//! (expanded through the class and property hierarchies), the mapping
//! sources run as SQL with equality constraints derived from constant
//! pattern terms, and the expanded triples bind the pattern variables.

use std::collections::HashSet;
use std::sync::Arc;

use crate::eval::{bind_term, evaluate_select, EvalError, PatternSource, Solution, SolutionTable};
use crate::mappings::{expand_template, MappingDefinition, MappingError, MappingRegistry, ObjectTemplate};
use crate::ontology::OntologyModel;
use crate::rdf::{vocab, RdfTerm, RdfTriple};
use crate::relstore::{ColumnKind, Database, ProjectionExpr, SqlQuery, Value};
use crate::sparql::{GroupElement, Query, Term, TriplePattern};

/// A constant pattern term translated to a placeholder value.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Constraint {
    pub placeholder: String,
    pub text: String,
    /// Datatype of the literal the value came from; `None` for IRIs.
    pub datatype: Option<String>,
}

#[derive(Debug, Clone)]
pub struct MappingMatch<'a> {
    pub mapping: &'a MappingDefinition,
    pub constraints: Vec<Constraint>,
}

/// Mappings that can produce triples matching `p`, directly or through
/// subclass/subproperty entailment.
pub fn match_mappings<'a>(p: &TriplePattern, ont: &OntologyModel, reg: &'a MappingRegistry) -> Vec<MappingMatch<'a>> {
    if matches!(p.subject, Term::Literal(_) | Term::List(_)) || matches!(p.predicate, Term::Literal(_) | Term::List(_))
    {
        return Vec::new();
    }
    if matches!(p.object, Term::List(_)) {
        return Vec::new();
    }
    let candidates: Vec<&MappingDefinition> = match &p.predicate {
        Term::Iri(pred) if pred == vocab::RDF_TYPE => match &p.object {
            Term::Iri(class) => {
                let mut out: Vec<&MappingDefinition> = ont
                    .subclasses_of(class)
                    .iter()
                    .flat_map(|k| reg.by_class(k))
                    .collect();
                // type mappings whose class comes from data
                out.extend(reg.by_predicate(vocab::RDF_TYPE).filter(|m| m.target.constant_class().is_none()));
                out
            }
            Term::Var(_) => reg.by_predicate(vocab::RDF_TYPE).collect(),
            _ => Vec::new(),
        },
        Term::Iri(pred) => ont
            .subproperties_of(pred)
            .iter()
            .flat_map(|q| reg.by_predicate(q))
            .collect(),
        _ => reg.mappings().iter().collect(),
    };
    let mut seen = HashSet::new();
    candidates
        .into_iter()
        .filter(|m| seen.insert(m.id.as_str()))
        .filter_map(|m| constraints_for(p, m).map(|constraints| MappingMatch { mapping: m, constraints }))
        .collect()
}

/// Constraints implied by constant subject/object terms, or `None` when a
/// constant can never be produced by the mapping.
fn constraints_for(p: &TriplePattern, m: &MappingDefinition) -> Option<Vec<Constraint>> {
    let mut out = Vec::new();
    let single = |assignments: Vec<Vec<(String, String)>>, datatype: Option<&str>, out: &mut Vec<Constraint>| {
        if assignments.is_empty() {
            return false;
        }
        // ambiguous splits cannot be pushed down; the term filter decides
        if let [only] = assignments.as_slice() {
            out.extend(only.iter().map(|(ph, text)| Constraint {
                placeholder: ph.clone(),
                text: text.clone(),
                datatype: datatype.map(str::to_string),
            }));
        }
        true
    };
    if let Term::Iri(s) = &p.subject {
        if !single(m.target.subject.invert_iri(s), None, &mut out) {
            return None;
        }
    }
    let is_type = m.target.predicate == vocab::RDF_TYPE;
    match (&p.object, &m.target.object) {
        (Term::Iri(o), ObjectTemplate::Iri(t)) if !is_type => {
            if !single(t.invert_iri(o), None, &mut out) {
                return None;
            }
        }
        (Term::Iri(_), ObjectTemplate::Iri(_)) => {}
        (Term::Literal(lit), ObjectTemplate::Literal { lexical, datatype }) => {
            if lit.language().is_some() || lit.datatype() != datatype {
                return None;
            }
            if !single(lexical.invert_text(&lit.lexical), Some(datatype), &mut out) {
                return None;
            }
        }
        (Term::Literal(_), ObjectTemplate::Iri(_)) | (Term::Iri(_), ObjectTemplate::Literal { .. }) => return None,
        _ => {}
    }
    Some(out)
}

/// Source query of a match with the sound subset of its constraints
/// turned into SQL equality predicates.
pub fn constrained_source(m: &MappingMatch<'_>, db: &Database) -> SqlQuery {
    let source = &m.mapping.source;
    let Some(schema) = db.schema(&source.table) else {
        return source.clone();
    };
    let mut pushed = Vec::new();
    for c in &m.constraints {
        let Some(proj) = source.projection(&c.placeholder) else { continue };
        if proj.expr != ProjectionExpr::Column {
            continue;
        }
        let Some((_, kind)) = schema.column(&proj.column) else { continue };
        if !pushdown_sound(kind, c.datatype.as_deref()) {
            continue;
        }
        let Some(value) = kind.parse_value(&c.text) else { continue };
        if matches!(value, Value::Null) {
            continue;
        }
        let reference = format!("{}.{}", source.table, proj.column);
        pushed.push((reference, value));
    }
    source.with_constraints(pushed)
}

/// Whether `column = parse(text)` keeps every row whose rendering equals
/// `text`. Literal renderings are canonicalized per datatype, so only
/// pairs where canonicalization is the identity or a value round-trip
/// qualify.
fn pushdown_sound(kind: ColumnKind, datatype: Option<&str>) -> bool {
    match (kind, datatype) {
        (ColumnKind::TextArray, _) => false,
        (_, None) => true,
        (_, Some(vocab::XSD_STRING)) => true,
        (ColumnKind::Float64, Some(vocab::XSD_DOUBLE)) => true,
        (ColumnKind::Int64 | ColumnKind::EpochSeconds, Some(vocab::XSD_INTEGER)) => true,
        (ColumnKind::Bool, Some(vocab::XSD_BOOLEAN)) => true,
        _ => false,
    }
}

/// The triple plus the triples it entails through the hierarchies.
pub fn entailed(t: RdfTriple, ont: &OntologyModel) -> Vec<RdfTriple> {
    if t.predicate == vocab::RDF_TYPE {
        if let RdfTerm::Iri(class) = &t.object {
            return ont
                .superclasses_of(class)
                .into_iter()
                .map(|c| RdfTriple::new(t.subject.clone(), vocab::RDF_TYPE, RdfTerm::Iri(c)))
                .collect();
        }
        return vec![t];
    }
    ont.superproperties_of(&t.predicate)
        .into_iter()
        .map(|p| RdfTriple::new(t.subject.clone(), p, t.object.clone()))
        .collect()
}

/// One database with its mappings.
#[derive(Debug, Clone)]
pub struct Source {
    pub name: String,
    pub registry: Arc<MappingRegistry>,
    pub db: Arc<Database>,
}

/// Evaluation context: the ontology plus one or more mapped databases.
#[derive(Debug, Clone)]
pub struct RewriteContext {
    pub ontology: Arc<OntologyModel>,
    pub sources: Vec<Source>,
}

/// Matched mappings and generated SQL for one pattern.
#[derive(Debug, Clone, PartialEq)]
pub struct PatternPlan {
    pub pattern: TriplePattern,
    /// (source name, mapping id, SQL text)
    pub queries: Vec<(String, String, String)>,
}

impl RewriteContext {
    pub fn new(ontology: Arc<OntologyModel>, sources: Vec<Source>) -> Self {
        RewriteContext { ontology, sources }
    }

    pub fn single(ontology: Arc<OntologyModel>, name: &str, registry: MappingRegistry, db: Database) -> Self {
        RewriteContext {
            ontology,
            sources: vec![Source {
                name: name.to_string(),
                registry: Arc::new(registry),
                db: Arc::new(db),
            }],
        }
    }

    pub fn evaluate(&self, query: &Query) -> Result<SolutionTable, EvalError> {
        evaluate_select(self, query)
    }

    /// The SQL each pattern of `query` translates to.
    pub fn translate(&self, query: &Query) -> Result<Vec<PatternPlan>, EvalError> {
        let mut plans = Vec::new();
        for el in &query.body {
            match el {
                GroupElement::Pattern(p) => {
                    let mut queries = Vec::new();
                    for src in &self.sources {
                        for m in match_mappings(p, &self.ontology, &src.registry) {
                            let sql = constrained_source(&m, &src.db);
                            queries.push((src.name.clone(), m.mapping.id.clone(), sql.to_string()));
                        }
                    }
                    plans.push(PatternPlan {
                        pattern: p.clone(),
                        queries,
                    });
                }
                GroupElement::Filter(_) => {}
                GroupElement::Service(s) => {
                    return Err(EvalError::Unsupported(format!(
                        "SERVICE <{}> needs the federated endpoint",
                        s.endpoint
                    )))
                }
            }
        }
        Ok(plans)
    }
}

impl PatternSource for RewriteContext {
    fn match_pattern(&self, index: usize, p: &TriplePattern) -> Result<Vec<Solution>, EvalError> {
        let mut seen = HashSet::new();
        let mut out = Vec::new();
        for src in &self.sources {
            for m in match_mappings(p, &self.ontology, &src.registry) {
                let sql = constrained_source(&m, &src.db);
                let rows = src.db.execute(&sql).map_err(|e| EvalError::Backend {
                    pattern: index,
                    source: MappingError::Source {
                        mapping: m.mapping.id.clone(),
                        source: e,
                    },
                })?;
                for row in &rows {
                    let Some(triple) = expand_template(&m.mapping.target, row) else { continue };
                    for t in entailed(triple, &self.ontology) {
                        let mut s = Solution::new();
                        let ok = bind_term(&p.subject, &t.subject, &mut s)
                            && bind_term(&p.predicate, &RdfTerm::Iri(t.predicate.clone()), &mut s)
                            && bind_term(&p.object, &t.object, &mut s);
                        if ok && seen.insert(s.clone()) {
                            out.push(s);
                        }
                    }
                }
            }
        }
        Ok(out)
    }
}
