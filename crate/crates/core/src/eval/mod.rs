//! Query evaluation shared by every endpoint kind: pattern sources produce
//! per-pattern solutions, which are joined left to right, filtered,
//! projected and de-duplicated.

mod expr;
mod graph;
mod solution;

use thiserror::Error;

use crate::mappings::MappingError;
use crate::rdf::RdfTerm;
use crate::sparql::{GroupElement, Query, Term, TriplePattern};

pub use expr::{eval_expr, filter_passes, ExprError};
pub use graph::{Graph, ListFact};
pub use solution::{compatible, join, merge, Solution, SolutionTable};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EvalError {
    #[error("unsupported feature: {0}")]
    Unsupported(String),
    #[error("triple pattern {pattern}: {source}")]
    Backend {
        pattern: usize,
        #[source]
        source: MappingError,
    },
}

/// Anything that can answer single triple patterns.
pub trait PatternSource {
    /// Distinct solutions of pattern number `index` of the current query.
    fn match_pattern(&self, index: usize, pattern: &TriplePattern) -> Result<Vec<Solution>, EvalError>;
}

/// Binds a pattern position against a concrete term. Returns false on a
/// mismatch or a conflicting earlier binding.
pub fn bind_term(pattern: &Term, value: &RdfTerm, solution: &mut Solution) -> bool {
    match pattern {
        Term::Var(v) => match solution.get(v) {
            Some(prev) => prev == value,
            None => {
                solution.insert(v.clone(), value.clone());
                true
            }
        },
        Term::Iri(i) => matches!(value, RdfTerm::Iri(j) if i == j),
        Term::Literal(l) => matches!(value, RdfTerm::Literal(m) if l == m),
        Term::List(_) => false,
    }
}

/// Natural join of the patterns' solutions, in written order.
pub fn evaluate_bgp(source: &dyn PatternSource, patterns: &[&TriplePattern]) -> Result<SolutionTable, EvalError> {
    let mut acc = SolutionTable::unit();
    for (i, p) in patterns.iter().enumerate() {
        let vars = p.variables().into_iter().map(str::to_string).collect();
        let table = SolutionTable::new(vars, source.match_pattern(i, p)?);
        acc = join(&acc, &table);
        if acc.is_empty() {
            let mut vars = acc.variables;
            for q in &patterns[i + 1..] {
                for v in q.variables() {
                    if !vars.iter().any(|w| w == v) {
                        vars.push(v.to_string());
                    }
                }
            }
            return Ok(SolutionTable::empty(vars));
        }
    }
    Ok(acc)
}

/// Evaluates a group of patterns and filters; filters apply to the whole
/// group, in written order.
pub fn evaluate_group(source: &dyn PatternSource, body: &[GroupElement]) -> Result<SolutionTable, EvalError> {
    let mut patterns = Vec::new();
    let mut filters = Vec::new();
    for el in body {
        match el {
            GroupElement::Pattern(p) => patterns.push(p),
            GroupElement::Filter(f) => filters.push(f),
            GroupElement::Service(s) => {
                return Err(EvalError::Unsupported(format!(
                    "SERVICE <{}> needs the federated endpoint",
                    s.endpoint
                )))
            }
        }
    }
    let mut table = evaluate_bgp(source, &patterns)?;
    for f in filters {
        table.solutions.retain(|s| filter_passes(f, s));
    }
    Ok(table)
}

/// Full SELECT evaluation against a single pattern source.
pub fn evaluate_select(source: &dyn PatternSource, query: &Query) -> Result<SolutionTable, EvalError> {
    let table = evaluate_group(source, &query.body)?;
    Ok(finish(table, query))
}

/// Projection and DISTINCT.
pub fn finish(table: SolutionTable, query: &Query) -> SolutionTable {
    let projected = table.project(&query.result_variables());
    if query.distinct {
        projected.distinct()
    } else {
        projected
    }
}
