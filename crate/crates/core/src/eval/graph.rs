use std::collections::BTreeSet;

use super::{bind_term, EvalError, PatternSource, Solution};
use crate::ntriples::{parse_line, NTriplesError, TermCursor};
use crate::rdf::{RdfTerm, RdfTriple};
use crate::sparql::{Term, TriplePattern};

/// A fact whose object is an RDF collection, e.g. a precomputed answer
/// of a proximity operator written `?x geo:nearby (?lat ?long "50mi")`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct ListFact {
    pub subject: RdfTerm,
    pub predicate: String,
    pub items: Vec<RdfTerm>,
}

/// An in-memory RDF graph answering patterns by scanning.
#[derive(Debug, Clone, Default)]
pub struct Graph {
    triples: BTreeSet<RdfTriple>,
    lists: Vec<ListFact>,
}

impl Graph {
    pub fn from_triples(triples: impl IntoIterator<Item = RdfTriple>) -> Self {
        Graph {
            triples: triples.into_iter().collect(),
            lists: Vec::new(),
        }
    }

    /// N-Triples plus `@list <s> <p> item item ... .` lines.
    pub fn parse(text: &str) -> Result<Self, NTriplesError> {
        let mut g = Graph::default();
        for (idx, line) in text.lines().enumerate() {
            let line_no = idx + 1;
            if let Some(rest) = line.trim_start().strip_prefix("@list") {
                g.lists.push(parse_list_fact(rest, line_no)?);
            } else if let Some(t) = parse_line(line, line_no)? {
                g.triples.insert(t);
            }
        }
        Ok(g)
    }

    pub fn triples(&self) -> &BTreeSet<RdfTriple> {
        &self.triples
    }

    pub fn lists(&self) -> &[ListFact] {
        &self.lists
    }

    pub fn len(&self) -> usize {
        self.triples.len() + self.lists.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

fn parse_list_fact(src: &str, line: usize) -> Result<ListFact, NTriplesError> {
    let mut cur = TermCursor::new(src, line);
    cur.skip_ws();
    let subject = cur.term()?;
    cur.skip_ws();
    let predicate = match cur.term()? {
        RdfTerm::Iri(i) => i,
        _ => return Err(cur.error("predicate must be an IRI")),
    };
    let mut items = Vec::new();
    loop {
        cur.skip_ws();
        if cur.peek() == Some('.') {
            cur.expect('.')?;
            cur.skip_ws();
            if !cur.at_end() {
                return Err(cur.error("trailing content after '.'"));
            }
            return Ok(ListFact {
                subject,
                predicate,
                items,
            });
        }
        if cur.at_end() {
            return Err(cur.error("expected '.'"));
        }
        items.push(cur.term()?);
    }
}

impl PatternSource for Graph {
    fn match_pattern(&self, _index: usize, p: &TriplePattern) -> Result<Vec<Solution>, EvalError> {
        let mut out = Vec::new();
        if let Term::List(members) = &p.object {
            for fact in &self.lists {
                if fact.items.len() != members.len() {
                    continue;
                }
                let mut s = Solution::new();
                let ok = bind_term(&p.subject, &fact.subject, &mut s)
                    && bind_term(&p.predicate, &RdfTerm::Iri(fact.predicate.clone()), &mut s)
                    && members.iter().zip(&fact.items).all(|(m, v)| bind_term(m, v, &mut s));
                if ok {
                    out.push(s);
                }
            }
            return Ok(out);
        }
        for t in &self.triples {
            let mut s = Solution::new();
            if bind_term(&p.subject, &t.subject, &mut s)
                && bind_term(&p.predicate, &RdfTerm::Iri(t.predicate.clone()), &mut s)
                && bind_term(&p.object, &t.object, &mut s)
            {
                out.push(s);
            }
        }
        Ok(out)
    }
}
