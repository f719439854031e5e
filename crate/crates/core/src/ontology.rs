//! Class and property hierarchy of the hub ontology, with the subsumption
//! closures used by query rewriting.

use std::collections::{BTreeMap, BTreeSet};

use thiserror::Error;

use crate::ntriples::{parse_ntriples, NTriplesError};
use crate::rdf::{vocab, RdfTerm, RdfTriple};

#[derive(Debug, Error)]
pub enum OntologyError {
    #[error("ontology syntax error: {0}")]
    Syntax(#[from] NTriplesError),
    #[error("cycle in {kind} hierarchy: {}", path.join(" -> "))]
    Cycle { kind: &'static str, path: Vec<String> },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PropertyKind {
    Data,
    Object,
    /// Declared as `rdf:Property` or only seen in a sub-property axiom.
    Untyped,
}

/// Immutable ontology with precomputed closures.
#[derive(Debug, Clone, Default)]
pub struct OntologyModel {
    classes: BTreeSet<String>,
    properties: BTreeMap<String, PropertyKind>,
    subclass_axioms: BTreeSet<(String, String)>,
    subproperty_axioms: BTreeSet<(String, String)>,
    datatype_range: BTreeMap<String, String>,
    // node -> reflexive-transitive descendants / ancestors
    class_down: BTreeMap<String, BTreeSet<String>>,
    class_up: BTreeMap<String, BTreeSet<String>>,
    prop_down: BTreeMap<String, BTreeSet<String>>,
    prop_up: BTreeMap<String, BTreeSet<String>>,
}

pub fn load_ontology(document: &str) -> Result<OntologyModel, OntologyError> {
    let triples = parse_ntriples(document)?;
    OntologyModel::from_triples(&triples)
}

impl OntologyModel {
    pub fn from_triples<'a>(
        triples: impl IntoIterator<Item = &'a RdfTriple>,
    ) -> Result<Self, OntologyError> {
        let mut m = OntologyModel::default();
        for t in triples {
            let Some(s) = t.subject.as_iri() else { continue };
            let o = t.object.as_iri();
            match (t.predicate.as_str(), o) {
                (vocab::RDF_TYPE, Some(vocab::OWL_CLASS | vocab::RDFS_CLASS)) => {
                    m.classes.insert(s.to_string());
                }
                (vocab::RDF_TYPE, Some(vocab::OWL_DATATYPE_PROPERTY)) => {
                    m.declare_property(s, PropertyKind::Data);
                }
                (vocab::RDF_TYPE, Some(vocab::OWL_OBJECT_PROPERTY)) => {
                    m.declare_property(s, PropertyKind::Object);
                }
                (vocab::RDF_TYPE, Some(vocab::RDF_PROPERTY)) => {
                    m.declare_property(s, PropertyKind::Untyped);
                }
                (vocab::RDFS_SUBCLASS_OF, Some(sup)) => {
                    m.classes.insert(s.to_string());
                    m.classes.insert(sup.to_string());
                    if s != sup {
                        m.subclass_axioms.insert((s.to_string(), sup.to_string()));
                    }
                }
                (vocab::RDFS_SUBPROPERTY_OF, Some(sup)) => {
                    m.declare_property(s, PropertyKind::Untyped);
                    m.declare_property(sup, PropertyKind::Untyped);
                    if s != sup {
                        m.subproperty_axioms.insert((s.to_string(), sup.to_string()));
                    }
                }
                (vocab::RDFS_RANGE, Some(range)) if range.starts_with(vocab::XSD) => {
                    m.datatype_range.insert(s.to_string(), range.to_string());
                }
                _ => {}
            }
        }
        check_acyclic("subclass", &m.subclass_axioms)?;
        check_acyclic("subproperty", &m.subproperty_axioms)?;
        m.class_down = closure(&m.classes, &m.subclass_axioms, true);
        m.class_up = closure(&m.classes, &m.subclass_axioms, false);
        let props: BTreeSet<String> = m.properties.keys().cloned().collect();
        m.prop_down = closure(&props, &m.subproperty_axioms, true);
        m.prop_up = closure(&props, &m.subproperty_axioms, false);
        Ok(m)
    }

    fn declare_property(&mut self, iri: &str, kind: PropertyKind) {
        let entry = self.properties.entry(iri.to_string()).or_insert(kind);
        if *entry == PropertyKind::Untyped {
            *entry = kind;
        }
    }

    pub fn classes(&self) -> &BTreeSet<String> {
        &self.classes
    }

    pub fn properties(&self) -> &BTreeMap<String, PropertyKind> {
        &self.properties
    }

    pub fn subclass_axioms(&self) -> &BTreeSet<(String, String)> {
        &self.subclass_axioms
    }

    pub fn subproperty_axioms(&self) -> &BTreeSet<(String, String)> {
        &self.subproperty_axioms
    }

    pub fn datatype_range(&self, property: &str) -> Option<&str> {
        self.datatype_range.get(property).map(String::as_str)
    }

    /// Reflexive-transitive closure below `class`; unknown IRIs map to themselves.
    pub fn subclasses_of(&self, class: &str) -> BTreeSet<String> {
        lookup(&self.class_down, class)
    }

    /// Reflexive-transitive closure above `class`.
    pub fn superclasses_of(&self, class: &str) -> BTreeSet<String> {
        lookup(&self.class_up, class)
    }

    pub fn subproperties_of(&self, property: &str) -> BTreeSet<String> {
        lookup(&self.prop_down, property)
    }

    pub fn superproperties_of(&self, property: &str) -> BTreeSet<String> {
        lookup(&self.prop_up, property)
    }

    /// Model with every subclass/subproperty axiom dropped; classes and
    /// properties stay declared.
    pub fn without_hierarchy(&self) -> OntologyModel {
        let mut m = self.clone();
        m.subclass_axioms.clear();
        m.subproperty_axioms.clear();
        m.class_down = closure(&m.classes, &m.subclass_axioms, true);
        m.class_up = m.class_down.clone();
        let props: BTreeSet<String> = m.properties.keys().cloned().collect();
        m.prop_down = closure(&props, &m.subproperty_axioms, true);
        m.prop_up = m.prop_down.clone();
        m
    }
}

fn lookup(map: &BTreeMap<String, BTreeSet<String>>, key: &str) -> BTreeSet<String> {
    map.get(key)
        .cloned()
        .unwrap_or_else(|| BTreeSet::from([key.to_string()]))
}

/// For each node, the set reachable by following edges (sub -> super when
/// `downward` is false, super -> sub when true), including the node itself.
fn closure(
    nodes: &BTreeSet<String>,
    edges: &BTreeSet<(String, String)>,
    downward: bool,
) -> BTreeMap<String, BTreeSet<String>> {
    let mut adj: BTreeMap<&str, Vec<&str>> = BTreeMap::new();
    for (sub, sup) in edges {
        let (from, to) = if downward { (sup, sub) } else { (sub, sup) };
        adj.entry(from.as_str()).or_default().push(to.as_str());
    }
    nodes
        .iter()
        .map(|n| {
            let mut seen = BTreeSet::from([n.clone()]);
            let mut stack = vec![n.as_str()];
            while let Some(cur) = stack.pop() {
                for next in adj.get(cur).into_iter().flatten() {
                    if seen.insert((*next).to_string()) {
                        stack.push(next);
                    }
                }
            }
            (n.clone(), seen)
        })
        .collect()
}

fn check_acyclic(
    kind: &'static str,
    edges: &BTreeSet<(String, String)>,
) -> Result<(), OntologyError> {
    let mut adj: BTreeMap<&str, Vec<&str>> = BTreeMap::new();
    for (sub, sup) in edges {
        adj.entry(sub.as_str()).or_default().push(sup.as_str());
    }
    #[derive(Clone, Copy, PartialEq)]
    enum Mark {
        Active,
        Done,
    }
    let mut marks: BTreeMap<&str, Mark> = BTreeMap::new();

    fn visit<'a>(
        node: &'a str,
        adj: &BTreeMap<&'a str, Vec<&'a str>>,
        marks: &mut BTreeMap<&'a str, Mark>,
        path: &mut Vec<&'a str>,
    ) -> Option<Vec<String>> {
        match marks.get(node) {
            Some(Mark::Done) => return None,
            Some(Mark::Active) => {
                let start = path.iter().position(|n| *n == node).unwrap_or(0);
                let mut cycle: Vec<String> = path[start..].iter().map(|s| s.to_string()).collect();
                cycle.push(node.to_string());
                return Some(cycle);
            }
            None => {}
        }
        marks.insert(node, Mark::Active);
        path.push(node);
        for next in adj.get(node).into_iter().flatten() {
            if let Some(c) = visit(next, adj, marks, path) {
                return Some(c);
            }
        }
        path.pop();
        marks.insert(node, Mark::Done);
        None
    }

    let starts: Vec<&str> = adj.keys().copied().collect();
    for start in starts {
        let mut path = Vec::new();
        if let Some(path) = visit(start, &adj, &mut marks, &mut path) {
            return Err(OntologyError::Cycle { kind, path });
        }
    }
    Ok(())
}

/// Convenience for IRIs in the hub vocabulary.
pub fn bt(local: &str) -> String {
    format!("{}{local}", vocab::BT_HYPERCAT)
}

impl OntologyModel {
    /// Triples describing the model, suitable for re-loading.
    pub fn to_triples(&self) -> BTreeSet<RdfTriple> {
        let mut out = BTreeSet::new();
        for c in &self.classes {
            out.insert(RdfTriple::new(RdfTerm::iri(c), vocab::RDF_TYPE, RdfTerm::iri(vocab::OWL_CLASS)));
        }
        for (p, kind) in &self.properties {
            let ty = match kind {
                PropertyKind::Data => vocab::OWL_DATATYPE_PROPERTY,
                PropertyKind::Object => vocab::OWL_OBJECT_PROPERTY,
                PropertyKind::Untyped => vocab::RDF_PROPERTY,
            };
            out.insert(RdfTriple::new(RdfTerm::iri(p), vocab::RDF_TYPE, RdfTerm::iri(ty)));
        }
        for (sub, sup) in &self.subclass_axioms {
            out.insert(RdfTriple::new(RdfTerm::iri(sub), vocab::RDFS_SUBCLASS_OF, RdfTerm::iri(sup)));
        }
        for (sub, sup) in &self.subproperty_axioms {
            out.insert(RdfTriple::new(RdfTerm::iri(sub), vocab::RDFS_SUBPROPERTY_OF, RdfTerm::iri(sup)));
        }
        for (p, dt) in &self.datatype_range {
            out.insert(RdfTriple::new(RdfTerm::iri(p), vocab::RDFS_RANGE, RdfTerm::iri(dt)));
        }
        out
    }
}
