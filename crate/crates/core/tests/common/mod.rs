//! Test fixtures and brute-force oracles. Nothing here calls the rewriter,
//! the ontology closure or the join code under test: virtual graphs are
//! materialized and entailed by naive fixpoints, and patterns are matched
//! by nested loops.
#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::path::PathBuf;
use std::sync::Arc;

use semhub_core::eval::{filter_passes, Graph, ListFact, Solution};
use semhub_core::federation::{EndpointRegistry, SparqlEndpoint};
use semhub_core::mappings::{materialize_all, parse_mapping_document, MappingRegistry};
use semhub_core::ntriples::parse_ntriples;
use semhub_core::ontology::{load_ontology, OntologyModel};
use semhub_core::rdf::{RdfTerm, RdfTriple};
use semhub_core::relstore::Database;
use semhub_core::rewriter::{RewriteContext, Source};
use semhub_core::sparql::{Expr, GroupElement, Projection, Query, Term, TriplePattern};

pub const RDF_TYPE: &str = "http://www.w3.org/1999/02/22-rdf-syntax-ns#type";
pub const SUBCLASS: &str = "http://www.w3.org/2000/01/rdf-schema#subClassOf";
pub const SUBPROPERTY: &str = "http://www.w3.org/2000/01/rdf-schema#subPropertyOf";
pub const HC: &str = "http://portal.bt-hypercat.com/ontologies/bt-hypercat#";
pub const BT_ENDPOINT: &str = "http://portal.bt-hypercat.com/BT-SPARQL-Endpoint/sparql";
pub const TSO: &str = "http://gov.tso.co.uk/transport/sparql";
pub const FACTFORGE: &str = "http://factforge.net/sparql";
pub const EEA: &str = "http://semantic.eea.europa.eu/sparql";

/// Reference list of feed and datastream mapping ids for the two stores.
pub const APPENDIX_MAPPINGS: [&str; 35] = [
    "SensorFeed",
    "EventFeed",
    "feed_id",
    "feed_creator",
    "feed_updated",
    "feed_title",
    "feed_url",
    "feed_status",
    "feed_private",
    "feed_description",
    "feed_icon",
    "feed_website",
    "feed_email",
    "feed_tag",
    "feed_location_name",
    "feed_exposure",
    "feed_domain",
    "feed_disposition",
    "feed_lat",
    "feed_lon",
    "feed_ele",
    "feed_the_geom",
    "hasSensorStream",
    "hasEventStream",
    "SensorStream",
    "EventStream",
    "datastream_id",
    "datastream_tag",
    "datastream_current_time",
    "datastream_current_value",
    "datastream_max_value",
    "datastream_min_value",
    "datastream_unit_symbol",
    "datastream_unit_type",
    "datastream_unit_text",
];

pub const DATABASES: [&str; 3] = ["sensors", "events", "empty"];

pub fn data_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../data")
}

pub fn read(rel: &str) -> String {
    let path = data_dir().join(rel);
    std::fs::read_to_string(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()))
}

pub fn ontology() -> OntologyModel {
    load_ontology(&read("bt-hypercat.nt")).unwrap()
}

pub fn registry(db: &str) -> MappingRegistry {
    match db {
        // the empty fixture reuses the sensors mappings
        "empty" => parse_mapping_document(&read("mappings/sensors.map")).unwrap(),
        name => parse_mapping_document(&read(&format!("mappings/{name}.map"))).unwrap(),
    }
}

pub fn database(db: &str) -> Database {
    Database::from_fixture(&read(&format!("fixtures/{db}.fixture"))).unwrap()
}

pub fn context(dbs: &[&str], hierarchy: bool) -> RewriteContext {
    let mut ont = ontology();
    if !hierarchy {
        ont = ont.without_hierarchy();
    }
    let sources = dbs
        .iter()
        .map(|name| Source {
            name: name.to_string(),
            registry: Arc::new(registry(name)),
            db: Arc::new(database(name)),
        })
        .collect();
    RewriteContext::new(Arc::new(ont), sources)
}

pub fn query_text(name: &str) -> String {
    read(&format!("queries/{name}.rq"))
}

/// (sub, super) pairs asserted in the ontology document.
pub fn asserted_axioms(predicate: &str) -> Vec<(String, String)> {
    parse_ntriples(&read("bt-hypercat.nt"))
        .unwrap()
        .into_iter()
        .filter(|t| t.predicate == predicate)
        .filter_map(|t| Some((t.subject.as_iri()?.to_string(), t.object.as_iri()?.to_string())))
        .collect()
}

/// Applies the subclass and subproperty rules until nothing changes.
pub fn entail(mut triples: BTreeSet<RdfTriple>, subclass: &[(String, String)], subproperty: &[(String, String)]) -> BTreeSet<RdfTriple> {
    loop {
        let mut added = Vec::new();
        for t in &triples {
            if t.predicate == RDF_TYPE {
                for (sub, sup) in subclass {
                    if t.object.as_iri() == Some(sub.as_str()) {
                        added.push(RdfTriple::new(t.subject.clone(), RDF_TYPE, RdfTerm::iri(sup.as_str())));
                    }
                }
            }
            for (sub, sup) in subproperty {
                if &t.predicate == sub {
                    added.push(RdfTriple::new(t.subject.clone(), sup.as_str(), t.object.clone()));
                }
            }
        }
        let before = triples.len();
        triples.extend(added);
        if triples.len() == before {
            return triples;
        }
    }
}

/// Materialized and entailed graph of the given databases.
pub fn virtual_graph(dbs: &[&str], hierarchy: bool) -> BTreeSet<RdfTriple> {
    let mut triples = BTreeSet::new();
    for db in dbs {
        triples.extend(materialize_all(&registry(db), &database(db)).unwrap());
    }
    if !hierarchy {
        return triples;
    }
    entail(triples, &asserted_axioms(SUBCLASS), &asserted_axioms(SUBPROPERTY))
}

fn bind(p: &Term, v: &RdfTerm, s: &mut Solution) -> bool {
    match p {
        Term::Var(name) => match s.get(name) {
            Some(prev) => prev == v,
            None => {
                s.insert(name.clone(), v.clone());
                true
            }
        },
        Term::Iri(i) => v.as_iri() == Some(i.as_str()),
        Term::Literal(l) => v.as_literal() == Some(l),
        Term::List(_) => false,
    }
}

/// Nested-loop evaluation of a BGP: extends every partial solution with
/// every triple (or list fact) matching the next pattern.
pub fn naive_bgp(triples: &BTreeSet<RdfTriple>, lists: &[ListFact], patterns: &[&TriplePattern]) -> Vec<Solution> {
    let mut partial = vec![Solution::new()];
    for p in patterns {
        let mut next = Vec::new();
        for s in &partial {
            if let Term::List(items) = &p.object {
                for f in lists {
                    let mut s2 = s.clone();
                    if f.items.len() == items.len()
                        && bind(&p.subject, &f.subject, &mut s2)
                        && bind(&p.predicate, &RdfTerm::iri(f.predicate.as_str()), &mut s2)
                        && items.iter().zip(&f.items).all(|(i, v)| bind(i, v, &mut s2))
                    {
                        next.push(s2);
                    }
                }
                continue;
            }
            for t in triples {
                let mut s2 = s.clone();
                if bind(&p.subject, &t.subject, &mut s2)
                    && bind(&p.predicate, &RdfTerm::iri(t.predicate.as_str()), &mut s2)
                    && bind(&p.object, &t.object, &mut s2)
                {
                    next.push(s2);
                }
            }
        }
        partial = next;
    }
    partial
}

pub type Key = Vec<(String, RdfTerm)>;

/// Result variables of a query, computed without the library helpers.
pub fn result_vars(q: &Query) -> Vec<String> {
    match &q.projection {
        Projection::Vars(v) => v.clone(),
        Projection::All => {
            let mut out: Vec<String> = Vec::new();
            fn walk(body: &[GroupElement], out: &mut Vec<String>) {
                for el in body {
                    match el {
                        GroupElement::Pattern(p) => {
                            for t in [&p.subject, &p.predicate, &p.object] {
                                let mut stack = vec![t];
                                while let Some(t) = stack.pop() {
                                    match t {
                                        Term::Var(v) if !out.contains(v) => out.push(v.clone()),
                                        Term::List(items) => stack.extend(items.iter().rev()),
                                        _ => {}
                                    }
                                }
                            }
                        }
                        GroupElement::Service(s) => walk(&s.body, out),
                        GroupElement::Filter(_) => {}
                    }
                }
            }
            walk(&q.body, &mut out);
            out
        }
    }
}

fn finish(solutions: Vec<Solution>, q: &Query) -> BTreeMap<Key, usize> {
    let vars = result_vars(q);
    let mut out = BTreeMap::new();
    for s in solutions {
        let mut key: Key = vars
            .iter()
            .filter_map(|v| s.get(v).map(|t| (v.clone(), t.canonical())))
            .collect();
        key.sort();
        *out.entry(key).or_insert(0) += 1;
    }
    if q.distinct {
        out.values_mut().for_each(|n| *n = 1);
    }
    out
}

/// Materialize-then-evaluate answer of a SERVICE-free query, as a
/// multiset of canonicalized projected solutions.
pub fn oracle_select(triples: &BTreeSet<RdfTriple>, q: &Query) -> BTreeMap<Key, usize> {
    let patterns: Vec<&TriplePattern> = q
        .body
        .iter()
        .filter_map(|e| match e {
            GroupElement::Pattern(p) => Some(p),
            _ => None,
        })
        .collect();
    let filters: Vec<&Expr> = q
        .body
        .iter()
        .filter_map(|e| match e {
            GroupElement::Filter(f) => Some(f),
            _ => None,
        })
        .collect();
    let solutions = naive_bgp(triples, &[], &patterns)
        .into_iter()
        .filter(|s| filters.iter().all(|f| filter_passes(f, s)))
        .collect();
    finish(solutions, q)
}

/// Data behind one endpoint, for the federated oracle.
pub struct EndpointData {
    pub triples: BTreeSet<RdfTriple>,
    pub lists: Vec<ListFact>,
}

pub fn mock_graph(file: &str) -> Graph {
    Graph::parse(&read(&format!("mock/{file}"))).unwrap()
}

pub fn mock_files() -> [(&'static str, &'static str); 3] {
    [(TSO, "tso.nt"), (FACTFORGE, "factforge.nt"), (EEA, "eea.nt")]
}

pub fn oracle_endpoints() -> HashMap<String, EndpointData> {
    let mut out = HashMap::new();
    for (iri, file) in mock_files() {
        let g = mock_graph(file);
        out.insert(
            iri.to_string(),
            EndpointData {
                triples: g.triples().clone(),
                lists: g.lists().to_vec(),
            },
        );
    }
    out.insert(
        BT_ENDPOINT.to_string(),
        EndpointData {
            triples: virtual_graph(&["sensors", "events"], true),
            lists: Vec::new(),
        },
    );
    out
}

/// Registry with the three mock LOD endpoints and the combined hub
/// context as default.
pub fn mock_registry() -> EndpointRegistry {
    let mut reg = EndpointRegistry::new();
    for (iri, file) in mock_files() {
        reg.register(iri, Arc::new(mock_graph(file)) as Arc<dyn SparqlEndpoint>).unwrap();
    }
    reg.register(BT_ENDPOINT, Arc::new(context(&["sensors", "events"], true)) as Arc<dyn SparqlEndpoint>)
        .unwrap();
    reg.set_default(BT_ENDPOINT);
    reg
}

/// Cross product of every group's unfiltered answers, then every filter
/// of the query (inside blocks and at top level), then projection.
pub fn federated_oracle(q: &Query, endpoints: &HashMap<String, EndpointData>, default: &str) -> BTreeSet<Key> {
    let mut groups: Vec<(String, Vec<&TriplePattern>)> = Vec::new();
    let mut filters: Vec<&Expr> = Vec::new();
    let mut bare: Vec<&TriplePattern> = Vec::new();
    for el in &q.body {
        match el {
            GroupElement::Pattern(p) => bare.push(p),
            GroupElement::Filter(f) => filters.push(f),
            GroupElement::Service(s) => {
                let mut pats = Vec::new();
                for inner in &s.body {
                    match inner {
                        GroupElement::Pattern(p) => pats.push(p),
                        GroupElement::Filter(f) => filters.push(f),
                        GroupElement::Service(_) => unreachable!(),
                    }
                }
                groups.push((s.endpoint.clone(), pats));
            }
        }
    }
    if !bare.is_empty() {
        groups.push((default.to_string(), bare));
    }
    let mut acc = vec![Solution::new()];
    for (iri, pats) in groups {
        let data = &endpoints[&iri];
        let answers = naive_bgp(&data.triples, &data.lists, &pats);
        let mut next = Vec::new();
        for a in &acc {
            for b in &answers {
                if b.iter().all(|(k, v)| a.get(k).is_none_or(|w| w == v)) {
                    let mut m = a.clone();
                    m.extend(b.iter().map(|(k, v)| (k.clone(), v.clone())));
                    next.push(m);
                }
            }
        }
        acc = next;
    }
    let kept = acc
        .into_iter()
        .filter(|s| filters.iter().all(|f| filter_passes(f, s)))
        .collect();
    finish(kept, q).into_keys().collect()
}

/// Multiset view of a result table, comparable with the oracles.
pub fn table_multiset(t: &semhub_core::eval::SolutionTable) -> BTreeMap<Key, usize> {
    let mut out = BTreeMap::new();
    for s in &t.solutions {
        let key: Key = s.iter().map(|(k, v)| (k.clone(), v.canonical())).collect();
        *out.entry(key).or_insert(0) += 1;
    }
    out
}

pub fn table_set(t: &semhub_core::eval::SolutionTable) -> BTreeSet<Key> {
    table_multiset(t).into_keys().collect()
}

/// Local part of an IRI-valued binding, e.g. `dp1` for `.../datapoints/dp1`.
pub fn local(t: &RdfTerm) -> String {
    let iri = t.as_iri().expect("IRI binding");
    iri.rsplit(['/', '#']).next().unwrap().to_string()
}

/// Hand-written queries exercising joins, constants, filters and the
/// class hierarchy.
pub fn hand_written_queries() -> Vec<String> {
    let mut out: Vec<String> = ["feeds", "datastreams"].iter().map(|n| query_text(n)).collect();
    let h = HC;
    out.extend([
        format!("SELECT ?f ?t WHERE {{ ?f a <{h}Feed> . ?f <{h}feed_title> ?t }}"),
        format!("SELECT DISTINCT ?c WHERE {{ ?x a ?c }}"),
        format!("SELECT ?i WHERE {{ ?i a <{h}Item> }}"),
        format!("SELECT ?f ?d ?v WHERE {{ ?f <{h}hasSensorStream> ?d . ?d <{h}datastream_current_value> ?v FILTER (?v > 30) }}"),
        format!("SELECT ?f WHERE {{ ?f <{h}feed_tag> \"weather\" }}"),
        format!("SELECT ?p ?o WHERE {{ <http://api.bt-hypercat.com/sensors/feeds/f2> ?p ?o }}"),
        format!("SELECT ?s WHERE {{ ?s <http://www.w3.org/2003/01/geo/wgs84_pos#lat> \"53.48\"^^<http://www.w3.org/2001/XMLSchema#double> }}"),
        format!("SELECT ?d ?t WHERE {{ ?d <{h}datastream_current_time> ?t FILTER (year(?t) = 2017) }}"),
        format!("SELECT ?e ?s WHERE {{ ?e <{h}event_sent> ?s FILTER (?s < \"2015-01-01T00:00:00Z\"^^<http://www.w3.org/2001/XMLSchema#dateTime>) }}"),
        format!("SELECT ?f ?u WHERE {{ ?f <{h}feed_private> true . ?f <{h}feed_url> ?u }}"),
        format!("SELECT DISTINCT ?tag WHERE {{ ?d a <{h}SensorStream> . ?d <{h}datastream_tag> ?tag FILTER (regex(?tag, \"AIR\", \"i\")) }}"),
        format!("SELECT * WHERE {{ ?f <{h}feed_ele> ?e . ?f <{h}feed_title> ?t }}"),
        format!("SELECT ?f ?t WHERE {{ ?f <{h}feed_title> ?t FILTER (!bound(?t) || str(?t) != \"\") }}"),
        format!("SELECT ?d WHERE {{ <http://api.bt-hypercat.com/events/feeds/ev1> <{h}hasEventStream> ?d . ?d a <{h}EventStream> }}"),
        format!("SELECT ?x WHERE {{ ?x <{h}datastream_unit_symbol> \"°C\" }}"),
        format!("SELECT ?d ?w ?e WHERE {{ ?d <{h}datapoint_western_longitude> ?w . ?d <{h}datapoint_eastern_longitude> ?e FILTER (?e - ?w < 0.05) }}"),
        format!("SELECT ?s WHERE {{ ?s <{h}feed_id> \"f1\"^^<http://www.w3.org/2001/XMLSchema#integer> }}"),
        format!("SELECT ?s ?o WHERE {{ ?s <{h}feed_the_geom> ?o FILTER (regex(?o, \"^POINT\")) }}"),
    ]);
    out
}

/// Random BGP/FILTER queries over the vocabulary of `graph`.
pub fn random_queries(graph: &BTreeSet<RdfTriple>, count: usize, seed: u64) -> Vec<String> {
    use rand::seq::IndexedRandom;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let triples: Vec<&RdfTriple> = graph.iter().collect();
    let classes: Vec<String> = ontology().classes().iter().cloned().collect();
    let filters = [
        "?{v} > 0",
        "regex(str(?{v}), \"a\", \"i\")",
        "?{v} != <http://api.bt-hypercat.com/sensors/feeds/f1>",
        "bound(?{v})",
        "year(?{v}) >= 2016",
        "?{v} < \"53.5\"^^<http://www.w3.org/2001/XMLSchema#double>",
        "str(?{v}) = \"0\" || ?{v} = 64",
    ];
    let mut out = Vec::new();
    for _ in 0..count {
        let n = rng.random_range(1..=3);
        let mut body = Vec::new();
        let mut object_vars: Vec<String> = Vec::new();
        for i in 0..n {
            let obj_var = format!("o{i}");
            let anchor = *triples.choose(&mut rng).unwrap();
            let (predicate, object) = match rng.random_range(0..10) {
                0 => (format!("<{RDF_TYPE}>"), format!("<{}>", classes.choose(&mut rng).unwrap())),
                1 => (format!("<{RDF_TYPE}>"), format!("?{obj_var}")),
                2 => (format!("?p{i}"), format!("?{obj_var}")),
                _ => {
                    let object = match rng.random_range(0..10) {
                        0 | 1 => anchor.object.to_string(),
                        2 => "\"no such value\"".to_string(),
                        _ => format!("?{obj_var}"),
                    };
                    (format!("<{}>", anchor.predicate), object)
                }
            };
            let subject = if i > 0 && !object_vars.is_empty() && rng.random_bool(0.3) {
                format!("?{}", object_vars.choose(&mut rng).unwrap())
            } else if rng.random_bool(0.2) {
                anchor.subject.to_string()
            } else {
                "?s".to_string()
            };
            if object.starts_with('?') {
                object_vars.push(obj_var);
            }
            body.push(format!("{subject} {predicate} {object} ."));
        }
        if !object_vars.is_empty() && rng.random_bool(0.4) {
            let v = object_vars.choose(&mut rng).unwrap();
            let f = filters.choose(&mut rng).unwrap().replace("{v}", v);
            body.push(format!("FILTER ({f})"));
        }
        let distinct = if rng.random_bool(0.5) { "DISTINCT " } else { "" };
        out.push(format!("SELECT {distinct}* WHERE {{ {} }}", body.join(" ")));
    }
    out
}
