mod common;

use std::collections::BTreeSet;

use common::*;
use semhub_core::rdf::RdfTerm;
use semhub_core::sparql::{parse_query, serialize_query, GroupElement, Query};

const CORPUS: [&str; 5] = ["feeds", "datastreams", "busstop", "airport", "pollutant"];

/// Row ids of a fixture table, read straight from the fixture text.
fn fixture_keys(db: &str, table: &str, key_columns: usize) -> Vec<Vec<String>> {
    let text = read(&format!("fixtures/{db}.fixture"));
    let mut current = String::new();
    let mut out = Vec::new();
    for line in text.lines() {
        if let Some(name) = line.strip_prefix("table ") {
            current = name.trim().to_string();
        } else if let Some(row) = line.strip_prefix("row ") {
            if current == table {
                out.push(row.split('\t').take(key_columns).map(str::to_string).collect());
            }
        }
    }
    out
}

fn subjects(t: &semhub_core::eval::SolutionTable, var: &str) -> BTreeSet<String> {
    t.solutions
        .iter()
        .map(|s| s[var].as_iri().unwrap().to_string())
        .collect()
}

#[test]
fn corpus_parses_and_round_trips() {
    for name in CORPUS {
        let q = parse_query(&query_text(name)).unwrap_or_else(|e| panic!("{name}: {e}"));
        let again = parse_query(&serialize_query(&q)).unwrap();
        assert_eq!(again.body, q.body, "{name}");
        assert_eq!(again.projection, q.projection, "{name}");
        assert_eq!(again.distinct, q.distinct, "{name}");
    }
}

#[test]
fn bus_stop_query_shape() {
    let q = parse_query(&query_text("busstop")).unwrap();
    let blocks: Vec<&Vec<GroupElement>> = q
        .body
        .iter()
        .filter_map(|e| match e {
            GroupElement::Service(s) => Some(&s.body),
            _ => None,
        })
        .collect();
    let count = |b: &[GroupElement]| {
        let p = b.iter().filter(|e| matches!(e, GroupElement::Pattern(_))).count();
        (p, b.len() - p)
    };
    assert_eq!(blocks.len(), 2);
    assert_eq!(count(blocks[0]), (8, 0));
    assert_eq!(count(blocks[1]), (6, 4));
    assert_eq!(q.body.iter().filter(|e| matches!(e, GroupElement::Filter(_))).count(), 1);
}

#[test]
fn feed_query_returns_the_fixture_feeds() {
    let ctx = context(&["sensors"], true);
    let q = parse_query(&query_text("feeds")).unwrap();
    let expected: BTreeSet<String> = fixture_keys("sensors", "feed", 1)
        .into_iter()
        .map(|k| format!("http://api.bt-hypercat.com/sensors/feeds/{}", k[0]))
        .collect();
    assert_eq!(expected.len(), 2);
    assert_eq!(subjects(&ctx.evaluate(&q).unwrap(), "s"), expected);

    let plans = ctx.translate(&q).unwrap();
    assert_eq!(plans.len(), 1);
    let ids: Vec<&str> = plans[0].queries.iter().map(|(_, id, _)| id.as_str()).collect();
    assert_eq!(ids, vec!["mapping:SensorFeed"]);
    assert_eq!(plans[0].queries[0].2, "SELECT feed.id FROM feed");
}

#[test]
fn datastream_query_uses_the_subclass_axioms() {
    let q = parse_query(&query_text("datastreams")).unwrap();
    let mut expected = BTreeSet::new();
    for db in ["sensors", "events"] {
        for k in fixture_keys(db, "datastream", 2) {
            expected.insert(format!("http://api.bt-hypercat.com/{db}/feeds/{}/datastreams/{}", k[0], k[1]));
        }
    }
    assert_eq!(expected.len(), 5);
    let both = context(&["sensors", "events"], true);
    assert_eq!(subjects(&both.evaluate(&q).unwrap(), "s"), expected);

    let ids: BTreeSet<String> = both.translate(&q).unwrap()[0]
        .queries
        .iter()
        .map(|(_, id, _)| id.clone())
        .collect();
    assert_eq!(ids, BTreeSet::from(["mapping:SensorStream".into(), "mapping:EventStream".into()]));

    let flat = context(&["sensors", "events"], false);
    assert!(flat.evaluate(&q).unwrap().is_empty());
}

#[test]
fn subclass_answers_are_included_in_superclass_answers() {
    let ctx = context(&["sensors", "events"], true);
    let ont = ontology();
    for (sub, sup) in asserted_axioms(SUBCLASS) {
        let ask = |c: &str| {
            let q = parse_query(&format!("SELECT ?s WHERE {{ ?s a <{c}> }}")).unwrap();
            subjects(&ctx.evaluate(&q).unwrap(), "s")
        };
        assert!(ask(&sub).is_subset(&ask(&sup)), "{sub} ⊑ {sup}");
        assert!(ont.superclasses_of(&sub).contains(&sup));
    }
}

fn patterns_of(q: &Query) -> Vec<GroupElement> {
    q.body.iter().filter(|e| matches!(e, GroupElement::Pattern(_))).cloned().collect()
}

#[test]
fn pattern_order_does_not_change_answers() {
    let ctx = context(&["sensors", "events"], true);
    let q = parse_query(&format!(
        "SELECT * WHERE {{ ?f <{HC}hasSensorStream> ?d . ?d <{HC}datastream_tag> ?tag . \
         ?f <{HC}feed_title> ?title . ?d a <{HC}Datastream> }}"
    ))
    .unwrap();
    let base = table_set(&ctx.evaluate(&q).unwrap());
    assert!(!base.is_empty());
    let pats = patterns_of(&q);
    for rot in 1..pats.len() {
        let mut body = pats.clone();
        body.rotate_left(rot);
        body.swap(0, pats.len() - 1);
        let permuted = Query { body, ..q.clone() };
        assert_eq!(table_set(&ctx.evaluate(&permuted).unwrap()), base);
    }
}

#[test]
fn adding_a_filter_never_adds_solutions() {
    let ctx = context(&["sensors", "events"], true);
    let base = format!("?d <{HC}datastream_current_value> ?v . ?d <{HC}datastream_id> ?id");
    let plain = parse_query(&format!("SELECT * WHERE {{ {base} }}")).unwrap();
    let all = table_set(&ctx.evaluate(&plain).unwrap());
    for f in ["?v > 30", "?id = \"0\"", "regex(?id, \"^1\")", "!bound(?v)", "?v * 2 < ?v + 10", "?nope > 1"] {
        let q = parse_query(&format!("SELECT * WHERE {{ {base} FILTER ({f}) }}")).unwrap();
        let filtered = table_set(&ctx.evaluate(&q).unwrap());
        assert!(filtered.is_subset(&all), "{f}");
    }
}

#[test]
fn distinct_collapses_repeated_values() {
    let ctx = context(&["sensors", "events"], true);
    let q = |d: &str| parse_query(&format!("SELECT {d} ?x WHERE {{ ?f <{HC}feed_exposure> ?x }}")).unwrap();
    let all = ctx.evaluate(&q("")).unwrap();
    let distinct = ctx.evaluate(&q("DISTINCT")).unwrap();
    assert!(all.len() > distinct.len());
    let values: BTreeSet<&RdfTerm> = all.solutions.iter().map(|s| &s["x"]).collect();
    assert_eq!(values.len(), distinct.len());
}

#[test]
fn unknown_vocabulary_gives_empty_results() {
    let ctx = context(&["sensors"], true);
    for q in [
        "SELECT ?s WHERE { ?s a <http://example.org/Unknown> }",
        "SELECT ?s WHERE { ?s <http://example.org/unknown> ?o }",
    ] {
        assert!(ctx.evaluate(&parse_query(q).unwrap()).unwrap().is_empty());
    }
}
