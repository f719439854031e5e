//! Exit gates for the hub. Prints one PASS/FAIL line per criterion and
//! exits non-zero when any criterion fails.

#[path = "../../core/tests/common/mod.rs"]
mod common;
mod support;

use std::collections::BTreeSet;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::Instant;

use common::*;
use semhub_core::federation::{evaluate_federated, FederationPolicy};
use semhub_core::mappings::materialize_all;
use semhub_core::ntriples::{parse_ntriples, serialize_ntriples};
use semhub_core::rdf::{RdfTerm, RdfTriple};
use semhub_core::results::{format_results, parse_results, ResultFormat};
use semhub_core::sparql::parse_query;
use support::*;

type Outcome = Result<String, String>;

macro_rules! ensure {
    ($cond:expr, $($msg:tt)+) => {
        if !$cond {
            return Err(format!($($msg)+));
        }
    };
}

/// Rows of a fixture table as raw cells, read straight from the file.
fn fixture_rows(db: &str, table: &str) -> Vec<Vec<String>> {
    let mut current = String::new();
    let mut out = Vec::new();
    for line in read(&format!("fixtures/{db}.fixture")).lines() {
        if let Some(name) = line.strip_prefix("table ") {
            current = name.trim().to_string();
        } else if let Some(row) = line.strip_prefix("row ") {
            if current == table {
                out.push(row.split('\t').map(str::to_string).collect());
            }
        }
    }
    out
}

fn feed_iris(db: &str) -> BTreeSet<String> {
    fixture_rows(db, "feed")
        .iter()
        .map(|r| format!("http://api.bt-hypercat.com/{db}/feeds/{}", r[0]))
        .collect()
}

fn datastream_iris(db: &str) -> BTreeSet<String> {
    fixture_rows(db, "datastream")
        .iter()
        .map(|r| format!("http://api.bt-hypercat.com/{db}/feeds/{}/datastreams/{}", r[0], r[1]))
        .collect()
}

fn iri_column(body: &str, var: &str) -> BTreeSet<String> {
    parse_results(ResultFormat::Json, body)
        .unwrap()
        .solutions
        .iter()
        .filter_map(|s| s.get(var).and_then(RdfTerm::as_iri).map(str::to_string))
        .collect()
}

fn appendix_fidelity() -> Outcome {
    let mut shipped = BTreeSet::new();
    for db in ["sensors", "events"] {
        shipped.extend(registry(db).mappings().iter().map(|m| m.id.clone()));
    }
    for id in APPENDIX_MAPPINGS {
        ensure!(shipped.contains(&format!("mapping:{id}")), "mapping:{id} is not shipped");
    }
    let mut detail = Vec::new();
    for db in ["sensors", "events"] {
        let started = Instant::now();
        let triples = materialize_all(&registry(db), &database(db)).map_err(|e| e.to_string())?;
        let elapsed = started.elapsed();
        let mut ours: Vec<String> = serialize_ntriples(&triples).lines().map(str::to_string).collect();
        let mut golden: Vec<String> = read(&format!("golden/{db}.nt")).lines().map(str::to_string).collect();
        ours.sort();
        golden.sort();
        ensure!(ours == golden, "{db}: materialization differs from the golden file");
        ensure!(elapsed.as_secs_f64() < 1.0, "{db}: took {elapsed:?}");
        detail.push(format!("{db} {} triples in {elapsed:.1?}", ours.len()));
    }
    Ok(format!("{} mappings present; {}", APPENDIX_MAPPINGS.len(), detail.join(", ")))
}

fn feed_worked_example(base: &str) -> Outcome {
    let r = get(&format!("{base}/sparql/sensors"), &[("query", &query_text("feeds")), ("format", "json")]);
    ensure!(r.status == 200, "status {}: {}", r.status, r.body);
    let expected = feed_iris("sensors");
    let got = iri_column(&r.body, "s");
    ensure!(got == expected, "got {got:?}, expected {expected:?}");
    let plans = demo_hub()
        .translate(Some("sensors"), &query_text("feeds"))
        .map_err(|e| e.to_string())?;
    let ids: Vec<&str> = plans[0].queries.iter().map(|(_, id, _)| id.as_str()).collect();
    ensure!(ids == ["mapping:SensorFeed"], "matched {ids:?}");
    Ok(format!("{} feeds via mapping:SensorFeed", got.len()))
}

fn datastream_reasoning(base: &str) -> Outcome {
    let text = query_text("datastreams");
    let r = get(&format!("{base}/sparql/federated"), &[("query", &text), ("format", "json")]);
    ensure!(r.status == 200, "status {}: {}", r.status, r.body);
    let mut expected = datastream_iris("sensors");
    expected.extend(datastream_iris("events"));
    let got = iri_column(&r.body, "s");
    ensure!(got == expected, "got {got:?}, expected {expected:?}");
    let flat = context(&["sensors", "events"], false)
        .evaluate(&parse_query(&text).unwrap())
        .map_err(|e| e.to_string())?;
    ensure!(flat.is_empty(), "{} answers without subclass axioms", flat.len());
    Ok(format!("{} datastreams with axioms, 0 without", got.len()))
}

fn oracle_equivalence() -> Outcome {
    let started = Instant::now();
    let everything = virtual_graph(&["sensors", "events"], true);
    let mut corpus = hand_written_queries();
    corpus.extend(random_queries(&everything, 40, 7));
    ensure!(corpus.len() >= 20, "corpus has {} queries", corpus.len());
    let sets: [&[&str]; 4] = [&["sensors"], &["events"], &["empty"], &["sensors", "events"]];
    let mut checks = 0;
    for dbs in sets {
        let ctx = context(dbs, true);
        let graph = virtual_graph(dbs, true);
        for text in &corpus {
            let q = parse_query(text).map_err(|e| format!("{text}: {e}"))?;
            let got = table_multiset(&ctx.evaluate(&q).map_err(|e| format!("{text}: {e}"))?);
            ensure!(got == oracle_select(&graph, &q), "{dbs:?}: {text}");
            checks += 1;
        }
    }
    let elapsed = started.elapsed();
    ensure!(elapsed.as_secs_f64() < 10.0, "took {elapsed:?}");
    Ok(format!("{} queries, {checks} comparisons in {elapsed:.1?}", corpus.len()))
}

fn federated_queries() -> Outcome {
    let started = Instant::now();
    let hub = demo_hub();
    let endpoints = oracle_endpoints();
    let mut sizes = Vec::new();
    for name in ["busstop", "airport", "pollutant"] {
        let q = parse_query(&query_text(name)).map_err(|e| format!("{name}: {e}"))?;
        let expected = federated_oracle(&q, &endpoints, BT_ENDPOINT);
        ensure!(!expected.is_empty(), "{name}: empty oracle");
        for bind_join in [true, false] {
            let policy = FederationPolicy {
                bind_join,
                ..Default::default()
            };
            let got = evaluate_federated(&q, hub.endpoints(), &policy).map_err(|e| format!("{name}: {e}"))?;
            ensure!(table_set(&got) == expected, "{name} (bind_join={bind_join}) differs from the oracle");
        }
        sizes.push(format!("{name} {}", expected.len()));
    }
    let run = |name: &str| hub.evaluate("federated", &parse_query(&query_text(name)).unwrap()).unwrap();
    let stops: BTreeSet<String> = run("busstop").solutions.iter().map(|s| local(&s["d"])).collect();
    ensure!(stops == BTreeSet::from(["dp1".into(), "dp2".into(), "dp6".into()]), "0.1 box gave {stops:?}");
    let airport = run("airport");
    let per_event = |e: &str| airport.solutions.iter().filter(|s| local(&s["e"]) == e).count();
    ensure!(per_event("e1") == 3 && per_event("e3") == 2 && airport.len() == 5, "0.5 box gave {airport:?}");
    let years: BTreeSet<String> = run("pollutant").solutions.iter().map(|s| local(&s["e"])).collect();
    ensure!(years == BTreeSet::from(["e1".into(), "e4".into()]), "year comparison gave {years:?}");
    let elapsed = started.elapsed();
    ensure!(elapsed.as_secs_f64() < 5.0, "took {elapsed:?}");
    Ok(format!("{} in {elapsed:.1?}", sizes.join(", ")))
}

fn formats(base: &str) -> Outcome {
    let hub = demo_hub();
    let mut corpus: Vec<(String, &str)> = hand_written_queries().into_iter().map(|q| (q, FEDERATED_OR_COMBINED)).collect();
    for name in ["busstop", "airport", "pollutant"] {
        corpus.push((query_text(name), "federated"));
    }
    for (text, route) in &corpus {
        let q = parse_query(text).unwrap();
        let table = hub.evaluate(route, &q).map_err(|e| format!("{text}: {e}"))?;
        for f in [ResultFormat::Json, ResultFormat::Xml] {
            let back = parse_results(f, &format_results(&table, f)).map_err(|e| format!("{f}: {e}"))?;
            ensure!(back.to_set() == table.to_set(), "{f} round trip changed {text}");
        }
        let vars = q.result_variables();
        let csv = format_results(&table, ResultFormat::Csv);
        ensure!(csv.split("\r\n").next() == Some(vars.join(",").as_str()), "CSV header of {text}");
        let tsv = format_results(&table, ResultFormat::Tsv);
        let tsv_header: Vec<String> = vars.iter().map(|v| format!("?{v}")).collect();
        ensure!(tsv.lines().next() == Some(tsv_header.join("\t").as_str()), "TSV header of {text}");
    }
    for f in ResultFormat::ALL {
        let r = get(&format!("{base}/sparql/sensors"), &[("query", &query_text("feeds")), ("format", f.name())]);
        ensure!(r.status == 200 && r.content_type == f.media_type(), "{f} served as {}", r.content_type);
    }
    Ok(format!("{} queries, 5 media types", corpus.len()))
}

/// Route for SERVICE-free corpus queries: the federated endpoint hands
/// them to the hub's combined store.
const FEDERATED_OR_COMBINED: &str = "federated";

fn protocol(base: &str) -> Outcome {
    let url = format!("{base}/sparql/sensors");
    let text = query_text("feeds");
    let g = get(&url, &[("query", &text), ("format", "json")]);
    let p = post_query(&url, &text, "json");
    let f = post_form(&url, &[("query", &text), ("format", "json")]);
    ensure!([g.status, p.status, f.status] == [200; 3], "GET/POST statuses {} {} {}", g.status, p.status, f.status);
    ensure!(
        iri_column(&g.body, "s") == iri_column(&p.body, "s") && iri_column(&g.body, "s") == iri_column(&f.body, "s"),
        "GET and POST answers differ"
    );
    let bad = get(&url, &[("query", "SELECT ?s WHERE { ?s ?p }")]);
    ensure!(bad.status == 400, "malformed query gave {}", bad.status);
    ensure!(bad.body.contains("line 1, column"), "no position in {:?}", bad.body);
    let missing = get(&format!("{base}/sparql/nope"), &[("query", &text)]);
    ensure!(missing.status == 404, "unknown database gave {}", missing.status);
    Ok(format!("400 says {:?}", bad.body.trim()))
}

fn catalogue(base: &str) -> Outcome {
    let cat = get(&format!("{base}/cat"), &[]);
    ensure!(cat.status == 200, "/cat status {}", cat.status);
    let doc: serde_json::Value = serde_json::from_str(&cat.body).map_err(|e| e.to_string())?;
    let items = doc["items"].as_array().ok_or("no items array")?;
    let expected: usize = ["sensors", "events"]
        .iter()
        .map(|db| fixture_rows(db, "feed").len() + fixture_rows(db, "datastream").len())
        .sum();
    ensure!(items.len() == expected, "{} items, fixtures hold {expected}", items.len());
    ensure!(items.iter().all(|i| i["href"].is_string()), "item without href");

    let rdf = get(&format!("{base}/cat-rdf"), &[]);
    let triples = parse_ntriples(&rdf.body).map_err(|e| format!("/cat-rdf: {e}"))?;
    for (db, mapping) in [("sensors", "mapping:SensorFeed"), ("events", "mapping:EventFeed")] {
        let reg = registry(db);
        let class = reg.get(mapping).and_then(|m| m.target.constant_class()).ok_or("no feed class mapping")?;
        for feed in feed_iris(db) {
            let typed = RdfTriple::new(RdfTerm::iri(&feed), RDF_TYPE, RdfTerm::iri(class));
            ensure!(triples.contains(&typed), "{feed} is not typed {class}");
        }
    }
    Ok(format!("{} items, {} triples", items.len(), triples.len()))
}

fn main() {
    let base = spawn(demo_hub());
    let criteria: Vec<(&str, Box<dyn Fn() -> Outcome>)> = vec![
        ("appendix fidelity", Box::new(appendix_fidelity)),
        ("feed worked example", Box::new(|| feed_worked_example(&base))),
        ("datastream reasoning", Box::new(|| datastream_reasoning(&base))),
        ("oracle equivalence", Box::new(oracle_equivalence)),
        ("federated queries", Box::new(federated_queries)),
        ("result formats", Box::new(|| formats(&base))),
        ("protocol", Box::new(|| protocol(&base))),
        ("catalogue", Box::new(|| catalogue(&base))),
    ];
    let mut failed = 0;
    for (name, check) in &criteria {
        let outcome = catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|panic| {
            let message = panic
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| panic.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            Err(format!("panicked: {message}"))
        });
        match outcome {
            Ok(detail) => println!("PASS {name}: {detail}"),
            Err(reason) => {
                failed += 1;
                println!("FAIL {name}: {reason}");
            }
        }
    }
    println!("{} of {} acceptance criteria passed", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
