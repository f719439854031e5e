mod support;

use std::collections::BTreeSet;
use std::path::Path;
use std::sync::OnceLock;

use semhub::{Hub, HubConfig};
use semhub_core::ntriples::parse_ntriples;
use semhub_core::results::{parse_results, ResultFormat};
use semhub_core::sparql::parse_query;
use support::*;

const FEEDS: &str = "PREFIX hypercat: <http://portal.bt-hypercat.com/ontologies/bt-hypercat#>\n\
                     SELECT DISTINCT ?s WHERE { ?s a hypercat:Feed . }";

fn base() -> &'static str {
    static BASE: OnceLock<String> = OnceLock::new();
    BASE.get_or_init(|| spawn(demo_hub()))
}

fn sparql(route: &str) -> String {
    format!("{}/sparql/{route}", base())
}

fn iris(reply: &Reply) -> BTreeSet<String> {
    parse_results(ResultFormat::Json, &reply.body)
        .unwrap()
        .solutions
        .iter()
        .map(|s| s["s"].as_iri().unwrap().to_string())
        .collect()
}

#[test]
fn feed_query_over_get() {
    let r = get(&sparql("sensors"), &[("query", FEEDS), ("format", "json")]);
    assert_eq!(r.status, 200);
    assert_eq!(r.content_type, "application/sparql-results+json");
    assert_eq!(
        iris(&r),
        BTreeSet::from([
            "http://api.bt-hypercat.com/sensors/feeds/f1".to_string(),
            "http://api.bt-hypercat.com/sensors/feeds/f2".to_string(),
        ])
    );
}

#[test]
fn post_bodies_match_get() {
    let via_get = get(&sparql("sensors"), &[("query", FEEDS), ("format", "json")]);
    let raw = post_query(&sparql("sensors"), FEEDS, "json");
    let form = post_form(&sparql("sensors"), &[("query", FEEDS), ("format", "json")]);
    assert_eq!(raw.status, 200);
    assert_eq!(form.status, 200);
    assert_eq!(iris(&raw), iris(&via_get));
    assert_eq!(iris(&form), iris(&via_get));
}

#[test]
fn format_selection() {
    for f in ResultFormat::ALL {
        let by_param = get(&sparql("sensors"), &[("query", FEEDS), ("format", f.name())]);
        assert_eq!((by_param.status, by_param.content_type.as_str()), (200, f.media_type()));
        let by_accept = get_with_accept(&sparql("sensors"), FEEDS, f.media_type());
        assert_eq!(by_accept.content_type, f.media_type());
        assert_eq!(by_accept.body, by_param.body);
    }
    let prefers_csv = get_with_accept(&sparql("sensors"), FEEDS, "application/sparql-results+json;q=0.5, text/csv");
    assert_eq!(prefers_csv.content_type, "text/csv");
    let anything = get_with_accept(&sparql("sensors"), FEEDS, "*/*");
    assert_eq!(anything.content_type, "application/sparql-results+json");
}

#[test]
fn unknown_formats_are_refused() {
    assert_eq!(get(&sparql("sensors"), &[("query", FEEDS), ("format", "pdf")]).status, 415);
    assert_eq!(get_with_accept(&sparql("sensors"), FEEDS, "image/png").status, 406);
    let r = client()
        .post(sparql("sensors"))
        .header("content-type", "text/plain")
        .body(FEEDS)
        .send()
        .unwrap();
    assert_eq!(r.status().as_u16(), 415);
}

#[test]
fn client_errors() {
    assert_eq!(get(&sparql("sensors"), &[]).status, 400);
    let bad = get(&sparql("sensors"), &[("query", "SELECT ?s WHERE { ?s ?p }")]);
    assert_eq!(bad.status, 400);
    assert!(bad.body.contains("line 1, column"), "{}", bad.body);
    let service = get(
        &sparql("sensors"),
        &[("query", "SELECT * WHERE { SERVICE <http://factforge.net/sparql> { ?s ?p ?o } }")],
    );
    assert_eq!(service.status, 400);
    let unknown_service = get(
        &sparql("federated"),
        &[("query", "SELECT * WHERE { SERVICE <http://nowhere.example/sparql> { ?s ?p ?o } }")],
    );
    assert_eq!(unknown_service.status, 400);
    assert!(unknown_service.body.contains("http://nowhere.example/sparql"));
    assert_eq!(get(&sparql("nope"), &[("query", FEEDS)]).status, 404);
}

#[test]
fn federated_route_answers_the_bus_stop_query() {
    let text = std::fs::read_to_string(demo_config_path().with_file_name("queries/busstop.rq")).unwrap();
    let r = get(&sparql("federated"), &[("query", &text), ("format", "json")]);
    assert_eq!(r.status, 200, "{}", r.body);
    assert!(!parse_results(ResultFormat::Json, &r.body).unwrap().is_empty());
}

#[test]
fn federated_route_without_service_is_transparent() {
    let hub = demo_hub();
    let q = "SELECT ?d ?v WHERE { ?d <http://portal.bt-hypercat.com/ontologies/bt-hypercat#datastream_current_value> ?v }";
    let direct = hub.combined().evaluate(&parse_query(q).unwrap()).unwrap();
    let r = get(&sparql("federated"), &[("query", q), ("format", "json")]);
    let via = parse_results(ResultFormat::Json, &r.body).unwrap();
    assert!(!direct.is_empty());
    assert_eq!(via.to_set(), direct.to_set());
}

#[test]
fn unreachable_remote_is_a_bad_gateway() {
    let data = demo_config_path().parent().unwrap().to_path_buf();
    let config = HubConfig::parse(
        "ontology = \"bt-hypercat.nt\"\n\
         [[remotes]]\niri = \"http://remote.example/sparql\"\nurl = \"http://127.0.0.1:9/sparql\"\n",
        Path::new(&data),
    )
    .unwrap();
    let url = spawn(Hub::load(&config).unwrap());
    let r = get(
        &format!("{url}/sparql/federated"),
        &[("query", "SELECT * WHERE { SERVICE <http://remote.example/sparql> { ?s ?p ?o } }")],
    );
    assert_eq!(r.status, 502);
    assert!(r.body.contains("http://remote.example/sparql"), "{}", r.body);
}

#[test]
fn catalogue_routes() {
    let cat = get(&format!("{}/cat", base()), &[]);
    assert_eq!(cat.content_type, "application/vnd.hypercat.catalogue+json");
    let doc: serde_json::Value = serde_json::from_str(&cat.body).unwrap();
    let rels: Vec<&str> = doc["catalogue-metadata"]
        .as_array()
        .unwrap()
        .iter()
        .map(|m| m["rel"].as_str().unwrap())
        .collect();
    assert!(rels.contains(&"urn:X-hypercat:rels:isContentType"));
    assert!(rels.contains(&"urn:X-hypercat:rels:hasDescription:en"));
    for item in doc["items"].as_array().unwrap() {
        assert!(item["href"].as_str().unwrap().starts_with("http://api.bt-hypercat.com/"));
        let item_rels: Vec<&str> = item["item-metadata"]
            .as_array()
            .unwrap()
            .iter()
            .map(|m| m["rel"].as_str().unwrap())
            .collect();
        assert!(item_rels.contains(&"urn:X-hypercat:rels:isContentType"));
        assert!(item_rels.contains(&"urn:X-hypercat:rels:hasDescription:en"));
    }
    let rdf = get(&format!("{}/cat-rdf", base()), &[]);
    assert_eq!(rdf.content_type, "application/n-triples");
    assert!(!parse_ntriples(&rdf.body).unwrap().is_empty());
}

#[test]
fn editor_is_served() {
    let r = get(&format!("{}/editor/", base()), &[]);
    assert_eq!(r.status, 200);
    assert!(r.content_type.starts_with("text/html"));
    assert!(r.body.contains("SPARQL Query Editor"));
    let root = get(&format!("{}/", base()), &[]);
    assert_eq!(root.status, 200, "redirect to the editor is followed");
    assert!(root.body.contains("SPARQL Query Editor"));
}

#[test]
fn concurrent_requests_agree() {
    let expected = get(&sparql("sensors"), &[("query", FEEDS), ("format", "csv")]).body;
    let handles: Vec<_> = (0..8)
        .map(|_| std::thread::spawn(|| get(&sparql("sensors"), &[("query", FEEDS), ("format", "csv")]).body))
        .collect();
    for h in handles {
        assert_eq!(h.join().unwrap(), expected);
    }
}
