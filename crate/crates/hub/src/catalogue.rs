//! Hypercat catalogues of the feeds and datastreams held by the hub.
//!
//! Items are found by querying the virtual graph, so a feed appears
//! exactly when some mapping types it as a subclass of `Item`.

use std::collections::{BTreeMap, BTreeSet};

use semhub_core::ontology::bt;
use semhub_core::rdf::{vocab, Literal, RdfTerm, RdfTriple};
use semhub_core::sparql::parse_query;
use serde_json::{json, Value};

use crate::{Hub, QueryError};

pub const CATALOGUE_MEDIA_TYPE: &str = "application/vnd.hypercat.catalogue+json";
pub const CONTENT_TYPE_REL: &str = "urn:X-hypercat:rels:isContentType";
pub const DESCRIPTION_REL: &str = "urn:X-hypercat:rels:hasDescription:en";
/// Content type advertised for every item: the hub's egress format.
pub const ITEM_CONTENT_TYPE: &str = "application/n-triples";
pub const CATALOGUE_DESCRIPTION: &str = "BT Hypercat semantic data hub";

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CatalogueItem {
    pub href: String,
    /// Most specific ontology class of the item.
    pub class: String,
    pub description: String,
    /// (property, target item) links to other items.
    pub links: Vec<(String, String)>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Catalogue {
    pub metadata: Vec<(String, String)>,
    pub items: Vec<CatalogueItem>,
}

fn local_name(iri: &str) -> &str {
    iri.rsplit(['#', '/']).next().unwrap_or(iri)
}

pub fn build_catalogue(hub: &Hub) -> Result<Catalogue, QueryError> {
    let ont = hub.ontology();
    let ctx = hub.combined();
    let ask = |text: String| -> Result<_, QueryError> { Ok(ctx.evaluate(&parse_query(&text)?)?) };
    let iri_of = |t: &RdfTerm| t.as_iri().map(str::to_string);

    let item_classes = ont.subclasses_of(&bt("Item"));
    let mut classes: BTreeMap<String, String> = BTreeMap::new();
    for s in ask("SELECT ?s ?c WHERE { ?s a ?c }".into())?.solutions {
        let (Some(item), Some(class)) = (iri_of(&s["s"]), iri_of(&s["c"])) else {
            continue;
        };
        if !item_classes.contains(&class) {
            continue;
        }
        let deeper = |c: &String| ont.superclasses_of(c).len();
        match classes.get(&item) {
            Some(current) if deeper(current) >= deeper(&class) => {}
            _ => {
                classes.insert(item, class);
            }
        }
    }

    let mut titles: BTreeMap<String, String> = BTreeMap::new();
    for (property, var) in [("feed_title", "t"), ("datastream_id", "t")] {
        let q = format!("SELECT ?s ?t WHERE {{ ?s <{}> ?t }}", bt(property));
        for s in ask(q)?.solutions {
            if let (Some(item), Some(l)) = (iri_of(&s["s"]), s[var].as_literal()) {
                titles.entry(item).or_insert_with(|| l.lexical.clone());
            }
        }
    }

    let mut links: BTreeMap<String, BTreeSet<(String, String)>> = BTreeMap::new();
    let q = format!(
        "SELECT ?f ?p ?d WHERE {{ ?f ?p ?d . ?f a <{}> . ?d a <{}> }}",
        bt("Feed"),
        bt("Datastream")
    );
    for s in ask(q)?.solutions {
        if let (Some(f), Some(p), Some(d)) = (iri_of(&s["f"]), iri_of(&s["p"]), iri_of(&s["d"])) {
            links.entry(f).or_default().insert((p, d));
        }
    }

    let items = classes
        .into_iter()
        .map(|(href, class)| {
            let kind = local_name(&class);
            let description = match titles.get(&href) {
                Some(t) if kind.ends_with("Feed") => t.clone(),
                Some(t) => format!("{kind} {t}"),
                None => format!("{kind} {}", local_name(&href)),
            };
            CatalogueItem {
                links: links.remove(&href).map(|l| l.into_iter().collect()).unwrap_or_default(),
                href,
                class,
                description,
            }
        })
        .collect();
    Ok(Catalogue {
        metadata: vec![
            (CONTENT_TYPE_REL.into(), CATALOGUE_MEDIA_TYPE.into()),
            (DESCRIPTION_REL.into(), CATALOGUE_DESCRIPTION.into()),
        ],
        items,
    })
}

impl Catalogue {
    pub fn to_json(&self) -> Value {
        let rel = |r: &str, v: &str| json!({ "rel": r, "val": v });
        let items: Vec<Value> = self
            .items
            .iter()
            .map(|item| {
                let mut meta = vec![
                    rel(CONTENT_TYPE_REL, ITEM_CONTENT_TYPE),
                    rel(DESCRIPTION_REL, &item.description),
                    rel(vocab::RDF_TYPE, &item.class),
                ];
                meta.extend(item.links.iter().map(|(p, d)| rel(p, d)));
                json!({ "href": item.href, "item-metadata": meta })
            })
            .collect();
        json!({
            "catalogue-metadata": self.metadata.iter().map(|(r, v)| rel(r, v)).collect::<Vec<_>>(),
            "items": items,
        })
    }

    /// Each item typed with its ontology class, described, and linked to
    /// its datastreams.
    pub fn to_triples(&self) -> BTreeSet<RdfTriple> {
        let mut out = BTreeSet::new();
        for item in &self.items {
            let s = RdfTerm::iri(&item.href);
            out.insert(RdfTriple::new(s.clone(), vocab::RDF_TYPE, RdfTerm::iri(&item.class)));
            out.insert(RdfTriple::new(
                s.clone(),
                DESCRIPTION_REL,
                RdfTerm::Literal(Literal::lang(&item.description, "en")),
            ));
            out.insert(RdfTriple::new(
                s.clone(),
                CONTENT_TYPE_REL,
                RdfTerm::Literal(Literal::string(ITEM_CONTENT_TYPE)),
            ));
            for (p, d) in &item.links {
                out.insert(RdfTriple::new(s.clone(), p.clone(), RdfTerm::iri(d)));
            }
        }
        out
    }
}
