#![allow(dead_code)]

use std::path::PathBuf;
use std::sync::mpsc;
use std::sync::Arc;

use semhub::server::router;
use semhub::{Hub, HubConfig};

pub fn demo_config_path() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../data/hub.toml")
}

pub fn demo_hub() -> Hub {
    Hub::load(&HubConfig::load(&demo_config_path()).unwrap()).unwrap()
}

/// Serves `hub` on an ephemeral local port from a background thread and
/// returns the base URL. The server lives as long as the test process.
pub fn spawn(hub: Hub) -> String {
    let (tx, rx) = mpsc::channel();
    std::thread::spawn(move || {
        let runtime = tokio::runtime::Runtime::new().unwrap();
        runtime.block_on(async move {
            let listener = tokio::net::TcpListener::bind("127.0.0.1:0").await.unwrap();
            tx.send(listener.local_addr().unwrap()).unwrap();
            axum::serve(listener, router(Arc::new(hub)).unwrap()).await.unwrap();
        });
    });
    format!("http://{}", rx.recv().unwrap())
}

pub fn client() -> reqwest::blocking::Client {
    reqwest::blocking::Client::new()
}

pub struct Reply {
    pub status: u16,
    pub content_type: String,
    pub body: String,
}

fn reply(r: reqwest::blocking::Response) -> Reply {
    Reply {
        status: r.status().as_u16(),
        content_type: r
            .headers()
            .get(reqwest::header::CONTENT_TYPE)
            .and_then(|v| v.to_str().ok())
            .unwrap_or_default()
            .to_string(),
        body: r.text().unwrap(),
    }
}

pub fn get(url: &str, params: &[(&str, &str)]) -> Reply {
    reply(client().get(url).query(params).send().unwrap())
}

pub fn get_with_accept(url: &str, query: &str, accept: &str) -> Reply {
    reply(
        client()
            .get(url)
            .query(&[("query", query)])
            .header(reqwest::header::ACCEPT, accept)
            .send()
            .unwrap(),
    )
}

pub fn post_query(url: &str, query: &str, format: &str) -> Reply {
    reply(
        client()
            .post(format!("{url}?format={format}"))
            .header(reqwest::header::CONTENT_TYPE, "application/sparql-query")
            .body(query.to_string())
            .send()
            .unwrap(),
    )
}

pub fn post_form(url: &str, fields: &[(&str, &str)]) -> Reply {
    let body: String = form_urlencoded::Serializer::new(String::new()).extend_pairs(fields).finish();
    reply(
        client()
            .post(url)
            .header(reqwest::header::CONTENT_TYPE, "application/x-www-form-urlencoded")
            .body(body)
            .send()
            .unwrap(),
    )
}
