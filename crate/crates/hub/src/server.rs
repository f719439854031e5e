//! SPARQL protocol service: `/sparql/<db>` (SPARQL-to-SQL),
//! `/sparql/federated` (SPARQL-to-SPARQL), `/cat`, `/cat-rdf` and the
//! query editor under `/editor/`.

use std::sync::Arc;

use axum::body::Bytes;
use axum::extract::{Path, RawQuery, State};
use axum::http::{header, HeaderMap, Method, StatusCode};
use axum::response::{IntoResponse, Redirect, Response};
use axum::routing::get;
use axum::Router;
use log::{debug, warn};
use semhub_core::ntriples::serialize_ntriples;
use semhub_core::results::{format_results, ResultFormat};
use tower_http::services::ServeDir;

use crate::catalogue::{build_catalogue, CATALOGUE_MEDIA_TYPE};
use crate::{Hub, QueryError};

pub const NTRIPLES_MEDIA_TYPE: &str = "application/n-triples";
const SPARQL_QUERY_MEDIA_TYPE: &str = "application/sparql-query";
const FORM_MEDIA_TYPE: &str = "application/x-www-form-urlencoded";

#[derive(Clone)]
struct AppState {
    hub: Arc<Hub>,
    catalogue_json: Arc<String>,
    catalogue_rdf: Arc<String>,
}

/// The hub's HTTP routes. Catalogues are built once here since the hub
/// does not change while serving.
pub fn router(hub: Arc<Hub>) -> Result<Router, QueryError> {
    let catalogue = build_catalogue(&hub)?;
    let state = AppState {
        catalogue_json: Arc::new(serde_json::to_string_pretty(&catalogue.to_json()).expect("JSON value")),
        catalogue_rdf: Arc::new(serialize_ntriples(&catalogue.to_triples())),
        hub: hub.clone(),
    };
    let mut app = Router::new()
        .route("/sparql/{route}", get(sparql).post(sparql))
        .route("/cat", get(cat))
        .route("/cat-rdf", get(cat_rdf));
    if let Some(dir) = &hub.editor_dir {
        app = app
            .nest_service("/editor", ServeDir::new(dir).append_index_html_on_directories(true))
            .route("/", get(|| async { Redirect::temporary("/editor/") }));
    }
    Ok(app.with_state(state))
}

/// Human-readable list of what `router` serves.
pub fn route_table(hub: &Hub) -> Vec<String> {
    let mut out: Vec<String> = hub.routes().iter().map(|r| format!("/sparql/{r}")).collect();
    out.push("/cat".into());
    out.push("/cat-rdf".into());
    if hub.editor_dir.is_some() {
        out.push("/editor/".into());
    }
    out
}

fn plain(status: StatusCode, message: impl Into<String>) -> Response {
    let mut message = message.into();
    message.push('\n');
    (status, [(header::CONTENT_TYPE, "text/plain; charset=utf-8")], message).into_response()
}

fn media_type(headers: &HeaderMap) -> Option<String> {
    let value = headers.get(header::CONTENT_TYPE)?.to_str().ok()?;
    Some(value.split(';').next().unwrap_or("").trim().to_ascii_lowercase())
}

fn params(text: &[u8]) -> Vec<(String, String)> {
    form_urlencoded::parse(text).into_owned().collect()
}

fn find<'a>(params: &'a [(String, String)], key: &str) -> Option<&'a str> {
    params.iter().find(|(k, _)| k == key).map(|(_, v)| v.as_str())
}

fn error_status(e: &QueryError) -> StatusCode {
    if e.is_user_error() {
        StatusCode::BAD_REQUEST
    } else if e.is_remote_failure() {
        StatusCode::BAD_GATEWAY
    } else if matches!(e, QueryError::UnknownDatabase(_)) {
        StatusCode::NOT_FOUND
    } else {
        StatusCode::INTERNAL_SERVER_ERROR
    }
}

async fn sparql(
    State(state): State<AppState>,
    Path(route): Path<String>,
    method: Method,
    headers: HeaderMap,
    RawQuery(raw): RawQuery,
    body: Bytes,
) -> Response {
    let hub = state.hub;
    if !hub.routes().contains(&route) {
        return plain(StatusCode::NOT_FOUND, format!("no SPARQL endpoint at /sparql/{route}"));
    }
    let mut args = params(raw.unwrap_or_default().as_bytes());
    let mut query = find(&args, "query").map(str::to_string);
    if method == Method::POST {
        match media_type(&headers).as_deref() {
            Some(SPARQL_QUERY_MEDIA_TYPE) => match String::from_utf8(body.to_vec()) {
                Ok(text) => query = Some(text),
                Err(_) => return plain(StatusCode::BAD_REQUEST, "query body is not UTF-8"),
            },
            Some(FORM_MEDIA_TYPE) => {
                args.extend(params(&body));
                query = find(&args, "query").map(str::to_string);
            }
            other => {
                return plain(
                    StatusCode::UNSUPPORTED_MEDIA_TYPE,
                    format!(
                        "POST body must be {SPARQL_QUERY_MEDIA_TYPE} or {FORM_MEDIA_TYPE}, not {}",
                        other.unwrap_or("untyped")
                    ),
                )
            }
        }
    }
    let Some(query) = query else {
        return plain(StatusCode::BAD_REQUEST, "missing `query` parameter");
    };

    let format = match find(&args, "format") {
        Some(name) => match ResultFormat::parse(name) {
            Some(f) => f,
            None => {
                let known: Vec<&str> = ResultFormat::ALL.iter().map(|f| f.name()).collect();
                return plain(
                    StatusCode::UNSUPPORTED_MEDIA_TYPE,
                    format!("unknown result format {name:?}; expected one of {}", known.join(", ")),
                );
            }
        },
        None => match headers.get(header::ACCEPT).and_then(|v| v.to_str().ok()) {
            None => hub.default_format,
            Some(accept) => match ResultFormat::from_accept(accept, hub.default_format) {
                Some(f) => f,
                None => return plain(StatusCode::NOT_ACCEPTABLE, format!("no result format matches Accept: {accept}")),
            },
        },
    };

    debug!("/sparql/{route} ({format}): {query}");
    let worker = hub.clone();
    let evaluated = tokio::task::spawn_blocking(move || {
        worker
            .evaluate_text(&route, &query)
            .map(|table| format_results(&table, format))
    })
    .await;
    match evaluated {
        Ok(Ok(body)) => ([(header::CONTENT_TYPE, format.media_type())], body).into_response(),
        Ok(Err(e)) => {
            let status = error_status(&e);
            if status.is_server_error() {
                warn!("query failed: {e}");
            }
            plain(status, e.to_string())
        }
        Err(e) => plain(StatusCode::INTERNAL_SERVER_ERROR, format!("query evaluation aborted: {e}")),
    }
}

async fn cat(State(state): State<AppState>) -> Response {
    ([(header::CONTENT_TYPE, CATALOGUE_MEDIA_TYPE)], state.catalogue_json.as_str().to_owned()).into_response()
}

async fn cat_rdf(State(state): State<AppState>) -> Response {
    ([(header::CONTENT_TYPE, NTRIPLES_MEDIA_TYPE)], state.catalogue_rdf.as_str().to_owned()).into_response()
}
