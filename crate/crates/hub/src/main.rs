use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;
use std::time::Duration;

use clap::{Args, Parser, Subcommand};
use log::info;
use semhub::catalogue::build_catalogue;
use semhub::config::HubConfig;
use semhub::server::{route_table, router};
use semhub::state::load_database;
use semhub::{Hub, HubError, QueryError};
use semhub_core::ntriples::serialize_ntriples;
use semhub_core::results::ResultFormat;
use semhub_core::sparql::term_text;

#[derive(Parser)]
#[command(name = "semhub", version, about = "Semantic IoT data hub")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the HTTP endpoints until interrupted.
    Serve {
        #[arg(long, default_value = "hub.toml")]
        config: PathBuf,
        /// Overrides `listen` from the config file.
        #[arg(long)]
        listen: Option<String>,
    },
    /// Load a fixture and report row counts per table.
    Ingest {
        #[arg(long, default_value = "hub.toml")]
        config: PathBuf,
        /// Configured database to load.
        #[arg(long, required_unless_present = "fixture")]
        db: Option<String>,
        /// Fixture file to load instead of a configured database.
        #[arg(long, conflicts_with = "db")]
        fixture: Option<PathBuf>,
    },
    /// Show the mappings and SQL each triple pattern is answered by.
    Translate {
        #[arg(long, default_value = "hub.toml")]
        config: PathBuf,
        /// Database to translate for; every configured database when omitted.
        #[arg(long)]
        db: Option<String>,
        #[command(flatten)]
        query: QueryText,
    },
    /// Write the virtual graph of a database as N-Triples.
    Export {
        #[arg(long, default_value = "hub.toml")]
        config: PathBuf,
        #[arg(long)]
        db: String,
        /// Output file; stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Send a query to a SPARQL endpoint and print the response body.
    Query {
        /// Endpoint URL, e.g. http://127.0.0.1:8080/sparql/sensors
        #[arg(long)]
        endpoint: String,
        #[command(flatten)]
        query: QueryText,
        #[arg(long, default_value = "json")]
        format: String,
        /// Seconds to wait for the answer.
        #[arg(long, default_value_t = 30)]
        timeout: u64,
    },
    /// Print the Hypercat catalogue.
    Catalogue {
        #[arg(long, default_value = "hub.toml")]
        config: PathBuf,
        /// `json` for /cat, `rdf` for /cat-rdf.
        #[arg(long, default_value = "json", value_parser = ["json", "rdf"])]
        format: String,
    },
}

#[derive(Args)]
#[group(required = true, multiple = false)]
struct QueryText {
    /// Query text.
    #[arg(long)]
    query: Option<String>,
    /// File holding the query text.
    #[arg(long)]
    query_file: Option<PathBuf>,
}

/// Failure classes, each with its own exit code.
enum Failure {
    Environment(String),
    Query(String),
    Remote(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Environment(_) => 1,
            Failure::Query(_) => 2,
            Failure::Remote(_) => 3,
        }
    }

    fn message(&self) -> &str {
        match self {
            Failure::Environment(m) | Failure::Query(m) | Failure::Remote(m) => m,
        }
    }
}

impl From<HubError> for Failure {
    fn from(e: HubError) -> Self {
        Failure::Environment(e.to_string())
    }
}

impl From<QueryError> for Failure {
    fn from(e: QueryError) -> Self {
        if e.is_user_error() {
            Failure::Query(e.to_string())
        } else if e.is_remote_failure() {
            Failure::Remote(e.to_string())
        } else {
            Failure::Environment(e.to_string())
        }
    }
}

fn io_failure(path: &Path, e: std::io::Error) -> Failure {
    Failure::Environment(format!("{}: {e}", path.display()))
}

impl QueryText {
    fn read(&self) -> Result<String, Failure> {
        match (&self.query, &self.query_file) {
            (Some(q), _) => Ok(q.clone()),
            (None, Some(path)) => std::fs::read_to_string(path).map_err(|e| io_failure(path, e)),
            (None, None) => unreachable!("clap requires one of --query and --query-file"),
        }
    }
}

/// Writes a payload to stdout; a closed pipe just ends the output.
fn emit(text: &str) -> Result<(), Failure> {
    let mut out = std::io::stdout().lock();
    match out.write_all(text.as_bytes()).and_then(|_| out.flush()) {
        Err(e) if e.kind() != std::io::ErrorKind::BrokenPipe => Err(Failure::Environment(e.to_string())),
        _ => Ok(()),
    }
}

fn load_hub(config: &Path) -> Result<Hub, Failure> {
    Ok(Hub::load(&HubConfig::load(config)?)?)
}

fn serve(config: &Path, listen: Option<String>) -> Result<(), Failure> {
    let hub = Arc::new(load_hub(config)?);
    let addr = listen.unwrap_or_else(|| hub.listen.clone());
    let app = router(hub.clone())?;
    let runtime = tokio::runtime::Runtime::new().map_err(|e| Failure::Environment(format!("runtime: {e}")))?;
    runtime.block_on(async move {
        let listener = tokio::net::TcpListener::bind(&addr)
            .await
            .map_err(|e| Failure::Environment(format!("cannot listen on {addr}: {e}")))?;
        let local = listener.local_addr().map_err(|e| Failure::Environment(e.to_string()))?;
        info!("listening on http://{local}");
        for route in route_table(&hub) {
            info!("  {route}");
        }
        axum::serve(listener, app)
            .with_graceful_shutdown(async {
                let _ = tokio::signal::ctrl_c().await;
            })
            .await
            .map_err(|e| Failure::Environment(format!("server error: {e}")))
    })
}

fn ingest(config: &Path, db: Option<String>, fixture: Option<PathBuf>) -> Result<(), Failure> {
    let report = match (db, fixture) {
        (_, Some(path)) => {
            let text = std::fs::read_to_string(&path).map_err(|e| io_failure(&path, e))?;
            semhub_core::relstore::Database::new()
                .load_fixture(&text)
                .map_err(|e| Failure::Environment(format!("{}: {e}", path.display())))?
        }
        (Some(name), None) => {
            let cfg = HubConfig::load(config)?;
            let d = cfg
                .databases
                .iter()
                .find(|d| d.name == name)
                .ok_or_else(|| Failure::Environment(format!("database {name:?} is not configured")))?;
            load_database(&d.name, &d.fixture, &d.mappings)?.1
        }
        (None, None) => unreachable!("clap requires --db or --fixture"),
    };
    emit(&report.to_string())
}

fn translate(config: &Path, db: Option<&str>, query: &QueryText) -> Result<(), Failure> {
    let hub = load_hub(config)?;
    let plans = hub.translate(db, &query.read()?)?;
    let mut out = String::new();
    for (i, plan) in plans.iter().enumerate() {
        let p = &plan.pattern;
        out += &format!(
            "pattern {}: {} {} {}\n",
            i + 1,
            term_text(&p.subject),
            term_text(&p.predicate),
            term_text(&p.object)
        );
        if plan.queries.is_empty() {
            out += "  (no matching mapping)\n";
        }
        for (source, mapping, sql) in &plan.queries {
            out += &format!("  {source} {mapping}\n    {sql}\n");
        }
    }
    emit(&out)
}

fn export(config: &Path, db: &str, out: Option<PathBuf>) -> Result<(), Failure> {
    let hub = load_hub(config)?;
    let triples = hub.materialize(db)?;
    let text = serialize_ntriples(&triples);
    match out {
        Some(path) => {
            std::fs::write(&path, text).map_err(|e| io_failure(&path, e))?;
            emit(&format!("{} triples written to {}\n", triples.len(), path.display()))?;
        }
        None => {
            emit(&text)?;
            eprintln!("{} triples", triples.len());
        }
    }
    Ok(())
}

fn query(endpoint: &str, query: &QueryText, format: &str, timeout: u64) -> Result<(), Failure> {
    let format = ResultFormat::parse(format).ok_or_else(|| Failure::Query(format!("unknown result format {format:?}")))?;
    let text = query.read()?;
    let client = reqwest::blocking::Client::builder()
        .timeout(Duration::from_secs(timeout))
        .build()
        .map_err(|e| Failure::Environment(e.to_string()))?;
    let response = client
        .get(endpoint)
        .query(&[("query", text.as_str()), ("format", format.name())])
        .header(reqwest::header::ACCEPT, format.media_type())
        .send()
        .map_err(|e| Failure::Remote(format!("{endpoint}: {e}")))?;
    let status = response.status();
    let body = response.text().map_err(|e| Failure::Remote(format!("{endpoint}: {e}")))?;
    if !status.is_success() {
        return Err(Failure::Remote(format!("{endpoint}: HTTP {status}\n{}", body.trim_end())));
    }
    emit(&body)
}

fn catalogue(config: &Path, format: &str) -> Result<(), Failure> {
    let hub = load_hub(config)?;
    let cat = build_catalogue(&hub)?;
    if format == "rdf" {
        emit(&serialize_ntriples(&cat.to_triples()))
    } else {
        emit(&format!("{:#}\n", cat.to_json()))
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    // the server announces its routes; other commands only report problems
    let level = if matches!(cli.command, Command::Serve { .. }) { "info" } else { "warn" };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    let result = match cli.command {
        Command::Serve { config, listen } => serve(&config, listen),
        Command::Ingest { config, db, fixture } => ingest(&config, db, fixture),
        Command::Translate { config, db, query } => translate(&config, db.as_deref(), &query),
        Command::Export { config, db, out } => export(&config, &db, out),
        Command::Query {
            endpoint,
            query: q,
            format,
            timeout,
        } => query(&endpoint, &q, &format, timeout),
        Command::Catalogue { config, format } => catalogue(&config, &format),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("semhub: {}", f.message());
            ExitCode::from(f.code())
        }
    }
}
