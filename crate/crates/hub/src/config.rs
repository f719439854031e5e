use std::path::{Path, PathBuf};

use semhub_core::results::ResultFormat;
use serde::Deserialize;

use crate::HubError;

/// Hub configuration as read from a TOML file. Relative paths are
/// resolved against the directory holding the file.
#[derive(Debug, Clone)]
pub struct HubConfig {
    pub listen: String,
    pub ontology: PathBuf,
    pub databases: Vec<DatabaseConfig>,
    pub remotes: Vec<RemoteConfig>,
    pub default_format: ResultFormat,
    /// Directory with the query editor assets, served under /editor/.
    pub editor_dir: Option<PathBuf>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DatabaseConfig {
    pub name: String,
    pub fixture: PathBuf,
    pub mappings: PathBuf,
}

/// An endpoint reachable from SERVICE clauses. `url` is either an HTTP(S)
/// SPARQL endpoint or a `file:` path to an N-Triples document served
/// from memory.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RemoteConfig {
    pub iri: String,
    pub url: String,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    #[serde(default = "default_listen")]
    listen: String,
    ontology: PathBuf,
    #[serde(default)]
    databases: Vec<DatabaseConfig>,
    #[serde(default)]
    remotes: Vec<RemoteConfig>,
    #[serde(default)]
    default_format: Option<String>,
    #[serde(default)]
    editor_dir: Option<PathBuf>,
}

fn default_listen() -> String {
    "127.0.0.1:8080".into()
}

impl HubConfig {
    pub fn load(path: &Path) -> Result<HubConfig, HubError> {
        let text = std::fs::read_to_string(path).map_err(|source| HubError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        let base = path.parent().unwrap_or(Path::new("."));
        HubConfig::parse(&text, base).map_err(|e| match e {
            HubError::Config { message, .. } => HubError::Config {
                path: path.to_path_buf(),
                message,
            },
            other => other,
        })
    }

    pub fn parse(text: &str, base: &Path) -> Result<HubConfig, HubError> {
        let config_error = |message: String| HubError::Config {
            path: PathBuf::new(),
            message,
        };
        let raw: RawConfig = toml::from_str(text).map_err(|e| config_error(e.message().to_string()))?;
        let default_format = match raw.default_format.as_deref() {
            None => ResultFormat::Json,
            Some(name) => ResultFormat::parse(name).ok_or_else(|| config_error(format!("unknown result format {name:?}")))?,
        };
        let mut names = std::collections::HashSet::new();
        for db in &raw.databases {
            if !names.insert(db.name.as_str()) {
                return Err(config_error(format!("database {:?} is declared twice", db.name)));
            }
            if db.name == "federated" || db.name.is_empty() || db.name.contains('/') {
                return Err(config_error(format!("{:?} cannot be used as a database name", db.name)));
            }
        }
        let resolve = |p: &Path| if p.is_absolute() { p.to_path_buf() } else { base.join(p) };
        Ok(HubConfig {
            listen: raw.listen,
            ontology: resolve(&raw.ontology),
            databases: raw
                .databases
                .into_iter()
                .map(|d| DatabaseConfig {
                    fixture: resolve(&d.fixture),
                    mappings: resolve(&d.mappings),
                    name: d.name,
                })
                .collect(),
            remotes: raw
                .remotes
                .into_iter()
                .map(|r| RemoteConfig {
                    url: match r.url.strip_prefix("file:") {
                        Some(p) => format!("file:{}", resolve(Path::new(p)).display()),
                        None => r.url,
                    },
                    iri: r.iri,
                })
                .collect(),
            default_format,
            editor_dir: raw.editor_dir.as_deref().map(resolve),
        })
    }
}
