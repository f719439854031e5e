//! Mapping document syntax:
//!
//! ```text
//! prefix bt-sensors: <http://api.bt-hypercat.com/sensors/>
//!
//! mappingId mapping:SensorFeed
//! target    bt-sensors:feeds/{feed.id} a bt-hypercat:SensorFeed .
//! source    SELECT feed.id FROM feed
//! ```

use super::{MappingDefinition, MappingError, MappingRegistry, ObjectTemplate, Template, TripleTemplate};
use crate::rdf::vocab;
use crate::relstore::parse_sql;

pub fn parse_mapping_document(text: &str) -> Result<MappingRegistry, MappingError> {
    let mut registry = MappingRegistry::default();
    let mut pending_id: Option<(usize, String)> = None;
    let mut pending_target: Option<(usize, TripleTemplate)> = None;

    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let syntax = |message: String| MappingError::Syntax {
            line: line_no,
            message,
        };
        let (keyword, rest) = line.split_once(char::is_whitespace).unwrap_or((line, ""));
        let rest = rest.trim();
        match keyword {
            "prefix" => {
                if pending_id.is_some() {
                    return Err(syntax("prefix declaration inside a mapping block".into()));
                }
                let (name, iri) = rest
                    .split_once(':')
                    .ok_or_else(|| syntax("expected `prefix <name>: <iri>`".into()))?;
                let iri = iri.trim();
                let iri = iri.strip_prefix('<').and_then(|s| s.strip_suffix('>')).unwrap_or(iri);
                if iri.is_empty() || name.contains(char::is_whitespace) {
                    return Err(syntax("expected `prefix <name>: <iri>`".into()));
                }
                registry.prefixes.retain(|(n, _)| n != name);
                registry.prefixes.push((name.to_string(), iri.to_string()));
            }
            "mappingId" => {
                if pending_id.is_some() {
                    return Err(syntax("previous mapping block is incomplete".into()));
                }
                if rest.is_empty() || rest.contains(char::is_whitespace) {
                    return Err(syntax("expected `mappingId <id>`".into()));
                }
                pending_id = Some((line_no, rest.to_string()));
            }
            "target" => {
                if pending_id.is_none() || pending_target.is_some() {
                    return Err(syntax("`target` must follow `mappingId`".into()));
                }
                let target = parse_target(rest, &registry.prefixes, line_no)?;
                pending_target = Some((line_no, target));
            }
            "source" => {
                let (Some((_, id)), Some((_, target))) = (pending_id.take(), pending_target.take()) else {
                    return Err(syntax("`source` must follow `target`".into()));
                };
                let source = parse_sql(rest).map_err(|e| syntax(format!("{id}: {e}")))?;
                registry.add(MappingDefinition {
                    id,
                    target,
                    source_text: rest.to_string(),
                    source,
                })?;
            }
            other => return Err(syntax(format!("unknown directive `{other}`"))),
        }
    }
    if let Some((line, id)) = pending_id {
        return Err(MappingError::Syntax {
            line,
            message: format!("mapping `{id}` is missing its target or source"),
        });
    }
    Ok(registry)
}

fn tokenize_target(src: &str, line: usize) -> Result<Vec<String>, MappingError> {
    let mut toks = Vec::new();
    let mut chars = src.char_indices().peekable();
    while let Some(&(start, c)) = chars.peek() {
        if c.is_whitespace() {
            chars.next();
            continue;
        }
        let mut in_quotes = false;
        let mut in_angle = false;
        while let Some(&(_, c)) = chars.peek() {
            if !in_quotes && !in_angle && c.is_whitespace() {
                break;
            }
            match c {
                '"' if !in_angle => in_quotes = !in_quotes,
                '\\' if in_quotes => {
                    chars.next();
                }
                '<' if !in_quotes => in_angle = true,
                '>' if !in_quotes => in_angle = false,
                _ => {}
            }
            chars.next();
        }
        let end = chars.peek().map(|(j, _)| *j).unwrap_or(src.len());
        if in_quotes {
            return Err(MappingError::Syntax {
                line,
                message: "unterminated literal in target".into(),
            });
        }
        toks.push(src[start..end].to_string());
    }
    Ok(toks)
}

fn resolve(term: &str, prefixes: &[(String, String)], line: usize) -> Result<String, MappingError> {
    if let Some(inner) = term.strip_prefix('<').and_then(|t| t.strip_suffix('>')) {
        return Ok(inner.to_string());
    }
    let (prefix, local) = term.split_once(':').ok_or_else(|| MappingError::Syntax {
        line,
        message: format!("expected prefixed name or <IRI>, got `{term}`"),
    })?;
    let base = prefixes
        .iter()
        .find(|(n, _)| n == prefix)
        .map(|(_, iri)| iri)
        .ok_or_else(|| MappingError::UnknownPrefix {
            line,
            prefix: prefix.to_string(),
        })?;
    Ok(format!("{base}{local}"))
}

fn parse_target(src: &str, prefixes: &[(String, String)], line: usize) -> Result<TripleTemplate, MappingError> {
    let toks = tokenize_target(src, line)?;
    let syntax = |message: String| MappingError::Syntax { line, message };
    let [subject, predicate, object, dot] = toks.as_slice() else {
        return Err(syntax(format!(
            "target needs `<subject> <predicate> <object> .`, found {} tokens",
            toks.len()
        )));
    };
    if dot != "." {
        return Err(syntax("target must end with ' .'".into()));
    }
    let iri_template = |tok: &str| -> Result<Template, MappingError> {
        Template::parse(&resolve(tok, prefixes, line)?).map_err(syntax)
    };
    let subject = iri_template(subject)?;
    let predicate = if predicate == "a" {
        vocab::RDF_TYPE.to_string()
    } else {
        resolve(predicate, prefixes, line)?
    };
    if predicate.contains('{') {
        return Err(syntax("predicate must be a constant IRI".into()));
    }
    let object = if let Some(body) = object.strip_prefix('"') {
        let close = body.rfind('"').ok_or_else(|| syntax("unterminated literal".into()))?;
        let lexical = unescape(&body[..close]);
        let suffix = &body[close + 1..];
        let datatype = suffix
            .strip_prefix("^^")
            .ok_or_else(|| syntax("literal templates need a ^^datatype".into()))?;
        ObjectTemplate::Literal {
            lexical: Template::parse(&lexical).map_err(syntax)?,
            datatype: resolve(datatype, prefixes, line)?,
        }
    } else {
        ObjectTemplate::Iri(iri_template(object)?)
    };
    Ok(TripleTemplate {
        subject,
        predicate,
        object,
    })
}

fn unescape(s: &str) -> String {
    let mut out = String::new();
    let mut chars = s.chars();
    while let Some(c) = chars.next() {
        if c == '\\' {
            match chars.next() {
                Some('n') => out.push('\n'),
                Some('t') => out.push('\t'),
                Some(other) => out.push(other),
                None => {}
            }
        } else {
            out.push(c);
        }
    }
    out
}
