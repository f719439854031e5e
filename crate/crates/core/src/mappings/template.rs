use std::fmt;

use percent_encoding::{percent_decode_str, utf8_percent_encode, AsciiSet, NON_ALPHANUMERIC};

use crate::rdf::{canonical_date_time, canonical_double, vocab, Literal, RdfTerm, RdfTriple};
use crate::relstore::{Row, Value};

/// Everything except RFC 3986 unreserved characters gets encoded.
const IRI_COMPONENT: &AsciiSet = &NON_ALPHANUMERIC.remove(b'-').remove(b'.').remove(b'_').remove(b'~');

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum TemplatePart {
    Text(String),
    Placeholder(String),
}

/// Literal text interleaved with `{column}` placeholders.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Template {
    pub parts: Vec<TemplatePart>,
}

impl Template {
    pub fn parse(src: &str) -> Result<Template, String> {
        let mut parts = Vec::new();
        let mut rest = src;
        while !rest.is_empty() {
            match rest.find(['{', '}']) {
                Some(i) if rest.as_bytes()[i] == b'}' => {
                    return Err(format!("unbalanced '}}' in template {src:?}"));
                }
                Some(i) => {
                    if i > 0 {
                        parts.push(TemplatePart::Text(rest[..i].to_string()));
                    }
                    let close = rest[i..]
                        .find('}')
                        .ok_or_else(|| format!("unclosed '{{' in template {src:?}"))?;
                    let name = &rest[i + 1..i + close];
                    if name.is_empty() || name.contains('{') {
                        return Err(format!("invalid placeholder in template {src:?}"));
                    }
                    if matches!(parts.last(), Some(TemplatePart::Placeholder(_))) {
                        return Err(format!("adjacent placeholders in template {src:?}"));
                    }
                    parts.push(TemplatePart::Placeholder(name.to_string()));
                    rest = &rest[i + close + 1..];
                }
                None => {
                    parts.push(TemplatePart::Text(rest.to_string()));
                    rest = "";
                }
            }
        }
        Ok(Template { parts })
    }

    pub fn constant(text: impl Into<String>) -> Template {
        Template {
            parts: vec![TemplatePart::Text(text.into())],
        }
    }

    pub fn placeholders(&self) -> impl Iterator<Item = &str> {
        self.parts.iter().filter_map(|p| match p {
            TemplatePart::Placeholder(n) => Some(n.as_str()),
            TemplatePart::Text(_) => None,
        })
    }

    pub fn is_constant(&self) -> bool {
        self.placeholders().next().is_none()
    }

    /// Substitutes row values; `None` if any placeholder is NULL or missing.
    fn render(&self, row: &Row, encode: bool) -> Option<String> {
        let mut out = String::new();
        for part in &self.parts {
            match part {
                TemplatePart::Text(t) => out.push_str(t),
                TemplatePart::Placeholder(name) => {
                    let text = value_text(row.get(name)?)?;
                    if encode {
                        out.extend(utf8_percent_encode(&text, IRI_COMPONENT));
                    } else {
                        out.push_str(&text);
                    }
                }
            }
        }
        Some(out)
    }

    /// Recovers placeholder values from an expanded IRI. Returns every
    /// assignment whose re-expansion reproduces `iri` exactly.
    pub fn invert_iri(&self, iri: &str) -> Vec<Vec<(String, String)>> {
        let mut results = Vec::new();
        invert(&self.parts, iri, &mut Vec::new(), &mut results);
        results
    }

    /// Like [`Template::invert_iri`] but without percent-decoding.
    pub fn invert_text(&self, text: &str) -> Vec<Vec<(String, String)>> {
        let mut results = Vec::new();
        invert_raw(&self.parts, text, &mut Vec::new(), &mut results);
        results
    }
}

fn invert(
    parts: &[TemplatePart],
    rest: &str,
    acc: &mut Vec<(String, String)>,
    out: &mut Vec<Vec<(String, String)>>,
) {
    match parts.split_first() {
        None => {
            if rest.is_empty() {
                out.push(acc.clone());
            }
        }
        Some((TemplatePart::Text(t), tail)) => {
            if let Some(r) = rest.strip_prefix(t.as_str()) {
                invert(tail, r, acc, out);
            }
        }
        Some((TemplatePart::Placeholder(name), tail)) => {
            // encoded values never contain reserved characters
            let max = rest
                .find(|c: char| !(c.is_ascii_alphanumeric() || matches!(c, '-' | '.' | '_' | '~' | '%')))
                .unwrap_or(rest.len());
            for end in (0..=max).rev() {
                if !rest.is_char_boundary(end) {
                    continue;
                }
                let encoded = &rest[..end];
                let Ok(decoded) = percent_decode_str(encoded).decode_utf8() else {
                    continue;
                };
                if utf8_percent_encode(&decoded, IRI_COMPONENT).to_string() != encoded {
                    continue;
                }
                let decoded = decoded.into_owned();
                if let Some((_, prev)) = acc.iter().find(|(n, _)| n == name) {
                    if *prev != decoded {
                        continue;
                    }
                }
                acc.push((name.clone(), decoded));
                invert(tail, &rest[end..], acc, out);
                acc.pop();
            }
        }
    }
}

fn invert_raw(
    parts: &[TemplatePart],
    rest: &str,
    acc: &mut Vec<(String, String)>,
    out: &mut Vec<Vec<(String, String)>>,
) {
    match parts.split_first() {
        None => {
            if rest.is_empty() {
                out.push(acc.clone());
            }
        }
        Some((TemplatePart::Text(t), tail)) => {
            if let Some(r) = rest.strip_prefix(t.as_str()) {
                invert_raw(tail, r, acc, out);
            }
        }
        Some((TemplatePart::Placeholder(name), tail)) => {
            let ends: Vec<usize> = if tail.is_empty() {
                vec![rest.len()]
            } else {
                (0..=rest.len()).filter(|i| rest.is_char_boundary(*i)).collect()
            };
            for end in ends {
                let value = rest[..end].to_string();
                if let Some((_, prev)) = acc.iter().find(|(n, _)| n == name) {
                    if *prev != value {
                        continue;
                    }
                }
                acc.push((name.clone(), value));
                invert_raw(tail, &rest[end..], acc, out);
                acc.pop();
            }
        }
    }
}

impl fmt::Display for Template {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for part in &self.parts {
            match part {
                TemplatePart::Text(t) => f.write_str(t)?,
                TemplatePart::Placeholder(n) => write!(f, "{{{n}}}")?,
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum ObjectTemplate {
    Iri(Template),
    Literal { lexical: Template, datatype: String },
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct TripleTemplate {
    pub subject: Template,
    pub predicate: String,
    pub object: ObjectTemplate,
}

impl TripleTemplate {
    pub fn placeholders(&self) -> Vec<&str> {
        let mut out: Vec<&str> = self.subject.placeholders().collect();
        match &self.object {
            ObjectTemplate::Iri(t) => out.extend(t.placeholders()),
            ObjectTemplate::Literal { lexical, .. } => out.extend(lexical.placeholders()),
        }
        out
    }

    /// Constant class IRI for `rdf:type` templates.
    pub fn constant_class(&self) -> Option<&str> {
        if self.predicate != vocab::RDF_TYPE {
            return None;
        }
        match &self.object {
            ObjectTemplate::Iri(t) if t.is_constant() => match t.parts.first() {
                Some(TemplatePart::Text(c)) => Some(c),
                _ => None,
            },
            _ => None,
        }
    }
}

/// Instantiates a template for one row. NULL placeholders and values
/// that are not valid for the literal's datatype suppress the triple.
pub fn expand_template(t: &TripleTemplate, row: &Row) -> Option<RdfTriple> {
    let subject = RdfTerm::Iri(t.subject.render(row, true)?);
    let object = match &t.object {
        ObjectTemplate::Iri(tpl) => RdfTerm::Iri(tpl.render(row, true)?),
        ObjectTemplate::Literal { lexical, datatype } => {
            let text = lexical.render(row, false)?;
            RdfTerm::Literal(canonical_literal(&text, datatype)?)
        }
    };
    Some(RdfTriple::new(subject, t.predicate.clone(), object))
}

/// Validates `text` against `datatype`, returning the canonical literal.
pub fn canonical_literal(text: &str, datatype: &str) -> Option<Literal> {
    let lit = Literal::typed(text, datatype);
    let valid = match datatype {
        vocab::XSD_INTEGER => text.trim().parse::<i64>().is_ok(),
        vocab::XSD_DOUBLE | vocab::XSD_DECIMAL => crate::rdf::parse_double(text.trim()).is_some(),
        vocab::XSD_BOOLEAN => matches!(text.trim(), "true" | "false" | "1" | "0"),
        vocab::XSD_DATE_TIME => crate::rdf::parse_date_time(text).is_some(),
        _ => true,
    };
    valid.then(|| lit.canonical())
}

/// Text form of a cell value, as substituted into templates.
pub fn value_text(v: &Value) -> Option<String> {
    Some(match v {
        Value::Null => return None,
        Value::Text(s) | Value::Wkt(s) => s.clone(),
        Value::Int(i) | Value::Epoch(i) => i.to_string(),
        Value::Float(f) => canonical_double(*f),
        Value::Bool(b) => b.to_string(),
        Value::Timestamp(t) => canonical_date_time(*t),
        Value::TextArray(items) => format!("{{{}}}", items.join(",")),
    })
}
