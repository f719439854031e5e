//! RDF terms and triples as produced by the mapping layer and consumed by
//! query evaluation and result serialization.

use std::fmt;

use chrono::{DateTime, NaiveDate, NaiveDateTime, Utc};

pub mod vocab {
    pub const RDF: &str = "http://www.w3.org/1999/02/22-rdf-syntax-ns#";
    pub const RDF_TYPE: &str = "http://www.w3.org/1999/02/22-rdf-syntax-ns#type";
    pub const RDF_LANG_STRING: &str = "http://www.w3.org/1999/02/22-rdf-syntax-ns#langString";
    pub const RDF_PROPERTY: &str = "http://www.w3.org/1999/02/22-rdf-syntax-ns#Property";
    pub const RDFS_SUBCLASS_OF: &str = "http://www.w3.org/2000/01/rdf-schema#subClassOf";
    pub const RDFS_SUBPROPERTY_OF: &str = "http://www.w3.org/2000/01/rdf-schema#subPropertyOf";
    pub const RDFS_RANGE: &str = "http://www.w3.org/2000/01/rdf-schema#range";
    pub const RDFS_CLASS: &str = "http://www.w3.org/2000/01/rdf-schema#Class";
    pub const OWL_CLASS: &str = "http://www.w3.org/2002/07/owl#Class";
    pub const OWL_DATATYPE_PROPERTY: &str = "http://www.w3.org/2002/07/owl#DatatypeProperty";
    pub const OWL_OBJECT_PROPERTY: &str = "http://www.w3.org/2002/07/owl#ObjectProperty";
    pub const OWL_ONTOLOGY: &str = "http://www.w3.org/2002/07/owl#Ontology";

    pub const XSD: &str = "http://www.w3.org/2001/XMLSchema#";
    pub const XSD_STRING: &str = "http://www.w3.org/2001/XMLSchema#string";
    pub const XSD_INTEGER: &str = "http://www.w3.org/2001/XMLSchema#integer";
    pub const XSD_DECIMAL: &str = "http://www.w3.org/2001/XMLSchema#decimal";
    pub const XSD_DOUBLE: &str = "http://www.w3.org/2001/XMLSchema#double";
    pub const XSD_BOOLEAN: &str = "http://www.w3.org/2001/XMLSchema#boolean";
    pub const XSD_DATE_TIME: &str = "http://www.w3.org/2001/XMLSchema#dateTime";

    pub const BT_HYPERCAT: &str = "http://portal.bt-hypercat.com/ontologies/bt-hypercat#";
    pub const WGS84_POS: &str = "http://www.w3.org/2003/01/geo/wgs84_pos#";
}

/// Datatype or language tag carried by a literal.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum LiteralKind {
    Typed(String),
    Lang(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Literal {
    pub lexical: String,
    pub kind: LiteralKind,
}

impl Literal {
    pub fn typed(lexical: impl Into<String>, datatype: impl Into<String>) -> Self {
        Literal {
            lexical: lexical.into(),
            kind: LiteralKind::Typed(datatype.into()),
        }
    }

    pub fn string(lexical: impl Into<String>) -> Self {
        Self::typed(lexical, vocab::XSD_STRING)
    }

    pub fn lang(lexical: impl Into<String>, tag: impl Into<String>) -> Self {
        Literal {
            lexical: lexical.into(),
            kind: LiteralKind::Lang(tag.into().to_ascii_lowercase()),
        }
    }

    pub fn integer(v: i64) -> Self {
        Self::typed(v.to_string(), vocab::XSD_INTEGER)
    }

    pub fn double(v: f64) -> Self {
        Self::typed(canonical_double(v), vocab::XSD_DOUBLE)
    }

    pub fn boolean(v: bool) -> Self {
        Self::typed(if v { "true" } else { "false" }, vocab::XSD_BOOLEAN)
    }

    pub fn date_time(v: DateTime<Utc>) -> Self {
        Self::typed(canonical_date_time(v), vocab::XSD_DATE_TIME)
    }

    /// Datatype IRI; language-tagged literals report `rdf:langString`.
    pub fn datatype(&self) -> &str {
        match &self.kind {
            LiteralKind::Typed(dt) => dt,
            LiteralKind::Lang(_) => vocab::RDF_LANG_STRING,
        }
    }

    pub fn language(&self) -> Option<&str> {
        match &self.kind {
            LiteralKind::Lang(tag) => Some(tag),
            LiteralKind::Typed(_) => None,
        }
    }

    /// Lexical form normalized for the datatypes whose value space we
    /// understand. Invalid lexical forms are returned unchanged.
    pub fn canonical_lexical(&self) -> String {
        let LiteralKind::Typed(dt) = &self.kind else {
            return self.lexical.clone();
        };
        let lex = self.lexical.trim();
        match dt.as_str() {
            vocab::XSD_INTEGER => lex
                .parse::<i64>()
                .map(|v| v.to_string())
                .unwrap_or_else(|_| self.lexical.clone()),
            vocab::XSD_DOUBLE | vocab::XSD_DECIMAL => parse_double(lex)
                .map(canonical_double)
                .unwrap_or_else(|| self.lexical.clone()),
            vocab::XSD_BOOLEAN => match lex {
                "true" | "1" => "true".into(),
                "false" | "0" => "false".into(),
                _ => self.lexical.clone(),
            },
            vocab::XSD_DATE_TIME => parse_date_time(lex)
                .map(canonical_date_time)
                .unwrap_or_else(|| self.lexical.clone()),
            _ => self.lexical.clone(),
        }
    }

    /// Same literal with its lexical form canonicalized.
    pub fn canonical(&self) -> Literal {
        Literal {
            lexical: self.canonical_lexical(),
            kind: self.kind.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum RdfTerm {
    Iri(String),
    BlankNode(String),
    Literal(Literal),
}

impl RdfTerm {
    pub fn iri(iri: impl Into<String>) -> Self {
        RdfTerm::Iri(iri.into())
    }

    pub fn as_iri(&self) -> Option<&str> {
        match self {
            RdfTerm::Iri(iri) => Some(iri),
            _ => None,
        }
    }

    pub fn as_literal(&self) -> Option<&Literal> {
        match self {
            RdfTerm::Literal(lit) => Some(lit),
            _ => None,
        }
    }

    /// Key used for value-based de-duplication.
    pub fn canonical(&self) -> RdfTerm {
        match self {
            RdfTerm::Literal(lit) => RdfTerm::Literal(lit.canonical()),
            other => other.clone(),
        }
    }
}

impl From<Literal> for RdfTerm {
    fn from(lit: Literal) -> Self {
        RdfTerm::Literal(lit)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct RdfTriple {
    pub subject: RdfTerm,
    pub predicate: String,
    pub object: RdfTerm,
}

impl RdfTriple {
    pub fn new(subject: RdfTerm, predicate: impl Into<String>, object: RdfTerm) -> Self {
        RdfTriple {
            subject,
            predicate: predicate.into(),
            object,
        }
    }
}

impl fmt::Display for RdfTerm {
    /// N-Triples / SPARQL term syntax.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RdfTerm::Iri(iri) => write!(f, "<{iri}>"),
            RdfTerm::BlankNode(id) => write!(f, "_:{id}"),
            RdfTerm::Literal(lit) => write!(f, "{lit}"),
        }
    }
}

impl fmt::Display for Literal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("\"")?;
        write_escaped(f, &self.lexical)?;
        f.write_str("\"")?;
        match &self.kind {
            LiteralKind::Typed(dt) => write!(f, "^^<{dt}>"),
            LiteralKind::Lang(tag) => write!(f, "@{tag}"),
        }
    }
}

impl fmt::Display for RdfTriple {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} <{}> {} .", self.subject, self.predicate, self.object)
    }
}

pub(crate) fn write_escaped(out: &mut impl fmt::Write, s: &str) -> fmt::Result {
    for c in s.chars() {
        match c {
            '"' => out.write_str("\\\"")?,
            '\\' => out.write_str("\\\\")?,
            '\n' => out.write_str("\\n")?,
            '\r' => out.write_str("\\r")?,
            '\t' => out.write_str("\\t")?,
            '\u{08}' => out.write_str("\\b")?,
            '\u{0C}' => out.write_str("\\f")?,
            c if (c as u32) < 0x20 || c == '\u{7F}' => write!(out, "\\u{:04X}", c as u32)?,
            c => out.write_char(c)?,
        }
    }
    Ok(())
}

/// Shortest round-trip form, always with a fractional part or exponent.
pub fn canonical_double(v: f64) -> String {
    if v.is_nan() {
        "NaN".into()
    } else if v.is_infinite() {
        if v > 0.0 { "INF".into() } else { "-INF".into() }
    } else if v == 0.0 {
        // collapse -0.0
        "0.0".into()
    } else {
        format!("{v:?}")
    }
}

pub fn parse_double(lex: &str) -> Option<f64> {
    match lex {
        "INF" | "+INF" => Some(f64::INFINITY),
        "-INF" => Some(f64::NEG_INFINITY),
        "NaN" => Some(f64::NAN),
        _ => {
            let ok = !lex.is_empty()
                && lex
                    .chars()
                    .all(|c| c.is_ascii_digit() || matches!(c, '+' | '-' | '.' | 'e' | 'E'));
            if ok { lex.parse().ok() } else { None }
        }
    }
}

pub fn canonical_date_time(v: DateTime<Utc>) -> String {
    v.format("%Y-%m-%dT%H:%M:%SZ").to_string()
}

/// Parses an `xsd:dateTime` lexical form. Values without a timezone are
/// taken as UTC; a bare date is accepted as midnight UTC.
pub fn parse_date_time(lex: &str) -> Option<DateTime<Utc>> {
    let lex = lex.trim();
    if let Ok(dt) = DateTime::parse_from_rfc3339(lex) {
        return Some(dt.with_timezone(&Utc));
    }
    if let Ok(naive) = NaiveDateTime::parse_from_str(lex, "%Y-%m-%dT%H:%M:%S%.f") {
        return Some(naive.and_utc());
    }
    if let Ok(date) = NaiveDate::parse_from_str(lex, "%Y-%m-%d") {
        return date.and_hms_opt(0, 0, 0).map(|n| n.and_utc());
    }
    None
}
