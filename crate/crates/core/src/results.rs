//! SPARQL 1.1 query results: JSON, XML, CSV, TSV and an HTML table, plus
//! readers for the JSON and XML forms returned by remote endpoints.

use std::fmt;

use quick_xml::escape::{escape, resolve_xml_entity};
use quick_xml::events::Event;
use quick_xml::Reader;
use serde_json::{json, Map, Value as Json};
use thiserror::Error;

use crate::eval::{Solution, SolutionTable};
use crate::rdf::{vocab, Literal, LiteralKind, RdfTerm};

const RESULTS_NS: &str = "http://www.w3.org/2005/sparql-results#";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ResultFormat {
    Json,
    Xml,
    Csv,
    Tsv,
    Html,
}

impl ResultFormat {
    pub const ALL: [ResultFormat; 5] = [
        ResultFormat::Html,
        ResultFormat::Xml,
        ResultFormat::Json,
        ResultFormat::Csv,
        ResultFormat::Tsv,
    ];

    /// Accepts short names (`json`) and media types.
    pub fn parse(name: &str) -> Option<Self> {
        let name = name.trim().to_ascii_lowercase();
        Self::ALL
            .into_iter()
            .find(|f| f.name() == name || f.media_type() == name)
            .or(match name.as_str() {
                "application/json" | "sparql-json" => Some(ResultFormat::Json),
                "application/xml" | "text/xml" | "sparql-xml" => Some(ResultFormat::Xml),
                "text/tsv" => Some(ResultFormat::Tsv),
                _ => None,
            })
    }

    pub fn name(self) -> &'static str {
        match self {
            ResultFormat::Json => "json",
            ResultFormat::Xml => "xml",
            ResultFormat::Csv => "csv",
            ResultFormat::Tsv => "tsv",
            ResultFormat::Html => "html",
        }
    }

    pub fn media_type(self) -> &'static str {
        match self {
            ResultFormat::Json => "application/sparql-results+json",
            ResultFormat::Xml => "application/sparql-results+xml",
            ResultFormat::Csv => "text/csv",
            ResultFormat::Tsv => "text/tab-separated-values",
            ResultFormat::Html => "text/html",
        }
    }

    /// First supported media type of an Accept header, honouring q-values.
    /// `None` when nothing listed is supported; wildcards yield `default`.
    pub fn from_accept(header: &str, default: ResultFormat) -> Option<Self> {
        let mut ranges: Vec<(f32, usize, &str)> = header
            .split(',')
            .enumerate()
            .filter_map(|(i, part)| {
                let mut pieces = part.split(';');
                let media = pieces.next()?.trim();
                let q = pieces
                    .filter_map(|p| p.trim().strip_prefix("q="))
                    .find_map(|v| v.trim().parse::<f32>().ok())
                    .unwrap_or(1.0);
                (!media.is_empty() && q > 0.0).then_some((q, i, media))
            })
            .collect();
        ranges.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));
        ranges.into_iter().find_map(|(_, _, media)| match media {
            "*/*" | "application/*" | "text/*" => Some(default),
            m => ResultFormat::parse(m),
        })
    }
}

impl fmt::Display for ResultFormat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Error)]
pub enum ResultsError {
    #[error("malformed JSON results at line {line}, column {column}: {message}")]
    Json { line: usize, column: usize, message: String },
    #[error("malformed XML results at byte {offset}: {message}")]
    Xml { offset: u64, message: String },
    #[error("{0} results cannot be parsed")]
    Unparseable(ResultFormat),
}

pub fn format_results(table: &SolutionTable, format: ResultFormat) -> String {
    match format {
        ResultFormat::Json => to_json(table),
        ResultFormat::Xml => to_xml(table),
        ResultFormat::Csv => to_delimited(table, b',', false),
        ResultFormat::Tsv => to_delimited(table, b'\t', true),
        ResultFormat::Html => to_html(table),
    }
}

fn to_json(table: &SolutionTable) -> String {
    let bindings: Vec<Json> = table
        .solutions
        .iter()
        .map(|s| {
            let mut obj = Map::new();
            for v in &table.variables {
                if let Some(t) = s.get(v) {
                    obj.insert(v.clone(), json_term(t));
                }
            }
            Json::Object(obj)
        })
        .collect();
    json!({"head": {"vars": table.variables}, "results": {"bindings": bindings}}).to_string()
}

fn json_term(t: &RdfTerm) -> Json {
    match t {
        RdfTerm::Iri(i) => json!({"type": "uri", "value": i}),
        RdfTerm::BlankNode(b) => json!({"type": "bnode", "value": b}),
        RdfTerm::Literal(l) => match &l.kind {
            LiteralKind::Lang(tag) => json!({"type": "literal", "value": l.lexical, "xml:lang": tag}),
            LiteralKind::Typed(dt) if dt == vocab::XSD_STRING => json!({"type": "literal", "value": l.lexical}),
            LiteralKind::Typed(dt) => json!({"type": "literal", "value": l.lexical, "datatype": dt}),
        },
    }
}

fn to_xml(table: &SolutionTable) -> String {
    let mut out = format!("<?xml version=\"1.0\"?>\n<sparql xmlns=\"{RESULTS_NS}\">\n  <head>\n");
    for v in &table.variables {
        out.push_str(&format!("    <variable name=\"{}\"/>\n", escape(v.as_str())));
    }
    out.push_str("  </head>\n  <results>\n");
    for s in &table.solutions {
        out.push_str("    <result>\n");
        for v in &table.variables {
            let Some(t) = s.get(v) else { continue };
            let value = match t {
                RdfTerm::Iri(i) => format!("<uri>{}</uri>", escape(i.as_str())),
                RdfTerm::BlankNode(b) => format!("<bnode>{}</bnode>", escape(b.as_str())),
                RdfTerm::Literal(l) => {
                    let attr = match &l.kind {
                        LiteralKind::Lang(tag) => format!(" xml:lang=\"{}\"", escape(tag.as_str())),
                        LiteralKind::Typed(dt) if dt == vocab::XSD_STRING => String::new(),
                        LiteralKind::Typed(dt) => format!(" datatype=\"{}\"", escape(dt.as_str())),
                    };
                    format!("<literal{attr}>{}</literal>", xml_text(&l.lexical))
                }
            };
            out.push_str(&format!("      <binding name=\"{}\">{value}</binding>\n", escape(v.as_str())));
        }
        out.push_str("    </result>\n");
    }
    out.push_str("  </results>\n</sparql>\n");
    out
}

// readers normalize raw carriage returns away
fn xml_text(s: &str) -> String {
    escape(s).replace('\r', "&#13;")
}

fn to_delimited(table: &SolutionTable, delimiter: u8, sparql_terms: bool) -> String {
    let mut builder = csv::WriterBuilder::new();
    builder.delimiter(delimiter).terminator(csv::Terminator::CRLF);
    if sparql_terms {
        // TSV cells are already escaped N-Triples terms
        builder.quote_style(csv::QuoteStyle::Never).terminator(csv::Terminator::Any(b'\n'));
    }
    let mut w = builder.from_writer(Vec::new());
    let header: Vec<String> = table
        .variables
        .iter()
        .map(|v| if sparql_terms { format!("?{v}") } else { v.clone() })
        .collect();
    // writes to a Vec cannot fail
    w.write_record(&header).expect("in-memory write");
    for s in &table.solutions {
        let row = table.variables.iter().map(|v| match s.get(v) {
            None => String::new(),
            Some(t) if sparql_terms => t.to_string(),
            Some(RdfTerm::Iri(i)) => i.clone(),
            Some(RdfTerm::BlankNode(b)) => format!("_:{b}"),
            Some(RdfTerm::Literal(l)) => l.lexical.clone(),
        });
        w.write_record(row).expect("in-memory write");
    }
    let bytes = w.into_inner().expect("in-memory flush");
    String::from_utf8(bytes).expect("input was UTF-8")
}

fn to_html(table: &SolutionTable) -> String {
    let mut out = String::from(
        "<!DOCTYPE html>\n<html>\n<head><meta charset=\"utf-8\"><title>SPARQL results</title></head>\n<body>\n<table class=\"sparql-results\">\n<thead><tr>",
    );
    for v in &table.variables {
        out.push_str(&format!("<th>{}</th>", escape(v.as_str())));
    }
    out.push_str("</tr></thead>\n<tbody>\n");
    for s in &table.solutions {
        out.push_str("<tr>");
        for v in &table.variables {
            match s.get(v) {
                Some(t) => out.push_str(&format!("<td>{}</td>", escape(t.to_string()))),
                None => out.push_str("<td></td>"),
            }
        }
        out.push_str("</tr>\n");
    }
    out.push_str("</tbody>\n</table>\n</body>\n</html>\n");
    out
}

pub fn parse_results(format: ResultFormat, payload: &str) -> Result<SolutionTable, ResultsError> {
    match format {
        ResultFormat::Json => parse_json(payload),
        ResultFormat::Xml => parse_xml(payload),
        other => Err(ResultsError::Unparseable(other)),
    }
}

fn parse_json(payload: &str) -> Result<SolutionTable, ResultsError> {
    let doc: Json = serde_json::from_str(payload).map_err(|e| ResultsError::Json {
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    })?;
    let shape = |message: &str| ResultsError::Json {
        line: 0,
        column: 0,
        message: message.to_string(),
    };
    let vars = doc
        .pointer("/head/vars")
        .and_then(Json::as_array)
        .ok_or_else(|| shape("missing head.vars"))?;
    let variables = vars
        .iter()
        .map(|v| v.as_str().map(str::to_string).ok_or_else(|| shape("variable names must be strings")))
        .collect::<Result<Vec<_>, _>>()?;
    let bindings = doc
        .pointer("/results/bindings")
        .and_then(Json::as_array)
        .ok_or_else(|| shape("missing results.bindings"))?;
    let mut solutions = Vec::with_capacity(bindings.len());
    for (i, b) in bindings.iter().enumerate() {
        let obj = b
            .as_object()
            .ok_or_else(|| shape(&format!("binding {i} is not an object")))?;
        let mut s = Solution::new();
        for (var, term) in obj {
            let t = json_to_term(term).map_err(|m| shape(&format!("binding {i}, variable {var}: {m}")))?;
            s.insert(var.clone(), t);
        }
        solutions.push(s);
    }
    Ok(SolutionTable::new(variables, solutions))
}

fn json_to_term(term: &Json) -> Result<RdfTerm, String> {
    let field = |k: &str| term.get(k).and_then(Json::as_str);
    let value = field("value").ok_or("missing value")?;
    match field("type").ok_or("missing type")? {
        "uri" => Ok(RdfTerm::iri(value)),
        "bnode" => Ok(RdfTerm::BlankNode(value.to_string())),
        "literal" | "typed-literal" => Ok(RdfTerm::Literal(match (field("xml:lang"), field("datatype")) {
            (Some(tag), _) => Literal::lang(value, tag),
            (None, Some(dt)) => Literal::typed(value, dt),
            (None, None) => Literal::string(value),
        })),
        other => Err(format!("unknown term type {other:?}")),
    }
}

enum XmlTerm {
    Uri,
    Bnode,
    Literal { lang: Option<String>, datatype: Option<String> },
}

fn parse_xml(payload: &str) -> Result<SolutionTable, ResultsError> {
    let mut reader = Reader::from_str(payload);
    let err = |reader: &Reader<&[u8]>, message: String| ResultsError::Xml {
        offset: reader.buffer_position(),
        message,
    };
    let mut variables = Vec::new();
    let mut solutions = Vec::new();
    let mut current: Option<Solution> = None;
    let mut binding: Option<String> = None;
    let mut term: Option<XmlTerm> = None;
    let mut text = String::new();
    let mut saw_root = false;
    loop {
        let event = reader.read_event().map_err(|e| err(&reader, e.to_string()))?;
        match event {
            Event::Start(ref e) | Event::Empty(ref e) => {
                let empty = matches!(event, Event::Empty(_));
                let attr = |name: &str| -> Result<Option<String>, String> {
                    match e.try_get_attribute(name).map_err(|x| x.to_string())? {
                        Some(a) => Ok(Some(a.unescape_value().map_err(|x| x.to_string())?.into_owned())),
                        None => Ok(None),
                    }
                };
                match e.local_name().as_ref() {
                    b"sparql" => saw_root = true,
                    b"variable" => {
                        let name = attr("name").map_err(|m| err(&reader, m))?;
                        variables.push(name.ok_or_else(|| err(&reader, "variable without name".into()))?);
                    }
                    b"result" => current = Some(Solution::new()),
                    b"binding" => {
                        let name = attr("name").map_err(|m| err(&reader, m))?;
                        binding = Some(name.ok_or_else(|| err(&reader, "binding without name".into()))?);
                    }
                    b"uri" => term = Some(XmlTerm::Uri),
                    b"bnode" => term = Some(XmlTerm::Bnode),
                    b"literal" => {
                        let lang = attr("xml:lang").map_err(|m| err(&reader, m))?;
                        let datatype = attr("datatype").map_err(|m| err(&reader, m))?;
                        term = Some(XmlTerm::Literal { lang, datatype });
                    }
                    _ => {}
                }
                if empty {
                    match e.local_name().as_ref() {
                        b"result" => solutions.extend(current.take()),
                        b"uri" | b"bnode" | b"literal" => {
                            finish_term(&mut current, &binding, term.take(), std::mem::take(&mut text))
                                .map_err(|m| err(&reader, m))?;
                        }
                        _ => {}
                    }
                }
            }
            Event::Text(e) if term.is_some() => {
                text.push_str(&e.xml_content().map_err(|x| err(&reader, x.to_string()))?);
            }
            Event::CData(e) if term.is_some() => {
                text.push_str(&e.decode().map_err(|x| err(&reader, x.to_string()))?);
            }
            Event::GeneralRef(e) if term.is_some() => {
                if let Some(c) = e.resolve_char_ref().map_err(|x| err(&reader, x.to_string()))? {
                    text.push(c);
                } else {
                    let name = e.decode().map_err(|x| err(&reader, x.to_string()))?;
                    let resolved =
                        resolve_xml_entity(&name).ok_or_else(|| err(&reader, format!("unknown entity &{name};")))?;
                    text.push_str(resolved);
                }
            }
            Event::End(e) => match e.local_name().as_ref() {
                b"result" => solutions.extend(current.take()),
                b"binding" => binding = None,
                b"uri" | b"bnode" | b"literal" => {
                    finish_term(&mut current, &binding, term.take(), std::mem::take(&mut text))
                        .map_err(|m| err(&reader, m))?;
                }
                _ => {}
            },
            Event::Eof => break,
            _ => {}
        }
    }
    if !saw_root {
        return Err(ResultsError::Xml {
            offset: 0,
            message: "missing <sparql> root element".into(),
        });
    }
    Ok(SolutionTable::new(variables, solutions))
}

fn finish_term(
    current: &mut Option<Solution>,
    binding: &Option<String>,
    term: Option<XmlTerm>,
    text: String,
) -> Result<(), String> {
    let (Some(sol), Some(name), Some(kind)) = (current.as_mut(), binding, term) else {
        return Err("term outside a <binding>".into());
    };
    let t = match kind {
        XmlTerm::Uri => RdfTerm::Iri(text),
        XmlTerm::Bnode => RdfTerm::BlankNode(text),
        XmlTerm::Literal { lang: Some(tag), .. } => RdfTerm::Literal(Literal::lang(text, tag)),
        XmlTerm::Literal { datatype: Some(dt), .. } => RdfTerm::Literal(Literal::typed(text, dt)),
        XmlTerm::Literal { .. } => RdfTerm::Literal(Literal::string(text)),
    };
    sol.insert(name.clone(), t);
    Ok(())
}
