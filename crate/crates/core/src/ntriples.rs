//! N-Triples reader and writer.
//!
//! Serialization writes one `<s> <p> <o> .` line per triple with every
//! literal carrying an explicit datatype or language tag, so plain
//! `"x"` and `"x"^^xsd:string` read back as the same term.

use std::collections::BTreeSet;

use thiserror::Error;

use crate::rdf::{Literal, RdfTerm, RdfTriple};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
#[error("line {line}, column {column}: {message}")]
pub struct NTriplesError {
    pub line: usize,
    pub column: usize,
    pub message: String,
}

/// Serializes triples one per line, in the iteration order given.
pub fn serialize_ntriples<'a>(triples: impl IntoIterator<Item = &'a RdfTriple>) -> String {
    let mut out = String::new();
    for t in triples {
        out.push_str(&t.to_string());
        out.push('\n');
    }
    out
}

pub fn parse_ntriples(text: &str) -> Result<BTreeSet<RdfTriple>, NTriplesError> {
    let mut set = BTreeSet::new();
    for (idx, line) in text.lines().enumerate() {
        if let Some(t) = parse_line(line, idx + 1)? {
            set.insert(t);
        }
    }
    Ok(set)
}

/// Parses a single line; blank lines and comments yield `None`.
pub fn parse_line(line: &str, line_no: usize) -> Result<Option<RdfTriple>, NTriplesError> {
    let mut cur = TermCursor::new(line, line_no);
    cur.skip_ws();
    if cur.at_end() || cur.peek() == Some('#') {
        return Ok(None);
    }
    let subject = cur.term()?;
    if matches!(subject, RdfTerm::Literal(_)) {
        return Err(cur.error_at(0, "literal in subject position"));
    }
    cur.skip_ws();
    let predicate = match cur.term()? {
        RdfTerm::Iri(iri) => iri,
        _ => return Err(cur.error("predicate must be an IRI")),
    };
    cur.skip_ws();
    let object = cur.term()?;
    cur.skip_ws();
    cur.expect('.')?;
    cur.skip_ws();
    if !cur.at_end() && cur.peek() != Some('#') {
        return Err(cur.error("trailing content after '.'"));
    }
    Ok(Some(RdfTriple {
        subject,
        predicate,
        object,
    }))
}

/// Cursor over one line of N-Triples-style terms.
pub struct TermCursor<'a> {
    src: &'a str,
    pos: usize,
    line: usize,
}

impl<'a> TermCursor<'a> {
    pub fn new(src: &'a str, line: usize) -> Self {
        TermCursor { src, pos: 0, line }
    }

    pub fn rest(&self) -> &'a str {
        &self.src[self.pos..]
    }

    pub fn at_end(&self) -> bool {
        self.pos >= self.src.len()
    }

    pub fn peek(&self) -> Option<char> {
        self.rest().chars().next()
    }

    fn bump(&mut self) -> Option<char> {
        let c = self.peek()?;
        self.pos += c.len_utf8();
        Some(c)
    }

    pub fn skip_ws(&mut self) {
        while matches!(self.peek(), Some(' ' | '\t' | '\r')) {
            self.pos += 1;
        }
    }

    pub fn error(&self, message: impl Into<String>) -> NTriplesError {
        self.error_at(self.pos, message)
    }

    fn error_at(&self, byte: usize, message: impl Into<String>) -> NTriplesError {
        NTriplesError {
            line: self.line,
            column: self.src[..byte.min(self.src.len())].chars().count() + 1,
            message: message.into(),
        }
    }

    pub fn expect(&mut self, c: char) -> Result<(), NTriplesError> {
        if self.peek() == Some(c) {
            self.pos += c.len_utf8();
            Ok(())
        } else {
            Err(self.error(format!("expected '{c}'")))
        }
    }

    pub fn term(&mut self) -> Result<RdfTerm, NTriplesError> {
        match self.peek() {
            Some('<') => Ok(RdfTerm::Iri(self.iri()?)),
            Some('"') => Ok(RdfTerm::Literal(self.literal()?)),
            Some('_') => {
                if !self.rest().starts_with("_:") {
                    return Err(self.error("expected '_:'"));
                }
                self.pos += 2;
                let start = self.pos;
                while matches!(self.peek(), Some(c) if c.is_alphanumeric() || matches!(c, '_' | '-' | '.'))
                {
                    self.pos += 1;
                }
                let label = self.src[start..self.pos].trim_end_matches('.');
                self.pos = start + label.len();
                if label.is_empty() {
                    return Err(self.error("empty blank node label"));
                }
                Ok(RdfTerm::BlankNode(label.to_string()))
            }
            Some(_) => Err(self.error("expected IRI, literal or blank node")),
            None => Err(self.error("unexpected end of line")),
        }
    }

    fn iri(&mut self) -> Result<String, NTriplesError> {
        self.expect('<')?;
        let mut out = String::new();
        loop {
            match self.bump() {
                Some('>') => break,
                Some('\\') => out.push(self.unicode_escape()?),
                Some(c) if c.is_whitespace() || matches!(c, '<' | '"' | '{' | '}' | '|' | '^' | '`') => {
                    return Err(self.error(format!("invalid character {c:?} in IRI")));
                }
                Some(c) => out.push(c),
                None => return Err(self.error("unterminated IRI")),
            }
        }
        if !out.contains(':') {
            return Err(self.error(format!("relative IRI <{out}>")));
        }
        Ok(out)
    }

    fn unicode_escape(&mut self) -> Result<char, NTriplesError> {
        let len = match self.bump() {
            Some('u') => 4,
            Some('U') => 8,
            _ => return Err(self.error("invalid escape in IRI")),
        };
        self.hex_char(len)
    }

    fn hex_char(&mut self, len: usize) -> Result<char, NTriplesError> {
        let digits = self.rest().get(..len).ok_or_else(|| self.error("short unicode escape"))?;
        let code = u32::from_str_radix(digits, 16).map_err(|_| self.error("bad unicode escape"))?;
        self.pos += len;
        char::from_u32(code).ok_or_else(|| self.error("invalid code point"))
    }

    fn literal(&mut self) -> Result<Literal, NTriplesError> {
        self.expect('"')?;
        let mut lexical = String::new();
        loop {
            match self.bump() {
                Some('"') => break,
                Some('\\') => {
                    let c = match self.bump() {
                        Some('t') => '\t',
                        Some('b') => '\u{08}',
                        Some('n') => '\n',
                        Some('r') => '\r',
                        Some('f') => '\u{0C}',
                        Some('"') => '"',
                        Some('\'') => '\'',
                        Some('\\') => '\\',
                        Some('u') => self.hex_char(4)?,
                        Some('U') => self.hex_char(8)?,
                        _ => return Err(self.error("invalid string escape")),
                    };
                    lexical.push(c);
                }
                Some('\n') | None => return Err(self.error("unterminated string literal")),
                Some(c) => lexical.push(c),
            }
        }
        if self.rest().starts_with("^^") {
            self.pos += 2;
            let dt = self.iri()?;
            Ok(Literal::typed(lexical, dt))
        } else if self.peek() == Some('@') {
            self.pos += 1;
            let start = self.pos;
            while matches!(self.peek(), Some(c) if c.is_ascii_alphanumeric() || c == '-') {
                self.pos += 1;
            }
            let tag = &self.src[start..self.pos];
            if tag.is_empty() {
                return Err(self.error("empty language tag"));
            }
            Ok(Literal::lang(lexical, tag))
        } else {
            Ok(Literal::string(lexical))
        }
    }
}
