use super::ParseError;

#[derive(Debug, Clone, PartialEq)]
pub(super) enum Tok {
    Iri(String),
    PName(String, String),
    Var(String),
    /// String literal body, already unescaped.
    Str(String),
    LangTag(String),
    /// Unsigned numeric literal: lexical form and XSD datatype.
    Number(String, &'static str),
    Word(String),
    Punct(&'static str),
    Eof,
}

#[derive(Debug, Clone)]
pub(super) struct Token {
    pub tok: Tok,
    pub line: usize,
    pub column: usize,
}

const PUNCTS: [&str; 25] = [
    "^^", "&&", "||", "!=", "<=", ">=", "{", "}", "(", ")", "[", "]", ".", ";", ",", "*", "=", "<", ">", "!", "+",
    "-", "/", "|", "^",
];

pub(super) fn tokenize(src: &str) -> Result<Vec<Token>, ParseError> {
    let mut lx = Lexer {
        src,
        pos: 0,
        line: 1,
        line_start: 0,
    };
    let mut out = Vec::new();
    loop {
        lx.skip_trivia();
        let (line, column) = lx.position();
        let tok = lx.next_token()?;
        let done = tok == Tok::Eof;
        out.push(Token { tok, line, column });
        if done {
            return Ok(out);
        }
    }
}

struct Lexer<'a> {
    src: &'a str,
    pos: usize,
    line: usize,
    line_start: usize,
}

impl Lexer<'_> {
    fn rest(&self) -> &str {
        &self.src[self.pos..]
    }

    fn peek(&self) -> Option<char> {
        self.rest().chars().next()
    }

    fn peek_at(&self, n: usize) -> Option<char> {
        self.rest().chars().nth(n)
    }

    fn bump(&mut self) -> Option<char> {
        let c = self.peek()?;
        self.pos += c.len_utf8();
        if c == '\n' {
            self.line += 1;
            self.line_start = self.pos;
        }
        Some(c)
    }

    fn position(&self) -> (usize, usize) {
        (self.line, self.src[self.line_start..self.pos].chars().count() + 1)
    }

    fn error(&self, message: impl Into<String>) -> ParseError {
        let (line, column) = self.position();
        ParseError::Syntax {
            line,
            column,
            message: message.into(),
        }
    }

    fn skip_trivia(&mut self) {
        while let Some(c) = self.peek() {
            if c.is_whitespace() {
                self.bump();
            } else if c == '#' {
                while !matches!(self.peek(), None | Some('\n')) {
                    self.bump();
                }
            } else {
                break;
            }
        }
    }

    fn take_while(&mut self, f: impl Fn(char) -> bool) -> String {
        let start = self.pos;
        while matches!(self.peek(), Some(c) if f(c)) {
            self.bump();
        }
        self.src[start..self.pos].to_string()
    }

    fn next_token(&mut self) -> Result<Tok, ParseError> {
        let Some(c) = self.peek() else {
            return Ok(Tok::Eof);
        };
        match c {
            '<' => {
                if let Some(iri) = self.try_iri() {
                    return Ok(Tok::Iri(iri));
                }
            }
            '?' | '$' => {
                self.bump();
                let name = self.take_while(|c| c.is_alphanumeric() || c == '_');
                if name.is_empty() {
                    return Err(self.error("expected a variable name"));
                }
                return Ok(Tok::Var(name));
            }
            '"' | '\'' => return self.string(c).map(Tok::Str),
            '@' => {
                self.bump();
                let tag = self.take_while(|c| c.is_ascii_alphanumeric() || c == '-');
                if tag.is_empty() {
                    return Err(self.error("expected a language tag"));
                }
                return Ok(Tok::LangTag(tag));
            }
            '0'..='9' => return Ok(self.number()),
            '.' if matches!(self.peek_at(1), Some('0'..='9')) => return Ok(self.number()),
            _ => {}
        }
        if c.is_alphabetic() || c == '_' || c == ':' {
            let word = self.take_while(|c| c.is_alphanumeric() || matches!(c, '_' | '-' | '.'));
            if self.peek() == Some(':') && !word.ends_with('.') {
                self.bump();
                let local = self.local_name()?;
                return Ok(Tok::PName(word, local));
            }
            // a trailing '.' ends the statement, not the word
            let trimmed = word.trim_end_matches('.');
            self.pos -= word.len() - trimmed.len();
            if trimmed.is_empty() {
                return Err(self.error(format!("unexpected character '{c}'")));
            }
            return Ok(Tok::Word(trimmed.to_string()));
        }
        for p in PUNCTS {
            if self.rest().starts_with(p) {
                for _ in 0..p.len() {
                    self.bump();
                }
                return Ok(Tok::Punct(p));
            }
        }
        Err(self.error(format!("unexpected character '{c}'")))
    }

    /// `<...>` is an IRI when it closes before any character that IRIs
    /// exclude; otherwise the `<` is an operator.
    fn try_iri(&mut self) -> Option<String> {
        let body = &self.rest()[1..];
        let end = body.find(|c: char| c == '>' || c.is_whitespace() || matches!(c, '<' | '"' | '{' | '}' | '|' | '^' | '`' | '\\'))?;
        if body.as_bytes()[end] != b'>' {
            return None;
        }
        let iri = body[..end].to_string();
        // no line breaks inside, so the column bookkeeping stays valid
        self.pos += end + 2;
        Some(iri)
    }

    fn local_name(&mut self) -> Result<String, ParseError> {
        let mut out = String::new();
        loop {
            match self.peek() {
                Some(c) if c.is_alphanumeric() || matches!(c, '_' | '-' | ':') => {
                    out.push(c);
                    self.bump();
                }
                Some('.') if matches!(self.peek_at(1), Some(c) if c.is_alphanumeric() || matches!(c, '_' | '-' | ':' | '%' | '.')) =>
                {
                    out.push('.');
                    self.bump();
                }
                Some('%') => {
                    let hex: String = self.rest().chars().skip(1).take(2).collect();
                    if hex.len() != 2 || !hex.chars().all(|c| c.is_ascii_hexdigit()) {
                        return Err(self.error("invalid percent escape in prefixed name"));
                    }
                    out.push('%');
                    out.push_str(&hex);
                    for _ in 0..3 {
                        self.bump();
                    }
                }
                Some('\\') => {
                    self.bump();
                    match self.bump() {
                        Some(c) if "_~.-!$&'()*+,;=/?#@%".contains(c) => out.push(c),
                        _ => return Err(self.error("invalid escape in prefixed name")),
                    }
                }
                _ => break,
            }
        }
        // a final '.' terminates the triple
        while out.ends_with('.') {
            out.pop();
            self.pos -= 1;
        }
        Ok(out)
    }

    fn number(&mut self) -> Tok {
        let int = self.take_while(|c| c.is_ascii_digit());
        let mut lexical = int;
        let mut datatype = crate::rdf::vocab::XSD_INTEGER;
        if self.peek() == Some('.') && matches!(self.peek_at(1), Some('0'..='9')) {
            self.bump();
            lexical.push('.');
            lexical.push_str(&self.take_while(|c| c.is_ascii_digit()));
            datatype = crate::rdf::vocab::XSD_DECIMAL;
        }
        if matches!(self.peek(), Some('e' | 'E')) {
            let save = (self.pos, self.line, self.line_start);
            let mut exp = String::from("e");
            self.bump();
            if let Some(sign @ ('+' | '-')) = self.peek() {
                exp.push(sign);
                self.bump();
            }
            let digits = self.take_while(|c| c.is_ascii_digit());
            if digits.is_empty() {
                (self.pos, self.line, self.line_start) = save;
            } else {
                lexical.push_str(&exp);
                lexical.push_str(&digits);
                datatype = crate::rdf::vocab::XSD_DOUBLE;
            }
        }
        Tok::Number(lexical, datatype)
    }

    fn string(&mut self, quote: char) -> Result<String, ParseError> {
        let long = self.rest().starts_with(&format!("{quote}{quote}{quote}"));
        let delim_len = if long { 3 } else { 1 };
        for _ in 0..delim_len {
            self.bump();
        }
        let mut out = String::new();
        loop {
            let Some(c) = self.peek() else {
                return Err(self.error("unterminated string literal"));
            };
            if c == quote {
                if !long {
                    self.bump();
                    return Ok(out);
                }
                if self.rest().starts_with(&format!("{quote}{quote}{quote}"))
                    && self.peek_at(3) != Some(quote)
                {
                    for _ in 0..3 {
                        self.bump();
                    }
                    return Ok(out);
                }
                out.push(c);
                self.bump();
                continue;
            }
            if !long && (c == '\n' || c == '\r') {
                return Err(self.error("line break in string literal"));
            }
            self.bump();
            if c != '\\' {
                out.push(c);
                continue;
            }
            let esc = self.bump().ok_or_else(|| self.error("unterminated escape"))?;
            match esc {
                't' => out.push('\t'),
                'n' => out.push('\n'),
                'r' => out.push('\r'),
                'b' => out.push('\u{08}'),
                'f' => out.push('\u{0C}'),
                '"' | '\'' | '\\' => out.push(esc),
                'u' | 'U' => {
                    let n = if esc == 'u' { 4 } else { 8 };
                    let hex: String = self.rest().chars().take(n).collect();
                    let ch = u32::from_str_radix(&hex, 16)
                        .ok()
                        .filter(|_| hex.len() == n)
                        .and_then(char::from_u32)
                        .ok_or_else(|| self.error("invalid unicode escape"))?;
                    for _ in 0..n {
                        self.bump();
                    }
                    out.push(ch);
                }
                other => return Err(self.error(format!("invalid escape '\\{other}'"))),
            }
        }
    }
}
