use super::ast::*;
use super::lexer::{tokenize, Tok, Token};
use super::ParseError;
use crate::rdf::{vocab, Literal, RdfTerm};

/// Keywords of SPARQL features outside the supported subset.
const UNSUPPORTED: [&str; 20] = [
    "OPTIONAL", "UNION", "MINUS", "BIND", "VALUES", "GRAPH", "ORDER", "LIMIT", "OFFSET", "GROUP", "HAVING",
    "CONSTRUCT", "ASK", "DESCRIBE", "REDUCED", "FROM", "BASE", "INSERT", "DELETE", "EXISTS",
];

pub fn parse_query(text: &str) -> Result<Query, ParseError> {
    let tokens = tokenize(text)?;
    let mut p = Parser {
        tokens,
        pos: 0,
        prefixes: Vec::new(),
    };
    p.query()
}

struct Parser {
    tokens: Vec<Token>,
    pos: usize,
    prefixes: Vec<(String, String)>,
}

fn keyword_is(tok: &Tok, kw: &str) -> bool {
    matches!(tok, Tok::Word(w) if w.eq_ignore_ascii_case(kw))
}

impl Parser {
    fn peek(&self) -> &Tok {
        &self.tokens[self.pos].tok
    }

    fn peek_at(&self, n: usize) -> &Tok {
        let i = (self.pos + n).min(self.tokens.len() - 1);
        &self.tokens[i].tok
    }

    fn next(&mut self) -> Tok {
        let t = self.tokens[self.pos].tok.clone();
        if self.pos < self.tokens.len() - 1 {
            self.pos += 1;
        }
        t
    }

    fn here(&self) -> (usize, usize) {
        let t = &self.tokens[self.pos];
        (t.line, t.column)
    }

    fn error(&self, message: impl Into<String>) -> ParseError {
        let (line, column) = self.here();
        ParseError::Syntax {
            line,
            column,
            message: message.into(),
        }
    }

    fn unsupported(&self, feature: impl Into<String>) -> ParseError {
        let (line, column) = self.here();
        ParseError::Unsupported {
            line,
            column,
            feature: feature.into(),
        }
    }

    fn describe(tok: &Tok) -> String {
        match tok {
            Tok::Iri(i) => format!("<{i}>"),
            Tok::PName(p, l) => format!("{p}:{l}"),
            Tok::Var(v) => format!("?{v}"),
            Tok::Str(_) => "string literal".into(),
            Tok::LangTag(t) => format!("@{t}"),
            Tok::Number(n, _) => n.clone(),
            Tok::Word(w) => format!("'{w}'"),
            Tok::Punct(p) => format!("'{p}'"),
            Tok::Eof => "end of query".into(),
        }
    }

    fn expected(&self, what: &str) -> ParseError {
        self.error(format!("expected {what}, found {}", Self::describe(self.peek())))
    }

    fn check_unsupported_keyword(&self) -> Result<(), ParseError> {
        if let Tok::Word(w) = self.peek() {
            let upper = w.to_ascii_uppercase();
            if UNSUPPORTED.contains(&upper.as_str()) {
                return Err(self.unsupported(upper));
            }
        }
        Ok(())
    }

    fn eat_punct(&mut self, p: &str) -> bool {
        if matches!(self.peek(), Tok::Punct(q) if *q == p) {
            self.next();
            true
        } else {
            false
        }
    }

    fn expect_punct(&mut self, p: &str) -> Result<(), ParseError> {
        if self.eat_punct(p) {
            Ok(())
        } else {
            Err(self.expected(&format!("'{p}'")))
        }
    }

    fn eat_keyword(&mut self, kw: &str) -> bool {
        if keyword_is(self.peek(), kw) {
            self.next();
            true
        } else {
            false
        }
    }

    fn resolve(&self, prefix: &str, local: &str) -> Result<String, ParseError> {
        match self.prefixes.iter().rev().find(|(p, _)| p == prefix) {
            Some((_, iri)) => Ok(format!("{iri}{local}")),
            None => {
                let (line, column) = self.here();
                Err(ParseError::UnknownPrefix {
                    line,
                    column,
                    prefix: prefix.to_string(),
                })
            }
        }
    }

    fn query(&mut self) -> Result<Query, ParseError> {
        loop {
            if self.eat_keyword("PREFIX") {
                let Tok::PName(name, local) = self.peek().clone() else {
                    return Err(self.expected("a prefix name"));
                };
                if !local.is_empty() {
                    return Err(self.error("prefix declaration must end with ':'"));
                }
                self.next();
                let Tok::Iri(iri) = self.next() else {
                    self.pos -= 1;
                    return Err(self.expected("an IRI"));
                };
                self.prefixes.retain(|(p, _)| *p != name);
                self.prefixes.push((name, iri));
            } else {
                self.check_unsupported_keyword()?;
                break;
            }
        }
        if !self.eat_keyword("SELECT") {
            return Err(self.expected("SELECT"));
        }
        let distinct = self.eat_keyword("DISTINCT");
        self.check_unsupported_keyword()?;
        let projection = if self.eat_punct("*") {
            Projection::All
        } else {
            let mut vars = Vec::new();
            while let Tok::Var(v) = self.peek().clone() {
                self.next();
                if !vars.contains(&v) {
                    vars.push(v);
                }
            }
            if vars.is_empty() {
                if matches!(self.peek(), Tok::Punct("(")) {
                    return Err(self.unsupported("projection expressions"));
                }
                return Err(self.expected("a variable or '*'"));
            }
            Projection::Vars(vars)
        };
        self.check_unsupported_keyword()?;
        self.eat_keyword("WHERE");
        let body = self.group(false)?;
        self.check_unsupported_keyword()?;
        if *self.peek() != Tok::Eof {
            return Err(self.expected("end of query"));
        }
        Ok(Query {
            prefixes: std::mem::take(&mut self.prefixes),
            distinct,
            projection,
            body,
        })
    }

    fn group(&mut self, in_service: bool) -> Result<Vec<GroupElement>, ParseError> {
        self.expect_punct("{")?;
        let mut body = Vec::new();
        loop {
            self.check_unsupported_keyword()?;
            match self.peek() {
                Tok::Punct("}") => {
                    self.next();
                    return Ok(body);
                }
                Tok::Punct("{") => return Err(self.unsupported("nested group patterns")),
                Tok::Punct("[") => return Err(self.unsupported("blank node property lists")),
                Tok::Eof => return Err(self.expected("'}'")),
                t if keyword_is(t, "FILTER") => {
                    self.next();
                    body.push(GroupElement::Filter(self.constraint()?));
                    self.eat_punct(".");
                }
                t if keyword_is(t, "SERVICE") => {
                    if in_service {
                        let (line, column) = self.here();
                        return Err(ParseError::NestedService { line, column });
                    }
                    self.next();
                    if self.eat_keyword("SILENT") {
                        return Err(self.unsupported("SERVICE SILENT"));
                    }
                    let endpoint = match self.next() {
                        Tok::Iri(i) => i,
                        Tok::PName(p, l) => {
                            self.pos -= 1;
                            let iri = self.resolve(&p, &l)?;
                            self.next();
                            iri
                        }
                        Tok::Var(_) => {
                            self.pos -= 1;
                            return Err(self.unsupported("variable SERVICE endpoints"));
                        }
                        _ => {
                            self.pos -= 1;
                            return Err(self.expected("a SERVICE endpoint IRI"));
                        }
                    };
                    let inner = self.group(true)?;
                    body.push(GroupElement::Service(Service { endpoint, body: inner }));
                    self.eat_punct(".");
                }
                _ => {
                    self.triples_same_subject(&mut body)?;
                    if !self.eat_punct(".") {
                        let t = self.peek();
                        let ok = matches!(t, Tok::Punct("}"))
                            || keyword_is(t, "FILTER")
                            || keyword_is(t, "SERVICE");
                        if !ok {
                            self.check_unsupported_keyword()?;
                            return Err(self.expected("'.' or '}'"));
                        }
                    }
                }
            }
        }
    }

    fn triples_same_subject(&mut self, out: &mut Vec<GroupElement>) -> Result<(), ParseError> {
        if matches!(self.peek(), Tok::Punct("(")) {
            return Err(self.unsupported("collections in subject position"));
        }
        let subject = self.term()?;
        loop {
            let predicate = self.verb()?;
            loop {
                let object = self.object()?;
                out.push(GroupElement::Pattern(TriplePattern::new(
                    subject.clone(),
                    predicate.clone(),
                    object,
                )));
                if !self.eat_punct(",") {
                    break;
                }
            }
            if !self.eat_punct(";") {
                return Ok(());
            }
            while self.eat_punct(";") {}
            // a dangling ';' before '.' or '}' is allowed
            if matches!(self.peek(), Tok::Punct("." | "}")) {
                return Ok(());
            }
        }
    }

    fn verb(&mut self) -> Result<Term, ParseError> {
        let t = match self.peek().clone() {
            Tok::Word(w) if w == "a" => {
                self.next();
                Term::Iri(vocab::RDF_TYPE.into())
            }
            Tok::Var(v) => {
                self.next();
                Term::Var(v)
            }
            Tok::Iri(i) => {
                self.next();
                Term::Iri(i)
            }
            Tok::PName(p, l) => {
                let iri = self.resolve(&p, &l)?;
                self.next();
                Term::Iri(iri)
            }
            Tok::Punct("^") | Tok::Punct("(") | Tok::Punct("!") => return Err(self.unsupported("property paths")),
            _ => return Err(self.expected("a predicate")),
        };
        if matches!(self.peek(), Tok::Punct("/" | "|" | "*" | "+")) {
            return Err(self.unsupported("property paths"));
        }
        Ok(t)
    }

    fn object(&mut self) -> Result<Term, ParseError> {
        if self.eat_punct("(") {
            let mut items = Vec::new();
            while !self.eat_punct(")") {
                if matches!(self.peek(), Tok::Punct("(")) {
                    return Err(self.unsupported("nested collections"));
                }
                items.push(self.term()?);
            }
            return Ok(Term::List(items));
        }
        self.term()
    }

    /// Variable, IRI or literal.
    fn term(&mut self) -> Result<Term, ParseError> {
        match self.peek().clone() {
            Tok::Var(v) => {
                self.next();
                Ok(Term::Var(v))
            }
            Tok::Iri(i) => {
                self.next();
                Ok(Term::Iri(i))
            }
            Tok::PName(p, l) => {
                if p == "_" {
                    return Err(self.unsupported("blank nodes"));
                }
                let iri = self.resolve(&p, &l)?;
                self.next();
                Ok(Term::Iri(iri))
            }
            Tok::Punct("[") => Err(self.unsupported("blank nodes")),
            _ => match self.literal()? {
                Some(lit) => Ok(Term::Literal(lit)),
                None => Err(self.expected("a term")),
            },
        }
    }

    /// String, numeric (optionally signed) or boolean literal.
    fn literal(&mut self) -> Result<Option<Literal>, ParseError> {
        match self.peek().clone() {
            Tok::Str(s) => {
                self.next();
                match self.peek().clone() {
                    Tok::LangTag(tag) => {
                        self.next();
                        Ok(Some(Literal::lang(s, tag)))
                    }
                    Tok::Punct("^^") => {
                        self.next();
                        let dt = match self.peek().clone() {
                            Tok::Iri(i) => i,
                            Tok::PName(p, l) => self.resolve(&p, &l)?,
                            _ => return Err(self.expected("a datatype IRI")),
                        };
                        self.next();
                        Ok(Some(Literal::typed(s, dt)))
                    }
                    _ => Ok(Some(Literal::string(s))),
                }
            }
            Tok::Number(n, dt) => {
                self.next();
                Ok(Some(Literal::typed(n, dt)))
            }
            Tok::Punct(sign @ ("-" | "+")) if matches!(self.peek_at(1), Tok::Number(..)) => {
                self.next();
                let Tok::Number(n, dt) = self.next() else { unreachable!() };
                let lexical = if sign == "-" { format!("-{n}") } else { n };
                Ok(Some(Literal::typed(lexical, dt)))
            }
            Tok::Word(w) if w == "true" || w == "false" => {
                self.next();
                Ok(Some(Literal::boolean(w == "true")))
            }
            _ => Ok(None),
        }
    }

    /// `FILTER` argument: a bracketted expression or a function call.
    fn constraint(&mut self) -> Result<Expr, ParseError> {
        if self.eat_punct("(") {
            let e = self.expr()?;
            self.expect_punct(")")?;
            return Ok(e);
        }
        match self.peek() {
            Tok::Word(_) | Tok::Iri(_) | Tok::PName(..) => {
                let e = self.primary()?;
                if matches!(e, Expr::Call(..)) {
                    Ok(e)
                } else {
                    Err(self.expected("'(' after FILTER"))
                }
            }
            _ => Err(self.expected("'(' after FILTER")),
        }
    }

    fn expr(&mut self) -> Result<Expr, ParseError> {
        let mut left = self.and_expr()?;
        while self.eat_punct("||") {
            let right = self.and_expr()?;
            left = Expr::binary(BinOp::Or, left, right);
        }
        Ok(left)
    }

    fn and_expr(&mut self) -> Result<Expr, ParseError> {
        let mut left = self.relational()?;
        while self.eat_punct("&&") {
            let right = self.relational()?;
            left = Expr::binary(BinOp::And, left, right);
        }
        Ok(left)
    }

    fn relational(&mut self) -> Result<Expr, ParseError> {
        let left = self.additive()?;
        let op = match self.peek() {
            Tok::Punct("=") => BinOp::Eq,
            Tok::Punct("!=") => BinOp::Ne,
            Tok::Punct("<") => BinOp::Lt,
            Tok::Punct(">") => BinOp::Gt,
            Tok::Punct("<=") => BinOp::Le,
            Tok::Punct(">=") => BinOp::Ge,
            t if keyword_is(t, "IN") || keyword_is(t, "NOT") => return Err(self.unsupported("IN / NOT IN")),
            _ => return Ok(left),
        };
        self.next();
        let right = self.additive()?;
        Ok(Expr::binary(op, left, right))
    }

    fn additive(&mut self) -> Result<Expr, ParseError> {
        let mut left = self.multiplicative()?;
        loop {
            let op = match self.peek() {
                Tok::Punct("+") => BinOp::Add,
                Tok::Punct("-") => BinOp::Sub,
                _ => return Ok(left),
            };
            self.next();
            let right = self.multiplicative()?;
            left = Expr::binary(op, left, right);
        }
    }

    fn multiplicative(&mut self) -> Result<Expr, ParseError> {
        let mut left = self.unary()?;
        loop {
            let op = match self.peek() {
                Tok::Punct("*") => BinOp::Mul,
                Tok::Punct("/") => BinOp::Div,
                _ => return Ok(left),
            };
            self.next();
            let right = self.unary()?;
            left = Expr::binary(op, left, right);
        }
    }

    fn unary(&mut self) -> Result<Expr, ParseError> {
        if self.eat_punct("!") {
            return Ok(Expr::Not(Box::new(self.unary()?)));
        }
        if self.eat_punct("+") {
            return self.unary();
        }
        if self.eat_punct("-") {
            // a minus sign directly before a number is part of the literal
            let literal_follows = matches!(self.peek(), Tok::Number(..));
            let inner = self.unary()?;
            if let (true, Expr::Const(RdfTerm::Literal(lit))) = (literal_follows, &inner) {
                return Ok(Expr::Const(RdfTerm::Literal(Literal::typed(
                    format!("-{}", lit.lexical),
                    lit.datatype(),
                ))));
            }
            return Ok(Expr::Neg(Box::new(inner)));
        }
        self.primary()
    }

    fn primary(&mut self) -> Result<Expr, ParseError> {
        match self.peek().clone() {
            Tok::Punct("(") => {
                self.next();
                let e = self.expr()?;
                self.expect_punct(")")?;
                Ok(e)
            }
            Tok::Var(v) => {
                self.next();
                Ok(Expr::Var(v))
            }
            Tok::Iri(_) | Tok::PName(..) => {
                let iri = match self.peek().clone() {
                    Tok::Iri(i) => i,
                    Tok::PName(p, l) => self.resolve(&p, &l)?,
                    _ => unreachable!(),
                };
                self.next();
                if matches!(self.peek(), Tok::Punct("(")) {
                    if !CAST_TYPES.contains(&iri.as_str()) {
                        return Err(self.unsupported(format!("function <{iri}>")));
                    }
                    let args = self.arguments(1, 1)?;
                    Ok(Expr::Call(Func::Cast(iri), args))
                } else {
                    Ok(Expr::Const(RdfTerm::Iri(iri)))
                }
            }
            Tok::Word(w) if !(w == "true" || w == "false") => {
                let func = match w.to_ascii_uppercase().as_str() {
                    "BOUND" => Func::Bound,
                    "REGEX" => Func::Regex,
                    "STR" => Func::Str,
                    "YEAR" => Func::Year,
                    "EXISTS" | "NOT" => return Err(self.unsupported("EXISTS")),
                    _ => {
                        return Err(if matches!(self.peek_at(1), Tok::Punct("(")) {
                            self.unsupported(format!("function {w}"))
                        } else {
                            self.expected("an expression")
                        })
                    }
                };
                self.next();
                let args = match func {
                    Func::Bound => {
                        let args = self.arguments(1, 1)?;
                        if !matches!(args[0], Expr::Var(_)) {
                            return Err(self.error("BOUND takes a variable"));
                        }
                        args
                    }
                    Func::Regex => self.arguments(2, 3)?,
                    _ => self.arguments(1, 1)?,
                };
                Ok(Expr::Call(func, args))
            }
            _ => match self.literal()? {
                Some(lit) => Ok(Expr::Const(RdfTerm::Literal(lit))),
                None => Err(self.expected("an expression")),
            },
        }
    }

    fn arguments(&mut self, min: usize, max: usize) -> Result<Vec<Expr>, ParseError> {
        self.expect_punct("(")?;
        let mut args = Vec::new();
        if !self.eat_punct(")") {
            loop {
                args.push(self.expr()?);
                if self.eat_punct(")") {
                    break;
                }
                self.expect_punct(",")?;
            }
        }
        if args.len() < min || args.len() > max {
            return Err(self.error(if min == max {
                format!("expected {min} argument(s), found {}", args.len())
            } else {
                format!("expected {min} to {max} arguments, found {}", args.len())
            }));
        }
        Ok(args)
    }
}

pub(crate) fn is_numeric_type(dt: &str) -> bool {
    matches!(dt, vocab::XSD_INTEGER | vocab::XSD_DECIMAL | vocab::XSD_DOUBLE)
}
