//! FILTER expression evaluation with SPARQL error semantics: a type error
//! or unbound variable makes the whole expression fail, and a failing
//! filter drops the solution.

use std::cell::RefCell;
use std::cmp::Ordering;
use std::collections::HashMap;

use chrono::{DateTime, Datelike, Utc};
use regex::Regex;
use thiserror::Error;

use super::Solution;
use crate::rdf::{parse_date_time, parse_double, vocab, Literal, LiteralKind, RdfTerm};
use crate::sparql::{BinOp, Expr, Func};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ExprError {
    #[error("unbound variable ?{0}")]
    Unbound(String),
    #[error("type error: {0}")]
    Type(String),
    #[error("invalid regular expression: {0}")]
    Regex(String),
}

fn type_error<T>(msg: impl Into<String>) -> Result<T, ExprError> {
    Err(ExprError::Type(msg.into()))
}

#[derive(Debug, Clone, PartialEq)]
enum Val {
    Iri(String),
    Blank(String),
    /// Simple or `xsd:string` literal.
    Str(String),
    Lang(String, String),
    Int(i64),
    Decimal(f64),
    Double(f64),
    Bool(bool),
    DateTime(DateTime<Utc>),
    /// Literal of a datatype without value semantics here.
    Other(Literal),
}

const INTEGER_TYPES: [&str; 12] = [
    vocab::XSD_INTEGER,
    "http://www.w3.org/2001/XMLSchema#int",
    "http://www.w3.org/2001/XMLSchema#long",
    "http://www.w3.org/2001/XMLSchema#short",
    "http://www.w3.org/2001/XMLSchema#byte",
    "http://www.w3.org/2001/XMLSchema#nonNegativeInteger",
    "http://www.w3.org/2001/XMLSchema#positiveInteger",
    "http://www.w3.org/2001/XMLSchema#negativeInteger",
    "http://www.w3.org/2001/XMLSchema#nonPositiveInteger",
    "http://www.w3.org/2001/XMLSchema#unsignedInt",
    "http://www.w3.org/2001/XMLSchema#unsignedLong",
    "http://www.w3.org/2001/XMLSchema#unsignedShort",
];
const XSD_FLOAT: &str = "http://www.w3.org/2001/XMLSchema#float";

impl Val {
    fn from_term(t: &RdfTerm) -> Result<Val, ExprError> {
        let lit = match t {
            RdfTerm::Iri(i) => return Ok(Val::Iri(i.clone())),
            RdfTerm::BlankNode(b) => return Ok(Val::Blank(b.clone())),
            RdfTerm::Literal(l) => l,
        };
        let dt = match &lit.kind {
            LiteralKind::Lang(tag) => return Ok(Val::Lang(lit.lexical.clone(), tag.clone())),
            LiteralKind::Typed(dt) => dt.as_str(),
        };
        let lex = lit.lexical.trim();
        let bad = || ExprError::Type(format!("invalid lexical form {lit}"));
        Ok(match dt {
            vocab::XSD_STRING => Val::Str(lit.lexical.clone()),
            vocab::XSD_DECIMAL => Val::Decimal(parse_decimal(lex).ok_or_else(bad)?),
            vocab::XSD_DOUBLE | XSD_FLOAT => Val::Double(parse_double(lex).ok_or_else(bad)?),
            vocab::XSD_BOOLEAN => Val::Bool(match lex {
                "true" | "1" => true,
                "false" | "0" => false,
                _ => return Err(bad()),
            }),
            vocab::XSD_DATE_TIME => Val::DateTime(parse_date_time(lex).ok_or_else(bad)?),
            dt if INTEGER_TYPES.contains(&dt) => Val::Int(lex.strip_prefix('+').unwrap_or(lex).parse().map_err(|_| bad())?),
            _ => Val::Other(lit.clone()),
        })
    }

    fn into_term(self) -> RdfTerm {
        match self {
            Val::Iri(i) => RdfTerm::Iri(i),
            Val::Blank(b) => RdfTerm::BlankNode(b),
            Val::Str(s) => Literal::string(s).into(),
            Val::Lang(s, tag) => Literal::lang(s, tag).into(),
            Val::Int(i) => Literal::integer(i).into(),
            Val::Decimal(d) => Literal::typed(decimal_lexical(d), vocab::XSD_DECIMAL).into(),
            Val::Double(d) => Literal::double(d).into(),
            Val::Bool(b) => Literal::boolean(b).into(),
            Val::DateTime(t) => Literal::date_time(t).into(),
            Val::Other(l) => l.into(),
        }
    }

    fn numeric(&self) -> Option<Num> {
        match *self {
            Val::Int(i) => Some(Num::Int(i)),
            Val::Decimal(d) => Some(Num::Decimal(d)),
            Val::Double(d) => Some(Num::Double(d)),
            _ => None,
        }
    }

    /// Lexical form, as `str()` returns it.
    fn string_form(&self) -> Result<String, ExprError> {
        match self {
            Val::Blank(_) => type_error("str() of a blank node"),
            other => Ok(match other.clone().into_term() {
                RdfTerm::Iri(i) => i,
                RdfTerm::Literal(l) => l.lexical,
                RdfTerm::BlankNode(_) => unreachable!(),
            }),
        }
    }
}

fn parse_decimal(lex: &str) -> Option<f64> {
    let body = lex.strip_prefix(['+', '-']).unwrap_or(lex);
    let ok = !body.is_empty()
        && body.chars().all(|c| c.is_ascii_digit() || c == '.')
        && body.matches('.').count() <= 1
        && body != ".";
    if ok { lex.parse().ok() } else { None }
}

fn decimal_lexical(d: f64) -> String {
    let s = format!("{d:?}");
    if s.contains(['e', 'E']) { format!("{d}") } else { s }
}

/// Numeric value with its promotion rank (integer < decimal < double).
#[derive(Debug, Clone, Copy)]
enum Num {
    Int(i64),
    Decimal(f64),
    Double(f64),
}

impl Num {
    fn rank(self) -> u8 {
        match self {
            Num::Int(_) => 0,
            Num::Decimal(_) => 1,
            Num::Double(_) => 2,
        }
    }

    fn as_f64(self) -> f64 {
        match self {
            Num::Int(i) => i as f64,
            Num::Decimal(d) | Num::Double(d) => d,
        }
    }

    fn compare(self, other: Num) -> Option<Ordering> {
        match (self, other) {
            (Num::Int(a), Num::Int(b)) => Some(a.cmp(&b)),
            (a, b) => a.as_f64().partial_cmp(&b.as_f64()),
        }
    }
}

fn arithmetic(op: BinOp, a: Num, b: Num) -> Result<Val, ExprError> {
    if let (Num::Int(x), Num::Int(y)) = (a, b) {
        let r = match op {
            BinOp::Add => x.checked_add(y),
            BinOp::Sub => x.checked_sub(y),
            BinOp::Mul => x.checked_mul(y),
            BinOp::Div => {
                // integer division yields a decimal
                if y == 0 {
                    return type_error("division by zero");
                }
                return Ok(Val::Decimal(x as f64 / y as f64));
            }
            _ => unreachable!(),
        };
        return r.map(Val::Int).ok_or_else(|| ExprError::Type("integer overflow".into()));
    }
    let (x, y) = (a.as_f64(), b.as_f64());
    let r = match op {
        BinOp::Add => x + y,
        BinOp::Sub => x - y,
        BinOp::Mul => x * y,
        BinOp::Div => {
            if y == 0.0 && a.rank().max(b.rank()) < 2 {
                return type_error("division by zero");
            }
            x / y
        }
        _ => unreachable!(),
    };
    Ok(if a.rank().max(b.rank()) == 2 { Val::Double(r) } else { Val::Decimal(r) })
}

/// Effective boolean value.
fn ebv(v: &Val) -> Result<bool, ExprError> {
    match v {
        Val::Bool(b) => Ok(*b),
        Val::Str(s) => Ok(!s.is_empty()),
        Val::Int(i) => Ok(*i != 0),
        Val::Decimal(d) | Val::Double(d) => Ok(*d != 0.0 && !d.is_nan()),
        _ => type_error("no effective boolean value"),
    }
}

fn compare(op: BinOp, a: &Val, b: &Val) -> Result<bool, ExprError> {
    let ord = match (a, b) {
        _ if a.numeric().is_some() && b.numeric().is_some() => a.numeric().unwrap().compare(b.numeric().unwrap()),
        (Val::Str(x), Val::Str(y)) => Some(x.cmp(y)),
        (Val::DateTime(x), Val::DateTime(y)) => Some(x.cmp(y)),
        (Val::Bool(x), Val::Bool(y)) => Some(x.cmp(y)),
        (Val::Lang(x, tx), Val::Lang(y, ty)) if matches!(op, BinOp::Eq | BinOp::Ne) => {
            Some(if x == y && tx == ty { Ordering::Equal } else { Ordering::Less })
        }
        (Val::Iri(x), Val::Iri(y)) | (Val::Blank(x), Val::Blank(y)) if matches!(op, BinOp::Eq | BinOp::Ne) => {
            Some(if x == y { Ordering::Equal } else { Ordering::Less })
        }
        (Val::Other(x), Val::Other(y)) if matches!(op, BinOp::Eq | BinOp::Ne) => {
            if x == y {
                Some(Ordering::Equal)
            } else {
                return type_error("cannot compare literals of unknown datatypes");
            }
        }
        _ if matches!(op, BinOp::Eq | BinOp::Ne) && (is_node(a) || is_node(b)) => Some(Ordering::Less),
        _ => None,
    };
    let Some(ord) = ord else {
        return type_error("incomparable operands");
    };
    Ok(match op {
        BinOp::Eq => ord == Ordering::Equal,
        BinOp::Ne => ord != Ordering::Equal,
        BinOp::Lt => ord == Ordering::Less,
        BinOp::Gt => ord == Ordering::Greater,
        BinOp::Le => ord != Ordering::Greater,
        BinOp::Ge => ord != Ordering::Less,
        _ => unreachable!(),
    })
}

fn is_node(v: &Val) -> bool {
    matches!(v, Val::Iri(_) | Val::Blank(_))
}

thread_local! {
    static REGEX_CACHE: RefCell<HashMap<(String, String), Regex>> = RefCell::new(HashMap::new());
}

fn regex_match(text: &str, pattern: &str, flags: &str) -> Result<bool, ExprError> {
    let key = (pattern.to_string(), flags.to_string());
    REGEX_CACHE.with(|cache| {
        let mut cache = cache.borrow_mut();
        if !cache.contains_key(&key) {
            let mut builder = regex::RegexBuilder::new(pattern);
            for f in flags.chars() {
                match f {
                    'i' => builder.case_insensitive(true),
                    's' => builder.dot_matches_new_line(true),
                    'm' => builder.multi_line(true),
                    'x' => builder.ignore_whitespace(true),
                    other => return Err(ExprError::Regex(format!("unknown flag '{other}'"))),
                };
            }
            let re = builder.build().map_err(|e| ExprError::Regex(e.to_string()))?;
            cache.insert(key.clone(), re);
        }
        Ok(cache[&key].is_match(text))
    })
}

fn string_arg(v: &Val) -> Result<&str, ExprError> {
    match v {
        Val::Str(s) | Val::Lang(s, _) => Ok(s),
        _ => type_error("expected a string literal"),
    }
}

fn cast(dt: &str, v: Val) -> Result<Val, ExprError> {
    let text = || v.string_form();
    match dt {
        vocab::XSD_STRING => match v {
            Val::Blank(_) => type_error("cannot cast a blank node"),
            _ => Ok(Val::Str(text()?)),
        },
        vocab::XSD_DATE_TIME => match v {
            Val::DateTime(_) => Ok(v),
            Val::Str(_) | Val::Other(_) => parse_date_time(&text()?)
                .map(Val::DateTime)
                .ok_or_else(|| ExprError::Type("cannot cast to xsd:dateTime".into())),
            _ => type_error("cannot cast to xsd:dateTime"),
        },
        vocab::XSD_INTEGER => match v {
            Val::Int(_) => Ok(v),
            Val::Decimal(d) | Val::Double(d) if d.is_finite() && d.abs() < 9.2e18 => Ok(Val::Int(d.trunc() as i64)),
            Val::Bool(b) => Ok(Val::Int(b as i64)),
            Val::Str(s) => {
                let s = s.trim();
                s.strip_prefix('+')
                    .unwrap_or(s)
                    .parse()
                    .map(Val::Int)
                    .map_err(|_| ExprError::Type("cannot cast to xsd:integer".into()))
            }
            _ => type_error("cannot cast to xsd:integer"),
        },
        vocab::XSD_DECIMAL | vocab::XSD_DOUBLE => {
            let wrap = |d: f64| if dt == vocab::XSD_DOUBLE { Val::Double(d) } else { Val::Decimal(d) };
            match &v {
                Val::Int(_) | Val::Decimal(_) | Val::Double(_) => {
                    let d = v.numeric().unwrap().as_f64();
                    if dt == vocab::XSD_DECIMAL && !d.is_finite() {
                        return type_error("cannot cast to xsd:decimal");
                    }
                    Ok(wrap(d))
                }
                Val::Bool(b) => Ok(wrap(if *b { 1.0 } else { 0.0 })),
                Val::Str(s) => {
                    let parsed = if dt == vocab::XSD_DOUBLE { parse_double(s.trim()) } else { parse_decimal(s.trim()) };
                    parsed.map(wrap).ok_or_else(|| ExprError::Type(format!("cannot cast to <{dt}>")))
                }
                _ => type_error(format!("cannot cast to <{dt}>")),
            }
        }
        vocab::XSD_BOOLEAN => match v {
            Val::Bool(_) => Ok(v),
            Val::Str(s) => match s.trim() {
                "true" | "1" => Ok(Val::Bool(true)),
                "false" | "0" => Ok(Val::Bool(false)),
                _ => type_error("cannot cast to xsd:boolean"),
            },
            other => match other.numeric() {
                Some(n) => Ok(Val::Bool(n.as_f64() != 0.0 && !n.as_f64().is_nan())),
                None => type_error("cannot cast to xsd:boolean"),
            },
        },
        other => type_error(format!("unsupported cast to <{other}>")),
    }
}

fn eval(e: &Expr, s: &Solution) -> Result<Val, ExprError> {
    match e {
        Expr::Var(v) => s.get(v).map(Val::from_term).unwrap_or_else(|| Err(ExprError::Unbound(v.clone()))),
        Expr::Const(t) => Val::from_term(t),
        Expr::Binary(BinOp::Or, l, r) => {
            let a = eval(l, s).and_then(|v| ebv(&v));
            let b = eval(r, s).and_then(|v| ebv(&v));
            match (a, b) {
                (Ok(true), _) | (_, Ok(true)) => Ok(Val::Bool(true)),
                (Ok(false), Ok(false)) => Ok(Val::Bool(false)),
                (Err(e), _) | (_, Err(e)) => Err(e),
            }
        }
        Expr::Binary(BinOp::And, l, r) => {
            let a = eval(l, s).and_then(|v| ebv(&v));
            let b = eval(r, s).and_then(|v| ebv(&v));
            match (a, b) {
                (Ok(false), _) | (_, Ok(false)) => Ok(Val::Bool(false)),
                (Ok(true), Ok(true)) => Ok(Val::Bool(true)),
                (Err(e), _) | (_, Err(e)) => Err(e),
            }
        }
        Expr::Binary(op @ (BinOp::Add | BinOp::Sub | BinOp::Mul | BinOp::Div), l, r) => {
            let (a, b) = (eval(l, s)?, eval(r, s)?);
            match (a.numeric(), b.numeric()) {
                (Some(x), Some(y)) => arithmetic(*op, x, y),
                _ => type_error(format!("'{}' needs numeric operands", op.symbol())),
            }
        }
        Expr::Binary(op, l, r) => {
            let (a, b) = (eval(l, s)?, eval(r, s)?);
            compare(*op, &a, &b).map(Val::Bool)
        }
        Expr::Not(e) => Ok(Val::Bool(!ebv(&eval(e, s)?)?)),
        Expr::Neg(e) => match eval(e, s)?.numeric() {
            Some(Num::Int(i)) => i.checked_neg().map(Val::Int).ok_or_else(|| ExprError::Type("integer overflow".into())),
            Some(Num::Decimal(d)) => Ok(Val::Decimal(-d)),
            Some(Num::Double(d)) => Ok(Val::Double(-d)),
            None => type_error("unary minus needs a numeric operand"),
        },
        Expr::Call(Func::Bound, args) => match &args[0] {
            Expr::Var(v) => Ok(Val::Bool(s.contains_key(v))),
            _ => type_error("BOUND takes a variable"),
        },
        Expr::Call(Func::Str, args) => Ok(Val::Str(eval(&args[0], s)?.string_form()?)),
        Expr::Call(Func::Year, args) => match eval(&args[0], s)? {
            Val::DateTime(t) => Ok(Val::Int(t.year() as i64)),
            _ => type_error("year() needs an xsd:dateTime"),
        },
        Expr::Call(Func::Regex, args) => {
            let text = eval(&args[0], s)?;
            let pattern = eval(&args[1], s)?;
            let flags = match args.get(2) {
                Some(f) => string_arg(&eval(f, s)?)?.to_string(),
                None => String::new(),
            };
            regex_match(string_arg(&text)?, string_arg(&pattern)?, &flags).map(Val::Bool)
        }
        Expr::Call(Func::Cast(dt), args) => cast(dt, eval(&args[0], s)?),
    }
}

/// Evaluates an expression to an RDF term.
pub fn eval_expr(e: &Expr, s: &Solution) -> Result<RdfTerm, ExprError> {
    eval(e, s).map(Val::into_term)
}

/// Whether a FILTER with this expression keeps the solution.
pub fn filter_passes(e: &Expr, s: &Solution) -> bool {
    eval(e, s).and_then(|v| ebv(&v)).unwrap_or(false)
}
