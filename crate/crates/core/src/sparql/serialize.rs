use std::fmt::Write;

use super::ast::*;
use super::parser::is_numeric_type;
use crate::rdf::{vocab, Literal, LiteralKind, RdfTerm};

/// Renders a query as text. IRIs are written in full, so the output does
/// not depend on the declared prefixes (which are still emitted).
pub fn serialize_query(q: &Query) -> String {
    let mut out = String::new();
    for (p, iri) in &q.prefixes {
        let _ = writeln!(out, "PREFIX {p}: <{iri}>");
    }
    out.push_str("SELECT ");
    if q.distinct {
        out.push_str("DISTINCT ");
    }
    match &q.projection {
        Projection::All => out.push('*'),
        Projection::Vars(vars) => {
            let names: Vec<String> = vars.iter().map(|v| format!("?{v}")).collect();
            out.push_str(&names.join(" "));
        }
    }
    out.push_str("\nWHERE {\n");
    write_body(&mut out, &q.body, 1);
    out.push_str("}\n");
    out
}

fn write_body(out: &mut String, body: &[GroupElement], depth: usize) {
    let indent = "  ".repeat(depth);
    for el in body {
        match el {
            GroupElement::Pattern(p) => {
                let _ = writeln!(
                    out,
                    "{indent}{} {} {} .",
                    term_text(&p.subject),
                    term_text(&p.predicate),
                    term_text(&p.object)
                );
            }
            GroupElement::Filter(e) => {
                let _ = writeln!(out, "{indent}FILTER ({})", expr_text(e));
            }
            GroupElement::Service(s) => {
                let _ = writeln!(out, "{indent}SERVICE <{}> {{", s.endpoint);
                write_body(out, &s.body, depth + 1);
                let _ = writeln!(out, "{indent}}}");
            }
        }
    }
}

pub fn term_text(t: &Term) -> String {
    match t {
        Term::Var(v) => format!("?{v}"),
        Term::Iri(i) => format!("<{i}>"),
        Term::Literal(l) => literal_text(l),
        Term::List(items) => {
            let inner: Vec<String> = items.iter().map(term_text).collect();
            format!("({})", inner.join(" "))
        }
    }
}

/// SPARQL syntax for a literal, using the short numeric and boolean forms
/// when they read back as the same literal.
pub fn literal_text(l: &Literal) -> String {
    if let LiteralKind::Typed(dt) = &l.kind {
        if is_numeric_type(dt) && numeric_short_form_type(&l.lexical) == Some(dt.as_str()) {
            return l.lexical.clone();
        }
        if dt == vocab::XSD_BOOLEAN && (l.lexical == "true" || l.lexical == "false") {
            return l.lexical.clone();
        }
        if dt == vocab::XSD_STRING {
            let mut s = String::from("\"");
            let _ = crate::rdf::write_escaped(&mut s, &l.lexical);
            s.push('"');
            return s;
        }
    }
    l.to_string()
}

/// Datatype an unquoted numeral would be read as, if `lex` is one.
fn numeric_short_form_type(lex: &str) -> Option<&'static str> {
    let body = lex.strip_prefix('-').unwrap_or(lex);
    let (mantissa, exponent) = match body.find(['e', 'E']) {
        Some(i) => (&body[..i], Some(&body[i + 1..])),
        None => (body, None),
    };
    let (int, frac) = match mantissa.split_once('.') {
        Some((i, f)) => (i, Some(f)),
        None => (mantissa, None),
    };
    let digits = |s: &str| !s.is_empty() && s.bytes().all(|b| b.is_ascii_digit());
    if int.is_empty() || !digits(int) || frac.is_some_and(|f| !digits(f)) {
        return None;
    }
    if let Some(exp) = exponent {
        let exp = exp.strip_prefix(['+', '-']).unwrap_or(exp);
        return digits(exp).then_some(vocab::XSD_DOUBLE);
    }
    Some(if frac.is_some() { vocab::XSD_DECIMAL } else { vocab::XSD_INTEGER })
}

pub fn expr_text(e: &Expr) -> String {
    match e {
        Expr::Var(v) => format!("?{v}"),
        Expr::Const(RdfTerm::Iri(i)) => format!("<{i}>"),
        Expr::Const(RdfTerm::Literal(l)) => literal_text(l),
        Expr::Const(RdfTerm::BlankNode(b)) => format!("_:{b}"),
        Expr::Binary(op, l, r) => format!("({} {} {})", expr_text(l), op.symbol(), expr_text(r)),
        Expr::Not(e) => format!("!({})", expr_text(e)),
        Expr::Neg(e) => format!("-({})", expr_text(e)),
        Expr::Call(func, args) => {
            let name = match func {
                Func::Bound => "BOUND".to_string(),
                Func::Regex => "REGEX".to_string(),
                Func::Str => "STR".to_string(),
                Func::Year => "YEAR".to_string(),
                Func::Cast(iri) => format!("<{iri}>"),
            };
            let args: Vec<String> = args.iter().map(expr_text).collect();
            format!("{name}({})", args.join(", "))
        }
    }
}
