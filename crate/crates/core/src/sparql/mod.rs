//! The SPARQL subset: `SELECT [DISTINCT]` over basic graph patterns,
//! `FILTER` and non-nested `SERVICE` blocks.

mod ast;
mod lexer;
mod parser;
mod serialize;

use thiserror::Error;

pub use ast::*;
pub use parser::parse_query;
pub use serialize::{expr_text, literal_text, serialize_query, term_text};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ParseError {
    #[error("line {line}, column {column}: {message}")]
    Syntax { line: usize, column: usize, message: String },
    #[error("line {line}, column {column}: unknown prefix `{prefix}:`")]
    UnknownPrefix { line: usize, column: usize, prefix: String },
    #[error("line {line}, column {column}: unsupported feature: {feature}")]
    Unsupported { line: usize, column: usize, feature: String },
    #[error("line {line}, column {column}: SERVICE blocks cannot be nested")]
    NestedService { line: usize, column: usize },
}

impl ParseError {
    pub fn position(&self) -> (usize, usize) {
        match self {
            ParseError::Syntax { line, column, .. }
            | ParseError::UnknownPrefix { line, column, .. }
            | ParseError::Unsupported { line, column, .. }
            | ParseError::NestedService { line, column } => (*line, *column),
        }
    }

    pub fn is_unsupported(&self) -> bool {
        matches!(self, ParseError::Unsupported { .. })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rdf::{vocab, Literal, RdfTerm};

    const HC: &str = "http://portal.bt-hypercat.com/ontologies/bt-hypercat#";

    #[test]
    fn datastream_query() {
        let q = parse_query(
            "PREFIX hypercat: <http://portal.bt-hypercat.com/ontologies/bt-hypercat#>\nSELECT DISTINCT ?s \nWHERE{ ?s a hypercat:Datastream . }",
        )
        .unwrap();
        assert!(q.distinct);
        assert_eq!(q.projection, Projection::Vars(vec!["s".into()]));
        assert_eq!(
            q.body,
            vec![GroupElement::Pattern(TriplePattern::new(
                Term::Var("s".into()),
                Term::Iri(vocab::RDF_TYPE.into()),
                Term::Iri(format!("{HC}Datastream")),
            ))]
        );
    }

    #[test]
    fn empty_group() {
        let q = parse_query("SELECT ?s WHERE { }").unwrap();
        assert!(q.body.is_empty());
    }

    #[test]
    fn negative_literal_and_subtraction() {
        let q = parse_query("SELECT ?a WHERE { ?a ?b ?c FILTER(?a > ?b - 0.1 && ?c < -0.1) }").unwrap();
        let GroupElement::Filter(e) = &q.body[1] else { panic!() };
        let dec = |l: &str| Expr::Const(RdfTerm::Literal(Literal::typed(l, vocab::XSD_DECIMAL)));
        assert_eq!(
            *e,
            Expr::binary(
                BinOp::And,
                Expr::binary(
                    BinOp::Gt,
                    Expr::Var("a".into()),
                    Expr::binary(BinOp::Sub, Expr::Var("b".into()), dec("0.1"))
                ),
                Expr::binary(BinOp::Lt, Expr::Var("c".into()), dec("-0.1")),
            )
        );
        let again = parse_query(&serialize_query(&q)).unwrap();
        assert_eq!(again, q);
    }

    #[test]
    fn language_tag_survives_serialization() {
        let q = parse_query("PREFIX skos: <http://www.w3.org/2004/02/skos/core#>\nSELECT * { ?s skos:prefLabel \"Active\"@en }")
            .unwrap();
        let text = serialize_query(&q);
        assert!(text.contains("\"Active\"@en"), "{text}");
        assert_eq!(parse_query(&text).unwrap(), q);
    }

    #[test]
    fn errors_carry_positions() {
        let err = parse_query("SELECT ?s WHERE {\n  ?s ?p \n}").unwrap_err();
        assert_eq!(err.position(), (3, 1));
        let err = parse_query("SELECT ?s WHERE { ?s a foo:Bar }").unwrap_err();
        assert!(matches!(err, ParseError::UnknownPrefix { ref prefix, .. } if prefix == "foo"));
    }

    #[test]
    fn unsupported_features() {
        for q in [
            "SELECT ?s WHERE { ?s ?p ?o OPTIONAL { ?s ?q ?r } }",
            "SELECT ?s WHERE { { ?s ?p ?o } UNION { ?s ?q ?o } }",
            "SELECT ?s WHERE { ?s ?p ?o } ORDER BY ?s",
            "SELECT ?s WHERE { ?s ?p ?o } LIMIT 5",
            "ASK { ?s ?p ?o }",
            "CONSTRUCT { ?s ?p ?o } WHERE { ?s ?p ?o }",
            "SELECT ?s WHERE { ?s <http://e/p>/<http://e/q> ?o }",
        ] {
            let err = parse_query(q).unwrap_err();
            assert!(err.is_unsupported(), "{q}: {err}");
            assert!(err.to_string().contains("unsupported feature"));
        }
    }

    #[test]
    fn nested_service_rejected() {
        let err = parse_query("SELECT * { SERVICE <http://a/> { SERVICE <http://b/> { ?s ?p ?o } } }").unwrap_err();
        assert!(matches!(err, ParseError::NestedService { .. }));
    }

    #[test]
    fn missing_dot_before_filter() {
        let q = parse_query(
            "PREFIX purl: <http://purl.org/dc/terms/>\nSELECT * { ?s purl:title ?t. ?s purl:issued ?date FILTER(regex(str(?t),\" Pollutant \")) }",
        )
        .unwrap();
        assert_eq!(q.body.len(), 3);
        assert!(matches!(&q.body[2], GroupElement::Filter(Expr::Call(Func::Regex, args)) if args.len() == 2));
    }

    #[test]
    fn collection_object() {
        let q = parse_query(
            "PREFIX omgeo: <http://www.ontotext.com/owlim/geo#>\nSELECT ?a { ?a omgeo:nearby(?lat ?long \"50mi\"); a ?t. }",
        )
        .unwrap();
        let GroupElement::Pattern(p) = &q.body[0] else { panic!() };
        assert_eq!(
            p.object,
            Term::List(vec![
                Term::Var("lat".into()),
                Term::Var("long".into()),
                Term::Literal(Literal::string("50mi"))
            ])
        );
        assert_eq!(q.body.len(), 2);
    }

    #[test]
    fn casts_and_year() {
        let q = parse_query(
            "PREFIX xsd: <http://www.w3.org/2001/XMLSchema#>\nSELECT * { ?e ?p ?date FILTER(xsd:integer(year(xsd:dateTime(?date))) > 2000) }",
        )
        .unwrap();
        let GroupElement::Filter(Expr::Binary(BinOp::Gt, l, _)) = &q.body[1] else { panic!() };
        let Expr::Call(Func::Cast(dt), args) = l.as_ref() else { panic!() };
        assert_eq!(dt, vocab::XSD_INTEGER);
        assert!(matches!(&args[0], Expr::Call(Func::Year, _)));
        assert_eq!(parse_query(&serialize_query(&q)).unwrap(), q);
    }

    #[test]
    fn arity_checked() {
        assert!(parse_query("SELECT * { ?s ?p ?o FILTER(regex(?o)) }").is_err());
        assert!(parse_query("SELECT * { ?s ?p ?o FILTER(BOUND(1)) }").is_err());
    }
}
