use crate::rdf::{vocab, Literal, RdfTerm};

/// A position in a triple pattern.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Term {
    Var(String),
    Iri(String),
    Literal(Literal),
    /// RDF collection written `( ... )`; only allowed in object position.
    List(Vec<Term>),
}

impl Term {
    pub fn as_var(&self) -> Option<&str> {
        match self {
            Term::Var(v) => Some(v),
            _ => None,
        }
    }

    /// The equivalent RDF term for constants.
    pub fn to_rdf(&self) -> Option<RdfTerm> {
        match self {
            Term::Iri(i) => Some(RdfTerm::Iri(i.clone())),
            Term::Literal(l) => Some(RdfTerm::Literal(l.clone())),
            Term::Var(_) | Term::List(_) => None,
        }
    }

    /// Blank nodes have no constant form in a query.
    pub fn from_rdf(t: &RdfTerm) -> Option<Term> {
        match t {
            RdfTerm::Iri(i) => Some(Term::Iri(i.clone())),
            RdfTerm::Literal(l) => Some(Term::Literal(l.clone())),
            RdfTerm::BlankNode(_) => None,
        }
    }

    fn collect_vars<'a>(&'a self, out: &mut Vec<&'a str>) {
        match self {
            Term::Var(v) => {
                if !out.contains(&v.as_str()) {
                    out.push(v);
                }
            }
            Term::List(items) => items.iter().for_each(|t| t.collect_vars(out)),
            Term::Iri(_) | Term::Literal(_) => {}
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct TriplePattern {
    pub subject: Term,
    pub predicate: Term,
    pub object: Term,
}

impl TriplePattern {
    pub fn new(subject: Term, predicate: Term, object: Term) -> Self {
        TriplePattern {
            subject,
            predicate,
            object,
        }
    }

    /// Variables in first-appearance order.
    pub fn variables(&self) -> Vec<&str> {
        let mut out = Vec::new();
        self.subject.collect_vars(&mut out);
        self.predicate.collect_vars(&mut out);
        self.object.collect_vars(&mut out);
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BinOp {
    Or,
    And,
    Eq,
    Ne,
    Lt,
    Gt,
    Le,
    Ge,
    Add,
    Sub,
    Mul,
    Div,
}

impl BinOp {
    pub fn symbol(self) -> &'static str {
        match self {
            BinOp::Or => "||",
            BinOp::And => "&&",
            BinOp::Eq => "=",
            BinOp::Ne => "!=",
            BinOp::Lt => "<",
            BinOp::Gt => ">",
            BinOp::Le => "<=",
            BinOp::Ge => ">=",
            BinOp::Add => "+",
            BinOp::Sub => "-",
            BinOp::Mul => "*",
            BinOp::Div => "/",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Func {
    Bound,
    Regex,
    Str,
    Year,
    /// XSD constructor function such as `xsd:integer(...)`.
    Cast(String),
}

/// XSD datatypes usable as constructor functions.
pub const CAST_TYPES: [&str; 6] = [
    vocab::XSD_DATE_TIME,
    vocab::XSD_INTEGER,
    vocab::XSD_DOUBLE,
    vocab::XSD_DECIMAL,
    vocab::XSD_STRING,
    vocab::XSD_BOOLEAN,
];

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Expr {
    Var(String),
    Const(RdfTerm),
    Binary(BinOp, Box<Expr>, Box<Expr>),
    Not(Box<Expr>),
    Neg(Box<Expr>),
    Call(Func, Vec<Expr>),
}

impl Expr {
    pub fn binary(op: BinOp, l: Expr, r: Expr) -> Expr {
        Expr::Binary(op, Box::new(l), Box::new(r))
    }

    pub fn variables(&self) -> Vec<&str> {
        let mut out = Vec::new();
        self.collect_vars(&mut out);
        out
    }

    fn collect_vars<'a>(&'a self, out: &mut Vec<&'a str>) {
        match self {
            Expr::Var(v) => {
                if !out.contains(&v.as_str()) {
                    out.push(v);
                }
            }
            Expr::Const(_) => {}
            Expr::Binary(_, l, r) => {
                l.collect_vars(out);
                r.collect_vars(out);
            }
            Expr::Not(e) | Expr::Neg(e) => e.collect_vars(out),
            Expr::Call(_, args) => args.iter().for_each(|a| a.collect_vars(out)),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Service {
    pub endpoint: String,
    /// Patterns and filters only; services do not nest.
    pub body: Vec<GroupElement>,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum GroupElement {
    Pattern(TriplePattern),
    Filter(Expr),
    Service(Service),
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Projection {
    All,
    Vars(Vec<String>),
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Query {
    pub prefixes: Vec<(String, String)>,
    pub distinct: bool,
    pub projection: Projection,
    pub body: Vec<GroupElement>,
}

impl Query {
    pub fn select(projection: Projection, body: Vec<GroupElement>) -> Query {
        Query {
            prefixes: Vec::new(),
            distinct: false,
            projection,
            body,
        }
    }

    /// Variables bound by patterns, in first-appearance order.
    pub fn in_scope_variables(&self) -> Vec<String> {
        pattern_variables(&self.body)
    }

    /// Result variables: the projection, or every in-scope variable for `*`.
    pub fn result_variables(&self) -> Vec<String> {
        match &self.projection {
            Projection::Vars(vars) => vars.clone(),
            Projection::All => self.in_scope_variables(),
        }
    }

    pub fn has_service(&self) -> bool {
        self.body.iter().any(|e| matches!(e, GroupElement::Service(_)))
    }
}

/// Variables appearing in triple patterns (including those inside
/// services), in first-appearance order.
pub fn pattern_variables(body: &[GroupElement]) -> Vec<String> {
    let mut out: Vec<&str> = Vec::new();
    fn walk<'a>(body: &'a [GroupElement], out: &mut Vec<&'a str>) {
        for el in body {
            match el {
                GroupElement::Pattern(p) => {
                    p.subject.collect_vars(out);
                    p.predicate.collect_vars(out);
                    p.object.collect_vars(out);
                }
                GroupElement::Service(s) => walk(&s.body, out),
                GroupElement::Filter(_) => {}
            }
        }
    }
    walk(body, &mut out);
    out.into_iter().map(str::to_string).collect()
}
