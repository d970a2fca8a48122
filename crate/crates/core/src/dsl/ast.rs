use std::fmt;

use num_bigint::BigUint;

/// 1-based source position.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, PartialOrd, Ord)]
pub struct Pos {
    pub line: usize,
    pub col: usize,
}

impl fmt::Display for Pos {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.line, self.col)
    }
}

/// An identifier with its position. Equality here and on the other AST
/// nodes ignores positions, so reformatted sources compare equal.
#[derive(Clone, Debug)]
pub struct Name {
    pub text: String,
    pub pos: Pos,
}

impl Name {
    pub fn new(text: impl Into<String>) -> Self {
        Name {
            text: text.into(),
            pos: Pos::default(),
        }
    }
}

impl PartialEq for Name {
    fn eq(&self, other: &Self) -> bool {
        self.text == other.text
    }
}

impl Eq for Name {}

impl fmt::Display for Name {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.text)
    }
}

/// A numeric literal as written: an integer, a `p/q` fraction or a decimal.
#[derive(Clone, Debug, PartialEq)]
pub enum Number {
    Integer(BigUint),
    Fraction(BigUint, BigUint),
    Decimal(f64),
}

impl fmt::Display for Number {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Number::Integer(n) => write!(f, "{n}"),
            Number::Fraction(p, q) => write!(f, "{p}/{q}"),
            Number::Decimal(x) => {
                let s = format!("{x}");
                if s.contains('.') {
                    f.write_str(&s)
                } else {
                    write!(f, "{s}.0")
                }
            }
        }
    }
}

#[derive(Clone, Debug)]
pub struct Literal {
    pub value: Number,
    pub pos: Pos,
}

impl PartialEq for Literal {
    fn eq(&self, other: &Self) -> bool {
        self.value == other.value
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct DistLit {
    pub entries: Vec<(Label, Literal)>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SpaceDecl {
    pub name: Name,
    pub body: SpaceBody,
}

#[derive(Clone, Debug, PartialEq)]
pub enum SpaceBody {
    Elements(Vec<Name>),
    /// `X * Y`: the product of two declared spaces, elements `(x, y)`.
    Product(Name, Name),
}

#[derive(Clone, Debug, PartialEq)]
pub struct PriorDecl {
    pub name: Name,
    pub space: Name,
    pub dist: DistLit,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ChannelDecl {
    pub name: Name,
    pub dom: Name,
    pub cod: Name,
    pub rows: Vec<(Label, DistLit)>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct LetDecl {
    pub name: Name,
    pub expr: Expr,
}

/// Pipeline expression. `Seq(a, b)` runs `a` then `b`.
#[derive(Clone, Debug)]
pub enum Expr {
    Var(Name),
    Seq(Box<Expr>, Box<Expr>, Pos),
    Tensor(Box<Expr>, Box<Expr>, Pos),
}

impl PartialEq for Expr {
    fn eq(&self, other: &Self) -> bool {
        match (self, other) {
            (Expr::Var(a), Expr::Var(b)) => a == b,
            (Expr::Seq(a1, b1, _), Expr::Seq(a2, b2, _))
            | (Expr::Tensor(a1, b1, _), Expr::Tensor(a2, b2, _)) => a1 == a2 && b1 == b2,
            _ => false,
        }
    }
}

impl Expr {
    pub fn pos(&self) -> Pos {
        match self {
            Expr::Var(n) => n.pos,
            Expr::Seq(_, _, p) | Expr::Tensor(_, _, p) => *p,
        }
    }

    /// Stages of a top-level `>>` chain, left to right.
    pub fn stages(&self) -> Vec<&Expr> {
        match self {
            Expr::Seq(a, b, _) => {
                let mut v = a.stages();
                v.extend(b.stages());
                v
            }
            other => vec![other],
        }
    }

    pub fn names(&self) -> Vec<&Name> {
        match self {
            Expr::Var(n) => vec![n],
            Expr::Seq(a, b, _) | Expr::Tensor(a, b, _) => {
                let mut v = a.names();
                v.extend(b.names());
                v
            }
        }
    }
}

/// An element label: a name, or a pair for product spaces.
#[derive(Clone, Debug)]
pub enum Label {
    Name(Name),
    Pair(Box<Label>, Box<Label>, Pos),
}

impl Label {
    pub fn pos(&self) -> Pos {
        match self {
            Label::Name(n) => n.pos,
            Label::Pair(_, _, p) => *p,
        }
    }

    /// The element label it denotes, with pairs encoded as `(a,b)`.
    pub fn label(&self) -> String {
        match self {
            Label::Name(n) => n.text.clone(),
            Label::Pair(a, b, _) => crate::space::pair_label(&a.label(), &b.label()),
        }
    }
}

impl PartialEq for Label {
    fn eq(&self, other: &Self) -> bool {
        match (self, other) {
            (Label::Name(a), Label::Name(b)) => a == b,
            (Label::Pair(a1, b1, _), Label::Pair(a2, b2, _)) => a1 == a2 && b1 == b2,
            _ => false,
        }
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Label::Name(n) => write!(f, "{n}"),
            Label::Pair(a, b, _) => write!(f, "({a}, {b})"),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum QueryKind {
    Infer,
    Predict,
    Verify,
    Laws,
}

impl QueryKind {
    pub fn keyword(self) -> &'static str {
        match self {
            QueryKind::Infer => "infer",
            QueryKind::Predict => "predict",
            QueryKind::Verify => "verify",
            QueryKind::Laws => "laws",
        }
    }
}

#[derive(Clone, Debug)]
pub struct Query {
    pub kind: QueryKind,
    pub pipeline: Expr,
    pub prior: Name,
    /// Present exactly for `infer`.
    pub observation: Option<Label>,
    pub pos: Pos,
}

impl PartialEq for Query {
    fn eq(&self, other: &Self) -> bool {
        self.kind == other.kind
            && self.pipeline == other.pipeline
            && self.prior == other.prior
            && self.observation == other.observation
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Stmt {
    Space(SpaceDecl),
    Prior(PriorDecl),
    Channel(ChannelDecl),
    Let(LetDecl),
    Query(Query),
}

/// A parsed model: statements in source order.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Model {
    pub stmts: Vec<Stmt>,
}

impl Model {
    pub fn declarations(&self) -> impl Iterator<Item = &Stmt> {
        self.stmts.iter().filter(|s| !matches!(s, Stmt::Query(_)))
    }

    pub fn queries(&self) -> impl Iterator<Item = &Query> {
        self.stmts.iter().filter_map(|s| match s {
            Stmt::Query(q) => Some(q),
            _ => None,
        })
    }
}
