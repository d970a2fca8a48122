use std::collections::HashMap;

use super::ast::*;
use super::lexer::{tokenize, Spanned, Token};
use super::DslError;

pub const KEYWORDS: [&str; 9] = [
    "space", "prior", "channel", "let", "infer", "predict", "verify", "laws", "observe",
];

struct Parser {
    tokens: Vec<Spanned>,
    at: usize,
}

impl Parser {
    fn peek(&self) -> &Spanned {
        &self.tokens[self.at]
    }

    fn bump(&mut self) -> Spanned {
        let t = self.tokens[self.at].clone();
        if t.token != Token::Eof {
            self.at += 1;
        }
        t
    }

    fn error(&self, expected: &[&str]) -> DslError {
        let t = self.peek();
        DslError::Syntax {
            pos: t.pos,
            found: t.token.to_string(),
            expected: expected.iter().map(|s| s.to_string()).collect(),
        }
    }

    fn at_keyword(&self, kw: &str) -> bool {
        matches!(&self.peek().token, Token::Ident(s) if s == kw)
    }

    fn keyword(&mut self, kw: &str) -> Result<Pos, DslError> {
        if self.at_keyword(kw) {
            Ok(self.bump().pos)
        } else {
            Err(self.error(&[kw]))
        }
    }

    fn expect(&mut self, token: Token, shown: &str) -> Result<Pos, DslError> {
        if self.peek().token == token {
            Ok(self.bump().pos)
        } else {
            Err(self.error(&[shown]))
        }
    }

    fn eat(&mut self, token: &Token) -> bool {
        if &self.peek().token == token {
            self.bump();
            true
        } else {
            false
        }
    }

    fn ident(&mut self) -> Result<Name, DslError> {
        match &self.peek().token {
            Token::Ident(s) if !KEYWORDS.contains(&s.as_str()) => {
                let text = s.clone();
                let pos = self.bump().pos;
                Ok(Name { text, pos })
            }
            _ => Err(self.error(&["identifier"])),
        }
    }

    fn number(&mut self) -> Result<Literal, DslError> {
        match &self.peek().token {
            Token::Number(n) => {
                let value = n.clone();
                let pos = self.bump().pos;
                Ok(Literal { value, pos })
            }
            _ => Err(self.error(&["number"])),
        }
    }

    fn model(&mut self) -> Result<Model, DslError> {
        let mut stmts = Vec::new();
        while self.peek().token != Token::Eof {
            stmts.push(self.stmt()?);
        }
        Ok(Model { stmts })
    }

    fn stmt(&mut self) -> Result<Stmt, DslError> {
        let kw = match &self.peek().token {
            Token::Ident(s) => s.clone(),
            _ => String::new(),
        };
        match kw.as_str() {
            "space" => self.space().map(Stmt::Space),
            "prior" => self.prior().map(Stmt::Prior),
            "channel" => self.channel().map(Stmt::Channel),
            "let" => self.let_decl().map(Stmt::Let),
            "infer" | "predict" | "verify" | "laws" => self.query().map(Stmt::Query),
            _ => Err(self.error(&[
                "space", "prior", "channel", "let", "infer", "predict", "verify", "laws",
            ])),
        }
    }

    fn space(&mut self) -> Result<SpaceDecl, DslError> {
        self.keyword("space")?;
        let name = self.ident()?;
        self.expect(Token::Eq, "=")?;
        if !self.eat(&Token::LBrace) {
            let left = match self.ident() {
                Ok(n) => n,
                Err(_) => return Err(self.error(&["{", "identifier"])),
            };
            self.expect(Token::Star, "*")?;
            let right = self.ident()?;
            return Ok(SpaceDecl {
                name,
                body: SpaceBody::Product(left, right),
            });
        }
        let mut elements = vec![self.ident()?];
        while self.eat(&Token::Comma) {
            elements.push(self.ident()?);
        }
        self.expect(Token::RBrace, "}")?;
        Ok(SpaceDecl {
            name,
            body: SpaceBody::Elements(elements),
        })
    }

    fn dist(&mut self) -> Result<DistLit, DslError> {
        self.expect(Token::LBrace, "{")?;
        let mut entries = Vec::new();
        loop {
            let label = self.label()?;
            self.expect(Token::Colon, ":")?;
            entries.push((label, self.number()?));
            if !self.eat(&Token::Comma) {
                break;
            }
        }
        self.expect(Token::RBrace, "}")?;
        Ok(DistLit { entries })
    }

    fn prior(&mut self) -> Result<PriorDecl, DslError> {
        self.keyword("prior")?;
        let name = self.ident()?;
        self.expect(Token::Colon, ":")?;
        let space = self.ident()?;
        self.expect(Token::Eq, "=")?;
        let dist = self.dist()?;
        Ok(PriorDecl { name, space, dist })
    }

    fn channel(&mut self) -> Result<ChannelDecl, DslError> {
        self.keyword("channel")?;
        let name = self.ident()?;
        self.expect(Token::Colon, ":")?;
        let dom = self.ident()?;
        self.expect(Token::Arrow, "->")?;
        let cod = self.ident()?;
        self.expect(Token::Eq, "=")?;
        self.expect(Token::LBrace, "{")?;
        let mut rows = Vec::new();
        loop {
            let label = self.label()?;
            self.expect(Token::Arrow, "->")?;
            rows.push((label, self.dist()?));
            self.eat(&Token::Comma);
            if self.eat(&Token::RBrace) {
                break;
            }
        }
        Ok(ChannelDecl {
            name,
            dom,
            cod,
            rows,
        })
    }

    fn let_decl(&mut self) -> Result<LetDecl, DslError> {
        self.keyword("let")?;
        let name = self.ident()?;
        self.expect(Token::Eq, "=")?;
        let expr = self.expr()?;
        Ok(LetDecl { name, expr })
    }

    fn expr(&mut self) -> Result<Expr, DslError> {
        let mut lhs = self.seq()?;
        while self.peek().token == Token::Bar {
            let pos = self.bump().pos;
            let rhs = self.seq()?;
            lhs = Expr::Tensor(Box::new(lhs), Box::new(rhs), pos);
        }
        Ok(lhs)
    }

    fn seq(&mut self) -> Result<Expr, DslError> {
        let mut lhs = self.atom()?;
        while self.peek().token == Token::Then {
            let pos = self.bump().pos;
            let rhs = self.atom()?;
            lhs = Expr::Seq(Box::new(lhs), Box::new(rhs), pos);
        }
        Ok(lhs)
    }

    fn atom(&mut self) -> Result<Expr, DslError> {
        if self.eat(&Token::LParen) {
            let e = self.expr()?;
            self.expect(Token::RParen, ")")?;
            Ok(e)
        } else {
            match self.ident() {
                Ok(n) => Ok(Expr::Var(n)),
                Err(_) => Err(self.error(&["identifier", "("])),
            }
        }
    }

    fn label(&mut self) -> Result<Label, DslError> {
        if self.peek().token == Token::LParen {
            let pos = self.bump().pos;
            let a = self.label()?;
            self.expect(Token::Comma, ",")?;
            let b = self.label()?;
            self.expect(Token::RParen, ")")?;
            Ok(Label::Pair(Box::new(a), Box::new(b), pos))
        } else {
            match self.ident() {
                Ok(n) => Ok(Label::Name(n)),
                Err(_) => Err(self.error(&["element label", "("])),
            }
        }
    }

    fn query(&mut self) -> Result<Query, DslError> {
        let t = self.bump();
        let kind = match &t.token {
            Token::Ident(s) if s == "infer" => QueryKind::Infer,
            Token::Ident(s) if s == "predict" => QueryKind::Predict,
            Token::Ident(s) if s == "verify" => QueryKind::Verify,
            _ => QueryKind::Laws,
        };
        let pipeline = self.expr()?;
        self.keyword("prior")?;
        let prior = self.ident()?;
        let observation = if kind == QueryKind::Infer {
            self.keyword("observe")?;
            Some(self.label()?)
        } else {
            None
        };
        Ok(Query {
            kind,
            pipeline,
            prior,
            observation,
            pos: t.pos,
        })
    }
}

/// Parses a model and resolves names: each name is declared once per kind
/// and before its first use.
pub fn parse_model(src: &str) -> Result<Model, DslError> {
    let mut p = Parser {
        tokens: tokenize(src)?,
        at: 0,
    };
    let model = p.model()?;
    check_names(&model)?;
    Ok(model)
}

#[derive(Clone, Copy, PartialEq, Eq, Hash, Debug)]
enum Kind {
    Space,
    Prior,
    Channel,
}

impl Kind {
    fn label(self) -> &'static str {
        match self {
            Kind::Space => "space",
            Kind::Prior => "prior",
            Kind::Channel => "channel",
        }
    }
}

fn check_names(model: &Model) -> Result<(), DslError> {
    // every declaration up front, to tell forward references from unknown names
    let mut all: HashMap<(Kind, &str), Pos> = HashMap::new();
    let mut decls: Vec<(Kind, &Name)> = Vec::new();
    for s in &model.stmts {
        let d = match s {
            Stmt::Space(d) => Some((Kind::Space, &d.name)),
            Stmt::Prior(d) => Some((Kind::Prior, &d.name)),
            Stmt::Channel(d) => Some((Kind::Channel, &d.name)),
            Stmt::Let(d) => Some((Kind::Channel, &d.name)),
            Stmt::Query(_) => None,
        };
        if let Some((kind, name)) = d {
            if let Some(first) = all.get(&(kind, name.text.as_str())) {
                return Err(DslError::DuplicateName {
                    kind: kind.label(),
                    name: name.text.clone(),
                    pos: name.pos,
                    first: *first,
                });
            }
            all.insert((kind, name.text.as_str()), name.pos);
            decls.push((kind, name));
        }
    }

    let mut seen: HashMap<(Kind, &str), Pos> = HashMap::new();
    let resolve = |seen: &HashMap<(Kind, &str), Pos>, kind: Kind, n: &Name| -> Result<(), DslError> {
        if seen.contains_key(&(kind, n.text.as_str())) {
            return Ok(());
        }
        match all.get(&(kind, n.text.as_str())) {
            Some(declared) => Err(DslError::ForwardReference {
                kind: kind.label(),
                name: n.text.clone(),
                pos: n.pos,
                declared: *declared,
            }),
            None => Err(DslError::UndefinedName {
                kind: kind.label(),
                name: n.text.clone(),
                pos: n.pos,
            }),
        }
    };
    for s in &model.stmts {
        match s {
            Stmt::Space(d) => {
                if let SpaceBody::Product(a, b) = &d.body {
                    resolve(&seen, Kind::Space, a)?;
                    resolve(&seen, Kind::Space, b)?;
                }
                seen.insert((Kind::Space, &d.name.text), d.name.pos);
            }
            Stmt::Prior(d) => {
                resolve(&seen, Kind::Space, &d.space)?;
                seen.insert((Kind::Prior, &d.name.text), d.name.pos);
            }
            Stmt::Channel(d) => {
                resolve(&seen, Kind::Space, &d.dom)?;
                resolve(&seen, Kind::Space, &d.cod)?;
                seen.insert((Kind::Channel, &d.name.text), d.name.pos);
            }
            Stmt::Let(d) => {
                for n in d.expr.names() {
                    resolve(&seen, Kind::Channel, n)?;
                }
                seen.insert((Kind::Channel, &d.name.text), d.name.pos);
            }
            Stmt::Query(q) => {
                for n in q.pipeline.names() {
                    resolve(&seen, Kind::Channel, n)?;
                }
                resolve(&seen, Kind::Prior, &q.prior)?;
            }
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_space() {
        let m = parse_model("space X = {a, b}").unwrap();
        assert_eq!(m.stmts.len(), 1);
        match &m.stmts[0] {
            Stmt::Space(s) => {
                assert_eq!(s.name.text, "X");
                assert!(matches!(&s.body, SpaceBody::Elements(e) if e.len() == 2));
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn seq_binds_tighter_than_tensor() {
        let m = parse_model(
            "space X = {a}\nchannel f : X -> X = { a -> {a: 1} }\nlet g = f >> f | f >> f >> f",
        )
        .unwrap();
        let Stmt::Let(l) = &m.stmts[2] else { panic!() };
        let Expr::Tensor(a, b, _) = &l.expr else { panic!("{:?}", l.expr) };
        assert_eq!(a.stages().len(), 2);
        assert_eq!(b.stages().len(), 3);
        // left associative
        let Expr::Seq(inner, _, _) = b.as_ref() else { panic!() };
        assert!(matches!(inner.as_ref(), Expr::Seq(..)));
    }

    #[test]
    fn syntax_error_has_position_and_expectations() {
        match parse_model("space X = {a, b}\nprior P X = {a: 1}") {
            Err(DslError::Syntax { pos, expected, .. }) => {
                assert_eq!(pos, Pos { line: 2, col: 9 });
                assert_eq!(expected, vec![":".to_string()]);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn name_resolution_errors() {
        let dup = parse_model("space X = {a}\nspace X = {b}");
        assert!(matches!(dup, Err(DslError::DuplicateName { .. })));
        // different kinds may share a name
        assert!(parse_model("space X = {a}\nprior X : X = {a: 1}").is_ok());
        let fwd = parse_model("prior P : X = {a: 1}\nspace X = {a}");
        assert!(matches!(fwd, Err(DslError::ForwardReference { .. })));
        let unknown = parse_model("space X = {a}\nlet g = f");
        assert!(matches!(unknown, Err(DslError::UndefinedName { .. })));
    }

    #[test]
    fn infer_requires_observation_and_predict_forbids_it() {
        let head = "space X = {a}\nprior P : X = {a: 1}\nchannel f : X -> X = { a -> {a: 1} }\n";
        assert!(parse_model(&format!("{head}infer f prior P")).is_err());
        assert!(parse_model(&format!("{head}infer f prior P observe a")).is_ok());
        assert!(parse_model(&format!("{head}predict f prior P observe a")).is_err());
    }

    #[test]
    fn product_spaces_and_pair_labels() {
        let m = parse_model(
            "space X = {a, b}\nspace XX = X * X\nprior P : XX = {(a, b): 1/2, (b, (a, a)): 1/2}",
        )
        .unwrap();
        let Stmt::Prior(p) = &m.stmts[2] else { panic!() };
        assert_eq!(p.dist.entries[0].0.label(), "(a,b)");
        assert_eq!(p.dist.entries[1].0.label(), "(b,(a,a))");
        assert!(matches!(
            parse_model("space XX = X * X"),
            Err(DslError::UndefinedName { .. })
        ));
    }

    #[test]
    fn keywords_are_reserved() {
        assert!(parse_model("space prior = {a}").is_err());
        assert!(parse_model("space X = {observe}").is_err());
    }
}
