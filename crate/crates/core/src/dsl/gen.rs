//! Random well-typed models, for round-trip and evaluation tests.

use num_bigint::BigUint;
use rand::seq::SliceRandom;
use rand::Rng;

use super::ast::*;
use crate::space::Space;

struct Chan {
    name: String,
    dom: Space,
    cod: Space,
}

struct Gen<'r, R: Rng> {
    rng: &'r mut R,
    /// Declared name and the space it denotes.
    spaces: Vec<(String, Space)>,
    priors: Vec<(String, Space)>,
    chans: Vec<Chan>,
    stmts: Vec<Stmt>,
}

fn label_at(space: &Space, i: usize) -> Label {
    match space.factors() {
        Some((l, r)) => {
            let (a, b) = space.split_index(i);
            Label::Pair(Box::new(label_at(l, a)), Box::new(label_at(r, b)), Pos::default())
        }
        None => Label::Name(Name::new(space.element(i))),
    }
}

/// Largest channel matrix a generated tensor may produce.
const MAX_ENTRIES: usize = 4096;

fn var(name: &str) -> Expr {
    Expr::Var(Name::new(name))
}

impl<R: Rng> Gen<'_, R> {
    fn dist(&mut self, space: &Space) -> DistLit {
        let n = space.len();
        let support: Vec<usize> = if n > 1 && self.rng.gen_bool(0.3) {
            let mut idx: Vec<usize> = (0..n).collect();
            idx.shuffle(self.rng);
            idx.truncate(self.rng.gen_range(1..n));
            idx.sort_unstable();
            idx
        } else {
            (0..n).collect()
        };
        let values: Vec<Number> = if support.len() == 1 {
            vec![Number::Integer(BigUint::from(1u32))]
        } else if support.len() <= 20 && self.rng.gen_bool(0.5) {
            // hundredths summing to exactly one
            let mut cuts: Vec<u32> = (1..100).collect();
            cuts.shuffle(self.rng);
            cuts.truncate(support.len() - 1);
            cuts.sort_unstable();
            let mut prev = 0;
            cuts.into_iter()
                .chain([100])
                .map(|c| {
                    let v = Number::Decimal(f64::from(c - prev) / 100.0);
                    prev = c;
                    v
                })
                .collect()
        } else {
            let w: Vec<u32> = support.iter().map(|_| self.rng.gen_range(1..=9)).collect();
            let total: u32 = w.iter().sum();
            w.into_iter()
                .map(|k| Number::Fraction(BigUint::from(k), BigUint::from(total)))
                .collect()
        };
        DistLit {
            entries: support
                .iter()
                .zip(values)
                .map(|(&i, value)| {
                    let lit = Literal {
                        value,
                        pos: Pos::default(),
                    };
                    (label_at(space, i), lit)
                })
                .collect(),
        }
    }

    fn space(&mut self) {
        let k = self.spaces.len();
        let flat: Vec<Space> = self
            .spaces
            .iter()
            .filter(|(_, s)| s.factors().is_none())
            .map(|(_, s)| s.clone())
            .collect();
        if flat.len() >= 2 && self.rng.gen_bool(0.25) {
            let a = flat.choose(self.rng).unwrap().clone();
            let b = flat.choose(self.rng).unwrap().clone();
            let name = format!("P{k}");
            self.stmts.push(Stmt::Space(SpaceDecl {
                name: Name::new(&name),
                body: SpaceBody::Product(Name::new(a.name()), Name::new(b.name())),
            }));
            self.spaces.push((name, Space::product(&a, &b)));
            return;
        }
        let n = self.rng.gen_range(1..=4);
        let name = format!("S{k}");
        let stem = (b'a' + (k % 26) as u8) as char;
        let elements: Vec<String> = (0..n).map(|i| format!("{stem}{i}")).collect();
        self.stmts.push(Stmt::Space(SpaceDecl {
            name: Name::new(&name),
            body: SpaceBody::Elements(elements.iter().map(Name::new).collect()),
        }));
        let space = Space::new(&name, elements).expect("distinct labels");
        self.spaces.push((name, space));
    }

    fn prior(&mut self) {
        let (sname, space) = self.spaces.choose(self.rng).unwrap().clone();
        let name = format!("p{}", self.priors.len());
        let dist = self.dist(&space);
        self.stmts.push(Stmt::Prior(PriorDecl {
            name: Name::new(&name),
            space: Name::new(sname),
            dist,
        }));
        self.priors.push((name, space));
    }

    fn channel(&mut self, dom_at: usize) {
        let (dname, dom) = self.spaces[dom_at].clone();
        let (cname, cod) = self.spaces.choose(self.rng).unwrap().clone();
        let name = format!("c{}", self.chans.len());
        let rows = (0..dom.len())
            .map(|x| (label_at(&dom, x), self.dist(&cod)))
            .collect();
        self.stmts.push(Stmt::Channel(ChannelDecl {
            name: Name::new(&name),
            dom: Name::new(dname),
            cod: Name::new(cname),
            rows,
        }));
        self.chans.push(Chan { name, dom, cod });
    }

    /// A pipeline starting at `dom`, if some channel leaves it.
    fn pipeline_from(&mut self, dom: &Space, depth: usize) -> Option<(Expr, Space)> {
        let starts: Vec<usize> = (0..self.chans.len()).filter(|&i| &self.chans[i].dom == dom).collect();
        let &i = starts.choose(self.rng)?;
        let (mut expr, mut cod) = (var(&self.chans[i].name), self.chans[i].cod.clone());
        for _ in 0..depth {
            if !self.rng.gen_bool(0.5) {
                break;
            }
            match self.pipeline_from(&cod.clone(), 0) {
                Some((next, c)) => {
                    let nested = self.rng.gen_bool(0.3);
                    expr = if nested {
                        // right-nested chains print with parentheses
                        match expr {
                            Expr::Seq(a, b, p) => Expr::Seq(a, Box::new(Expr::Seq(b, Box::new(next), p)), p),
                            e => Expr::Seq(Box::new(e), Box::new(next), Pos::default()),
                        }
                    } else {
                        Expr::Seq(Box::new(expr), Box::new(next), Pos::default())
                    };
                    cod = c;
                }
                None => break,
            }
        }
        Some((expr, cod))
    }

    /// Any well-typed expression over the declared channels.
    fn expr(&mut self, depth: usize) -> (Expr, Space, Space) {
        let roll: f64 = self.rng.gen();
        if depth > 0 && roll < 0.35 {
            let (a, da, ca) = self.expr(depth - 1);
            let (b, db, cb) = self.expr(depth - 1);
            if da.len() * db.len() * ca.len() * cb.len() > MAX_ENTRIES {
                return (a, da, ca);
            }
            return (
                Expr::Tensor(Box::new(a), Box::new(b), Pos::default()),
                Space::product(&da, &db),
                Space::product(&ca, &cb),
            );
        }
        if depth > 0 && roll < 0.7 {
            let (a, da, ca) = self.expr(depth - 1);
            return match self.pipeline_from(&ca, 1) {
                Some((b, cb)) => (Expr::Seq(Box::new(a), Box::new(b), Pos::default()), da, cb),
                None => (a, da, ca),
            };
        }
        let c = self.chans.choose(self.rng).unwrap();
        (var(&c.name), c.dom.clone(), c.cod.clone())
    }

    fn let_decl(&mut self, k: usize) {
        let (expr, dom, cod) = self.expr(2);
        let name = format!("l{k}");
        self.stmts.push(Stmt::Let(LetDecl {
            name: Name::new(&name),
            expr,
        }));
        self.chans.push(Chan { name, dom, cod });
    }

    fn query(&mut self) -> bool {
        let (prior, space) = self.priors.choose(self.rng).unwrap().clone();
        let Some((pipeline, cod)) = self.pipeline_from(&space, 2) else {
            return false;
        };
        let kind = *[QueryKind::Infer, QueryKind::Predict, QueryKind::Verify, QueryKind::Laws]
            .choose(self.rng)
            .unwrap();
        let observation = (kind == QueryKind::Infer).then(|| {
            let y = self.rng.gen_range(0..cod.len());
            label_at(&cod, y)
        });
        self.stmts.push(Stmt::Query(Query {
            kind,
            pipeline,
            prior: Name::new(prior),
            observation,
            pos: Pos::default(),
        }));
        true
    }
}

/// A random model that parses and validates. Positions are left at their
/// defaults; structural equality ignores them.
pub fn random_model(rng: &mut impl Rng) -> Model {
    let mut g = Gen {
        rng,
        spaces: Vec::new(),
        priors: Vec::new(),
        chans: Vec::new(),
        stmts: Vec::new(),
    };
    for _ in 0..g.rng.gen_range(1..=4) {
        g.space();
    }
    for _ in 0..g.rng.gen_range(1..=2) {
        g.prior();
    }
    for i in 0..g.spaces.len() {
        g.channel(i);
    }
    for _ in 0..g.rng.gen_range(0..=2) {
        let i = g.rng.gen_range(0..g.spaces.len());
        g.channel(i);
    }
    for k in 0..g.rng.gen_range(0..=2) {
        g.let_decl(k);
    }
    for _ in 0..g.rng.gen_range(1..=3) {
        g.query();
    }
    Model { stmts: g.stmts }
}

