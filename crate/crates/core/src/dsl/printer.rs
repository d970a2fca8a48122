use std::fmt::Write as _;

use super::ast::*;

pub const HEADER: &str = "# `c >> d` runs c first and then d, i.e. the composite d after c.\n";

fn dist(d: &DistLit) -> String {
    let entries: Vec<String> = d
        .entries
        .iter()
        .map(|(label, lit)| format!("{label}: {}", lit.value))
        .collect();
    format!("{{{}}}", entries.join(", "))
}

#[derive(Clone, Copy, PartialEq, PartialOrd)]
enum Level {
    Tensor,
    Seq,
    Atom,
}

fn expr_at(e: &Expr, level: Level) -> String {
    let (text, own) = match e {
        Expr::Var(n) => (n.text.clone(), Level::Atom),
        Expr::Seq(a, b, _) => (
            format!("{} >> {}", expr_at(a, Level::Seq), expr_at(b, Level::Atom)),
            Level::Seq,
        ),
        Expr::Tensor(a, b, _) => (
            format!("{} | {}", expr_at(a, Level::Tensor), expr_at(b, Level::Seq)),
            Level::Tensor,
        ),
    };
    if own < level {
        format!("({text})")
    } else {
        text
    }
}

/// Renders an expression with the minimal parentheses for its shape.
pub fn print_expr(e: &Expr) -> String {
    expr_at(e, Level::Tensor)
}

pub fn print_query(q: &Query) -> String {
    let mut out = format!("{} {} prior {}", q.kind.keyword(), print_expr(&q.pipeline), q.prior);
    if let Some(o) = &q.observation {
        let _ = write!(out, " observe {o}");
    }
    out
}

/// Canonical source text. Printing is idempotent and
/// `parse_model(print_model(m)) == m`.
pub fn print_model(model: &Model) -> String {
    let mut out = String::from(HEADER);
    for stmt in &model.stmts {
        match stmt {
            Stmt::Space(s) => {
                let _ = match &s.body {
                    SpaceBody::Elements(els) => {
                        let els: Vec<&str> = els.iter().map(|e| e.text.as_str()).collect();
                        writeln!(out, "space {} = {{{}}}", s.name, els.join(", "))
                    }
                    SpaceBody::Product(a, b) => writeln!(out, "space {} = {a} * {b}", s.name),
                };
            }
            Stmt::Prior(p) => {
                let _ = writeln!(out, "prior {} : {} = {}", p.name, p.space, dist(&p.dist));
            }
            Stmt::Channel(c) => {
                let _ = writeln!(out, "channel {} : {} -> {} = {{", c.name, c.dom, c.cod);
                for (label, row) in &c.rows {
                    let _ = writeln!(out, "  {label} -> {}", dist(row));
                }
                out.push_str("}\n");
            }
            Stmt::Let(l) => {
                let _ = writeln!(out, "let {} = {}", l.name, print_expr(&l.expr));
            }
            Stmt::Query(q) => {
                let _ = write!(
                    out,
                    "{} {} prior {}",
                    q.kind.keyword(),
                    print_expr(&q.pipeline),
                    q.prior
                );
                if let Some(o) = &q.observation {
                    let _ = write!(out, " observe {}", o);
                }
                out.push('\n');
            }
        }
    }
    out
}
