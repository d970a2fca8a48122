use std::collections::HashMap;
use std::fmt;

use serde_json::{json, Map, Value};

use super::ast::*;
use super::DslError;
use crate::channel::{push_state, Channel};
use crate::dist::Dist;
use crate::error::Error;
use crate::harness::RunConfig;
use crate::inversion::{invert, satisfies_bayes_relation};
use crate::lens::{check_getput, check_putget_at, check_putput, verify_composition, LawReport};
use crate::scalar::Scalar;
use crate::space::Space;

/// A query with its pipeline evaluated.
#[derive(Clone, Debug)]
pub struct BoundQuery<S: Scalar> {
    pub query: Query,
    pub pipeline: Channel<S>,
    /// Channels of the top-level `>>` chain, in order.
    pub stages: Vec<Channel<S>>,
    pub prior: Dist<S>,
}

/// A validated model: every declaration evaluated and every query typed.
#[derive(Clone, Debug)]
pub struct BoundModel<S: Scalar> {
    pub ast: Model,
    /// Declared name and the space it denotes.
    pub spaces: Vec<(String, Space)>,
    pub priors: Vec<(String, Dist<S>)>,
    /// Declared channels and `let` bindings, in source order.
    pub channels: Vec<(String, Channel<S>)>,
    pub queries: Vec<BoundQuery<S>>,
}

fn at(pos: Pos) -> impl FnOnce(Error) -> DslError {
    move |source| DslError::Validation { pos, source }
}

/// Position of the first entry labelled `element`, if any.
fn label_pos<T>(entries: &[(Label, T)], element: &str) -> Option<Pos> {
    entries.iter().rev().find(|(l, _)| l.label() == element).map(|(l, _)| l.pos())
}

fn scalar<S: Scalar>(lit: &Literal) -> Result<S, DslError> {
    if let Number::Fraction(_, q) = &lit.value {
        if num_traits::Zero::is_zero(q) {
            return Err(DslError::Validation {
                pos: lit.pos,
                source: Error::InvalidNumber(lit.value.to_string()),
            });
        }
    }
    S::parse(&lit.value.to_string()).map_err(at(lit.pos))
}

fn dist<S: Scalar>(space: &Space, lit: &DistLit, fallback: Pos) -> Result<Dist<S>, DslError> {
    let masses = lit
        .entries
        .iter()
        .map(|(n, l)| Ok((n.label(), scalar::<S>(l)?)))
        .collect::<Result<Vec<_>, DslError>>()?;
    Dist::new(space, masses).map_err(|e| {
        let pos = match &e {
            Error::UnknownElement { element, .. } | Error::NegativeMass { element, .. } => {
                label_pos(&lit.entries, element).unwrap_or(fallback)
            }
            _ => fallback,
        };
        DslError::Validation { pos, source: e }
    })
}

struct Env<S: Scalar> {
    spaces: HashMap<String, Space>,
    priors: HashMap<String, Dist<S>>,
    channels: HashMap<String, Channel<S>>,
}

impl<S: Scalar> Env<S> {
    fn eval(&self, e: &Expr) -> Result<Channel<S>, DslError> {
        match e {
            Expr::Var(n) => Ok(self.channels[&n.text].clone()),
            Expr::Seq(a, b, pos) => self.eval(a)?.then(&self.eval(b)?).map_err(at(*pos)),
            Expr::Tensor(a, b, _) => Ok(self.eval(a)?.tensor(&self.eval(b)?)),
        }
    }
}

/// Evaluates every declaration and types every query. Errors carry the
/// position of the offending construct.
pub fn validate_model<S: Scalar>(model: &Model) -> Result<BoundModel<S>, DslError> {
    let mut env = Env::<S> {
        spaces: HashMap::new(),
        priors: HashMap::new(),
        channels: HashMap::new(),
    };
    let mut bound = BoundModel {
        ast: model.clone(),
        spaces: Vec::new(),
        priors: Vec::new(),
        channels: Vec::new(),
        queries: Vec::new(),
    };
    for stmt in &model.stmts {
        match stmt {
            Stmt::Space(d) => {
                let space = match &d.body {
                    SpaceBody::Elements(els) => Space::new(d.name.text.clone(), els.iter().map(|e| e.text.clone()))
                        .map_err(|e| {
                            let pos = match &e {
                                Error::DuplicateElement { element, .. } => els
                                    .iter()
                                    .rev()
                                    .find(|n| &n.text == element)
                                    .map_or(d.name.pos, |n| n.pos),
                                _ => d.name.pos,
                            };
                            DslError::Validation { pos, source: e }
                        })?,
                    SpaceBody::Product(a, b) => Space::product(&env.spaces[&a.text], &env.spaces[&b.text]),
                };
                env.spaces.insert(d.name.text.clone(), space.clone());
                bound.spaces.push((d.name.text.clone(), space));
            }
            Stmt::Prior(d) => {
                let space = &env.spaces[&d.space.text];
                let p = dist::<S>(space, &d.dist, d.name.pos)?;
                env.priors.insert(d.name.text.clone(), p.clone());
                bound.priors.push((d.name.text.clone(), p));
            }
            Stmt::Channel(d) => {
                let dom = &env.spaces[&d.dom.text];
                let cod = &env.spaces[&d.cod.text];
                let mut rows = Vec::with_capacity(d.rows.len());
                for (label, lit) in &d.rows {
                    rows.push((label.label(), dist::<S>(cod, lit, label.pos())?));
                }
                let c = Channel::from_table(dom, cod, rows).map_err(|e| {
                    let pos = match &e {
                        Error::UnknownElement { element, .. } | Error::DuplicateElement { element, .. } => {
                            label_pos(&d.rows, element).unwrap_or(d.name.pos)
                        }
                        _ => d.name.pos,
                    };
                    DslError::Validation { pos, source: e }
                })?;
                env.channels.insert(d.name.text.clone(), c.clone());
                bound.channels.push((d.name.text.clone(), c));
            }
            Stmt::Let(d) => {
                let c = env.eval(&d.expr)?;
                env.channels.insert(d.name.text.clone(), c.clone());
                bound.channels.push((d.name.text.clone(), c));
            }
            Stmt::Query(q) => {
                let pipeline = env.eval(&q.pipeline)?;
                let stages = q
                    .pipeline
                    .stages()
                    .into_iter()
                    .map(|s| env.eval(s))
                    .collect::<Result<Vec<_>, _>>()?;
                let prior = env.priors[&q.prior.text].clone();
                pipeline
                    .dom()
                    .ensure_eq(prior.space(), "query prior")
                    .map_err(at(q.prior.pos))?;
                if let Some(o) = &q.observation {
                    pipeline.cod().require(&o.label()).map_err(at(o.pos()))?;
                }
                bound.queries.push(BoundQuery {
                    query: q.clone(),
                    pipeline,
                    stages,
                    prior,
                });
            }
        }
    }
    Ok(bound)
}

/// Outcome of one `>>` split of a verified pipeline.
#[derive(Clone, Debug)]
pub struct SplitCheck<S: Scalar> {
    /// Number of stages on the left of the split.
    pub after: usize,
    pub holds: bool,
    pub gap: S,
}

#[derive(Clone, Debug)]
pub enum QueryOutcome<S: Scalar> {
    Posterior(Dist<S>),
    Prediction(Dist<S>),
    Verify {
        splits: Vec<SplitCheck<S>>,
        bayes_relation: bool,
    },
    Laws(Vec<LawReport<S>>),
}

impl<S: Scalar> QueryOutcome<S> {
    /// False when a verified equation fails. Expected law violations
    /// (PutPut) do not count.
    pub fn passed(&self) -> bool {
        match self {
            QueryOutcome::Posterior(_) | QueryOutcome::Prediction(_) => true,
            QueryOutcome::Verify {
                splits,
                bayes_relation,
            } => *bayes_relation && splits.iter().all(|s| s.holds),
            QueryOutcome::Laws(reports) => reports
                .iter()
                .filter(|r| r.law != crate::lens::Law::PutPut)
                .all(|r| r.holds),
        }
    }

    pub fn to_json(&self) -> Value {
        match self {
            QueryOutcome::Posterior(d) => json!({ "posterior": d.to_json() }),
            QueryOutcome::Prediction(d) => json!({ "prediction": d.to_json() }),
            QueryOutcome::Verify {
                splits,
                bayes_relation,
            } => json!({
                "passed": self.passed(),
                "bayes_relation": bayes_relation,
                "splits": splits
                    .iter()
                    .map(|s| json!({ "after": s.after, "holds": s.holds, "gap": s.gap.to_json() }))
                    .collect::<Vec<_>>(),
            }),
            QueryOutcome::Laws(reports) => {
                json!({ "laws": reports.iter().map(LawReport::to_json).collect::<Vec<_>>() })
            }
        }
    }
}

impl<S: Scalar> fmt::Display for QueryOutcome<S> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            QueryOutcome::Posterior(d) | QueryOutcome::Prediction(d) => write!(f, "{d}"),
            QueryOutcome::Verify {
                splits,
                bayes_relation,
            } => {
                write!(
                    f,
                    "{} (bayes relation {})",
                    if self.passed() { "PASS" } else { "FAIL" },
                    if *bayes_relation { "holds" } else { "fails" }
                )?;
                for s in splits {
                    write!(
                        f,
                        "\n  split after stage {}: {} gap {}",
                        s.after,
                        if s.holds { "holds" } else { "fails" },
                        s.gap
                    )?;
                }
                Ok(())
            }
            QueryOutcome::Laws(reports) => {
                for (i, r) in reports.iter().enumerate() {
                    if i > 0 {
                        writeln!(f)?;
                    }
                    write!(
                        f,
                        "{:?}: {} gap {}",
                        r.law,
                        if r.holds { "holds" } else { "fails" },
                        r.gap
                    )?;
                }
                Ok(())
            }
        }
    }
}

/// Runs the query at `index` (0-based) of a validated model.
pub fn run_query<S: Scalar>(
    model: &BoundModel<S>,
    index: usize,
    config: &RunConfig,
) -> Result<QueryOutcome<S>, DslError> {
    let tol = config.tol::<S>();
    let q = &model.queries[index];
    let pos = q.query.pos;
    let c = &q.pipeline;
    let prior = &q.prior;
    match q.query.kind {
        QueryKind::Infer => {
            let obs = q.query.observation.as_ref().expect("infer has an observation");
            let label = obs.label();
            let predicted = push_state(c, prior).map_err(at(pos))?;
            if predicted.mass(&label).map_err(at(obs.pos()))?.is_zero() {
                return Err(DslError::ZeroMassObservation {
                    pos: obs.pos(),
                    observation: label,
                    predicted: predicted.to_string(),
                });
            }
            let inverse = invert(c, prior).map_err(at(pos))?.channel;
            Ok(QueryOutcome::Posterior(
                inverse.row_of(&label).map_err(at(obs.pos()))?.clone(),
            ))
        }
        QueryKind::Predict => Ok(QueryOutcome::Prediction(push_state(c, prior).map_err(at(pos))?)),
        QueryKind::Verify => {
            let compose = |stages: &[Channel<S>]| -> Result<Channel<S>, DslError> {
                let mut acc = stages[0].clone();
                for s in &stages[1..] {
                    acc = acc.then(s).map_err(at(pos))?;
                }
                Ok(acc)
            };
            let mut splits = Vec::new();
            for k in 1..q.stages.len() {
                let left = compose(&q.stages[..k])?;
                let right = compose(&q.stages[k..])?;
                let check = verify_composition(&left, &right, prior, tol).map_err(at(pos))?;
                splits.push(SplitCheck {
                    after: k,
                    holds: check.holds,
                    gap: check.max_gap,
                });
            }
            let inverse = invert(c, prior).map_err(at(pos))?.channel;
            let bayes_relation = satisfies_bayes_relation(c, prior, &inverse, tol).map_err(at(pos))?;
            Ok(QueryOutcome::Verify {
                splits,
                bayes_relation,
            })
        }
        QueryKind::Laws => {
            let predicted = push_state(c, prior).map_err(at(pos))?;
            Ok(QueryOutcome::Laws(vec![
                check_getput(c, prior, tol).map_err(at(pos))?,
                check_putget_at(c, prior, &predicted, tol).map_err(at(pos))?,
                check_putput(c, prior, tol).map_err(at(pos))?,
            ]))
        }
    }
}

/// JSON export of a validated model: spaces, priors, channels (including
/// `let` bindings) and queries in canonical text.
pub fn export_model<S: Scalar>(model: &BoundModel<S>) -> Value {
    let mut spaces = Map::new();
    for (name, s) in &model.spaces {
        spaces.insert(name.clone(), json!(s.elements()));
    }
    let mut priors = Map::new();
    for (name, d) in &model.priors {
        priors.insert(name.clone(), d.to_json());
    }
    let mut channels = Map::new();
    for (name, c) in &model.channels {
        channels.insert(name.clone(), c.to_json());
    }
    let queries: Vec<Value> = model
        .queries
        .iter()
        .map(|q| {
            let mut v = json!({
                "kind": q.query.kind.keyword(),
                "pipeline": super::printer::print_expr(&q.query.pipeline),
                "prior": q.query.prior.text,
                "dom": q.pipeline.dom().name(),
                "cod": q.pipeline.cod().name(),
            });
            if let Some(o) = &q.query.observation {
                v["observe"] = json!(o.label());
            }
            v
        })
        .collect();
    json!({
        "numeric_mode": S::MODE,
        "spaces": spaces,
        "priors": priors,
        "channels": channels,
        "queries": queries,
    })
}
