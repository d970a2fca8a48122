//! Randomized verification runs and their reports.
//!
//! Each run draws `trials` independent instances, one ChaCha stream per
//! trial index, evaluates the checked equations exactly (rational mode) or
//! within the configured tolerance (float mode), and aggregates the outcomes
//! in trial order. Serial and parallel runs therefore produce the same
//! report.

use std::fmt::{self, Write as _};
use std::str::FromStr;
use std::time::Instant;

use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;
use serde_json::Value;

use crate::channel::{push_state, Channel, Structural};
use crate::density::{
    almost_inverse, density_pattern, effect_seq, effects_almost_equal, invert_via_density,
    is_almost_inverse, DensityChannel, Effect,
};
use crate::dist::Dist;
use crate::error::{Error, Result};
use crate::inversion::{agree_on_support, almost_equal, invert, satisfies_bayes_relation, support_gap};
use crate::lens::{
    check_getput, check_putget_at, putput_counterexample, BayesLens,
};
use crate::random::{
    random_channel, random_density_channel, random_dim, random_dist, random_effect, random_measure,
    trial_rng,
};
use crate::scalar::{NumericMode, Rational, Scalar, TAU_CMP};
use crate::space::Space;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Text,
    Json,
}

impl FromStr for Format {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "text" => Ok(Format::Text),
            "json" => Ok(Format::Json),
            other => Err(format!("unknown format `{other}`")),
        }
    }
}

/// Settings shared by every randomized run.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RunConfig {
    pub seed: u64,
    pub trials: u64,
    pub max_dim: usize,
    pub numeric_mode: NumericMode,
    /// Comparison tolerance; only consulted in float mode.
    pub tolerance: f64,
    pub format: Format,
    /// Generate deterministic channels only (law searches).
    pub deterministic: bool,
    /// Run trials on the rayon pool. Not echoed: it never changes results.
    #[serde(skip)]
    pub parallel: bool,
}

pub const DEFAULT_SEED: u64 = 42;

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            seed: DEFAULT_SEED,
            trials: 1000,
            max_dim: 6,
            numeric_mode: NumericMode::Rational,
            tolerance: TAU_CMP,
            format: Format::Text,
            deterministic: false,
            parallel: true,
        }
    }
}

impl RunConfig {
    pub fn validate(&self) -> Result<(), String> {
        if self.trials == 0 {
            return Err("trials must be positive".into());
        }
        if !(2..=16).contains(&self.max_dim) {
            return Err(format!("max-dim must be in 2..=16, got {}", self.max_dim));
        }
        if !(self.tolerance >= 0.0 && self.tolerance.is_finite()) {
            return Err(format!("tolerance must be a nonnegative number, got {}", self.tolerance));
        }
        Ok(())
    }

    /// Tolerance in effect for the backend `S`.
    pub fn tol<S: Scalar>(&self) -> f64 {
        match S::MODE {
            NumericMode::Rational => 0.0,
            NumericMode::Float => self.tolerance,
        }
    }

    fn run_trials<T, F>(&self, count: u64, f: F) -> Vec<T>
    where
        T: Send,
        F: Fn(u64) -> T + Sync + Send,
    {
        if self.parallel {
            (0..count).into_par_iter().map(f).collect()
        } else {
            (0..count).map(f).collect()
        }
    }
}

/// Aggregate of one checked property across trials.
#[derive(Clone, Debug, Serialize)]
pub struct CheckTally {
    pub name: String,
    pub trials: u64,
    pub passed: u64,
    pub failed: u64,
    /// Trials whose precondition did not hold (not counted as passes).
    pub excluded: u64,
    /// Largest observed gap, exact text and as a float.
    pub max_gap: String,
    pub max_gap_f64: f64,
    /// Failures that are expected by the theory (informational).
    pub expected_failure: bool,
    /// When false, failures of this check do not fail the run.
    pub required: bool,
    /// Inputs of the first failing (or, for searches, the found) trial.
    pub witness: Option<Value>,
}

impl CheckTally {
    fn new(name: &str) -> Self {
        CheckTally {
            name: name.to_string(),
            trials: 0,
            passed: 0,
            failed: 0,
            excluded: 0,
            max_gap: "0".into(),
            max_gap_f64: 0.0,
            expected_failure: false,
            required: true,
            witness: None,
        }
    }

    fn informational(mut self) -> Self {
        self.required = false;
        self
    }

    fn record<S: Scalar>(&mut self, ok: bool, gap: Option<&S>, witness: impl FnOnce() -> Value) {
        self.trials += 1;
        if ok {
            self.passed += 1;
        } else {
            self.failed += 1;
            if self.witness.is_none() {
                self.witness = Some(witness());
            }
        }
        if let Some(g) = gap {
            if g.to_f64() > self.max_gap_f64 || (self.max_gap == "0" && !g.is_zero()) {
                self.max_gap = g.to_text();
                self.max_gap_f64 = g.to_f64();
            }
        }
    }

    fn exclude(&mut self) {
        self.trials += 1;
        self.excluded += 1;
    }

    pub fn ok(&self) -> bool {
        !self.required || self.failed == 0
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct Report {
    pub command: String,
    pub config: RunConfig,
    pub checks: Vec<CheckTally>,
    pub passed: bool,
    #[serde(skip)]
    pub wall_clock_ms: u128,
}

impl Report {
    fn new(command: &str, config: &RunConfig, checks: Vec<CheckTally>, started: Instant) -> Self {
        let passed = checks.iter().all(CheckTally::ok);
        Report {
            command: command.to_string(),
            config: config.clone(),
            checks,
            passed,
            wall_clock_ms: started.elapsed().as_millis(),
        }
    }

    pub fn check(&self, name: &str) -> Option<&CheckTally> {
        self.checks.iter().find(|c| c.name == name)
    }

    /// JSON payload; `timing` adds the wall clock, which is the only field
    /// that varies between identical runs.
    pub fn to_json(&self, timing: bool) -> Value {
        let mut v = serde_json::to_value(self).expect("report serializes");
        if timing {
            v["wall_clock_ms"] = serde_json::json!(self.wall_clock_ms as u64);
        }
        v
    }

    pub fn render(&self, format: Format) -> String {
        match format {
            Format::Json => serde_json::to_string_pretty(&self.to_json(true)).expect("json"),
            Format::Text => self.to_string(),
        }
    }
}

impl fmt::Display for Report {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let c = &self.config;
        writeln!(
            f,
            "{}: {} (seed={} trials={} max_dim={} numeric={})",
            self.command,
            if self.passed { "PASS" } else { "FAIL" },
            c.seed,
            c.trials,
            c.max_dim,
            c.numeric_mode
        )?;
        for t in &self.checks {
            let mut line = format!(
                "  {:<28} {}/{} passed",
                t.name,
                t.passed,
                t.trials - t.excluded
            );
            if t.excluded > 0 {
                let _ = write!(line, ", {} excluded", t.excluded);
            }
            let _ = write!(line, ", max gap {}", t.max_gap);
            if t.expected_failure {
                line.push_str(" (violations expected)");
            } else if !t.required {
                line.push_str(" (informational)");
            }
            writeln!(f, "{line}")?;
            if let Some(w) = &t.witness {
                if t.failed > 0 || !t.required {
                    writeln!(f, "    witness: {w}")?;
                }
            }
        }
        write!(f, "  wall clock {} ms", self.wall_clock_ms)
    }
}

/// Computes a Bayesian inverse; swapped out by negative controls.
pub type Inverter<S> = fn(&Channel<S>, &Dist<S>) -> Result<Channel<S>>;

pub fn exact_inverter<S: Scalar>(c: &Channel<S>, prior: &Dist<S>) -> Result<Channel<S>> {
    Ok(invert(c, prior)?.channel)
}

/// Negative control: the exact posterior mixed half-and-half with the prior.
#[doc(hidden)]
pub fn corrupted_inverter<S: Scalar>(c: &Channel<S>, prior: &Dist<S>) -> Result<Channel<S>> {
    let exact = invert(c, prior)?.channel;
    let half = S::from_ratio(1, 2);
    let rows = exact
        .rows()
        .iter()
        .map(|r| crate::dist::convex_mix(&[(half.clone(), r.clone()), (half.clone(), prior.clone())]))
        .collect::<Result<Vec<_>>>()?;
    Channel::from_rows(c.cod(), c.dom(), rows)
}

/// Inverters for the two sides of the composition check.
pub struct VerifyHooks<S: Scalar> {
    /// Inverts the composite channel.
    pub direct: Inverter<S>,
    /// Inverts each factor inside the lens composite.
    pub factors: Inverter<S>,
}

impl<S: Scalar> Clone for VerifyHooks<S> {
    fn clone(&self) -> Self {
        *self
    }
}

impl<S: Scalar> Copy for VerifyHooks<S> {}

impl<S: Scalar> Default for VerifyHooks<S> {
    fn default() -> Self {
        VerifyHooks {
            direct: exact_inverter,
            factors: exact_inverter,
        }
    }
}

fn lens_with<S: Scalar>(c: &Channel<S>, inverter: Inverter<S>) -> BayesLens<S> {
    let inner = c.clone();
    let backward = crate::inversion::StatChannel::new(c.dom(), c.cod(), c.dom(), move |prior| {
        inverter(&inner, prior)
    });
    BayesLens::new(c.clone(), backward).expect("backward indexed by the domain")
}

struct VerifyTrial<S: Scalar> {
    composition: (bool, S, Value),
    bayes: (bool, Value),
    density: Option<DensityTrial<S>>,
}

struct DensityTrial<S: Scalar> {
    route: (bool, S),
    composite: (bool, S),
    inputs: Value,
}

fn verify_trial<S: Scalar>(config: &RunConfig, hooks: VerifyHooks<S>, trial: u64) -> Result<VerifyTrial<S>> {
    let tol = config.tol::<S>();
    let mut rng = trial_rng(config.seed, trial);
    let x = Space::range("X", random_dim(&mut rng, config.max_dim));
    let y = Space::range("Y", random_dim(&mut rng, config.max_dim));
    let z = Space::range("Z", random_dim(&mut rng, config.max_dim));
    let c: Channel<S> = random_channel(&x, &y, &mut rng, false);
    let d: Channel<S> = random_channel(&y, &z, &mut rng, false);
    let prior: Dist<S> = random_dist(&x, &mut rng, false);

    let composite = c.then(&d)?;
    let direct = (hooks.direct)(&composite, &prior)?;
    let lens = lens_with(&c, hooks.factors)
        .then(&lens_with(&d, hooks.factors))?
        .update(&prior)?;
    let predicted = push_state(&composite, &prior)?;
    let holds = almost_equal(&direct, &lens, &predicted, tol)?;
    let gap = support_gap(&direct, &lens, &predicted)?;
    let inputs = serde_json::json!({
        "trial": trial,
        "c": c.to_json(),
        "d": d.to_json(),
        "prior": prior.to_json(),
    });

    let pushed = push_state(&c, &prior)?;
    let c_inv = (hooks.factors)(&c, &prior)?;
    let d_inv = (hooks.factors)(&d, &pushed)?;
    let bayes_ok = satisfies_bayes_relation(&c, &prior, &c_inv, tol)?
        && satisfies_bayes_relation(&d, &pushed, &d_inv, tol)?
        && satisfies_bayes_relation(&composite, &prior, &direct, tol)?
        && satisfies_bayes_relation(&composite, &prior, &lens, tol)?;

    let density = if trial.is_multiple_of(4) {
        Some(density_trial(config, trial, tol)?)
    } else {
        None
    };
    Ok(VerifyTrial {
        composition: (holds, gap, inputs.clone()),
        bayes: (bayes_ok, inputs),
        density,
    })
}

/// One density-route trial: both inversion routes agree on each factor and
/// the composite-effect form of the theorem holds.
fn density_trial<S: Scalar>(config: &RunConfig, trial: u64, tol: f64) -> Result<DensityTrial<S>> {
    // separate stream from the main trial
    let mut rng = trial_rng(config.seed ^ 0xD5A5_17E5, trial);
    let x = Space::range("X", random_dim(&mut rng, config.max_dim));
    let y = Space::range("Y", random_dim(&mut rng, config.max_dim));
    let z = Space::range("Z", random_dim(&mut rng, config.max_dim));
    let dc: DensityChannel<S> = random_density_channel(&x, &y, &mut rng, true);
    let dd: DensityChannel<S> = random_density_channel(&y, &z, &mut rng, true);
    let prior: Dist<S> = random_dist(&x, &mut rng, false);

    let c = dc.realize()?;
    let d = dd.realize()?;
    let pushed = push_state(&c, &prior)?;

    let mut route_ok = true;
    let mut route_gap = S::zero();
    for (dens, chan, state) in [(&dc, &c, &prior), (&dd, &d, &pushed)] {
        let via_density = invert_via_density(dens, state)?;
        let direct = invert(chan, state)?.channel;
        let predicted = push_state(chan, state)?;
        route_ok &= agree_on_support(&via_density, &direct, &predicted, tol)?;
        route_ok &= satisfies_bayes_relation(chan, state, &via_density, tol)?;
        route_gap = S::max_of(route_gap, support_gap(&via_density, &direct, &predicted)?);
    }

    let composite_effect = effect_seq(dc.density(), dc.base(), dd.density())?;
    let composite_dc = DensityChannel::new(composite_effect, dd.base().clone())?;
    let composite = c.then(&d)?;
    let realized_ok = composite_dc.realize()?.approx_eq(&composite, tol);
    let lens = invert_via_density(&dc, &prior)?;
    let lens = invert_via_density(&dd, &pushed)?.then(&lens)?;
    let direct = invert_via_density(&composite_dc, &prior)?;
    let predicted = push_state(&composite, &prior)?;
    let composite_ok = realized_ok
        && almost_equal(&direct, &lens, &predicted, tol)?
        && satisfies_bayes_relation(&composite, &prior, &direct, tol)?;
    let composite_gap = support_gap(&direct, &lens, &predicted)?;

    Ok(DensityTrial {
        route: (route_ok, route_gap),
        composite: (composite_ok, composite_gap),
        inputs: serde_json::json!({
            "trial": trial,
            "c": dc.to_json(),
            "d": dd.to_json(),
            "prior": prior.to_json(),
        }),
    })
}

/// Randomized check that Bayesian inversion composes as lenses do, plus the
/// density-function route on every fourth trial.
pub fn cmd_verify_with<S: Scalar>(config: &RunConfig, hooks: VerifyHooks<S>) -> Result<Report> {
    let started = Instant::now();
    let outcomes = config.run_trials(config.trials, |t| verify_trial(config, hooks, t));
    let mut composition = CheckTally::new("composition");
    let mut bayes = CheckTally::new("bayes_relation");
    let mut route = CheckTally::new("density_route");
    let mut composite = CheckTally::new("density_composite");
    for outcome in outcomes {
        let t = outcome?;
        let (ok, gap, inputs) = t.composition;
        composition.record(ok, Some(&gap), || inputs);
        let (ok, inputs) = t.bayes;
        bayes.record::<S>(ok, None, || inputs);
        if let Some(dt) = t.density {
            let inputs = dt.inputs;
            route.record(dt.route.0, Some(&dt.route.1), || inputs.clone());
            composite.record(dt.composite.0, Some(&dt.composite.1), || inputs);
        }
    }
    Ok(Report::new(
        "verify",
        config,
        vec![composition, bayes, route, composite],
        started,
    ))
}

pub fn cmd_verify_as<S: Scalar>(config: &RunConfig) -> Result<Report> {
    cmd_verify_with::<S>(config, VerifyHooks::default())
}

/// `verify` in the configured numeric mode.
pub fn cmd_verify(config: &RunConfig) -> Result<Report> {
    match config.numeric_mode {
        NumericMode::Rational => cmd_verify_as::<Rational>(config),
        NumericMode::Float => cmd_verify_as::<f64>(config),
    }
}

struct LawTrial<S: Scalar> {
    getput: (bool, S, Value),
    putget: (bool, S, Value),
    putget_dirac: (bool, S, Value),
}

fn law_trial<S: Scalar>(config: &RunConfig, trial: u64) -> Result<LawTrial<S>> {
    let tol = config.tol::<S>();
    let mut rng = trial_rng(config.seed, trial);
    let x = Space::range("X", random_dim(&mut rng, config.max_dim));
    let y = Space::range("Y", random_dim(&mut rng, config.max_dim));
    let c: Channel<S> = if config.deterministic {
        crate::random::random_deterministic(&x, &y, &mut rng)
    } else {
        random_channel(&x, &y, &mut rng, false)
    };
    let prior: Dist<S> = random_dist(&x, &mut rng, false);
    let to_parts = |r: crate::lens::LawReport<S>| {
        let v = r.to_json();
        (r.holds, r.gap, v)
    };
    let getput = to_parts(check_getput(&c, &prior, tol)?);
    let predicted = push_state(&c, &prior)?;
    let putget = to_parts(check_putget_at(&c, &prior, &predicted, tol)?);
    let obs = Dist::dirac_at(&y, rng.gen_range(0..y.len()));
    let putget_dirac = to_parts(check_putget_at(&c, &prior, &obs, tol)?);
    Ok(LawTrial {
        getput,
        putget,
        putget_dirac,
    })
}

/// Lens-law run: GetPut everywhere, PutGet at the predicted observation,
/// PutGet at random point observations (violations expected) and a PutPut
/// counterexample search.
pub fn cmd_laws_as<S: Scalar>(config: &RunConfig) -> Result<Report> {
    let started = Instant::now();
    let outcomes = config.run_trials(config.trials, |t| law_trial::<S>(config, t));
    let mut getput = CheckTally::new("getput");
    let mut putget = CheckTally::new("putget_at_prediction");
    let mut dirac = CheckTally::new("putget_at_point_observation").informational();
    dirac.expected_failure = true;
    for outcome in outcomes {
        let t = outcome?;
        getput.record(t.getput.0, Some(&t.getput.1), || t.getput.2.clone());
        putget.record(t.putget.0, Some(&t.putget.1), || t.putget.2.clone());
        dirac.record(t.putget_dirac.0, Some(&t.putget_dirac.1), || t.putget_dirac.2.clone());
    }

    let mut putput = CheckTally::new("putput_counterexample").informational();
    putput.expected_failure = true;
    match putput_counterexample::<S>(config) {
        Ok(hit) => {
            putput.trials = hit.trial + 1;
            putput.failed = 1;
            putput.passed = hit.trial;
            putput.max_gap = hit.report.gap.to_text();
            putput.max_gap_f64 = hit.report.gap.to_f64();
            let mut w = hit.report.to_json();
            w["trial"] = serde_json::json!(hit.trial);
            putput.witness = Some(w);
        }
        Err(Error::NotFound { trials }) => {
            putput.trials = trials;
            putput.passed = trials;
            putput.witness = Some(serde_json::json!("NotFound"));
        }
        Err(e) => return Err(e),
    }
    Ok(Report::new("laws", config, vec![getput, putget, dirac, putput], started))
}

pub fn cmd_laws(config: &RunConfig) -> Result<Report> {
    match config.numeric_mode {
        NumericMode::Rational => cmd_laws_as::<Rational>(config),
        NumericMode::Float => cmd_laws_as::<f64>(config),
    }
}

/// Replaces the rows of `c` outside `keep` with fresh random rows.
fn perturb_rows<S: Scalar>(
    c: &Channel<S>,
    keep: impl Fn(usize) -> bool,
    rng: &mut impl Rng,
) -> Channel<S> {
    let rows = (0..c.dom().len())
        .map(|x| {
            if keep(x) {
                c.row(x).clone()
            } else {
                random_dist(c.cod(), rng, false)
            }
        })
        .collect();
    Channel::from_rows(c.dom(), c.cod(), rows).expect("same shape")
}

struct PropTrial<S: Scalar> {
    comp_preserve: Option<bool>,
    inverse_almost_equal: Option<bool>,
    eff_chan: Option<bool>,
    eff_chan_control_excluded: bool,
    eff_blocks: Option<bool>,
    inputs: Value,
    _marker: std::marker::PhantomData<S>,
}

fn prop_trial<S: Scalar>(config: &RunConfig, trial: u64) -> Result<PropTrial<S>> {
    let tol = config.tol::<S>();
    let mut rng = trial_rng(config.seed, trial);
    let x = Space::range("X", random_dim(&mut rng, config.max_dim));
    let y = Space::range("Y", random_dim(&mut rng, config.max_dim));
    let z = Space::range("Z", random_dim(&mut rng, config.max_dim));

    // composition preserves almost-equality
    let state: Dist<S> = random_dist(&x, &mut rng, true);
    let f: Channel<S> = random_channel(&x, &y, &mut rng, false);
    let g = perturb_rows(&f, |i| !state.mass_at(i).is_zero(), &mut rng);
    let h: Channel<S> = random_channel(&y, &z, &mut rng, false);
    let comp_preserve = if almost_equal(&f, &g, &state, tol)? {
        Some(almost_equal(&f.then(&h)?, &g.then(&h)?, &state, tol)?)
    } else {
        None
    };

    // almost-inverses are almost-equal
    let mu = random_measure::<S>(&y, &mut rng, true);
    let e = random_effect::<S>(&y, &mut rng);
    let inv1 = almost_inverse(&e, &mu)?;
    let inv2 = Effect::from_fn(&y, |i| {
        if mu.in_support(i) {
            inv1.value_at(i)
        } else {
            S::from_ratio(i as i64 + 3, 2)
        }
    })?;
    let inverse_almost_equal =
        if is_almost_inverse(&e, &inv1, &mu, tol)? && is_almost_inverse(&e, &inv2, &mu, tol)? {
            Some(effects_almost_equal(&inv1, &inv2, &mu, tol)?)
        } else {
            None
        };

    // channels built from μ-almost-equal almost-inverses are μ-almost-equal
    let dc: DensityChannel<S> = random_density_channel(&x, &y, &mut rng, true);
    let prior: Dist<S> = random_dist(&x, &mut rng, false);
    let evidence = dc.evidence(&prior)?;
    let q = almost_inverse(&evidence, dc.base())?;
    let r = Effect::from_fn(&y, |i| {
        if dc.base().in_support(i) {
            q.value_at(i)
        } else {
            S::from_ratio(rng_value(trial, i), 1)
        }
    })?;
    let reference = dc.base().normalized();
    let precondition = |a: &Effect<S>, b: &Effect<S>| -> Result<bool> {
        Ok(effects_almost_equal(a, b, dc.base(), tol)?
            && is_almost_inverse(&evidence, a, dc.base(), tol)?
            && is_almost_inverse(&evidence, b, dc.base(), tol)?)
    };
    let eff_chan = if precondition(&q, &r)? {
        let alpha = density_pattern(dc.density(), &prior, &q)?;
        let beta = density_pattern(dc.density(), &prior, &r)?;
        Some(almost_equal(&alpha, &beta, &reference, tol)?)
    } else {
        None
    };
    // control: perturbing on the support must trip the precondition filter
    let on_support = dc.base().support_indices().next().expect("nonempty support");
    let bad = Effect::from_fn(&y, |i| {
        if i == on_support {
            q.value_at(i) + S::one()
        } else {
            q.value_at(i)
        }
    })?;
    let eff_chan_control_excluded = !precondition(&q, &bad)?;

    // almost-equality w.r.t. ν transfers to d ∘ ρ when d has a density
    let dd: DensityChannel<S> = random_density_channel(&y, &z, &mut rng, true);
    let w = Space::range("W", random_dim(&mut rng, config.max_dim));
    let f2: Channel<S> = random_channel(&z, &w, &mut rng, false);
    let g2 = perturb_rows(&f2, |i| dd.base().in_support(i), &mut rng);
    let nu = dd.base().normalized();
    let rho: Dist<S> = random_dist(&y, &mut rng, true);
    let eff_blocks = if almost_equal(&f2, &g2, &nu, tol)? {
        let pushed = push_state(&dd.realize()?, &rho)?;
        Some(almost_equal(&f2, &g2, &pushed, tol)?)
    } else {
        None
    };

    Ok(PropTrial {
        comp_preserve,
        inverse_almost_equal,
        eff_chan,
        eff_chan_control_excluded,
        eff_blocks,
        inputs: serde_json::json!({ "trial": trial, "seed": config.seed }),
        _marker: std::marker::PhantomData,
    })
}

fn rng_value(trial: u64, i: usize) -> i64 {
    1 + ((trial as i64 * 31 + i as i64 * 17) % 23)
}

fn tally_optional<S: Scalar>(tally: &mut CheckTally, outcome: Option<bool>, inputs: &Value) {
    match outcome {
        Some(ok) => tally.record::<S>(ok, None, || inputs.clone()),
        None => tally.exclude(),
    }
}

/// Almost-equality properties: composition preserves almost-equality,
/// almost-inverses are almost-equal, and the two effect lemmas used in the
/// density-function form of the composition theorem.
pub fn check_density_props_as<S: Scalar>(config: &RunConfig) -> Result<Report> {
    let started = Instant::now();
    let outcomes = config.run_trials(config.trials, |t| prop_trial::<S>(config, t));
    let mut comp = CheckTally::new("composition_preserves_almost_equality");
    let mut inv = CheckTally::new("almost_inverses_almost_equal");
    let mut chan = CheckTally::new("effect_channels_almost_equal");
    let mut control = CheckTally::new("effect_precondition_filter");
    let mut blocks = CheckTally::new("density_blocks_almost_equality");
    for outcome in outcomes {
        let t = outcome?;
        tally_optional::<S>(&mut comp, t.comp_preserve, &t.inputs);
        tally_optional::<S>(&mut inv, t.inverse_almost_equal, &t.inputs);
        tally_optional::<S>(&mut chan, t.eff_chan, &t.inputs);
        control.record::<S>(t.eff_chan_control_excluded, None, || t.inputs.clone());
        tally_optional::<S>(&mut blocks, t.eff_blocks, &t.inputs);
    }
    Ok(Report::new(
        "density-props",
        config,
        vec![comp, inv, chan, control, blocks],
        started,
    ))
}

pub fn check_density_props(config: &RunConfig) -> Result<Report> {
    match config.numeric_mode {
        NumericMode::Rational => check_density_props_as::<Rational>(config),
        NumericMode::Float => check_density_props_as::<f64>(config),
    }
}

struct StructuralTrial {
    results: [bool; 8],
    inputs: Value,
}

fn structural_trial<S: Scalar>(config: &RunConfig, trial: u64) -> Result<StructuralTrial> {
    let tol = config.tol::<S>();
    let mut rng = trial_rng(config.seed, trial);
    let dim = |rng: &mut rand_chacha::ChaCha8Rng| random_dim(rng, config.max_dim);
    let x = Space::range("X", dim(&mut rng));
    let y = Space::range("Y", dim(&mut rng));
    let z = Space::range("Z", dim(&mut rng));
    let w = Space::range("W", dim(&mut rng));

    let id_x = Channel::<S>::identity(&x);
    let copy = Channel::<S>::copy(&x);
    let discard = Channel::<S>::discard(&x);
    let unit_left = Channel::structural(Structural::Proj2, &[Space::unit(), x.clone()])?;
    let unit_right = Channel::structural(Structural::Proj1, &[x.clone(), Space::unit()])?;
    let counit_left = copy.then(&discard.tensor(&id_x))?.then(&unit_left)?;
    let counit_right = copy.then(&id_x.tensor(&discard))?.then(&unit_right)?;
    let unitality = counit_left.approx_eq(&id_x, tol) && counit_right.approx_eq(&id_x, tol);

    // coassociativity up to the canonical reassociation of X⊗X⊗X
    let xx = Space::product(&x, &x);
    let left_assoc = copy.then(&copy.tensor(&id_x))?;
    let right_assoc = copy.then(&id_x.tensor(&copy))?;
    let x_xx = Space::product(&x, &xx);
    let xx_x = Space::product(&xx, &x);
    let reassoc = Channel::<S>::from_index_map(&x_xx, &xx_x, |k| {
        let (a, bc) = x_xx.split_index(k);
        let (b, c) = xx.split_index(bc);
        xx_x.pair_index(xx.pair_index(a, b), c)
    });
    let associativity = right_assoc.then(&reassoc)?.approx_eq(&left_assoc, tol);

    let swap = Channel::<S>::structural(Structural::Swap, &[x.clone(), x.clone()])?;
    let commutativity = copy.then(&swap)?.approx_eq(&copy, tol);

    let p: Channel<S> = random_channel(&x, &y, &mut rng, false);
    let q: Channel<S> = random_channel(&y, &z, &mut rng, false);
    let r: Channel<S> = random_channel(&z, &w, &mut rng, false);
    let composition_assoc = p.then(&q)?.then(&r)?.approx_eq(&p.then(&q.then(&r)?)?, tol);

    let f2: Channel<S> = random_channel(&y, &w, &mut rng, false);
    let g2: Channel<S> = random_channel(&z, &x, &mut rng, false);
    let interchange = p
        .tensor(&q)
        .then(&f2.tensor(&g2))?
        .approx_eq(&p.then(&f2)?.tensor(&q.then(&g2)?), tol);

    // copy is natural only for deterministic channels
    let copy_y = Channel::<S>::copy(&y);
    let natural = p.then(&copy_y)?.approx_eq(&copy.then(&p.tensor(&p))?, tol);
    let non_naturality_witness = !natural && !p.rows_are_dirac();
    let det: Channel<S> = crate::random::random_deterministic(&x, &y, &mut rng);
    let natural_for_functions = det.then(&copy_y)?.approx_eq(&copy.then(&det.tensor(&det))?, tol);

    let causal = p.then(&Channel::discard(&y))?.approx_eq(&discard, tol);

    Ok(StructuralTrial {
        results: [
            unitality,
            associativity,
            commutativity,
            composition_assoc,
            interchange,
            non_naturality_witness,
            natural_for_functions,
            causal,
        ],
        inputs: serde_json::json!({ "trial": trial, "seed": config.seed }),
    })
}

/// Comonoid laws, associativity, interchange, causality and the
/// copy non-naturality witness on random instances.
pub fn check_structural_laws_as<S: Scalar>(config: &RunConfig) -> Result<Report> {
    const NAMES: [&str; 8] = [
        "comonoid_unitality",
        "comonoid_associativity",
        "comonoid_commutativity",
        "composition_associativity",
        "interchange",
        "copy_non_naturality_witness",
        "copy_natural_for_functions",
        "causality",
    ];
    let started = Instant::now();
    let outcomes = config.run_trials(config.trials, |t| structural_trial::<S>(config, t));
    let mut tallies: Vec<CheckTally> = NAMES.iter().map(|n| CheckTally::new(n)).collect();
    for outcome in outcomes {
        let t = outcome?;
        for (tally, ok) in tallies.iter_mut().zip(t.results) {
            tally.record::<S>(ok, None, || t.inputs.clone());
        }
    }
    Ok(Report::new("structural", config, tallies, started))
}

pub fn check_structural_laws(config: &RunConfig) -> Result<Report> {
    match config.numeric_mode {
        NumericMode::Rational => check_structural_laws_as::<Rational>(config),
        NumericMode::Float => check_structural_laws_as::<f64>(config),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small(trials: u64) -> RunConfig {
        RunConfig {
            trials,
            ..RunConfig::default()
        }
    }

    #[test]
    fn config_defaults_and_validation() {
        let c = RunConfig::default();
        assert_eq!((c.seed, c.trials, c.max_dim), (42, 1000, 6));
        assert_eq!(c.numeric_mode, NumericMode::Rational);
        assert_eq!(c.tolerance, 1e-9);
        assert_eq!(c.format, Format::Text);
        assert!(c.validate().is_ok());
        assert!(RunConfig { max_dim: 1, ..c.clone() }.validate().is_err());
        assert!(RunConfig { max_dim: 17, ..c.clone() }.validate().is_err());
        assert!(RunConfig { trials: 0, ..c.clone() }.validate().is_err());
        assert!(RunConfig { tolerance: -1.0, ..c }.validate().is_err());
    }

    #[test]
    fn verify_passes_and_serial_matches_parallel() {
        let parallel = cmd_verify(&small(24)).unwrap();
        assert!(parallel.passed, "{parallel}");
        let serial = cmd_verify(&RunConfig {
            parallel: false,
            ..small(24)
        })
        .unwrap();
        assert_eq!(parallel.to_json(false), serial.to_json(false));
        assert_eq!(parallel.check("density_route").unwrap().trials, 6);
    }

    #[test]
    fn corrupted_inversions_are_caught() {
        let config = small(8);
        let direct = cmd_verify_with::<Rational>(
            &config,
            VerifyHooks {
                direct: corrupted_inverter,
                factors: exact_inverter,
            },
        )
        .unwrap();
        assert!(!direct.passed);
        assert!(direct.check("composition").unwrap().witness.is_some());

        let factors = cmd_verify_with::<Rational>(
            &config,
            VerifyHooks {
                direct: exact_inverter,
                factors: corrupted_inverter,
            },
        )
        .unwrap();
        assert!(!factors.passed);
        assert!(factors.check("bayes_relation").unwrap().failed > 0);
    }

    #[test]
    fn laws_report_shape() {
        let report = cmd_laws(&small(30)).unwrap();
        assert!(report.passed, "{report}");
        assert_eq!(report.check("getput").unwrap().passed, 30);
        assert!(report.check("putput_counterexample").unwrap().failed == 1);

        let det = cmd_laws(&RunConfig {
            deterministic: true,
            ..small(30)
        })
        .unwrap();
        assert!(det.passed);
        assert_eq!(
            det.check("putput_counterexample").unwrap().witness,
            Some(serde_json::json!("NotFound"))
        );
    }

    #[test]
    fn property_and_structural_runs_pass() {
        let props = check_density_props(&small(40)).unwrap();
        assert!(props.passed, "{props}");
        let s = check_structural_laws(&small(20)).unwrap();
        assert!(s.passed, "{s}");
    }

    #[test]
    fn text_report_mentions_each_check() {
        let report = cmd_verify(&small(4)).unwrap();
        let text = report.render(Format::Text);
        for name in ["composition", "bayes_relation", "density_route", "density_composite"] {
            assert!(text.contains(name));
        }
        let json = report.render(Format::Json);
        assert!(json.contains("wall_clock_ms"));
    }
}
