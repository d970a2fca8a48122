//! Acceptance run: one PASS/FAIL line per criterion, nonzero exit on any
//! failure. Runs as a plain binary so the lines are always printed.

use std::time::{Duration, Instant};

use blens_core::dsl::{self, gen::random_model, QueryOutcome};
use blens_core::harness::{
    check_density_props, check_structural_laws, cmd_laws, cmd_verify, CheckTally, Report, RunConfig,
};
use blens_core::lens::{check_putput_at, putget_counterexample, putput_counterexample, COUNTEREXAMPLE_GAP};
use blens_core::random::trial_rng;
use blens_core::{Channel, Dist, NumericMode, Rational, Scalar, Space};

const THEOREM_TRIALS: u64 = 1000;
const DENSITY_TRIALS: u64 = THEOREM_TRIALS / 4;
const PROPERTY_TRIALS: u64 = 500;
const STRUCTURAL_TRIALS: u64 = 200;
const ROUND_TRIP_MODELS: u64 = 200;
const SEARCH_BUDGET: u64 = 100;
const FLOAT_GAP: f64 = 1e-9;
const THEOREM_BUDGET: Duration = Duration::from_secs(30);

struct Outcome {
    ok: bool,
    detail: String,
}

fn tally_line(t: &CheckTally) -> String {
    format!("{} {}/{} max gap {}", t.name, t.passed, t.trials, t.max_gap)
}

fn all_pass(report: &Report, names: &[&str], trials: u64) -> Result<Vec<String>, String> {
    let mut lines = Vec::new();
    for name in names {
        let t = report.check(name).ok_or_else(|| format!("missing check {name}"))?;
        if t.passed != trials || t.failed != 0 || t.excluded != 0 {
            return Err(format!("{} (witness {:?})", tally_line(t), t.witness));
        }
        lines.push(tally_line(t));
    }
    Ok(lines)
}

fn outcome(result: Result<Vec<String>, String>) -> Outcome {
    match result {
        Ok(lines) => Outcome {
            ok: true,
            detail: lines.join("; "),
        },
        Err(detail) => Outcome { ok: false, detail },
    }
}

fn theorem(rational: &Report, float: &Report, elapsed: Duration) -> Outcome {
    outcome((|| {
        let mut lines = all_pass(rational, &["composition"], THEOREM_TRIALS)?;
        let exact = rational.check("composition").unwrap();
        if exact.max_gap != "0" {
            return Err(format!("rational gap {}", exact.max_gap));
        }
        let approx = float.check("composition").unwrap();
        if approx.passed != THEOREM_TRIALS || approx.max_gap_f64 > FLOAT_GAP {
            return Err(format!("float {}", tally_line(approx)));
        }
        lines.push(format!("float max gap {:e}", approx.max_gap_f64));
        if elapsed > THEOREM_BUDGET {
            return Err(format!("rational run took {elapsed:?}"));
        }
        lines.push(format!("rational run {:.1}s", elapsed.as_secs_f64()));
        Ok(lines)
    })())
}

fn density_route(rational: &Report) -> Outcome {
    outcome((|| {
        let lines = all_pass(rational, &["density_route", "density_composite"], DENSITY_TRIALS)?;
        for name in ["density_route", "density_composite"] {
            let t = rational.check(name).unwrap();
            if t.max_gap != "0" {
                return Err(format!("{name} gap {}", t.max_gap));
            }
        }
        Ok(lines)
    })())
}

fn bayes_relation(rational: &Report) -> Outcome {
    // the density checks also run the Bayes relation on every density-route inversion
    outcome(all_pass(rational, &["bayes_relation"], THEOREM_TRIALS).and_then(|mut lines| {
        lines.extend(all_pass(rational, &["density_route", "density_composite"], DENSITY_TRIALS)?);
        let chain = dsl::load::<Rational>(include_str!("fixtures/chain.blens")).map_err(|e| e.to_string())?;
        for q in &chain.queries {
            let inverse = blens_core::invert(&q.pipeline, &q.prior).map_err(|e| e.to_string())?;
            if !blens_core::satisfies_bayes_relation(&q.pipeline, &q.prior, &inverse.channel, 0.0)
                .map_err(|e| e.to_string())?
            {
                return Err("fixture inversion fails the Bayes relation".into());
            }
        }
        lines.push(format!("{} fixture inversions", chain.queries.len()));
        Ok(lines)
    }))
}

fn properties(config: &RunConfig) -> Outcome {
    outcome((|| {
        let report = check_density_props(&RunConfig {
            trials: PROPERTY_TRIALS,
            ..config.clone()
        })
        .map_err(|e| e.to_string())?;
        all_pass(
            &report,
            &[
                "composition_preserves_almost_equality",
                "almost_inverses_almost_equal",
                "effect_channels_almost_equal",
                "effect_precondition_filter",
                "density_blocks_almost_equality",
            ],
            PROPERTY_TRIALS,
        )
    })())
}

fn lens_laws(config: &RunConfig) -> Outcome {
    outcome((|| {
        let report = cmd_laws(config).map_err(|e| e.to_string())?;
        let mut lines = all_pass(&report, &["getput", "putget_at_prediction"], THEOREM_TRIALS)?;
        let small = RunConfig {
            trials: SEARCH_BUDGET,
            max_dim: 2,
            ..config.clone()
        };
        let putget = putget_counterexample::<Rational>(&small).map_err(|e| e.to_string())?;
        let putput = putput_counterexample::<Rational>(&small).map_err(|e| e.to_string())?;
        for (law, hit) in [("PutGet", &putget), ("PutPut", &putput)] {
            let gap = hit.report.gap.to_f64();
            if gap < COUNTEREXAMPLE_GAP || hit.trial >= SEARCH_BUDGET {
                return Err(format!("{law} witness too weak: gap {gap} at trial {}", hit.trial));
            }
            lines.push(format!("{law} witness gap {:.3} at trial {}", gap, hit.trial));
        }

        // uniform prior, BSC(0.2), the same observation twice
        let bit = Space::new("B", ["0", "1"]).unwrap();
        let bsc = Channel::binary_symmetric(&bit, Rational::from_ratio(1, 5)).unwrap();
        let uniform = Dist::uniform(&bit);
        let r = check_putput_at(&bsc, &uniform, 1, 1, 0.0)
            .map_err(|e| e.to_string())?
            .ok_or("BSC update has zero mass")?;
        if r.gap != Rational::from_ratio(12, 85) {
            return Err(format!("BSC PutPut gap {}", r.gap));
        }
        lines.push(format!("BSC PutPut gap {} = {:.3}", r.gap, r.gap.to_f64()));
        Ok(lines)
    })())
}

fn structural(config: &RunConfig) -> Outcome {
    outcome((|| {
        let report = check_structural_laws(&RunConfig {
            trials: STRUCTURAL_TRIALS,
            ..config.clone()
        })
        .map_err(|e| e.to_string())?;
        all_pass(
            &report,
            &[
                "comonoid_unitality",
                "comonoid_associativity",
                "comonoid_commutativity",
                "composition_associativity",
                "interchange",
                "copy_non_naturality_witness",
            ],
            STRUCTURAL_TRIALS,
        )
    })())
}

fn dsl_criterion(config: &RunConfig) -> Outcome {
    outcome((|| {
        let model = dsl::load::<Rational>(include_str!("fixtures/sprinkler.blens")).map_err(|e| e.to_string())?;
        let QueryOutcome::Posterior(post) = dsl::run_query(&model, 0, config).map_err(|e| e.to_string())? else {
            return Err("sprinkler query is not an inference".into());
        };
        let expected = Dist::new(
            post.space(),
            [("rain", Rational::from_ratio(9, 13)), ("dry", Rational::from_ratio(4, 13))],
        )
        .unwrap();
        if post != expected {
            return Err(format!("sprinkler posterior {post}"));
        }
        let mut lines = vec![format!("sprinkler posterior {post}")];
        for trial in 0..ROUND_TRIP_MODELS {
            let m = random_model(&mut trial_rng(config.seed, trial));
            let printed = dsl::print_model(&m);
            let reparsed = dsl::parse_model(&printed).map_err(|e| format!("model {trial}: {e}"))?;
            if reparsed != m || dsl::print_model(&reparsed) != printed {
                return Err(format!("model {trial} does not round-trip:\n{printed}"));
            }
            dsl::validate_model::<Rational>(&reparsed).map_err(|e| format!("model {trial}: {e}"))?;
        }
        lines.push(format!("{ROUND_TRIP_MODELS} generated models round-trip"));
        Ok(lines)
    })())
}

fn reproducibility(parallel: &Report, config: &RunConfig) -> Outcome {
    outcome((|| {
        let serial = cmd_verify(&RunConfig {
            parallel: false,
            ..config.clone()
        })
        .map_err(|e| e.to_string())?;
        let a = serde_json::to_string(&parallel.to_json(false)).unwrap();
        let b = serde_json::to_string(&serial.to_json(false)).unwrap();
        if a != b {
            return Err("serial and parallel reports differ".into());
        }
        Ok(vec![format!("{} byte report identical serial vs parallel", a.len())])
    })())
}

fn main() {
    let config = RunConfig {
        trials: THEOREM_TRIALS,
        ..RunConfig::default()
    };
    let started = Instant::now();
    let rational = cmd_verify(&config).expect("rational verify run");
    let elapsed = started.elapsed();
    let float = cmd_verify(&RunConfig {
        numeric_mode: NumericMode::Float,
        ..config.clone()
    })
    .expect("float verify run");

    let results = [
        ("compositionality theorem", theorem(&rational, &float, elapsed)),
        ("density route", density_route(&rational)),
        ("Bayes relation oracle", bayes_relation(&rational)),
        ("almost-equality properties", properties(&config)),
        ("lens laws", lens_laws(&config)),
        ("structural laws", structural(&config)),
        ("DSL", dsl_criterion(&config)),
        ("reproducibility", reproducibility(&rational, &config)),
    ];
    let mut failed = 0;
    for (i, (name, o)) in results.iter().enumerate() {
        println!(
            "{} criterion {}: {name}: {}",
            if o.ok { "PASS" } else { "FAIL" },
            i + 1,
            o.detail
        );
        failed += usize::from(!o.ok);
    }
    println!("acceptance: {} passed, {failed} failed", results.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
