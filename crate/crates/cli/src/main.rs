use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use blens_core::dsl::{self, BoundModel, DslError, QueryKind, QueryOutcome};
use blens_core::harness::{self, Format, Report, RunConfig, DEFAULT_SEED};
use blens_core::{NumericMode, Rational, Scalar};
use clap::{Args, Parser, Subcommand};
use serde_json::{json, Value};

const EXIT_INVALID: u8 = 2;
const EXIT_FAILED_CHECK: u8 = 4;

#[derive(Parser)]
#[command(name = "blens", version, about = "Exact Bayesian inversion, lens composition and model queries")]
struct Cli {
    #[command(flatten)]
    run: RunArgs,

    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct RunArgs {
    /// Seed for the per-trial random streams
    #[arg(long, global = true, env = "BLENS_SEED", default_value_t = DEFAULT_SEED)]
    seed: u64,

    /// Number of random trials
    #[arg(long, global = true, default_value_t = 1000)]
    trials: u64,

    /// Largest space size drawn (2 to 16)
    #[arg(long, global = true, default_value_t = 6)]
    max_dim: usize,

    /// Arithmetic backend: rational (exact) or float
    #[arg(long, global = true, default_value_t = NumericMode::Rational)]
    numeric: NumericMode,

    /// Comparison tolerance in float mode
    #[arg(long, global = true, default_value_t = 1e-9)]
    tolerance: f64,

    /// Output format: text or json
    #[arg(long, global = true, default_value = "text")]
    format: Format,

    /// Run trials on one thread
    #[arg(long, global = true)]
    serial: bool,

    /// Draw deterministic channels only (law searches)
    #[arg(long, global = true)]
    deterministic: bool,
}

impl RunArgs {
    fn config(&self) -> RunConfig {
        RunConfig {
            seed: self.seed,
            trials: self.trials,
            max_dim: self.max_dim,
            numeric_mode: self.numeric,
            tolerance: self.tolerance,
            format: self.format,
            deterministic: self.deterministic,
            parallel: !self.serial,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Parse and validate a model file
    Check { file: PathBuf },
    /// Run the queries of a model file
    Infer {
        file: PathBuf,
        /// Run only the N-th query (1-based)
        #[arg(long)]
        query: Option<usize>,
    },
    /// Randomized check that inversion of a composite equals the lens composite
    Verify,
    /// Lens-law checks on random channels, or on the `laws` queries of a model
    Laws { file: Option<PathBuf> },
    /// Print a validated model as JSON (or canonical source with --format text)
    Export { file: PathBuf },
}

struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn invalid(message: impl Into<String>) -> Self {
        Failure {
            code: EXIT_INVALID,
            message: message.into(),
        }
    }

    fn dsl(path: &Path, e: DslError) -> Self {
        Failure {
            code: e.exit_code() as u8,
            message: format!("{}:{e}", path.display()),
        }
    }
}

type Outcome = Result<(String, bool), Failure>;

fn read(path: &Path) -> Result<String, Failure> {
    std::fs::read_to_string(path).map_err(|e| Failure::invalid(format!("{}: {e}", path.display())))
}

fn load<S: Scalar>(path: &Path) -> Result<BoundModel<S>, Failure> {
    dsl::load::<S>(&read(path)?).map_err(|e| Failure::dsl(path, e))
}

fn pretty(v: &Value) -> String {
    serde_json::to_string_pretty(v).expect("json")
}

fn report_output(report: &Report, format: Format) -> Outcome {
    Ok((report.render(format), report.passed))
}

fn check<S: Scalar>(path: &Path, format: Format) -> Outcome {
    let model = load::<S>(path)?;
    let summary = json!({
        "ok": true,
        "spaces": model.spaces.len(),
        "priors": model.priors.len(),
        "channels": model.channels.len(),
        "queries": model.queries.len(),
    });
    let text = match format {
        Format::Json => pretty(&summary),
        Format::Text => format!(
            "OK: {} spaces, {} priors, {} channels, {} queries",
            model.spaces.len(),
            model.priors.len(),
            model.channels.len(),
            model.queries.len()
        ),
    };
    Ok((text, true))
}

fn run_queries<S: Scalar>(
    path: &Path,
    selected: Option<usize>,
    only: Option<QueryKind>,
    config: &RunConfig,
) -> Outcome {
    let model = load::<S>(path)?;
    let count = model.queries.len();
    let indices: Vec<usize> = match selected {
        Some(n) if n >= 1 && n <= count => vec![n - 1],
        Some(n) => return Err(Failure::invalid(format!("query {n} out of range: model has {count} queries"))),
        None => (0..count)
            .filter(|&i| only.is_none_or(|k| model.queries[i].query.kind == k))
            .collect(),
    };
    if indices.is_empty() {
        return Err(Failure::invalid(format!("{}: no matching queries", path.display())));
    }
    let mut passed = true;
    let mut texts = Vec::new();
    let mut values = Vec::new();
    for i in &indices {
        let outcome: QueryOutcome<S> = dsl::run_query(&model, *i, config).map_err(|e| Failure::dsl(path, e))?;
        passed &= outcome.passed();
        let source = dsl::print_query(&model.queries[*i].query);
        texts.push(if indices.len() == 1 {
            outcome.to_string()
        } else {
            format!("[{}] {source}\n{outcome}", i + 1)
        });
        values.push(json!({ "query": i + 1, "source": source, "result": outcome.to_json() }));
    }
    let text = match config.format {
        Format::Text => texts.join("\n"),
        Format::Json => pretty(&json!({ "file": path.display().to_string(), "results": values })),
    };
    Ok((text, passed))
}

fn export<S: Scalar>(path: &Path, format: Format) -> Outcome {
    let model = load::<S>(path)?;
    let text = match format {
        Format::Json => pretty(&dsl::export_model(&model)),
        Format::Text => dsl::print_model(&model.ast).trim_end().to_string(),
    };
    Ok((text, true))
}

fn dispatch<S: Scalar>(command: &Command, config: &RunConfig) -> Outcome {
    let harness_err = |e: blens_core::Error| Failure::invalid(e.to_string());
    match command {
        Command::Check { file } => check::<S>(file, config.format),
        Command::Infer { file, query } => run_queries::<S>(file, *query, None, config),
        Command::Verify => report_output(&harness::cmd_verify_as::<S>(config).map_err(harness_err)?, config.format),
        Command::Laws { file: None } => {
            report_output(&harness::cmd_laws_as::<S>(config).map_err(harness_err)?, config.format)
        }
        Command::Laws { file: Some(file) } => run_queries::<S>(file, None, Some(QueryKind::Laws), config),
        Command::Export { file } => export::<S>(file, config.format),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let config = cli.run.config();
    if let Err(e) = config.validate() {
        eprintln!("error: {e}");
        return ExitCode::from(EXIT_INVALID);
    }
    let result = match config.numeric_mode {
        NumericMode::Rational => dispatch::<Rational>(&cli.command, &config),
        NumericMode::Float => dispatch::<f64>(&cli.command, &config),
    };
    match result {
        Ok((text, passed)) => {
            // a closed pipe (`blens ... | head`) is not an error
            let _ = writeln!(std::io::stdout(), "{text}");
            if passed {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(EXIT_FAILED_CHECK)
            }
        }
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
