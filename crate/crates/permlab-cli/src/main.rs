//! Command line front end for the permanent laboratory.
//!
//! Exit codes: 0 on success, 1 when a computation rejects its input
//! (domain errors, failed verification checks), 2 for usage problems
//! (bad flags, unreadable or unparsable files).

mod report;
mod verify;

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::str::FromStr;

use clap::{Parser, Subcommand, ValueEnum};
use num::{BigInt, One};

use permlab::bounds::{
    circulant3, conjecture_values, construct_extremal, construct_rowsub_odd, fixed_sum_bound,
    malek_report, omega3_candidates, subdefect_bound, ConjectureKind,
};
use permlab::cycles::{build_graph, find_cycles, per_via_cycles};
use permlab::matrix::{Matrix, Rational};
use permlab::permanent::per_i_minus;
use permlab::search::{
    evidence_report, maximize, maximize_with_threads, ConstraintClass, SearchConfig,
};
use permlab::strategy::StrategyRegistry;
use permlab::transforms::{
    concentrate_rows, epsilon_shift, pair_up, zero_diagonalize, PreserveClass, StepKind,
    TransformStep,
};

use report::{
    emit, DecomposeReport, OutputFormat, PermanentReport, Report, TransformReport,
};

#[derive(Parser)]
#[command(
    name = "permlab",
    version,
    about = "Exact and numeric exploration of per(I - A) over substochastic matrices"
)]
struct Cli {
    /// Output encoding.
    #[arg(long, global = true, value_enum, default_value = "text")]
    format: OutputFormat,

    /// Write the report to this file instead of stdout.
    #[arg(long, global = true)]
    output: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum MethodArg {
    Naive,
    Ryser,
    Gray,
    Cycles,
}

impl MethodArg {
    fn name(self) -> &'static str {
        match self {
            MethodArg::Naive => "naive",
            MethodArg::Ryser => "ryser",
            MethodArg::Gray => "gray",
            MethodArg::Cycles => "cycles",
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum SourceArg {
    /// Exact maximum on the fixed-sum doubly substochastic slice.
    #[value(name = "fixed_sum")]
    FixedSum,
    /// Global bound 2^floor(n/2) for row substochastic matrices.
    Malek,
    /// Supremum over matrices with a given sub-defect.
    #[value(name = "sub_defect")]
    SubDefect,
    /// Conjectured maximum for doubly stochastic matrices of odd order.
    #[value(name = "odd_stochastic")]
    OddStochastic,
    /// Conjectured maximum on the order-3 fixed-sum slice.
    #[value(name = "omega3")]
    Omega3,
    /// Conjectured maximum for odd order with sum in (n - 1, n].
    #[value(name = "odd_substochastic")]
    OddSubstochastic,
}

#[derive(Clone, Copy, ValueEnum)]
enum ConstructKind {
    /// Swap blocks plus at most one small block, attaining the fixed-sum maximum.
    Extremal,
    /// Row substochastic odd-order witness that breaks a column sum.
    #[value(name = "rowsub_odd")]
    RowsubOdd,
    /// Order-3 circulant with a single off-diagonal weight x.
    Circulant3,
    /// Symmetric order-3 candidate for sum s.
    #[value(name = "omega3_symmetric")]
    Omega3Symmetric,
    /// Swap-plus-loop order-3 candidate for sum s.
    #[value(name = "omega3_swap_loop")]
    Omega3SwapLoop,
}

#[derive(Clone, Copy, ValueEnum)]
enum OpArg {
    #[value(name = "zero_diagonalize")]
    ZeroDiagonalize,
    #[value(name = "concentrate_rows")]
    ConcentrateRows,
    #[value(name = "pair_up")]
    PairUp,
    #[value(name = "epsilon_shift")]
    EpsilonShift,
}

#[derive(Clone, Copy, ValueEnum)]
enum PreserveArg {
    #[value(name = "row_substochastic")]
    RowSubstochastic,
    #[value(name = "doubly_substochastic")]
    DoublySubstochastic,
}

#[derive(Clone, Copy, ValueEnum)]
enum ClassArg {
    #[value(name = "doubly_substochastic_fixed_sum")]
    DoublySubstochasticFixedSum,
    #[value(name = "doubly_stochastic")]
    DoublyStochastic,
}

#[derive(Subcommand)]
enum Command {
    /// Evaluate per(A), or per(I - A) with --complement, from a matrix file.
    Permanent {
        /// Matrix file: first line is n, then n rows of rationals.
        #[arg(long)]
        input: PathBuf,
        #[arg(long, value_enum, default_value = "ryser")]
        method: MethodArg,
        /// Evaluate per(I - A) instead of per(A).
        #[arg(long)]
        complement: bool,
    },
    /// Report class membership, entry sum, and sub-defect of a matrix file.
    Classify {
        #[arg(long)]
        input: PathBuf,
    },
    /// Evaluate a proven bound or a conjectured value at given parameters.
    Bound {
        #[arg(long, value_enum, default_value = "fixed_sum")]
        source: SourceArg,
        #[arg(long)]
        n: Option<usize>,
        /// Entry sum, as a rational like 7/2 or a decimal like 3.5.
        #[arg(long)]
        s: Option<String>,
        /// Sub-defect, for --source sub_defect.
        #[arg(long)]
        k: Option<usize>,
    },
    /// Emit a named extremal or candidate matrix in the chosen format.
    Construct {
        #[arg(long, value_enum)]
        kind: ConstructKind,
        #[arg(long)]
        n: Option<usize>,
        #[arg(long)]
        s: Option<String>,
        /// Off-diagonal weight for --kind circulant3.
        #[arg(long)]
        x: Option<String>,
    },
    /// Apply a permanent-non-decreasing surgery and audit each step.
    Transform {
        #[arg(long)]
        input: PathBuf,
        #[arg(long, value_enum)]
        op: OpArg,
        /// Class the zero-diagonal surgery must preserve.
        #[arg(long, value_enum, default_value = "doubly_substochastic")]
        preserve: PreserveArg,
        /// Source row for --op epsilon_shift.
        #[arg(long)]
        row: Option<usize>,
        /// Destination column for --op epsilon_shift.
        #[arg(long)]
        col: Option<usize>,
        /// Mass to move for --op epsilon_shift.
        #[arg(long)]
        eps: Option<String>,
    },
    /// Decompose a one-positive-per-row matrix into vertex-disjoint cycles.
    Decompose {
        #[arg(long)]
        input: PathBuf,
    },
    /// Run the randomized ascent for max per(I - A) on a constraint slice.
    Search {
        /// JSON search configuration; flags below override its fields.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        n: Option<usize>,
        #[arg(long)]
        s: Option<f64>,
        #[arg(long, value_enum)]
        class: Option<ClassArg>,
        #[arg(long)]
        restarts: Option<usize>,
        /// Proposal steps per restart.
        #[arg(long)]
        steps: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        initial_step: Option<f64>,
        #[arg(long)]
        step_decay: Option<f64>,
        #[arg(long)]
        tolerance: Option<f64>,
    },
    /// Compare search results against scaled order-3 grid maxima (n = 3, 5, 7).
    Evidence {
        #[arg(long)]
        n: usize,
        /// Comma-separated sums; defaults to quarter steps over (n - 1, n].
        #[arg(long)]
        s_grid: Option<String>,
        /// Grid resolution for the exact order-3 scan.
        #[arg(long, default_value_t = 0.125)]
        grid_step: f64,
        #[arg(long)]
        restarts: Option<usize>,
        #[arg(long)]
        steps: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Run the deterministic self-check battery; exits 1 if any check fails.
    Verify,
}

enum CliError {
    /// Bad invocation or unusable input file; exit code 2.
    Usage(String),
    /// The computation itself rejected the request; exit code 1.
    Domain(permlab::Error),
}

impl From<permlab::Error> for CliError {
    fn from(e: permlab::Error) -> Self {
        CliError::Domain(e)
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(code) => code,
        Err(CliError::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(CliError::Domain(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}

fn run(cli: &Cli) -> Result<ExitCode, CliError> {
    let (report, code) = dispatch(&cli.command)?;
    let body = emit(&report, cli.format).map_err(CliError::Usage)?;
    match &cli.output {
        Some(path) => fs::write(path, &body)
            .map_err(|e| CliError::Usage(format!("cannot write {}: {e}", path.display())))?,
        None => print!("{body}"),
    }
    Ok(code)
}

fn dispatch(command: &Command) -> Result<(Report, ExitCode), CliError> {
    let ok = ExitCode::SUCCESS;
    match command {
        Command::Permanent {
            input,
            method,
            complement,
        } => {
            let a = read_matrix(input)?;
            let registry = StrategyRegistry::with_builtins();
            let strategy = registry.get(method.name())?;
            let result = if *complement {
                strategy.complement_permanent(&a)?
            } else {
                strategy.permanent(&a)?
            };
            let report = Report::Permanent(PermanentReport {
                method: method.name().to_string(),
                complement: *complement,
                n: a.order(),
                result,
            });
            Ok((report, ok))
        }
        Command::Classify { input } => {
            let a = read_matrix(input)?;
            Ok((Report::Classify(a.classify()), ok))
        }
        Command::Bound { source, n, s, k } => Ok((run_bound(*source, *n, s, *k)?, ok)),
        Command::Construct { kind, n, s, x } => Ok((run_construct(*kind, *n, s, x)?, ok)),
        Command::Transform {
            input,
            op,
            preserve,
            row,
            col,
            eps,
        } => {
            let a = read_matrix(input)?;
            Ok((run_transform(&a, *op, *preserve, *row, *col, eps)?, ok))
        }
        Command::Decompose { input } => {
            let a = read_matrix(input)?;
            let graph = build_graph(&a)?;
            let decomposition = find_cycles(&graph);
            let complement_permanent = per_via_cycles(&a)?;
            let report = Report::Decompose(DecomposeReport {
                decomposition,
                complement_permanent,
            });
            Ok((report, ok))
        }
        Command::Search {
            config,
            n,
            s,
            class,
            restarts,
            steps,
            seed,
            initial_step,
            step_decay,
            tolerance,
        } => {
            let mut cfg = match config {
                Some(path) => read_search_config(path)?,
                None => SearchConfig::default(),
            };
            if let Some(v) = n {
                cfg.n = *v;
            }
            if let Some(v) = s {
                cfg.s = *v;
            }
            if let Some(v) = class {
                cfg.class = match v {
                    ClassArg::DoublySubstochasticFixedSum => {
                        ConstraintClass::DoublySubstochasticFixedSum
                    }
                    ClassArg::DoublyStochastic => ConstraintClass::DoublyStochastic,
                };
            }
            if let Some(v) = restarts {
                cfg.restarts = *v;
            }
            if let Some(v) = steps {
                cfg.steps_per_restart = *v;
            }
            if let Some(v) = seed {
                cfg.seed = *v;
            }
            if let Some(v) = initial_step {
                cfg.initial_step = *v;
            }
            if let Some(v) = step_decay {
                cfg.step_decay = *v;
            }
            if let Some(v) = tolerance {
                cfg.tolerance = *v;
            }
            let result = match env_threads()? {
                Some(threads) => maximize_with_threads(&cfg, threads)?,
                None => maximize(&cfg)?,
            };
            Ok((Report::Search(result), ok))
        }
        Command::Evidence {
            n,
            s_grid,
            grid_step,
            restarts,
            steps,
            seed,
        } => {
            let grid = match s_grid {
                Some(list) => parse_f64_list(list)?,
                None => (1..=4)
                    .map(|q| *n as f64 - 1.0 + q as f64 / 4.0)
                    .collect(),
            };
            let mut base = SearchConfig::default();
            if let Some(v) = restarts {
                base.restarts = *v;
            }
            if let Some(v) = steps {
                base.steps_per_restart = *v;
            }
            if let Some(v) = seed {
                base.seed = *v;
            }
            let report = match env_threads()? {
                Some(threads) => {
                    let pool = rayon::ThreadPoolBuilder::new()
                        .num_threads(threads)
                        .build()
                        .map_err(|e| {
                            CliError::Usage(format!("cannot build a {threads}-thread pool: {e}"))
                        })?;
                    pool.install(|| evidence_report(*n, &grid, &base, *grid_step))?
                }
                None => evidence_report(*n, &grid, &base, *grid_step)?,
            };
            Ok((Report::Evidence(report), ok))
        }
        Command::Verify => {
            let report = verify::run_battery();
            let code = if report.failed == 0 {
                ok
            } else {
                ExitCode::from(1)
            };
            Ok((Report::Verify(report), code))
        }
    }
}

fn run_bound(
    source: SourceArg,
    n: Option<usize>,
    s: &Option<String>,
    k: Option<usize>,
) -> Result<Report, CliError> {
    let need_n = |n: Option<usize>, src: &str| {
        n.ok_or_else(|| CliError::Usage(format!("bound --source {src} requires --n")))
    };
    let need_s = |s: &Option<String>, src: &str| -> Result<Rational, CliError> {
        match s {
            Some(text) => parse_rational(text, "--s"),
            None => Err(CliError::Usage(format!("bound --source {src} requires --s"))),
        }
    };
    match source {
        SourceArg::FixedSum => {
            let n = need_n(n, "fixed_sum")?;
            let s = need_s(s, "fixed_sum")?;
            Ok(Report::Bound(fixed_sum_bound(n, &s)?))
        }
        SourceArg::Malek => {
            let n = need_n(n, "malek")?;
            Ok(Report::Bound(malek_report(n)?))
        }
        SourceArg::SubDefect => {
            let n = need_n(n, "sub_defect")?;
            let k = k.ok_or_else(|| {
                CliError::Usage("bound --source sub_defect requires --k".to_string())
            })?;
            Ok(Report::Bound(subdefect_bound(n, k)?))
        }
        SourceArg::OddStochastic => {
            let n = need_n(n, "odd_stochastic")?;
            let values = conjecture_values(&ConjectureKind::OddStochastic { n })?;
            Ok(Report::Conjecture(values))
        }
        SourceArg::Omega3 => {
            let s = need_s(s, "omega3")?;
            let values = conjecture_values(&ConjectureKind::Omega3 { s })?;
            Ok(Report::Conjecture(values))
        }
        SourceArg::OddSubstochastic => {
            let n = need_n(n, "odd_substochastic")?;
            let s = need_s(s, "odd_substochastic")?;
            let values = conjecture_values(&ConjectureKind::OddSubstochastic { n, s })?;
            Ok(Report::Conjecture(values))
        }
    }
}

fn run_construct(
    kind: ConstructKind,
    n: Option<usize>,
    s: &Option<String>,
    x: &Option<String>,
) -> Result<Report, CliError> {
    let need_n = |kind: &str| {
        n.ok_or_else(|| CliError::Usage(format!("construct --kind {kind} requires --n")))
    };
    let need_s = |kind: &str| -> Result<Rational, CliError> {
        match s {
            Some(text) => parse_rational(text, "--s"),
            None => Err(CliError::Usage(format!(
                "construct --kind {kind} requires --s"
            ))),
        }
    };
    let matrix = match kind {
        ConstructKind::Extremal => construct_extremal(need_n("extremal")?, &need_s("extremal")?)?,
        ConstructKind::RowsubOdd => {
            construct_rowsub_odd(need_n("rowsub_odd")?, &need_s("rowsub_odd")?)?
        }
        ConstructKind::Circulant3 => {
            let text = x.as_ref().ok_or_else(|| {
                CliError::Usage("construct --kind circulant3 requires --x".to_string())
            })?;
            circulant3(&parse_rational(text, "--x")?)?
        }
        ConstructKind::Omega3Symmetric => {
            omega3_candidates(&need_s("omega3_symmetric")?)?.symmetric
        }
        ConstructKind::Omega3SwapLoop => {
            omega3_candidates(&need_s("omega3_swap_loop")?)?.swap_plus_loop
        }
    };
    Ok(Report::Construct(matrix))
}

fn run_transform(
    a: &Matrix,
    op: OpArg,
    preserve: PreserveArg,
    row: Option<usize>,
    col: Option<usize>,
    eps: &Option<String>,
) -> Result<Report, CliError> {
    let (op_name, result, steps) = match op {
        OpArg::ZeroDiagonalize => {
            let preserve = match preserve {
                PreserveArg::RowSubstochastic => PreserveClass::RowSubstochastic,
                PreserveArg::DoublySubstochastic => PreserveClass::DoublySubstochastic,
            };
            let (m, steps) = zero_diagonalize(a, preserve)?;
            ("zero_diagonalize", m, steps)
        }
        OpArg::ConcentrateRows => {
            let (m, steps) = concentrate_rows(a)?;
            ("concentrate_rows", m, steps)
        }
        OpArg::PairUp => {
            let m = pair_up(a)?;
            let step = TransformStep {
                kind: StepKind::PairUp,
                indices: Vec::new(),
                epsilon: Rational::one(),
                per_before: per_i_minus(a).ok(),
                per_after: per_i_minus(&m).ok(),
            };
            ("pair_up", m, vec![step])
        }
        OpArg::EpsilonShift => {
            let row = row.ok_or_else(|| {
                CliError::Usage("transform --op epsilon_shift requires --row".to_string())
            })?;
            let col = col.ok_or_else(|| {
                CliError::Usage("transform --op epsilon_shift requires --col".to_string())
            })?;
            let eps = eps.as_ref().ok_or_else(|| {
                CliError::Usage("transform --op epsilon_shift requires --eps".to_string())
            })?;
            let eps = parse_rational(eps, "--eps")?;
            let m = epsilon_shift(a, row, col, &eps)?;
            let step = TransformStep {
                kind: StepKind::EpsilonShift,
                indices: vec![(row, col)],
                epsilon: eps,
                per_before: per_i_minus(a).ok(),
                per_after: per_i_minus(&m).ok(),
            };
            ("epsilon_shift", m, vec![step])
        }
    };
    Ok(Report::Transform(TransformReport {
        op: op_name.to_string(),
        steps,
        result,
    }))
}

fn read_matrix(path: &Path) -> Result<Matrix, CliError> {
    let text = fs::read_to_string(path)
        .map_err(|e| CliError::Usage(format!("cannot read {}: {e}", path.display())))?;
    Matrix::from_str(&text)
        .map_err(|e| CliError::Usage(format!("cannot parse {}: {e}", path.display())))
}

fn read_search_config(path: &Path) -> Result<SearchConfig, CliError> {
    let text = fs::read_to_string(path)
        .map_err(|e| CliError::Usage(format!("cannot read {}: {e}", path.display())))?;
    serde_json::from_str(&text)
        .map_err(|e| CliError::Usage(format!("cannot parse {}: {e}", path.display())))
}

/// Accepts "p/q", plain integers, and decimals like "3.5".
fn parse_rational(text: &str, flag: &str) -> Result<Rational, CliError> {
    let text = text.trim();
    if let Ok(r) = Rational::from_str(text) {
        return Ok(r);
    }
    if let Some((int_part, frac_part)) = text.split_once('.') {
        let digits = format!("{int_part}{frac_part}");
        if let (Ok(numer), false) = (digits.parse::<BigInt>(), frac_part.is_empty()) {
            if frac_part.chars().all(|c| c.is_ascii_digit()) {
                let denom = BigInt::from(10u32).pow(frac_part.len() as u32);
                return Ok(Rational::new(numer, denom));
            }
        }
    }
    Err(CliError::Usage(format!(
        "{flag}: cannot parse '{text}' as a rational (use p/q, an integer, or a decimal)"
    )))
}

fn parse_f64_list(text: &str) -> Result<Vec<f64>, CliError> {
    text.split(',')
        .map(|part| {
            part.trim().parse::<f64>().map_err(|e| {
                CliError::Usage(format!("--s-grid: cannot parse '{}': {e}", part.trim()))
            })
        })
        .collect()
}

fn env_threads() -> Result<Option<usize>, CliError> {
    match std::env::var("PERMLAB_THREADS") {
        Ok(value) => {
            let threads = value.trim().parse::<usize>().ok().filter(|t| *t >= 1);
            match threads {
                Some(t) => Ok(Some(t)),
                None => Err(CliError::Usage(format!(
                    "PERMLAB_THREADS must be a positive integer, got '{value}'"
                ))),
            }
        }
        Err(std::env::VarError::NotPresent) => Ok(None),
        Err(e) => Err(CliError::Usage(format!("PERMLAB_THREADS: {e}"))),
    }
}
