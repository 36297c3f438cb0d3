use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use htplab_core::dataset::{emit_dataset, DataFormat};
use htplab_core::families::{RankTwoParams, WernerParams};
use htplab_core::fef::{
    fef_auto, fef_numeric, fef_rank2_analytic, fef_upper_bound, fef_werner_analytic, fidelity_from_fef, FefMethod,
    FefOptions, Thresholds,
};
use htplab_core::filter::{Filter, OptimizeOptions};
use htplab_core::htp::{default_sides, htp_check, rank2_sweep, werner_sweep, FilterStrategy, StateSpec, Tolerances};
use htplab_core::optics::{experiment_sweep, experiment_sweep_angles, BsmMode, ExperimentOptions, OpticalFilter};
use htplab_core::qmat::{CMatrix, MatrixFile};
use htplab_core::Error;

const EXIT_USAGE: u8 = 2;
const EXIT_NOT_CONVERGED: u8 = 3;
const EXIT_IO: u8 = 4;

#[derive(Parser)]
#[command(name = "htplab", version, about = "Teleportation power of bipartite states and local filters")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Fully entangled fraction and teleportation fidelity of a state.
    Fef(FefArgs),
    /// Test a state for hidden teleportation power.
    Htp(HtpArgs),
    /// Emit a dataset over a family parameter grid.
    Sweep(SweepArgs),
    /// Simulate the optical experiment over a grid of q values.
    Experiment(ExperimentArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum Family {
    Werner,
    Rank2,
}

#[derive(Args)]
struct StateArgs {
    #[arg(long, value_enum, conflicts_with = "matrix")]
    family: Option<Family>,
    #[arg(long)]
    d: Option<usize>,
    #[arg(long)]
    v: Option<f64>,
    #[arg(long)]
    q: Option<f64>,
    /// JSON file with `dim_a`, `dim_b` and row-major `[re, im]` entries.
    #[arg(long)]
    matrix: Option<PathBuf>,
}

#[derive(Args)]
struct SolverArgs {
    #[arg(long, default_value_t = 24)]
    restarts: usize,
    #[arg(long, default_value_t = 1e-10)]
    tol: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Iteration cap per restart.
    #[arg(long)]
    max_iter: Option<usize>,
}

#[derive(Args)]
struct FefArgs {
    #[command(flatten)]
    state: StateArgs,
    #[command(flatten)]
    solver: SolverArgs,
    /// Use the numeric optimizer even when a closed form applies.
    #[arg(long)]
    numeric: bool,
    /// Exit with status 3 if the optimizer did not converge.
    #[arg(long)]
    strict: bool,
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct HtpArgs {
    #[command(flatten)]
    state: StateArgs,
    #[command(flatten)]
    solver: SolverArgs,
    /// Search for the filter numerically instead of using the named one.
    #[arg(long)]
    optimize: bool,
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct SweepArgs {
    #[arg(long, value_enum)]
    family: Family,
    #[arg(long)]
    d: usize,
    /// Evenly spaced grid size; Werner grids include both ends of [0, 1],
    /// rank-two grids run over (0, 1].
    #[arg(long, conflicts_with = "values")]
    points: Option<usize>,
    /// Comma-separated parameter values; fractions such as `7/15` are accepted.
    #[arg(long, value_delimiter = ',', value_parser = parse_number)]
    values: Option<Vec<f64>>,
    #[arg(long)]
    optimize: bool,
    #[command(flatten)]
    solver: SolverArgs,
    #[arg(long, value_enum, default_value = "csv")]
    format: Format,
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum FilterArg {
    None,
    Kappa,
    KappaPrime,
}

#[derive(Clone, Copy, ValueEnum)]
enum BsmArg {
    Full,
    Partial,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Args)]
struct ExperimentArgs {
    /// Comma-separated q values (default k/15 for k = 1..10).
    #[arg(long, value_delimiter = ',', value_parser = parse_number, conflicts_with = "theta1")]
    values: Option<Vec<f64>>,
    /// Comma-separated θ1 angles in degrees, as an alternative to q.
    #[arg(long, value_delimiter = ',', value_parser = parse_number)]
    theta1: Option<Vec<f64>>,
    #[arg(long, value_enum, default_value = "none")]
    filter: FilterArg,
    #[arg(long, value_enum, default_value = "partial")]
    bsm: BsmArg,
    /// Correct Bell outcomes relative to the FEF-optimal maximally entangled state.
    #[arg(long)]
    align: bool,
    /// Measurements per Pauli setting and input; noiseless when absent.
    #[arg(long)]
    shots: Option<u64>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 1.0)]
    base_rate: f64,
    /// Source visibility in [0, 1]; ideal when absent.
    #[arg(long)]
    visibility: Option<f64>,
    #[arg(long, value_enum, default_value = "csv")]
    format: Format,
    #[arg(long)]
    output: Option<PathBuf>,
}

fn parse_number(s: &str) -> Result<f64, String> {
    let s = s.trim();
    let parsed = match s.split_once('/') {
        Some((n, d)) => {
            let n: f64 = n.trim().parse().map_err(|e| format!("{s}: {e}"))?;
            let d: f64 = d.trim().parse().map_err(|e| format!("{s}: {e}"))?;
            if d == 0.0 {
                return Err(format!("{s}: zero denominator"));
            }
            n / d
        }
        None => s.parse().map_err(|e| format!("{s}: {e}"))?,
    };
    if parsed.is_finite() {
        Ok(parsed)
    } else {
        Err(format!("{s}: not finite"))
    }
}

enum Failure {
    Usage(String),
    Core(Error),
    NotConverged,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Core(e)
    }
}

type CliResult<T> = Result<T, Failure>;

fn required<T>(value: Option<T>, flag: &str) -> CliResult<T> {
    value.ok_or_else(|| Failure::Usage(format!("missing --{flag}")))
}

fn state_spec(args: &StateArgs) -> CliResult<(StateSpec, String)> {
    if let Some(path) = &args.matrix {
        let text = std::fs::read_to_string(path).map_err(Error::from)?;
        let file: MatrixFile = serde_json::from_str(&text).map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))?;
        let rho = file.into_density()?;
        return Ok((StateSpec::Matrix(rho).recognize(), "matrix".into()));
    }
    let family = required(args.family, "family")?;
    let d = required(args.d, "d")?;
    match family {
        Family::Werner => {
            let v = required(args.v, "v")?;
            Ok((StateSpec::Werner(WernerParams::new(d, v)?), "werner".into()))
        }
        Family::Rank2 => {
            let q = required(args.q, "q")?;
            Ok((StateSpec::RankTwo(RankTwoParams::new(d, q)?), "rank2".into()))
        }
    }
}

fn fef_options(s: &SolverArgs) -> FefOptions {
    let base = FefOptions::default();
    FefOptions {
        restarts: s.restarts,
        tol: s.tol,
        seed: s.seed,
        max_iter: s.max_iter.unwrap_or(base.max_iter),
    }
}

fn optimize_options(s: &SolverArgs, spec: &StateSpec) -> OptimizeOptions {
    let base = OptimizeOptions::default();
    OptimizeOptions {
        sides: default_sides(spec),
        restarts: s.restarts,
        seed: s.seed,
        max_iter: s.max_iter.unwrap_or(base.max_iter),
        ..base
    }
}

fn write_text(text: &str, dest: Option<&Path>) -> CliResult<()> {
    match dest {
        Some(p) => std::fs::write(p, text).map_err(Error::from)?,
        None => print!("{text}"),
    }
    Ok(())
}

fn write_json<T: Serialize>(value: &T, dest: Option<&Path>) -> CliResult<()> {
    let mut text = serde_json::to_string_pretty(value).map_err(Error::from)?;
    text.push('\n');
    write_text(&text, dest)
}

#[derive(Serialize)]
struct FefReport {
    family: String,
    d: usize,
    #[serde(rename = "F")]
    fef: f64,
    f: f64,
    useful: bool,
    thresholds: Thresholds,
    method: FefMethod,
    upper_bound: f64,
    gap: f64,
    converged: bool,
}

fn cmd_fef(args: &FefArgs) -> CliResult<()> {
    let (spec, family) = state_spec(&args.state)?;
    let opts = fef_options(&args.solver);
    let rho = spec.density();
    let d = rho.local_dim()?;
    let upper_bound = fef_upper_bound(&rho)?;
    let (fef, method, converged) = match (&spec, args.numeric) {
        (StateSpec::Werner(p), false) => (fef_werner_analytic(*p), FefMethod::AnalyticWerner, true),
        (StateSpec::RankTwo(p), false) => (fef_rank2_analytic(*p), FefMethod::AnalyticRank2, true),
        (_, true) => {
            let r = fef_numeric(&rho, &opts)?;
            (r.value, r.method, r.converged)
        }
        (StateSpec::Matrix(_), false) => {
            let r = fef_auto(&rho, &opts)?;
            (r.value, r.method, r.converged)
        }
    };
    let thresholds = Thresholds::new(d);
    let report = FefReport {
        family,
        d,
        fef,
        f: fidelity_from_fef(fef, d),
        useful: fef > thresholds.fef_classical,
        thresholds,
        method,
        upper_bound,
        gap: upper_bound - fef,
        converged,
    };
    write_json(&report, args.output.as_deref())?;
    if args.strict && !converged {
        return Err(Failure::NotConverged);
    }
    Ok(())
}

#[derive(Serialize)]
struct FilterReport {
    a: MatrixEntries,
    b: MatrixEntries,
}

#[derive(Serialize)]
struct MatrixEntries {
    rows: usize,
    cols: usize,
    entries: Vec<[f64; 2]>,
}

impl From<&CMatrix> for MatrixEntries {
    fn from(m: &CMatrix) -> Self {
        let mut entries = Vec::with_capacity(m.len());
        for r in 0..m.nrows() {
            for c in 0..m.ncols() {
                entries.push([m[(r, c)].re, m[(r, c)].im]);
            }
        }
        Self {
            rows: m.nrows(),
            cols: m.ncols(),
            entries,
        }
    }
}

impl From<&Filter> for FilterReport {
    fn from(f: &Filter) -> Self {
        Self {
            a: f.a().into(),
            b: f.b().into(),
        }
    }
}

#[derive(Serialize)]
struct Margins {
    before: f64,
    after: f64,
}

#[derive(Serialize)]
struct HtpReport {
    family: String,
    d: usize,
    strategy: &'static str,
    useless_before: bool,
    useful_after: bool,
    has_htp: bool,
    boundary: bool,
    #[serde(rename = "F_before")]
    fef_before: f64,
    #[serde(rename = "F_after")]
    fef_after: f64,
    p_success: f64,
    margins: Margins,
    filter: FilterReport,
}

fn cmd_htp(args: &HtpArgs) -> CliResult<()> {
    let (spec, family) = state_spec(&args.state)?;
    let d = spec.density().local_dim()?;
    let strategy = if args.optimize || matches!(spec, StateSpec::Matrix(_)) {
        FilterStrategy::Optimized(optimize_options(&args.solver, &spec))
    } else {
        FilterStrategy::Named
    };
    let verdict = htp_check(&spec, &strategy, &Tolerances::default())?;
    let report = HtpReport {
        family,
        d,
        strategy: match strategy {
            FilterStrategy::Named => "named",
            FilterStrategy::Optimized(_) => "optimized",
        },
        useless_before: verdict.useless_before,
        useful_after: verdict.useful_after,
        has_htp: verdict.has_htp,
        boundary: verdict.boundary,
        fef_before: verdict.fef_before,
        fef_after: verdict.fef_after,
        p_success: verdict.p_success,
        margins: Margins {
            before: verdict.margins.0,
            after: verdict.margins.1,
        },
        filter: (&verdict.filter_used).into(),
    };
    write_json(&report, args.output.as_deref())
}

fn data_format(f: Format) -> DataFormat {
    match f {
        Format::Csv => DataFormat::Csv,
        Format::Json => DataFormat::Json,
    }
}

fn sweep_grid(args: &SweepArgs) -> CliResult<Vec<f64>> {
    if let Some(v) = &args.values {
        return Ok(v.clone());
    }
    let n = args.points.unwrap_or(101);
    if n == 0 {
        return Err(Failure::Usage("--points must be positive".into()));
    }
    Ok(match args.family {
        Family::Werner if n == 1 => vec![0.0],
        Family::Werner => (0..n).map(|k| k as f64 / (n - 1) as f64).collect(),
        Family::Rank2 => (1..=n).map(|k| k as f64 / n as f64).collect(),
    })
}

fn cmd_sweep(args: &SweepArgs) -> CliResult<()> {
    let grid = sweep_grid(args)?;
    let spec = match args.family {
        Family::Werner => StateSpec::Werner(WernerParams::new(args.d, 0.0)?),
        Family::Rank2 => StateSpec::RankTwo(RankTwoParams::new(args.d, 1.0)?),
    };
    let opt = args.optimize.then(|| optimize_options(&args.solver, &spec));
    let rows = match args.family {
        Family::Werner => werner_sweep(args.d, &grid, opt.as_ref())?,
        Family::Rank2 => rank2_sweep(args.d, &grid, opt.as_ref())?,
    };
    emit_dataset(&rows, data_format(args.format), args.output.as_deref())?;
    Ok(())
}

fn cmd_experiment(args: &ExperimentArgs) -> CliResult<()> {
    let opts = ExperimentOptions {
        filter: match args.filter {
            FilterArg::None => OpticalFilter::None,
            FilterArg::Kappa => OpticalFilter::Kappa,
            FilterArg::KappaPrime => OpticalFilter::KappaPrime,
        },
        bsm: match args.bsm {
            BsmArg::Full => BsmMode::Full,
            BsmArg::Partial => BsmMode::Partial,
        },
        align: args.align,
        shots: args.shots,
        seed: args.seed,
        base_rate: args.base_rate,
        source_visibility: args.visibility,
    };
    let rows = match (&args.values, &args.theta1) {
        (Some(qs), _) => experiment_sweep(qs, &opts)?,
        (None, Some(t)) => experiment_sweep_angles(&t.iter().map(|deg| deg.to_radians()).collect::<Vec<_>>(), &opts)?,
        (None, None) => experiment_sweep(&(1..=10).map(|k| k as f64 / 15.0).collect::<Vec<_>>(), &opts)?,
    };
    emit_dataset(&rows, data_format(args.format), args.output.as_deref())?;
    Ok(())
}

fn configure_threads() -> Result<(), String> {
    let Ok(value) = std::env::var("HTPLAB_THREADS") else {
        return Ok(());
    };
    let n: usize = value
        .parse()
        .map_err(|_| format!("HTPLAB_THREADS must be a positive integer, got {value:?}"))?;
    if n == 0 {
        return Err("HTPLAB_THREADS must be positive".into());
    }
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| e.to_string())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Err(msg) = configure_threads() {
        eprintln!("error: {msg}");
        return ExitCode::from(EXIT_USAGE);
    }
    let result = match &cli.command {
        Command::Fef(a) => cmd_fef(a),
        Command::Htp(a) => cmd_htp(a),
        Command::Sweep(a) => cmd_sweep(a),
        Command::Experiment(a) => cmd_experiment(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(EXIT_USAGE)
        }
        Err(Failure::NotConverged) => {
            eprintln!("error: optimizer did not converge");
            ExitCode::from(EXIT_NOT_CONVERGED)
        }
        Err(Failure::Core(e)) => {
            eprintln!("error: {e}");
            match e {
                Error::Io(_) => ExitCode::from(EXIT_IO),
                _ => ExitCode::from(EXIT_USAGE),
            }
        }
    }
}
