mod output;

use std::error::Error;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

use linf_lra::bcd::{bcd, BcdOptions};
use linf_lra::harness::{bench_secant, gen_quantized, run_recovery, InitKind, RecoveryConfig, RECOVERY_REL_TOL};
use linf_lra::linalg::{read_matrix, rank_r_l2_init, residual_linf, write_matrix, write_matrix_to, FactorPair, Matrix};
use linf_lra::rank_one::{certify, decide_with, minimize, DecideOptions};
use linf_lra::reductions::{graph_to_matrix, nae_to_graph, reduction_threshold, NaeInstance};
use linf_lra::rng::{normal_vec, seeded};
use linf_lra::tvpi::Method;

use output::{emit, vector, Format, Report};

type Res<T> = Result<T, Box<dyn Error>>;

const THREADS_ENV: &str = "LINF_LRA_THREADS";

#[derive(Parser)]
#[command(name = "linf-lra", version, about = "Entry-wise l-infinity low-rank approximation")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Report format.
    #[arg(long, global = true, value_enum, default_value_t = Format::Table)]
    format: Format,
    /// Write the report (or generated matrix) here instead of stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Is there a rank-one uv^T within k of M entry-wise?
    Decide(DecideArgs),
    /// Smallest k with a YES answer, by bisection.
    Minimize(MinimizeArgs),
    /// Exit 0 iff no rank-one pair is within f* - tol of M.
    Certify(CertifyArgs),
    /// Rank-r block coordinate descent.
    Bcd(BcdArgs),
    /// Rounded Gaussian low-rank matrix.
    GenQuantized(GenArgs),
    /// Reduction matrix of a NAE-3SAT instance.
    GenNae(NaeArgs),
    /// Quantized recovery experiment over many seeded trials.
    RunRecovery(RecoveryArgs),
    /// Secant iteration counts on Gaussian 1-D problems.
    BenchSecant(BenchArgs),
}

#[derive(Args)]
struct DecideArgs {
    #[arg(long)]
    matrix: PathBuf,
    /// Threshold, or `auto` for the reduction threshold of a square matrix.
    #[arg(long)]
    k: String,
    /// Feasibility tolerance (default 1e-9 (1 + |M|)).
    #[arg(long)]
    tol: Option<f64>,
    #[arg(long, value_enum, default_value_t = SolverArg::Potentials)]
    solver: SolverArg,
}

#[derive(Clone, Copy, ValueEnum)]
enum SolverArg {
    Potentials,
    Simplex,
}

#[derive(Args)]
struct MinimizeArgs {
    #[arg(long)]
    matrix: PathBuf,
    /// Width of the final bisection bracket.
    #[arg(long, default_value_t = 1e-6)]
    tol: f64,
}

#[derive(Args)]
struct CertifyArgs {
    #[arg(long)]
    matrix: PathBuf,
    /// Claimed optimal value f*.
    #[arg(long)]
    k: f64,
    #[arg(long, default_value_t = 1e-6)]
    tol: f64,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum InitArg {
    L2,
    #[value(name = "trueM", alias = "truem")]
    TrueM,
    Random,
}

impl From<InitArg> for InitKind {
    fn from(a: InitArg) -> Self {
        match a {
            InitArg::L2 => InitKind::L2,
            InitArg::TrueM => InitKind::TrueM,
            InitArg::Random => InitKind::Random,
        }
    }
}

#[derive(Args)]
struct BcdArgs {
    #[arg(long)]
    matrix: PathBuf,
    #[arg(long)]
    rank: usize,
    #[arg(long, value_enum, default_value_t = InitArg::L2)]
    init: InitArg,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    nonneg: bool,
    /// Stop when a sweep improves by at most tol * |M|.
    #[arg(long, default_value_t = 1e-6)]
    tol: f64,
    #[arg(long, default_value_t = 1000)]
    max_sweeps: usize,
}

#[derive(Args)]
struct GenArgs {
    #[arg(long)]
    rows: usize,
    #[arg(long)]
    cols: usize,
    #[arg(long)]
    rank: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args)]
struct NaeArgs {
    /// Instance in `p nae3sat` format.
    #[arg(long = "in")]
    input: PathBuf,
}

#[derive(Args)]
struct RecoveryArgs {
    #[arg(long, default_value_t = 200)]
    rows: usize,
    #[arg(long, default_value_t = 200)]
    cols: usize,
    #[arg(long)]
    rank: usize,
    #[arg(long, default_value_t = 20)]
    trials: usize,
    #[arg(long, value_enum, default_value_t = InitArg::L2)]
    init: InitArg,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    nonneg: bool,
    #[arg(long, default_value_t = RECOVERY_REL_TOL)]
    tol: f64,
    #[arg(long, default_value_t = 1000)]
    max_sweeps: usize,
}

#[derive(Args)]
struct BenchArgs {
    #[arg(long, default_value_t = 1000)]
    m: usize,
    #[arg(long, default_value_t = 10_000)]
    trials: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

enum Outcome {
    Done,
    NotCertified,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Err(e) = configure_threads() {
        eprintln!("error: {e}");
        return ExitCode::from(2);
    }
    match run(&cli) {
        Ok(Outcome::Done) => ExitCode::SUCCESS,
        Ok(Outcome::NotCertified) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}

fn configure_threads() -> Res<()> {
    let Ok(raw) = std::env::var(THREADS_ENV) else {
        return Ok(());
    };
    let n: usize = raw
        .trim()
        .parse()
        .map_err(|_| format!("{THREADS_ENV} must be a positive integer, got `{raw}`"))?;
    if n == 0 {
        return Err(format!("{THREADS_ENV} must be positive").into());
    }
    rayon::ThreadPoolBuilder::new().num_threads(n).build_global()?;
    Ok(())
}

fn run(cli: &Cli) -> Res<Outcome> {
    let out = cli.out.as_deref();
    let show = |r: Report| -> Res<Outcome> {
        emit(&r.render(cli.format), out)?;
        Ok(Outcome::Done)
    };
    match &cli.command {
        Command::Decide(a) => show(cmd_decide(a)?),
        Command::Minimize(a) => show(cmd_minimize(a)?),
        Command::Certify(a) => {
            let (ok, r) = cmd_certify(a)?;
            show(r)?;
            Ok(if ok { Outcome::Done } else { Outcome::NotCertified })
        }
        Command::Bcd(a) => show(cmd_bcd(a)?),
        Command::GenQuantized(a) => {
            let q = gen_quantized(a.rows, a.cols, a.rank, a.seed)?;
            write_generated(&q.mq, out)?;
            Ok(Outcome::Done)
        }
        Command::GenNae(a) => {
            let inst = NaeInstance::parse_dimacs(&fs::read_to_string(&a.input)?)?;
            let (m, k) = graph_to_matrix(&nae_to_graph(&inst));
            write_generated(&m, out)?;
            if out.is_some() {
                println!("vertices {}  threshold {k}", m.rows());
            }
            Ok(Outcome::Done)
        }
        Command::RunRecovery(a) => show(cmd_recovery(a)?),
        Command::BenchSecant(a) => show(cmd_bench(a)?),
    }
}

fn write_generated(m: &Matrix, out: Option<&Path>) -> Res<()> {
    match out {
        Some(p) => write_matrix(p, m)?,
        None => write_matrix_to(std::io::stdout().lock(), m)?,
    }
    Ok(())
}

fn load(path: &Path) -> Res<Matrix> {
    read_matrix(path).map_err(|e| format!("{}: {e}", path.display()).into())
}

fn parse_k(raw: &str, m: &Matrix) -> Res<f64> {
    if raw.eq_ignore_ascii_case("auto") {
        if m.rows() != m.cols() {
            return Err("--k auto needs a square reduction matrix".into());
        }
        return Ok(reduction_threshold(m.rows()));
    }
    Ok(raw.parse().map_err(|_| format!("--k expects a number or `auto`, got `{raw}`"))?)
}

fn witness_fields(r: &mut Report, w: &FactorPair) {
    r.field("u", vector(w.left().as_slice()));
    r.field("v", vector(w.right().as_slice()));
}

fn cmd_decide(a: &DecideArgs) -> Res<Report> {
    let m = load(&a.matrix)?;
    let k = parse_k(&a.k, &m)?;
    let opts = DecideOptions {
        tol: a.tol,
        method: match a.solver {
            SolverArg::Potentials => Method::Potentials,
            SolverArg::Simplex => Method::Simplex,
        },
        ..Default::default()
    };
    let d = decide_with(&m, k, &opts)?;
    let mut r = Report {
        heading: Some(if d.is_yes() { "YES" } else { "NO" }.into()),
        json: json!(d),
        ..Default::default()
    };
    r.field("answer", if d.is_yes() { "YES" } else { "NO" })
        .field("k", k)
        .field("components", d.components)
        .field("patterns_tried", d.patterns_tried);
    if let Some(w) = &d.witness {
        r.field("residual", residual_linf(&m, w)?);
        witness_fields(&mut r, w);
    }
    Ok(r)
}

fn cmd_minimize(a: &MinimizeArgs) -> Res<Report> {
    let m = load(&a.matrix)?;
    let res = minimize(&m, a.tol)?;
    let mut r = Report {
        heading: Some(format!("kStar {}", res.k_star)),
        json: json!(res),
        ..Default::default()
    };
    r.field("k_star", res.k_star)
        .field("k_low", res.k_low)
        .field("k_high", res.k_high)
        .field("decisions", res.steps)
        .field("residual", residual_linf(&m, &res.witness)?);
    witness_fields(&mut r, &res.witness);
    Ok(r)
}

fn cmd_certify(a: &CertifyArgs) -> Res<(bool, Report)> {
    let m = load(&a.matrix)?;
    let ok = certify(&m, a.k, a.tol)?;
    let mut r = Report {
        heading: Some(if ok { "CERTIFIED" } else { "NOT CERTIFIED" }.into()),
        json: json!({ "certified": ok, "f_star": a.k, "eps": a.tol }),
        ..Default::default()
    };
    r.field("certified", ok).field("f_star", a.k).field("eps", a.tol);
    Ok((ok, r))
}

fn cmd_bcd(a: &BcdArgs) -> Res<Report> {
    let m = load(&a.matrix)?;
    let (rows, cols) = m.shape();
    let mut init = match a.init {
        InitArg::L2 => rank_r_l2_init(&m, a.rank, a.seed)?,
        InitArg::Random => {
            let mut rng = seeded(a.seed);
            let u = Matrix::new(rows, a.rank, normal_vec(&mut rng, rows * a.rank))?;
            let v = Matrix::new(a.rank, cols, normal_vec(&mut rng, a.rank * cols))?;
            FactorPair::new(u, v)?
        }
        InitArg::TrueM => return Err("--init trueM needs the unrounded matrix; use run-recovery".into()),
    };
    if a.nonneg {
        let (u, v) = init.into_parts();
        init = FactorPair::new(u.map(f64::abs), v.map(f64::abs))?;
    }
    let opts = BcdOptions {
        max_sweeps: a.max_sweeps,
        rel_tol: a.tol,
        nonnegative: a.nonneg,
        seed: a.seed,
    };
    let init_error = residual_linf(&m, &init)?;
    let (f, rep) = bcd(&m, init, &opts)?;
    let rows_out = rep
        .error_history
        .iter()
        .enumerate()
        .map(|(t, e)| vec![t.to_string(), e.to_string()])
        .collect();
    let mut r = Report {
        heading: Some(format!("finalError {}", rep.final_error)),
        json: json!({ "report": rep, "factors": f, "init_error": init_error }),
        table: Some((vec!["sweep".into(), "error".into()], rows_out)),
        ..Default::default()
    };
    r.field("init_error", init_error)
        .field("final_error", rep.final_error)
        .field("sweeps", rep.sweeps)
        .field("secant_histogram", format!("{:?}", rep.secant_histogram));
    Ok(r)
}

fn cmd_recovery(a: &RecoveryArgs) -> Res<Report> {
    let mut cfg = RecoveryConfig::new(a.rows, a.cols, a.rank, a.trials, a.init.into(), a.seed);
    cfg.bcd.rel_tol = a.tol;
    cfg.bcd.max_sweeps = a.max_sweeps;
    cfg.bcd.nonnegative = a.nonneg;
    let rep = run_recovery(&cfg)?;
    let head = ["trial", "seed", "init_error", "final_error", "sweeps", "success", "certified", "wall_ms"];
    let rows = rep
        .runs
        .iter()
        .map(|t| {
            vec![
                t.trial.to_string(),
                t.seed.to_string(),
                format!("{:.6}", t.init_error),
                format!("{:.9}", t.final_error),
                t.sweeps.to_string(),
                t.success.to_string(),
                t.certified.map_or("-".into(), |c| c.to_string()),
                t.wall_time.as_millis().to_string(),
            ]
        })
        .collect();
    let mut r = Report {
        heading: Some(format!("{}/{} runs with error <= 0.5", rep.successes, rep.runs.len())),
        json: json!(rep),
        table: Some((head.iter().map(|s| s.to_string()).collect(), rows)),
        ..Default::default()
    };
    r.field("min_error", rep.min_error)
        .field("mean_error", rep.mean_error)
        .field("max_error", rep.max_error)
        .field("mean_sweeps", rep.mean_sweeps);
    if let Some(c) = rep.certified {
        r.field("certified", format!("{c}/{}", rep.runs.len()));
    }
    Ok(r)
}

fn cmd_bench(a: &BenchArgs) -> Res<Report> {
    let b = bench_secant(a.m, a.trials, a.seed)?;
    let rows = b
        .histogram
        .iter()
        .enumerate()
        .filter(|&(_, &c)| c > 0)
        .map(|(k, c)| vec![k.to_string(), c.to_string()])
        .collect();
    let mut r = Report {
        json: json!(b),
        table: Some((vec!["iterations".into(), "count".into()], rows)),
        ..Default::default()
    };
    r.field("m", b.m)
        .field("trials", b.trials)
        .field("mean_iterations", format!("{:.4}", b.mean_iterations))
        .field("max_iterations", b.max_iterations)
        .field("total_time_s", format!("{:.3}", b.total_time.as_secs_f64()));
    Ok(r)
}
