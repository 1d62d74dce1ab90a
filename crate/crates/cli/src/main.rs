mod compare;
mod solve;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use qubo_benders::bench::{build_nn_verification, build_ots, BoundSide, NetworkCase, NeuralNetSpec};
use qubo_benders::benders::CutPool;
use qubo_benders::model::{compile, MixedBinaryProgram};
use qubo_benders::qubo::{acc_bits, compile_master_to_qubo, compute_bit_widths, continuous_range, QuboProgram, WidthOptions};
use qubo_benders::sampler::{derive_seed, sample_exact, sample_sa, AnnealSchedule, DEFAULT_EXACT_KEEP, DEFAULT_EXACT_LIMIT};
use solve::{execute, load_model, report_json, MethodId, RunManifest, RunReport, SamplerId, SAMPLER_STREAM};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "qbenders", version, about = "Benders decomposition with QUBO master problems")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Build a model file from a network case or a neural network.
    #[command(subcommand)]
    Build(Build),
    /// Solve a model file with one method.
    Solve(SolveArgs),
    /// Run a grid of models, methods and seeds and write a summary CSV.
    Compare(CompareArgs),
    /// Sample a QUBO file.
    Sample(SampleArgs),
    /// Write the first master problem of a model as a QUBO file.
    MasterQubo(MasterQuboArgs),
}

#[derive(Subcommand)]
enum Build {
    /// Optimal transmission switching on a DC network.
    Ots {
        case: PathBuf,
        /// Most lines that may be switched out.
        #[arg(short = 'E')]
        e: usize,
        #[arg(short = 'o')]
        out: Option<PathBuf>,
    },
    /// Worst-case generator limit violation of a ReLU dispatch network.
    Nnver {
        network: PathBuf,
        #[arg(long)]
        gen: usize,
        #[arg(long, value_enum)]
        side: Side,
        #[arg(short = 'o')]
        out: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Side {
    Upper,
    Lower,
}

#[derive(Args, Clone)]
struct RunFlags {
    #[arg(long, value_enum, default_value = "exact")]
    sampler: SamplerId,
    /// Master solutions per iteration (bd2).
    #[arg(short = 'R', default_value_t = 1)]
    r: usize,
    #[arg(long, default_value_t = 1e-3)]
    eps: f64,
    /// Hamming weight (bd1, bd2).
    #[arg(long, default_value_t = 1.0, allow_negative_numbers = true)]
    rho: f64,
    #[arg(long = "max-iter", default_value_t = 500)]
    max_iter: usize,
    /// Integer bits of the master's continuous estimate.
    #[arg(long = "acc-bits")]
    acc_bits: Option<u32>,
}

#[derive(Args)]
struct SolveArgs {
    #[arg(long)]
    model: PathBuf,
    #[arg(long, value_enum)]
    method: MethodId,
    #[command(flatten)]
    flags: RunFlags,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Convergence log CSV.
    #[arg(long)]
    log: Option<PathBuf>,
    /// Result file (JSON).
    #[arg(short = 'o')]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct CompareArgs {
    #[arg(long, required = true, num_args = 1.., value_delimiter = ',')]
    model: Vec<PathBuf>,
    #[arg(long, value_enum, required = true, num_args = 1.., value_delimiter = ',')]
    method: Vec<MethodId>,
    #[command(flatten)]
    flags: RunFlags,
    #[arg(long, num_args = 1.., value_delimiter = ',', default_value = "0")]
    seed: Vec<u64>,
    /// Summary CSV; standard output when absent.
    #[arg(short = 'o')]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SampleArgs {
    qubo: PathBuf,
    #[arg(long, value_enum, default_value = "sa")]
    sampler: SamplerId,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 64)]
    reads: usize,
    #[arg(long, default_value_t = 2000)]
    sweeps: usize,
    #[arg(short = 'o')]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct MasterQuboArgs {
    #[arg(long)]
    model: PathBuf,
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    rho: f64,
    #[arg(long = "acc-bits")]
    acc_bits: Option<u32>,
    #[arg(short = 'o')]
    out: Option<PathBuf>,
}

fn read(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))
}

fn emit(out: Option<&Path>, text: &str) -> Result<()> {
    match out {
        Some(p) => std::fs::write(p, text).with_context(|| format!("writing {}", p.display())),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn write_model(p: &MixedBinaryProgram, out: Option<&Path>) -> Result<()> {
    let mut text = p.to_json();
    text.push('\n');
    emit(out, &text)?;
    let summary = format!("n_z={} n_y={} rows={}", p.n_z, p.n_y, p.num_rows());
    if out.is_some() {
        println!("{summary}");
    } else {
        eprintln!("{summary}");
    }
    Ok(())
}

fn build(b: Build) -> Result<()> {
    match b {
        Build::Ots { case, e, out } => {
            let c = NetworkCase::from_json(&read(&case)?).with_context(|| format!("parsing {}", case.display()))?;
            let (src, _) = build_ots(&c, e)?;
            let (p, _) = compile(&src)?;
            write_model(&p, out.as_deref())
        }
        Build::Nnver { network, gen, side, out } => {
            let nn = NeuralNetSpec::from_json(&read(&network)?).with_context(|| format!("parsing {}", network.display()))?;
            let side = match side {
                Side::Upper => BoundSide::Upper,
                Side::Lower => BoundSide::Lower,
            };
            let (src, _) = build_nn_verification(&nn, gen, side)?;
            let (p, _) = compile(&src)?;
            write_model(&p, out.as_deref())
        }
    }
}

fn manifest(model: PathBuf, method: MethodId, f: &RunFlags, seed: u64) -> RunManifest {
    RunManifest {
        model,
        method,
        sampler: f.sampler,
        r: f.r,
        eps: f.eps,
        rho: f.rho,
        seed,
        max_iter: f.max_iter,
        acc_bits: f.acc_bits,
    }
}

fn solve(a: SolveArgs) -> Result<i32> {
    let m = manifest(a.model, a.method, &a.flags, a.seed);
    let loaded = m.validate().and_then(|_| load_model(&m.model));
    let p = match loaded {
        Ok(p) => p,
        Err(e) => {
            let msg = format!("{e:#}");
            if let Some(out) = &a.out {
                emit(Some(out), &report_json(&RunReport::failed(&m, "invalid_input", msg.clone())))?;
            }
            anyhow::bail!(msg);
        }
    };
    let outcome = execute(&m, &p);
    if let Some(path) = &a.log {
        emit(Some(path), &outcome.log.to_csv())?;
    }
    let r = &outcome.report;
    match &a.out {
        Some(path) => emit(Some(path), &report_json(r))?,
        None => print!("{}", report_json(r)),
    }
    let t = &outcome.timings;
    eprintln!(
        "{} {}: objective {:?}, {} iterations; cpu {:.1} ms, sampler {:.1} ms, subproblem {:.1} ms, mean iteration {:.3} ms",
        m.method.name(),
        r.status,
        r.objective,
        r.iterations,
        t.master_ms,
        t.sampler_ms,
        t.subproblem_ms,
        t.mean_iteration_ms
    );
    if let Some(e) = &r.error {
        eprintln!("error [{}]: {}", e.code, e.message);
    }
    Ok(outcome.exit_code())
}

fn run_compare(a: CompareArgs) -> Result<i32> {
    let base = manifest(PathBuf::new(), MethodId::Sso, &a.flags, 0);
    let (rows, disagreements) = compare::compare(&base, &a.model, &a.method, &a.seed)?;
    match &a.out {
        Some(path) => {
            let f = std::fs::File::create(path).with_context(|| format!("writing {}", path.display()))?;
            compare::write_csv(&rows, f)?;
        }
        None => compare::write_csv(&rows, std::io::stdout().lock())?,
    }
    Ok(if disagreements > 0 { 1 } else { 0 })
}

fn sample(a: SampleArgs) -> Result<()> {
    let q = QuboProgram::from_json(&read(&a.qubo)?).with_context(|| format!("parsing {}", a.qubo.display()))?;
    let set = match a.sampler {
        SamplerId::Sa => {
            let sched = AnnealSchedule {
                reads: a.reads,
                sweeps: a.sweeps,
                seed: derive_seed(a.seed, SAMPLER_STREAM),
                ..Default::default()
            };
            sample_sa(&q, &sched)?
        }
        SamplerId::Exact | SamplerId::QuboExact => sample_exact(&q, DEFAULT_EXACT_LIMIT, DEFAULT_EXACT_KEEP)?,
    };
    let mut text = serde_json::to_string_pretty(&set)?;
    text.push('\n');
    emit(a.out.as_deref(), &text)
}

fn master_qubo(a: MasterQuboArgs) -> Result<()> {
    let p = load_model(&a.model)?;
    let widths = WidthOptions { a_cc: a.acc_bits, ..Default::default() };
    let tol = Default::default();
    let a_cc = acc_bits(continuous_range(&p, &tol)?, &widths);
    let pool = CutPool::seeded(&p);
    let layout = compute_bit_widths(&p, &pool, a_cc, &widths);
    let q = compile_master_to_qubo(&pool, &p, a.rho, &vec![0.0; p.n_z], &layout, None)?;
    let mut text = q.to_json();
    text.push('\n');
    emit(a.out.as_deref(), &text)?;
    let s_bits = layout.s_terms().len();
    eprintln!("dimension={} (z {}, s {}, slack {})", q.dimension, p.n_z, s_bits, q.dimension - p.n_z - s_bits);
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::new().filter_level(log::LevelFilter::Warn).format_timestamp(None).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    let result = match cli.cmd {
        Cmd::Build(b) => build(b).map(|_| 0),
        Cmd::Solve(a) => solve(a),
        Cmd::Compare(a) => run_compare(a),
        Cmd::Sample(a) => sample(a).map(|_| 0),
        Cmd::MasterQubo(a) => master_qubo(a).map(|_| 0),
    };
    match result {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
