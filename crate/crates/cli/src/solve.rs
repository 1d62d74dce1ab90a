use anyhow::{bail, Context, Result};
use clap::ValueEnum;
use qubo_benders::benders::{run, BendersConfig, BendersError, ConvergenceLog, MasterBackend, Method, Timings};
use qubo_benders::model::{branch_and_bound, MilpOutcome, MixedBinaryProgram, ModelError};
use qubo_benders::qubo::WidthOptions;
use qubo_benders::sampler::{derive_seed, AnnealSchedule, DEFAULT_EXACT_LIMIT};
use serde::Serialize;
use std::path::{Path, PathBuf};
use std::time::Instant;

/// Stream label for the annealer seed derived from `--seed`.
pub const SAMPLER_STREAM: u64 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum MethodId {
    /// Branch and bound on the whole program.
    Sso,
    /// Conventional Benders.
    Cbd,
    /// Hamming-regularized master with Pareto-optimal cuts.
    Bd1,
    /// Hamming-regularized master returning the best R solutions.
    Bd2,
}

impl MethodId {
    pub fn name(self) -> &'static str {
        match self {
            Self::Sso => "sso",
            Self::Cbd => "cbd",
            Self::Bd1 => "bd1",
            Self::Bd2 => "bd2",
        }
    }

    fn method(self) -> Option<Method> {
        match self {
            Self::Sso => None,
            Self::Cbd => Some(Method::ConventionalBD),
            Self::Bd1 => Some(Method::Method1),
            Self::Bd2 => Some(Method::Method2),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum SamplerId {
    /// Exact enumeration of the master.
    Exact,
    /// Simulated annealing on the master QUBO.
    Sa,
    /// Exhaustive scan of the master QUBO.
    QuboExact,
}

/// Everything that determines one run.
#[derive(Debug, Clone)]
pub struct RunManifest {
    pub model: PathBuf,
    pub method: MethodId,
    pub sampler: SamplerId,
    pub r: usize,
    pub eps: f64,
    pub rho: f64,
    pub seed: u64,
    pub max_iter: usize,
    pub acc_bits: Option<u32>,
}

impl RunManifest {
    pub fn validate(&self) -> Result<()> {
        if !self.model.is_file() {
            bail!("model file {} does not exist", self.model.display());
        }
        if self.r == 0 {
            bail!("-R must be at least 1");
        }
        if self.r > 1 && self.method != MethodId::Bd2 {
            bail!("-R {} only applies to bd2", self.r);
        }
        if !(self.eps > 0.0) || !self.rho.is_finite() || self.max_iter == 0 {
            bail!("--eps must be positive, --rho finite and --max-iter at least 1");
        }
        Ok(())
    }

    pub fn config(&self) -> BendersConfig {
        let backend = match self.sampler {
            SamplerId::Exact => MasterBackend::Exact,
            SamplerId::Sa => MasterBackend::Sa(AnnealSchedule {
                seed: derive_seed(self.seed, SAMPLER_STREAM),
                ..Default::default()
            }),
            SamplerId::QuboExact => MasterBackend::QuboExact { limit: DEFAULT_EXACT_LIMIT },
        };
        BendersConfig {
            eps: self.eps,
            r: self.r,
            rho: self.rho,
            max_iterations: self.max_iter,
            backend,
            widths: WidthOptions { a_cc: self.acc_bits, ..Default::default() },
            record_timings: true,
            ..Default::default()
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ErrorInfo {
    pub code: &'static str,
    pub message: String,
}

/// The result file. Wall-clock timings are kept out of it so that it is
/// reproducible byte for byte; see [`Outcome::timings`].
#[derive(Debug, Clone, Serialize)]
pub struct RunReport {
    pub status: &'static str,
    pub method: MethodId,
    pub sampler: Option<SamplerId>,
    pub r: usize,
    pub eps: f64,
    pub rho: f64,
    pub seed: u64,
    pub objective: Option<f64>,
    pub z: Vec<f64>,
    pub y: Vec<f64>,
    pub lb: Option<f64>,
    pub ub: Option<f64>,
    pub iterations: usize,
    pub converged: bool,
    pub optimality_cuts: usize,
    pub feasibility_cuts: usize,
    pub error: Option<ErrorInfo>,
}

pub struct Outcome {
    pub report: RunReport,
    pub log: ConvergenceLog,
    pub timings: Timings,
}

impl Outcome {
    pub fn exit_code(&self) -> i32 {
        match self.report.status {
            "converged" => 0,
            "iteration_limit" => 2,
            _ => 1,
        }
    }
}

pub fn load_model(path: &Path) -> Result<MixedBinaryProgram> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let p = MixedBinaryProgram::from_json(&text).with_context(|| format!("parsing {}", path.display()))?;
    p.validate().with_context(|| format!("validating {}", path.display()))?;
    Ok(p)
}

fn benders_code(e: &BendersError) -> &'static str {
    match e {
        BendersError::DualInfeasible => "unbounded",
        BendersError::MasterInfeasible => "infeasible",
        BendersError::MasterTooLarge(_) => "master_too_large",
        BendersError::InvalidRay(_) => "invalid_ray",
        BendersError::NoIncumbent => "no_incumbent",
        BendersError::InvalidConfig(_) => "invalid_config",
        BendersError::Lp(_) => "lp_failure",
        BendersError::Model(_) => "model_error",
        BendersError::Qubo(_) => "qubo_error",
        BendersError::Sampler(_) => "sampler_error",
    }
}

impl RunReport {
    fn empty(m: &RunManifest) -> Self {
        Self {
            status: "error",
            method: m.method,
            sampler: (m.method != MethodId::Sso).then_some(m.sampler),
            r: m.r,
            eps: m.eps,
            rho: m.rho,
            seed: m.seed,
            objective: None,
            z: vec![],
            y: vec![],
            lb: None,
            ub: None,
            iterations: 0,
            converged: false,
            optimality_cuts: 0,
            feasibility_cuts: 0,
            error: None,
        }
    }

    pub fn failed(m: &RunManifest, code: &'static str, message: String) -> Self {
        Self { error: Some(ErrorInfo { code, message }), ..Self::empty(m) }
    }
}

/// Runs a manifest whose model is already loaded. Never fails: errors are
/// reported in the result.
pub fn execute(m: &RunManifest, p: &MixedBinaryProgram) -> Outcome {
    let mut report = RunReport::empty(m);
    let Some(method) = m.method.method() else {
        let start = Instant::now();
        let out = branch_and_bound(p);
        let ms = start.elapsed().as_secs_f64() * 1e3;
        let timings = Timings { master_ms: ms, mean_iteration_ms: ms, ..Default::default() };
        match out {
            Ok((MilpOutcome::Optimal { z, y, objective }, nodes)) => {
                report = RunReport {
                    status: "converged",
                    objective: Some(objective),
                    z,
                    y,
                    lb: Some(objective),
                    ub: Some(objective),
                    iterations: nodes as usize,
                    converged: true,
                    ..report
                };
            }
            Ok((other, nodes)) => {
                let code = if other == MilpOutcome::Infeasible { "infeasible" } else { "unbounded" };
                report = RunReport { iterations: nodes as usize, ..RunReport::failed(m, code, format!("the program is {code}")) };
            }
            Err(e) => {
                let code = if matches!(e, ModelError::Lp(_)) { "lp_failure" } else { "model_error" };
                report = RunReport::failed(m, code, e.to_string());
            }
        }
        return Outcome { report, log: ConvergenceLog::default(), timings };
    };
    match run(p, &m.config(), method) {
        Ok(r) => {
            let timings = r.timings.clone().unwrap_or_default();
            let mut log = r.log;
            for rec in &mut log.records {
                rec.master_ms = None;
                rec.sp_ms = None;
            }
            report = RunReport {
                status: if r.converged { "converged" } else { "iteration_limit" },
                objective: Some(r.objective),
                z: r.z,
                y: r.y,
                lb: Some(r.lb),
                ub: r.ub.is_finite().then_some(r.ub),
                iterations: r.iterations,
                converged: r.converged,
                optimality_cuts: r.optimality_cuts,
                feasibility_cuts: r.feasibility_cuts,
                ..report
            };
            Outcome { report, log, timings }
        }
        Err(e) => Outcome {
            report: RunReport::failed(m, benders_code(&e), e.to_string()),
            log: ConvergenceLog::default(),
            timings: Timings::default(),
        },
    }
}

pub fn report_json(r: &RunReport) -> String {
    let mut s = serde_json::to_string_pretty(r).expect("report serializes");
    s.push('\n');
    s
}
