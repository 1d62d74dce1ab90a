//! Benders decomposition over a [`MixedBinaryProgram`].
//!
//! The master problem is `max offset + iᵀz + s (+ ρ·H(z, z_prev))` over
//! binary `z` subject to the collected cuts; the subproblem is the dual LP at
//! a fixed `z`. Three loop variants share one engine:
//!
//! * [`Method::ConventionalBD`]: one cut per iteration, no regularization.
//! * [`Method::Method1`]: adds a second cut from the dual at a running core
//!   point and the Hamming term.
//! * [`Method::Method2`]: evaluates the `R` best master solutions per
//!   iteration.
//!
//! The master is solved either by exact enumeration or by compiling it to a
//! QUBO and sampling.

mod cuts;
mod convergence;
mod master;

pub use cuts::{
    solve_dual_subproblem, solve_pareto_subproblem, update_core_point, CorePointState, Cut, CutPool, DualOutcome,
};
pub use convergence::{ConvergenceLog, IterationRecord, CSV_HEADER};
pub use master::{
    hamming, master_s, master_top_r, master_value, solve_master_exact, MasterCandidate, MasterSolution, CUT_TOL,
    MASTER_LIMIT, TIE_TOL,
};

use crate::lpcore::{dot, solve_lp, LpError, LpStatus, ToleranceSet};
use crate::model::{MixedBinaryProgram, ModelError};
use crate::qubo::{acc_bits, compile_master_to_qubo, compute_bit_widths, continuous_range, QuboError, WidthOptions};
use crate::sampler::{derive_seed, sample_exact, sample_sa, top_r_feasible, AnnealSchedule, SamplerError};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::collections::HashSet;
use std::time::Instant;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum BendersError {
    #[error("the dual subproblem is infeasible: the program is unbounded in y")]
    DualInfeasible,
    #[error("feasibility cuts exclude every binary vector: the program is infeasible")]
    MasterInfeasible,
    #[error("{0} binaries exceed the exact master limit of {MASTER_LIMIT}")]
    MasterTooLarge(usize),
    #[error("ray is outside the dual recession cone: {0}")]
    InvalidRay(String),
    #[error("no feasible binary vector was found within the iteration limit")]
    NoIncumbent,
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Lp(#[from] LpError),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Qubo(#[from] QuboError),
    #[error(transparent)]
    Sampler(#[from] SamplerError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    ConventionalBD,
    Method1,
    Method2,
}

/// How each master problem is solved.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum MasterBackend {
    /// Branch-and-bound enumeration over `z`.
    Exact,
    /// QUBO compilation, exhaustive sampling up to `limit` bits.
    QuboExact { limit: usize },
    /// QUBO compilation, simulated annealing. The schedule seed is re-derived
    /// per iteration.
    Sa(AnnealSchedule),
}

impl MasterBackend {
    pub fn name(&self) -> &'static str {
        match self {
            Self::Exact => "exact",
            Self::QuboExact { .. } => "qubo-exact",
            Self::Sa(_) => "sa",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BendersConfig {
    /// Absolute tolerance on `UB − LB`.
    pub eps: f64,
    /// Master solutions evaluated per iteration by [`Method::Method2`].
    pub r: usize,
    /// Weight of the Hamming term; positive rewards moving away from the
    /// previous solution.
    pub rho: f64,
    pub max_iterations: usize,
    /// Initial core point, zeros by default.
    pub core_point_seed: Option<Vec<f64>>,
    pub backend: MasterBackend,
    /// Cuts older than this many iterations are deactivated; 0 keeps all.
    pub cut_window: usize,
    pub widths: WidthOptions,
    /// `(P₁, P₂)` for the QUBO backends.
    pub penalties: Option<(f64, f64)>,
    pub record_timings: bool,
    pub tol: ToleranceSet,
}

impl Default for BendersConfig {
    fn default() -> Self {
        Self {
            eps: 1e-3,
            r: 1,
            rho: 1.0,
            max_iterations: 500,
            core_point_seed: None,
            backend: MasterBackend::Exact,
            cut_window: 0,
            widths: WidthOptions::default(),
            penalties: None,
            record_timings: false,
            tol: ToleranceSet::default(),
        }
    }
}

impl BendersConfig {
    pub fn validate(&self, n_z: usize) -> Result<(), BendersError> {
        let bad = |m: &str| Err(BendersError::InvalidConfig(m.into()));
        if !(self.eps > 0.0) {
            return bad("eps must be positive");
        }
        if self.r == 0 {
            return bad("R must be at least 1");
        }
        if self.max_iterations == 0 {
            return bad("max_iterations must be at least 1");
        }
        if !self.rho.is_finite() {
            return bad("rho must be finite");
        }
        if let Some(seed) = &self.core_point_seed {
            if seed.len() != n_z || seed.iter().any(|v| !(0.0..=1.0).contains(v)) {
                return bad("core point seed must have n_z components in [0, 1]");
            }
        }
        if let MasterBackend::Sa(s) = &self.backend {
            s.validate()?;
        }
        Ok(())
    }
}

/// Accumulated wall-clock per phase.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Timings {
    /// Master work on the CPU: enumeration, QUBO compilation, decoding.
    pub master_ms: f64,
    pub sampler_ms: f64,
    pub subproblem_ms: f64,
    pub mean_iteration_ms: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BendersResult {
    pub method: Method,
    pub z: Vec<f64>,
    pub y: Vec<f64>,
    pub objective: f64,
    pub lb: f64,
    pub ub: f64,
    pub iterations: usize,
    pub converged: bool,
    pub optimality_cuts: usize,
    pub feasibility_cuts: usize,
    pub timings: Option<Timings>,
    pub log: ConvergenceLog,
}

struct Clock(Option<Instant>);

impl Clock {
    fn start(on: bool) -> Self {
        Self(on.then(Instant::now))
    }

    fn ms(&self) -> Option<f64> {
        self.0.map(|t| t.elapsed().as_secs_f64() * 1e3)
    }
}

fn key(z: &[f64]) -> Vec<u8> {
    z.iter().map(|&v| (v > 0.5) as u8).collect()
}

struct MasterStep {
    candidates: Vec<Vec<f64>>,
    ub: f64,
    best_energy: Option<f64>,
    sampler_ms: Option<f64>,
}

struct Engine<'a> {
    p: &'a MixedBinaryProgram,
    cfg: &'a BendersConfig,
    rho: f64,
    r: usize,
    a_cc: u32,
    s_max: f64,
}

impl Engine<'_> {
    fn master(&self, pool: &CutPool, z_prev: &[f64], iteration: usize) -> Result<MasterStep, BendersError> {
        let (p, cfg) = (self.p, self.cfg);
        let qubo_set = match &cfg.backend {
            MasterBackend::Exact => {
                let top = master_top_r(pool, p, self.rho, z_prev, self.s_max, self.r)?;
                let ub = if self.rho == 0.0 {
                    top[0].value
                } else {
                    master_top_r(pool, p, 0.0, z_prev, self.s_max, 1)?[0].value
                };
                let candidates = top.into_iter().map(|c| c.z).collect();
                return Ok(MasterStep { candidates, ub, best_energy: None, sampler_ms: None });
            }
            MasterBackend::QuboExact { limit } => {
                let q = self.compile(pool, z_prev)?;
                let clock = Clock::start(cfg.record_timings);
                let set = sample_exact(&q, *limit, crate::sampler::DEFAULT_EXACT_KEEP.max(4 * self.r))?;
                (q, set, clock.ms())
            }
            MasterBackend::Sa(sched) => {
                let q = self.compile(pool, z_prev)?;
                let clock = Clock::start(cfg.record_timings);
                let sched = AnnealSchedule { seed: derive_seed(sched.seed, iteration as u64), ..*sched };
                let set = sample_sa(&q, &sched)?;
                (q, set, clock.ms())
            }
        };
        let (q, set, sampler_ms) = qubo_set;
        let picked = top_r_feasible(&set, &q, self.r);
        // The sampled optimum is only an estimate of the bound; convergence
        // is confirmed by the exact master before it is accepted.
        let ub = picked
            .iter()
            .filter_map(|c| master_value(pool, p, &c.z, self.s_max))
            .fold(f64::NEG_INFINITY, f64::max);
        Ok(MasterStep {
            candidates: picked.into_iter().map(|c| c.z).collect(),
            ub,
            best_energy: set.best().map(|s| s.energy),
            sampler_ms,
        })
    }

    fn compile(&self, pool: &CutPool, z_prev: &[f64]) -> Result<crate::qubo::QuboProgram, BendersError> {
        let layout = compute_bit_widths(self.p, pool, self.a_cc, &self.cfg.widths);
        Ok(compile_master_to_qubo(pool, self.p, self.rho, z_prev, &layout, self.cfg.penalties)?)
    }
}

fn lp_only(p: &MixedBinaryProgram, cfg: &BendersConfig, method: Method) -> Result<BendersResult, BendersError> {
    let clock = Clock::start(cfg.record_timings);
    let sol = solve_lp(&p.primal_subproblem(&[]), &cfg.tol)?;
    match sol.status {
        LpStatus::Infeasible => return Err(BendersError::MasterInfeasible),
        LpStatus::Unbounded => return Err(BendersError::DualInfeasible),
        LpStatus::Optimal => {}
    }
    let objective = p.objective(&[], &sol.primal);
    let sp_ms = clock.ms();
    let mut log = ConvergenceLog::default();
    log.push(IterationRecord {
        iter: 1,
        lb: objective,
        ub: objective,
        gap: 0.0,
        opt_cuts: 0,
        feas_cuts: 0,
        sp_status: "point".into(),
        master_backend: cfg.backend.name().into(),
        master_ms: sp_ms.map(|_| 0.0),
        sp_ms,
        best_energy: None,
    });
    Ok(BendersResult {
        method,
        z: vec![],
        y: sol.primal,
        objective,
        lb: objective,
        ub: objective,
        iterations: 1,
        converged: true,
        optimality_cuts: 0,
        feasibility_cuts: 0,
        timings: sp_ms.map(|t| Timings { subproblem_ms: t, mean_iteration_ms: t, ..Default::default() }),
        log,
    })
}

/// Runs the decomposition until `UB − LB ≤ ε` or the iteration limit.
///
/// Reaching the limit is not an error: the result carries the incumbent
/// with `converged = false`. LB is the best objective over evaluated
/// binary vectors; UB is the master optimum without the Hamming term.
pub fn run(p: &MixedBinaryProgram, cfg: &BendersConfig, method: Method) -> Result<BendersResult, BendersError> {
    p.validate()?;
    cfg.validate(p.n_z)?;
    if p.n_z == 0 {
        return lp_only(p, cfg, method);
    }
    let n = p.n_z;
    let (rho, r, pareto) = match method {
        Method::ConventionalBD => (0.0, 1, false),
        Method::Method1 => (cfg.rho, 1, true),
        Method::Method2 => (cfg.rho, cfg.r, false),
    };
    let range = match continuous_range(p, &cfg.tol) {
        Err(QuboError::InfeasibleRelaxation) => return Err(BendersError::MasterInfeasible),
        other => other?,
    };
    let a_cc = acc_bits(range, &cfg.widths);
    let engine = Engine { p, cfg, rho, r, a_cc, s_max: 2f64.powi(a_cc as i32 + 1) };
    let verify_exactly = !matches!(cfg.backend, MasterBackend::Exact);
    let ray_tol = 1e-6;

    let mut pool = CutPool::seeded(p);
    let mut core = CorePointState::new(cfg.core_point_seed.clone().unwrap_or_else(|| vec![0.0; n]));
    let mut z_prev = vec![0.0; n];
    let mut evaluated: HashSet<Vec<u8>> = HashSet::new();
    let mut forced: Option<Vec<f64>> = None;
    let mut incumbent: Option<Vec<f64>> = None;
    let (mut lb, mut ub) = (f64::NEG_INFINITY, f64::INFINITY);
    let mut log = ConvergenceLog::default();
    let mut timings = cfg.record_timings.then(Timings::default);
    let mut converged = false;

    for it in 1..=cfg.max_iterations {
        pool.expire(it, cfg.cut_window);
        let clock = Clock::start(cfg.record_timings);
        let step = engine.master(&pool, &z_prev, it)?;
        let mut candidates: Vec<Vec<f64>> = vec![];
        for z in forced.take().into_iter().chain(step.candidates) {
            let k = key(&z);
            if !evaluated.contains(&k) && !candidates.iter().any(|c| key(c) == k) {
                candidates.push(z);
            }
        }
        if candidates.is_empty() && n <= MASTER_LIMIT {
            // Every proposal was seen before; the unregularized argmax is new
            // whenever the gap is still open.
            let best = solve_master_exact(&pool, p, 0.0, &z_prev, engine.s_max)?;
            if !evaluated.contains(&key(&best.z)) {
                candidates.push(best.z);
            }
        }
        let master_ms = clock.ms().map(|t| t - step.sampler_ms.unwrap_or(0.0));
        ub = if verify_exactly { step.ub } else { ub.min(step.ub) };

        let clock = Clock::start(cfg.record_timings);
        let outcomes: Vec<Result<DualOutcome, BendersError>> =
            candidates.par_iter().map(|z| solve_dual_subproblem(p, z, &cfg.tol)).collect();
        let mut status = vec![];
        for (z, outcome) in candidates.iter().zip(outcomes) {
            evaluated.insert(key(z));
            match outcome? {
                DualOutcome::ExtremePoint { lambda, value } => {
                    status.push("point");
                    pool.add_optimality(p, lambda, it);
                    let v = p.offset + dot(&p.i, z) + value;
                    if v > lb {
                        lb = v;
                        incumbent = Some(z.clone());
                    }
                }
                DualOutcome::ExtremeRay { ray } => {
                    status.push("ray");
                    pool.add_feasibility(p, ray, it, ray_tol)?;
                }
            }
        }
        if let Some(first) = candidates.first() {
            if pareto {
                core = update_core_point(&core, first);
                match solve_pareto_subproblem(p, &core, &cfg.tol)? {
                    DualOutcome::ExtremePoint { lambda, .. } => {
                        pool.add_optimality(p, lambda, it);
                    }
                    DualOutcome::ExtremeRay { ray } => {
                        pool.add_feasibility(p, ray, it, ray_tol)?;
                    }
                }
            }
            z_prev = first.clone();
        }
        let sp_ms = clock.ms();

        let mut done = ub - lb <= cfg.eps;
        if verify_exactly && (done || candidates.is_empty()) {
            if n <= MASTER_LIMIT {
                let exact = solve_master_exact(&pool, p, 0.0, &z_prev, engine.s_max)?;
                ub = exact.ub;
                done = ub - lb <= cfg.eps;
                if !done {
                    forced = Some(exact.z);
                }
            } else if done {
                log::warn!("{n} binaries: sampled bound accepted without exact verification");
            }
        }
        let (opt_cuts, feas_cuts) = pool.counts();
        log.push(IterationRecord {
            iter: it,
            lb,
            ub,
            gap: ub - lb,
            opt_cuts,
            feas_cuts,
            sp_status: status.join("|"),
            master_backend: cfg.backend.name().into(),
            master_ms,
            sp_ms,
            best_energy: step.best_energy,
        });
        if let Some(t) = timings.as_mut() {
            t.master_ms += master_ms.unwrap_or(0.0);
            t.sampler_ms += step.sampler_ms.unwrap_or(0.0);
            t.subproblem_ms += sp_ms.unwrap_or(0.0);
        }
        if done {
            converged = true;
            break;
        }
    }

    let z = incumbent.ok_or(BendersError::NoIncumbent)?;
    let sol = solve_lp(&p.primal_subproblem(&z), &cfg.tol)?;
    if sol.status != LpStatus::Optimal {
        return Err(BendersError::Lp(LpError::NumericalBreakdown(
            "subproblem at the incumbent did not re-solve to optimality".into(),
        )));
    }
    let iterations = log.len();
    if let Some(t) = timings.as_mut() {
        t.mean_iteration_ms = (t.master_ms + t.sampler_ms + t.subproblem_ms) / iterations as f64;
    }
    let (optimality_cuts, feasibility_cuts) = (pool.optimality.len(), pool.feasibility.len());
    Ok(BendersResult {
        method,
        objective: p.objective(&z, &sol.primal),
        z,
        y: sol.primal,
        lb,
        ub,
        iterations,
        converged,
        optimality_cuts,
        feasibility_cuts,
        timings,
        log,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn knapsack() -> MixedBinaryProgram {
        // max 3z₀ + 2z₁ + y, y ≤ 4 − 2z₀ − 3z₁, y ≤ 3.
        let mut p = MixedBinaryProgram::new(vec![3.0, 2.0], vec![1.0]);
        p.add_row(vec![2.0, 3.0], vec![1.0], 4.0, "cap");
        p.add_row(vec![0.0, 0.0], vec![1.0], 3.0, "ub");
        p
    }

    #[test]
    fn no_binaries_is_one_lp() {
        let mut p = MixedBinaryProgram::new(vec![], vec![1.0, 2.0]);
        p.add_row(vec![], vec![1.0, 1.0], 3.0, "sum");
        let r = run(&p, &BendersConfig::default(), Method::Method1).unwrap();
        assert_eq!(r.iterations, 1);
        assert!((r.objective - 6.0).abs() < 1e-9);
    }

    #[test]
    fn all_methods_solve_the_toy() {
        // Enumeration: z=00 → 3, 10 → 3+2=5, 01 → 2+1=3, 11 → infeasible.
        for m in [Method::ConventionalBD, Method::Method1, Method::Method2] {
            let cfg = BendersConfig { r: 2, ..Default::default() };
            let r = run(&knapsack(), &cfg, m).unwrap();
            assert!(r.converged);
            assert_eq!(r.z, vec![1.0, 0.0]);
            assert!((r.objective - 5.0).abs() < 1e-9, "{m:?}: {}", r.objective);
            assert!(r.log.is_monotone());
        }
    }

    #[test]
    fn qubo_backend_matches() {
        let cfg = BendersConfig { backend: MasterBackend::QuboExact { limit: 24 }, ..Default::default() };
        let r = run(&knapsack(), &cfg, Method::ConventionalBD).unwrap();
        assert!(r.converged);
        assert!((r.objective - 5.0).abs() < 1e-9);
    }

    #[test]
    fn iteration_limit_is_reported_not_raised() {
        // The first master picks z = 11, which is infeasible.
        let cfg = BendersConfig { max_iterations: 1, ..Default::default() };
        assert_eq!(run(&knapsack(), &cfg, Method::ConventionalBD).unwrap_err(), BendersError::NoIncumbent);
        let cfg = BendersConfig { max_iterations: 2, ..Default::default() };
        let r = run(&knapsack(), &cfg, Method::ConventionalBD).unwrap();
        assert!(!r.converged);
        assert_eq!(r.iterations, 2);
    }

    #[test]
    fn config_validation() {
        let p = knapsack();
        for cfg in [
            BendersConfig { eps: 0.0, ..Default::default() },
            BendersConfig { r: 0, ..Default::default() },
            BendersConfig { max_iterations: 0, ..Default::default() },
            BendersConfig { core_point_seed: Some(vec![2.0, 0.0]), ..Default::default() },
        ] {
            assert!(matches!(run(&p, &cfg, Method::Method1), Err(BendersError::InvalidConfig(_))));
        }
    }

    #[test]
    fn infeasible_program_is_reported() {
        let mut p = knapsack();
        p.add_row(vec![0.0, 0.0], vec![-1.0], -10.0, "y ≥ 10");
        assert_eq!(run(&p, &BendersConfig::default(), Method::ConventionalBD).unwrap_err(), BendersError::MasterInfeasible);
    }

    #[test]
    fn timings_are_opt_in() {
        let r = run(&knapsack(), &BendersConfig::default(), Method::Method1).unwrap();
        assert!(r.timings.is_none());
        assert!(r.log.records.iter().all(|x| x.master_ms.is_none()));
        let cfg = BendersConfig { record_timings: true, ..Default::default() };
        assert!(run(&knapsack(), &cfg, Method::Method1).unwrap().timings.is_some());
    }
}
