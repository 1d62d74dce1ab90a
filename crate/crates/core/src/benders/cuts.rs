use super::BendersError;
use crate::lpcore::{dot, solve_lp, LpStatus, ToleranceSet};
use crate::model::MixedBinaryProgram;
use serde::{Deserialize, Serialize};

/// Cut `g − h·z ≥ s` (optimality) or `g − h·z ≥ 0` (feasibility), stored
/// with the dual vector it came from: `g = wᵀb`, `h = wᵀA`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Cut {
    pub dual: Vec<f64>,
    pub g: f64,
    pub h: Vec<f64>,
    pub iteration: usize,
    pub active: bool,
}

impl Cut {
    pub fn new(p: &MixedBinaryProgram, dual: Vec<f64>, iteration: usize) -> Self {
        let g = dot(&dual, &p.b);
        let h = (0..p.n_z).map(|j| p.a.iter().zip(&dual).map(|(row, w)| row[j] * w).sum()).collect();
        Self { dual, g, h, iteration, active: true }
    }

    /// `w(b − Az)`.
    pub fn value(&self, z: &[f64]) -> f64 {
        self.g - dot(&self.h, z)
    }
}

/// Extreme points (optimality cuts) and extreme rays (feasibility cuts)
/// collected so far.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct CutPool {
    pub optimality: Vec<Cut>,
    pub feasibility: Vec<Cut>,
}

const DUP_TOL: f64 = 1e-9;

fn same(a: &[f64], b: &[f64]) -> bool {
    a.len() == b.len() && a.iter().zip(b).all(|(x, y)| (x - y).abs() <= DUP_TOL)
}

impl CutPool {
    pub fn new() -> Self {
        Self::default()
    }

    /// A pool holding the pure-binary rows of `p` as feasibility cuts: the
    /// unit vector of such a row is a ray of `{λ ≥ 0 : Bᵀλ ≥ c}` because its
    /// `B` row is zero.
    pub fn seeded(p: &MixedBinaryProgram) -> Self {
        let mut pool = Self::new();
        for r in p.z_only_rows() {
            let mut e = vec![0.0; p.num_rows()];
            e[r] = 1.0;
            pool.feasibility.push(Cut::new(p, e, 0));
        }
        pool
    }

    /// Adds `pᵗ` unless an equal point is already stored.
    pub fn add_optimality(&mut self, p: &MixedBinaryProgram, lambda: Vec<f64>, iteration: usize) -> bool {
        if let Some(c) = self.optimality.iter_mut().find(|c| same(&c.dual, &lambda)) {
            let revived = !c.active;
            c.active = true;
            return revived;
        }
        self.optimality.push(Cut::new(p, lambda, iteration));
        true
    }

    /// Adds `rᵏ` after checking it lies in the dual recession cone.
    pub fn add_feasibility(
        &mut self,
        p: &MixedBinaryProgram,
        ray: Vec<f64>,
        iteration: usize,
        tol: f64,
    ) -> Result<bool, BendersError> {
        check_ray(p, &ray, tol)?;
        if let Some(c) = self.feasibility.iter_mut().find(|c| same(&c.dual, &ray)) {
            let revived = !c.active;
            c.active = true;
            return Ok(revived);
        }
        self.feasibility.push(Cut::new(p, ray, iteration));
        Ok(true)
    }

    pub fn active_optimality(&self) -> impl Iterator<Item = &Cut> {
        self.optimality.iter().filter(|c| c.active)
    }

    pub fn active_feasibility(&self) -> impl Iterator<Item = &Cut> {
        self.feasibility.iter().filter(|c| c.active)
    }

    pub fn counts(&self) -> (usize, usize) {
        (self.active_optimality().count(), self.active_feasibility().count())
    }

    /// Deactivates cuts generated before `iteration − window`. Seeded cuts
    /// (iteration 0) are kept.
    pub fn expire(&mut self, iteration: usize, window: usize) {
        if window == 0 {
            return;
        }
        for c in self.optimality.iter_mut().chain(self.feasibility.iter_mut()) {
            if c.iteration > 0 && c.iteration + window < iteration {
                c.active = false;
            }
        }
    }
}

fn check_ray(p: &MixedBinaryProgram, ray: &[f64], tol: f64) -> Result<(), BendersError> {
    if ray.len() != p.num_rows() || ray.iter().any(|v| *v < -tol || !v.is_finite()) {
        return Err(BendersError::InvalidRay("negative or malformed component".into()));
    }
    for j in 0..p.n_y {
        let col: f64 = p.b_mat.iter().zip(ray).map(|(row, r)| row[j] * r).sum();
        if col < -tol {
            return Err(BendersError::InvalidRay(format!("(Bᵀr)_{j} = {col}")));
        }
    }
    Ok(())
}

/// Result of the dual subproblem at one point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DualOutcome {
    /// Optimal `λ` and `x(z) = λᵀ(b − Az)`.
    ExtremePoint { lambda: Vec<f64>, value: f64 },
    /// Unbounded direction `r`: the primal subproblem is infeasible at `z`.
    ExtremeRay { ray: Vec<f64> },
}

/// `x(z) = min λᵀ(b − Az)` over `{λ ≥ 0 : Bᵀλ ≥ c}`.
pub fn solve_dual_subproblem(
    p: &MixedBinaryProgram,
    z: &[f64],
    tol: &ToleranceSet,
) -> Result<DualOutcome, BendersError> {
    let sol = solve_lp(&p.dual_subproblem(z), tol)?;
    match sol.status {
        LpStatus::Optimal => {
            let lambda: Vec<f64> = sol.primal.iter().map(|v| v.max(0.0)).collect();
            Ok(DualOutcome::ExtremePoint { lambda, value: sol.objective })
        }
        LpStatus::Unbounded => {
            let ray = sol.ray.expect("unbounded solves carry a ray").iter().map(|v| v.max(0.0)).collect();
            Ok(DualOutcome::ExtremeRay { ray })
        }
        LpStatus::Infeasible => Err(BendersError::DualInfeasible),
    }
}

/// Running approximation of a core point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorePointState {
    pub zbar: Vec<f64>,
    pub history: Vec<Vec<f64>>,
}

impl CorePointState {
    pub fn new(seed: Vec<f64>) -> Self {
        Self { zbar: seed, history: vec![] }
    }
}

/// `z̄ⁿ = ½ z̄ⁿ⁻¹ + ½ zⁿ⁻¹`.
pub fn update_core_point(state: &CorePointState, z_prev: &[f64]) -> CorePointState {
    let zbar = state.zbar.iter().zip(z_prev).map(|(a, b)| (0.5 * a + 0.5 * b).clamp(0.0, 1.0)).collect();
    let mut history = state.history.clone();
    history.push(z_prev.to_vec());
    CorePointState { zbar, history }
}

/// The dual subproblem at the core point; its optimal `λ` gives the
/// Pareto cut.
pub fn solve_pareto_subproblem(
    p: &MixedBinaryProgram,
    core: &CorePointState,
    tol: &ToleranceSet,
) -> Result<DualOutcome, BendersError> {
    solve_dual_subproblem(p, &core.zbar, tol)
}
