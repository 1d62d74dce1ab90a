//! Dense two-phase revised simplex.
//!
//! Every Benders cut in this crate is read off an [`LpSolution`]: optimal
//! solves provide dual multipliers (extreme points of the dual polyhedron),
//! infeasible and unbounded solves provide certificate rays.

mod lu;
mod simplex;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Numerical tolerances for [`solve_lp`]. Passed explicitly, never global.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ToleranceSet {
    /// Primal feasibility and reduced-cost tolerance.
    pub feas_tol: f64,
    /// Allowed gap between primal and dual objective at optimality.
    pub duality_tol: f64,
    /// Smallest pivot magnitude accepted in the ratio test.
    pub pivot_tol: f64,
}

impl Default for ToleranceSet {
    fn default() -> Self {
        Self { feas_tol: 1e-7, duality_tol: 1e-6, pivot_tol: 1e-9 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Sense {
    Min,
    Max,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Relation {
    #[serde(rename = "<=")]
    Le,
    #[serde(rename = ">=")]
    Ge,
    #[serde(rename = "=")]
    Eq,
}

/// `opt sense · objectiveᵀx  s.t.  matrix·x (rel) rhs,  lower ≤ x ≤ upper`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearProgram {
    pub sense: Sense,
    pub objective: Vec<f64>,
    pub matrix: Vec<Vec<f64>>,
    pub relations: Vec<Relation>,
    pub rhs: Vec<f64>,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

impl LinearProgram {
    /// A program with no rows and every variable in `[0, ∞)`.
    pub fn new(sense: Sense, objective: Vec<f64>) -> Self {
        let n = objective.len();
        Self {
            sense,
            objective,
            matrix: Vec::new(),
            relations: Vec::new(),
            rhs: Vec::new(),
            lower: vec![0.0; n],
            upper: vec![f64::INFINITY; n],
        }
    }

    pub fn add_row(&mut self, coeffs: Vec<f64>, relation: Relation, rhs: f64) -> &mut Self {
        self.matrix.push(coeffs);
        self.relations.push(relation);
        self.rhs.push(rhs);
        self
    }

    pub fn set_bounds(&mut self, col: usize, lower: f64, upper: f64) -> &mut Self {
        self.lower[col] = lower;
        self.upper[col] = upper;
        self
    }

    pub fn num_rows(&self) -> usize {
        self.matrix.len()
    }

    pub fn num_cols(&self) -> usize {
        self.objective.len()
    }

    pub fn validate(&self) -> Result<(), LpError> {
        let (m, n) = (self.num_rows(), self.num_cols());
        if self.relations.len() != m || self.rhs.len() != m {
            return Err(LpError::DimensionMismatch(format!(
                "{m} matrix rows, {} relations, {} rhs entries",
                self.relations.len(),
                self.rhs.len()
            )));
        }
        if self.lower.len() != n || self.upper.len() != n {
            return Err(LpError::DimensionMismatch(format!(
                "{n} objective entries, {} lower bounds, {} upper bounds",
                self.lower.len(),
                self.upper.len()
            )));
        }
        for (i, row) in self.matrix.iter().enumerate() {
            if row.len() != n {
                return Err(LpError::DimensionMismatch(format!("row {i} has {} entries, expected {n}", row.len())));
            }
            if let Some(j) = row.iter().position(|v| !v.is_finite()) {
                return Err(LpError::NonFinite(format!("matrix entry ({i}, {j})")));
            }
        }
        if let Some(j) = self.objective.iter().position(|v| !v.is_finite()) {
            return Err(LpError::NonFinite(format!("objective entry {j}")));
        }
        if let Some(i) = self.rhs.iter().position(|v| !v.is_finite()) {
            return Err(LpError::NonFinite(format!("rhs entry {i}")));
        }
        for j in 0..n {
            let (lo, hi) = (self.lower[j], self.upper[j]);
            if lo.is_nan() || hi.is_nan() || lo > hi || lo == f64::INFINITY || hi == f64::NEG_INFINITY {
                return Err(LpError::InvalidBounds { col: j, lower: lo, upper: hi });
            }
        }
        Ok(())
    }

    /// `objectiveᵀx`.
    pub fn evaluate(&self, x: &[f64]) -> f64 {
        dot(&self.objective, x)
    }

    /// Largest violation of rows and bounds at `x` (0 when feasible).
    pub fn max_violation(&self, x: &[f64]) -> f64 {
        let mut worst = 0.0f64;
        for ((row, rel), rhs) in self.matrix.iter().zip(&self.relations).zip(&self.rhs) {
            let lhs = dot(row, x);
            let v = match rel {
                Relation::Le => lhs - rhs,
                Relation::Ge => rhs - lhs,
                Relation::Eq => (lhs - rhs).abs(),
            };
            worst = worst.max(v);
        }
        for (j, xj) in x.iter().enumerate() {
            worst = worst.max(self.lower[j] - xj).max(xj - self.upper[j]);
        }
        worst
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LpSolution {
    pub status: LpStatus,
    /// Primal point. Optimal: the optimum. Unbounded: a feasible point the
    /// ray starts from. Infeasible: zeros.
    pub primal: Vec<f64>,
    /// Shadow prices `∂objective/∂rhsᵢ` in the program's own sense
    /// (nonnegative for `≤` rows of a max problem). Zeros unless optimal.
    pub duals: Vec<f64>,
    /// Optimal value; `±∞` for unbounded; `-∞` (max) or `+∞` (min) when infeasible.
    pub objective: f64,
    /// Infeasible: row multipliers `u` (`u ≥ 0` on `≤` rows, `u ≤ 0` on `≥`
    /// rows) whose aggregate row `uᵀA` cannot reach `uᵀb` anywhere in the
    /// variable box. Unbounded: an improving primal direction with unit
    /// infinity norm.
    pub ray: Option<Vec<f64>>,
    pub iterations: usize,
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LpError {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("non-finite coefficient in {0}")]
    NonFinite(String),
    #[error("invalid bounds on column {col}: [{lower}, {upper}]")]
    InvalidBounds { col: usize, lower: f64, upper: f64 },
    #[error("numerical breakdown: {0}")]
    NumericalBreakdown(String),
    #[error("unsupported form: {0}")]
    UnsupportedForm(String),
}

/// Solves `lp` with a two-phase revised simplex under Bland's rule.
pub fn solve_lp(lp: &LinearProgram, tol: &ToleranceSet) -> Result<LpSolution, LpError> {
    lp.validate()?;
    simplex::solve(lp, tol)
}

/// Symmetric dual of a canonical program.
///
/// `max cᵀy, By ≤ b, y ≥ 0` maps to `min bᵀλ, Bᵀλ ≥ c, λ ≥ 0` and back.
/// `≥` rows of a max program (and `≤` rows of a min program) are negated
/// first. Equality rows and bounds other than `[0, ∞)` are rejected.
pub fn dual_of(lp: &LinearProgram) -> Result<LinearProgram, LpError> {
    lp.validate()?;
    if lp.relations.contains(&Relation::Eq) {
        return Err(LpError::UnsupportedForm("equality rows must be split into <= pairs before dualizing".into()));
    }
    if lp.lower.iter().any(|&l| l != 0.0) || lp.upper.iter().any(|&u| u != f64::INFINITY) {
        return Err(LpError::UnsupportedForm("dual_of needs every variable in [0, inf)".into()));
    }
    let canonical = match lp.sense {
        Sense::Max => Relation::Le,
        Sense::Min => Relation::Ge,
    };
    let (m, n) = (lp.num_rows(), lp.num_cols());
    let mut rows = lp.matrix.clone();
    let mut rhs = lp.rhs.clone();
    for i in 0..m {
        if lp.relations[i] != canonical {
            rows[i].iter_mut().for_each(|v| *v = -*v);
            rhs[i] = -rhs[i];
        }
    }
    let (dual_sense, dual_rel) = match lp.sense {
        Sense::Max => (Sense::Min, Relation::Ge),
        Sense::Min => (Sense::Max, Relation::Le),
    };
    let mut dual = LinearProgram::new(dual_sense, rhs);
    for j in 0..n {
        dual.add_row((0..m).map(|i| rows[i][j]).collect(), dual_rel, lp.objective[j]);
    }
    Ok(dual)
}

/// Checks a Farkas certificate returned for an infeasible `lp`: the row
/// multipliers respect sign conventions and
/// `min_{lower ≤ x ≤ upper} (uᵀA)x − uᵀb > tol`.
pub fn is_farkas_certificate(lp: &LinearProgram, ray: &[f64], tol: f64) -> bool {
    if ray.len() != lp.num_rows() {
        return false;
    }
    for (u, rel) in ray.iter().zip(&lp.relations) {
        let ok = match rel {
            Relation::Le => *u >= -tol,
            Relation::Ge => *u <= tol,
            Relation::Eq => true,
        };
        if !ok {
            return false;
        }
    }
    let scale = ray.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if scale == 0.0 {
        return false;
    }
    let mut box_min = 0.0;
    for j in 0..lp.num_cols() {
        let a: f64 = lp.matrix.iter().zip(ray).map(|(row, u)| row[j] * u).sum::<f64>() / scale;
        if a > tol {
            if lp.lower[j] == f64::NEG_INFINITY {
                return false;
            }
            box_min += a * lp.lower[j];
        } else if a < -tol {
            if lp.upper[j] == f64::INFINITY {
                return false;
            }
            box_min += a * lp.upper[j];
        } else if lp.lower[j].is_finite() || lp.upper[j].is_finite() {
            // |a| ≤ tol: take the cheaper finite bound so tiny residues do not
            // fabricate a contradiction.
            let lo = if lp.lower[j].is_finite() { a * lp.lower[j] } else { f64::INFINITY };
            let hi = if lp.upper[j].is_finite() { a * lp.upper[j] } else { f64::INFINITY };
            box_min += lo.min(hi);
        }
    }
    let ub: f64 = dot(ray, &lp.rhs) / scale;
    box_min - ub > tol
}

/// Checks an unbounded ray: it keeps every row and bound feasible and
/// strictly improves the objective.
pub fn is_improving_ray(lp: &LinearProgram, ray: &[f64], tol: f64) -> bool {
    if ray.len() != lp.num_cols() {
        return false;
    }
    for (row, rel) in lp.matrix.iter().zip(&lp.relations) {
        let a = dot(row, ray);
        let ok = match rel {
            Relation::Le => a <= tol,
            Relation::Ge => a >= -tol,
            Relation::Eq => a.abs() <= tol,
        };
        if !ok {
            return false;
        }
    }
    for (j, d) in ray.iter().enumerate() {
        if (*d < -tol && lp.lower[j].is_finite()) || (*d > tol && lp.upper[j].is_finite()) {
            return false;
        }
    }
    let gain = lp.evaluate(ray);
    match lp.sense {
        Sense::Max => gain > tol,
        Sense::Min => gain < -tol,
    }
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}
