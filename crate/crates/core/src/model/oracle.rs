use super::{lex_cmp, z_from_mask, MixedBinaryProgram, ModelError, ModelSource, VarKind};
use crate::lpcore::{dot, solve_lp, LinearProgram, LpStatus, ToleranceSet};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub const DEFAULT_BRUTE_FORCE_LIMIT: usize = 16;

/// Values within this distance of the best count as ties.
const TIE_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "lowercase")]
pub enum MilpOutcome {
    Optimal { z: Vec<f64>, y: Vec<f64>, objective: f64 },
    Infeasible,
    Unbounded,
}

impl MilpOutcome {
    pub fn objective(&self) -> Option<f64> {
        match self {
            MilpOutcome::Optimal { objective, .. } => Some(*objective),
            _ => None,
        }
    }
}

enum Leaf {
    Skip,
    Value(f64, Vec<f64>),
    Unbounded,
}

fn pick_best(mut leaves: Vec<(Vec<f64>, f64, Vec<f64>)>) -> MilpOutcome {
    let Some(best) = leaves.iter().map(|l| l.1).reduce(f64::max) else {
        return MilpOutcome::Infeasible;
    };
    leaves.retain(|l| l.1 >= best - TIE_TOL);
    leaves.sort_by(|a, b| lex_cmp(&a.0, &b.0));
    let (z, objective, y) = leaves.swap_remove(0);
    MilpOutcome::Optimal { z, y, objective }
}

fn z_rows_ok(p: &MixedBinaryProgram, rows: &[usize], z: &[f64], tol: f64) -> bool {
    rows.iter().all(|&r| dot(&p.a[r], z) <= p.b[r] + tol)
}

/// Enumerates every `z`, solving the primal subproblem for each one that
/// passes the pure-binary rows. Ties go to the lexicographically smallest `z`.
pub fn brute_force_milp(p: &MixedBinaryProgram, limit: usize) -> Result<MilpOutcome, ModelError> {
    p.validate()?;
    if p.n_z > limit || p.n_z >= 63 {
        return Err(ModelError::TooManyBinaries { n_z: p.n_z, limit });
    }
    let tol = ToleranceSet::default();
    let z_rows = p.z_only_rows();
    let leaves: Vec<Result<(Vec<f64>, Leaf), ModelError>> = (0..1u64 << p.n_z)
        .into_par_iter()
        .map(|mask| {
            let z = z_from_mask(mask, p.n_z);
            if !z_rows_ok(p, &z_rows, &z, tol.feas_tol) {
                return Ok((z, Leaf::Skip));
            }
            let sol = solve_lp(&p.primal_subproblem(&z), &tol)?;
            let leaf = match sol.status {
                LpStatus::Optimal => Leaf::Value(p.offset + dot(&p.i, &z) + sol.objective, sol.primal),
                LpStatus::Infeasible => Leaf::Skip,
                LpStatus::Unbounded => Leaf::Unbounded,
            };
            Ok((z, leaf))
        })
        .collect();
    let mut values = Vec::new();
    for leaf in leaves {
        match leaf? {
            (_, Leaf::Unbounded) => return Ok(MilpOutcome::Unbounded),
            (z, Leaf::Value(v, y)) => values.push((z, v, y)),
            (_, Leaf::Skip) => {}
        }
    }
    Ok(pick_best(values))
}

/// Counters from [`certified_enumeration`].
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct EnumerationStats {
    pub lp_solves: u64,
    pub screened: u64,
    pub ray_pruned: u64,
    pub bound_pruned: u64,
}

/// Affine certificate `g − h·z` over the binary block.
struct Affine {
    g: f64,
    h: Vec<f64>,
}

impl Affine {
    fn at(&self, z: &[f64]) -> f64 {
        self.g - dot(&self.h, z)
    }
}

/// Exhaustive enumeration that skips LP solves when a stored certificate
/// already decides the assignment: a Farkas ray `u` from an earlier
/// infeasible subproblem proves infeasibility wherever `uᵀ(b − Az) < 0`,
/// and an earlier dual solution `λ` bounds the subproblem value by
/// `λᵀ(b − Az)` (weak duality). Certificates are checked before being kept,
/// so the result is the same as [`brute_force_milp`].
pub fn certified_enumeration(
    p: &MixedBinaryProgram,
    limit: usize,
) -> Result<(MilpOutcome, EnumerationStats), ModelError> {
    p.validate()?;
    if p.n_z > limit || p.n_z >= 63 {
        return Err(ModelError::TooManyBinaries { n_z: p.n_z, limit });
    }
    let tol = ToleranceSet::default();
    let margin = 1e-6;
    let z_rows = p.z_only_rows();
    let mut rays: Vec<Affine> = vec![];
    let mut points: Vec<Affine> = vec![];
    let mut stats = EnumerationStats::default();
    let mut incumbent = f64::NEG_INFINITY;
    let mut values = vec![];
    let affine = |w: &[f64]| Affine {
        g: dot(w, &p.b),
        h: (0..p.n_z).map(|j| p.a.iter().zip(w).map(|(row, wr)| row[j] * wr).sum()).collect(),
    };
    let col_dot = |w: &[f64], j: usize| -> f64 { p.b_mat.iter().zip(w).map(|(row, wr)| row[j] * wr).sum() };

    for mask in 0..1u64 << p.n_z {
        let z = z_from_mask(mask, p.n_z);
        if !z_rows_ok(p, &z_rows, &z, tol.feas_tol) {
            stats.screened += 1;
            continue;
        }
        if let Some(k) = rays.iter().position(|r| r.at(&z) < -margin) {
            rays[..=k].rotate_right(1);
            stats.ray_pruned += 1;
            continue;
        }
        let base = p.offset + dot(&p.i, &z);
        if let Some(k) = points.iter().position(|pt| base + pt.at(&z) < incumbent - margin) {
            points[..=k].rotate_right(1);
            stats.bound_pruned += 1;
            continue;
        }
        stats.lp_solves += 1;
        let sol = solve_lp(&p.primal_subproblem(&z), &tol)?;
        match sol.status {
            LpStatus::Unbounded => return Ok((MilpOutcome::Unbounded, stats)),
            LpStatus::Infeasible => {
                let u: Vec<f64> = sol.ray.expect("infeasible solves carry a ray").iter().map(|v| v.max(0.0)).collect();
                let sound = (0..p.n_y).all(|j| col_dot(&u, j) >= -1e-12);
                if sound {
                    rays.insert(0, affine(&u));
                }
            }
            LpStatus::Optimal => {
                let v = base + sol.objective;
                incumbent = incumbent.max(v);
                let lam: Vec<f64> = sol.duals.iter().map(|v| v.max(0.0)).collect();
                let sound = (0..p.n_y).all(|j| col_dot(&lam, j) >= p.c[j] - 1e-12);
                if sound {
                    points.insert(0, affine(&lam));
                }
                values.push((z, v, sol.primal));
            }
        }
    }
    Ok((pick_best(values), stats))
}

/// Brute force directly on a source model: binaries fixed through bounds,
/// the rest solved as one LP in the source's own form. The returned `z`
/// lists binaries in declaration order and `y` holds every source variable.
pub fn brute_force_source(src: &ModelSource, limit: usize) -> Result<MilpOutcome, ModelError> {
    let bins = src.binaries();
    if bins.len() > limit || bins.len() >= 63 {
        return Err(ModelError::TooManyBinaries { n_z: bins.len(), limit });
    }
    if let Some((r, row)) = src.rows.iter().enumerate().find(|(_, row)| !row.products.is_empty()) {
        return Err(ModelError::NonlinearTerm { row: r, tag: row.tag.clone() });
    }
    let tol = ToleranceSet::default();
    let n = src.vars.len();
    let flip = if src.sense == crate::lpcore::Sense::Max { 1.0 } else { -1.0 };
    let mut base = LinearProgram::new(src.sense, src.objective.clone());
    for row in &src.rows {
        let mut coeffs = vec![0.0; n];
        for &(v, a) in &row.terms {
            coeffs[v] += a;
        }
        base.add_row(coeffs, row.relation, row.rhs);
    }
    for (v, var) in src.vars.iter().enumerate() {
        if let VarKind::Continuous { lower, upper } = var.kind {
            base.set_bounds(v, lower, upper);
        }
    }
    let leaves: Vec<Result<(Vec<f64>, Leaf), ModelError>> = (0..1u64 << bins.len())
        .into_par_iter()
        .map(|mask| {
            let z = z_from_mask(mask, bins.len());
            let mut lp = base.clone();
            for (k, &v) in bins.iter().enumerate() {
                lp.set_bounds(v, z[k], z[k]);
            }
            let sol = solve_lp(&lp, &tol)?;
            let leaf = match sol.status {
                LpStatus::Optimal => Leaf::Value(flip * (sol.objective + src.objective_constant), sol.primal),
                LpStatus::Infeasible => Leaf::Skip,
                LpStatus::Unbounded => Leaf::Unbounded,
            };
            Ok((z, leaf))
        })
        .collect();
    let mut values = vec![];
    for leaf in leaves {
        match leaf? {
            (_, Leaf::Unbounded) => return Ok(MilpOutcome::Unbounded),
            (z, Leaf::Value(v, x)) => values.push((z, v, x)),
            (_, Leaf::Skip) => {}
        }
    }
    Ok(match pick_best(values) {
        MilpOutcome::Optimal { z, y, objective } => MilpOutcome::Optimal { z, y, objective: flip * objective },
        other => other,
    })
}
