use super::{BendersError, CutPool};
use crate::lpcore::dot;
use crate::model::MixedBinaryProgram;
use serde::{Deserialize, Serialize};

/// Master solutions whose values differ by at most this are ties.
pub const TIE_TOL: f64 = 1e-9;
/// Slack allowed on feasibility cuts.
pub const CUT_TOL: f64 = 1e-7;
/// Largest binary count the enumerative master accepts.
pub const MASTER_LIMIT: usize = 30;

/// `H(z, z') = Σ zᵢ(1 − 2z'ᵢ) + z'ᵢ`, the Hamming distance for binary `z'`.
pub fn hamming(z: &[f64], z_prev: &[f64]) -> f64 {
    z.iter().zip(z_prev).map(|(a, b)| a * (1.0 - 2.0 * b) + b).sum()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MasterCandidate {
    pub z: Vec<f64>,
    pub s: f64,
    /// `offset + iᵀz + s + ρ·H(z, z_prev)`.
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MasterSolution {
    pub z: Vec<f64>,
    pub s: f64,
    pub value: f64,
    /// Optimum of the master without the Hamming term: an upper bound on the
    /// original program.
    pub ub: f64,
}

/// `s` the master assigns to `z`: the tightest optimality cut, capped at
/// `s_max`. `None` when a feasibility cut excludes `z`.
pub fn master_s(pool: &CutPool, z: &[f64], s_max: f64) -> Option<f64> {
    if pool.active_feasibility().any(|c| c.value(z) < -CUT_TOL) {
        return None;
    }
    Some(pool.active_optimality().map(|c| c.value(z)).fold(s_max, f64::min))
}

/// Unregularized master objective at `z`, `None` if `z` is cut off.
pub fn master_value(pool: &CutPool, p: &MixedBinaryProgram, z: &[f64], s_max: f64) -> Option<f64> {
    master_s(pool, z, s_max).map(|s| p.offset + dot(&p.i, z) + s)
}

struct Search<'a> {
    n: usize,
    r: usize,
    s_max: f64,
    w: Vec<f64>,
    base: f64,
    suffix_w: Vec<f64>,
    opt: Vec<&'a [f64]>,
    opt_val: Vec<f64>,
    opt_suffix: Vec<Vec<f64>>,
    feas: Vec<&'a [f64]>,
    feas_val: Vec<f64>,
    feas_suffix: Vec<Vec<f64>>,
    z: Vec<f64>,
    lin: f64,
    best: Vec<MasterCandidate>,
}

fn suffix_of(h: &[f64], n: usize) -> Vec<f64> {
    let mut out = vec![0.0; n + 1];
    for j in (0..n).rev() {
        out[j] = out[j + 1] + (-h[j]).max(0.0);
    }
    out
}

impl Search<'_> {
    fn threshold(&self) -> f64 {
        if self.best.len() < self.r {
            f64::NEG_INFINITY
        } else {
            self.best[self.r - 1].value + TIE_TOL
        }
    }

    fn dfs(&mut self, d: usize) {
        for (k, v) in self.feas_val.iter().enumerate() {
            if v + self.feas_suffix[k][d] < -CUT_TOL {
                return;
            }
        }
        let mut s_ub = self.s_max;
        for (t, v) in self.opt_val.iter().enumerate() {
            s_ub = s_ub.min(v + self.opt_suffix[t][d]);
        }
        let ub = self.base + self.lin + self.suffix_w[d] + s_ub;
        if ub <= self.threshold() {
            return;
        }
        if d == self.n {
            // At a leaf every suffix is zero, so `s_ub` is the exact `s`.
            let cand = MasterCandidate { z: self.z.clone(), s: s_ub, value: ub };
            let pos = self.best.iter().position(|b| cand.value > b.value + TIE_TOL).unwrap_or(self.best.len());
            self.best.insert(pos, cand);
            self.best.truncate(self.r);
            return;
        }
        self.dfs(d + 1);
        self.z[d] = 1.0;
        self.lin += self.w[d];
        for (v, h) in self.opt_val.iter_mut().zip(&self.opt) {
            *v -= h[d];
        }
        for (v, h) in self.feas_val.iter_mut().zip(&self.feas) {
            *v -= h[d];
        }
        self.dfs(d + 1);
        self.z[d] = 0.0;
        self.lin -= self.w[d];
        for (v, h) in self.opt_val.iter_mut().zip(&self.opt) {
            *v += h[d];
        }
        for (v, h) in self.feas_val.iter_mut().zip(&self.feas) {
            *v += h[d];
        }
    }
}

/// The `r` best distinct binary vectors of
/// `max offset + iᵀz + s + ρ·H(z, z_prev)` subject to the active cuts, with
/// `s ≤ s_max`. Best first; ties in lexicographic order.
pub fn master_top_r(
    pool: &CutPool,
    p: &MixedBinaryProgram,
    rho: f64,
    z_prev: &[f64],
    s_max: f64,
    r: usize,
) -> Result<Vec<MasterCandidate>, BendersError> {
    let n = p.n_z;
    if n > MASTER_LIMIT {
        return Err(BendersError::MasterTooLarge(n));
    }
    let w: Vec<f64> = (0..n).map(|j| p.i[j] + rho * (1.0 - 2.0 * z_prev[j])).collect();
    let mut suffix_w = vec![0.0; n + 1];
    for j in (0..n).rev() {
        suffix_w[j] = suffix_w[j + 1] + w[j].max(0.0);
    }
    let opt: Vec<_> = pool.active_optimality().collect();
    let feas: Vec<_> = pool.active_feasibility().collect();
    let mut search = Search {
        n,
        r: r.max(1),
        s_max,
        base: p.offset + rho * z_prev.iter().sum::<f64>(),
        suffix_w,
        w,
        opt_val: opt.iter().map(|c| c.g).collect(),
        opt_suffix: opt.iter().map(|c| suffix_of(&c.h, n)).collect(),
        opt: opt.iter().map(|c| c.h.as_slice()).collect(),
        feas_val: feas.iter().map(|c| c.g).collect(),
        feas_suffix: feas.iter().map(|c| suffix_of(&c.h, n)).collect(),
        feas: feas.iter().map(|c| c.h.as_slice()).collect(),
        z: vec![0.0; n],
        lin: 0.0,
        best: vec![],
    };
    search.dfs(0);
    if search.best.is_empty() {
        return Err(BendersError::MasterInfeasible);
    }
    Ok(search.best)
}

/// Exact argmax of the (regularized) master, plus the unregularized bound.
pub fn solve_master_exact(
    pool: &CutPool,
    p: &MixedBinaryProgram,
    rho: f64,
    z_prev: &[f64],
    s_max: f64,
) -> Result<MasterSolution, BendersError> {
    let best = master_top_r(pool, p, rho, z_prev, s_max, 1)?.swap_remove(0);
    let ub = if rho == 0.0 { best.value } else { master_top_r(pool, p, 0.0, z_prev, s_max, 1)?[0].value };
    Ok(MasterSolution { z: best.z, s: best.s, value: best.value, ub })
}
