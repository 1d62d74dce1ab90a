use super::lu::DenseLu;
use super::{LinearProgram, LpError, LpSolution, LpStatus, Relation, Sense, ToleranceSet};

const REFACTOR_EVERY: usize = 50;
const CONDITION_LIMIT: f64 = 1e12;
const PIVOT_REL: f64 = 1e-9;
const PIVOT_PREFER: f64 = 0.1;

/// How an original column is represented by nonnegative standard-form columns.
#[derive(Debug, Clone, Copy)]
enum ColMap {
    Shift { col: usize, lo: f64 },
    Reflect { col: usize, hi: f64 },
    Split { pos: usize, neg: usize },
}

/// `min costᵀx  s.t.  A x = b,  x ≥ 0,  b ≥ 0` with columns ordered
/// structural, slack, artificial.
struct StandardForm {
    m: usize,
    m_orig: usize,
    cols: Vec<Vec<(usize, f64)>>,
    art_start: usize,
    cost: Vec<f64>,
    b: Vec<f64>,
    sign: Vec<f64>,
    colmap: Vec<ColMap>,
    initial_basis: Vec<usize>,
}

impl StandardForm {
    fn build(lp: &LinearProgram) -> Self {
        let mut colmap = Vec::with_capacity(lp.num_cols());
        let mut n_struct = 0;
        let mut bound_rows: Vec<(usize, f64)> = Vec::new();
        for j in 0..lp.num_cols() {
            let (lo, hi) = (lp.lower[j], lp.upper[j]);
            if lo.is_finite() {
                colmap.push(ColMap::Shift { col: n_struct, lo });
                if hi.is_finite() {
                    bound_rows.push((n_struct, hi - lo));
                }
                n_struct += 1;
            } else if hi.is_finite() {
                colmap.push(ColMap::Reflect { col: n_struct, hi });
                n_struct += 1;
            } else {
                colmap.push(ColMap::Split { pos: n_struct, neg: n_struct + 1 });
                n_struct += 2;
            }
        }

        let m_orig = lp.num_rows();
        let m = m_orig + bound_rows.len();
        let mut rows: Vec<Vec<(usize, f64)>> = Vec::with_capacity(m);
        let mut rhs = Vec::with_capacity(m);
        let mut rels = Vec::with_capacity(m);
        for i in 0..m_orig {
            let mut row = Vec::new();
            let mut r = lp.rhs[i];
            for (j, &a) in lp.matrix[i].iter().enumerate() {
                if a == 0.0 {
                    continue;
                }
                match colmap[j] {
                    ColMap::Shift { col, lo } => {
                        row.push((col, a));
                        r -= a * lo;
                    }
                    ColMap::Reflect { col, hi } => {
                        row.push((col, -a));
                        r -= a * hi;
                    }
                    ColMap::Split { pos, neg } => {
                        row.push((pos, a));
                        row.push((neg, -a));
                    }
                }
            }
            rows.push(row);
            rhs.push(r);
            rels.push(lp.relations[i]);
        }
        for &(col, width) in &bound_rows {
            rows.push(vec![(col, 1.0)]);
            rhs.push(width);
            rels.push(Relation::Le);
        }

        // Row signs: make b ≥ 0, and prefer a +1 slack when b = 0.
        let mut sign = vec![1.0; m];
        for i in 0..m {
            let slack_coef = match rels[i] {
                Relation::Le => 1.0,
                Relation::Ge => -1.0,
                Relation::Eq => 0.0,
            };
            if rhs[i] < 0.0 || (rhs[i] == 0.0 && slack_coef < 0.0) {
                sign[i] = -1.0;
            }
        }

        let mut cols: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n_struct];
        for (i, row) in rows.iter().enumerate() {
            for &(col, a) in row {
                cols[col].push((i, sign[i] * a));
            }
        }
        // Split columns may have received duplicate row entries only if the
        // same original column appeared twice, which cannot happen.
        let mut initial_basis = vec![usize::MAX; m];
        for i in 0..m {
            let slack_coef = match rels[i] {
                Relation::Le => 1.0,
                Relation::Ge => -1.0,
                Relation::Eq => continue,
            } * sign[i];
            if slack_coef > 0.0 {
                initial_basis[i] = cols.len();
            }
            cols.push(vec![(i, slack_coef)]);
        }
        let art_start = cols.len();
        for (i, slot) in initial_basis.iter_mut().enumerate() {
            if *slot == usize::MAX {
                *slot = cols.len();
                cols.push(vec![(i, 1.0)]);
            }
        }

        let mut cost = vec![0.0; cols.len()];
        let flip = if lp.sense == Sense::Max { -1.0 } else { 1.0 };
        for (j, map) in colmap.iter().enumerate() {
            let c = flip * lp.objective[j];
            match *map {
                ColMap::Shift { col, .. } => cost[col] += c,
                ColMap::Reflect { col, .. } => cost[col] -= c,
                ColMap::Split { pos, neg } => {
                    cost[pos] += c;
                    cost[neg] -= c;
                }
            }
        }
        let b = rhs.iter().zip(&sign).map(|(r, s)| r * s).collect();
        Self { m, m_orig, cols, art_start, cost, b, sign, colmap, initial_basis }
    }

    fn to_original(&self, x: &[f64], translate: bool) -> Vec<f64> {
        self.colmap
            .iter()
            .map(|map| match *map {
                ColMap::Shift { col, lo } => x[col] + if translate { lo } else { 0.0 },
                ColMap::Reflect { col, hi } => (if translate { hi } else { 0.0 }) - x[col],
                ColMap::Split { pos, neg } => x[pos] - x[neg],
            })
            .collect()
    }
}

struct Basis<'a> {
    sf: &'a StandardForm,
    heads: Vec<usize>,
    is_basic: Vec<bool>,
    lu: DenseLu,
    etas: Vec<(usize, Vec<f64>)>,
    x_b: Vec<f64>,
}

enum PhaseEnd {
    Optimal(Vec<f64>),
    Unbounded { entering: usize, alpha: Vec<f64> },
}

impl<'a> Basis<'a> {
    fn new(sf: &'a StandardForm) -> Result<Self, LpError> {
        let mut is_basic = vec![false; sf.cols.len()];
        for &h in &sf.initial_basis {
            is_basic[h] = true;
        }
        let lu = DenseLu::factor(Vec::new(), 0, 0.0).expect("empty factorization");
        let mut basis =
            Self { sf, heads: sf.initial_basis.clone(), is_basic, lu, etas: Vec::new(), x_b: Vec::new() };
        basis.refactor()?;
        Ok(basis)
    }

    fn refactor(&mut self) -> Result<(), LpError> {
        let m = self.sf.m;
        let mut dense = vec![0.0; m * m];
        let mut norm1 = 0.0f64;
        for (k, &h) in self.heads.iter().enumerate() {
            let mut colsum = 0.0;
            for &(i, v) in &self.sf.cols[h] {
                dense[i * m + k] = v;
                colsum += v.abs();
            }
            norm1 = norm1.max(colsum);
        }
        self.lu = DenseLu::factor(dense, m, 1e-14)
            .ok_or_else(|| LpError::NumericalBreakdown("singular basis matrix".into()))?;
        let cond = norm1 * self.lu.inverse_norm1_estimate();
        if cond > CONDITION_LIMIT {
            return Err(LpError::NumericalBreakdown(format!(
                "basis condition estimate {cond:.3e} exceeds {CONDITION_LIMIT:e}; rescale the model"
            )));
        }
        self.etas.clear();
        let mut x = self.sf.b.clone();
        self.lu.solve(&mut x);
        self.x_b = x;
        Ok(())
    }

    fn ftran(&self, col: usize) -> Vec<f64> {
        let mut x = vec![0.0; self.sf.m];
        for &(i, v) in &self.sf.cols[col] {
            x[i] = v;
        }
        self.lu.solve(&mut x);
        for (r, eta) in &self.etas {
            let p = x[*r] / eta[*r];
            if p != 0.0 {
                for (i, e) in eta.iter().enumerate() {
                    x[i] -= e * p;
                }
            }
            x[*r] = p;
        }
        x
    }

    fn btran(&self, mut w: Vec<f64>) -> Vec<f64> {
        for (r, eta) in self.etas.iter().rev() {
            let mut s = w[*r];
            for (i, e) in eta.iter().enumerate() {
                if i != *r {
                    s -= w[i] * e;
                }
            }
            w[*r] = s / eta[*r];
        }
        self.lu.solve_transpose(&mut w);
        w
    }

    fn duals(&self, cost: &[f64]) -> Vec<f64> {
        self.btran(self.heads.iter().map(|&h| cost[h]).collect())
    }

    fn reduced_cost(&self, cost: &[f64], y: &[f64], j: usize) -> f64 {
        cost[j] - self.sf.cols[j].iter().map(|&(i, v)| y[i] * v).sum::<f64>()
    }

    fn pivot(&mut self, row: usize, entering: usize, alpha: Vec<f64>, theta: f64) -> Result<(), LpError> {
        if theta != 0.0 {
            for (x, a) in self.x_b.iter_mut().zip(&alpha) {
                *x -= theta * a;
            }
        }
        self.x_b[row] = theta;
        self.is_basic[self.heads[row]] = false;
        self.heads[row] = entering;
        self.is_basic[entering] = true;
        self.etas.push((row, alpha));
        if self.etas.len() >= REFACTOR_EVERY {
            self.refactor()?;
        }
        Ok(())
    }

    /// Two-pass ratio test. The first pass bounds the step with the primal
    /// tolerance relaxed; the second picks, among rows within that bound, a
    /// pivot close to the largest, breaking ties by lowest basic column index.
    fn ratio_test(&self, alpha: &[f64], tol: &ToleranceSet) -> Option<usize> {
        let big = alpha.iter().fold(0.0f64, |m, a| m.max(*a));
        let floor = tol.pivot_tol.max(PIVOT_REL * big);
        let bound = alpha
            .iter()
            .zip(&self.x_b)
            .filter(|(a, _)| **a > floor)
            .map(|(a, x)| (x.max(0.0) + tol.feas_tol) / a)
            .fold(f64::INFINITY, f64::min);
        if bound == f64::INFINITY {
            return None;
        }
        let near: Vec<usize> =
            (0..alpha.len()).filter(|&i| alpha[i] > floor && self.x_b[i].max(0.0) / alpha[i] <= bound).collect();
        let top = near.iter().fold(0.0f64, |m, &i| m.max(alpha[i]));
        near.into_iter().filter(|&i| alpha[i] >= PIVOT_PREFER * top).min_by_key(|&i| self.heads[i])
    }

    /// Bland's rule for the entering column; see [`Self::ratio_test`] for the
    /// leaving row.
    fn run_phase(
        &mut self,
        cost: &[f64],
        tol: &ToleranceSet,
        iterations: &mut usize,
        limit: usize,
    ) -> Result<PhaseEnd, LpError> {
        let allowed = self.sf.art_start;
        loop {
            let y = self.duals(cost);
            let entering = (0..allowed)
                .find(|&j| !self.is_basic[j] && self.reduced_cost(cost, &y, j) < -tol.feas_tol);
            let Some(q) = entering else {
                return Ok(PhaseEnd::Optimal(y));
            };
            let alpha = self.ftran(q);
            let leave = self.ratio_test(&alpha, tol);
            let Some(row) = leave else {
                return Ok(PhaseEnd::Unbounded { entering: q, alpha });
            };
            let theta = self.x_b[row].max(0.0) / alpha[row];
            self.pivot(row, q, alpha, theta)?;
            *iterations += 1;
            if *iterations > limit {
                return Err(LpError::NumericalBreakdown(format!("no convergence after {limit} pivots")));
            }
        }
    }

    /// Pivots zero-level artificials out of the basis where a structural or
    /// slack column can replace them. Rows with no replacement are redundant.
    fn expel_artificials(&mut self, tol: &ToleranceSet) -> Result<(), LpError> {
        for r in 0..self.sf.m {
            if self.heads[r] < self.sf.art_start {
                continue;
            }
            let mut e = vec![0.0; self.sf.m];
            e[r] = 1.0;
            let rho = self.btran(e);
            let mut best: Option<(usize, f64)> = None;
            for j in 0..self.sf.art_start {
                if self.is_basic[j] {
                    continue;
                }
                let a: f64 = self.sf.cols[j].iter().map(|&(i, v)| rho[i] * v).sum();
                if a.abs() > tol.pivot_tol.max(1e-7) && best.is_none_or(|(_, b)| a.abs() > b) {
                    best = Some((j, a.abs()));
                }
            }
            if let Some((j, _)) = best {
                let alpha = self.ftran(j);
                self.pivot(r, j, alpha, 0.0)?;
            }
        }
        self.refactor()
    }

    fn standard_primal(&self) -> Vec<f64> {
        let mut x = vec![0.0; self.sf.cols.len()];
        for (&h, &v) in self.heads.iter().zip(&self.x_b) {
            x[h] = v.max(0.0);
        }
        x
    }
}

pub(super) fn solve(lp: &LinearProgram, tol: &ToleranceSet) -> Result<LpSolution, LpError> {
    let sf = StandardForm::build(lp);
    let (m0, n) = (sf.m_orig, lp.num_cols());
    let limit = 50 * (sf.m + sf.cols.len()) + 1000;
    let mut iterations = 0;
    let mut basis = Basis::new(&sf)?;

    let has_artificials = sf.initial_basis.iter().any(|&h| h >= sf.art_start);
    if has_artificials {
        let phase1: Vec<f64> = (0..sf.cols.len()).map(|j| if j >= sf.art_start { 1.0 } else { 0.0 }).collect();
        let y = match basis.run_phase(&phase1, tol, &mut iterations, limit)? {
            PhaseEnd::Optimal(y) => y,
            PhaseEnd::Unbounded { .. } => unreachable!("phase one objective is bounded below by zero"),
        };
        let infeasibility: f64 =
            basis.heads.iter().zip(&basis.x_b).filter(|(h, _)| **h >= sf.art_start).map(|(_, v)| v.max(0.0)).sum();
        let b_scale = sf.b.iter().fold(1.0f64, |m, v| m.max(v.abs()));
        if infeasibility > tol.feas_tol * b_scale {
            let mut ray: Vec<f64> = (0..m0).map(|i| -y[i] * sf.sign[i]).collect();
            let norm = ray.iter().fold(0.0f64, |m, v| m.max(v.abs()));
            if norm > 0.0 {
                ray.iter_mut().for_each(|v| *v /= norm);
            }
            let objective = if lp.sense == Sense::Max { f64::NEG_INFINITY } else { f64::INFINITY };
            return Ok(LpSolution {
                status: LpStatus::Infeasible,
                primal: vec![0.0; n],
                duals: vec![0.0; m0],
                objective,
                ray: Some(ray),
                iterations,
            });
        }
        basis.expel_artificials(tol)?;
    }

    match basis.run_phase(&sf.cost, tol, &mut iterations, limit)? {
        PhaseEnd::Optimal(y) => {
            let primal = sf.to_original(&basis.standard_primal(), true);
            let flip = if lp.sense == Sense::Max { -1.0 } else { 1.0 };
            let duals = (0..m0).map(|i| flip * sf.sign[i] * y[i]).map(|v| if v == 0.0 { 0.0 } else { v }).collect();
            Ok(LpSolution {
                status: LpStatus::Optimal,
                objective: lp.evaluate(&primal),
                primal,
                duals,
                ray: None,
                iterations,
            })
        }
        PhaseEnd::Unbounded { entering, alpha } => {
            let mut dir = vec![0.0; sf.cols.len()];
            dir[entering] = 1.0;
            for (&h, a) in basis.heads.iter().zip(&alpha) {
                dir[h] = -a;
            }
            let mut ray = sf.to_original(&dir, false);
            let norm = ray.iter().fold(0.0f64, |m, v| m.max(v.abs()));
            if norm > 0.0 {
                ray.iter_mut().for_each(|v| *v /= norm);
            }
            let objective = if lp.sense == Sense::Max { f64::INFINITY } else { f64::NEG_INFINITY };
            Ok(LpSolution {
                status: LpStatus::Unbounded,
                primal: sf.to_original(&basis.standard_primal(), true),
                duals: vec![0.0; m0],
                objective,
                ray: Some(ray),
                iterations,
            })
        }
    }
}
