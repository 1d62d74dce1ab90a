use super::{MixedBinaryProgram, ModelError};
use crate::lpcore::{Relation, Sense};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum VarKind {
    Binary,
    Continuous { lower: f64, upper: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SourceVar {
    pub name: String,
    pub kind: VarKind,
}

/// `Σ coeff·x (rel) rhs`, optionally with bilinear terms the compiler refuses.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SourceRow {
    pub terms: Vec<(usize, f64)>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub products: Vec<(usize, usize, f64)>,
    pub relation: Relation,
    pub rhs: f64,
    pub tag: String,
}

/// A linear model in user form: any relation, any bounds, any sense.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelSource {
    pub sense: Sense,
    pub vars: Vec<SourceVar>,
    /// One coefficient per variable.
    pub objective: Vec<f64>,
    #[serde(default)]
    pub objective_constant: f64,
    pub rows: Vec<SourceRow>,
}

impl ModelSource {
    pub fn new(sense: Sense) -> Self {
        Self { sense, vars: vec![], objective: vec![], objective_constant: 0.0, rows: vec![] }
    }

    pub fn add_binary(&mut self, name: impl Into<String>) -> usize {
        self.push_var(name.into(), VarKind::Binary)
    }

    pub fn add_continuous(&mut self, name: impl Into<String>, lower: f64, upper: f64) -> usize {
        self.push_var(name.into(), VarKind::Continuous { lower, upper })
    }

    fn push_var(&mut self, name: String, kind: VarKind) -> usize {
        self.vars.push(SourceVar { name, kind });
        self.objective.push(0.0);
        self.vars.len() - 1
    }

    pub fn set_objective(&mut self, var: usize, coeff: f64) {
        self.objective[var] = coeff;
    }

    pub fn add_row(&mut self, tag: impl Into<String>, terms: Vec<(usize, f64)>, relation: Relation, rhs: f64) {
        self.rows.push(SourceRow { terms, products: vec![], relation, rhs, tag: tag.into() });
    }

    pub fn binaries(&self) -> Vec<usize> {
        (0..self.vars.len()).filter(|&v| self.vars[v].kind == VarKind::Binary).collect()
    }

    /// Value of the source objective at a point in source coordinates.
    pub fn evaluate(&self, x: &[f64]) -> f64 {
        self.objective_constant + self.objective.iter().zip(x).map(|(c, v)| c * v).sum::<f64>()
    }

    /// Largest row or bound violation at `x`, ignoring integrality.
    pub fn max_violation(&self, x: &[f64]) -> f64 {
        let mut worst = 0.0f64;
        for row in &self.rows {
            let lhs: f64 = row.terms.iter().map(|&(v, a)| a * x[v]).sum();
            worst = worst.max(match row.relation {
                Relation::Le => lhs - row.rhs,
                Relation::Ge => row.rhs - lhs,
                Relation::Eq => (lhs - row.rhs).abs(),
            });
        }
        for (var, xv) in self.vars.iter().zip(x) {
            let (lo, hi) = match var.kind {
                VarKind::Binary => (0.0, 1.0),
                VarKind::Continuous { lower, upper } => (lower, upper),
            };
            worst = worst.max(lo - xv).max(xv - hi);
        }
        worst
    }

    /// Wraps an already normalized program, so `compile` reproduces it.
    pub fn from_program(p: &MixedBinaryProgram) -> Self {
        let mut src = Self::new(Sense::Max);
        src.objective_constant = p.offset;
        for j in 0..p.n_z {
            let v = src.add_binary(p.z_name(j));
            src.set_objective(v, p.i[j]);
        }
        for j in 0..p.n_y {
            let name = p.names.get(p.n_z + j).cloned().unwrap_or_else(|| format!("y{j}"));
            let v = src.add_continuous(name, 0.0, f64::INFINITY);
            src.set_objective(v, p.c[j]);
        }
        for r in 0..p.num_rows() {
            let terms = p.a[r]
                .iter()
                .enumerate()
                .map(|(j, &v)| (j, v))
                .chain(p.b_mat[r].iter().enumerate().map(|(j, &v)| (p.n_z + j, v)))
                .filter(|&(_, v)| v != 0.0)
                .collect();
            src.add_row(p.row_tag(r).to_string(), terms, Relation::Le, p.b[r]);
        }
        src
    }
}

/// How one source variable is expressed in the compiled program.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "map", rename_all = "lowercase")]
pub enum ColumnMap {
    /// `x = z[col]`.
    Binary { col: usize },
    /// `x = lower + y[col]`.
    Shift { col: usize, lower: f64 },
    /// `x = upper − y[col]`.
    Reflect { col: usize, upper: f64 },
    /// `x = y[pos] − y[neg]`.
    Split { pos: usize, neg: usize },
}

/// Maps compiled solutions back to source variables.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Recovery {
    pub columns: Vec<ColumnMap>,
    /// The source was a min problem; compiled objective = −source objective.
    pub negated: bool,
}

impl Recovery {
    pub fn recover(&self, z: &[f64], y: &[f64]) -> Vec<f64> {
        self.columns
            .iter()
            .map(|m| match *m {
                ColumnMap::Binary { col } => z[col],
                ColumnMap::Shift { col, lower } => lower + y[col],
                ColumnMap::Reflect { col, upper } => upper - y[col],
                ColumnMap::Split { pos, neg } => y[pos] - y[neg],
            })
            .collect()
    }

    /// Inverse of [`Recovery::recover`] on the continuous block.
    pub fn project(&self, x: &[f64], n_z: usize, n_y: usize) -> (Vec<f64>, Vec<f64>) {
        let (mut z, mut y) = (vec![0.0; n_z], vec![0.0; n_y]);
        for (m, &xv) in self.columns.iter().zip(x) {
            match *m {
                ColumnMap::Binary { col } => z[col] = xv,
                ColumnMap::Shift { col, lower } => y[col] = xv - lower,
                ColumnMap::Reflect { col, upper } => y[col] = upper - xv,
                ColumnMap::Split { pos, neg } => {
                    y[pos] = xv.max(0.0);
                    y[neg] = (-xv).max(0.0);
                }
            }
        }
        (z, y)
    }

    pub fn source_objective(&self, compiled_objective: f64) -> f64 {
        if self.negated {
            -compiled_objective
        } else {
            compiled_objective
        }
    }
}

/// Normalizes a source model: `≥` rows negated, equalities split into `≤`
/// pairs, finite lower bounds shifted to zero, upper-only variables
/// reflected, free variables split, finite upper bounds turned into rows,
/// min objectives negated.
pub fn compile(src: &ModelSource) -> Result<(MixedBinaryProgram, Recovery), ModelError> {
    let nv = src.vars.len();
    if src.objective.len() != nv {
        return Err(ModelError::DimensionMismatch(format!("{} objective coefficients for {nv} variables", src.objective.len())));
    }
    if !src.objective.iter().all(|v| v.is_finite()) || !src.objective_constant.is_finite() {
        return Err(ModelError::NonFinite("objective".into()));
    }
    for (r, row) in src.rows.iter().enumerate() {
        if !row.products.is_empty() {
            return Err(ModelError::NonlinearTerm { row: r, tag: row.tag.clone() });
        }
        if !row.rhs.is_finite() || row.terms.iter().any(|(_, a)| !a.is_finite()) {
            return Err(ModelError::NonFinite(format!("row {r} ({})", row.tag)));
        }
        if let Some(&(v, _)) = row.terms.iter().find(|(v, _)| *v >= nv) {
            return Err(ModelError::DimensionMismatch(format!("row {r} ({}) references variable {v}", row.tag)));
        }
    }

    let mut columns = Vec::with_capacity(nv);
    let (mut n_z, mut n_y) = (0, 0);
    let mut z_names = vec![];
    let mut y_names = vec![];
    let mut upper_rows = vec![];
    for (v, var) in src.vars.iter().enumerate() {
        match var.kind {
            VarKind::Binary => {
                columns.push(ColumnMap::Binary { col: n_z });
                z_names.push(var.name.clone());
                n_z += 1;
            }
            VarKind::Continuous { lower, upper } => {
                if lower.is_nan() || upper.is_nan() || lower > upper || lower == f64::INFINITY || upper == f64::NEG_INFINITY {
                    return Err(ModelError::InvalidBounds { name: var.name.clone(), lower, upper });
                }
                if lower.is_finite() {
                    columns.push(ColumnMap::Shift { col: n_y, lower });
                    if upper.is_finite() {
                        upper_rows.push((n_y, upper - lower, format!("bound:{}", var.name)));
                    }
                    y_names.push(var.name.clone());
                    n_y += 1;
                } else if upper.is_finite() {
                    columns.push(ColumnMap::Reflect { col: n_y, upper });
                    y_names.push(var.name.clone());
                    n_y += 1;
                } else {
                    if !src.rows.iter().any(|row| row.terms.iter().any(|&(u, a)| u == v && a != 0.0)) {
                        return Err(ModelError::UnboundedFreeVariable(var.name.clone()));
                    }
                    columns.push(ColumnMap::Split { pos: n_y, neg: n_y + 1 });
                    y_names.push(format!("{}+", var.name));
                    y_names.push(format!("{}-", var.name));
                    n_y += 2;
                }
            }
        }
    }

    // Expands a linear form over source variables: (z coeffs, y coeffs, constant).
    let expand = |terms: &mut dyn Iterator<Item = (usize, f64)>| {
        let (mut a, mut b, mut k) = (vec![0.0; n_z], vec![0.0; n_y], 0.0);
        for (v, coeff) in terms {
            match columns[v] {
                ColumnMap::Binary { col } => a[col] += coeff,
                ColumnMap::Shift { col, lower } => {
                    b[col] += coeff;
                    k += coeff * lower;
                }
                ColumnMap::Reflect { col, upper } => {
                    b[col] -= coeff;
                    k += coeff * upper;
                }
                ColumnMap::Split { pos, neg } => {
                    b[pos] += coeff;
                    b[neg] -= coeff;
                }
            }
        }
        (a, b, k)
    };

    let negated = src.sense == Sense::Min;
    let sign = if negated { -1.0 } else { 1.0 };
    let (oi, oc, ok) = expand(&mut src.objective.iter().copied().enumerate());
    let mut p = MixedBinaryProgram::new(oi.iter().map(|v| sign * v).collect(), oc.iter().map(|v| sign * v).collect());
    p.offset = sign * (src.objective_constant + ok);
    p.names = z_names.into_iter().chain(y_names).collect();

    for row in &src.rows {
        let (a, b, k) = expand(&mut row.terms.iter().copied());
        let rhs = row.rhs - k;
        let negate = |v: &[f64]| v.iter().map(|x| -x).collect::<Vec<_>>();
        match row.relation {
            Relation::Le => {
                p.add_row(a, b, rhs, row.tag.clone());
            }
            Relation::Ge => {
                p.add_row(negate(&a), negate(&b), -rhs, row.tag.clone());
            }
            Relation::Eq => {
                let (na, nb) = (negate(&a), negate(&b));
                p.add_row(a, b, rhs, format!("{}(=)", row.tag));
                p.add_row(na, nb, -rhs, format!("{}(=)", row.tag));
            }
        }
    }
    for (col, width, tag) in upper_rows {
        let mut b = vec![0.0; n_y];
        b[col] = 1.0;
        p.add_row(vec![0.0; n_z], b, width, tag);
    }
    // Clean up negative zeros so output is canonical.
    for v in p.i.iter_mut().chain(p.c.iter_mut()).chain(p.b.iter_mut()) {
        *v += 0.0;
    }
    for row in p.a.iter_mut().chain(p.b_mat.iter_mut()) {
        row.iter_mut().for_each(|v| *v += 0.0);
    }
    p.offset += 0.0;
    p.validate()?;
    Ok((p, Recovery { columns, negated }))
}
