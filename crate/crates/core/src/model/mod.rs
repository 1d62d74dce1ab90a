//! Mixed binary programs in the decomposable form
//!
//! ```text
//! max  offset + iᵀz + cᵀy
//! s.t. A z + B y ≤ b,   z ∈ {0,1}^{n_z},   y ≥ 0
//! ```
//!
//! plus the compiler that brings general models into this shape and the
//! exhaustive oracles used to check everything else.

mod bnb;
mod compile;
mod oracle;
pub mod random;

pub use bnb::branch_and_bound;
pub use compile::{compile, ColumnMap, ModelSource, Recovery, SourceRow, SourceVar, VarKind};
pub use oracle::{
    brute_force_milp, brute_force_source, certified_enumeration, EnumerationStats, MilpOutcome, DEFAULT_BRUTE_FORCE_LIMIT,
};

use crate::lpcore::{dot, LinearProgram, LpError, Relation, Sense};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModelError {
    #[error("row {row} ({tag}) has a product term; linearize it before compiling")]
    NonlinearTerm { row: usize, tag: String },
    #[error("free variable `{0}` appears in no constraint row")]
    UnboundedFreeVariable(String),
    #[error("binary `{0}` appears in neither the objective nor any row")]
    UnusedBinary(String),
    #[error("{n_z} binaries exceed the enumeration limit of {limit}")]
    TooManyBinaries { n_z: usize, limit: usize },
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("invalid bounds on `{name}`: [{lower}, {upper}]")]
    InvalidBounds { name: String, lower: f64, upper: f64 },
    #[error("non-finite value in {0}")]
    NonFinite(String),
    #[error(transparent)]
    Lp(#[from] LpError),
}

/// A program in decomposable form. All rows are `≤`; the sense is max.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MixedBinaryProgram {
    pub n_z: usize,
    pub n_y: usize,
    pub i: Vec<f64>,
    pub c: Vec<f64>,
    #[serde(rename = "A")]
    pub a: Vec<Vec<f64>>,
    #[serde(rename = "B")]
    pub b_mat: Vec<Vec<f64>>,
    pub b: Vec<f64>,
    /// Names of `z` followed by names of `y`.
    #[serde(default)]
    pub names: Vec<String>,
    /// Constant added to the objective (variable shifts produce one).
    #[serde(default)]
    pub offset: f64,
    /// Per-row origin labels, for diagnostics.
    #[serde(default)]
    pub row_tags: Vec<String>,
}

impl MixedBinaryProgram {
    /// An empty program with no rows.
    pub fn new(i: Vec<f64>, c: Vec<f64>) -> Self {
        let (n_z, n_y) = (i.len(), c.len());
        let names = (0..n_z).map(|j| format!("z{j}")).chain((0..n_y).map(|j| format!("y{j}"))).collect();
        Self { n_z, n_y, i, c, a: vec![], b_mat: vec![], b: vec![], names, offset: 0.0, row_tags: vec![] }
    }

    pub fn add_row(&mut self, a: Vec<f64>, b_row: Vec<f64>, rhs: f64, tag: impl Into<String>) -> &mut Self {
        self.a.push(a);
        self.b_mat.push(b_row);
        self.b.push(rhs);
        self.row_tags.push(tag.into());
        self
    }

    pub fn num_rows(&self) -> usize {
        self.b.len()
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        let m = self.b.len();
        if self.i.len() != self.n_z || self.c.len() != self.n_y {
            return Err(ModelError::DimensionMismatch(format!(
                "n_z = {}, n_y = {} but |i| = {}, |c| = {}",
                self.n_z,
                self.n_y,
                self.i.len(),
                self.c.len()
            )));
        }
        if self.a.len() != m || self.b_mat.len() != m {
            return Err(ModelError::DimensionMismatch(format!(
                "|b| = {m} but A has {} rows and B has {}",
                self.a.len(),
                self.b_mat.len()
            )));
        }
        if !self.row_tags.is_empty() && self.row_tags.len() != m {
            return Err(ModelError::DimensionMismatch(format!("{} row tags for {m} rows", self.row_tags.len())));
        }
        if !self.names.is_empty() && self.names.len() != self.n_z + self.n_y {
            return Err(ModelError::DimensionMismatch(format!(
                "{} names for {} variables",
                self.names.len(),
                self.n_z + self.n_y
            )));
        }
        for r in 0..m {
            if self.a[r].len() != self.n_z || self.b_mat[r].len() != self.n_y {
                return Err(ModelError::DimensionMismatch(format!("row {r} has the wrong width")));
            }
        }
        let finite = |v: &[f64]| v.iter().all(|x| x.is_finite());
        if !finite(&self.i) || !finite(&self.c) || !finite(&self.b) || !self.offset.is_finite() {
            return Err(ModelError::NonFinite("objective or rhs".into()));
        }
        if !self.a.iter().all(|r| finite(r)) || !self.b_mat.iter().all(|r| finite(r)) {
            return Err(ModelError::NonFinite("constraint matrix".into()));
        }
        for j in 0..self.n_z {
            if self.i[j] == 0.0 && self.a.iter().all(|r| r[j] == 0.0) {
                return Err(ModelError::UnusedBinary(self.z_name(j)));
            }
        }
        Ok(())
    }

    pub fn z_name(&self, j: usize) -> String {
        self.names.get(j).cloned().unwrap_or_else(|| format!("z{j}"))
    }

    pub fn row_tag(&self, r: usize) -> &str {
        self.row_tags.get(r).map(String::as_str).unwrap_or("")
    }

    /// `b − A z` (z may be fractional).
    pub fn residual_rhs(&self, z: &[f64]) -> Vec<f64> {
        self.a.iter().zip(&self.b).map(|(row, b)| b - dot(row, z)).collect()
    }

    /// Rows whose continuous block is empty: pure constraints on `z`.
    pub fn z_only_rows(&self) -> Vec<usize> {
        (0..self.num_rows()).filter(|&r| self.b_mat[r].iter().all(|v| *v == 0.0)).collect()
    }

    /// `max cᵀy  s.t.  B y ≤ b − A z,  y ≥ 0`.
    pub fn primal_subproblem(&self, z: &[f64]) -> LinearProgram {
        let mut lp = LinearProgram::new(Sense::Max, self.c.clone());
        for (row, rhs) in self.b_mat.iter().zip(self.residual_rhs(z)) {
            lp.add_row(row.clone(), Relation::Le, rhs);
        }
        lp
    }

    /// `min (b − A z)ᵀλ  s.t.  Bᵀλ ≥ c,  λ ≥ 0`.
    pub fn dual_subproblem(&self, z: &[f64]) -> LinearProgram {
        let mut lp = LinearProgram::new(Sense::Min, self.residual_rhs(z));
        for j in 0..self.n_y {
            lp.add_row(self.b_mat.iter().map(|row| row[j]).collect(), Relation::Ge, self.c[j]);
        }
        lp
    }

    /// `offset + iᵀz + cᵀy`.
    pub fn objective(&self, z: &[f64], y: &[f64]) -> f64 {
        self.offset + dot(&self.i, z) + dot(&self.c, y)
    }

    /// Largest row or sign violation at `(z, y)`.
    pub fn max_violation(&self, z: &[f64], y: &[f64]) -> f64 {
        let mut worst = y.iter().fold(0.0f64, |m, v| m.max(-v));
        for r in 0..self.num_rows() {
            worst = worst.max(dot(&self.a[r], z) + dot(&self.b_mat[r], y) - self.b[r]);
        }
        worst
    }

    /// The whole program as one LP with `z` relaxed to `[0, 1]`; columns are
    /// `z` then `y`.
    pub fn relaxation(&self) -> LinearProgram {
        let obj = self.i.iter().chain(&self.c).copied().collect();
        let mut lp = LinearProgram::new(Sense::Max, obj);
        for r in 0..self.num_rows() {
            lp.add_row(self.a[r].iter().chain(&self.b_mat[r]).copied().collect(), Relation::Le, self.b[r]);
        }
        for j in 0..self.n_z {
            lp.set_bounds(j, 0.0, 1.0);
        }
        lp
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("program serializes")
    }

    pub fn from_json(text: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(text)
    }
}

/// Binary vector of `mask` with `z_j = bit j`.
pub fn z_from_mask(mask: u64, n_z: usize) -> Vec<f64> {
    (0..n_z).map(|j| ((mask >> j) & 1) as f64).collect()
}

/// Lexicographic comparison of binary vectors with `z_0` most significant.
pub fn lex_cmp(a: &[f64], b: &[f64]) -> std::cmp::Ordering {
    for (x, y) in a.iter().zip(b) {
        match x.partial_cmp(y) {
            Some(std::cmp::Ordering::Equal) | None => continue,
            Some(o) => return o,
        }
    }
    std::cmp::Ordering::Equal
}
