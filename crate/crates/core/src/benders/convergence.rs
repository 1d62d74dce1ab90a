use serde::{Deserialize, Serialize};
use std::fmt::Write;

/// One outer iteration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterationRecord {
    pub iter: usize,
    pub lb: f64,
    pub ub: f64,
    pub gap: f64,
    pub opt_cuts: usize,
    pub feas_cuts: usize,
    /// `point` or `ray` per evaluated candidate, joined with `|`.
    pub sp_status: String,
    pub master_backend: String,
    pub master_ms: Option<f64>,
    pub sp_ms: Option<f64>,
    pub best_energy: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceLog {
    pub records: Vec<IterationRecord>,
}

pub const CSV_HEADER: &str = "iter,lb,ub,gap,opt_cuts,feas_cuts,sp_status,master_backend,master_ms,sp_ms,best_energy";

fn opt(v: Option<f64>) -> String {
    v.map(|x| format!("{x:.3}")).unwrap_or_default()
}

impl ConvergenceLog {
    pub fn push(&mut self, r: IterationRecord) {
        self.records.push(r);
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from(CSV_HEADER);
        out.push('\n');
        for r in &self.records {
            let energy = r.best_energy.map(|e| e.to_string()).unwrap_or_default();
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{},{},{},{},{}",
                r.iter,
                r.lb,
                r.ub,
                r.gap,
                r.opt_cuts,
                r.feas_cuts,
                r.sp_status,
                r.master_backend,
                opt(r.master_ms),
                opt(r.sp_ms),
                energy
            );
        }
        out
    }

    /// UB never rises and LB never falls.
    pub fn is_monotone(&self) -> bool {
        self.records.windows(2).all(|w| w[1].ub <= w[0].ub + 1e-9 && w[1].lb >= w[0].lb - 1e-9)
    }
}
