use super::QuboError;
use crate::benders::CutPool;
use crate::lpcore::{solve_lp, LpStatus, Sense, ToleranceSet};
use crate::model::MixedBinaryProgram;
use serde::{Deserialize, Serialize};

/// What each bit of a compiled master means. Group sizes are bit counts;
/// a group declared with exponent `e` in the fixed-point sums has `e + 1`
/// bits (indices `0..=e`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BitLayout {
    pub n_z: usize,
    pub a_cc: u32,
    pub s_pos: usize,
    pub s_dec: usize,
    pub s_neg: usize,
    /// Bit count of each optimality-cut slack.
    pub e1: Vec<usize>,
    /// Bit count of each feasibility-cut slack.
    pub e2: Vec<usize>,
    pub names: Vec<String>,
}

impl BitLayout {
    pub fn new(n_z: usize, a_cc: u32, e1: Vec<usize>, e2: Vec<usize>) -> Self {
        let g = a_cc as usize + 1;
        Self::with_groups(n_z, a_cc, (g, g, g), e1, e2)
    }

    pub fn with_groups(n_z: usize, a_cc: u32, s: (usize, usize, usize), e1: Vec<usize>, e2: Vec<usize>) -> Self {
        let mut layout = Self { n_z, a_cc, s_pos: s.0, s_dec: s.1, s_neg: s.2, e1, e2, names: vec![] };
        let mut names: Vec<String> = (0..n_z).map(|j| format!("z_{j}")).collect();
        names.extend((0..layout.s_pos).map(|i| format!("s_pos_{i}")));
        names.extend((0..layout.s_dec).map(|i| format!("s_dec_{i}")));
        names.extend((0..layout.s_neg).map(|i| format!("s_neg_{i}")));
        for (t, &w) in layout.e1.iter().enumerate() {
            names.extend((0..w).map(|i| format!("a1_{t}_{i}")));
        }
        for (k, &w) in layout.e2.iter().enumerate() {
            names.extend((0..w).map(|i| format!("a2_{k}_{i}")));
        }
        layout.names = names;
        layout
    }

    pub fn dimension(&self) -> usize {
        self.names.len()
    }

    pub fn s_pos_start(&self) -> usize {
        self.n_z
    }

    pub fn s_dec_start(&self) -> usize {
        self.n_z + self.s_pos
    }

    pub fn s_neg_start(&self) -> usize {
        self.s_dec_start() + self.s_dec
    }

    pub fn a1_start(&self, t: usize) -> usize {
        self.s_neg_start() + self.s_neg + self.e1[..t].iter().sum::<usize>()
    }

    pub fn a2_start(&self, k: usize) -> usize {
        self.a1_start(self.e1.len()) + self.e2[..k].iter().sum::<usize>()
    }

    /// `(bit index, weight)` pairs whose sum is `s`.
    pub fn s_terms(&self) -> Vec<(usize, f64)> {
        let mut out = vec![];
        for i in 0..self.s_pos {
            out.push((self.s_pos_start() + i, 2f64.powi(i as i32)));
        }
        for i in 0..self.s_dec {
            out.push((self.s_dec_start() + i, 2f64.powi(-(i as i32))));
        }
        for i in 0..self.s_neg {
            out.push((self.s_neg_start() + i, -(2f64.powi(i as i32))));
        }
        out
    }

    /// Weight of the smallest decimal bit: the grid spacing of `s`.
    pub fn resolution(&self) -> f64 {
        if self.s_dec == 0 {
            1.0
        } else {
            2f64.powi(-(self.s_dec as i32 - 1))
        }
    }

    /// Largest representable `s`.
    pub fn s_max_representable(&self) -> f64 {
        self.s_terms().iter().filter(|t| t.1 > 0.0).map(|t| t.1).sum()
    }

    /// Smallest representable `s`.
    pub fn s_min_representable(&self) -> f64 {
        self.s_terms().iter().filter(|t| t.1 < 0.0).map(|t| t.1).sum()
    }
}

/// Range `[min, max]` of `cᵀy` over the relaxation with `z ∈ [0, 1]`.
/// An unbounded minimum is reported as `-∞`.
pub fn continuous_range(p: &MixedBinaryProgram, tol: &ToleranceSet) -> Result<(f64, f64), QuboError> {
    let mut lp = p.relaxation();
    let n_z = p.n_z;
    for j in 0..n_z {
        lp.objective[j] = 0.0;
    }
    let hi = solve_lp(&lp, tol)?;
    match hi.status {
        LpStatus::Unbounded => return Err(QuboError::UnboundedContinuousObjective),
        LpStatus::Infeasible => return Err(QuboError::InfeasibleRelaxation),
        LpStatus::Optimal => {}
    }
    lp.sense = Sense::Min;
    let lo = solve_lp(&lp, tol)?;
    let min = if lo.status == LpStatus::Optimal { lo.objective } else { f64::NEG_INFINITY };
    Ok((min, hi.objective))
}

/// Options for [`compute_bit_widths`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WidthOptions {
    /// Fixed `a_cc` instead of the computed one.
    pub a_cc: Option<u32>,
    /// Fixed slack exponents (bit counts are `e + 1`).
    pub e1: Option<u32>,
    pub e2: Option<u32>,
    /// Exponents above this are clamped, with a warning.
    pub ceiling: u32,
}

impl Default for WidthOptions {
    fn default() -> Self {
        Self { a_cc: None, e1: None, e2: None, ceiling: 24 }
    }
}

fn ceil_log2(x: f64) -> u32 {
    if x <= 1.0 {
        0
    } else {
        x.log2().ceil() as u32
    }
}

fn clamp(name: &str, e: u32, ceiling: u32) -> u32 {
    if e > ceiling {
        log::warn!("{name} needs {e} bits; clamped to {ceiling}");
        ceiling
    } else {
        e
    }
}

/// `a_cc = ⌈log₂(1 + max(U, −L))⌉` over the continuous range, at least 1.
/// Covering `−L` too keeps negative `s` representable.
pub fn acc_bits(range: (f64, f64), opts: &WidthOptions) -> u32 {
    if let Some(a) = opts.a_cc {
        return a.max(1);
    }
    let (lo, hi) = range;
    let span = if lo.is_finite() { hi.max(-lo) } else { hi };
    clamp("a_cc", ceil_log2(1.0 + span.max(0.0)).max(1), opts.ceiling)
}

/// Bit layout for the current pool: `a_cc` as given, slack exponents from
/// interval arithmetic over `z ∈ [0, 1]` and the representable `s` range.
pub fn compute_bit_widths(p: &MixedBinaryProgram, pool: &CutPool, a_cc: u32, opts: &WidthOptions) -> BitLayout {
    let mut layout = BitLayout::new(p.n_z, a_cc, vec![], vec![]);
    let s_min = layout.s_min_representable();
    let cut_max = |g: f64, h: &[f64]| g + h.iter().map(|v| (-v).max(0.0)).sum::<f64>();
    let e1 = pool
        .active_optimality()
        .map(|c| {
            let e = opts.e1.unwrap_or_else(|| ceil_log2(cut_max(c.g, &c.h) - s_min));
            clamp("e1_cc", e, opts.ceiling) as usize + 1
        })
        .collect();
    let e2 = pool
        .active_feasibility()
        .map(|c| {
            let e = opts.e2.unwrap_or_else(|| ceil_log2(cut_max(c.g, &c.h)));
            clamp("e2_cc", e, opts.ceiling) as usize + 1
        })
        .collect();
    layout = BitLayout::new(p.n_z, a_cc, e1, e2);
    layout
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn acc_follows_the_log_rule() {
        let o = WidthOptions::default();
        assert_eq!(acc_bits((0.0, 100.0), &o), 7);
        assert_eq!(acc_bits((0.0, 0.0), &o), 1);
        assert_eq!(acc_bits((-300.0, 10.0), &o), 9);
        assert_eq!(acc_bits((0.0, 1e12), &o), 24);
        assert_eq!(acc_bits((0.0, 100.0), &WidthOptions { a_cc: Some(10), ..o }), 10);
    }

    #[test]
    fn range_of_a_box() {
        // 0 ≤ y ≤ 100 − 50z, objective y.
        let mut p = MixedBinaryProgram::new(vec![1.0], vec![1.0]);
        p.add_row(vec![50.0], vec![1.0], 100.0, "cap");
        assert_eq!(continuous_range(&p, &ToleranceSet::default()).unwrap(), (0.0, 100.0));
        let mut q = MixedBinaryProgram::new(vec![1.0], vec![1.0]);
        q.add_row(vec![1.0], vec![-1.0], 0.0, "open");
        assert_eq!(continuous_range(&q, &ToleranceSet::default()), Err(QuboError::UnboundedContinuousObjective));
    }

    #[test]
    fn group_offsets() {
        let l = BitLayout::new(2, 1, vec![3], vec![2, 1]);
        assert_eq!(l.dimension(), 2 + 6 + 3 + 3);
        assert_eq!(l.a1_start(0), 8);
        assert_eq!(l.a2_start(1), 13);
        assert_eq!(l.names[13], "a2_1_0");
        assert_eq!(l.s_max_representable(), 3.0 + 1.5);
        assert_eq!(l.s_min_representable(), -3.0);
        assert_eq!(l.resolution(), 0.5);
    }
}
