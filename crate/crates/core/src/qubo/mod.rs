//! Master problem → QUBO.
//!
//! Each optimality cut `g − h·z ≥ s` becomes the equality
//! `g − h·z − s − a₁ = 0` with an integer slack `a₁ ≥ 0`, each feasibility
//! cut `g − h·z ≥ 0` becomes `g − h·z − a₂ = 0`, and the squared residuals
//! enter the minimized energy with weights `P₁`, `P₂`. The scalar `s` is a
//! fixed-point number built from positive, decimal and negative bit groups.

mod layout;
pub mod random;

pub use layout::{acc_bits, compute_bit_widths, continuous_range, BitLayout, WidthOptions};

use crate::benders::{hamming, CutPool};
use crate::lpcore::{dot, LpError};
use crate::model::MixedBinaryProgram;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum QuboError {
    #[error("cᵀy is unbounded over the relaxation; add explicit bounds on y")]
    UnboundedContinuousObjective,
    #[error("the continuous relaxation is infeasible")]
    InfeasibleRelaxation,
    #[error("layout has {layout} slack groups but the pool has {pool} {kind} cuts")]
    LayoutMismatch { kind: &'static str, layout: usize, pool: usize },
    #[error("assignment has {got} bits, expected {expected}")]
    WrongLength { got: usize, expected: usize },
    #[error(transparent)]
    Lp(#[from] LpError),
    #[error("malformed QUBO file: {0}")]
    Format(String),
}

/// Affine cut `g − h·z` carried along for decoding.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AffineCut {
    pub g: f64,
    pub h: Vec<f64>,
}

impl AffineCut {
    pub fn at(&self, z: &[f64]) -> f64 {
        self.g - dot(&self.h, z)
    }
}

/// The master problem a QUBO was compiled from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MasterData {
    pub offset: f64,
    pub i: Vec<f64>,
    pub rho: f64,
    pub z_prev: Vec<f64>,
    pub optimality: Vec<AffineCut>,
    pub feasibility: Vec<AffineCut>,
}

impl MasterData {
    /// `offset + iᵀz + s + ρ·H(z, z_prev)`.
    pub fn objective(&self, z: &[f64], s: f64) -> f64 {
        self.offset + dot(&self.i, z) + s + self.rho * hamming(z, &self.z_prev)
    }
}

/// `energy(b) = offset + Σ_{i ≤ j} Q[i,j]·bᵢ·bⱼ`, to be minimized.
#[derive(Debug, Clone, PartialEq)]
pub struct QuboProgram {
    pub dimension: usize,
    pub entries: BTreeMap<(usize, usize), f64>,
    pub offset: f64,
    pub layout: BitLayout,
    pub p1: f64,
    pub p2: f64,
    pub master: MasterData,
}

/// Default penalty `P* = 2·(Σ|iⱼ| + S_max + |ρ|·n_z + 1)`.
pub fn default_penalty(p: &MixedBinaryProgram, s_max: f64, rho: f64) -> f64 {
    2.0 * (p.i.iter().map(|v| v.abs()).sum::<f64>() + s_max + rho.abs() * p.n_z as f64 + 1.0)
}

/// Accumulates `weight · (κ + Σ αⱼ bⱼ)²` and linear terms.
struct Builder {
    entries: BTreeMap<(usize, usize), f64>,
    offset: f64,
}

impl Builder {
    fn add(&mut self, i: usize, j: usize, v: f64) {
        if v != 0.0 {
            let key = if i <= j { (i, j) } else { (j, i) };
            *self.entries.entry(key).or_insert(0.0) += v;
        }
    }

    fn linear(&mut self, terms: &[(usize, f64)], constant: f64, weight: f64) {
        self.offset += weight * constant;
        for &(j, a) in terms {
            self.add(j, j, weight * a);
        }
    }

    fn square(&mut self, terms: &[(usize, f64)], constant: f64, weight: f64) {
        // Merge repeated bits first so bᵢ² = bᵢ folds correctly.
        let mut merged: BTreeMap<usize, f64> = BTreeMap::new();
        for &(j, a) in terms {
            *merged.entry(j).or_insert(0.0) += a;
        }
        let t: Vec<(usize, f64)> = merged.into_iter().filter(|e| e.1 != 0.0).collect();
        self.offset += weight * constant * constant;
        for (x, &(j, a)) in t.iter().enumerate() {
            self.add(j, j, weight * (a * a + 2.0 * constant * a));
            for &(k, b) in &t[x + 1..] {
                self.add(j, k, weight * 2.0 * a * b);
            }
        }
    }
}

/// Compiles the master over the active cuts of `pool` into a QUBO.
/// `penalties` defaults to [`default_penalty`] for both weights, with
/// `S_max = 2^{a_cc+1}`.
pub fn compile_master_to_qubo(
    pool: &CutPool,
    p: &MixedBinaryProgram,
    rho: f64,
    z_prev: &[f64],
    layout: &BitLayout,
    penalties: Option<(f64, f64)>,
) -> Result<QuboProgram, QuboError> {
    let opt: Vec<_> = pool.active_optimality().collect();
    let feas: Vec<_> = pool.active_feasibility().collect();
    if opt.len() != layout.e1.len() {
        return Err(QuboError::LayoutMismatch { kind: "optimality", layout: layout.e1.len(), pool: opt.len() });
    }
    if feas.len() != layout.e2.len() {
        return Err(QuboError::LayoutMismatch { kind: "feasibility", layout: layout.e2.len(), pool: feas.len() });
    }
    let s_max = 2f64.powi(layout.a_cc as i32 + 1);
    let (p1, p2) = penalties.unwrap_or_else(|| {
        let w = default_penalty(p, s_max, rho);
        (w, w)
    });
    let mut b = Builder { entries: BTreeMap::new(), offset: 0.0 };
    let s_terms = layout.s_terms();

    // −(offset + iᵀz + s + ρ Σ zⱼ(1 − 2z'ⱼ) + z'ⱼ)
    let mut obj: Vec<(usize, f64)> = (0..p.n_z).map(|j| (j, p.i[j] + rho * (1.0 - 2.0 * z_prev[j]))).collect();
    obj.extend(&s_terms);
    b.linear(&obj, p.offset + rho * z_prev.iter().sum::<f64>(), -1.0);

    for (t, cut) in opt.iter().enumerate() {
        let mut terms: Vec<(usize, f64)> = (0..p.n_z).map(|j| (j, -cut.h[j])).collect();
        terms.extend(s_terms.iter().map(|&(k, w)| (k, -w)));
        let start = layout.a1_start(t);
        terms.extend((0..layout.e1[t]).map(|i| (start + i, -(2f64.powi(i as i32)))));
        b.square(&terms, cut.g, p1);
    }
    for (k, cut) in feas.iter().enumerate() {
        let mut terms: Vec<(usize, f64)> = (0..p.n_z).map(|j| (j, -cut.h[j])).collect();
        let start = layout.a2_start(k);
        terms.extend((0..layout.e2[k]).map(|i| (start + i, -(2f64.powi(i as i32)))));
        b.square(&terms, cut.g, p2);
    }
    b.entries.retain(|_, v| *v != 0.0);
    let affine = |c: &&crate::benders::Cut| AffineCut { g: c.g, h: c.h.clone() };
    Ok(QuboProgram {
        dimension: layout.dimension(),
        entries: b.entries,
        offset: b.offset,
        layout: layout.clone(),
        p1,
        p2,
        master: MasterData {
            offset: p.offset,
            i: p.i.clone(),
            rho,
            z_prev: z_prev.to_vec(),
            optimality: opt.iter().map(affine).collect(),
            feasibility: feas.iter().map(affine).collect(),
        },
    })
}

/// A bit assignment read back as master variables.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Decoded {
    pub z: Vec<f64>,
    pub s: f64,
    pub a1: Vec<f64>,
    pub a2: Vec<f64>,
    /// `g − h·z − s − a₁` per optimality cut.
    pub opt_residuals: Vec<f64>,
    /// `g − h·z − a₂` per feasibility cut.
    pub feas_residuals: Vec<f64>,
    /// Every cut inequality holds at `(z, s)` within half a grid step.
    pub feasible: bool,
}

impl QuboProgram {
    /// A bare QUBO over `dimension` bits, all treated as `z`, with no cuts.
    pub fn raw(dimension: usize, entries: BTreeMap<(usize, usize), f64>, offset: f64) -> Self {
        Self {
            dimension,
            entries,
            offset,
            layout: BitLayout::with_groups(dimension, 0, (0, 0, 0), vec![], vec![]),
            p1: 0.0,
            p2: 0.0,
            master: MasterData {
                offset: 0.0,
                i: vec![0.0; dimension],
                rho: 0.0,
                z_prev: vec![0.0; dimension],
                optimality: vec![],
                feasibility: vec![],
            },
        }
    }

    /// Energy in ascending `(i, j)` key order.
    pub fn energy(&self, bits: &[u8]) -> f64 {
        let mut e = self.offset;
        for (&(i, j), &q) in &self.entries {
            if bits[i] != 0 && bits[j] != 0 {
                e += q;
            }
        }
        e
    }

    pub fn max_abs_coefficient(&self) -> f64 {
        self.entries.values().fold(0.0f64, |m, v| m.max(v.abs()))
    }

    pub fn decode(&self, bits: &[u8]) -> Result<Decoded, QuboError> {
        decode(bits, self)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&QuboFile::from(self)).expect("QUBO serializes")
    }

    pub fn from_json(text: &str) -> Result<Self, QuboError> {
        let f: QuboFile = serde_json::from_str(text).map_err(|e| QuboError::Format(e.to_string()))?;
        f.try_into()
    }
}

fn group_value(bits: &[u8], start: usize, len: usize) -> f64 {
    (0..len).map(|i| bits[start + i] as f64 * 2f64.powi(i as i32)).sum()
}

/// Reads `z`, `s` and slacks off an assignment and evaluates every cut.
pub fn decode(bits: &[u8], q: &QuboProgram) -> Result<Decoded, QuboError> {
    let l = &q.layout;
    if bits.len() != l.dimension() {
        return Err(QuboError::WrongLength { got: bits.len(), expected: l.dimension() });
    }
    let z: Vec<f64> = bits[..l.n_z].iter().map(|&b| b as f64).collect();
    let s: f64 = l.s_terms().iter().map(|&(k, w)| bits[k] as f64 * w).sum();
    let a1: Vec<f64> = (0..l.e1.len()).map(|t| group_value(bits, l.a1_start(t), l.e1[t])).collect();
    let a2: Vec<f64> = (0..l.e2.len()).map(|k| group_value(bits, l.a2_start(k), l.e2[k])).collect();
    let half = 0.5 * l.resolution();
    let opt_vals: Vec<f64> = q.master.optimality.iter().map(|c| c.at(&z)).collect();
    let feas_vals: Vec<f64> = q.master.feasibility.iter().map(|c| c.at(&z)).collect();
    let feasible = opt_vals.iter().all(|v| v - s >= -half) && feas_vals.iter().all(|v| *v >= -half);
    Ok(Decoded {
        opt_residuals: opt_vals.iter().zip(&a1).map(|(v, a)| v - s - a).collect(),
        feas_residuals: feas_vals.iter().zip(&a2).map(|(v, a)| v - a).collect(),
        z,
        s,
        a1,
        a2,
        feasible,
    })
}

/// Bits of the `s` groups representing `v` exactly, if it is on the grid.
pub fn encode_s(v: f64, layout: &BitLayout) -> Option<Vec<u8>> {
    let step = layout.resolution();
    let whole = v.floor();
    let frac = v - whole;
    let units = (frac / step).round();
    if (units * step - frac).abs() > 1e-12 {
        return None;
    }
    let mut out = vec![0u8; layout.s_pos + layout.s_dec + layout.s_neg];
    // Fraction in decimal bits 1.., integer part in pos or neg bits.
    let frac_bits = layout.s_dec.saturating_sub(1);
    let mut u = units as u64;
    for i in (1..=frac_bits).rev() {
        out[layout.s_pos + i] = (u & 1) as u8;
        u >>= 1;
    }
    if u != 0 {
        return None;
    }
    let (mag, base, len) = if whole >= 0.0 {
        let mut w = whole as u64;
        // The weight-1 decimal bit extends the positive range by one.
        if layout.s_dec > 0 && layout.s_pos < 64 && w >> layout.s_pos != 0 {
            out[layout.s_pos] = 1;
            w -= 1;
        }
        (w, 0, layout.s_pos)
    } else {
        (-whole as u64, layout.s_pos + layout.s_dec, layout.s_neg)
    };
    if len < 64 && mag >> len != 0 {
        return None;
    }
    for i in 0..len {
        out[base + i] = ((mag >> i) & 1) as u8;
    }
    Some(out)
}

/// Bits of an integer slack group, if it fits.
pub fn encode_slack(v: f64, width: usize) -> Option<Vec<u8>> {
    if v < 0.0 || v.fract() != 0.0 || (width < 64 && (v as u64) >> width != 0) {
        return None;
    }
    let m = v as u64;
    Some((0..width).map(|i| ((m >> i) & 1) as u8).collect())
}

/// Full assignment for `(z, s)` with every slack set to absorb its cut
/// residual (rounded down to an integer). `None` if `s` is off-grid or a
/// slack does not fit.
pub fn encode(q: &QuboProgram, z: &[f64], s: f64) -> Option<Vec<u8>> {
    let l = &q.layout;
    let mut bits: Vec<u8> = z.iter().map(|&v| v as u8).collect();
    bits.extend(encode_s(s, l)?);
    for (t, c) in q.master.optimality.iter().enumerate() {
        bits.extend(encode_slack((c.at(z) - s).max(0.0).floor(), l.e1[t])?);
    }
    for (k, c) in q.master.feasibility.iter().enumerate() {
        bits.extend(encode_slack(c.at(z).max(0.0).floor(), l.e2[k])?);
    }
    Some(bits)
}

/// On-disk form: `{dimension, offset, entries: [[i, j, coeff]...], layout, P1, P2, master}`.
#[derive(Debug, Serialize, Deserialize)]
struct QuboFile {
    dimension: usize,
    offset: f64,
    entries: Vec<(usize, usize, f64)>,
    layout: BitLayout,
    #[serde(rename = "P1")]
    p1: f64,
    #[serde(rename = "P2")]
    p2: f64,
    master: MasterData,
}

impl From<&QuboProgram> for QuboFile {
    fn from(q: &QuboProgram) -> Self {
        Self {
            dimension: q.dimension,
            offset: q.offset,
            entries: q.entries.iter().map(|(&(i, j), &v)| (i, j, v)).collect(),
            layout: q.layout.clone(),
            p1: q.p1,
            p2: q.p2,
            master: q.master.clone(),
        }
    }
}

impl TryFrom<QuboFile> for QuboProgram {
    type Error = QuboError;

    fn try_from(f: QuboFile) -> Result<Self, QuboError> {
        let mut entries = BTreeMap::new();
        for (i, j, v) in f.entries {
            if i > j || j >= f.dimension {
                return Err(QuboError::Format(format!("bad key ({i}, {j})")));
            }
            if v != 0.0 && entries.insert((i, j), v).is_some() {
                return Err(QuboError::Format(format!("duplicate key ({i}, {j})")));
            }
        }
        if f.layout.dimension() != f.dimension {
            return Err(QuboError::Format("layout does not match dimension".into()));
        }
        Ok(Self { dimension: f.dimension, entries, offset: f.offset, layout: f.layout, p1: f.p1, p2: f.p2, master: f.master })
    }
}
