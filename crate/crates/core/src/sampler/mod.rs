//! QUBO samplers: multi-read simulated annealing and exhaustive enumeration.

use crate::model::lex_cmp;
use crate::qubo::QuboProgram;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SamplerError {
    #[error("{dimension} bits exceed the exhaustive limit of {limit}")]
    TooLarge { dimension: usize, limit: usize },
    #[error("invalid schedule: {0}")]
    InvalidSchedule(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sample {
    pub bits: Vec<u8>,
    pub energy: f64,
    pub read: usize,
    pub seed: u64,
}

/// Samples sorted by energy, ties by lexicographic assignment.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SampleSet {
    pub samples: Vec<Sample>,
}

fn bits_cmp(a: &[u8], b: &[u8]) -> std::cmp::Ordering {
    a.cmp(b)
}

impl SampleSet {
    fn from_unsorted(mut samples: Vec<Sample>) -> Self {
        samples.sort_by(|a, b| {
            a.energy.partial_cmp(&b.energy).unwrap_or(std::cmp::Ordering::Equal).then(bits_cmp(&a.bits, &b.bits))
        });
        Self { samples }
    }

    pub fn best(&self) -> Option<&Sample> {
        self.samples.first()
    }

    /// First occurrence of each distinct assignment, in ranked order.
    pub fn distinct(&self) -> Vec<&Sample> {
        let mut out: Vec<&Sample> = vec![];
        for s in &self.samples {
            if !out.iter().any(|o| o.bits == s.bits) {
                out.push(s);
            }
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AnnealSchedule {
    pub reads: usize,
    pub sweeps: usize,
    /// Inverse temperatures in units of `1 / max|Q|`.
    pub beta_start: f64,
    pub beta_end: f64,
    pub seed: u64,
}

impl Default for AnnealSchedule {
    fn default() -> Self {
        Self { reads: 64, sweeps: 2000, beta_start: 0.1, beta_end: 10.0, seed: 0 }
    }
}

impl AnnealSchedule {
    pub fn validate(&self) -> Result<(), SamplerError> {
        if self.reads == 0 || self.sweeps == 0 {
            return Err(SamplerError::InvalidSchedule("reads and sweeps must be at least 1".into()));
        }
        if !(self.beta_start > 0.0 && self.beta_end > self.beta_start) {
            return Err(SamplerError::InvalidSchedule("need 0 < beta_start < beta_end".into()));
        }
        Ok(())
    }
}

/// SplitMix64 of `seed` and a stream counter: independent, reproducible
/// sub-seeds.
pub fn derive_seed(seed: u64, counter: u64) -> u64 {
    let mut z = seed.wrapping_add(counter.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Diagonal and symmetric neighbor lists of a QUBO.
struct Graph {
    diag: Vec<f64>,
    nbrs: Vec<Vec<(usize, f64)>>,
}

impl Graph {
    fn new(q: &QuboProgram) -> Self {
        let n = q.dimension;
        let mut diag = vec![0.0; n];
        let mut nbrs = vec![vec![]; n];
        for (&(i, j), &v) in &q.entries {
            if i == j {
                diag[i] += v;
            } else {
                nbrs[i].push((j, v));
                nbrs[j].push((i, v));
            }
        }
        Self { diag, nbrs }
    }

    /// `field[i] = Q_ii + Σ_j Q_ij b_j`: the energy change of setting bit i.
    fn fields(&self, bits: &[u8]) -> Vec<f64> {
        (0..bits.len())
            .map(|i| self.diag[i] + self.nbrs[i].iter().filter(|(j, _)| bits[*j] != 0).map(|(_, v)| v).sum::<f64>())
            .collect()
    }

    fn flip(&self, bits: &mut [u8], field: &mut [f64], i: usize) {
        let sign = if bits[i] == 0 { 1.0 } else { -1.0 };
        bits[i] ^= 1;
        for &(j, v) in &self.nbrs[i] {
            field[j] += sign * v;
        }
    }
}

fn anneal_one(g: &Graph, n: usize, sched: &AnnealSchedule, scale: f64, seed: u64) -> Vec<u8> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut bits: Vec<u8> = (0..n).map(|_| rng.gen_range(0..=1u8)).collect();
    let mut field = g.fields(&bits);
    let (b0, b1) = (sched.beta_start / scale, sched.beta_end / scale);
    let ratio = if sched.sweeps > 1 { (b1 / b0).powf(1.0 / (sched.sweeps - 1) as f64) } else { 1.0 };
    let mut beta = if sched.sweeps > 1 { b0 } else { b1 };
    for _ in 0..sched.sweeps {
        for i in 0..n {
            let delta = if bits[i] == 0 { field[i] } else { -field[i] };
            if delta <= 0.0 || rng.gen::<f64>() < (-beta * delta).exp() {
                g.flip(&mut bits, &mut field, i);
            }
        }
        beta *= ratio;
    }
    bits
}

/// Independent single-flip Metropolis chains under a geometric inverse
/// temperature schedule. Deterministic for a given schedule seed.
pub fn sample_sa(q: &QuboProgram, sched: &AnnealSchedule) -> Result<SampleSet, SamplerError> {
    sched.validate()?;
    let n = q.dimension;
    let g = Graph::new(q);
    let scale = match q.max_abs_coefficient() {
        m if m > 0.0 => m,
        _ => 1.0,
    };
    let samples = (0..sched.reads)
        .into_par_iter()
        .map(|read| {
            let seed = derive_seed(sched.seed, read as u64);
            let bits = anneal_one(&g, n, sched, scale, seed);
            Sample { energy: q.energy(&bits), bits, read, seed }
        })
        .collect();
    Ok(SampleSet::from_unsorted(samples))
}

pub const DEFAULT_EXACT_LIMIT: usize = 24;
pub const DEFAULT_EXACT_KEEP: usize = 16;

/// Full `2^N` scan in Gray-code order; returns the `keep` lowest-energy
/// assignments with exactly recomputed energies.
pub fn sample_exact(q: &QuboProgram, limit: usize, keep: usize) -> Result<SampleSet, SamplerError> {
    let n = q.dimension;
    if n > limit || n >= 63 {
        return Err(SamplerError::TooLarge { dimension: n, limit });
    }
    let keep = keep.max(1);
    let g = Graph::new(q);
    let mut bits = vec![0u8; n];
    let mut field = g.fields(&bits);
    let mut e = q.energy(&bits);
    // Candidates within a small band of the cutoff survive, so rounding in
    // the running energy cannot drop an exact tie.
    let band = 1e-9 * (1.0 + q.max_abs_coefficient() * n as f64);
    let mut pool: Vec<(f64, u64)> = vec![(e, 0)];
    let mut cutoff = f64::INFINITY;
    let mut mask = 0u64;
    for step in 1..(1u64 << n) {
        let i = step.trailing_zeros() as usize;
        e += if bits[i] == 0 { field[i] } else { -field[i] };
        g.flip(&mut bits, &mut field, i);
        mask ^= 1 << i;
        if e <= cutoff + band {
            pool.push((e, mask));
            if pool.len() >= 4 * keep + 64 {
                pool.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
                cutoff = pool[keep - 1].0;
                pool.retain(|c| c.0 <= cutoff + band);
            }
        }
    }
    let samples = pool
        .into_iter()
        .map(|(_, m)| {
            let bits: Vec<u8> = (0..n).map(|i| ((m >> i) & 1) as u8).collect();
            Sample { energy: q.energy(&bits), bits, read: 0, seed: 0 }
        })
        .collect();
    let mut set = SampleSet::from_unsorted(samples);
    set.samples.truncate(keep);
    Ok(set)
}

/// A master candidate read off a sample.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Candidate {
    pub z: Vec<f64>,
    pub s: f64,
    pub energy: f64,
    pub feasible: bool,
}

/// Up to `r` distinct-`z` candidates in energy order, skipping samples that
/// violate a cut. When none qualifies the best sample is returned anyway,
/// flagged infeasible.
pub fn top_r_feasible(set: &SampleSet, q: &QuboProgram, r: usize) -> Vec<Candidate> {
    let mut out: Vec<Candidate> = vec![];
    for s in &set.samples {
        if out.len() >= r.max(1) {
            break;
        }
        let Ok(d) = q.decode(&s.bits) else { continue };
        if !d.feasible || out.iter().any(|c| lex_cmp(&c.z, &d.z).is_eq()) {
            continue;
        }
        out.push(Candidate { z: d.z, s: d.s, energy: s.energy, feasible: true });
    }
    if out.is_empty() {
        if let Some(best) = set.best() {
            if let Ok(d) = q.decode(&best.bits) {
                out.push(Candidate { z: d.z, s: d.s, energy: best.energy, feasible: false });
            }
        }
    }
    out
}
