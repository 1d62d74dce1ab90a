//! Seeded QUBOs and small integer masters for testing samplers and the
//! compiler.

use super::{compile_master_to_qubo, compute_bit_widths, BitLayout, QuboProgram, WidthOptions};
use crate::benders::CutPool;
use crate::model::MixedBinaryProgram;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::collections::BTreeMap;

/// Dense upper-triangular QUBO with coefficients uniform in `[-1, 1]`.
pub fn random_qubo(seed: u64, n: usize) -> QuboProgram {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut entries = BTreeMap::new();
    for i in 0..n {
        for j in i..n {
            entries.insert((i, j), rng.gen_range(-1.0..=1.0));
        }
    }
    QuboProgram::raw(n, entries, 0.0)
}

/// A master problem with integer data.
#[derive(Debug, Clone)]
pub struct MasterInstance {
    pub program: MixedBinaryProgram,
    pub pool: CutPool,
    pub rho: f64,
    pub z_prev: Vec<f64>,
    pub layout: BitLayout,
    pub qubo: QuboProgram,
}

/// A master over 2 or 3 binaries with one or two optimality cuts and at most
/// one feasibility cut, compiled with `a_cc = 1`. Returns `None` when the
/// compiled QUBO exceeds `max_bits`.
pub fn random_master(seed: u64, max_bits: usize) -> Option<MasterInstance> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n_z = rng.gen_range(2..=3);
    let i: Vec<f64> = (0..n_z).map(|_| rng.gen_range(-2..=2) as f64).collect();
    let mut p = MixedBinaryProgram::new(i, vec![1.0]);
    let n_opt = rng.gen_range(1..=2);
    let n_feas = rng.gen_range(0..=1);
    for r in 0..n_opt {
        let a = (0..n_z).map(|_| rng.gen_range(-1..=2) as f64).collect();
        p.add_row(a, vec![1.0], rng.gen_range(0..=3) as f64, format!("opt{r}"));
    }
    for r in 0..n_feas {
        let a = (0..n_z).map(|_| rng.gen_range(0..=2) as f64).collect();
        p.add_row(a, vec![0.0], rng.gen_range(1..=3) as f64, format!("feas{r}"));
    }
    let mut pool = CutPool::new();
    for r in 0..n_opt + n_feas {
        let mut e = vec![0.0; n_opt + n_feas];
        e[r] = 1.0;
        if r < n_opt {
            pool.add_optimality(&p, e, 1);
        } else {
            pool.add_feasibility(&p, e, 1, 0.0).expect("z-only rows are rays");
        }
    }
    let rho = [0.0, 1.0, -1.0][rng.gen_range(0..3)];
    let z_prev: Vec<f64> = (0..n_z).map(|_| rng.gen_range(0..=1) as f64).collect();
    let layout = compute_bit_widths(&p, &pool, 1, &WidthOptions::default());
    if layout.dimension() > max_bits {
        return None;
    }
    let qubo = compile_master_to_qubo(&pool, &p, rho, &z_prev, &layout, None).ok()?;
    Some(MasterInstance { program: p, pool, rho, z_prev, layout, qubo })
}

/// The first `count` instances of [`random_master`] that fit in `max_bits`.
pub fn master_suite(seed: u64, count: usize, max_bits: usize) -> Vec<MasterInstance> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = vec![];
    while out.len() < count {
        if let Some(m) = random_master(rng.gen(), max_bits) {
            out.push(m);
        }
    }
    out
}
