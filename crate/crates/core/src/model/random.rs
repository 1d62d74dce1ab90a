//! Seeded random programs that are feasible by construction.

use super::MixedBinaryProgram;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// A program built around a hidden feasible point `(z⁰, y⁰)`: every row's
/// right-hand side is its value at that point plus a small integer slack,
/// and each `y_j` gets an explicit upper bound row so subproblems stay
/// bounded.
pub fn random_program(seed: u64, n_z: usize, n_y: usize, rows: usize) -> MixedBinaryProgram {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let z0: Vec<f64> = (0..n_z).map(|_| rng.gen_range(0..=1) as f64).collect();
    let y0: Vec<f64> = (0..n_y).map(|_| rng.gen_range(0..=4) as f64).collect();
    let i = (0..n_z)
        .map(|_| {
            let v = rng.gen_range(1..=6) as f64;
            if rng.gen_bool(0.5) {
                v
            } else {
                -v
            }
        })
        .collect();
    let c = (0..n_y).map(|_| rng.gen_range(-2..=6) as f64).collect();
    let mut p = MixedBinaryProgram::new(i, c);
    for r in 0..rows {
        let a: Vec<f64> =
            (0..n_z).map(|_| if rng.gen_bool(0.6) { rng.gen_range(-5..=5) as f64 } else { 0.0 }).collect();
        let mut b: Vec<f64> =
            (0..n_y).map(|_| if rng.gen_bool(0.5) { rng.gen_range(-4..=4) as f64 } else { 0.0 }).collect();
        if b.iter().all(|v| *v == 0.0) && n_y > 0 {
            b[rng.gen_range(0..n_y)] = rng.gen_range(1..=4) as f64;
        }
        let at: f64 = a.iter().zip(&z0).map(|(x, y)| x * y).sum::<f64>() + b.iter().zip(&y0).map(|(x, y)| x * y).sum::<f64>();
        p.add_row(a, b, at + rng.gen_range(0..=3) as f64, format!("link{r}"));
    }
    for j in 0..n_y {
        let mut b = vec![0.0; n_y];
        b[j] = 1.0;
        p.add_row(vec![0.0; n_z], b, y0[j] + rng.gen_range(0..=5) as f64, format!("ub{j}"));
    }
    p
}

/// `count` programs with `n_z ∈ [4, 12]`, `n_y ∈ [3, 20]`.
pub fn seeded_suite(seed: u64, count: usize) -> Vec<MixedBinaryProgram> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| {
            let n_z = rng.gen_range(4..=12);
            let n_y = rng.gen_range(3..=20);
            let rows = rng.gen_range(n_z.max(3)..=n_z + n_y);
            random_program(rng.gen(), n_z, n_y, rows)
        })
        .collect()
}
