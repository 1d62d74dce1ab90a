//! Independent oracles shared by the bench tests and the acceptance suite.
#![allow(dead_code)]

use qubo_benders::bench::{BoundSide, Layer, NeuralNetSpec};
use qubo_benders::lpcore::{solve_lp, LinearProgram, LpStatus, Relation, Sense, ToleranceSet};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// A network with 2-3 inputs, one hidden layer of 1-4 ReLUs and two outputs.
pub fn tiny_network(seed: u64) -> NeuralNetSpec {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n_in = rng.gen_range(2..=3);
    let hidden = rng.gen_range(1..=4);
    let w = |rows: usize, cols: usize, rng: &mut ChaCha8Rng| -> Vec<Vec<f64>> {
        (0..rows).map(|_| (0..cols).map(|_| rng.gen_range(-1.0..1.0)).collect()).collect()
    };
    let w1 = w(hidden, n_in, &mut rng);
    let w2 = w(2, hidden, &mut rng);
    let b1 = (0..hidden).map(|_| rng.gen_range(-0.5..0.5)).collect();
    let b2 = (0..2).map(|_| rng.gen_range(0.0..1.0)).collect();
    let input_lb: Vec<f64> = (0..n_in).map(|_| rng.gen_range(0.0..0.5)).collect();
    let input_ub = input_lb.iter().map(|l| l + rng.gen_range(0.5..1.5)).collect();
    NeuralNetSpec {
        layers: vec![Layer { w: w1, b: b1 }, Layer { w: w2, b: b2 }],
        input_lb,
        input_ub,
        gen_limits: vec![[0.0, 1.0], [0.2, 1.2], [0.1, 0.8]],
        map_d: (0..n_in).map(|d| (0..n_in).map(|k| if k == d { 1.0 } else { 0.0 }).collect()).collect(),
        slack_index: seed as usize % 3,
    }
}

/// Worst violation of a one-hidden-layer network by enumerating activation
/// patterns; each pattern is a polytope over the inputs where the network is
/// affine, so one LP per pattern gives the exact maximum.
pub fn pattern_oracle(nn: &NeuralNetSpec, target: usize, side: BoundSide) -> f64 {
    assert_eq!(nn.layers.len(), 2);
    let (l1, l2) = (&nn.layers[0], &nn.layers[1]);
    let n_in = nn.inputs();
    let hidden = l1.b.len();
    let demand: Vec<f64> = (0..n_in).map(|d| nn.map_d.iter().map(|r| r[d]).sum()).collect();
    let tol = ToleranceSet::default();
    let mut best = f64::NEG_INFINITY;
    for mask in 0u32..1 << hidden {
        let on = |k: usize| mask >> k & 1 == 1;
        // Output j = b2_j + Σ_k on_k W2_jk (W1_k x + b1_k).
        let mut out_lin = vec![vec![0.0; n_in]; l2.b.len()];
        let mut out_const = l2.b.clone();
        for j in 0..l2.b.len() {
            for k in (0..hidden).filter(|&k| on(k)) {
                out_const[j] += l2.w[j][k] * l1.b[k];
                for d in 0..n_in {
                    out_lin[j][d] += l2.w[j][k] * l1.w[k][d];
                }
            }
        }
        let (lin, cst): (Vec<f64>, f64) = {
            let mut gens_lin = out_lin.clone();
            let mut gens_const = out_const.clone();
            let slack_lin: Vec<f64> = (0..n_in).map(|d| demand[d] - out_lin.iter().map(|r| r[d]).sum::<f64>()).collect();
            gens_lin.insert(nn.slack_index, slack_lin);
            gens_const.insert(nn.slack_index, -out_const.iter().sum::<f64>());
            let [lo, hi] = nn.gen_limits[target];
            match side {
                BoundSide::Upper => (gens_lin[target].clone(), gens_const[target] - hi),
                BoundSide::Lower => (gens_lin[target].iter().map(|v| -v).collect(), lo - gens_const[target]),
            }
        };
        let mut lp = LinearProgram::new(Sense::Max, lin);
        for d in 0..n_in {
            lp.set_bounds(d, nn.input_lb[d], nn.input_ub[d]);
        }
        for k in 0..hidden {
            let rel = if on(k) { Relation::Ge } else { Relation::Le };
            lp.add_row(l1.w[k].clone(), rel, -l1.b[k]);
        }
        let sol = solve_lp(&lp, &tol).unwrap();
        if sol.status == LpStatus::Optimal {
            best = best.max(sol.objective + cst);
        }
    }
    best
}

/// Uniform sample from the input box.
pub fn sample_inputs(nn: &NeuralNetSpec, rng: &mut ChaCha8Rng) -> Vec<f64> {
    nn.input_lb.iter().zip(&nn.input_ub).map(|(l, u)| if l < u { rng.gen_range(*l..=*u) } else { *l }).collect()
}
