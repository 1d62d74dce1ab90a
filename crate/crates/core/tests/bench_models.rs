mod support;

use qubo_benders::bench::{big_m, build_nn_verification, build_ots, cases, propagate_bounds, BoundSide, NetworkCase, OtsColumns};
use qubo_benders::benders::{run, BendersConfig, Method};
use qubo_benders::model::{
    branch_and_bound, brute_force_milp, brute_force_source, certified_enumeration, compile, MilpOutcome, Recovery,
};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use support::{pattern_oracle, sample_inputs, tiny_network};

const METHODS: [Method; 3] = [Method::ConventionalBD, Method::Method1, Method::Method2];

/// Angle-flow rows are tight on closed lines and slack within big-M on open
/// ones; open lines carry no flow.
fn assert_big_m_inactive(case: &NetworkCase, cols: &OtsColumns, x: &[f64]) {
    let idx: Vec<usize> = case.lines.iter().map(|l| case.buses.iter().position(|b| b.id == l.from).unwrap()).collect();
    let jdx: Vec<usize> = case.lines.iter().map(|l| case.buses.iter().position(|b| b.id == l.to).unwrap()).collect();
    for (k, l) in case.lines.iter().enumerate() {
        let angle = l.b * (x[cols.theta[idx[k]]] - x[cols.theta[jdx[k]]]);
        let p = x[cols.flow[k]];
        let on = cols.status[k].map_or(1.0, |c| x[c]);
        if on > 0.5 {
            assert!((p - angle).abs() < 1e-5, "line {k}: flow {p} vs angle {angle}");
        } else {
            assert!(p.abs() < 1e-6, "open line {k} carries {p}");
            assert!(angle.abs() <= big_m(case, k) + 1e-6);
        }
        assert!(p.abs() <= l.limit + 1e-6);
    }
}

fn ots(case: &NetworkCase, e: usize) -> (qubo_benders::model::MixedBinaryProgram, Recovery, OtsColumns) {
    let (src, cols) = build_ots(case, e).unwrap();
    let (p, rec) = compile(&src).unwrap();
    (p, rec, cols)
}

#[test]
fn six_bus_has_eleven_switchable_lines() {
    let (p, _, cols) = ots(&cases::case6(), 5);
    assert_eq!(p.n_z, 11);
    assert!(cols.status.iter().all(Option::is_some));
}

#[test]
fn six_bus_methods_agree_with_brute_force() {
    let case = cases::case6();
    let (p, rec, cols) = ots(&case, 5);
    let MilpOutcome::Optimal { objective: best, .. } = brute_force_milp(&p, 12).unwrap() else { panic!() };
    let (bnb, _) = branch_and_bound(&p).unwrap();
    assert!((bnb.objective().unwrap() - best).abs() <= 1e-3);
    for m in METHODS {
        let r = run(&p, &BendersConfig { r: 3, ..Default::default() }, m).unwrap();
        assert!(r.converged);
        assert!((r.objective - best).abs() <= 1e-3, "{m:?}: {} vs {best}", r.objective);
        assert_big_m_inactive(&case, &cols, &rec.recover(&r.z, &r.y));
    }
}

#[test]
fn six_bus_switching_lowers_cost() {
    let case = cases::case6();
    let cost = |e| {
        let (src, _) = build_ots(&case, e).unwrap();
        brute_force_source(&src, 12).unwrap().objective().unwrap()
    };
    let (all_on, five) = (cost(0), cost(5));
    assert!(five < all_on - 1.0, "{five} vs {all_on}");
}

#[test]
fn fourteen_bus_sub_enumeration_confirms_benders() {
    let case = cases::case14();
    let (p, rec, cols) = ots(&case, 17);
    assert_eq!(p.n_z, 20);
    let full = run(&p, &BendersConfig::default(), Method::Method1).unwrap();
    assert!(full.converged);
    let x = rec.recover(&full.z, &full.y);
    assert_big_m_inactive(&case, &cols, &x);
    for m in [Method::ConventionalBD, Method::Method2] {
        let r = run(&p, &BendersConfig { r: 5, ..Default::default() }, m).unwrap();
        assert!((r.objective - full.objective).abs() <= 1e-3, "{m:?}");
    }
    // Fix six lines the solution keeps in service and enumerate the other 14.
    let mut sub = case.clone();
    let closed: Vec<usize> = (0..case.lines.len()).filter(|&k| x[cols.status[k].unwrap()] > 0.5).take(6).collect();
    assert_eq!(closed.len(), 6);
    for &k in &closed {
        sub.lines[k].switchable = false;
    }
    let (q, _, _) = ots(&sub, 17);
    assert_eq!(q.n_z, 14);
    let (oracle, _) = certified_enumeration(&q, 14).unwrap();
    assert!((oracle.objective().unwrap() - full.objective).abs() <= 1e-3);
}

#[test]
fn certified_enumeration_matches_brute_force_on_six_bus() {
    let (p, _, _) = ots(&cases::case6(), 5);
    let (a, _) = certified_enumeration(&p, 12).unwrap();
    let b = brute_force_milp(&p, 12).unwrap();
    assert!((a.objective().unwrap() - b.objective().unwrap()).abs() < 1e-9);
}

#[test]
fn tiny_networks_match_the_pattern_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(70);
    for seed in 0..20u64 {
        let nn = tiny_network(seed);
        let side = if seed % 2 == 0 { BoundSide::Upper } else { BoundSide::Lower };
        let target = (seed / 2) as usize % 3;
        let (src, _) = build_nn_verification(&nn, target, side).unwrap();
        assert_eq!(src.binaries().len(), nn.hidden_neurons());
        let milp = brute_force_source(&src, 8).unwrap().objective().unwrap();
        let oracle = pattern_oracle(&nn, target, side);
        assert!((milp - oracle).abs() <= 1e-4, "net {seed}: {milp} vs {oracle}");
        let (p, rec) = compile(&src).unwrap();
        let r = run(&p, &BendersConfig::default(), Method::Method1).unwrap();
        assert!((rec.source_objective(r.objective) - oracle).abs() <= 1e-3, "net {seed}");
        for _ in 0..1000 {
            let v = nn.violation(&sample_inputs(&nn, &mut rng), target, side);
            assert!(v <= milp + 1e-6);
        }
    }
}

#[test]
fn interval_bounds_contain_sampled_activations() {
    let nn = cases::nn9();
    let bounds = propagate_bounds(&nn);
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    for _ in 0..10_000 {
        let mut a = sample_inputs(&nn, &mut rng);
        for (k, layer) in nn.layers.iter().enumerate() {
            let pre: Vec<f64> =
                layer.w.iter().zip(&layer.b).map(|(row, b)| b + row.iter().zip(&a).map(|(w, x)| w * x).sum::<f64>()).collect();
            for (v, &(lo, hi)) in pre.iter().zip(&bounds[k]) {
                assert!(*v >= lo - 1e-9 && *v <= hi + 1e-9);
            }
            a = pre.iter().map(|v| v.max(0.0)).collect();
        }
    }
}

#[test]
fn forward_pass_is_a_feasible_point_of_the_encoding() {
    let nn = cases::nn9();
    let (src, cols) = build_nn_verification(&nn, 2, BoundSide::Upper).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..200 {
        let pd = sample_inputs(&nn, &mut rng);
        let mut x = vec![0.0; src.vars.len()];
        for (c, v) in cols.inputs.iter().zip(&pd) {
            x[*c] = *v;
        }
        let mut a = pd.clone();
        for (k, layer) in nn.layers[..nn.layers.len() - 1].iter().enumerate() {
            let pre: Vec<f64> =
                layer.w.iter().zip(&layer.b).map(|(row, b)| b + row.iter().zip(&a).map(|(w, x)| w * x).sum::<f64>()).collect();
            for (j, v) in pre.iter().enumerate() {
                x[cols.pre[k][j]] = *v;
                x[cols.post[k][j]] = v.max(0.0);
                x[cols.active[k][j]] = if *v > 0.0 { 1.0 } else { 0.0 };
            }
            a = pre.iter().map(|v| v.max(0.0)).collect();
        }
        for (c, v) in cols.generators.iter().zip(nn.dispatch(&pd)) {
            x[*c] = v;
        }
        assert!(src.max_violation(&x) < 1e-7);
        assert!((src.evaluate(&x) - nn.violation(&pd, 2, BoundSide::Upper)).abs() < 1e-9);
    }
}

#[test]
fn nn9_verification() {
    let nn = cases::nn9();
    assert_eq!(nn.hidden_neurons(), 10);
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    for (target, side) in [(0, BoundSide::Upper), (1, BoundSide::Lower), (2, BoundSide::Upper)] {
        let (src, _) = build_nn_verification(&nn, target, side).unwrap();
        assert_eq!(src.binaries().len(), 10);
        let best = brute_force_source(&src, 12).unwrap().objective().unwrap();
        let (p, rec) = compile(&src).unwrap();
        for m in METHODS {
            let r = run(&p, &BendersConfig { r: 3, ..Default::default() }, m).unwrap();
            assert!((rec.source_objective(r.objective) - best).abs() <= 1e-3, "{target} {side:?} {m:?}");
        }
        for _ in 0..1000 {
            assert!(nn.violation(&sample_inputs(&nn, &mut rng), target, side) <= best + 1e-6);
        }
    }
}
