use qubo_benders::benders::{
    master_top_r, run, solve_dual_subproblem, solve_pareto_subproblem, update_core_point, BendersConfig, CorePointState,
    Cut, CutPool, DualOutcome, MasterBackend, Method,
};
use qubo_benders::lpcore::{dot, ToleranceSet};
use qubo_benders::model::random::{random_program, seeded_suite};
use qubo_benders::model::{brute_force_milp, lex_cmp, z_from_mask, MilpOutcome, MixedBinaryProgram};
use qubo_benders::sampler::AnnealSchedule;

fn optimum(p: &MixedBinaryProgram) -> (Vec<f64>, Vec<f64>, f64) {
    match brute_force_milp(p, 16).unwrap() {
        MilpOutcome::Optimal { z, y, objective } => (z, y, objective),
        other => panic!("{other:?}"),
    }
}

#[test]
fn every_method_reaches_the_brute_force_optimum() {
    let suite = seeded_suite(2024, 20);
    let cfg = BendersConfig { r: 3, ..Default::default() };
    for (k, p) in suite.iter().enumerate() {
        let (_, _, best) = optimum(p);
        for m in [Method::ConventionalBD, Method::Method1, Method::Method2] {
            let r = run(p, &cfg, m).unwrap();
            assert!(r.converged, "instance {k} {m:?}");
            assert!((r.objective - best).abs() <= 1e-3, "instance {k} {m:?}: {} vs {best}", r.objective);
            assert!(p.max_violation(&r.z, &r.y) < 1e-6);
            assert!(r.log.is_monotone(), "instance {k} {m:?}");
        }
    }
}

#[test]
fn cuts_never_exclude_the_optimum() {
    let tol = ToleranceSet::default();
    for p in seeded_suite(5, 15) {
        let (z_star, y_star, _) = optimum(&p);
        let cy = dot(&p.c, &y_star);
        let mut pool = CutPool::seeded(&p);
        for mask in 0..(1u64 << p.n_z).min(64) {
            let z = z_from_mask(mask * 37 % (1 << p.n_z), p.n_z);
            match solve_dual_subproblem(&p, &z, &tol).unwrap() {
                DualOutcome::ExtremePoint { lambda, .. } => {
                    pool.add_optimality(&p, lambda, 1);
                }
                DualOutcome::ExtremeRay { ray } => {
                    // Separation at the generating point.
                    assert!(Cut::new(&p, ray.clone(), 1).value(&z) < 0.0);
                    pool.add_feasibility(&p, ray, 1, 1e-6).unwrap();
                }
            }
        }
        for c in &pool.optimality {
            assert!(c.value(&z_star) >= cy - 1e-6);
        }
        for c in &pool.feasibility {
            assert!(c.value(&z_star) >= -1e-6);
        }
    }
}

#[test]
fn subproblem_value_at_the_optimum_matches() {
    let tol = ToleranceSet::default();
    for p in seeded_suite(11, 15) {
        let (z, _, best) = optimum(&p);
        let DualOutcome::ExtremePoint { value, .. } = solve_dual_subproblem(&p, &z, &tol).unwrap() else { panic!() };
        assert!((p.offset + dot(&p.i, &z) + value - best).abs() < 1e-6);
    }
}

#[test]
fn pareto_cut_at_a_binary_core_equals_the_plain_cut() {
    let tol = ToleranceSet::default();
    for p in seeded_suite(12, 10) {
        let (z, _, _) = optimum(&p);
        let core = CorePointState::new(z.clone());
        assert_eq!(solve_pareto_subproblem(&p, &core, &tol).unwrap(), solve_dual_subproblem(&p, &z, &tol).unwrap());
    }
}

#[test]
fn pareto_cut_at_a_midpoint_is_valid() {
    let tol = ToleranceSet::default();
    let mut checked = 0;
    for p in seeded_suite(13, 20) {
        let (z_star, y_star, _) = optimum(&p);
        let feasible: Vec<Vec<f64>> = (0..1u64 << p.n_z)
            .map(|m| z_from_mask(m, p.n_z))
            .filter(|z| matches!(solve_dual_subproblem(&p, z, &tol), Ok(DualOutcome::ExtremePoint { .. })))
            .take(2)
            .collect();
        if feasible.len() < 2 {
            continue;
        }
        let core = update_core_point(&CorePointState::new(feasible[0].clone()), &feasible[1]);
        if let DualOutcome::ExtremePoint { lambda, .. } = solve_pareto_subproblem(&p, &core, &tol).unwrap() {
            let mut pool = CutPool::new();
            pool.add_optimality(&p, lambda, 1);
            assert!(pool.optimality[0].value(&z_star) >= dot(&p.c, &y_star) - 1e-6);
            checked += 1;
        }
    }
    assert!(checked >= 10);
}

#[test]
fn zero_rho_master_is_the_plain_master() {
    for p in seeded_suite(14, 10) {
        let mut pool = CutPool::seeded(&p);
        let tol = ToleranceSet::default();
        for m in [0u64, 5, 9] {
            if let DualOutcome::ExtremePoint { lambda, .. } = solve_dual_subproblem(&p, &z_from_mask(m, p.n_z), &tol).unwrap() {
                pool.add_optimality(&p, lambda, 1);
            }
        }
        let z_prev = z_from_mask(3, p.n_z);
        let with = master_top_r(&pool, &p, 0.0, &z_prev, 64.0, 1).unwrap();
        // Plain master: max offset + iᵀz + min(64, cuts) by enumeration.
        let mut best: Option<(f64, Vec<f64>)> = None;
        for m in 0..1u64 << p.n_z {
            let z = z_from_mask(m, p.n_z);
            if pool.feasibility.iter().any(|c| c.value(&z) < -1e-7) {
                continue;
            }
            let s = pool.optimality.iter().map(|c| c.value(&z)).fold(64.0, f64::min);
            let v = p.offset + dot(&p.i, &z) + s;
            let better = match &best {
                None => true,
                Some((bv, bz)) => v > bv + 1e-9 || ((v - bv).abs() <= 1e-9 && lex_cmp(&z, bz).is_lt()),
            };
            if better {
                best = Some((v, z));
            }
        }
        let (v, z) = best.unwrap();
        assert_eq!(with[0].z, z);
        assert!((with[0].value - v).abs() < 1e-9);
    }
}

#[test]
fn qubo_backends_agree_on_small_instances() {
    for seed in 0..6 {
        let p = random_program(seed, 3, 2, 3);
        let (_, _, best) = optimum(&p);
        let backends = [
            MasterBackend::Sa(AnnealSchedule { reads: 16, sweeps: 300, seed, ..Default::default() }),
            MasterBackend::QuboExact { limit: 22 },
        ];
        for b in backends {
            let cfg = BendersConfig { backend: b.clone(), max_iterations: 200, ..Default::default() };
            match run(&p, &cfg, Method::Method2) {
                Ok(r) => {
                    assert!(r.converged, "{seed} {b:?}");
                    assert!((r.objective - best).abs() <= 1e-3, "{seed} {b:?}");
                }
                Err(e) => assert!(matches!(b, MasterBackend::QuboExact { .. }), "{e}"),
            }
        }
    }
}

#[test]
fn cut_window_still_terminates() {
    for p in seeded_suite(15, 5) {
        let (_, _, best) = optimum(&p);
        let cfg = BendersConfig { cut_window: 5, max_iterations: 2000, ..Default::default() };
        let r = run(&p, &cfg, Method::ConventionalBD).unwrap();
        if r.converged {
            assert!((r.objective - best).abs() <= 1e-3);
        }
    }
}

#[test]
fn runs_are_deterministic() {
    let p = &seeded_suite(16, 1)[0];
    let cfg = BendersConfig { r: 3, ..Default::default() };
    for m in [Method::Method1, Method::Method2] {
        assert_eq!(run(p, &cfg, m).unwrap(), run(p, &cfg, m).unwrap());
    }
}
