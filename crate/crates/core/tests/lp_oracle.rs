//! Cross-checks the revised simplex against a textbook full-tableau simplex
//! written independently here.

use qubo_benders::lpcore::{
    dual_of, is_farkas_certificate, is_improving_ray, solve_lp, LinearProgram, LpStatus, Relation, Sense,
    ToleranceSet,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[derive(Debug, PartialEq, Clone, Copy)]
enum Verdict {
    Optimal(f64),
    Infeasible,
    Unbounded,
}

/// `min cᵀx` over `rows`, `x ≥ 0`, by two-phase full tableau with Bland's rule.
fn tableau_min(c: &[f64], rows: &[(Vec<f64>, Relation, f64)]) -> Verdict {
    let n = c.len();
    let m = rows.len();
    // Columns: n structural, one slack per inequality, one artificial per row.
    let n_slack = rows.iter().filter(|r| r.1 != Relation::Eq).count();
    let width = n + n_slack + m;
    let mut t = vec![vec![0.0f64; width + 1]; m];
    let mut basis = vec![0usize; m];
    let mut slack = n;
    for (i, (a, rel, b)) in rows.iter().enumerate() {
        let s = if *b < 0.0 { -1.0 } else { 1.0 };
        for j in 0..n {
            t[i][j] = s * a[j];
        }
        match rel {
            Relation::Le => {
                t[i][slack] = s;
                slack += 1;
            }
            Relation::Ge => {
                t[i][slack] = -s;
                slack += 1;
            }
            Relation::Eq => {}
        }
        t[i][n + n_slack + i] = 1.0;
        t[i][width] = s * b;
        basis[i] = n + n_slack + i;
    }

    let pivot = |t: &mut Vec<Vec<f64>>, basis: &mut Vec<usize>, r: usize, q: usize| {
        let p = t[r][q];
        for v in t[r].iter_mut() {
            *v /= p;
        }
        for i in 0..t.len() {
            if i != r && t[i][q] != 0.0 {
                let f = t[i][q];
                for j in 0..=width {
                    let d = f * t[r][j];
                    t[i][j] -= d;
                }
            }
        }
        basis[r] = q;
    };

    // Returns false when unbounded.
    let run = |t: &mut Vec<Vec<f64>>, basis: &mut Vec<usize>, cost: &[f64], allowed: usize| -> bool {
        loop {
            let mut enter = None;
            for j in 0..allowed {
                if basis.contains(&j) {
                    continue;
                }
                let z: f64 = (0..m).map(|i| cost[basis[i]] * t[i][j]).sum();
                if cost[j] - z < -1e-9 {
                    enter = Some(j);
                    break;
                }
            }
            let Some(q) = enter else { return true };
            let mut leave: Option<usize> = None;
            for i in 0..m {
                if t[i][q] > 1e-9 {
                    let ratio = t[i][width] / t[i][q];
                    leave = match leave {
                        None => Some(i),
                        Some(r) => {
                            let best = t[r][width] / t[r][q];
                            if ratio < best - 1e-12 || ((ratio - best).abs() <= 1e-12 && basis[i] < basis[r]) {
                                Some(i)
                            } else {
                                Some(r)
                            }
                        }
                    };
                }
            }
            let Some(r) = leave else { return false };
            pivot(t, basis, r, q);
        }
    };

    let mut phase1 = vec![0.0; width];
    for v in phase1.iter_mut().skip(n + n_slack) {
        *v = 1.0;
    }
    run(&mut t, &mut basis, &phase1, width);
    let infeas: f64 = (0..m).filter(|&i| basis[i] >= n + n_slack).map(|i| t[i][width]).sum();
    if infeas > 1e-7 {
        return Verdict::Infeasible;
    }
    for r in 0..m {
        if basis[r] >= n + n_slack {
            if let Some(q) = (0..n + n_slack).find(|&j| t[r][j].abs() > 1e-9) {
                pivot(&mut t, &mut basis, r, q);
            }
        }
    }
    let mut phase2 = vec![0.0; width];
    phase2[..n].copy_from_slice(c);
    if !run(&mut t, &mut basis, &phase2, n + n_slack) {
        return Verdict::Unbounded;
    }
    Verdict::Optimal((0..m).map(|i| phase2[basis[i]] * t[i][width]).sum())
}

/// Re-expresses bounds for the tableau oracle: finite upper bounds as rows,
/// free columns split into two nonnegative ones.
fn oracle(lp: &LinearProgram) -> Verdict {
    let n = lp.num_cols();
    let mut map: Vec<Vec<(usize, f64)>> = Vec::new();
    let mut k = 0;
    for j in 0..n {
        if lp.lower[j] == 0.0 {
            map.push(vec![(k, 1.0)]);
            k += 1;
        } else {
            assert!(lp.lower[j] == f64::NEG_INFINITY && lp.upper[j] == f64::INFINITY);
            map.push(vec![(k, 1.0), (k + 1, -1.0)]);
            k += 2;
        }
    }
    let expand = |row: &[f64]| {
        let mut out = vec![0.0; k];
        for j in 0..n {
            for &(col, s) in &map[j] {
                out[col] += s * row[j];
            }
        }
        out
    };
    let flip = if lp.sense == Sense::Max { -1.0 } else { 1.0 };
    let c: Vec<f64> = expand(&lp.objective).iter().map(|v| flip * v).collect();
    let mut rows: Vec<(Vec<f64>, Relation, f64)> =
        (0..lp.num_rows()).map(|i| (expand(&lp.matrix[i]), lp.relations[i], lp.rhs[i])).collect();
    for j in 0..n {
        if lp.upper[j].is_finite() {
            let mut e = vec![0.0; n];
            e[j] = 1.0;
            rows.push((expand(&e), Relation::Le, lp.upper[j]));
        }
    }
    match tableau_min(&c, &rows) {
        Verdict::Optimal(v) => Verdict::Optimal(flip * v),
        other => other,
    }
}

fn random_lp(rng: &mut ChaCha8Rng, max_rows: usize, max_cols: usize, general: bool) -> LinearProgram {
    let m = rng.gen_range(1..=max_rows);
    let n = rng.gen_range(1..=max_cols);
    let sense = if rng.gen_bool(0.5) { Sense::Max } else { Sense::Min };
    let mut lp = LinearProgram::new(sense, (0..n).map(|_| rng.gen_range(-9..=9) as f64).collect());
    for _ in 0..m {
        let row = (0..n).map(|_| if rng.gen_bool(0.7) { rng.gen_range(-9..=9) as f64 } else { 0.0 }).collect();
        let rel = if !general {
            Relation::Le
        } else {
            match rng.gen_range(0..5) {
                0 => Relation::Eq,
                1 | 2 => Relation::Ge,
                _ => Relation::Le,
            }
        };
        lp.add_row(row, rel, rng.gen_range(-9..=9) as f64);
    }
    if general {
        for j in 0..n {
            match rng.gen_range(0..6) {
                0 => {
                    lp.set_bounds(j, f64::NEG_INFINITY, f64::INFINITY);
                }
                1 => {
                    lp.set_bounds(j, 0.0, rng.gen_range(1..=9) as f64);
                }
                _ => {}
            }
        }
    }
    lp
}

fn agree(ours: &qubo_benders::lpcore::LpSolution, theirs: Verdict) -> bool {
    match (ours.status, theirs) {
        (LpStatus::Optimal, Verdict::Optimal(v)) => (ours.objective - v).abs() <= 1e-6 * (1.0 + v.abs()),
        (LpStatus::Infeasible, Verdict::Infeasible) | (LpStatus::Unbounded, Verdict::Unbounded) => true,
        _ => false,
    }
}

#[test]
fn random_8x12_objectives_match_tableau() {
    let mut rng = ChaCha8Rng::seed_from_u64(812);
    let tol = ToleranceSet::default();
    let mut optimal = 0;
    for _ in 0..100 {
        let mut lp = random_lp(&mut rng, 8, 12, false);
        // Fixed 8×12 shape with a bounding row so most instances are optimal.
        while lp.num_rows() < 7 {
            lp.add_row((0..lp.num_cols()).map(|_| rng.gen_range(-9..=9) as f64).collect(), Relation::Le, 9.0);
        }
        lp.add_row(vec![1.0; lp.num_cols()], Relation::Le, 20.0);
        let ours = solve_lp(&lp, &tol).unwrap();
        let theirs = oracle(&lp);
        assert!(agree(&ours, theirs), "ours {:?} / oracle {theirs:?}\n{lp:?}", ours.status);
        if ours.status == LpStatus::Optimal {
            optimal += 1;
            assert!(lp.max_violation(&ours.primal) <= 1e-7 * 20.0);
        }
    }
    assert!(optimal > 30, "only {optimal} optimal instances");
}

#[test]
fn two_hundred_general_lps_agree_with_tableau() {
    let mut rng = ChaCha8Rng::seed_from_u64(200);
    let tol = ToleranceSet::default();
    let mut counts = [0usize; 3];
    for _ in 0..200 {
        let lp = random_lp(&mut rng, 10, 15, true);
        let ours = solve_lp(&lp, &tol).unwrap();
        let theirs = oracle(&lp);
        assert!(agree(&ours, theirs), "ours {:?} {} / oracle {theirs:?}\n{lp:?}", ours.status, ours.objective);
        match ours.status {
            LpStatus::Optimal => {
                counts[0] += 1;
                let scale = 1.0 + lp.rhs.iter().fold(0.0f64, |m, v| m.max(v.abs()));
                assert!(lp.max_violation(&ours.primal) <= 1e-7 * scale);
            }
            LpStatus::Infeasible => {
                counts[1] += 1;
                assert!(is_farkas_certificate(&lp, ours.ray.as_ref().unwrap(), 1e-7), "{lp:?}\n{ours:?}");
            }
            LpStatus::Unbounded => {
                counts[2] += 1;
                assert!(is_improving_ray(&lp, ours.ray.as_ref().unwrap(), 1e-7));
            }
        }
        assert_eq!(solve_lp(&lp, &tol).unwrap(), ours);
    }
    assert!(counts.iter().all(|&c| c > 5), "status mix {counts:?}");
}

#[test]
fn strong_duality_on_canonical_lps() {
    let mut rng = ChaCha8Rng::seed_from_u64(31);
    let tol = ToleranceSet::default();
    let mut both_optimal = 0;
    for _ in 0..200 {
        let mut lp = random_lp(&mut rng, 10, 15, false);
        lp.sense = Sense::Max;
        if rng.gen_bool(0.7) {
            for b in lp.rhs.iter_mut() {
                *b = b.abs();
            }
            lp.add_row(vec![1.0; lp.num_cols()], Relation::Le, 20.0);
        }
        let dual = dual_of(&lp).unwrap();
        let p = solve_lp(&lp, &tol).unwrap();
        let d = solve_lp(&dual, &tol).unwrap();
        match (p.status, d.status) {
            (LpStatus::Optimal, LpStatus::Optimal) => {
                both_optimal += 1;
                assert!((p.objective - d.objective).abs() <= 1e-6 * (1.0 + p.objective.abs()));
                // The shadow prices are themselves dual optimal.
                assert!(dual.max_violation(&p.duals) <= 1e-6);
                assert!((dual.evaluate(&p.duals) - p.objective).abs() <= 1e-6 * (1.0 + p.objective.abs()));
            }
            (LpStatus::Infeasible, s) => assert_ne!(s, LpStatus::Optimal),
            (LpStatus::Unbounded, s) => assert_eq!(s, LpStatus::Infeasible),
            (LpStatus::Optimal, s) => panic!("primal optimal but dual {s:?}"),
        }
        let back = dual_of(&dual).unwrap();
        assert_eq!(back, lp);
    }
    assert!(both_optimal > 40, "{both_optimal}");
}
