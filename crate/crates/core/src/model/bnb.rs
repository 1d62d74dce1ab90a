use super::{MilpOutcome, MixedBinaryProgram, ModelError};
use crate::lpcore::{dot, solve_lp, LpStatus, ToleranceSet};

const INT_TOL: f64 = 1e-6;

/// Depth-first LP-based branch and bound on the binaries. Returns the
/// outcome and the number of nodes solved.
pub fn branch_and_bound(p: &MixedBinaryProgram) -> Result<(MilpOutcome, u64), ModelError> {
    p.validate()?;
    let tol = ToleranceSet::default();
    let root = p.relaxation();
    let mut stack: Vec<Vec<Option<f64>>> = vec![vec![None; p.n_z]];
    let mut best: Option<(Vec<f64>, Vec<f64>, f64)> = None;
    let mut nodes = 0u64;
    while let Some(fixed) = stack.pop() {
        nodes += 1;
        let mut lp = root.clone();
        for (j, f) in fixed.iter().enumerate() {
            if let Some(v) = f {
                lp.set_bounds(j, *v, *v);
            }
        }
        let sol = solve_lp(&lp, &tol)?;
        let incumbent = best.as_ref().map_or(f64::NEG_INFINITY, |b| b.2);
        let branch_on = match sol.status {
            LpStatus::Infeasible => continue,
            LpStatus::Unbounded => match fixed.iter().position(Option::is_none) {
                Some(j) => j,
                None => return Ok((MilpOutcome::Unbounded, nodes)),
            },
            LpStatus::Optimal => {
                if p.offset + sol.objective <= incumbent + 1e-9 {
                    continue;
                }
                let frac = |j: usize| {
                    let v = sol.primal[j];
                    (v - v.round()).abs()
                };
                let pick = (0..p.n_z).filter(|&j| frac(j) > INT_TOL).max_by(|&a, &b| {
                    frac(a).partial_cmp(&frac(b)).unwrap().then(b.cmp(&a))
                });
                match pick {
                    Some(j) => j,
                    None => {
                        // Integral: re-evaluate at the rounded point.
                        let z: Vec<f64> = sol.primal[..p.n_z].iter().map(|v| v.round()).collect();
                        let sub = solve_lp(&p.primal_subproblem(&z), &tol)?;
                        match sub.status {
                            LpStatus::Optimal => {
                                let v = p.offset + dot(&p.i, &z) + sub.objective;
                                if v > incumbent {
                                    best = Some((z, sub.primal, v));
                                }
                            }
                            LpStatus::Unbounded => return Ok((MilpOutcome::Unbounded, nodes)),
                            LpStatus::Infeasible => {}
                        }
                        continue;
                    }
                }
            }
        };
        let up_first = sol.status == LpStatus::Optimal && sol.primal[branch_on] >= 0.5;
        let mut down = fixed.clone();
        down[branch_on] = Some(0.0);
        let mut up = fixed;
        up[branch_on] = Some(1.0);
        if up_first {
            stack.push(down);
            stack.push(up);
        } else {
            stack.push(up);
            stack.push(down);
        }
    }
    Ok((
        match best {
            Some((z, y, objective)) => MilpOutcome::Optimal { z, y, objective },
            None => MilpOutcome::Infeasible,
        },
        nodes,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn knapsack_matches_hand_optimum() {
        // max 5z0 + 4z1 + 3z2  s.t.  2z0 + 3z1 + z2 ≤ 4 → z = (1, 0, 1), 8.
        let mut p = MixedBinaryProgram::new(vec![5.0, 4.0, 3.0], vec![]);
        p.add_row(vec![2.0, 3.0, 1.0], vec![], 4.0, "w");
        let (out, _) = branch_and_bound(&p).unwrap();
        assert_eq!(out, MilpOutcome::Optimal { z: vec![1.0, 0.0, 1.0], y: vec![], objective: 8.0 });
    }

    #[test]
    fn mixed_toy() {
        let mut p = MixedBinaryProgram::new(vec![1.0], vec![1.0]);
        p.add_row(vec![2.0], vec![1.0], 2.0, "cap");
        assert_eq!(branch_and_bound(&p).unwrap().0.objective(), Some(2.0));
    }

    #[test]
    fn infeasible_and_unbounded() {
        let mut p = MixedBinaryProgram::new(vec![1.0], vec![1.0]);
        p.add_row(vec![0.0], vec![-1.0], -5.0, "need");
        p.add_row(vec![1.0], vec![1.0], 3.0, "cap");
        assert_eq!(branch_and_bound(&p).unwrap().0, MilpOutcome::Infeasible);
        let mut q = MixedBinaryProgram::new(vec![1.0], vec![1.0]);
        q.add_row(vec![1.0], vec![-1.0], 0.0, "r");
        assert_eq!(branch_and_bound(&q).unwrap().0, MilpOutcome::Unbounded);
    }
}
