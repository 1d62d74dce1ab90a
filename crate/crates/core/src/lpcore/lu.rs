//! Dense LU factorization with partial pivoting, used for simplex bases.

/// `P·A = L·U` for a square matrix stored row-major. `L` has a unit
/// diagonal and shares storage with `U`.
#[derive(Debug, Clone)]
pub(crate) struct DenseLu {
    n: usize,
    a: Vec<f64>,
    // perm[i] is the original row that ended up in position i.
    perm: Vec<usize>,
}

impl DenseLu {
    /// Factorizes `a` (row-major, `n × n`). Returns `None` when a pivot falls
    /// below `singular_tol` relative to the largest entry.
    pub(crate) fn factor(mut a: Vec<f64>, n: usize, singular_tol: f64) -> Option<Self> {
        debug_assert_eq!(a.len(), n * n);
        let scale = a.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(1.0);
        let mut perm: Vec<usize> = (0..n).collect();
        for k in 0..n {
            let mut p = k;
            let mut best = a[k * n + k].abs();
            for i in (k + 1)..n {
                let v = a[i * n + k].abs();
                if v > best {
                    best = v;
                    p = i;
                }
            }
            if best <= singular_tol * scale {
                return None;
            }
            if p != k {
                for j in 0..n {
                    a.swap(k * n + j, p * n + j);
                }
                perm.swap(k, p);
            }
            let pivot = a[k * n + k];
            for i in (k + 1)..n {
                let l = a[i * n + k] / pivot;
                if l == 0.0 {
                    continue;
                }
                a[i * n + k] = l;
                for j in (k + 1)..n {
                    a[i * n + j] -= l * a[k * n + j];
                }
            }
        }
        Some(Self { n, a, perm })
    }

    /// Overwrites `b` with `A⁻¹ b`.
    pub(crate) fn solve(&self, b: &mut [f64]) {
        let n = self.n;
        let mut x: Vec<f64> = self.perm.iter().map(|&r| b[r]).collect();
        for i in 0..n {
            let row = &self.a[i * n..i * n + i];
            let mut s = x[i];
            for (j, l) in row.iter().enumerate() {
                s -= l * x[j];
            }
            x[i] = s;
        }
        for i in (0..n).rev() {
            let mut s = x[i];
            for j in (i + 1)..n {
                s -= self.a[i * n + j] * x[j];
            }
            x[i] = s / self.a[i * n + i];
        }
        b.copy_from_slice(&x);
    }

    /// Overwrites `c` with `A⁻ᵀ c`.
    pub(crate) fn solve_transpose(&self, c: &mut [f64]) {
        let n = self.n;
        let mut w = vec![0.0; n];
        for i in 0..n {
            let mut s = c[i];
            for j in 0..i {
                s -= self.a[j * n + i] * w[j];
            }
            w[i] = s / self.a[i * n + i];
        }
        for i in (0..n).rev() {
            let mut s = w[i];
            for j in (i + 1)..n {
                s -= self.a[j * n + i] * w[j];
            }
            w[i] = s;
        }
        for (i, &r) in self.perm.iter().enumerate() {
            c[r] = w[i];
        }
    }

    /// Hager's estimate of `‖A⁻¹‖₁`.
    pub(crate) fn inverse_norm1_estimate(&self) -> f64 {
        let n = self.n;
        if n == 0 {
            return 0.0;
        }
        let mut x = vec![1.0 / n as f64; n];
        let mut estimate = 0.0;
        for _ in 0..5 {
            let mut y = x.clone();
            self.solve(&mut y);
            estimate = y.iter().map(|v| v.abs()).sum();
            let mut z: Vec<f64> = y.iter().map(|v| if *v >= 0.0 { 1.0 } else { -1.0 }).collect();
            self.solve_transpose(&mut z);
            let (j, zmax) = z
                .iter()
                .enumerate()
                .fold((0, f64::NEG_INFINITY), |acc, (i, v)| if v.abs() > acc.1 { (i, v.abs()) } else { acc });
            let ztx: f64 = z.iter().zip(&x).map(|(a, b)| a * b).sum();
            if zmax <= ztx {
                break;
            }
            x.iter_mut().for_each(|v| *v = 0.0);
            x[j] = 1.0;
        }
        estimate
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn matvec(a: &[f64], n: usize, x: &[f64]) -> Vec<f64> {
        (0..n).map(|i| (0..n).map(|j| a[i * n + j] * x[j]).sum()).collect()
    }

    #[test]
    fn solves_and_transposes() {
        let a = vec![0.0, 2.0, 1.0, 1.0, 1.0, 0.0, 3.0, 0.0, 4.0];
        let lu = DenseLu::factor(a.clone(), 3, 1e-13).unwrap();
        let mut x = vec![1.0, 2.0, 3.0];
        lu.solve(&mut x);
        let back = matvec(&a, 3, &x);
        for (u, v) in back.iter().zip([1.0, 2.0, 3.0]) {
            assert!((u - v).abs() < 1e-12);
        }
        let mut y = vec![1.0, -1.0, 0.5];
        lu.solve_transpose(&mut y);
        let at: Vec<f64> = (0..9).map(|k| a[(k % 3) * 3 + k / 3]).collect();
        let back = matvec(&at, 3, &y);
        for (u, v) in back.iter().zip([1.0, -1.0, 0.5]) {
            assert!((u - v).abs() < 1e-12);
        }
    }

    #[test]
    fn singular_is_rejected() {
        assert!(DenseLu::factor(vec![1.0, 2.0, 2.0, 4.0], 2, 1e-13).is_none());
    }

    #[test]
    fn inverse_norm_of_diagonal() {
        let lu = DenseLu::factor(vec![2.0, 0.0, 0.0, 0.25], 2, 1e-13).unwrap();
        assert!((lu.inverse_norm1_estimate() - 4.0).abs() < 1e-12);
    }
}
