use crate::{Error, Result};

/// Symmetric sparse matrix in compressed-row form.
#[derive(Clone, Debug)]
pub struct SparseOperator {
    n: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    values: Vec<f64>,
}

/// Convergence record of one conjugate-gradient solve.
#[derive(Clone, Debug, Default)]
pub struct SolveStats {
    pub iterations: usize,
    pub relative_residual: f64,
}

impl SparseOperator {
    /// Empty matrix with the given sorted sparsity pattern (one list per row).
    pub(crate) fn with_pattern(pattern: &[Vec<usize>]) -> Self {
        let n = pattern.len();
        let mut row_ptr = Vec::with_capacity(n + 1);
        row_ptr.push(0);
        let mut col_idx = Vec::new();
        for row in pattern {
            col_idx.extend_from_slice(row);
            row_ptr.push(col_idx.len());
        }
        let nnz = col_idx.len();
        SparseOperator { n, row_ptr, col_idx, values: vec![0.0; nnz] }
    }

    pub(crate) fn add(&mut self, i: usize, j: usize, v: f64) {
        let row = &self.col_idx[self.row_ptr[i]..self.row_ptr[i + 1]];
        let k = row.binary_search(&j).expect("entry outside sparsity pattern");
        self.values[self.row_ptr[i] + k] += v;
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let row = &self.col_idx[self.row_ptr[i]..self.row_ptr[i + 1]];
        row.binary_search(&j).map_or(0.0, |k| self.values[self.row_ptr[i] + k])
    }

    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let r = self.row_ptr[i]..self.row_ptr[i + 1];
        self.col_idx[r.clone()].iter().copied().zip(self.values[r].iter().copied())
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.get(i, i)).collect()
    }

    /// `y = A x`.
    pub fn apply_into(&self, x: &[f64], y: &mut [f64]) {
        for i in 0..self.n {
            let mut s = 0.0;
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                s += self.values[k] * x[self.col_idx[k]];
            }
            y[i] = s;
        }
    }

    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.n];
        self.apply_into(x, &mut y);
        y
    }

    /// `xᵀ A x`.
    pub fn quad_form(&self, x: &[f64]) -> f64 {
        let mut s = 0.0;
        for i in 0..self.n {
            let mut r = 0.0;
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                r += self.values[k] * x[self.col_idx[k]];
            }
            s += x[i] * r;
        }
        s
    }

    /// `xᵀ A y`.
    pub fn bilinear(&self, x: &[f64], y: &[f64]) -> f64 {
        let mut s = 0.0;
        for i in 0..self.n {
            let mut r = 0.0;
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                r += self.values[k] * y[self.col_idx[k]];
            }
            s += x[i] * r;
        }
        s
    }

    /// Largest `|a_ij − a_ji|` relative to the largest entry.
    pub fn asymmetry(&self) -> f64 {
        let scale = self.values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let mut worst = 0.0f64;
        for i in 0..self.n {
            for (j, v) in self.row(i) {
                worst = worst.max((v - self.get(j, i)).abs());
            }
        }
        worst / scale
    }

    /// Jacobi-preconditioned conjugate gradients on the subspace of free
    /// unknowns. Entries of `x` with `free[i] == false` are left untouched
    /// and treated as zero; `rhs` is read on free entries only. `x` holds the
    /// initial guess on entry.
    pub fn pcg(
        &self,
        rhs: &[f64],
        x: &mut [f64],
        free: &[bool],
        rel_tol: f64,
        max_iter: usize,
    ) -> Result<SolveStats> {
        let n = self.n;
        let inv_diag: Vec<f64> = (0..n)
            .map(|i| if free[i] { 1.0 / self.get(i, i) } else { 0.0 })
            .collect();
        let mut xm = vec![0.0; n];
        for i in 0..n {
            if free[i] {
                xm[i] = x[i];
            }
        }
        let b_norm = (0..n).filter(|&i| free[i]).map(|i| rhs[i] * rhs[i]).sum::<f64>().sqrt();
        if b_norm == 0.0 {
            for i in 0..n {
                if free[i] {
                    x[i] = 0.0;
                }
            }
            return Ok(SolveStats { iterations: 0, relative_residual: 0.0 });
        }

        let mut ax = vec![0.0; n];
        self.apply_into(&xm, &mut ax);
        let mut r: Vec<f64> = (0..n).map(|i| if free[i] { rhs[i] - ax[i] } else { 0.0 }).collect();
        let mut z: Vec<f64> = r.iter().zip(&inv_diag).map(|(a, b)| a * b).collect();
        let mut p = z.clone();
        let mut rz: f64 = r.iter().zip(&z).map(|(a, b)| a * b).sum();
        let mut ap = vec![0.0; n];
        let mut history = Vec::new();

        let mut res = norm(&r) / b_norm;
        let mut it = 0;
        while res > rel_tol {
            if it >= max_iter {
                return Err(Error::SolverDivergence {
                    iterations: it,
                    final_residual: res,
                    history,
                });
            }
            self.apply_into(&p, &mut ap);
            for i in 0..n {
                if !free[i] {
                    ap[i] = 0.0;
                }
            }
            let pap: f64 = p.iter().zip(&ap).map(|(a, b)| a * b).sum();
            if !(pap > 0.0) {
                return Err(Error::SolverDivergence {
                    iterations: it,
                    final_residual: res,
                    history,
                });
            }
            let alpha = rz / pap;
            for i in 0..n {
                xm[i] += alpha * p[i];
                r[i] -= alpha * ap[i];
            }
            for i in 0..n {
                z[i] = r[i] * inv_diag[i];
            }
            let rz_new: f64 = r.iter().zip(&z).map(|(a, b)| a * b).sum();
            let beta = rz_new / rz;
            rz = rz_new;
            for i in 0..n {
                p[i] = z[i] + beta * p[i];
            }
            it += 1;
            res = norm(&r) / b_norm;
            if it.is_power_of_two() || it % 64 == 0 {
                history.push(res);
            }
        }
        for i in 0..n {
            if free[i] {
                x[i] = xm[i];
            }
        }
        Ok(SolveStats { iterations: it, relative_residual: res })
    }
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|a| a * a).sum::<f64>().sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tridiag(n: usize) -> SparseOperator {
        let pattern: Vec<Vec<usize>> = (0..n)
            .map(|i| (i.saturating_sub(1)..(i + 2).min(n)).collect())
            .collect();
        let mut a = SparseOperator::with_pattern(&pattern);
        for i in 0..n {
            a.add(i, i, 2.0);
            if i + 1 < n {
                a.add(i, i + 1, -1.0);
                a.add(i + 1, i, -1.0);
            }
        }
        a
    }

    #[test]
    fn cg_solves_tridiagonal_system() {
        let a = tridiag(50);
        let exact: Vec<f64> = (0..50).map(|i| (i as f64 * 0.3).sin()).collect();
        let b = a.apply(&exact);
        let mut x = vec![0.0; 50];
        let free = vec![true; 50];
        let stats = a.pcg(&b, &mut x, &free, 1e-12, 500).unwrap();
        assert!(stats.relative_residual <= 1e-12);
        for (u, v) in x.iter().zip(&exact) {
            assert!((u - v).abs() < 1e-9);
        }
        assert_eq!(a.asymmetry(), 0.0);
    }

    #[test]
    fn non_convergence_reports_history() {
        let a = tridiag(200);
        let b = vec![1.0; 200];
        let mut x = vec![0.0; 200];
        match a.pcg(&b, &mut x, &vec![true; 200], 1e-14, 3) {
            Err(Error::SolverDivergence { iterations, history, .. }) => {
                assert_eq!(iterations, 3);
                assert!(!history.is_empty());
            }
            other => panic!("expected divergence, got {other:?}"),
        }
    }
}
