//! Sparse Dirichlet Laplacian solves: CSR storage, incomplete Cholesky
//! preconditioning and preconditioned conjugate gradients.

use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::lattice::FiniteLattice;

/// Compressed sparse row matrix with sorted column indices.
#[derive(Debug, Clone)]
pub struct CsrMatrix {
    n: usize,
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<f64>,
}

impl CsrMatrix {
    /// `-Delta_Lambda` of a lattice.
    pub fn laplacian(lattice: &FiniteLattice) -> Self {
        let n = lattice.len();
        let c = lattice.coordination() as f64;
        let mut row_ptr = Vec::with_capacity(n + 1);
        let mut cols = Vec::new();
        let mut vals = Vec::new();
        row_ptr.push(0);
        for v in 0..n {
            let mut row: Vec<(usize, f64)> = lattice.lattice_neighbors(v).map(|w| (w, -1.0)).collect();
            row.push((v, c));
            row.sort_by_key(|e| e.0);
            for (j, x) in row {
                cols.push(j);
                vals.push(x);
            }
            row_ptr.push(cols.len());
        }
        Self {
            n,
            row_ptr,
            cols,
            vals,
        }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    fn row(&self, i: usize) -> (&[usize], &[f64]) {
        let r = self.row_ptr[i]..self.row_ptr[i + 1];
        (&self.cols[r.clone()], &self.vals[r])
    }

    pub fn apply(&self, x: &[f64], y: &mut [f64]) {
        for (i, yi) in y.iter_mut().enumerate() {
            let (c, v) = self.row(i);
            *yi = c.iter().zip(v).map(|(&j, &a)| a * x[j]).sum();
        }
    }
}

/// Incomplete Cholesky factor `L` with the sparsity of the lower triangle.
#[derive(Debug, Clone)]
pub struct IncompleteCholesky {
    n: usize,
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<f64>,
}

impl IncompleteCholesky {
    pub fn new(a: &CsrMatrix) -> Result<Self> {
        let n = a.dim();
        let mut row_ptr = vec![0];
        let mut cols = Vec::new();
        let mut vals: Vec<f64> = Vec::new();
        for i in 0..n {
            let (ac, av) = a.row(i);
            let start = cols.len();
            for (&j, &x) in ac.iter().zip(av) {
                if j > i {
                    break;
                }
                cols.push(j);
                vals.push(x);
            }
            let end = cols.len();
            for p in start..end {
                let k = cols[p];
                if k == i {
                    let s: f64 = vals[start..p].iter().map(|x| x * x).sum();
                    let d = vals[p] - s;
                    if d <= 0.0 {
                        return Err(Error::Singular);
                    }
                    vals[p] = d.sqrt();
                    continue;
                }
                // sum over common columns j < k of L[i][j] L[k][j]
                let (ks, ke) = (row_ptr[k], row_ptr[k + 1]);
                let mut s = 0.0;
                let (mut a_idx, mut b_idx) = (start, ks);
                while a_idx < p && b_idx < ke - 1 {
                    match cols[a_idx].cmp(&cols[b_idx]) {
                        std::cmp::Ordering::Less => a_idx += 1,
                        std::cmp::Ordering::Greater => b_idx += 1,
                        std::cmp::Ordering::Equal => {
                            s += vals[a_idx] * vals[b_idx];
                            a_idx += 1;
                            b_idx += 1;
                        }
                    }
                }
                vals[p] = (vals[p] - s) / vals[ke - 1];
            }
            row_ptr.push(end);
        }
        Ok(Self {
            n,
            row_ptr,
            cols,
            vals,
        })
    }

    /// Solves `L L^T z = r`.
    pub fn apply(&self, r: &[f64], z: &mut [f64]) {
        z.copy_from_slice(r);
        for i in 0..self.n {
            let (s, e) = (self.row_ptr[i], self.row_ptr[i + 1]);
            let mut acc = z[i];
            for p in s..e - 1 {
                acc -= self.vals[p] * z[self.cols[p]];
            }
            z[i] = acc / self.vals[e - 1];
        }
        for i in (0..self.n).rev() {
            let (s, e) = (self.row_ptr[i], self.row_ptr[i + 1]);
            z[i] /= self.vals[e - 1];
            let zi = z[i];
            for p in s..e - 1 {
                z[self.cols[p]] -= self.vals[p] * zi;
            }
        }
    }
}

/// Preconditioned conjugate-gradient solver for a fixed lattice.
#[derive(Debug)]
pub struct LaplacianSolver {
    matrix: CsrMatrix,
    precond: IncompleteCholesky,
    tolerance: f64,
    max_iterations: usize,
}

impl LaplacianSolver {
    pub fn new(lattice: &FiniteLattice) -> Result<Self> {
        let matrix = CsrMatrix::laplacian(lattice);
        let precond = IncompleteCholesky::new(&matrix)?;
        Ok(Self {
            max_iterations: 20 * matrix.dim() + 100,
            matrix,
            precond,
            tolerance: 1e-13,
        })
    }

    /// Relative residual target.
    pub fn with_tolerance(mut self, tol: f64) -> Self {
        self.tolerance = tol;
        self
    }

    pub fn dim(&self) -> usize {
        self.matrix.dim()
    }

    pub fn solve(&self, b: &[f64]) -> Result<Vec<f64>> {
        let n = self.dim();
        let bnorm = b.iter().map(|x| x * x).sum::<f64>().sqrt();
        let mut x = vec![0.0; n];
        if bnorm == 0.0 {
            return Ok(x);
        }
        let mut r = b.to_vec();
        let mut z = vec![0.0; n];
        self.precond.apply(&r, &mut z);
        let mut p = z.clone();
        let mut ap = vec![0.0; n];
        let mut rz: f64 = r.iter().zip(&z).map(|(a, b)| a * b).sum();
        for it in 0..self.max_iterations {
            self.matrix.apply(&p, &mut ap);
            let alpha = rz / p.iter().zip(&ap).map(|(a, b)| a * b).sum::<f64>();
            for i in 0..n {
                x[i] += alpha * p[i];
                r[i] -= alpha * ap[i];
            }
            let rnorm = r.iter().map(|x| x * x).sum::<f64>().sqrt();
            if rnorm <= self.tolerance * bnorm {
                return Ok(x);
            }
            if it + 1 == self.max_iterations {
                return Err(Error::NoConvergence {
                    iterations: it + 1,
                    residual: rnorm / bnorm,
                });
            }
            self.precond.apply(&r, &mut z);
            let rz_new: f64 = r.iter().zip(&z).map(|(a, b)| a * b).sum();
            let beta = rz_new / rz;
            rz = rz_new;
            for i in 0..n {
                p[i] = z[i] + beta * p[i];
            }
        }
        unreachable!("loop returns on the last iteration")
    }

    /// Column `G(., source)`.
    pub fn green_column(&self, source: usize) -> Result<Vec<f64>> {
        let mut e = vec![0.0; self.dim()];
        e[source] = 1.0;
        self.solve(&e)
    }

    /// Columns for several sources, solved in parallel.
    pub fn green_columns(&self, sources: &[usize]) -> Result<Vec<Vec<f64>>> {
        sources.par_iter().map(|&s| self.green_column(s)).collect()
    }

    /// Max-norm residual of `-Delta x - b`.
    pub fn residual(&self, x: &[f64], b: &[f64]) -> f64 {
        let mut ax = vec![0.0; self.dim()];
        self.matrix.apply(x, &mut ax);
        ax.iter().zip(b).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max)
    }
}

fn cache() -> &'static Mutex<HashMap<u64, Arc<LaplacianSolver>>> {
    static CACHE: OnceLock<Mutex<HashMap<u64, Arc<LaplacianSolver>>>> = OnceLock::new();
    CACHE.get_or_init(|| Mutex::new(HashMap::new()))
}

/// Solver for `lattice`, shared across calls on the same vertex set.
pub fn cached_solver(lattice: &FiniteLattice) -> Result<Arc<LaplacianSolver>> {
    let key = lattice.fingerprint();
    if let Some(s) = cache().lock().expect("solver cache poisoned").get(&key) {
        if s.dim() == lattice.len() {
            return Ok(Arc::clone(s));
        }
    }
    let solver = Arc::new(LaplacianSolver::new(lattice)?);
    let mut guard = cache().lock().expect("solver cache poisoned");
    if guard.len() > 16 {
        guard.clear();
    }
    guard.insert(key, Arc::clone(&solver));
    Ok(solver)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::FiniteLattice;

    #[test]
    fn cg_solves_laplacian() {
        let l = FiniteLattice::hypercubic_box(&[20, 15]).unwrap();
        let s = LaplacianSolver::new(&l).unwrap();
        let b: Vec<f64> = (0..l.len()).map(|i| ((i * 7) % 11) as f64 - 5.0).collect();
        let x = s.solve(&b).unwrap();
        assert!(s.residual(&x, &b) < 1e-10);
    }

    #[test]
    fn single_vertex_green() {
        let l = FiniteLattice::hypercubic_box(&[1, 1]).unwrap();
        let s = LaplacianSolver::new(&l).unwrap();
        assert!((s.green_column(0).unwrap()[0] - 0.25).abs() < 1e-15);
    }

    #[test]
    fn ic_is_exact_on_a_path() {
        // tridiagonal: incomplete factor equals the full one
        let l = FiniteLattice::hypercubic_box(&[6]).unwrap();
        let a = CsrMatrix::laplacian(&l);
        let ic = IncompleteCholesky::new(&a).unwrap();
        let b = vec![1.0, 0.0, 2.0, 0.0, 0.0, -1.0];
        let mut z = vec![0.0; 6];
        ic.apply(&b, &mut z);
        let mut az = vec![0.0; 6];
        a.apply(&z, &mut az);
        for (u, v) in az.iter().zip(&b) {
            assert!((u - v).abs() < 1e-12);
        }
    }

    #[test]
    fn cache_reuses_solver() {
        let l = FiniteLattice::hypercubic_box(&[4, 4]).unwrap();
        let a = cached_solver(&l).unwrap();
        let b = cached_solver(&l).unwrap();
        assert!(Arc::ptr_eq(&a, &b));
    }
}
