//! Green's functions: finite-volume Dirichlet tables, infinite-volume kernels
//! and local transfer-current limits, and the continuum disk Green's function.

pub mod continuum;
pub mod kernel;
pub mod sparse;

use std::collections::HashMap;
use std::io::Write;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::lattice::{DirectedEdge, FiniteLattice};
use crate::linalg::DenseMatrix;
use crate::scalar::Scalar;

pub use continuum::DiskGreen;
pub use kernel::{InfiniteGreen, KernelEvaluator, MbarMode};
pub use sparse::{cached_solver, LaplacianSolver};

/// Largest lattice inverted densely.
pub const DENSE_LIMIT: usize = 4000;

/// Lattice size above which [`GreenTable::for_vertices`] switches to sparse
/// column solves.
pub const AUTO_DENSE_LIMIT: usize = 900;

#[derive(Debug, Clone)]
enum Storage<T> {
    Dense(DenseMatrix<T>),
    Columns(HashMap<usize, Vec<T>>),
}

/// Dirichlet Green's function `G_Lambda`, zero-extended off the lattice.
#[derive(Debug, Clone)]
pub struct GreenTable<T> {
    lattice: Arc<FiniteLattice>,
    storage: Storage<T>,
}

impl<T: Scalar> GreenTable<T> {
    /// Full table by dense inversion of `-Delta_Lambda`.
    pub fn dense(lattice: Arc<FiniteLattice>) -> Result<Self> {
        if lattice.len() > DENSE_LIMIT {
            return Err(Error::Capacity(format!(
                "{} vertices exceeds the dense limit {DENSE_LIMIT}; use column solves",
                lattice.len()
            )));
        }
        let g = lattice.laplacian::<T>().inverse()?;
        Ok(Self {
            lattice,
            storage: Storage::Dense(g),
        })
    }

    pub fn lattice(&self) -> &FiniteLattice {
        &self.lattice
    }

    pub fn lattice_arc(&self) -> Arc<FiniteLattice> {
        Arc::clone(&self.lattice)
    }

    pub fn is_dense(&self) -> bool {
        matches!(self.storage, Storage::Dense(_))
    }

    /// `G(u, v)` for lattice vertices.
    pub fn value(&self, u: usize, v: usize) -> Result<T> {
        match &self.storage {
            Storage::Dense(g) => Ok(g[(u, v)].clone()),
            Storage::Columns(cols) => cols
                .get(&v)
                .map(|c| c[u].clone())
                .or_else(|| cols.get(&u).map(|c| c[v].clone()))
                .ok_or(Error::MissingColumn(v)),
        }
    }

    /// `G` with exterior sites (`None`) mapped to zero.
    pub fn site_value(&self, u: Option<usize>, v: Option<usize>) -> Result<T> {
        match (u, v) {
            (Some(u), Some(v)) => self.value(u, v),
            _ => Ok(T::zero()),
        }
    }

    /// `M(f, g) = G(f+,g+) - G(f+,g-) - G(f-,g+) + G(f-,g-)`.
    pub fn double_gradient(&self, f: DirectedEdge, g: DirectedEdge) -> Result<T> {
        let (fp, fm) = (self.lattice.tip(f), Some(f.tail));
        let (gp, gm) = (self.lattice.tip(g), Some(g.tail));
        Ok(self.site_value(fp, gp)? - self.site_value(fp, gm)? - self.site_value(fm, gp)?
            + self.site_value(fm, gm)?)
    }

    /// Transfer matrix `M_S` with rows and columns in the order of `edges`.
    pub fn transfer_matrix(&self, edges: &[DirectedEdge]) -> Result<DenseMatrix<T>> {
        let mut m = DenseMatrix::zeros(edges.len(), edges.len());
        for (i, &f) in edges.iter().enumerate() {
            for (j, &g) in edges.iter().enumerate().skip(i) {
                let x = self.double_gradient(f, g)?;
                m[(j, i)] = x.clone();
                m[(i, j)] = x;
            }
        }
        Ok(m)
    }
}

impl GreenTable<f64> {
    /// Columns `G(., s)` for the given sources via sparse conjugate gradients.
    pub fn columns(lattice: Arc<FiniteLattice>, sources: &[usize]) -> Result<Self> {
        let solver = cached_solver(&lattice)?;
        let mut srcs: Vec<usize> = sources.to_vec();
        srcs.sort_unstable();
        srcs.dedup();
        if let Some(&s) = srcs.iter().find(|&&s| s >= lattice.len()) {
            return Err(Error::InvalidInput(format!("source {s} out of range")));
        }
        let cols = solver.green_columns(&srcs)?;
        Ok(Self {
            lattice,
            storage: Storage::Columns(srcs.into_iter().zip(cols).collect()),
        })
    }

    /// Table sufficient for transfer currents on the edges at `vertices`:
    /// dense for small lattices, otherwise the columns of their closed
    /// neighborhoods.
    pub fn for_vertices(lattice: Arc<FiniteLattice>, vertices: &[usize]) -> Result<Self> {
        if lattice.len() <= AUTO_DENSE_LIMIT {
            return Self::dense(lattice);
        }
        let sources: Vec<usize> = vertices
            .iter()
            .flat_map(|&v| lattice.closed_neighborhood(v))
            .collect();
        Self::columns(lattice, &sources)
    }

    /// Writes `u,v,value` rows for every stored pair.
    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "#schema=green_table@1")?;
        writeln!(out, "u,v,value")?;
        match &self.storage {
            Storage::Dense(g) => {
                for u in 0..g.rows() {
                    for v in 0..g.cols() {
                        writeln!(out, "{u},{v},{:.17e}", g[(u, v)])?;
                    }
                }
            }
            Storage::Columns(cols) => {
                let mut keys: Vec<_> = cols.keys().copied().collect();
                keys.sort_unstable();
                for v in keys {
                    for (u, x) in cols[&v].iter().enumerate() {
                        writeln!(out, "{u},{v},{x:.17e}")?;
                    }
                }
            }
        }
        Ok(())
    }
}

/// Dense Dirichlet Green's function of `lattice`.
pub fn dirichlet_green<T: Scalar>(lattice: &FiniteLattice) -> Result<GreenTable<T>> {
    GreenTable::dense(Arc::new(lattice.clone()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::LatticeKind;
    use crate::scalar::Rational;

    #[test]
    fn one_and_two_vertices() {
        let l = FiniteLattice::hypercubic_box(&[1, 1]).unwrap();
        let g = dirichlet_green::<Rational>(&l).unwrap();
        assert_eq!(g.value(0, 0).unwrap(), Rational::from_ratio(1, 4));
        let f = DirectedEdge::new(0, 0);
        assert_eq!(g.double_gradient(f, f).unwrap(), Rational::from_ratio(1, 4));

        let l2 = FiniteLattice::hypercubic_box(&[2, 1]).unwrap();
        let g2 = dirichlet_green::<Rational>(&l2).unwrap();
        assert_eq!(g2.value(0, 0).unwrap(), Rational::from_ratio(4, 15));
        assert_eq!(g2.value(0, 1).unwrap(), Rational::from_ratio(1, 15));
    }

    #[test]
    fn residual_3x3() {
        let l = FiniteLattice::hypercubic_box(&[3, 3]).unwrap();
        let g = dirichlet_green::<f64>(&l).unwrap();
        let a = l.laplacian::<f64>();
        for i in 0..9 {
            for j in 0..9 {
                let s: f64 = (0..9).map(|k| a[(i, k)] * g.value(k, j).unwrap()).sum();
                let e = if i == j { 1.0 } else { 0.0 };
                assert!((s - e).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn transfer_symmetry_and_reversal() {
        let l = FiniteLattice::hypercubic_box(&[4, 4]).unwrap();
        let g = dirichlet_green::<f64>(&l).unwrap();
        let f = DirectedEdge::new(5, 0);
        let h = DirectedEdge::new(10, 1);
        let m1 = g.double_gradient(f, h).unwrap();
        assert!((m1 - g.double_gradient(h, f).unwrap()).abs() < 1e-15);
        let r = l.reverse(f).unwrap();
        assert!((m1 + g.double_gradient(r, h).unwrap()).abs() < 1e-15);
    }

    #[test]
    fn sparse_columns_match_dense() {
        let l = Arc::new(FiniteLattice::hypercubic_box(&[9, 7]).unwrap());
        let d = GreenTable::<f64>::dense(Arc::clone(&l)).unwrap();
        let c = GreenTable::columns(Arc::clone(&l), &[3, 20]).unwrap();
        for u in 0..l.len() {
            assert!((d.value(u, 20).unwrap() - c.value(u, 20).unwrap()).abs() < 1e-11);
            assert!((d.value(3, u).unwrap() - c.value(3, u).unwrap()).abs() < 1e-11);
        }
        assert_eq!(c.value(0, 1), Err(Error::MissingColumn(1)));
    }

    #[test]
    fn triangular_table() {
        let l = FiniteLattice::triangular_patch(0).unwrap();
        assert_eq!(l.kind(), LatticeKind::Triangular);
        let g = dirichlet_green::<Rational>(&l).unwrap();
        assert_eq!(g.value(0, 0).unwrap(), Rational::from_ratio(1, 6));
    }
}
