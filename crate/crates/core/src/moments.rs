//! Determinantal joint moments: UST edge probabilities, degree-field
//! moments and joint height-one probabilities.
//!
//! Vertex sets may touch the boundary: edges leaving the lattice are ghost
//! edges of the wired graph and their transfer currents use the zero
//! extension of `G_Lambda`.

use std::collections::HashSet;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::greenfn::GreenTable;
use crate::lattice::DirectedEdge;
use crate::linalg::DenseMatrix;
use crate::scalar::Scalar;

/// Largest `|E(B)|` for the signed subset sums.
pub const MAX_SUBSET_EDGES: usize = 24;

/// Above this many free edges the signed subset sum is evaluated as a single
/// determinant instead of term by term.
pub const ENUMERATION_LIMIT: usize = 16;

/// Local observable whose expectation is a determinantal moment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Observable {
    /// `zeta_S`: all edges of `S` are in the UST.
    Zeta { edges: Vec<DirectedEdge> },
    /// `prod_v X_v`: product of the degree-field averages.
    Degree { vertices: Vec<usize> },
    /// `prod_v X_v Y_v`: all vertices have height one.
    HeightOne { vertices: Vec<usize> },
}

impl Observable {
    pub fn moment<T: Scalar>(&self, g: &GreenTable<T>) -> Result<T> {
        match self {
            Observable::Zeta { edges } => zeta_moment(g, edges),
            Observable::Degree { vertices } => x_moment(g, vertices),
            Observable::HeightOne { vertices } => xy_moment(g, vertices),
        }
    }
}

/// `<zeta_S>` normalised, i.e. `det(M)_S`; zero if `S` repeats an edge.
pub fn zeta_moment<T: Scalar>(g: &GreenTable<T>, edges: &[DirectedEdge]) -> Result<T> {
    let lattice = g.lattice();
    let mut seen = HashSet::new();
    for &f in edges {
        if f.tail >= lattice.len() || f.dir >= lattice.coordination() {
            return Err(Error::InvalidInput(format!("edge {f:?} is not in the lattice")));
        }
        if !seen.insert(lattice.unoriented(f)) {
            return Ok(T::zero());
        }
    }
    Ok(g.transfer_matrix(edges)?.determinant())
}

/// `P(S subset of T)` for the wired UST, checked to lie in `[0, 1]`.
pub fn ust_contains_prob(g: &GreenTable<f64>, edges: &[DirectedEdge]) -> Result<f64> {
    let p = zeta_moment(g, edges)?;
    if !(-1e-12..=1.0 + 1e-12).contains(&p) {
        return Err(Error::Consistency(format!("probability {p} outside [0, 1]")));
    }
    Ok(p)
}

fn direction_choices(c: usize, n: usize) -> Vec<Vec<usize>> {
    let total = c.pow(n as u32);
    (0..total)
        .map(|mut k| {
            (0..n)
                .map(|_| {
                    let d = k % c;
                    k /= c;
                    d
                })
                .collect()
        })
        .collect()
}

fn check_vertices<T: Scalar>(g: &GreenTable<T>, vertices: &[usize]) -> Result<()> {
    g.lattice().check_good_set(vertices)
}

/// `E[prod_{v in B} X_v] = c^{-|B|} sum_eta det(M)_{eta(B)}`, the joint
/// moment of the averaged UST degree field.
pub fn x_moment<T: Scalar>(g: &GreenTable<T>, vertices: &[usize]) -> Result<T> {
    check_vertices(g, vertices)?;
    let c = g.lattice().coordination();
    let all: Vec<DirectedEdge> = vertices
        .iter()
        .flat_map(|&v| g.lattice().edge_star(v))
        .collect();
    let m = g.transfer_matrix(&all)?;
    let terms: Vec<T> = direction_choices(c, vertices.len())
        .par_iter()
        .map(|eta| {
            let idx: Vec<usize> = eta.iter().enumerate().map(|(i, &d)| i * c + d).collect();
            m.select(&idx, &idx).determinant()
        })
        .collect();
    let sum = terms.into_iter().fold(T::zero(), |a, b| a + b);
    Ok(sum / T::from_i64(c as i64).powi(vertices.len() as u32))
}

/// `sum_{A subset R} (-1)^{|A|} det(N)_{F + A}` with `F` the first `f`
/// indices of `n` and `R` the rest, term by term.
fn signed_subset_sum_enumerated<T: Scalar>(n: &DenseMatrix<T>, f: usize) -> T {
    let r = n.rows() - f;
    let mut total = T::zero();
    for mask in 0u32..(1 << r) {
        let mut idx: Vec<usize> = (0..f).collect();
        idx.extend((0..r).filter(|k| mask >> k & 1 == 1).map(|k| f + k));
        let d = n.select(&idx, &idx).determinant();
        total = if mask.count_ones() % 2 == 1 { total - d } else { total + d };
    }
    total
}

/// The same sum as one determinant: rows of `R` are replaced by
/// `e_i - N_i`.
fn signed_subset_sum_collapsed<T: Scalar>(n: &DenseMatrix<T>, f: usize) -> T {
    let k = n.rows();
    let m = DenseMatrix::from_fn(k, k, |i, j| {
        if i < f {
            n[(i, j)].clone()
        } else if i == j {
            T::one() - n[(i, j)].clone()
        } else {
            -n[(i, j)].clone()
        }
    });
    m.determinant()
}

fn signed_subset_sum<T: Scalar>(n: &DenseMatrix<T>, f: usize) -> T {
    if n.rows() - f <= ENUMERATION_LIMIT {
        signed_subset_sum_enumerated(n, f)
    } else {
        signed_subset_sum_collapsed(n, f)
    }
}

/// Transfer matrix on `E(V)` ordered with the chosen entries `eta(V)` first.
fn ordered_star_matrix<T: Scalar>(
    g: &GreenTable<T>,
    vertices: &[usize],
    eta: &[usize],
) -> Result<DenseMatrix<T>> {
    let lattice = g.lattice();
    let c = lattice.coordination();
    let mut edges: Vec<DirectedEdge> = vertices
        .iter()
        .zip(eta)
        .map(|(&v, &d)| DirectedEdge::new(v, d))
        .collect();
    for (&v, &d) in vertices.iter().zip(eta) {
        edges.extend((0..c).filter(|&k| k != d).map(|k| DirectedEdge::new(v, k)));
    }
    if edges.len() > MAX_SUBSET_EDGES {
        return Err(Error::Capacity(format!(
            "{} edges exceeds the subset cap {MAX_SUBSET_EDGES}",
            edges.len()
        )));
    }
    g.transfer_matrix(&edges)
}

/// Joint height-one probability by inclusion-exclusion for a fixed choice
/// of one edge per vertex (`eta[i]` is a direction index; default 0).
pub fn height_one_prob<T: Scalar>(
    g: &GreenTable<T>,
    vertices: &[usize],
    eta: Option<&[usize]>,
) -> Result<T> {
    check_vertices(g, vertices)?;
    let default = vec![0; vertices.len()];
    let eta = eta.unwrap_or(&default);
    if eta.len() != vertices.len() || eta.iter().any(|&d| d >= g.lattice().coordination()) {
        return Err(Error::InvalidInput("edge choice does not match the vertex set".into()));
    }
    let m = ordered_star_matrix(g, vertices, eta)?;
    Ok(signed_subset_sum(&m, vertices.len()))
}

/// [`height_one_prob`] with every subset enumerated explicitly.
pub fn height_one_prob_enumerated<T: Scalar>(
    g: &GreenTable<T>,
    vertices: &[usize],
    eta: &[usize],
) -> Result<T> {
    check_vertices(g, vertices)?;
    let m = ordered_star_matrix(g, vertices, eta)?;
    Ok(signed_subset_sum_enumerated(&m, vertices.len()))
}

/// [`height_one_prob`] through the single-determinant form.
pub fn height_one_prob_collapsed<T: Scalar>(
    g: &GreenTable<T>,
    vertices: &[usize],
    eta: &[usize],
) -> Result<T> {
    check_vertices(g, vertices)?;
    let m = ordered_star_matrix(g, vertices, eta)?;
    Ok(signed_subset_sum_collapsed(&m, vertices.len()))
}

/// `E[prod_{v in B} X_v Y_v] = c^{-|B|} sum_eta sum_A (-1)^{|A|}
/// det(M)_{eta(B) + A}`, the joint height-one probability. Sets that are
/// not good have probability zero.
pub fn xy_moment<T: Scalar>(g: &GreenTable<T>, vertices: &[usize]) -> Result<T> {
    let lattice = g.lattice();
    if vertices.iter().any(|&v| v >= lattice.len()) {
        return Err(Error::InvalidInput("vertex out of range".into()));
    }
    if !lattice.is_good_set(vertices) {
        return Ok(T::zero());
    }
    let c = lattice.coordination();
    if c * vertices.len() > MAX_SUBSET_EDGES {
        return Err(Error::Capacity(format!(
            "{} edges exceeds the subset cap {MAX_SUBSET_EDGES}",
            c * vertices.len()
        )));
    }
    let terms: Vec<Result<T>> = direction_choices(c, vertices.len())
        .par_iter()
        .map(|eta| Ok(signed_subset_sum(&ordered_star_matrix(g, vertices, eta)?, vertices.len())))
        .collect();
    let mut sum = T::zero();
    for t in terms {
        sum = sum + t?;
    }
    Ok(sum / T::from_i64(c as i64).powi(vertices.len() as u32))
}
