//! Finite subgraphs of `Z^d` and of the triangular lattice, wired to a ghost
//! vertex.
//!
//! Every vertex of a finite lattice has the full coordination number in the
//! wired graph: a direction whose tip leaves the lattice is a ghost edge, and
//! distinct directions give distinct (parallel) ghost edges.

use std::collections::{HashMap, HashSet, VecDeque};
use std::hash::{Hash, Hasher};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::DenseMatrix;
use crate::scalar::Scalar;

/// Infinite lattice underlying a finite patch.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum LatticeKind {
    Hypercubic { dim: usize },
    Triangular,
}

const TRIANGULAR_OFFSETS: [[i64; 2]; 6] = [[1, 0], [0, 1], [-1, 1], [-1, 0], [0, -1], [1, -1]];

impl LatticeKind {
    pub fn square() -> Self {
        LatticeKind::Hypercubic { dim: 2 }
    }

    /// Dimension of the coordinate vectors.
    pub fn dim(&self) -> usize {
        match self {
            LatticeKind::Hypercubic { dim } => *dim,
            LatticeKind::Triangular => 2,
        }
    }

    pub fn coordination(&self) -> usize {
        match self {
            LatticeKind::Hypercubic { dim } => 2 * dim,
            LatticeKind::Triangular => 6,
        }
    }

    /// Integer offset of direction `dir`. Hypercubic directions are
    /// `e_1..e_d, -e_1..-e_d`; triangular ones are the six unit vectors in
    /// counter-clockwise order, in axial coordinates.
    pub fn offset(&self, dir: usize) -> Vec<i64> {
        match self {
            LatticeKind::Hypercubic { dim } => {
                let mut o = vec![0; *dim];
                if dir < *dim {
                    o[dir] = 1;
                } else {
                    o[dir - dim] = -1;
                }
                o
            }
            LatticeKind::Triangular => TRIANGULAR_OFFSETS[dir].to_vec(),
        }
    }

    pub fn opposite(&self, dir: usize) -> usize {
        let c = self.coordination();
        (dir + c / 2) % c
    }

    /// Euclidean embedding of a lattice point.
    pub fn embed(&self, p: &[i64]) -> Vec<f64> {
        match self {
            LatticeKind::Hypercubic { .. } => p.iter().map(|&x| x as f64).collect(),
            LatticeKind::Triangular => vec![
                p[0] as f64 + 0.5 * p[1] as f64,
                p[1] as f64 * 3f64.sqrt() / 2.0,
            ],
        }
    }

    /// Graph distance from the origin on the triangular lattice (axial).
    pub fn triangular_norm(p: &[i64]) -> i64 {
        (p[0].abs() + p[1].abs() + (p[0] + p[1]).abs()) / 2
    }

    pub fn label(&self) -> String {
        match self {
            LatticeKind::Hypercubic { dim } => format!("z{dim}"),
            LatticeKind::Triangular => "tri".into(),
        }
    }
}

/// Edge leaving `tail` in direction `dir`; its tip may be the ghost.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct DirectedEdge {
    pub tail: usize,
    pub dir: usize,
}

impl DirectedEdge {
    pub fn new(tail: usize, dir: usize) -> Self {
        Self { tail, dir }
    }
}

/// How a lattice was generated, for reporting.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "shape", rename_all = "snake_case")]
pub enum Shape {
    Box { sides: Vec<usize> },
    Patch { radius: usize },
    Points,
}

/// Connected finite subgraph together with its wiring to the ghost.
#[derive(Debug, Clone)]
pub struct FiniteLattice {
    kind: LatticeKind,
    shape: Shape,
    points: Vec<Vec<i64>>,
    index: HashMap<Vec<i64>, usize>,
    neighbors: Vec<Vec<Option<usize>>>,
}

/// Serializable summary of a lattice.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LatticeDescriptor {
    pub lattice: LatticeKind,
    #[serde(flatten)]
    pub shape: Shape,
    pub vertices: usize,
}

impl FiniteLattice {
    /// Builds a lattice from an arbitrary point set; points are put in
    /// row-major order (last coordinate slowest).
    pub fn from_points(kind: LatticeKind, points: impl IntoIterator<Item = Vec<i64>>) -> Result<Self> {
        Self::build(kind, Shape::Points, points.into_iter().collect())
    }

    fn build(kind: LatticeKind, shape: Shape, mut points: Vec<Vec<i64>>) -> Result<Self> {
        if let LatticeKind::Hypercubic { dim } = kind {
            if dim == 0 {
                return Err(Error::InvalidInput("dimension must be positive".into()));
            }
        }
        if points.is_empty() {
            return Err(Error::InvalidInput("empty lattice".into()));
        }
        let d = kind.dim();
        if let Some(p) = points.iter().find(|p| p.len() != d) {
            return Err(Error::InvalidInput(format!("point {p:?} has wrong dimension")));
        }
        points.sort_by(|a, b| a.iter().rev().cmp(b.iter().rev()));
        points.dedup();
        let index: HashMap<Vec<i64>, usize> =
            points.iter().enumerate().map(|(i, p)| (p.clone(), i)).collect();
        let c = kind.coordination();
        let offsets: Vec<Vec<i64>> = (0..c).map(|k| kind.offset(k)).collect();
        let neighbors = points
            .iter()
            .map(|p| {
                offsets
                    .iter()
                    .map(|o| {
                        let q: Vec<i64> = p.iter().zip(o).map(|(a, b)| a + b).collect();
                        index.get(&q).copied()
                    })
                    .collect()
            })
            .collect();
        let lattice = Self {
            kind,
            shape,
            points,
            index,
            neighbors,
        };
        if !lattice.is_connected() {
            return Err(Error::InvalidInput("lattice is not connected".into()));
        }
        Ok(lattice)
    }

    /// Box `{0..s_1-1} x ... x {0..s_d-1}` in `Z^d`.
    pub fn hypercubic_box(sides: &[usize]) -> Result<Self> {
        if sides.is_empty() || sides.contains(&0) {
            return Err(Error::InvalidInput(format!("invalid box sides {sides:?}")));
        }
        let total: usize = sides.iter().product();
        let mut points = Vec::with_capacity(total);
        for mut k in 0..total {
            let mut p = Vec::with_capacity(sides.len());
            for &s in sides {
                p.push((k % s) as i64);
                k /= s;
            }
            points.push(p);
        }
        Self::build(
            LatticeKind::Hypercubic { dim: sides.len() },
            Shape::Box {
                sides: sides.to_vec(),
            },
            points,
        )
    }

    /// Triangular patch of all points within graph distance `radius` of the
    /// origin.
    pub fn triangular_patch(radius: usize) -> Result<Self> {
        let r = radius as i64;
        let mut points = Vec::new();
        for a in -r..=r {
            for b in -r..=r {
                if LatticeKind::triangular_norm(&[a, b]) <= r {
                    points.push(vec![a, b]);
                }
            }
        }
        Self::build(LatticeKind::Triangular, Shape::Patch { radius }, points)
    }

    pub fn kind(&self) -> LatticeKind {
        self.kind
    }

    pub fn descriptor(&self) -> LatticeDescriptor {
        LatticeDescriptor {
            lattice: self.kind,
            shape: self.shape.clone(),
            vertices: self.len(),
        }
    }

    pub fn coordination(&self) -> usize {
        self.kind.coordination()
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn point(&self, v: usize) -> &[i64] {
        &self.points[v]
    }

    pub fn points(&self) -> &[Vec<i64>] {
        &self.points
    }

    pub fn vertex_at(&self, p: &[i64]) -> Option<usize> {
        self.index.get(p).copied()
    }

    /// Looks up a list of points, failing on any point outside the lattice.
    pub fn vertices_at(&self, points: &[Vec<i64>]) -> Result<Vec<usize>> {
        points
            .iter()
            .map(|p| {
                self.vertex_at(p)
                    .ok_or_else(|| Error::InvalidInput(format!("point {p:?} is outside the lattice")))
            })
            .collect()
    }

    /// Neighbor of `v` in direction `dir`, `None` for the ghost.
    pub fn neighbor(&self, v: usize, dir: usize) -> Option<usize> {
        self.neighbors[v][dir]
    }

    pub fn tip(&self, f: DirectedEdge) -> Option<usize> {
        self.neighbors[f.tail][f.dir]
    }

    /// The same undirected edge traversed backwards, if both ends are in the
    /// lattice.
    pub fn reverse(&self, f: DirectedEdge) -> Option<DirectedEdge> {
        self.tip(f)
            .map(|w| DirectedEdge::new(w, self.kind.opposite(f.dir)))
    }

    /// Orientation-independent key of the underlying wired-graph edge.
    pub fn unoriented(&self, f: DirectedEdge) -> DirectedEdge {
        match self.reverse(f) {
            Some(r) if r < f => r,
            _ => f,
        }
    }

    /// All `coordination` edges leaving `v`, in direction order.
    pub fn edge_star(&self, v: usize) -> Vec<DirectedEdge> {
        (0..self.coordination()).map(|k| DirectedEdge::new(v, k)).collect()
    }

    /// Every edge of the wired graph once, as its [`FiniteLattice::unoriented`]
    /// key, sorted.
    pub fn wired_edges(&self) -> Vec<DirectedEdge> {
        let mut out: Vec<DirectedEdge> = (0..self.len())
            .flat_map(|v| self.edge_star(v))
            .filter(|&f| self.unoriented(f) == f)
            .collect();
        out.sort();
        out
    }

    /// Lattice neighbors of `v` (ghost excluded).
    pub fn lattice_neighbors(&self, v: usize) -> impl Iterator<Item = usize> + '_ {
        self.neighbors[v].iter().flatten().copied()
    }

    /// Number of ghost edges at `v`.
    pub fn ghost_degree(&self, v: usize) -> usize {
        self.neighbors[v].iter().filter(|n| n.is_none()).count()
    }

    pub fn is_interior(&self, v: usize) -> bool {
        self.ghost_degree(v) == 0
    }

    /// `v` together with its lattice neighbors.
    pub fn closed_neighborhood(&self, v: usize) -> Vec<usize> {
        let mut out = vec![v];
        out.extend(self.lattice_neighbors(v));
        out
    }

    fn is_connected(&self) -> bool {
        let mut seen = vec![false; self.len()];
        let mut queue = VecDeque::from([0usize]);
        seen[0] = true;
        let mut count = 1;
        while let Some(v) = queue.pop_front() {
            for w in self.lattice_neighbors(v) {
                if !seen[w] {
                    seen[w] = true;
                    count += 1;
                    queue.push_back(w);
                }
            }
        }
        count == self.len()
    }

    /// `-Delta_Lambda` with Dirichlet (ghost) boundary.
    pub fn laplacian<T: Scalar>(&self) -> DenseMatrix<T> {
        let n = self.len();
        let c = T::from_i64(self.coordination() as i64);
        let mut a = DenseMatrix::zeros(n, n);
        for v in 0..n {
            a[(v, v)] = c.clone();
            for w in self.lattice_neighbors(v) {
                a[(v, w)] = a[(v, w)].clone() - T::one();
            }
        }
        a
    }

    /// `-Delta^g` on the wired graph; the ghost is index `len()` and every
    /// row sums to zero.
    pub fn wired_laplacian<T: Scalar>(&self) -> DenseMatrix<T> {
        let n = self.len();
        let mut a = DenseMatrix::zeros(n + 1, n + 1);
        let inner = self.laplacian::<T>();
        for i in 0..n {
            for j in 0..n {
                a[(i, j)] = inner[(i, j)].clone();
            }
            let k = T::from_i64(self.ghost_degree(i) as i64);
            a[(i, n)] = -k.clone();
            a[(n, i)] = -k.clone();
            a[(n, n)] = a[(n, n)].clone() + k;
        }
        a
    }

    /// Checks that `vertices` are distinct, pairwise non-adjacent, and that
    /// every other vertex reaches the ghost avoiding them.
    pub fn check_good_set(&self, vertices: &[usize]) -> Result<()> {
        let set: HashSet<usize> = vertices.iter().copied().collect();
        if set.len() != vertices.len() {
            return Err(Error::NotGoodSet("repeated vertex".into()));
        }
        if let Some(&v) = vertices.iter().find(|&&v| v >= self.len()) {
            return Err(Error::NotGoodSet(format!("vertex {v} out of range")));
        }
        for &v in vertices {
            if self.lattice_neighbors(v).any(|w| set.contains(&w)) {
                return Err(Error::NotGoodSet(format!(
                    "{:?} has a neighbor in the set",
                    self.point(v)
                )));
            }
        }
        let mut reach = vec![false; self.len()];
        let mut queue = VecDeque::new();
        for v in 0..self.len() {
            if !set.contains(&v) && self.ghost_degree(v) > 0 {
                reach[v] = true;
                queue.push_back(v);
            }
        }
        while let Some(v) = queue.pop_front() {
            for w in self.lattice_neighbors(v) {
                if !reach[w] && !set.contains(&w) {
                    reach[w] = true;
                    queue.push_back(w);
                }
            }
        }
        match (0..self.len()).find(|v| !reach[*v] && !set.contains(v)) {
            Some(v) => Err(Error::NotGoodSet(format!(
                "{:?} is cut off from the ghost",
                self.point(v)
            ))),
            None => Ok(()),
        }
    }

    pub fn is_good_set(&self, vertices: &[usize]) -> bool {
        self.check_good_set(vertices).is_ok()
    }

    /// Hash of the kind and vertex set, used to key solver caches.
    pub fn fingerprint(&self) -> u64 {
        let mut h = std::collections::hash_map::DefaultHasher::new();
        self.kind.hash(&mut h);
        self.points.hash(&mut h);
        h.finish()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::Rational;

    #[test]
    fn box_order_and_neighbors() {
        let l = FiniteLattice::hypercubic_box(&[3, 2]).unwrap();
        assert_eq!(l.len(), 6);
        assert_eq!(l.point(1), &[1, 0]);
        assert_eq!(l.point(3), &[0, 1]);
        assert_eq!(l.neighbor(0, 0), Some(1));
        assert_eq!(l.neighbor(0, 2), None);
        assert_eq!(l.ghost_degree(0), 2);
        assert_eq!(l.ghost_degree(1), 1);
    }

    #[test]
    fn laplacian_rows() {
        let l = FiniteLattice::hypercubic_box(&[3, 3]).unwrap();
        let a = l.laplacian::<Rational>();
        let center = l.vertex_at(&[1, 1]).unwrap();
        assert_eq!(a[(center, center)], Rational::from_i64(4));
        let w = l.wired_laplacian::<Rational>();
        for i in 0..=l.len() {
            let s = (0..=l.len()).fold(Rational::from_i64(0), |acc, j| acc + w[(i, j)].clone());
            assert_eq!(s, Rational::from_i64(0));
        }
    }

    #[test]
    fn triangular_patch_sizes() {
        assert_eq!(FiniteLattice::triangular_patch(1).unwrap().len(), 7);
        assert_eq!(FiniteLattice::triangular_patch(5).unwrap().len(), 91);
        let l = FiniteLattice::triangular_patch(1).unwrap();
        let o = l.vertex_at(&[0, 0]).unwrap();
        assert!(l.is_interior(o));
        assert_eq!(l.lattice_neighbors(o).count(), 6);
    }

    #[test]
    fn good_sets() {
        let l = FiniteLattice::hypercubic_box(&[3, 3]).unwrap();
        let c = l.vertex_at(&[1, 1]).unwrap();
        let ring: Vec<usize> = [[0, 1], [1, 0], [2, 1], [1, 2]]
            .iter()
            .map(|p| l.vertex_at(p).unwrap())
            .collect();
        assert!(l.is_good_set(&[c]));
        assert!(!l.is_good_set(&[c, ring[0]]));
        let corners: Vec<usize> = [[0, 0], [2, 2]].iter().map(|p| l.vertex_at(p).unwrap()).collect();
        assert!(l.is_good_set(&corners));
        // a diagonal ring isolates nothing on the wired graph
        let l5 = FiniteLattice::hypercubic_box(&[5, 5]).unwrap();
        let diamond: Vec<usize> = [[2, 1], [1, 2], [3, 2], [2, 3]]
            .iter()
            .map(|p| l5.vertex_at(p).unwrap())
            .collect();
        assert!(matches!(l5.check_good_set(&diamond), Err(Error::NotGoodSet(_))));
    }

    #[test]
    fn unoriented_keys() {
        let l = FiniteLattice::hypercubic_box(&[2, 1]).unwrap();
        let f = DirectedEdge::new(0, 0);
        let r = l.reverse(f).unwrap();
        assert_eq!(r, DirectedEdge::new(1, 2));
        assert_eq!(l.unoriented(f), l.unoriented(r));
        let g = DirectedEdge::new(0, 2);
        assert_eq!(l.unoriented(g), g);
        // one internal edge and six ghost edges
        assert_eq!(l.wired_edges().len(), 7);
    }

    #[test]
    fn disconnected_rejected() {
        let r = FiniteLattice::from_points(LatticeKind::square(), vec![vec![0, 0], vec![2, 0]]);
        assert!(r.is_err());
    }
}
