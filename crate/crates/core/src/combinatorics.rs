//! Set partitions, permutations, Stirling numbers and the connected / bare
//! permutations of edge sets used by the cumulant expansions.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::{DirectedEdge, FiniteLattice, LatticeKind};
use crate::scalar::Scalar;

/// Largest ground set accepted by [`partitions`].
pub const MAX_PARTITION_SIZE: usize = 12;

/// Partition of `{0, ..., n-1}` into nonempty blocks, each sorted, blocks
/// ordered by smallest element.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Partition {
    blocks: Vec<Vec<usize>>,
}

impl Partition {
    /// From a restricted growth string (block label per element).
    pub fn from_labels(labels: &[usize]) -> Self {
        let k = labels.iter().max().map_or(0, |m| m + 1);
        let mut blocks = vec![Vec::new(); k];
        for (i, &b) in labels.iter().enumerate() {
            blocks[b].push(i);
        }
        blocks.retain(|b| !b.is_empty());
        blocks.sort();
        Self { blocks }
    }

    pub fn blocks(&self) -> &[Vec<usize>] {
        &self.blocks
    }

    pub fn len(&self) -> usize {
        self.blocks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.blocks.is_empty()
    }

    /// `self <= other`: every block of `self` lies inside a block of `other`.
    pub fn refines(&self, other: &Partition) -> bool {
        let mut label = HashMap::new();
        for (i, b) in other.blocks.iter().enumerate() {
            for &x in b {
                label.insert(x, i);
            }
        }
        self.blocks.iter().all(|b| {
            let first = label.get(&b[0]);
            first.is_some() && b.iter().all(|x| label.get(x) == first)
        })
    }
}

/// Iterator over all partitions of `{0..n-1}` via restricted growth strings.
#[derive(Debug, Clone)]
pub struct Partitions {
    labels: Vec<usize>,
    maxes: Vec<usize>,
    done: bool,
}

impl Iterator for Partitions {
    type Item = Partition;

    fn next(&mut self) -> Option<Partition> {
        if self.done {
            return None;
        }
        let out = Partition::from_labels(&self.labels);
        let n = self.labels.len();
        // advance: rightmost position that can be incremented
        let mut i = n;
        loop {
            if i <= 1 {
                self.done = true;
                break;
            }
            i -= 1;
            if self.labels[i] <= self.maxes[i - 1] {
                self.labels[i] += 1;
                for j in i + 1..n {
                    self.labels[j] = 0;
                }
                for j in i..n {
                    self.maxes[j] = self.maxes[j - 1].max(self.labels[j]);
                }
                break;
            }
        }
        Some(out)
    }
}

/// All partitions of `{0..n-1}`; `n = 0` yields the empty partition once.
pub fn partitions(n: usize) -> Result<Partitions> {
    if n > MAX_PARTITION_SIZE {
        return Err(Error::Capacity(format!(
            "partitions of {n} elements (cap {MAX_PARTITION_SIZE})"
        )));
    }
    Ok(Partitions {
        labels: vec![0; n],
        maxes: vec![0; n],
        done: false,
    })
}

/// Permutation of `{0..n-1}` in one-line notation.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Permutation(pub Vec<usize>);

impl Permutation {
    pub fn identity(n: usize) -> Self {
        Self((0..n).collect())
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn apply(&self, i: usize) -> usize {
        self.0[i]
    }

    pub fn is_bijection(&self) -> bool {
        let mut seen = vec![false; self.0.len()];
        self.0.iter().all(|&x| x < seen.len() && !std::mem::replace(&mut seen[x], true))
    }

    pub fn cycles(&self) -> Vec<Vec<usize>> {
        let mut seen = vec![false; self.len()];
        let mut out = Vec::new();
        for s in 0..self.len() {
            if seen[s] {
                continue;
            }
            let mut c = Vec::new();
            let mut x = s;
            while !seen[x] {
                seen[x] = true;
                c.push(x);
                x = self.0[x];
            }
            out.push(c);
        }
        out
    }

    /// `+1` or `-1`.
    pub fn sign(&self) -> i32 {
        let even_cycles = self.cycles().iter().filter(|c| c.len() % 2 == 0).count();
        if even_cycles % 2 == 0 {
            1
        } else {
            -1
        }
    }

    /// `(self o other)(i) = self(other(i))`.
    pub fn compose(&self, other: &Self) -> Self {
        Self(other.0.iter().map(|&i| self.0[i]).collect())
    }

    pub fn inverse(&self) -> Self {
        let mut inv = vec![0; self.len()];
        for (i, &j) in self.0.iter().enumerate() {
            inv[j] = i;
        }
        Self(inv)
    }

    pub fn is_full_cycle(&self) -> bool {
        self.len() >= 2 && self.cycles().len() == 1
    }
}

/// All permutations of `{0..n-1}` in lexicographic order.
pub fn all_permutations(n: usize) -> impl Iterator<Item = Permutation> {
    let mut cur: Option<Vec<usize>> = Some((0..n).collect());
    std::iter::from_fn(move || {
        let out = cur.clone()?;
        let a = cur.as_mut().expect("checked");
        // next lexicographic permutation
        let mut i = a.len();
        while i > 1 && a[i - 2] >= a[i - 1] {
            i -= 1;
        }
        if i <= 1 {
            cur = None;
        } else {
            let p = i - 2;
            let mut j = a.len() - 1;
            while a[j] <= a[p] {
                j -= 1;
            }
            a.swap(p, j);
            a[p + 1..].reverse();
        }
        Some(Permutation(out))
    })
}

/// Full cycles on `{0..n-1}`: `(n-1)!` of them for `n >= 2`, none for
/// `n <= 1`.
pub fn cyclic_permutations(n: usize) -> Vec<Permutation> {
    if n < 2 {
        return Vec::new();
    }
    all_permutations(n - 1)
        .map(|p| {
            // cycle 0 -> p0+1 -> p1+1 -> ... -> 0
            let order: Vec<usize> = std::iter::once(0).chain(p.0.iter().map(|x| x + 1)).collect();
            let mut sigma = vec![0; n];
            for w in 0..n {
                sigma[order[w]] = order[(w + 1) % n];
            }
            Permutation(sigma)
        })
        .collect()
}

/// Stirling number of the second kind `{n, k}`, `0 <= k <= n <= 20`.
pub fn stirling2(n: usize, k: usize) -> Result<u64> {
    if n > 20 || k > n {
        return Err(Error::InvalidInput(format!("stirling2({n}, {k}) out of range")));
    }
    let mut row = vec![1u64];
    for m in 1..=n {
        let mut next = vec![0u64; m + 1];
        for j in 1..=m {
            let keep = if j < m { j as u64 * row[j] } else { 0 };
            next[j] = keep + row[j - 1];
        }
        row = next;
    }
    Ok(row[k])
}

/// `sum_k {m,k} (k-1)! (-1)^{k-1}`, equal to 1 for `m = 1` and 0 for
/// `m >= 2`.
pub fn stirling_alternating_sum(m: usize) -> Result<i128> {
    if m == 0 || m > 20 {
        return Err(Error::InvalidInput(format!("alternating sum for m = {m}")));
    }
    let mut total: i128 = 0;
    let mut fact: i128 = 1;
    for k in 1..=m {
        if k > 1 {
            fact *= (k - 1) as i128;
        }
        let term = stirling2(m, k)? as i128 * fact;
        total += if k % 2 == 1 { term } else { -term };
    }
    Ok(total)
}

/// Bijection of an edge list onto itself; `map[i]` is the index of
/// `tau(domain[i])`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EdgePermutation {
    pub domain: Vec<DirectedEdge>,
    pub map: Permutation,
}

impl EdgePermutation {
    pub fn new(domain: Vec<DirectedEdge>, map: Permutation) -> Result<Self> {
        if domain.len() != map.len() || !map.is_bijection() {
            return Err(Error::InvalidInput("edge permutation is not a bijection".into()));
        }
        Ok(Self { domain, map })
    }

    /// Builds from explicit `f -> tau(f)` pairs.
    pub fn from_pairs(pairs: &[(DirectedEdge, DirectedEdge)]) -> Result<Self> {
        let domain: Vec<DirectedEdge> = pairs.iter().map(|p| p.0).collect();
        let pos: HashMap<DirectedEdge, usize> = domain.iter().enumerate().map(|(i, f)| (*f, i)).collect();
        let map = pairs
            .iter()
            .map(|(_, g)| {
                pos.get(g)
                    .copied()
                    .ok_or_else(|| Error::InvalidInput(format!("{g:?} is not in the domain")))
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(domain, Permutation(map))
    }

    pub fn sign(&self) -> i32 {
        self.map.sign()
    }

    pub fn image(&self, f: DirectedEdge) -> Option<DirectedEdge> {
        self.domain
            .iter()
            .position(|&g| g == f)
            .map(|i| self.domain[self.map.apply(i)])
    }

    pub fn preimage(&self, f: DirectedEdge) -> Option<DirectedEdge> {
        let j = self.domain.iter().position(|&g| g == f)?;
        let i = self.map.0.iter().position(|&x| x == j)?;
        Some(self.domain[i])
    }
}

/// Index in `vertices` of the unique endpoint of `f` lying in `vertices`.
pub fn edge_owner(f: DirectedEdge, vertices: &[usize], lattice: &FiniteLattice) -> Result<usize> {
    let tail = vertices.iter().position(|&v| v == f.tail);
    let tip = lattice
        .tip(f)
        .and_then(|w| vertices.iter().position(|&v| v == w));
    match (tail, tip) {
        (Some(a), None) | (None, Some(a)) => Ok(a),
        (Some(_), Some(_)) => Err(Error::NotGoodSet(format!("{f:?} joins two vertices of the set"))),
        (None, None) => Err(Error::InvalidInput(format!("{f:?} touches no vertex of the set"))),
    }
}

/// Connectivity data of the multigraph `V_tau`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Classification {
    pub connected: bool,
    pub bare: bool,
    pub edge_count: usize,
}

fn find(parent: &mut [usize], x: usize) -> usize {
    let mut r = x;
    while parent[r] != r {
        r = parent[r];
    }
    let mut y = x;
    while parent[y] != r {
        let next = parent[y];
        parent[y] = r;
        y = next;
    }
    r
}

/// Builds `V_tau` (one edge per mapping `f -> tau(f)` between different
/// vertices) and reports connectivity and bareness.
pub fn classify_permutation(
    tau: &EdgePermutation,
    vertices: &[usize],
    lattice: &FiniteLattice,
) -> Result<Classification> {
    let owners = tau
        .domain
        .iter()
        .map(|&f| edge_owner(f, vertices, lattice))
        .collect::<Result<Vec<_>>>()?;
    let n = vertices.len();
    let mut parent: Vec<usize> = (0..n).collect();
    let mut degree = vec![0usize; n];
    let mut edges = 0;
    for (i, &a) in owners.iter().enumerate() {
        let b = owners[tau.map.apply(i)];
        if a != b {
            edges += 1;
            degree[a] += 1;
            degree[b] += 1;
            let (ra, rb) = (find(&mut parent, a), find(&mut parent, b));
            parent[ra] = rb;
        }
    }
    let root = find(&mut parent, 0);
    let connected = (0..n).all(|v| find(&mut parent, v) == root);
    let bare = n >= 2 && connected && edges == n && degree.iter().all(|&d| d == 2);
    Ok(Classification {
        connected,
        bare,
        edge_count: edges,
    })
}

/// How a bare permutation turns at a vertex.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum LocalTurn {
    /// Hypercubic: `+1` exit through the entry edge, `-1` through its
    /// reflection.
    Gamma(Vec<i8>),
    /// Triangular: exit edge at angle `alpha * pi / 3` from the entry edge.
    Alpha(Vec<u8>),
}

/// `(sigma, eta, gamma)` or `(sigma, eta, alpha)` data of a bare permutation.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BareDecomposition {
    /// Cyclic permutation of vertex indices.
    pub sigma: Permutation,
    /// Entry edge at each vertex.
    pub eta: Vec<DirectedEdge>,
    /// Exit edge at each vertex.
    pub exit: Vec<DirectedEdge>,
    pub turn: LocalTurn,
}

impl BareDecomposition {
    /// `gamma_alpha = cos(alpha pi / 3)` (or `gamma` itself) at vertex `i`.
    pub fn local_weight(&self, i: usize) -> f64 {
        match &self.turn {
            LocalTurn::Gamma(g) => g[i] as f64,
            LocalTurn::Alpha(a) => (a[i] as f64 * std::f64::consts::PI / 3.0).cos(),
        }
    }
}

/// Extracts the vertex cycle, entry edges and turns of a bare permutation
/// whose domain edges all start at vertices of `vertices`.
pub fn decompose_bare(
    tau: &EdgePermutation,
    vertices: &[usize],
    lattice: &FiniteLattice,
) -> Result<BareDecomposition> {
    let class = classify_permutation(tau, vertices, lattice)?;
    if !class.bare {
        return Err(Error::NotBare("permutation is not bare".into()));
    }
    let n = vertices.len();
    let owner_of = |f: DirectedEdge| -> Result<usize> {
        vertices
            .iter()
            .position(|&v| v == f.tail)
            .ok_or_else(|| Error::InvalidInput(format!("{f:?} does not start in the set")))
    };
    let mut entry = vec![None; n];
    let mut exit = vec![None; n];
    let mut sigma = vec![0; n];
    for (i, &f) in tau.domain.iter().enumerate() {
        let g = tau.domain[tau.map.apply(i)];
        let (a, b) = (owner_of(f)?, owner_of(g)?);
        if a != b {
            exit[a] = Some(f);
            entry[b] = Some(g);
            sigma[a] = b;
        }
    }
    let eta: Vec<DirectedEdge> = entry.into_iter().map(|e| e.expect("bare")).collect();
    let exit: Vec<DirectedEdge> = exit.into_iter().map(|e| e.expect("bare")).collect();
    let c = lattice.coordination();
    let turn = match lattice.kind() {
        LatticeKind::Hypercubic { .. } => {
            let mut g = Vec::with_capacity(n);
            for (e, x) in eta.iter().zip(&exit) {
                if e == x {
                    g.push(1);
                } else if x.dir == lattice.kind().opposite(e.dir) {
                    g.push(-1);
                } else {
                    return Err(Error::NotBare(format!(
                        "exit {x:?} is not parallel to entry {e:?}"
                    )));
                }
            }
            LocalTurn::Gamma(g)
        }
        LatticeKind::Triangular => LocalTurn::Alpha(
            eta.iter()
                .zip(&exit)
                .map(|(e, x)| ((x.dir + c - e.dir) % c) as u8)
                .collect(),
        ),
    };
    Ok(BareDecomposition {
        sigma: Permutation(sigma),
        eta,
        exit,
        turn,
    })
}

/// Local surgery at vertex index `v`: returns `omega` on
/// `E_v \ {eta(v)}` and `tau \ omega` on `(E \ E_v) + {eta(v)}`.
pub fn surgery(
    tau: &EdgePermutation,
    dec: &BareDecomposition,
    vertices: &[usize],
    v: usize,
) -> Result<(EdgePermutation, EdgePermutation)> {
    let vert = vertices[v];
    let eta = dec.eta[v];
    let exit = dec.exit[v];
    let next_eta = dec.eta[dec.sigma.apply(v)];
    let image = |f: DirectedEdge| tau.image(f).expect("domain edge");
    let mut omega = Vec::new();
    let mut rest = Vec::new();
    for &f in &tau.domain {
        if f.tail == vert {
            if f == eta {
                rest.push((f, next_eta));
            } else if f == exit {
                omega.push((f, image(eta)));
            } else {
                omega.push((f, image(f)));
            }
        } else {
            rest.push((f, image(f)));
        }
    }
    Ok((EdgePermutation::from_pairs(&omega)?, EdgePermutation::from_pairs(&rest)?))
}

/// Canonical list of all set partitions of `{0..n-1}` with merge tables,
/// used to track connectivity of `V_tau` incrementally.
struct PartitionStates {
    labels: Vec<Vec<usize>>,
    merge: Vec<Vec<usize>>,
    n: usize,
    single: usize,
}

impl PartitionStates {
    fn new(n: usize) -> Result<Self> {
        let all: Vec<Vec<usize>> = partitions(n)?
            .map(|p| {
                let mut lab = vec![0; n];
                for (b, block) in p.blocks().iter().enumerate() {
                    for &x in block {
                        lab[x] = b;
                    }
                }
                lab
            })
            .collect();
        let index: HashMap<Vec<usize>, usize> = all.iter().enumerate().map(|(i, l)| (l.clone(), i)).collect();
        let canon = |lab: &[usize]| -> Vec<usize> {
            let mut map = HashMap::new();
            lab.iter()
                .map(|x| {
                    let k = map.len();
                    *map.entry(*x).or_insert(k)
                })
                .collect()
        };
        let mut merge = vec![vec![0; n * n]; all.len()];
        for (s, lab) in all.iter().enumerate() {
            for a in 0..n {
                for b in 0..n {
                    let (la, lb) = (lab[a], lab[b]);
                    let merged: Vec<usize> = lab.iter().map(|&x| if x == lb { la } else { x }).collect();
                    merge[s][a * n + b] = index[&canon(&merged)];
                }
            }
        }
        let single = index[&vec![0; n]];
        Ok(Self {
            labels: all,
            merge,
            n,
            single,
        })
    }

    fn initial(&self) -> usize {
        let lab: Vec<usize> = (0..self.n).collect();
        self.labels.iter().position(|l| *l == lab).expect("discrete partition")
    }
}

/// Largest edge set handled by [`connected_signed_sum`].
pub const MAX_CONNECTED_EDGES: usize = 22;

/// `sum_tau sign(tau) prod_i m(i, tau(i))` over permutations `tau` of the
/// rows whose multigraph `V_tau` is connected, where row `i` belongs to
/// vertex `owners[i]`. Dynamic programming over (used columns, connectivity
/// partition); the sign is tracked by counting inversions.
pub fn connected_signed_sum<T: Scalar>(
    m: impl Fn(usize, usize) -> T,
    owners: &[usize],
    vertex_count: usize,
) -> Result<T> {
    let k = owners.len();
    if k > MAX_CONNECTED_EDGES {
        return Err(Error::Capacity(format!("{k} edges (cap {MAX_CONNECTED_EDGES})")));
    }
    if vertex_count == 0 || owners.iter().any(|&o| o >= vertex_count) {
        return Err(Error::InvalidInput("edge owner out of range".into()));
    }
    let states = PartitionStates::new(vertex_count)?;
    let p = states.labels.len();
    let entries: Vec<Vec<T>> = (0..k).map(|i| (0..k).map(|j| m(i, j)).collect()).collect();
    let full = (1usize << k) - 1;
    let mut dp: Vec<Option<T>> = vec![None; (1usize << k) * p];
    dp[states.initial()] = Some(T::one());
    for mask in 0..full {
        let row = mask.count_ones() as usize;
        for s in 0..p {
            let Some(val) = dp[mask * p + s].clone() else {
                continue;
            };
            for j in 0..k {
                if mask >> j & 1 == 1 {
                    continue;
                }
                let e = &entries[row][j];
                if e.is_exact_zero() {
                    continue;
                }
                let inversions = (mask >> j >> 1).count_ones();
                let s2 = if owners[row] == owners[j] {
                    s
                } else {
                    states.merge[s][owners[row] * vertex_count + owners[j]]
                };
                let term = val.clone() * e.clone();
                let term = if inversions % 2 == 1 { -term } else { term };
                let slot = &mut dp[(mask | 1 << j) * p + s2];
                *slot = Some(match slot.take() {
                    Some(x) => x + term,
                    None => term,
                });
            }
        }
    }
    Ok(dp[full * p + states.single].clone().unwrap_or_else(T::zero))
}

/// Same sum as [`connected_signed_sum`] by explicit enumeration of all
/// permutations.
pub fn connected_signed_sum_enumerated<T: Scalar>(
    m: impl Fn(usize, usize) -> T,
    owners: &[usize],
    vertex_count: usize,
) -> Result<T> {
    let k = owners.len();
    if k > 10 {
        return Err(Error::Capacity(format!("{k} edges for explicit enumeration")));
    }
    let mut total = T::zero();
    for tau in all_permutations(k) {
        let mut parent: Vec<usize> = (0..vertex_count).collect();
        for i in 0..k {
            let (a, b) = (owners[i], owners[tau.apply(i)]);
            if a != b {
                let (ra, rb) = (find(&mut parent, a), find(&mut parent, b));
                parent[ra] = rb;
            }
        }
        let r = find(&mut parent, 0);
        if !(0..vertex_count).all(|v| find(&mut parent, v) == r) {
            continue;
        }
        let mut prod = T::one();
        for i in 0..k {
            prod = prod * m(i, tau.apply(i));
        }
        total = if tau.sign() > 0 { total + prod } else { total - prod };
    }
    Ok(total)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::Rational;
    use proptest::prelude::*;

    #[test]
    fn bell_numbers_and_stirling() {
        assert_eq!(partitions(3).unwrap().count(), 5);
        assert_eq!(partitions(4).unwrap().count(), 15);
        assert_eq!(partitions(6).unwrap().count(), 203);
        assert_eq!(partitions(0).unwrap().count(), 1);
        for n in 1..=7 {
            let mut by_k = vec![0u64; n + 1];
            for p in partitions(n).unwrap() {
                by_k[p.len()] += 1;
            }
            for (k, &c) in by_k.iter().enumerate().skip(1) {
                assert_eq!(c, stirling2(n, k).unwrap());
            }
        }
        assert_eq!(stirling2(4, 2).unwrap(), 7);
        assert!(partitions(13).is_err());
    }

    #[test]
    fn alternating_sums() {
        assert_eq!(stirling_alternating_sum(1).unwrap(), 1);
        for m in 2..=20 {
            assert_eq!(stirling_alternating_sum(m).unwrap(), 0);
        }
    }

    #[test]
    fn cyclic_counts_and_signs() {
        assert!(cyclic_permutations(1).is_empty());
        assert_eq!(cyclic_permutations(2), vec![Permutation(vec![1, 0])]);
        let c4 = cyclic_permutations(4);
        assert_eq!(c4.len(), 6);
        for s in &c4 {
            assert!(s.is_full_cycle());
            assert_eq!(s.sign(), -1);
        }
        assert!(cyclic_permutations(5).iter().all(|s| s.sign() == 1));
    }

    #[test]
    fn refinement_is_partial_order() {
        let ps: Vec<Partition> = partitions(4).unwrap().collect();
        for a in &ps {
            assert!(a.refines(a));
            for b in &ps {
                for c in &ps {
                    if a.refines(b) && b.refines(c) {
                        assert!(a.refines(c));
                    }
                }
                if a.refines(b) && b.refines(a) {
                    assert_eq!(a, b);
                }
            }
        }
    }

    #[test]
    fn cycle_partitions_correspond() {
        // partitions coarser than the cycle partition of sigma are in bijection
        // with partitions of its cycles, preserving block counts
        let sigma = Permutation(vec![1, 0, 3, 4, 2, 5]);
        let cycles = sigma.cycles();
        let pi_sigma = Partition {
            blocks: {
                let mut b: Vec<Vec<usize>> = cycles.iter().map(|c| {
                    let mut c = c.clone();
                    c.sort();
                    c
                }).collect();
                b.sort();
                b
            },
        };
        let mut counts = [0; 7];
        for p in partitions(6).unwrap() {
            if pi_sigma.refines(&p) {
                counts[p.len()] += 1;
            }
        }
        for k in 1..=cycles.len() {
            assert_eq!(counts[k], stirling2(cycles.len(), k).unwrap());
        }
    }

    proptest! {
        #[test]
        fn sign_is_multiplicative(
            a in Just((0..7).collect::<Vec<usize>>()).prop_shuffle(),
            b in Just((0..7).collect::<Vec<usize>>()).prop_shuffle(),
        ) {
            let (p, q) = (Permutation(a), Permutation(b));
            prop_assert_eq!(p.compose(&q).sign(), p.sign() * q.sign());
            prop_assert_eq!(p.inverse().sign(), p.sign());
        }
    }

    fn two_vertices() -> (FiniteLattice, Vec<usize>) {
        let l = FiniteLattice::hypercubic_box(&[5, 5]).unwrap();
        let v = vec![l.vertex_at(&[1, 2]).unwrap(), l.vertex_at(&[3, 2]).unwrap()];
        (l, v)
    }

    #[test]
    fn classify_examples() {
        let (l, v) = two_vertices();
        let e = |t: usize, d: usize| DirectedEdge::new(v[t], d);
        let id = EdgePermutation::from_pairs(&[(e(0, 0), e(0, 0)), (e(0, 1), e(0, 1))]).unwrap();
        let c = classify_permutation(&id, &v[..1], &l).unwrap();
        assert!(c.connected && !c.bare);

        let swap = EdgePermutation::from_pairs(&[
            (e(0, 0), e(1, 2)),
            (e(1, 2), e(0, 0)),
            (e(0, 1), e(0, 1)),
        ])
        .unwrap();
        let c = classify_permutation(&swap, &v, &l).unwrap();
        assert!(c.connected && c.bare);
        assert_eq!(c.edge_count, 2);

        let double = EdgePermutation::from_pairs(&[
            (e(0, 0), e(1, 0)),
            (e(0, 1), e(1, 1)),
            (e(1, 0), e(0, 0)),
            (e(1, 1), e(0, 1)),
        ])
        .unwrap();
        let c = classify_permutation(&double, &v, &l).unwrap();
        assert!(c.connected && !c.bare);
        assert_eq!(c.edge_count, 4);

        // an edge joining the two vertices is rejected
        let l3 = FiniteLattice::hypercubic_box(&[3, 1]).unwrap();
        let bad = EdgePermutation::from_pairs(&[(DirectedEdge::new(0, 0), DirectedEdge::new(0, 0))]).unwrap();
        assert!(classify_permutation(&bad, &[0, 1], &l3).is_err());
    }

    #[test]
    fn decompose_gamma_and_alpha() {
        let (l, v) = two_vertices();
        let e = |t: usize, d: usize| DirectedEdge::new(v[t], d);
        // enter v0 through e(0,0) and leave through the same edge: gamma = 1;
        // enter v1 through e(1,1), leave through e(1,3): gamma = -1
        let tau = EdgePermutation::from_pairs(&[
            (e(0, 0), e(1, 1)),
            (e(1, 1), e(1, 3)),
            (e(1, 3), e(0, 0)),
        ])
        .unwrap();
        let d = decompose_bare(&tau, &v, &l).unwrap();
        assert_eq!(d.turn, LocalTurn::Gamma(vec![1, -1]));
        assert_eq!(d.sigma, Permutation(vec![1, 0]));
        let skew = EdgePermutation::from_pairs(&[
            (e(0, 0), e(1, 1)),
            (e(1, 1), e(1, 0)),
            (e(1, 0), e(0, 0)),
        ])
        .unwrap();
        assert!(matches!(decompose_bare(&skew, &v, &l), Err(Error::NotBare(_))));

        let t = FiniteLattice::triangular_patch(3).unwrap();
        let tv = vec![t.vertex_at(&[-1, 0]).unwrap(), t.vertex_at(&[1, 0]).unwrap()];
        let te = |i: usize, d: usize| DirectedEdge::new(tv[i], d);
        let tau = EdgePermutation::from_pairs(&[
            (te(0, 0), te(1, 3)),
            (te(1, 3), te(1, 5)),
            (te(1, 5), te(0, 0)),
        ])
        .unwrap();
        let d = decompose_bare(&tau, &tv, &t).unwrap();
        assert_eq!(d.turn, LocalTurn::Alpha(vec![0, 2]));
        assert!((d.local_weight(1) + 0.5).abs() < 1e-15);
    }

    /// Exhaustive check of the surgery sign law on two vertices with up to
    /// three edges each.
    fn surgery_sign_law(lattice: &FiniteLattice, v: &[usize]) -> usize {
        let c = lattice.coordination();
        let mut checked = 0;
        for mask0 in 1u32..(1 << c) {
            for mask1 in 1u32..(1 << c) {
                if mask0.count_ones() > 3 || mask1.count_ones() > 3 {
                    continue;
                }
                let mut domain = Vec::new();
                for (i, mask) in [mask0, mask1].iter().enumerate() {
                    for d in 0..c {
                        if mask >> d & 1 == 1 {
                            domain.push(DirectedEdge::new(v[i], d));
                        }
                    }
                }
                for p in all_permutations(domain.len()) {
                    let tau = EdgePermutation::new(domain.clone(), p).unwrap();
                    let Ok(dec) = decompose_bare(&tau, v, lattice) else {
                        continue;
                    };
                    for (x, _) in v.iter().enumerate() {
                        let (omega, minus) = surgery(&tau, &dec, v, x).unwrap();
                        let gamma = if dec.eta[x] == dec.exit[x] { 1 } else { -1 };
                        assert_eq!(tau.sign(), gamma * omega.sign() * minus.sign());
                        checked += 1;
                    }
                }
            }
        }
        checked
    }

    #[test]
    fn surgery_sign_law_square() {
        let (l, v) = two_vertices();
        assert!(surgery_sign_law(&l, &v) > 1000);
    }

    #[test]
    fn surgery_sign_law_triangular() {
        let t = FiniteLattice::triangular_patch(3).unwrap();
        let v = vec![t.vertex_at(&[-1, 0]).unwrap(), t.vertex_at(&[1, 0]).unwrap()];
        assert!(surgery_sign_law(&t, &v) > 1000);
    }

    #[test]
    fn dp_matches_enumeration() {
        let owners = [0, 0, 1, 1, 1, 2, 2];
        let m = |i: usize, j: usize| Rational::from_ratio(((i * 5 + j * 3) % 7) as i64 - 3, (i + j + 1) as i64);
        let a = connected_signed_sum(m, &owners, 3).unwrap();
        let b = connected_signed_sum_enumerated(m, &owners, 3).unwrap();
        assert_eq!(a, b);
        // a single vertex: the full determinant
        let own1 = [0, 0, 0];
        let mf = |i: usize, j: usize| Rational::from_i64([[2, 1, 0], [1, 3, 1], [0, 1, 4]][i][j]);
        assert_eq!(connected_signed_sum(mf, &own1, 1).unwrap(), Rational::from_i64(18));
    }
}
