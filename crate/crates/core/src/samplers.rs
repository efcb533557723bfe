//! Exact and Monte Carlo oracles: the abelian sandpile chain, Dhar's burning
//! test, exhaustive recurrent enumeration, spanning-tree enumeration and
//! Wilson's algorithm.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::{DirectedEdge, FiniteLattice};

/// Cap on `prod_v deg(v)` for exhaustive enumeration.
pub const MAX_ENUMERATION: u64 = 1 << 22;

/// Number of batches for batch-means standard errors.
pub const BATCHES: usize = 32;

/// Seeded generator; distinct `stream`s give independent sequences.
pub fn rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut r = ChaCha8Rng::seed_from_u64(seed);
    r.set_stream(stream);
    r
}

/// Height configuration; stable when every height lies in `1..=deg`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SandpileConfig {
    pub heights: Vec<u32>,
}

impl SandpileConfig {
    pub fn maximal(lattice: &FiniteLattice) -> Self {
        Self {
            heights: vec![lattice.coordination() as u32; lattice.len()],
        }
    }

    pub fn is_stable(&self, lattice: &FiniteLattice) -> bool {
        let c = lattice.coordination() as u32;
        self.heights.iter().all(|&h| (1..=c).contains(&h))
    }
}

fn topple_from(heights: &mut [u32], lattice: &FiniteLattice, stack: &mut Vec<usize>) -> u64 {
    let c = lattice.coordination() as u32;
    let mut topples = 0;
    while let Some(v) = stack.pop() {
        if heights[v] <= c {
            continue;
        }
        let k = (heights[v] - 1) / c;
        heights[v] -= k * c;
        topples += k as u64;
        for w in lattice.lattice_neighbors(v) {
            heights[w] += k;
            if heights[w] > c {
                stack.push(w);
            }
        }
    }
    topples
}

/// Topples until stable; grains crossing ghost edges are lost. Returns the
/// stable configuration and the number of topplings.
pub fn stabilize(cfg: &SandpileConfig, lattice: &FiniteLattice) -> (SandpileConfig, u64) {
    let c = lattice.coordination() as u32;
    let mut heights = cfg.heights.clone();
    let mut stack: Vec<usize> = (0..heights.len()).filter(|&v| heights[v] > c).collect();
    let topples = topple_from(&mut heights, lattice, &mut stack);
    (SandpileConfig { heights }, topples)
}

/// Stabilisation toppling one randomly chosen unstable vertex at a time.
pub fn stabilize_random_order(
    cfg: &SandpileConfig,
    lattice: &FiniteLattice,
    rng: &mut impl Rng,
) -> (SandpileConfig, u64) {
    let c = lattice.coordination() as u32;
    let mut heights = cfg.heights.clone();
    let mut topples = 0;
    loop {
        let unstable: Vec<usize> = (0..heights.len()).filter(|&v| heights[v] > c).collect();
        if unstable.is_empty() {
            break;
        }
        let v = unstable[rng.gen_range(0..unstable.len())];
        heights[v] -= c;
        topples += 1;
        for w in lattice.lattice_neighbors(v) {
            heights[w] += 1;
        }
    }
    (SandpileConfig { heights }, topples)
}

/// Burning test: repeatedly burn vertices whose height exceeds the number
/// of unburnt lattice neighbors.
pub fn is_recurrent(cfg: &SandpileConfig, lattice: &FiniteLattice) -> bool {
    let n = lattice.len();
    let mut burnt = vec![false; n];
    let mut unburnt_nbrs: Vec<u32> = (0..n)
        .map(|v| lattice.lattice_neighbors(v).count() as u32)
        .collect();
    let mut queue: Vec<usize> = (0..n).filter(|&v| cfg.heights[v] > unburnt_nbrs[v]).collect();
    let mut count = 0;
    while let Some(v) = queue.pop() {
        if burnt[v] {
            continue;
        }
        burnt[v] = true;
        count += 1;
        for w in lattice.lattice_neighbors(v) {
            unburnt_nbrs[w] -= 1;
            if !burnt[w] && cfg.heights[w] > unburnt_nbrs[w] {
                queue.push(w);
            }
        }
    }
    count == n
}

/// Iterator over all recurrent configurations.
pub struct RecurrentConfigs<'a> {
    lattice: &'a FiniteLattice,
    current: Option<Vec<u32>>,
}

impl Iterator for RecurrentConfigs<'_> {
    type Item = SandpileConfig;

    fn next(&mut self) -> Option<SandpileConfig> {
        let c = self.lattice.coordination() as u32;
        loop {
            let h = self.current.as_mut()?;
            let cfg = SandpileConfig { heights: h.clone() };
            // odometer step
            let mut i = 0;
            loop {
                if i == h.len() {
                    self.current = None;
                    break;
                }
                if h[i] < c {
                    h[i] += 1;
                    break;
                }
                h[i] = 1;
                i += 1;
            }
            if is_recurrent(&cfg, self.lattice) {
                return Some(cfg);
            }
        }
    }
}

/// All recurrent configurations of a small lattice.
pub fn enumerate_recurrent(lattice: &FiniteLattice) -> Result<RecurrentConfigs<'_>> {
    let c = lattice.coordination() as u64;
    let total = (0..lattice.len()).try_fold(1u64, |acc, _| {
        acc.checked_mul(c).filter(|&x| x <= MAX_ENUMERATION)
    });
    if total.is_none() {
        return Err(Error::Capacity(format!(
            "{} vertices of degree {c} exceed the enumeration cap",
            lattice.len()
        )));
    }
    Ok(RecurrentConfigs {
        lattice,
        current: Some(vec![1; lattice.len()]),
    })
}

/// Exact joint height-one frequency over all recurrent configurations, as
/// `(hits, total)`.
pub fn recurrent_height_one_count(
    lattice: &FiniteLattice,
    vertices: &[usize],
) -> Result<(u64, u64)> {
    if let Some(&v) = vertices.iter().find(|&&v| v >= lattice.len()) {
        return Err(Error::InvalidInput(format!("vertex {v} out of range")));
    }
    let mut hits = 0;
    let mut total = 0;
    for cfg in enumerate_recurrent(lattice)? {
        total += 1;
        if vertices.iter().all(|&v| cfg.heights[v] == 1) {
            hits += 1;
        }
    }
    Ok((hits, total))
}

/// Monte Carlo estimate with its batch-means standard error.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub observable: String,
    pub estimate: f64,
    pub stderr: f64,
    pub n: usize,
}

impl Estimate {
    fn from_samples(observable: String, samples: &[f64]) -> Self {
        let n = samples.len();
        let mean = samples.iter().sum::<f64>() / n.max(1) as f64;
        let per = n / BATCHES;
        let stderr = if per == 0 {
            f64::NAN
        } else {
            let means: Vec<f64> = (0..BATCHES)
                .map(|b| samples[b * per..(b + 1) * per].iter().sum::<f64>() / per as f64)
                .collect();
            let m = means.iter().sum::<f64>() / BATCHES as f64;
            let var = means.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (BATCHES - 1) as f64;
            (var / BATCHES as f64).sqrt()
        };
        Self {
            observable,
            estimate: mean,
            stderr,
            n,
        }
    }

    /// `|estimate - exact|` in units of the standard error.
    pub fn z_score(&self, exact: f64) -> f64 {
        (self.estimate - exact).abs() / self.stderr
    }
}

/// Observable recorded by the sandpile chain.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ChainObservable {
    /// All listed vertices at height one.
    HeightOne { vertices: Vec<usize> },
    /// `vertex` at the given height.
    Height { vertex: usize, height: u32 },
}

impl ChainObservable {
    fn value(&self, h: &[u32]) -> f64 {
        let hit = match self {
            ChainObservable::HeightOne { vertices } => vertices.iter().all(|&v| h[v] == 1),
            ChainObservable::Height { vertex, height } => h[*vertex] == *height,
        };
        if hit {
            1.0
        } else {
            0.0
        }
    }

    fn label(&self) -> String {
        match self {
            ChainObservable::HeightOne { vertices } => format!("height_one{vertices:?}"),
            ChainObservable::Height { vertex, height } => format!("height[{vertex}]={height}"),
        }
    }
}

/// Runs the sandpile chain from the maximal configuration: `burn_in`
/// additions, then `steps` further additions recorded once per sweep of
/// `|Lambda|` additions. When every vertex has the same ghost degree `k`
/// the chain has period dividing `k`, and the sweep length must be coprime
/// to it for the records to be uniform; [`chain_period`] reports it.
pub fn chain_sample(
    lattice: &FiniteLattice,
    steps: u64,
    burn_in: u64,
    seed: u64,
    observables: &[ChainObservable],
) -> Result<Vec<Estimate>> {
    let n = lattice.len();
    for o in observables {
        let ok = match o {
            ChainObservable::HeightOne { vertices } => vertices.iter().all(|&v| v < n),
            ChainObservable::Height { vertex, .. } => *vertex < n,
        };
        if !ok {
            return Err(Error::InvalidInput(format!("observable {o:?} out of range")));
        }
    }
    let mut r = rng(seed, 0);
    let mut heights = SandpileConfig::maximal(lattice).heights;
    let mut stack = Vec::new();
    let c = lattice.coordination() as u32;
    let mut add = |heights: &mut Vec<u32>, r: &mut ChaCha8Rng| {
        let v = r.gen_range(0..n);
        heights[v] += 1;
        if heights[v] > c {
            stack.push(v);
            topple_from(heights, lattice, &mut stack);
        }
    };
    for _ in 0..burn_in {
        add(&mut heights, &mut r);
    }
    let sweeps = (steps / n as u64) as usize;
    let mut samples = vec![Vec::with_capacity(sweeps); observables.len()];
    for _ in 0..sweeps {
        for _ in 0..n {
            add(&mut heights, &mut r);
        }
        for (o, s) in observables.iter().zip(samples.iter_mut()) {
            s.push(o.value(&heights));
        }
    }
    Ok(observables
        .iter()
        .zip(samples)
        .map(|(o, s)| Estimate::from_samples(o.label(), &s))
        .collect())
}

/// Gcd of the ghost degrees over vertices; the chain of single additions
/// is periodic with this period when it exceeds one.
pub fn chain_period(lattice: &FiniteLattice) -> usize {
    fn gcd(a: usize, b: usize) -> usize {
        if b == 0 {
            a
        } else {
            gcd(b, a % b)
        }
    }
    (0..lattice.len()).fold(0, |g, v| gcd(g, lattice.ghost_degree(v)))
}

/// Spanning tree of the wired graph: `parent[v]` is the edge from `v`
/// towards the ghost.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SpanningTree {
    pub parent: Vec<DirectedEdge>,
}

impl SpanningTree {
    /// Tree edges as sorted unoriented keys.
    pub fn edges(&self, lattice: &FiniteLattice) -> Vec<DirectedEdge> {
        let mut e: Vec<DirectedEdge> = self.parent.iter().map(|&f| lattice.unoriented(f)).collect();
        e.sort();
        e
    }

    /// Number of tree edges at `v`.
    pub fn degree(&self, lattice: &FiniteLattice, v: usize) -> usize {
        1 + lattice
            .lattice_neighbors(v)
            .filter(|&w| lattice.tip(self.parent[w]) == Some(v))
            .count()
    }

    /// Every vertex reaches the ghost along parent edges.
    pub fn is_valid(&self, lattice: &FiniteLattice) -> bool {
        let n = lattice.len();
        if self.parent.len() != n {
            return false;
        }
        (0..n).all(|start| {
            let mut v = start;
            for _ in 0..=n {
                if self.parent[v].tail != v {
                    return false;
                }
                match lattice.tip(self.parent[v]) {
                    None => return true,
                    Some(w) => v = w,
                }
            }
            false
        })
    }
}

/// Uniform spanning tree of the wired graph by Wilson's algorithm rooted at
/// the ghost.
pub fn wilson_ust(lattice: &FiniteLattice, rng: &mut impl Rng) -> SpanningTree {
    let n = lattice.len();
    let c = lattice.coordination();
    let mut in_tree = vec![false; n];
    let mut next = vec![0usize; n];
    for start in 0..n {
        let mut u = start;
        while !in_tree[u] {
            let d = rng.gen_range(0..c);
            next[u] = d;
            match lattice.neighbor(u, d) {
                Some(w) => u = w,
                None => break,
            }
        }
        let mut u = start;
        while !in_tree[u] {
            in_tree[u] = true;
            match lattice.neighbor(u, next[u]) {
                Some(w) => u = w,
                None => break,
            }
        }
    }
    SpanningTree {
        parent: (0..n).map(|v| DirectedEdge { tail: v, dir: next[v] }).collect(),
    }
}

/// Observable recorded on Wilson samples.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TreeObservable {
    /// All edges of the set are in the tree.
    Contains { edges: Vec<DirectedEdge> },
    /// `prod_v deg_T(v) / c`.
    Degree { vertices: Vec<usize> },
}

impl TreeObservable {
    fn label(&self) -> String {
        match self {
            TreeObservable::Contains { edges } => {
                let e: Vec<String> = edges.iter().map(|f| format!("{}:{}", f.tail, f.dir)).collect();
                format!("contains[{}]", e.join(", "))
            }
            TreeObservable::Degree { vertices } => format!("degree{vertices:?}"),
        }
    }
}

/// Monte Carlo estimates over `samples` independent Wilson trees.
pub fn wilson_sample(
    lattice: &FiniteLattice,
    samples: usize,
    seed: u64,
    observables: &[TreeObservable],
) -> Vec<Estimate> {
    let mut r = rng(seed, 1);
    let c = lattice.coordination() as f64;
    let keys: Vec<Vec<DirectedEdge>> = observables
        .iter()
        .map(|o| match o {
            TreeObservable::Contains { edges } => {
                edges.iter().map(|&f| lattice.unoriented(f)).collect()
            }
            TreeObservable::Degree { .. } => Vec::new(),
        })
        .collect();
    let mut values = vec![Vec::with_capacity(samples); observables.len()];
    for _ in 0..samples {
        let t = wilson_ust(lattice, &mut r);
        let edges = t.edges(lattice);
        for ((o, k), vals) in observables.iter().zip(&keys).zip(values.iter_mut()) {
            let x = match o {
                TreeObservable::Contains { .. } => {
                    if k.iter().all(|f| edges.binary_search(f).is_ok()) {
                        1.0
                    } else {
                        0.0
                    }
                }
                TreeObservable::Degree { vertices } => vertices
                    .iter()
                    .map(|&v| t.degree(lattice, v) as f64 / c)
                    .product(),
            };
            vals.push(x);
        }
    }
    observables
        .iter()
        .zip(values)
        .map(|(o, v)| Estimate::from_samples(o.label(), &v))
        .collect()
}

/// Largest number of spanning trees [`enumerate_spanning_trees`] will list.
pub const MAX_TREES: usize = 2_000_000;

fn uf_root(p: &[usize], mut x: usize) -> usize {
    while p[x] != x {
        x = p[x];
    }
    x
}

struct TreeSearch<'a> {
    ends: Vec<(usize, usize)>,
    edges: &'a [DirectedEdge],
    parent: Vec<usize>,
    chosen: Vec<DirectedEdge>,
    out: Vec<Vec<DirectedEdge>>,
}

impl TreeSearch<'_> {
    fn run(&mut self, i: usize, need: usize) -> Result<()> {
        if need == 0 {
            if self.out.len() >= MAX_TREES {
                return Err(Error::Capacity("too many spanning trees".into()));
            }
            let mut t = self.chosen.clone();
            t.sort();
            self.out.push(t);
            return Ok(());
        }
        if self.ends.len() - i < need {
            return Ok(());
        }
        let (a, b) = self.ends[i];
        let (ra, rb) = (uf_root(&self.parent, a), uf_root(&self.parent, b));
        if ra != rb {
            // no path compression, so undo is a single reset
            self.parent[ra] = rb;
            self.chosen.push(self.edges[i]);
            self.run(i + 1, need - 1)?;
            self.chosen.pop();
            self.parent[ra] = ra;
        }
        self.run(i + 1, need)
    }
}

/// All spanning trees of the wired graph, each as sorted unoriented edges.
pub fn enumerate_spanning_trees(lattice: &FiniteLattice) -> Result<Vec<Vec<DirectedEdge>>> {
    let edges = lattice.wired_edges();
    let n = lattice.len();
    let mut search = TreeSearch {
        ends: edges
            .iter()
            .map(|&f| (f.tail, lattice.tip(f).unwrap_or(n)))
            .collect(),
        edges: &edges,
        parent: (0..=n).collect(),
        chosen: Vec::new(),
        out: Vec::new(),
    };
    search.run(0, n)?;
    Ok(search.out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::{Rational, Scalar};

    #[test]
    fn stabilize_examples() {
        let l = FiniteLattice::hypercubic_box(&[1, 1]).unwrap();
        let (s, k) = stabilize(&SandpileConfig { heights: vec![5] }, &l);
        assert_eq!((s.heights, k), (vec![1], 1));
        let l3 = FiniteLattice::hypercubic_box(&[3, 3]).unwrap();
        let cfg = SandpileConfig::maximal(&l3);
        assert_eq!(stabilize(&cfg, &l3), (cfg.clone(), 0));
    }

    #[test]
    fn abelian_property() {
        let l = FiniteLattice::hypercubic_box(&[4, 4]).unwrap();
        let mut burst = SandpileConfig::maximal(&l);
        for (i, h) in burst.heights.iter_mut().enumerate() {
            *h += (i % 3) as u32 * 3 + 1;
        }
        let (a, ka) = stabilize(&burst, &l);
        let (b, kb) = stabilize_random_order(&burst, &l, &mut rng(7, 0));
        let (c, kc) = stabilize_random_order(&burst, &l, &mut rng(8, 0));
        assert_eq!(a, b);
        assert_eq!(b, c);
        assert_eq!(ka, kb);
        assert_eq!(kb, kc);
        assert!(a.is_stable(&l));
    }

    #[test]
    fn burning_examples() {
        let l = FiniteLattice::hypercubic_box(&[2, 1]).unwrap();
        assert!(!is_recurrent(&SandpileConfig { heights: vec![1, 1] }, &l));
        assert!(is_recurrent(&SandpileConfig { heights: vec![1, 2] }, &l));
        assert!(is_recurrent(&SandpileConfig::maximal(&l), &l));
    }

    #[test]
    fn recurrent_counts_are_determinants() {
        for sides in [[1usize, 1], [2, 1], [2, 2], [3, 2]] {
            let l = FiniteLattice::hypercubic_box(&sides).unwrap();
            let count = enumerate_recurrent(&l).unwrap().count() as i64;
            assert_eq!(Rational::from_i64(count), l.laplacian::<Rational>().determinant());
        }
        let t = FiniteLattice::triangular_patch(1).unwrap();
        let count = enumerate_recurrent(&t).unwrap().count() as i64;
        assert_eq!(Rational::from_i64(count), t.laplacian::<Rational>().determinant());
        let big = FiniteLattice::hypercubic_box(&[4, 4]).unwrap();
        assert!(enumerate_recurrent(&big).is_err());
    }

    #[test]
    fn spanning_tree_count() {
        let l = FiniteLattice::hypercubic_box(&[2, 2]).unwrap();
        let trees = enumerate_spanning_trees(&l).unwrap();
        assert_eq!(
            Rational::from_i64(trees.len() as i64),
            l.laplacian::<Rational>().determinant()
        );
    }

    #[test]
    fn wilson_trees_are_valid() {
        let l = FiniteLattice::hypercubic_box(&[6, 5]).unwrap();
        let mut r = rng(3, 0);
        for _ in 0..200 {
            let t = wilson_ust(&l, &mut r);
            assert!(t.is_valid(&l));
            let mut e = t.edges(&l);
            e.dedup();
            assert_eq!(e.len(), l.len());
        }
    }

    #[test]
    fn chain_matches_enumeration() {
        // 2x2 has period 2 (every ghost degree is 2); 3x2 is aperiodic
        let l = FiniteLattice::hypercubic_box(&[3, 2]).unwrap();
        let obs = vec![
            ChainObservable::HeightOne { vertices: vec![0] },
            ChainObservable::HeightOne { vertices: vec![0, 5] },
            ChainObservable::Height { vertex: 1, height: 4 },
        ];
        let exact: Vec<f64> = obs
            .iter()
            .map(|o| {
                let (hits, total) = match o {
                    ChainObservable::HeightOne { vertices } => {
                        recurrent_height_one_count(&l, vertices).unwrap()
                    }
                    ChainObservable::Height { vertex, height } => {
                        let all: Vec<_> = enumerate_recurrent(&l).unwrap().collect();
                        let hits = all.iter().filter(|c| c.heights[*vertex] == *height).count();
                        (hits as u64, all.len() as u64)
                    }
                };
                hits as f64 / total as f64
            })
            .collect();
        for (e, x) in chain_sample(&l, 400_000, 1000, 11, &obs).unwrap().iter().zip(exact) {
            assert!(e.z_score(x) < 4.5, "{e:?} vs {x}");
        }
    }
}
