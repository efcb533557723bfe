//! Infinite-volume Green's functions and potential kernels, and the local
//! transfer-current limits built from them.
//!
//! In two dimensions the infinite-volume Green's function is taken as
//! `G_0 = -a/4` on `Z^2` and `G_0 = -a_T/6` on the triangular lattice, where
//! `a >= 0` is the potential kernel. With these signs `Mbar(e,e)` is the
//! infinite-volume probability that a UST contains `e` (1/2 and 1/3).

use std::collections::HashMap;
use std::f64::consts::PI;
use std::io::Write;
use std::sync::{Mutex, OnceLock};

use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::LatticeKind;
use crate::linalg::DenseMatrix;
use crate::scalar::{inv_pi_rational_digits, Rational, Scalar};

/// Gauss-Legendre nodes and weights on `[-1, 1]`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            if n == 1 {
                p1 = x;
                p0 = 1.0;
            }
            dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
            let dx = p1 / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    if n % 2 == 1 {
        nodes[n / 2] = 0.0;
    }
    (nodes, weights)
}

/// Gauss-Legendre rule mapped to `[a, b]`.
fn gl_interval(n: usize, a: f64, b: f64) -> Vec<(f64, f64)> {
    let (x, w) = gauss_legendre(n);
    let (h, m) = (0.5 * (b - a), 0.5 * (b + a));
    x.iter().zip(&w).map(|(x, w)| (m + h * x, h * w)).collect()
}

/// `a + b/pi` with rational `a`, `b`.
#[derive(Debug, Clone, PartialEq)]
pub struct PiLinear {
    pub rational: Rational,
    pub inv_pi: Rational,
}

impl PiLinear {
    fn new(rational: Rational, inv_pi: Rational) -> Self {
        Self { rational, inv_pi }
    }

    fn lin(&self, c: i64, other: &Self, d: i64) -> Self {
        let (c, d) = (Rational::from_i64(c), Rational::from_i64(d));
        Self::new(
            c.clone() * self.rational.clone() + d.clone() * other.rational.clone(),
            c * self.inv_pi.clone() + d * other.inv_pi.clone(),
        )
    }

    /// Numerical value using a long rational `1/pi`.
    pub fn value(&self, inv_pi: &Rational) -> f64 {
        (self.rational.clone() + self.inv_pi.clone() * inv_pi.clone()).as_f64()
    }
}

/// Exact potential kernel of `Z^2` on `0 <= q <= p <= range`.
#[derive(Debug, Clone)]
pub struct KernelTableZ2 {
    range: usize,
    rows: Vec<Vec<PiLinear>>,
    inv_pi: Rational,
}

impl KernelTableZ2 {
    /// Built from `a(0) = 0`, `a(1,0) = 1`, the diagonal
    /// `a(n,n) = (4/pi) sum_{k<=n} 1/(2k-1)` and harmonicity off the origin.
    pub fn new(range: usize) -> Self {
        let zero = PiLinear::new(Rational::zero(), Rational::zero());
        let diag = |n: usize| {
            let mut s = Rational::zero();
            for k in 1..=n {
                s += Rational::from_ratio(1, 2 * k as i64 - 1);
            }
            PiLinear::new(Rational::zero(), s * Rational::from_i64(4))
        };
        let mut rows: Vec<Vec<PiLinear>> = vec![vec![zero.clone()]];
        if range >= 1 {
            rows.push(vec![PiLinear::new(Rational::one(), Rational::zero()), diag(1)]);
        }
        for p in 1..range {
            let get = |rows: &Vec<Vec<PiLinear>>, a: usize, b: i64| -> PiLinear {
                let b = b.unsigned_abs() as usize;
                let (a, b) = if b > a { (b, a) } else { (a, b) };
                rows[a][b].clone()
            };
            let mut next = Vec::with_capacity(p + 2);
            for q in 0..p {
                // harmonic at (p, q)
                let centre = get(&rows, p, q as i64);
                let s = get(&rows, p - 1, q as i64)
                    .lin(1, &get(&rows, p, q as i64 + 1), 1)
                    .lin(1, &get(&rows, p, q as i64 - 1), 1);
                next.push(centre.lin(4, &s, -1));
            }
            // harmonic at (p, p): 4a(p,p) = 2a(p+1,p) + 2a(p,p-1)
            let centre = get(&rows, p, p as i64);
            let below = get(&rows, p, p as i64 - 1);
            next.push(centre.lin(2, &below, -1));
            next.push(diag(p + 1));
            rows.push(next);
        }
        Self {
            range,
            rows,
            inv_pi: inv_pi_rational_digits(40 + 2 * range as u32),
        }
    }

    pub fn range(&self) -> usize {
        self.range
    }

    pub fn exact(&self, x: i64, y: i64) -> Option<&PiLinear> {
        let (a, b) = (x.unsigned_abs() as usize, y.unsigned_abs() as usize);
        let (a, b) = if b > a { (b, a) } else { (a, b) };
        self.rows.get(a).and_then(|r| r.get(b))
    }

    pub fn value(&self, x: i64, y: i64) -> Option<f64> {
        self.exact(x, y).map(|v| v.value(&self.inv_pi))
    }

    /// CSV dump: `x,y,rational,inv_pi,value`.
    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "#schema=kernel_z2@1")?;
        writeln!(out, "x,y,rational,inv_pi,value")?;
        for (p, row) in self.rows.iter().enumerate() {
            for (q, v) in row.iter().enumerate() {
                writeln!(
                    out,
                    "{p},{q},{},{},{:.17e}",
                    v.rational,
                    v.inv_pi,
                    v.value(&self.inv_pi)
                )?;
            }
        }
        Ok(())
    }
}

fn z2_table() -> &'static KernelTableZ2 {
    static TABLE: OnceLock<KernelTableZ2> = OnceLock::new();
    TABLE.get_or_init(|| KernelTableZ2::new(64))
}

/// Largest offset accepted by the quadrature evaluators.
pub const MAX_OFFSET: i64 = 10_000;

fn check_offset(x: &[i64]) -> Result<()> {
    if x.iter().any(|c| c.abs() > MAX_OFFSET) {
        return Err(Error::InvalidInput(format!("offset {x:?} out of range")));
    }
    Ok(())
}

/// Adaptive Gauss-Legendre on `[0, pi]` for a 1D integrand, doubling the
/// node count until two successive rules agree.
fn integrate_0_pi(f: impl Fn(f64) -> f64, start: usize, tol: f64) -> Result<f64> {
    let mut n = start;
    let mut prev = f64::NAN;
    while n <= 1 << 16 {
        let v: f64 = gl_interval(n, 0.0, PI).iter().map(|(x, w)| w * f(*x)).sum();
        if (v - prev).abs() <= tol * v.abs().max(1.0) {
            return Ok(v);
        }
        prev = v;
        n *= 2;
    }
    Err(Error::NoConvergence {
        iterations: n,
        residual: f64::NAN,
    })
}

/// Potential kernel of `Z^2` from the Fourier integral reduced to one
/// dimension.
pub fn potential_kernel_z2_fourier(x: i64, y: i64) -> Result<f64> {
    check_offset(&[x, y])?;
    if x == 0 && y == 0 {
        return Ok(0.0);
    }
    let (x, y) = if y.abs() > x.abs() { (y, x) } else { (x, y) };
    let m = y.unsigned_abs() as i32;
    let integrand = |k: f64| {
        let a = 4.0 - 2.0 * k.cos();
        let amb = 4.0 * (0.5 * k).sin().powi(2);
        let s = (amb * (a + 2.0)).sqrt();
        if s == 0.0 {
            return 0.0;
        }
        let r = 2.0 / (a + s);
        (1.0 - (k * x as f64).cos() * r.powi(m)) / s
    };
    let n0 = 64 + 4 * (x.unsigned_abs() as usize);
    Ok(4.0 / PI * integrate_0_pi(integrand, n0, 1e-15)?)
}

/// Potential kernel of the triangular lattice in axial coordinates.
pub fn potential_kernel_triangular(x: i64, y: i64) -> Result<f64> {
    check_offset(&[x, y])?;
    if x == 0 && y == 0 {
        return Ok(0.0);
    }
    // use a lattice symmetry to put the largest axial component first
    let (x, y) = canonical_triangular(x, y);
    let m = y.unsigned_abs() as i32;
    let shift = x as f64 + 0.5 * y as f64;
    let integrand = |k: f64| {
        let a = 6.0 - 2.0 * k.cos();
        let b = 4.0 * (0.5 * k).cos();
        let amb = 4.0 * (0.5 * k).sin().powi(2) + 8.0 * (0.25 * k).sin().powi(2);
        let s = (amb * (a + b)).sqrt();
        if s == 0.0 {
            return 0.0;
        }
        let r = b / (a + s);
        (1.0 - (k * shift).cos() * r.powi(m)) / s
    };
    let n0 = 64 + 4 * (x.unsigned_abs() + y.unsigned_abs()) as usize;
    Ok(6.0 / PI * integrate_0_pi(integrand, n0, 1e-15)?)
}

/// Image of an axial offset under the 12 lattice symmetries with the
/// smallest `|y|`.
fn canonical_triangular(x: i64, y: i64) -> (i64, i64) {
    // rotation by 60 degrees: (x, y) -> (-y, x + y)
    let mut best = (x, y);
    let mut cur = (x, y);
    for _ in 0..6 {
        cur = (-cur.1, cur.0 + cur.1);
        for cand in [cur, (cur.0 + cur.1, -cur.1)] {
            if cand.1.abs() < best.1.abs() {
                best = cand;
            }
        }
    }
    best
}

/// Truncated series `sum_{n<steps} [P(S_n = 0) - P(S_n = x)]` for simple
/// random walk on `Z^2`.
pub fn potential_kernel_z2_series(x: i64, y: i64, steps: usize) -> f64 {
    let (u, v) = ((x + y).unsigned_abs() as usize, (x - y).unsigned_abs() as usize);
    // p_n(x,y) = q_n(x+y) q_n(x-y), q_n the 1D walk law; q_n(k) from the
    // central binomial term by ratio steps
    let mut central = 1.0f64; // C(n, floor(n/2)) / 2^n
    let mut sum = 0.0;
    let q = |n: usize, k: usize, central: f64| -> f64 {
        if (n + k) % 2 == 1 || k > n {
            return 0.0;
        }
        let half = n / 2;
        let target = (n + k) / 2;
        let mut c = central;
        let mut j = half;
        while j < target {
            c *= (n - j) as f64 / (j + 1) as f64;
            j += 1;
        }
        c
    };
    for n in 0..steps {
        let q0 = q(n, 0, central);
        let p0 = q0 * q0;
        let px = q(n, u, central) * q(n, v, central);
        sum += p0 - px;
        // advance central term to n + 1
        central *= if n % 2 == 0 {
            (n + 1) as f64 / (n + 2) as f64
        } else {
            1.0
        };
    }
    sum
}

/// `e^{-z} I_k(z)` for `k = 0..=kmax` by Miller's backward recurrence.
pub fn scaled_bessel_i(kmax: usize, z: f64) -> Vec<f64> {
    let mut out = vec![0.0; kmax + 1];
    if z == 0.0 {
        out[0] = 1.0;
        return out;
    }
    let start = kmax + (12.0 * z.sqrt()) as usize + 40;
    let mut b = vec![0.0f64; start + 2];
    b[start] = 1e-300;
    for k in (1..=start).rev() {
        b[k - 1] = b[k + 1] + (2.0 * k as f64 / z) * b[k];
        if b[k - 1] > 1e250 {
            for v in b.iter_mut().skip(k - 1) {
                *v *= 1e-250;
            }
        }
    }
    let norm = b[0] + 2.0 * b[1..].iter().sum::<f64>();
    for (o, v) in out.iter_mut().zip(&b) {
        *o = v / norm;
    }
    out
}

/// `G_0(x)` on `Z^d`, `d >= 3`, by Fourier quadrature: the last
/// coordinate is integrated in closed form and the remaining cube is split
/// into pyramids with a Duffy map removing the singularity at the origin.
pub fn green_zd_fourier(x: &[i64], tol: f64) -> Result<f64> {
    let d = x.len();
    if d < 3 {
        return Err(Error::InvalidInput("Fourier evaluator needs d >= 3".into()));
    }
    check_offset(x)?;
    let mut ax: Vec<i64> = x.iter().map(|c| c.abs()).collect();
    ax.sort_unstable();
    let last = ax[d - 1] as i32;
    let rest: Vec<f64> = ax[..d - 1].iter().map(|&c| c as f64).collect();
    let m = d - 1;
    let integrand = |k: &[f64]| -> f64 {
        let amb: f64 = k.iter().map(|&t| 4.0 * (0.5 * t).sin().powi(2)).sum();
        let a = 2.0 + amb;
        let s = (amb * (a + 2.0)).sqrt();
        let r = 2.0 / (a + s);
        let c: f64 = k.iter().zip(&rest).map(|(t, xi)| (t * xi).cos()).product();
        c * r.powi(last) / s
    };
    let eval = |n: usize| -> f64 {
        let rule = gl_interval(n, 0.0, 1.0);
        let mut total = 0.0;
        let mut k = vec![0.0; m];
        let mut idx = vec![0usize; m - 1];
        for axis in 0..m {
            for &(u, wu) in &rule {
                // iterate over the (m-1)-dimensional tensor grid in v
                idx.iter_mut().for_each(|i| *i = 0);
                loop {
                    let mut w = wu * u.powi(m as i32 - 1);
                    let mut slot = 0;
                    for (dim, kk) in k.iter_mut().enumerate() {
                        if dim == axis {
                            *kk = PI * u;
                        } else {
                            let (v, wv) = rule[idx[slot]];
                            *kk = PI * u * v;
                            w *= wv;
                            slot += 1;
                        }
                    }
                    total += w * integrand(&k);
                    let mut carry = 0;
                    while carry < m - 1 {
                        idx[carry] += 1;
                        if idx[carry] < n {
                            break;
                        }
                        idx[carry] = 0;
                        carry += 1;
                    }
                    if carry == m - 1 {
                        break;
                    }
                }
            }
        }
        total
    };
    let mut n = 16 + 2 * ax.iter().sum::<i64>() as usize;
    let mut prev = eval(n);
    for _ in 0..5 {
        n *= 2;
        let v = eval(n);
        if (v - prev).abs() <= tol {
            return Ok(v);
        }
        prev = v;
    }
    Err(Error::NoConvergence {
        iterations: n,
        residual: f64::NAN,
    })
}

/// `G_0(x)` on `Z^d`, `d >= 3`, as the occupation integral of continuous-time
/// random walk, `int_0^T prod_i e^{-2t} I_{x_i}(2t) dt`, with the tail
/// removed by Richardson extrapolation in `T`.
pub fn green_zd_random_walk(x: &[i64]) -> Result<f64> {
    let d = x.len();
    if d < 3 {
        return Err(Error::InvalidInput("random-walk evaluator needs d >= 3".into()));
    }
    check_offset(x)?;
    let ax: Vec<usize> = x.iter().map(|c| c.unsigned_abs() as usize).collect();
    let kmax = *ax.iter().max().expect("nonempty");
    let f = |t: f64| -> f64 {
        let b = scaled_bessel_i(kmax, 2.0 * t);
        ax.iter().map(|&k| b[k]).product()
    };
    let panel = |a: f64, b: f64| -> f64 { gl_interval(40, a, b).iter().map(|(t, w)| w * f(*t)).sum() };
    let t0 = 512.0;
    let levels = 4;
    let mut partial = Vec::with_capacity(levels);
    let mut acc = panel(0.0, 0.5) + panel(0.5, 1.0);
    let mut hi = 1.0;
    while hi < t0 {
        acc += panel(hi, 2.0 * hi);
        hi *= 2.0;
    }
    partial.push((hi, acc));
    for _ in 1..levels {
        acc += panel(hi, 2.0 * hi);
        hi *= 2.0;
        partial.push((hi, acc));
    }
    // S(T) = G - sum_l c_l T^{-(p+l)}, p = d/2 - 1
    let p = d as f64 / 2.0 - 1.0;
    let rows: Vec<Vec<f64>> = partial
        .iter()
        .map(|(t, _)| {
            let mut r = vec![1.0];
            r.extend((0..levels - 1).map(|l| -t.powf(-(p + l as f64))));
            r
        })
        .collect();
    let a = DenseMatrix::from_rows(rows)?;
    let b = DenseMatrix::from_rows(partial.iter().map(|(_, s)| vec![*s]).collect())?;
    Ok(a.solve(&b)?[(0, 0)])
}

/// Evaluation strategy for [`InfiniteGreen`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KernelEvaluator {
    /// Exact table on `Z^2`, Fourier quadrature elsewhere.
    Default,
    Fourier,
    RandomWalk,
}

/// Which local transfer matrix to build.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum MbarMode {
    Plain,
    /// Hypercubic: row `-e_1` replaced by row `e_1`.
    Prime,
    /// Triangular: row `e_{1+alpha}` replaced by row `e_1`, `alpha` in 1..=5.
    Alpha(usize),
}

/// Infinite-volume Green's function `G_0` with memoised values.
#[derive(Debug)]
pub struct InfiniteGreen {
    kind: LatticeKind,
    evaluator: KernelEvaluator,
    memo: Mutex<HashMap<Vec<i64>, f64>>,
}

impl InfiniteGreen {
    pub fn new(kind: LatticeKind) -> Self {
        Self::with_evaluator(kind, KernelEvaluator::Default)
    }

    pub fn with_evaluator(kind: LatticeKind, evaluator: KernelEvaluator) -> Self {
        Self {
            kind,
            evaluator,
            memo: Mutex::new(HashMap::new()),
        }
    }

    pub fn kind(&self) -> LatticeKind {
        self.kind
    }

    fn compute(&self, x: &[i64]) -> Result<f64> {
        match (self.kind, self.evaluator) {
            (LatticeKind::Hypercubic { dim: 2 }, KernelEvaluator::Default) => {
                let a = match z2_table().value(x[0], x[1]) {
                    Some(v) => v,
                    None => potential_kernel_z2_fourier(x[0], x[1])?,
                };
                Ok(-a / 4.0)
            }
            (LatticeKind::Hypercubic { dim: 2 }, KernelEvaluator::Fourier) => {
                Ok(-potential_kernel_z2_fourier(x[0], x[1])? / 4.0)
            }
            (LatticeKind::Hypercubic { dim: 2 }, KernelEvaluator::RandomWalk) => {
                Ok(-potential_kernel_z2_series(x[0], x[1], 100_000) / 4.0)
            }
            (LatticeKind::Hypercubic { dim: 1 }, _) => Err(Error::InvalidInput(
                "no infinite-volume Green's function in one dimension".into(),
            )),
            (LatticeKind::Hypercubic { .. }, KernelEvaluator::RandomWalk) => green_zd_random_walk(x),
            (LatticeKind::Hypercubic { .. }, _) => green_zd_fourier(x, 1e-12),
            (LatticeKind::Triangular, KernelEvaluator::RandomWalk) => Err(Error::InvalidInput(
                "random-walk evaluator is only available on Z^d".into(),
            )),
            (LatticeKind::Triangular, _) => Ok(-potential_kernel_triangular(x[0], x[1])? / 6.0),
        }
    }

    /// `G_0(x)`.
    pub fn value(&self, x: &[i64]) -> Result<f64> {
        if x.len() != self.kind.dim() {
            return Err(Error::InvalidInput(format!("offset {x:?} has wrong dimension")));
        }
        if let Some(v) = self.memo.lock().expect("memo poisoned").get(x) {
            return Ok(*v);
        }
        let v = self.compute(x)?;
        self.memo.lock().expect("memo poisoned").insert(x.to_vec(), v);
        Ok(v)
    }

    /// `Mbar(f, g)` for directions `f`, `g` at the origin.
    pub fn mbar(&self, f: usize, g: usize, mode: MbarMode) -> Result<f64> {
        let c = self.kind.coordination();
        if f >= c || g >= c {
            return Err(Error::InvalidInput(format!("direction out of range ({f}, {g})")));
        }
        let row = match (mode, self.kind) {
            (MbarMode::Plain, _) => f,
            (MbarMode::Prime, LatticeKind::Hypercubic { dim }) => {
                if f == dim {
                    0
                } else {
                    f
                }
            }
            (MbarMode::Alpha(a), LatticeKind::Triangular) if (1..=5).contains(&a) => {
                if f == a {
                    0
                } else {
                    f
                }
            }
            _ => {
                return Err(Error::InvalidInput(format!(
                    "mode {mode:?} does not apply to {:?}",
                    self.kind
                )))
            }
        };
        let ef = self.kind.offset(row);
        let eg = self.kind.offset(g);
        let diff: Vec<i64> = ef.iter().zip(&eg).map(|(a, b)| a - b).collect();
        let neg_g: Vec<i64> = eg.iter().map(|a| -a).collect();
        let origin = vec![0; ef.len()];
        Ok(self.value(&diff)? - self.value(&ef)? - self.value(&neg_g)? + self.value(&origin)?)
    }

    /// Full `c x c` matrix of [`InfiniteGreen::mbar`].
    pub fn mbar_matrix(&self, mode: MbarMode) -> Result<DenseMatrix<f64>> {
        let c = self.kind.coordination();
        let mut m = DenseMatrix::zeros(c, c);
        for f in 0..c {
            for g in 0..c {
                m[(f, g)] = self.mbar(f, g, mode)?;
            }
        }
        Ok(m)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::FRAC_1_PI;

    #[test]
    fn gauss_legendre_exact_on_polynomials() {
        let (x, w) = gauss_legendre(5);
        let s: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(8)).sum();
        assert!((s - 2.0 / 9.0).abs() < 1e-14);
        assert!((w.iter().sum::<f64>() - 2.0).abs() < 1e-14);
    }

    #[test]
    fn exact_table_values() {
        let t = KernelTableZ2::new(8);
        assert_eq!(t.value(0, 0), Some(0.0));
        assert!((t.value(1, 0).unwrap() - 1.0).abs() < 1e-15);
        assert!((t.value(1, 1).unwrap() - 4.0 * FRAC_1_PI).abs() < 1e-15);
        assert!((t.value(2, 0).unwrap() - (4.0 - 8.0 * FRAC_1_PI)).abs() < 1e-15);
        assert_eq!(t.value(0, -2), t.value(2, 0));
        assert!(t.value(9, 0).is_none());
    }

    #[test]
    fn exact_table_is_harmonic() {
        let t = KernelTableZ2::new(12);
        for p in 0..11i64 {
            for q in 0..11i64 {
                let lap = t.value(p + 1, q).unwrap() + t.value(p - 1, q).unwrap() + t.value(p, q + 1).unwrap()
                    + t.value(p, q - 1).unwrap()
                    - 4.0 * t.value(p, q).unwrap();
                let expect = if p == 0 && q == 0 { 4.0 } else { 0.0 };
                assert!((lap - expect).abs() < 1e-12, "({p},{q}) {lap}");
            }
        }
    }

    #[test]
    fn fourier_matches_exact_table() {
        let t = KernelTableZ2::new(6);
        for (x, y) in [(1, 0), (1, 1), (2, 0), (2, 1), (3, 2), (5, 0), (6, 6)] {
            let f = potential_kernel_z2_fourier(x, y).unwrap();
            assert!((f - t.value(x, y).unwrap()).abs() < 1e-12, "({x},{y})");
        }
    }

    #[test]
    fn series_matches_exact_table() {
        let t = KernelTableZ2::new(2);
        for (x, y) in [(1, 0), (1, 1), (2, 0), (2, 1), (2, 2)] {
            let s = potential_kernel_z2_series(x, y, 100_000);
            assert!((s - t.value(x, y).unwrap()).abs() < 2e-3, "({x},{y}) {s}");
        }
    }

    #[test]
    fn triangular_kernel_values() {
        for (x, y) in [(1, 0), (0, 1), (-1, 1), (-1, 0), (0, -1), (1, -1)] {
            assert!((potential_kernel_triangular(x, y).unwrap() - 1.0).abs() < 1e-12);
        }
        let s3 = 3f64.sqrt();
        let a11 = potential_kernel_triangular(1, 1).unwrap();
        assert!((a11 - (6.0 * s3 / PI - 2.0)).abs() < 1e-12, "{a11}");
        let a20 = potential_kernel_triangular(2, 0).unwrap();
        assert!((a20 - (8.0 - 12.0 * s3 / PI)).abs() < 1e-12, "{a20}");
    }

    #[test]
    fn triangular_kernel_harmonic() {
        let pts = [(0i64, 0i64), (1, 0), (2, -1), (3, 1)];
        for (x, y) in pts {
            let lap: f64 = TRI
                .iter()
                .map(|(dx, dy)| potential_kernel_triangular(x + dx, y + dy).unwrap())
                .sum::<f64>()
                - 6.0 * potential_kernel_triangular(x, y).unwrap();
            let expect = if (x, y) == (0, 0) { 6.0 } else { 0.0 };
            assert!((lap - expect).abs() < 1e-11);
        }
    }

    const TRI: [(i64, i64); 6] = [(1, 0), (0, 1), (-1, 1), (-1, 0), (0, -1), (1, -1)];

    #[test]
    fn bessel_normalisation() {
        for z in [0.01, 1.0, 30.0, 2000.0] {
            let b = scaled_bessel_i(3, z);
            let ratio = b[1] / b[0];
            // I_1/I_0 ~ 1 - 1/(2z) for large z
            assert!(ratio > 0.0 && ratio < 1.0);
        }
        let b = scaled_bessel_i(1, 1.0);
        assert!((b[0] - 1.266_065_877_752_008_4 * (-1f64).exp()).abs() < 1e-15);
    }

    #[test]
    fn green_z3_two_evaluators() {
        let watson = 1.516_386_059_151_978 / 6.0;
        let f0 = green_zd_fourier(&[0, 0, 0], 1e-12).unwrap();
        assert!((f0 - watson).abs() < 1e-9, "{f0}");
        let r0 = green_zd_random_walk(&[0, 0, 0]).unwrap();
        assert!((r0 - f0).abs() < 1e-7, "{r0} vs {f0}");
        let f1 = green_zd_fourier(&[1, 0, 0], 1e-12).unwrap();
        assert!((6.0 * f0 - 6.0 * f1 - 1.0).abs() < 1e-8);
        let f2 = green_zd_fourier(&[2, 0, 0], 1e-12).unwrap();
        assert!(f2 < f1);
        let r11 = green_zd_random_walk(&[1, 1, 0]).unwrap();
        let f11 = green_zd_fourier(&[0, 1, -1], 1e-12).unwrap();
        assert!((r11 - f11).abs() < 1e-7);
    }

    #[test]
    fn mbar_square_values() {
        let g = InfiniteGreen::new(LatticeKind::square());
        assert!((g.mbar(0, 0, MbarMode::Plain).unwrap() - 0.5).abs() < 1e-15);
        assert!((g.mbar(0, 2, MbarMode::Plain).unwrap() - (2.0 * FRAC_1_PI - 0.5)).abs() < 1e-15);
        assert!((g.mbar(0, 1, MbarMode::Plain).unwrap() - (0.5 - FRAC_1_PI)).abs() < 1e-15);
        let p = g.mbar_matrix(MbarMode::Prime).unwrap();
        let plain = g.mbar_matrix(MbarMode::Plain).unwrap();
        assert_eq!(p.row(2), plain.row(0));
        assert!(g.mbar(0, 0, MbarMode::Alpha(1)).is_err());
    }

    #[test]
    fn mbar_triangular_edge_density() {
        let g = InfiniteGreen::new(LatticeKind::Triangular);
        assert!((g.mbar(0, 0, MbarMode::Plain).unwrap() - 1.0 / 3.0).abs() < 1e-13);
        assert!(g.mbar(0, 0, MbarMode::Prime).is_err());
        let m = g.mbar_matrix(MbarMode::Alpha(3)).unwrap();
        assert_eq!(m.row(3), m.row(0));
    }
}
