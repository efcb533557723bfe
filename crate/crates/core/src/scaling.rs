//! Scaling-limit experiments on the unit disk: rescaled lattice cumulants
//! against continuum permutation sums of mixed derivatives of `g_U`.

use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::combinatorics::cyclic_permutations;
use crate::constants::c2_closed_form;
use crate::cumulants::{closed_form_cumulant, FieldKind};
use crate::error::{Error, Result};
use crate::greenfn::{DiskGreen, GreenTable};
use crate::lattice::{FiniteLattice, LatticeKind};

/// `U_eps = (U/eps) cap Z^2` for the unit disk `U`.
#[derive(Debug, Clone)]
pub struct ScalingGrid {
    pub epsilon: f64,
    pub lattice: Arc<FiniteLattice>,
}

impl ScalingGrid {
    pub fn new(epsilon: f64) -> Result<Self> {
        if !(epsilon > 0.0 && epsilon < 0.5) {
            return Err(Error::InvalidInput(format!("mesh {epsilon} outside (0, 1/2)")));
        }
        let r = (1.0 / epsilon).ceil() as i64;
        let inv = 1.0 / epsilon;
        let mut pts = Vec::new();
        for y in -r..=r {
            for x in -r..=r {
                if ((x * x + y * y) as f64) < inv * inv {
                    pts.push(vec![x, y]);
                }
            }
        }
        Ok(Self {
            epsilon,
            lattice: Arc::new(FiniteLattice::from_points(LatticeKind::square(), pts)?),
        })
    }

    /// Lattice point `floor(v/eps)`.
    pub fn lattice_point(&self, v: [f64; 2]) -> Vec<i64> {
        v.iter().map(|c| (c / self.epsilon).floor() as i64).collect()
    }

    /// Vertex index of `floor(v/eps)`.
    pub fn vertex(&self, v: [f64; 2]) -> Result<usize> {
        let p = self.lattice_point(v);
        self.lattice
            .vertex_at(&p)
            .ok_or_else(|| Error::Domain(format!("{v:?} maps outside U_eps")))
    }

    /// Images of `points`, checked to be distinct, non-adjacent and interior.
    pub fn vertices(&self, points: &[[f64; 2]]) -> Result<Vec<usize>> {
        let vs = points.iter().map(|&p| self.vertex(p)).collect::<Result<Vec<_>>>()?;
        if vs.iter().any(|&v| !self.lattice.is_interior(v)) || !self.lattice.is_good_set(&vs) {
            return Err(Error::InvalidInput(format!(
                "mesh {} too coarse for {points:?}",
                self.epsilon
            )));
        }
        Ok(vs)
    }
}

fn check_points(points: &[[f64; 2]]) -> Result<()> {
    for (i, p) in points.iter().enumerate() {
        if p[0] * p[0] + p[1] * p[1] >= 1.0 {
            return Err(Error::Domain(format!("{p:?} is not inside the unit disk")));
        }
        if points[..i].contains(p) {
            return Err(Error::InvalidInput(format!("repeated point {p:?}")));
        }
    }
    Ok(())
}

/// `eps^{-2n} kappa` on `U_eps` by the closed form.
pub fn scaled_cumulant(field: FieldKind, points: &[[f64; 2]], epsilon: f64) -> Result<f64> {
    check_points(points)?;
    let grid = ScalingGrid::new(epsilon)?;
    let vs = grid.vertices(points)?;
    let g = GreenTable::for_vertices(grid.lattice.clone(), &vs)?;
    let k = closed_form_cumulant(&g, &vs, field)?.value;
    Ok(k * epsilon.powi(-2 * points.len() as i32))
}

/// `sum_{sigma cyclic} sum_{eta} prod_v d_{eta(v)}^{(1)} d_{eta(sigma v)}^{(2)}
/// g_U(v, sigma v)`, with `eta` over `{e_1, e_2}` or, when `signed`, over
/// `{+-e_1, +-e_2}`.
pub fn continuum_permutation_sum(points: &[[f64; 2]], signed: bool) -> Result<f64> {
    check_points(points)?;
    let n = points.len();
    if n < 2 {
        return Err(Error::InvalidInput("continuum targets need at least two points".into()));
    }
    let g = DiskGreen;
    let dirs: Vec<(usize, f64)> = if signed {
        vec![(0, 1.0), (1, 1.0), (0, -1.0), (1, -1.0)]
    } else {
        vec![(0, 1.0), (1, 1.0)]
    };
    let k = dirs.len();
    let mut total = 0.0;
    for s in cyclic_permutations(n) {
        for code in 0..k.pow(n as u32) {
            let eta: Vec<(usize, f64)> = (0..n).map(|i| dirs[code / k.pow(i as u32) % k]).collect();
            let mut prod = 1.0;
            for i in 0..n {
                let j = s.apply(i);
                let (a, sa) = eta[i];
                let (b, sb) = eta[j];
                prod *= sa * sb * g.mixed_partial(points[i], points[j], a, b)?;
            }
            total += prod;
        }
    }
    Ok(total)
}

/// Field prefactor of the continuum target: `-(1/2)^n` for `-X`,
/// `-(-1/2)^n` for the degree field, `-(C_2)^n` for XY.
pub fn target_prefactor(field: FieldKind, n: usize) -> f64 {
    let base = match field {
        FieldKind::NegX => 0.5,
        FieldKind::Degree => -0.5,
        FieldKind::XY => c2_closed_form(),
    };
    -base.powi(n as i32)
}

/// Continuum limit of the rescaled cumulant at `points`.
pub fn continuum_target(field: FieldKind, points: &[[f64; 2]]) -> Result<f64> {
    Ok(target_prefactor(field, points.len()) * continuum_permutation_sum(points, false)?)
}

/// One row of a convergence sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub epsilon: f64,
    pub vertices: usize,
    pub scaled: f64,
    pub target: f64,
    pub relative_error: f64,
}

/// Sweep table with its monotonicity summary.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sweep {
    pub field: FieldKind,
    pub points: Vec<[f64; 2]>,
    pub rows: Vec<SweepRow>,
}

impl Sweep {
    /// Number of steps where the error did not decrease.
    pub fn non_monotone_steps(&self) -> usize {
        self.rows
            .windows(2)
            .filter(|w| w[1].relative_error >= w[0].relative_error)
            .count()
    }

    /// Finest-mesh ratio `scaled / target`.
    pub fn final_ratio(&self) -> Option<f64> {
        self.rows.last().map(|r| r.scaled / r.target)
    }
}

/// Rescaled cumulants against the continuum target for a decreasing list
/// of meshes.
pub fn convergence_sweep(field: FieldKind, points: &[[f64; 2]], eps: &[f64]) -> Result<Sweep> {
    if eps.windows(2).any(|w| w[1] >= w[0]) {
        return Err(Error::InvalidInput("mesh list must be decreasing".into()));
    }
    let target = continuum_target(field, points)?;
    let rows = eps
        .par_iter()
        .map(|&e| {
            let scaled = scaled_cumulant(field, points, e)?;
            Ok(SweepRow {
                epsilon: e,
                vertices: ScalingGrid::new(e)?.lattice.len(),
                scaled,
                target,
                relative_error: ((scaled - target) / target).abs(),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Sweep {
        field,
        points: points.to_vec(),
        rows,
    })
}

/// `amplitude * exp(1 - 1/(1 - |x - center|^2/radius^2))` on the open disk
/// of the given radius, zero outside; peak value `amplitude`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TestFunction {
    pub center: [f64; 2],
    pub radius: f64,
    pub amplitude: f64,
}

impl TestFunction {
    pub fn eval(&self, x: [f64; 2]) -> f64 {
        let dx = x[0] - self.center[0];
        let dy = x[1] - self.center[1];
        let t = (dx * dx + dy * dy) / (self.radius * self.radius);
        if t >= 1.0 {
            0.0
        } else {
            self.amplitude * (1.0 - 1.0 / (1.0 - t)).exp()
        }
    }

    fn disjoint(&self, other: &Self) -> bool {
        let d = ((self.center[0] - other.center[0]).powi(2)
            + (self.center[1] - other.center[1]).powi(2))
        .sqrt();
        d >= self.radius + other.radius
    }

    /// Midpoint rule on a `k x k` grid over the square `[a, a + h)^2`.
    fn cell_integral(&self, a: [f64; 2], h: f64, k: usize) -> f64 {
        let s = h / k as f64;
        let mut acc = 0.0;
        for i in 0..k {
            for j in 0..k {
                acc += self.eval([a[0] + (i as f64 + 0.5) * s, a[1] + (j as f64 + 0.5) * s]);
            }
        }
        acc * s * s
    }

    /// Midpoint nodes and weights on an `m x m` grid over the support.
    pub fn quadrature(&self, m: usize) -> Vec<([f64; 2], f64)> {
        let h = 2.0 * self.radius / m as f64;
        let mut out = Vec::new();
        for i in 0..m {
            for j in 0..m {
                let x = [
                    self.center[0] - self.radius + (i as f64 + 0.5) * h,
                    self.center[1] - self.radius + (j as f64 + 0.5) * h,
                ];
                let w = self.eval(x) * h * h;
                if w > 0.0 {
                    out.push((x, w));
                }
            }
        }
        out
    }
}

fn check_functions(fns: &[TestFunction]) -> Result<()> {
    if fns.len() < 2 {
        return Err(Error::InvalidInput("need at least two test functions".into()));
    }
    for (i, f) in fns.iter().enumerate() {
        let r = (f.center[0].powi(2) + f.center[1].powi(2)).sqrt() + f.radius;
        if r >= 1.0 || f.radius <= 0.0 {
            return Err(Error::Domain(format!("support of {f:?} leaves the disk")));
        }
        if fns[..i].iter().any(|g| !g.disjoint(f)) {
            return Err(Error::InvalidInput("test function supports overlap".into()));
        }
    }
    Ok(())
}

/// `eps^{-2n} int kappa(x_1, .., x_n) prod f_i(x_i) dx`, with the lattice
/// field at `floor(x/eps)`; each cell weight is integrated with a
/// `resolution x resolution` midpoint rule.
pub fn smeared_cumulant(
    field: FieldKind,
    fns: &[TestFunction],
    epsilon: f64,
    resolution: usize,
) -> Result<f64> {
    check_functions(fns)?;
    let grid = ScalingGrid::new(epsilon)?;
    let lattice = &grid.lattice;
    // cells meeting each support, with their weights
    let cells: Vec<Vec<(usize, f64)>> = fns
        .iter()
        .map(|f| {
            let lo = grid.lattice_point([f.center[0] - f.radius, f.center[1] - f.radius]);
            let hi = grid.lattice_point([f.center[0] + f.radius, f.center[1] + f.radius]);
            let mut out = Vec::new();
            for y in lo[1]..=hi[1] {
                for x in lo[0]..=hi[0] {
                    let a = [x as f64 * epsilon, y as f64 * epsilon];
                    let w = f.cell_integral(a, epsilon, resolution.max(1));
                    if w > 0.0 {
                        let v = lattice
                            .vertex_at(&[x, y])
                            .ok_or_else(|| Error::Domain("support leaves U_eps".into()))?;
                        out.push((v, w));
                    }
                }
            }
            Ok(out)
        })
        .collect::<Result<_>>()?;
    let all: Vec<usize> = cells.iter().flatten().map(|&(v, _)| v).collect();
    let g = GreenTable::for_vertices(lattice.clone(), &all)?;
    let n = fns.len();
    let counts: Vec<usize> = cells.iter().map(|c| c.len()).collect();
    let total: usize = counts.iter().product();
    let terms = (0..total)
        .into_par_iter()
        .map(|mut code| {
            let mut vs = Vec::with_capacity(n);
            let mut w = 1.0;
            for (c, &k) in cells.iter().zip(&counts) {
                let (v, wi) = c[code % k];
                code /= k;
                vs.push(v);
                w *= wi;
            }
            Ok(closed_form_cumulant(&g, &vs, field)?.value * w)
        })
        .collect::<Result<Vec<f64>>>()?;
    Ok(terms.iter().sum::<f64>() * epsilon.powi(-2 * n as i32))
}

/// `int target(x_1, x_2) f_1 f_2` for two test functions by midpoint
/// quadrature on an `m x m` grid per support.
pub fn smeared_target(field: FieldKind, fns: &[TestFunction], m: usize) -> Result<f64> {
    check_functions(fns)?;
    if fns.len() != 2 {
        return Err(Error::InvalidInput("continuum smeared targets support n = 2".into()));
    }
    let q1 = fns[0].quadrature(m);
    let q2 = fns[1].quadrature(m);
    let terms = q1
        .par_iter()
        .map(|&(x, wx)| {
            let mut acc = 0.0;
            for &(y, wy) in &q2 {
                acc += continuum_target(field, &[x, y])? * wx * wy;
            }
            Ok(acc)
        })
        .collect::<Result<Vec<f64>>>()?;
    Ok(terms.iter().sum())
}
