//! Lattice constants of the height-one cumulant limits and their relation
//! to single-site height-one probabilities.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::greenfn::{InfiniteGreen, KernelEvaluator, MbarMode};
use crate::lattice::LatticeKind;
use crate::linalg::DenseMatrix;

/// One subset `E_o` of the constant's defining sum.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubsetTerm {
    /// Bit `k` set when direction `k` is in `E_o`.
    pub mask: u32,
    pub size: usize,
    pub k_weight: i64,
    /// `det(Mbar)` on `E_o` minus the first direction.
    pub det: f64,
    /// `(alpha, gamma_alpha, det(Mbar^alpha))` for each replaced row present.
    pub replaced: Vec<(usize, f64, f64)>,
    pub contribution: f64,
}

/// A lattice constant with its closed form (when known) and subset ledger.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConstantResult {
    pub lattice: String,
    pub value: f64,
    pub closed_form: Option<f64>,
    pub terms: Vec<SubsetTerm>,
}

impl ConstantResult {
    /// `value - closed_form`.
    pub fn delta(&self) -> Option<f64> {
        self.closed_form.map(|c| self.value - c)
    }
}

/// `2/pi - 4/pi^2`.
pub fn c2_closed_form() -> f64 {
    2.0 / PI - 4.0 / (PI * PI)
}

/// `-25/36 + 162/pi^4 - 99 sqrt3/pi^3 + 99/(2 pi^2) - 5/(4 sqrt3 pi)`.
pub fn ct_closed_form() -> f64 {
    let s3 = 3f64.sqrt();
    -25.0 / 36.0 + 162.0 / PI.powi(4) - 99.0 * s3 / PI.powi(3) + 99.0 / (2.0 * PI * PI)
        - 5.0 / (4.0 * s3 * PI)
}

fn replace_row(m: &DenseMatrix<f64>, target: usize, source: usize) -> DenseMatrix<f64> {
    DenseMatrix::from_fn(m.rows(), m.cols(), |i, j| {
        if i == target {
            m[(source, j)]
        } else {
            m[(i, j)]
        }
    })
}

/// `prefactor * sum_{E_o contains 0} (-1)^{|E_o|} |E_o| [det(Mbar) -
/// sum_alpha gamma_alpha 1{alpha in E_o} det(Mbar^alpha)]` with all
/// determinants on `E_o` minus direction 0, and `Mbar^alpha` the matrix with
/// row `alpha` replaced by row 0.
pub fn template_constant(
    mbar: &DenseMatrix<f64>,
    gammas: &[(usize, f64)],
    prefactor: f64,
    label: &str,
) -> ConstantResult {
    let c = mbar.rows();
    let variants: Vec<(usize, f64, DenseMatrix<f64>)> = gammas
        .iter()
        .map(|&(a, g)| (a, g, replace_row(mbar, a, 0)))
        .collect();
    let mut terms = Vec::new();
    let mut total = 0.0;
    for rest in 0u32..(1 << (c - 1)) {
        let mask = 1 | rest << 1;
        let idx: Vec<usize> = (1..c).filter(|&k| mask >> k & 1 == 1).collect();
        let size = idx.len() + 1;
        let k = if size % 2 == 1 { -(size as i64) } else { size as i64 };
        let det = mbar.select(&idx, &idx).determinant();
        let replaced: Vec<(usize, f64, f64)> = variants
            .iter()
            .filter(|(a, _, _)| mask >> a & 1 == 1)
            .map(|(a, g, m)| (*a, *g, m.select(&idx, &idx).determinant()))
            .collect();
        let bracket = det - replaced.iter().map(|(_, g, d)| g * d).sum::<f64>();
        let contribution = prefactor * k as f64 * bracket;
        total += contribution;
        terms.push(SubsetTerm {
            mask,
            size,
            k_weight: k,
            det,
            replaced,
            contribution,
        });
    }
    ConstantResult {
        lattice: label.to_string(),
        value: total,
        closed_form: None,
        terms,
    }
}

/// `C_d` on `Z^d` with the default kernel evaluator.
pub fn c_d(d: usize) -> Result<ConstantResult> {
    c_d_with(d, KernelEvaluator::Default)
}

/// `C_d` with a chosen `G_0` evaluator, `d` in 2..=4.
pub fn c_d_with(d: usize, evaluator: KernelEvaluator) -> Result<ConstantResult> {
    if !(2..=4).contains(&d) {
        return Err(Error::Domain(format!("C_d is available for d in 2..=4, got {d}")));
    }
    let green = InfiniteGreen::with_evaluator(LatticeKind::Hypercubic { dim: d }, evaluator);
    let m = green.mbar_matrix(MbarMode::Plain)?;
    // -e_1 is direction d; the primed matrix enters with a plus sign
    let mut r = template_constant(&m, &[(d, -1.0)], 1.0 / d as f64, &format!("z{d}"));
    if d == 2 {
        r.closed_form = Some(c2_closed_form());
    }
    Ok(r)
}

/// `C_T` on the triangular lattice, `gamma_alpha = cos(alpha pi/3)`.
pub fn c_t() -> Result<ConstantResult> {
    let green = InfiniteGreen::new(LatticeKind::Triangular);
    let m = green.mbar_matrix(MbarMode::Plain)?;
    let gammas: Vec<(usize, f64)> = (1..6).map(|a| (a, (a as f64 * PI / 3.0).cos())).collect();
    let mut r = template_constant(&m, &gammas, 0.5, "tri");
    r.closed_form = Some(ct_closed_form());
    Ok(r)
}

/// The triangular template evaluated on `Z^2` with `gamma_alpha =
/// cos(alpha pi/2)`; equals `C_2`.
pub fn c_t_square_degeneration() -> Result<ConstantResult> {
    let green = InfiniteGreen::new(LatticeKind::square());
    let m = green.mbar_matrix(MbarMode::Plain)?;
    let gammas: Vec<(usize, f64)> = (1..4).map(|a| (a, (a as f64 * PI / 2.0).cos())).collect();
    let mut r = template_constant(&m, &gammas, 0.5, "z2_from_tri_template");
    r.closed_form = Some(c2_closed_form());
    Ok(r)
}

/// Single-site height-one probability in infinite volume from the local
/// matrix `Mbar`: `c^{-1} sum_eta sum_{A} (-1)^{|A|} det(Mbar)_{eta + A}`.
pub fn infinite_volume_height_one(kind: LatticeKind) -> Result<f64> {
    let m = InfiniteGreen::new(kind).mbar_matrix(MbarMode::Plain)?;
    let c = m.rows();
    let mut total = 0.0;
    for eta in 0..c {
        for a in 0u32..(1 << c) {
            if a >> eta & 1 == 1 {
                continue;
            }
            let mut idx: Vec<usize> = vec![eta];
            idx.extend((0..c).filter(|&k| a >> k & 1 == 1));
            let d = m.select(&idx, &idx).determinant();
            total += if a.count_ones() % 2 == 1 { -d } else { d };
        }
    }
    Ok(total / c as f64)
}

/// Height-one probability implied by the lattice constant: `C_2/pi` on
/// `Z^2`, `C_T (1/18 + 1/(sqrt3 pi))` on the triangular lattice.
pub fn height_one_from_constant(kind: LatticeKind) -> Result<f64> {
    match kind {
        LatticeKind::Hypercubic { dim: 2 } => Ok(c_d(2)?.value / PI),
        LatticeKind::Triangular => Ok(c_t()?.value * (1.0 / 18.0 + 1.0 / (3f64.sqrt() * PI))),
        other => Err(Error::Domain(format!("no height-one relation for {other:?}"))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn square_constant() {
        let r = c_d(2).unwrap();
        assert!((r.value - 0.2313).abs() < 1e-4, "{}", r.value);
        assert!(r.delta().unwrap().abs() < 1e-9, "{}", r.value);
        assert_eq!(r.terms.len(), 8);
    }

    #[test]
    fn triangular_constant() {
        let r = c_t().unwrap();
        assert!(r.delta().unwrap().abs() < 1e-6, "{} vs {}", r.value, r.closed_form.unwrap());
        assert!((r.value - 0.2241).abs() < 1e-4);
    }

    #[test]
    fn degeneration_matches_square() {
        let r = c_t_square_degeneration().unwrap();
        assert!((r.value - c_d(2).unwrap().value).abs() < 1e-9);
        for t in &r.terms {
            for &(a, g, _) in &t.replaced {
                if a % 2 == 1 {
                    assert!(g.abs() < 1e-15);
                }
            }
        }
    }

    #[test]
    fn alpha_two_term_is_the_primed_branch() {
        let tri = c_t_square_degeneration().unwrap();
        let sq = c_d(2).unwrap();
        for (a, b) in tri.terms.iter().zip(&sq.terms) {
            assert_eq!(a.mask, b.mask);
            let pa: Vec<f64> = a.replaced.iter().filter(|x| x.0 == 2).map(|x| x.2).collect();
            let pb: Vec<f64> = b.replaced.iter().map(|x| x.2).collect();
            assert_eq!(pa.len(), pb.len());
            for (x, y) in pa.iter().zip(&pb) {
                assert!((x - y).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn height_one_relations() {
        let sq = infinite_volume_height_one(LatticeKind::square()).unwrap();
        let target = 2.0 / (PI * PI) - 4.0 / PI.powi(3);
        assert!((sq - target).abs() < 1e-12, "{sq}");
        assert!((height_one_from_constant(LatticeKind::square()).unwrap() - target).abs() < 1e-12);
        let tri = infinite_volume_height_one(LatticeKind::Triangular).unwrap();
        let via_c = height_one_from_constant(LatticeKind::Triangular).unwrap();
        assert!((tri - via_c).abs() < 1e-9, "{tri} {via_c}");
    }

    #[test]
    fn ledger_sum_is_order_independent() {
        let r = c_d(2).unwrap();
        let fwd: f64 = r.terms.iter().map(|t| t.contribution).sum();
        let rev: f64 = r.terms.iter().rev().map(|t| t.contribution).sum();
        assert!((fwd - rev).abs() < 1e-15);
        assert!((fwd - r.value).abs() < 1e-15);
    }

    #[test]
    fn three_dimensional_evaluators_agree() {
        let a = c_d_with(3, KernelEvaluator::Fourier).unwrap().value;
        let b = c_d_with(3, KernelEvaluator::RandomWalk).unwrap().value;
        assert!((a - b).abs() < 1e-6, "{a} {b}");
        assert!(a.is_finite() && a > 0.0);
    }

    #[test]
    fn bad_dimension() {
        assert!(matches!(c_d(5), Err(Error::Domain(_))));
    }
}
