//! Joint cumulants of the degree and height-one fields, by partition sums
//! over determinantal moments and by closed permutation formulas.

use std::collections::HashMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::combinatorics::{connected_signed_sum, cyclic_permutations, partitions};
use crate::error::{Error, Result};
use crate::greenfn::GreenTable;
use crate::lattice::{DirectedEdge, LatticeDescriptor, LatticeKind};
use crate::moments::{x_moment, xy_moment};
use crate::scalar::Scalar;

/// Largest vertex set for partition sums.
pub const MAX_CUMULANT_ORDER: usize = 8;

/// Cap on `sum_v |E_v|` for the XY closed form.
pub const MAX_XY_EDGES: usize = 12;

/// Field whose joint cumulant is computed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FieldKind {
    /// `-X_v`.
    NegX,
    /// UST degree field `deg_T(v)/c`, with the moments of `X`.
    Degree,
    /// `X_v Y_v`, the height-one field.
    #[serde(rename = "xy", alias = "height_one")]
    XY,
}

impl FieldKind {
    pub fn label(&self) -> &'static str {
        match self {
            FieldKind::NegX => "neg_x",
            FieldKind::Degree => "degree",
            FieldKind::XY => "xy",
        }
    }
}

impl std::str::FromStr for FieldKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().replace('-', "_").as_str() {
            "neg_x" | "negx" => Ok(FieldKind::NegX),
            "degree" => Ok(FieldKind::Degree),
            "xy" | "height_one" => Ok(FieldKind::XY),
            other => Err(Error::InvalidInput(format!("unknown field kind {other:?}"))),
        }
    }
}

/// Evaluation route.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CumulantPath {
    ClosedForm,
    PartitionSum,
}

/// Cumulant value with summation statistics.
#[derive(Debug, Clone, PartialEq)]
pub struct CumulantValue<T> {
    pub value: T,
    pub term_count: usize,
    pub max_term_magnitude: f64,
}

impl<T: Scalar> CumulantValue<T> {
    fn from_terms(terms: Vec<T>) -> Self {
        let max = terms.iter().map(|t| t.as_f64().abs()).fold(0.0, f64::max);
        let n = terms.len();
        let value = terms.into_iter().fold(T::zero(), |a, b| a + b);
        Self {
            value,
            term_count: n,
            max_term_magnitude: max,
        }
    }
}

/// `sum_pi (|pi|-1)! (-1)^{|pi|-1} prod_B m(B)` with `m` called once per
/// non-empty subset of `vertices`.
pub fn cumulant_from_moments<T: Scalar>(
    vertices: &[usize],
    moment: impl Fn(&[usize]) -> Result<T>,
) -> Result<CumulantValue<T>> {
    let n = vertices.len();
    if n == 0 || n > MAX_CUMULANT_ORDER {
        return Err(Error::InvalidInput(format!(
            "cumulant order {n} outside 1..={MAX_CUMULANT_ORDER}"
        )));
    }
    let mut cache: HashMap<u32, T> = HashMap::new();
    let mut terms = Vec::new();
    for p in partitions(n)? {
        let k = p.len();
        let mut prod = T::from_i64((1..k as i64).product::<i64>());
        if k % 2 == 0 {
            prod = -prod;
        }
        for block in p.blocks() {
            let mask = block.iter().fold(0u32, |m, &i| m | 1 << i);
            let val = match cache.get(&mask) {
                Some(v) => v.clone(),
                None => {
                    let sub: Vec<usize> = block.iter().map(|&i| vertices[i]).collect();
                    let v = moment(&sub)?;
                    cache.insert(mask, v.clone());
                    v
                }
            };
            prod = prod * val;
        }
        terms.push(prod);
    }
    Ok(CumulantValue::from_terms(terms))
}

/// Partition-sum cumulant of a field from its determinantal moments.
pub fn partition_sum_cumulant<T: Scalar>(
    g: &GreenTable<T>,
    vertices: &[usize],
    field: FieldKind,
) -> Result<CumulantValue<T>> {
    g.lattice().check_good_set(vertices)?;
    match field {
        FieldKind::NegX => cumulant_from_moments(vertices, |b| {
            let m = x_moment(g, b)?;
            Ok(if b.len() % 2 == 1 { -m } else { m })
        }),
        FieldKind::Degree => cumulant_from_moments(vertices, |b| x_moment(g, b)),
        FieldKind::XY => cumulant_from_moments(vertices, |b| xy_moment(g, b)),
    }
}

fn star_edges(g: &GreenTable<impl Scalar>, vertices: &[usize]) -> Vec<DirectedEdge> {
    vertices
        .iter()
        .flat_map(|&v| g.lattice().edge_star(v))
        .collect()
}

/// `kappa(-X) = -(1/c)^n sum_{sigma cyclic} sum_eta prod_v
/// M(eta(v), eta(sigma v))`; `kappa(Degree) = (-1)^n kappa(-X)`. For a
/// single vertex the moment is returned.
pub fn x_cumulant_closed<T: Scalar>(
    g: &GreenTable<T>,
    vertices: &[usize],
    field: FieldKind,
) -> Result<CumulantValue<T>> {
    let lattice = g.lattice();
    lattice.check_good_set(vertices)?;
    let n = vertices.len();
    let sign_flip = match field {
        FieldKind::NegX => false,
        FieldKind::Degree => n % 2 == 1,
        FieldKind::XY => {
            return Err(Error::InvalidInput("use xy_cumulant_closed for XY".into()));
        }
    };
    if n == 0 || n > MAX_CUMULANT_ORDER {
        return Err(Error::InvalidInput(format!("cumulant order {n}")));
    }
    if n == 1 {
        let m = x_moment(g, vertices)?;
        let m = if field == FieldKind::NegX { -m } else { m };
        return Ok(CumulantValue {
            max_term_magnitude: m.as_f64().abs(),
            value: m,
            term_count: 1,
        });
    }
    let c = lattice.coordination();
    let m = g.transfer_matrix(&star_edges(g, vertices))?;
    let sigmas = cyclic_permutations(n);
    let etas = c.pow(n as u32);
    let scale = T::from_i64(c as i64).powi(n as u32);
    let terms: Vec<T> = (0..etas)
        .into_par_iter()
        .flat_map_iter(|code| {
            let eta: Vec<usize> = (0..n).map(|i| code / c.pow(i as u32) % c).collect();
            let m = &m;
            let scale = scale.clone();
            sigmas.iter().map(move |s| {
                let mut prod = T::one();
                for i in 0..n {
                    let j = s.apply(i);
                    prod = prod * m[(i * c + eta[i], j * c + eta[j])].clone();
                }
                let t = -(prod / scale.clone());
                if sign_flip {
                    -t
                } else {
                    t
                }
            })
        })
        .collect();
    Ok(CumulantValue::from_terms(terms))
}

/// `K(E) = prod_v (-1)^{|E_v|} |E_v|`.
pub fn k_weight(sizes: &[usize]) -> i64 {
    sizes
        .iter()
        .map(|&s| if s % 2 == 1 { -(s as i64) } else { s as i64 })
        .product()
}

/// `kappa(XY) = (-1/c)^n sum_{E: E_v non-empty} K(E) sum_{tau connected}
/// sign(tau) prod_f M(f, tau f)`.
pub fn xy_cumulant_closed<T: Scalar>(
    g: &GreenTable<T>,
    vertices: &[usize],
) -> Result<CumulantValue<T>> {
    let lattice = g.lattice();
    lattice.check_good_set(vertices)?;
    let n = vertices.len();
    let c = lattice.coordination();
    if n == 0 || c * n > MAX_XY_EDGES {
        return Err(Error::Capacity(format!(
            "{} star edges exceed the XY budget {MAX_XY_EDGES}",
            c * n
        )));
    }
    let m = g.transfer_matrix(&star_edges(g, vertices))?;
    let per = (1usize << c) - 1;
    let families = per.pow(n as u32);
    let mut prefactor = T::one() / T::from_i64(c as i64).powi(n as u32);
    if n % 2 == 1 {
        prefactor = -prefactor;
    }
    let terms: Vec<Result<T>> = (0..families)
        .into_par_iter()
        .map(|code| {
            let mut rows = Vec::new();
            let mut owners = Vec::new();
            let mut sizes = Vec::with_capacity(n);
            for v in 0..n {
                let mask = code / per.pow(v as u32) % per + 1;
                let mut s = 0;
                for d in 0..c {
                    if mask >> d & 1 == 1 {
                        rows.push(v * c + d);
                        owners.push(v);
                        s += 1;
                    }
                }
                sizes.push(s);
            }
            let sum = connected_signed_sum(|i, j| m[(rows[i], rows[j])].clone(), &owners, n)?;
            Ok(sum * T::from_i64(k_weight(&sizes)) * prefactor.clone())
        })
        .collect();
    let terms = terms.into_iter().collect::<Result<Vec<T>>>()?;
    Ok(CumulantValue::from_terms(terms))
}

/// Closed-form cumulant for any field.
pub fn closed_form_cumulant<T: Scalar>(
    g: &GreenTable<T>,
    vertices: &[usize],
    field: FieldKind,
) -> Result<CumulantValue<T>> {
    match field {
        FieldKind::XY => xy_cumulant_closed(g, vertices),
        _ => x_cumulant_closed(g, vertices, field),
    }
}

/// Closed forms on a triangular patch; rejects other lattices.
pub fn triangular_cumulants<T: Scalar>(
    g: &GreenTable<T>,
    vertices: &[usize],
    field: FieldKind,
) -> Result<CumulantValue<T>> {
    if g.lattice().kind() != LatticeKind::Triangular {
        return Err(Error::InvalidInput("triangular lattice required".into()));
    }
    closed_form_cumulant(g, vertices, field)
}

/// Serializable cumulant record.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CumulantReport {
    pub field_kind: FieldKind,
    pub lattice: LatticeDescriptor,
    pub points: Vec<Vec<i64>>,
    pub value: f64,
    pub path: CumulantPath,
    pub term_count: usize,
    pub max_term_magnitude: f64,
    /// Set when the order-one convention (cumulant = moment) was applied.
    pub single_vertex: bool,
}

/// Evaluates a cumulant along `path` and packages the result.
pub fn cumulant_report<T: Scalar>(
    g: &GreenTable<T>,
    vertices: &[usize],
    field: FieldKind,
    path: CumulantPath,
) -> Result<CumulantReport> {
    let v = match path {
        CumulantPath::ClosedForm => closed_form_cumulant(g, vertices, field)?,
        CumulantPath::PartitionSum => partition_sum_cumulant(g, vertices, field)?,
    };
    let lattice = g.lattice();
    Ok(CumulantReport {
        field_kind: field,
        lattice: lattice.descriptor(),
        points: vertices.iter().map(|&u| lattice.point(u).to_vec()).collect(),
        value: v.value.as_f64(),
        path,
        term_count: v.term_count,
        max_term_magnitude: v.max_term_magnitude,
        single_vertex: vertices.len() == 1,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::greenfn::dirichlet_green;
    use crate::lattice::FiniteLattice;
    use crate::scalar::Rational;

    fn rel(a: f64, b: f64) -> f64 {
        (a - b).abs() / b.abs().max(1e-300)
    }

    #[test]
    fn order_one_and_two() {
        let m = |b: &[usize]| -> Result<f64> {
            Ok(match b {
                [0] => 0.3,
                [1] => 0.5,
                [0, 1] => 0.2,
                _ => unreachable!(),
            })
        };
        let k1 = cumulant_from_moments(&[0], m).unwrap();
        assert_eq!(k1.value, 0.3);
        let k2 = cumulant_from_moments(&[0, 1], m).unwrap();
        assert!((k2.value - (0.2 - 0.15)).abs() < 1e-15);
    }

    #[test]
    fn independent_moments_have_zero_cumulants() {
        let w = [2.0, 3.0, 5.0, 7.0];
        for n in 2..=4 {
            let v: Vec<usize> = (0..n).collect();
            let k = cumulant_from_moments(&v, |b| Ok(b.iter().map(|&i| w[i]).product::<f64>())).unwrap();
            assert!(k.value.abs() < 1e-9, "{n}: {}", k.value);
        }
    }

    #[test]
    fn k_weight_examples() {
        assert_eq!(k_weight(&[1, 3]), 3);
        assert_eq!(k_weight(&[2, 2]), 4);
        assert_eq!(k_weight(&[1]), -1);
    }

    #[test]
    fn closed_forms_match_partition_sums_exactly() {
        let l = FiniteLattice::hypercubic_box(&[3, 4]).unwrap();
        let g = dirichlet_green::<Rational>(&l).unwrap();
        let v = l.vertices_at(&[vec![0, 0], vec![2, 1], vec![0, 3]]).unwrap();
        for field in [FieldKind::NegX, FieldKind::Degree] {
            for n in 1..=3 {
                let a = closed_form_cumulant(&g, &v[..n], field).unwrap().value;
                let b = partition_sum_cumulant(&g, &v[..n], field).unwrap().value;
                assert_eq!(a, b, "{field:?} n={n}");
            }
        }
        for n in 1..=2 {
            let a = xy_cumulant_closed(&g, &v[..n]).unwrap().value;
            let b = partition_sum_cumulant(&g, &v[..n], FieldKind::XY).unwrap().value;
            assert_eq!(a, b, "xy n={n}");
        }
    }

    #[test]
    fn homogeneity_relates_negx_and_degree() {
        let l = FiniteLattice::hypercubic_box(&[5, 5]).unwrap();
        let g = dirichlet_green::<f64>(&l).unwrap();
        let v = l.vertices_at(&[vec![1, 1], vec![3, 2], vec![1, 3]]).unwrap();
        let a = x_cumulant_closed(&g, &v, FieldKind::NegX).unwrap().value;
        let b = x_cumulant_closed(&g, &v, FieldKind::Degree).unwrap().value;
        assert!(rel(a, -b) < 1e-14);
    }

    #[test]
    fn relabeling_invariance() {
        let l = FiniteLattice::hypercubic_box(&[5, 5]).unwrap();
        let g = dirichlet_green::<f64>(&l).unwrap();
        let v = l.vertices_at(&[vec![1, 1], vec![3, 3]]).unwrap();
        let w = [v[1], v[0]];
        let a = xy_cumulant_closed(&g, &v).unwrap().value;
        let b = xy_cumulant_closed(&g, &w).unwrap().value;
        assert!(rel(a, b) < 1e-12);
    }

    #[test]
    fn triangular_degree_pair() {
        let l = FiniteLattice::triangular_patch(3).unwrap();
        let g = dirichlet_green::<f64>(&l).unwrap();
        let v = l.vertices_at(&[vec![0, 0], vec![2, 0]]).unwrap();
        let a = triangular_cumulants(&g, &v, FieldKind::Degree).unwrap().value;
        let b = partition_sum_cumulant(&g, &v, FieldKind::Degree).unwrap().value;
        assert!(rel(a, b) < 1e-10, "{a} {b}");
        let sq = FiniteLattice::hypercubic_box(&[3, 3]).unwrap();
        let gs = dirichlet_green::<f64>(&sq).unwrap();
        assert!(triangular_cumulants(&gs, &[0, 8], FieldKind::Degree).is_err());
    }
}
