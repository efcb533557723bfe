//! Built-in consistency suites for `fgff verify`.

use std::f64::consts::PI;
use std::sync::Arc;

use fgff_core::constants::{
    c_d, c_t, c_t_square_degeneration, height_one_from_constant, infinite_volume_height_one,
};
use fgff_core::cumulants::{closed_form_cumulant, partition_sum_cumulant, FieldKind};
use fgff_core::grassmann::{dirichlet_state, pinned_state, wick_moment, FermionLayout, GrassmannElement};
use fgff_core::greenfn::{dirichlet_green, GreenTable};
use fgff_core::lattice::{DirectedEdge, FiniteLattice, LatticeKind};
use fgff_core::linalg::DenseMatrix;
use fgff_core::moments::{
    height_one_prob, height_one_prob_collapsed, height_one_prob_enumerated, x_moment, zeta_moment,
};
use fgff_core::samplers::{
    enumerate_recurrent, enumerate_spanning_trees, wilson_sample, TreeObservable,
};
use fgff_core::{Rational, Scalar};
use serde_json::Value;

use crate::output::{num, text, Table};
use crate::{CliError, Outcome, Suite};

struct Check {
    suite: &'static str,
    name: String,
    value: f64,
    reference: f64,
    deviation: f64,
    tolerance: f64,
    path: &'static str,
}

impl Check {
    fn new(
        suite: &'static str,
        name: impl Into<String>,
        value: f64,
        reference: f64,
        tolerance: f64,
        path: &'static str,
    ) -> Self {
        Self {
            suite,
            name: name.into(),
            value,
            reference,
            deviation: (value - reference).abs(),
            tolerance,
            path,
        }
    }

    /// Exact comparison; deviation is the float image of the difference.
    fn exact<T: Scalar>(
        suite: &'static str,
        name: impl Into<String>,
        value: &T,
        reference: &T,
        path: &'static str,
    ) -> Self {
        let mut c = Self::new(suite, name, value.as_f64(), reference.as_f64(), 0.0, path);
        c.deviation = if value == reference {
            0.0
        } else {
            (value.clone() - reference.clone()).as_f64().abs().max(f64::MIN_POSITIVE)
        };
        c
    }

    fn pass(&self) -> bool {
        self.deviation <= self.tolerance
    }
}

fn test_matrix(n: usize) -> DenseMatrix<Rational> {
    DenseMatrix::from_fn(n, n, |i, j| {
        let num = ((3 * i + 5 * j) % 7) as i64 - 3 + if i == j { 4 } else { 0 };
        Rational::from_ratio(num, 1 + ((i + j) % 3) as i64)
    })
}

fn grassmann() -> Result<Vec<Check>, CliError> {
    let mut out = Vec::new();
    for n in 1..=5 {
        let a = test_matrix(n);
        let layout = FermionLayout::new(n)?;
        let w = layout.quadratic_form(&a)?.exp_even()?;
        out.push(Check::exact(
            "grassmann",
            format!("gaussian_integral_n{n}"),
            &w.berezin(),
            &a.determinant(),
            "berezin_vs_det",
        ));
    }
    let a = test_matrix(4);
    let layout = FermionLayout::new(4)?;
    let w = layout.quadratic_form(&a)?.exp_even()?;
    let (i, j) = ([0usize, 2], [3usize, 1]);
    let gens = [layout.psi(i[0]), layout.psibar(j[0]), layout.psi(i[1]), layout.psibar(j[1])];
    let f = GrassmannElement::monomial(layout.generators(), &gens)?;
    out.push(Check::exact(
        "grassmann",
        "wick_moment_n4",
        &w.berezin_of_product(&f)?,
        &wick_moment(&a, &i, &j)?,
        "berezin_vs_minor",
    ));
    let l = FiniteLattice::hypercubic_box(&[2, 2])?;
    let gens = 2 * l.len();
    let mut mismatches = 0u32;
    for mask in 0u64..(1 << gens) {
        let idx: Vec<usize> = (0..gens).filter(|k| mask >> k & 1 == 1).collect();
        let f = GrassmannElement::<Rational>::monomial(gens, &idx)?;
        if pinned_state(&f, &l, true)? != dirichlet_state(&f, &l, true)? {
            mismatches += 1;
        }
    }
    out.push(Check::new(
        "grassmann",
        format!("pinned_equals_dirichlet_2x2_{}_monomials", 1u64 << gens),
        mismatches as f64,
        0.0,
        0.0,
        "pinned_vs_dirichlet",
    ));
    Ok(out)
}

fn moments() -> Result<Vec<Check>, CliError> {
    let mut out = Vec::new();
    let l = FiniteLattice::hypercubic_box(&[3, 3])?;
    let g = dirichlet_green::<f64>(&l)?;
    let mut sets = Vec::new();
    for u in 0..l.len() {
        sets.push(vec![u]);
        for v in u + 1..l.len() {
            sets.push(vec![u, v]);
        }
    }
    sets.retain(|s| l.is_good_set(s));
    let mut hits = vec![0u64; sets.len()];
    let mut total = 0u64;
    for cfg in enumerate_recurrent(&l)? {
        total += 1;
        for (h, s) in hits.iter_mut().zip(&sets) {
            if s.iter().all(|&v| cfg.heights[v] == 1) {
                *h += 1;
            }
        }
    }
    let mut worst: f64 = 0.0;
    for (s, &h) in sets.iter().zip(&hits) {
        worst = worst.max((height_one_prob(&g, s, None)? - h as f64 / total as f64).abs());
    }
    out.push(Check::new(
        "moments",
        format!("height_one_3x3_{}_sets", sets.len()),
        worst,
        0.0,
        1e-12,
        "determinant_vs_enumeration",
    ));
    let l4 = Arc::new(FiniteLattice::hypercubic_box(&[4, 4])?);
    let g4 = GreenTable::dense(l4.clone())?;
    let v = l4.vertices_at(&[vec![1, 1], vec![2, 3]])?;
    out.push(Check::new(
        "moments",
        "signed_subset_sum_4x4",
        height_one_prob_collapsed(&g4, &v, &[0, 2])?,
        height_one_prob_enumerated(&g4, &v, &[0, 2])?,
        1e-12,
        "collapsed_vs_enumerated",
    ));
    let l3 = Arc::new(l);
    let trees = enumerate_spanning_trees(&l3)?;
    let e = DirectedEdge::new(0, 0);
    let key = l3.unoriented(e);
    let with = trees.iter().filter(|t| t.contains(&key)).count();
    out.push(Check::new(
        "moments",
        "edge_probability_3x3",
        zeta_moment(&g, &[e])?,
        with as f64 / trees.len() as f64,
        1e-12,
        "transfer_vs_tree_enumeration",
    ));
    Ok(out)
}

fn cumulants() -> Result<Vec<Check>, CliError> {
    let mut out = Vec::new();
    let l = Arc::new(FiniteLattice::hypercubic_box(&[4, 4])?);
    let g = dirichlet_green::<Rational>(&l)?;
    let three = l.vertices_at(&[vec![0, 0], vec![2, 1], vec![1, 3]])?;
    for field in [FieldKind::NegX, FieldKind::Degree, FieldKind::XY] {
        let v = if field == FieldKind::XY { &three[..2] } else { &three[..] };
        out.push(Check::exact(
            "cumulants",
            format!("{}_order{}_4x4", field.label(), v.len()),
            &closed_form_cumulant(&g, v, field)?.value,
            &partition_sum_cumulant(&g, v, field)?.value,
            "closed_form_vs_partition_sum",
        ));
    }
    Ok(out)
}

fn constants() -> Result<Vec<Check>, CliError> {
    let c2 = c_d(2)?;
    let ct = c_t()?;
    let sq = 2.0 / (PI * PI) - 4.0 / PI.powi(3);
    Ok(vec![
        Check::new("constants", "c2", c2.value, c2.closed_form.unwrap_or(f64::NAN), 1e-9, "subset_sum_vs_closed_form"),
        Check::new("constants", "ct", ct.value, ct.closed_form.unwrap_or(f64::NAN), 1e-9, "subset_sum_vs_closed_form"),
        Check::new(
            "constants",
            "ct_template_on_z2",
            c_t_square_degeneration()?.value,
            c2.value,
            1e-9,
            "template_degeneration",
        ),
        Check::new(
            "constants",
            "height_one_z2",
            infinite_volume_height_one(LatticeKind::square())?,
            sq,
            1e-12,
            "local_matrix_vs_closed_form",
        ),
        Check::new(
            "constants",
            "height_one_tri",
            infinite_volume_height_one(LatticeKind::Triangular)?,
            height_one_from_constant(LatticeKind::Triangular)?,
            1e-9,
            "local_matrix_vs_constant",
        ),
    ])
}

fn samplers() -> Result<Vec<Check>, CliError> {
    let mut out = Vec::new();
    let l = Arc::new(FiniteLattice::hypercubic_box(&[3, 3])?);
    let det = l.laplacian::<Rational>().determinant();
    let recurrent = enumerate_recurrent(&l)?.count() as i64;
    let trees = enumerate_spanning_trees(&l)?.len() as i64;
    out.push(Check::exact(
        "samplers",
        "recurrent_count_3x3",
        &Rational::from_i64(recurrent),
        &det,
        "burning_vs_det",
    ));
    out.push(Check::exact(
        "samplers",
        "spanning_tree_count_3x3",
        &Rational::from_i64(trees),
        &det,
        "enumeration_vs_det",
    ));
    let g = GreenTable::dense(l.clone())?;
    let c = l.vertex_at(&[1, 1]).ok_or_else(|| CliError::Usage("missing vertex".into()))?;
    let obs = [
        TreeObservable::Degree { vertices: vec![c] },
        TreeObservable::Contains {
            edges: vec![DirectedEdge::new(c, 0)],
        },
    ];
    let exact = [x_moment(&g, &[c])?, zeta_moment(&g, &[DirectedEdge::new(c, 0)])?];
    let est = wilson_sample(&l, 40_000, 5, &obs);
    for ((e, x), name) in est.iter().zip(exact).zip(["wilson_degree_z", "wilson_edge_z"]) {
        out.push(Check::new("samplers", name, e.z_score(x), 0.0, 5.0, "monte_carlo_vs_determinant"));
    }
    Ok(out)
}

type SuiteFn = fn() -> Result<Vec<Check>, CliError>;

pub fn run(suite: Suite) -> Result<Outcome, CliError> {
    let suites: Vec<SuiteFn> = match suite {
        Suite::Grassmann => vec![grassmann],
        Suite::Moments => vec![moments],
        Suite::Cumulants => vec![cumulants],
        Suite::Constants => vec![constants],
        Suite::Samplers => vec![samplers],
        Suite::All => vec![grassmann, moments, cumulants, constants, samplers],
    };
    let mut t = Table::new(
        "verify",
        &["suite", "check", "value", "reference", "deviation", "tolerance", "pass", "path"],
    );
    let mut ok = true;
    for s in suites {
        for c in s()? {
            ok &= c.pass();
            t.push(vec![
                text(c.suite),
                text(&c.name),
                num(c.value),
                num(c.reference),
                num(c.deviation),
                num(c.tolerance),
                Value::from(c.pass()),
                text(c.path),
            ]);
        }
    }
    Ok(Outcome { tables: vec![t], ok })
}
