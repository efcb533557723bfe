//! Cross-module checks: samplers against exact moments and cumulants,
//! infinite-volume limits on large patches, serialization round trips.

use std::sync::Arc;

use fgff_core::constants::{c_d, infinite_volume_height_one, ConstantResult};
use fgff_core::cumulants::{
    closed_form_cumulant, cumulant_report, CumulantPath, CumulantReport, FieldKind,
};
use fgff_core::greenfn::{dirichlet_green, GreenTable};
use fgff_core::lattice::{FiniteLattice, LatticeKind};
use fgff_core::moments::{height_one_prob, x_moment, xy_moment};
use fgff_core::samplers::{
    chain_sample, recurrent_height_one_count, rng, wilson_ust, ChainObservable, Estimate,
    TreeObservable, BATCHES,
};
use fgff_core::scaling::{convergence_sweep, Sweep};
use fgff_core::{Rational, Scalar};

#[test]
fn triangular_enumeration_matches_determinants() {
    let l = FiniteLattice::triangular_patch(1).unwrap();
    let g = dirichlet_green::<Rational>(&l).unwrap();
    let center = l.vertex_at(&[0, 0]).unwrap();
    let rim = l.vertex_at(&[1, 0]).unwrap();
    let far = l.vertex_at(&[-1, 0]).unwrap();
    for set in [vec![center], vec![rim], vec![rim, far]] {
        if !l.is_good_set(&set) {
            continue;
        }
        let (hits, total) = recurrent_height_one_count(&l, &set).unwrap();
        let freq = Rational::from_ratio(hits as i64, total as i64);
        assert_eq!(freq, xy_moment(&g, &set).unwrap(), "{set:?}");
        assert_eq!(freq, height_one_prob(&g, &set, None).unwrap(), "{set:?}");
    }
}

#[test]
fn wilson_degree_covariance_matches_cumulant() {
    let l = Arc::new(FiniteLattice::hypercubic_box(&[6, 6]).unwrap());
    let g = GreenTable::<f64>::dense(l.clone()).unwrap();
    let u = l.vertex_at(&[2, 2]).unwrap();
    let v = l.vertex_at(&[3, 3]).unwrap();
    let kappa = closed_form_cumulant(&g, &[u, v], FieldKind::Degree).unwrap().value;
    let identity = x_moment(&g, &[u, v]).unwrap()
        - x_moment(&g, &[u]).unwrap() * x_moment(&g, &[v]).unwrap();
    assert!((kappa - identity).abs() < 1e-14);

    let per = 2_000;
    let mut r = rng(99, 4);
    let covs: Vec<f64> = (0..BATCHES)
        .map(|_| {
            let (mut su, mut sv, mut suv) = (0.0, 0.0, 0.0);
            for _ in 0..per {
                let t = wilson_ust(&l, &mut r);
                let a = t.degree(&l, u) as f64 / 4.0;
                let b = t.degree(&l, v) as f64 / 4.0;
                su += a;
                sv += b;
                suv += a * b;
            }
            let n = per as f64;
            suv / n - (su / n) * (sv / n)
        })
        .collect();
    let m = covs.iter().sum::<f64>() / BATCHES as f64;
    let var = covs.iter().map(|c| (c - m).powi(2)).sum::<f64>() / (BATCHES - 1) as f64;
    let se = (var / BATCHES as f64).sqrt();
    assert!((m - kappa).abs() <= 4.0 * se, "cov {m} +- {se} vs {kappa}");
}

#[test]
fn chain_estimates_track_determinants() {
    let l = Arc::new(FiniteLattice::hypercubic_box(&[4, 3]).unwrap());
    let g = GreenTable::<f64>::dense(l.clone()).unwrap();
    let sets = [vec![0], vec![5], vec![0, 10]];
    let obs: Vec<ChainObservable> = sets
        .iter()
        .map(|s| ChainObservable::HeightOne { vertices: s.clone() })
        .collect();
    let est = chain_sample(&l, 600_000, 5_000, 21, &obs).unwrap();
    for (e, s) in est.iter().zip(&sets) {
        let exact = height_one_prob(&g, s, None).unwrap();
        assert!(e.z_score(exact) <= 4.0, "{s:?}: {e:?} vs {exact}");
    }
}

#[test]
fn triangular_patch_approaches_infinite_volume() {
    let l = Arc::new(FiniteLattice::triangular_patch(30).unwrap());
    let o = l.vertex_at(&[0, 0]).unwrap();
    let g = GreenTable::for_vertices(l.clone(), &[o]).unwrap();
    assert!(!g.is_dense());
    let finite = height_one_prob(&g, &[o], None).unwrap();
    let infinite = infinite_volume_height_one(LatticeKind::Triangular).unwrap();
    assert!((finite - infinite).abs() < 1e-3, "{finite} vs {infinite}");
}

#[test]
fn square_box_approaches_infinite_volume() {
    let l = Arc::new(FiniteLattice::hypercubic_box(&[41, 41]).unwrap());
    let o = l.vertex_at(&[20, 20]).unwrap();
    let g = GreenTable::for_vertices(l.clone(), &[o]).unwrap();
    let finite = height_one_prob(&g, &[o], None).unwrap();
    let infinite = c_d(2).unwrap().value / std::f64::consts::PI;
    assert!((finite - infinite).abs() < 1e-3, "{finite} vs {infinite}");
}

#[test]
fn reports_round_trip() {
    let l = Arc::new(FiniteLattice::hypercubic_box(&[5, 5]).unwrap());
    let g = GreenTable::<f64>::dense(l.clone()).unwrap();
    let v = l.vertices_at(&[vec![1, 1], vec![3, 2]]).unwrap();
    let r = cumulant_report(&g, &v, FieldKind::XY, CumulantPath::ClosedForm).unwrap();
    let s = serde_json::to_string(&r).unwrap();
    assert!(s.contains("\"field_kind\":\"xy\""));
    assert!(s.contains("\"shape\":\"box\""));
    assert_eq!(serde_json::from_str::<CumulantReport>(&s).unwrap(), r);

    let c = c_d(2).unwrap();
    let back: ConstantResult = serde_json::from_str(&serde_json::to_string(&c).unwrap()).unwrap();
    assert_eq!(back, c);

    let sweep = convergence_sweep(FieldKind::NegX, &[[-0.25, 0.0], [0.25, 0.0]], &[0.125]).unwrap();
    let back: Sweep = serde_json::from_str(&serde_json::to_string(&sweep).unwrap()).unwrap();
    assert_eq!(back, sweep);

    let e = Estimate {
        observable: "x".into(),
        estimate: 0.5,
        stderr: 0.01,
        n: 10,
    };
    assert_eq!(serde_json::from_str::<Estimate>(&serde_json::to_string(&e).unwrap()).unwrap(), e);

    let o: ChainObservable = serde_json::from_str(r#"{"kind":"height_one","vertices":[1,2]}"#).unwrap();
    assert_eq!(o, ChainObservable::HeightOne { vertices: vec![1, 2] });
    let t: TreeObservable = serde_json::from_str(r#"{"kind":"degree","vertices":[3]}"#).unwrap();
    assert_eq!(t, TreeObservable::Degree { vertices: vec![3] });
}
