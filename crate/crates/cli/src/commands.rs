//! Subcommand implementations; each returns its tables.

use std::path::Path;
use std::sync::Arc;

use fgff_core::constants::{c_d_with, c_t, ConstantResult};
use fgff_core::cumulants::{cumulant_report, CumulantPath, CumulantReport, FieldKind};
use fgff_core::greenfn::{dirichlet_green, GreenTable, KernelEvaluator, AUTO_DENSE_LIMIT};
use fgff_core::lattice::{DirectedEdge, FiniteLattice, LatticeKind};
use fgff_core::moments::{height_one_prob, x_moment, xy_moment, zeta_moment};
use fgff_core::samplers::{
    chain_period, chain_sample, recurrent_height_one_count, wilson_sample, ChainObservable,
    Estimate, TreeObservable,
};
use fgff_core::scaling::convergence_sweep;
use fgff_core::{Error, Rational, Scalar};
use serde::Deserialize;
use serde_json::Value;

use crate::output::{num, opt, text, Table};
use crate::{parse, CliError, Evaluator, LatticeArgs, Outcome, SampleObservable, Sampler};

/// Agreement tolerance between float evaluation paths.
pub const PATH_TOLERANCE: f64 = 1e-12;

pub fn points_label(points: &[Vec<i64>]) -> String {
    points
        .iter()
        .map(|p| {
            let c: Vec<String> = p.iter().map(i64::to_string).collect();
            format!("({})", c.join(","))
        })
        .collect::<Vec<_>>()
        .join(";")
}

fn plane_label(points: &[[f64; 2]]) -> String {
    points
        .iter()
        .map(|p| format!("({},{})", p[0], p[1]))
        .collect::<Vec<_>>()
        .join(";")
}

struct Selection {
    lattice: Arc<FiniteLattice>,
    points: Vec<Vec<i64>>,
    vertices: Vec<usize>,
}

fn select(args: &LatticeArgs) -> Result<Selection, CliError> {
    let lattice = parse::lattice(&args.lattice, args.box_spec.as_deref(), args.radius)?;
    let points = parse::int_points(&args.points)?;
    let vertices = lattice.vertices_at(&points)?;
    Ok(Selection {
        lattice,
        points,
        vertices,
    })
}

fn exact_table(l: &FiniteLattice) -> Result<GreenTable<Rational>, CliError> {
    if l.len() > AUTO_DENSE_LIMIT {
        return Err(CliError::Usage(format!(
            "--exact supports at most {AUTO_DENSE_LIMIT} vertices, lattice has {}",
            l.len()
        )));
    }
    Ok(dirichlet_green::<Rational>(l)?)
}

fn evaluator(e: Evaluator) -> KernelEvaluator {
    match e {
        Evaluator::Default => KernelEvaluator::Default,
        Evaluator::Fourier => KernelEvaluator::Fourier,
        Evaluator::RandomWalk => KernelEvaluator::RandomWalk,
    }
}

pub fn constants(lattice: &str, ledger: bool, ev: Evaluator) -> Result<Outcome, CliError> {
    let r: ConstantResult = match parse::lattice_kind(lattice)? {
        LatticeKind::Hypercubic { dim } => c_d_with(dim, evaluator(ev))?,
        LatticeKind::Triangular => c_t()?,
    };
    let mut summary = Table::new(
        "constant",
        &["lattice", "value", "closed_form", "delta", "terms", "path"],
    );
    summary.push(vec![
        text(&r.lattice),
        num(r.value),
        opt(r.closed_form),
        opt(r.delta()),
        Value::from(r.terms.len()),
        text("subset_sum"),
    ]);
    let ok = r.delta().is_none_or(|d| d.abs() <= 1e-9);
    let mut tables = vec![summary];
    if ledger {
        let mut t = Table::new(
            "constant_ledger",
            &["lattice", "mask", "size", "k_weight", "det", "replaced", "contribution", "path"],
        );
        for term in &r.terms {
            let replaced: Vec<String> = term
                .replaced
                .iter()
                .map(|(a, g, d)| format!("{a}:{g}:{d}"))
                .collect();
            t.push(vec![
                text(&r.lattice),
                Value::from(term.mask),
                Value::from(term.size),
                Value::from(term.k_weight),
                num(term.det),
                text(replaced.join("|")),
                num(term.contribution),
                text("subset_term"),
            ]);
        }
        tables.push(t);
    }
    Ok(Outcome { tables, ok })
}

fn parse_eta(s: Option<&str>, n: usize) -> Result<Option<Vec<usize>>, CliError> {
    let Some(s) = s else { return Ok(None) };
    let eta: Vec<usize> = s
        .split(',')
        .map(|d| d.trim().parse::<usize>())
        .collect::<Result<_, _>>()
        .map_err(|_| CliError::Usage(format!("invalid edge choice {s:?}")))?;
    if eta.len() != n {
        return Err(CliError::Usage(format!("--eta needs {n} directions, got {}", eta.len())));
    }
    Ok(Some(eta))
}

pub fn height_prob(args: &LatticeArgs, eta: Option<&str>, exact: bool) -> Result<Outcome, CliError> {
    let sel = select(args)?;
    let l = &sel.lattice;
    let v = &sel.vertices;
    let eta = parse_eta(eta, v.len())?;
    let eta_label = eta
        .as_ref()
        .map(|e| e.iter().map(usize::to_string).collect::<Vec<_>>().join(","))
        .unwrap_or_else(|| vec!["0"; v.len()].join(","));

    // (path, float value, exact string)
    let mut rows: Vec<(&str, f64, Option<Rational>)> = Vec::new();
    if exact {
        let g = exact_table(l)?;
        let d = height_one_prob(&g, v, eta.as_deref())?;
        let a = xy_moment(&g, v)?;
        rows.push(("determinant", d.as_f64(), Some(d)));
        rows.push(("determinant_averaged", a.as_f64(), Some(a)));
    } else {
        let g = GreenTable::for_vertices(l.clone(), v)?;
        rows.push(("determinant", height_one_prob(&g, v, eta.as_deref())?, None));
        rows.push(("determinant_averaged", xy_moment(&g, v)?, None));
    }
    match recurrent_height_one_count(l, v) {
        Ok((hits, total)) => {
            let q = Rational::from_ratio(hits as i64, total as i64);
            rows.push(("enumeration", hits as f64 / total as f64, Some(q)));
        }
        Err(Error::Capacity(msg)) => eprintln!("fgff: enumeration skipped: {msg}"),
        Err(e) => return Err(e.into()),
    }

    let reference = rows[0].clone();
    let mut ok = true;
    let mut t = Table::new(
        "height_prob",
        &["lattice", "points", "eta", "path", "value", "exact", "deviation"],
    );
    for (path, value, q) in &rows {
        let deviation = (value - reference.1).abs();
        ok &= match (exact, q, &reference.2) {
            (true, Some(a), Some(b)) => a == b,
            _ => deviation <= PATH_TOLERANCE,
        };
        t.push(vec![
            text(l.kind().label()),
            text(points_label(&sel.points)),
            text(&eta_label),
            text(*path),
            num(*value),
            q.as_ref().map_or(Value::Null, |q| text(q.to_string())),
            num(deviation),
        ]);
    }
    Ok(Outcome { tables: vec![t], ok })
}

fn cumulant_rows<T: Scalar>(
    g: &GreenTable<T>,
    v: &[usize],
    field: FieldKind,
) -> Result<Vec<CumulantReport>, CliError> {
    [CumulantPath::ClosedForm, CumulantPath::PartitionSum]
        .into_iter()
        .map(|p| cumulant_report(g, v, field, p).map_err(CliError::from))
        .collect()
}

pub fn cumulants(args: &LatticeArgs, field: &str, exact: bool) -> Result<Outcome, CliError> {
    let field: FieldKind = field.parse()?;
    let sel = select(args)?;
    let (reports, exact_values) = if exact {
        let g = exact_table(&sel.lattice)?;
        let reports = cumulant_rows(&g, &sel.vertices, field)?;
        let closed = fgff_core::cumulants::closed_form_cumulant(&g, &sel.vertices, field)?.value;
        let part = fgff_core::cumulants::partition_sum_cumulant(&g, &sel.vertices, field)?.value;
        (reports, Some([closed, part]))
    } else {
        let g = GreenTable::for_vertices(sel.lattice.clone(), &sel.vertices)?;
        (cumulant_rows(&g, &sel.vertices, field)?, None)
    };
    let scale = reports
        .iter()
        .map(|r| r.max_term_magnitude.max(r.value.abs()))
        .fold(0.0, f64::max);
    let deviation = (reports[0].value - reports[1].value).abs();
    let ok = match &exact_values {
        Some([a, b]) => a == b,
        None => deviation <= 1e-10 * scale.max(f64::MIN_POSITIVE),
    };
    let mut t = Table::new(
        "cumulant",
        &[
            "field",
            "lattice",
            "vertices",
            "points",
            "path",
            "value",
            "exact",
            "term_count",
            "max_term_magnitude",
            "single_vertex",
            "deviation",
        ],
    );
    for (i, r) in reports.iter().enumerate() {
        let path = match r.path {
            CumulantPath::ClosedForm => "closed_form",
            CumulantPath::PartitionSum => "partition_sum",
        };
        t.push(vec![
            text(r.field_kind.label()),
            text(r.lattice.lattice.label()),
            Value::from(r.lattice.vertices),
            text(points_label(&r.points)),
            text(path),
            num(r.value),
            exact_values
                .as_ref()
                .map_or(Value::Null, |e| text(e[i].to_string())),
            Value::from(r.term_count),
            num(r.max_term_magnitude),
            Value::from(r.single_vertex),
            num(deviation),
        ]);
    }
    Ok(Outcome { tables: vec![t], ok })
}

fn estimate_row(
    t: &mut Table,
    sampler: &str,
    seed: u64,
    points: &str,
    e: &Estimate,
    exact: f64,
) {
    t.push(vec![
        text(sampler),
        Value::from(seed),
        text(&e.observable),
        text(points),
        num(e.estimate),
        num(e.stderr),
        Value::from(e.n),
        num(exact),
        num(e.z_score(exact)),
        text("monte_carlo"),
    ]);
}

pub fn sample(
    args: &LatticeArgs,
    sampler: Sampler,
    observable: Option<SampleObservable>,
    seed: u64,
    steps: u64,
    burn_in: u64,
) -> Result<Outcome, CliError> {
    let observable = match (sampler, observable) {
        (Sampler::Sandpile, None | Some(SampleObservable::HeightOne)) => SampleObservable::HeightOne,
        (Sampler::Wilson, None) => SampleObservable::Degree,
        (Sampler::Wilson, Some(o @ (SampleObservable::Degree | SampleObservable::Edge))) => o,
        (s, Some(o)) => {
            return Err(CliError::Usage(format!("observable {o:?} is not available for {s:?}")))
        }
    };
    let sel = select(args)?;
    let l = &sel.lattice;
    let g = GreenTable::for_vertices(l.clone(), &sel.vertices)?;
    // each point alone, then the joint set
    let mut groups: Vec<(Vec<usize>, Vec<Vec<i64>>)> = sel
        .vertices
        .iter()
        .zip(&sel.points)
        .map(|(&v, p)| (vec![v], vec![p.clone()]))
        .collect();
    if sel.vertices.len() > 1 {
        groups.push((sel.vertices.clone(), sel.points.clone()));
    }
    let mut t = Table::new(
        "sample",
        &["sampler", "seed", "observable", "points", "estimate", "stderr", "n", "exact", "z", "path"],
    );
    match sampler {
        Sampler::Sandpile => {
            let period = chain_period(l);
            if period > 1 {
                eprintln!("fgff: warning: chain has period {period}; estimates may be biased");
            }
            let obs: Vec<ChainObservable> = groups
                .iter()
                .map(|(v, _)| ChainObservable::HeightOne { vertices: v.clone() })
                .collect();
            let est = chain_sample(l, steps, burn_in, seed, &obs)?;
            for ((v, p), e) in groups.iter().zip(&est) {
                let exact = height_one_prob(&g, v, None)?;
                estimate_row(&mut t, "sandpile", seed, &points_label(p), e, exact);
            }
        }
        Sampler::Wilson => {
            let edges = |v: &[usize]| -> Vec<DirectedEdge> {
                v.iter().map(|&u| DirectedEdge::new(u, 0)).collect()
            };
            let obs: Vec<TreeObservable> = groups
                .iter()
                .map(|(v, _)| match observable {
                    SampleObservable::Edge => TreeObservable::Contains { edges: edges(v) },
                    _ => TreeObservable::Degree { vertices: v.clone() },
                })
                .collect();
            let est = wilson_sample(l, steps as usize, seed, &obs);
            for ((v, p), e) in groups.iter().zip(&est) {
                let exact = match observable {
                    SampleObservable::Edge => zeta_moment(&g, &edges(v))?,
                    _ => x_moment(&g, v)?,
                };
                estimate_row(&mut t, "wilson", seed, &points_label(p), e, exact);
            }
        }
    }
    Ok(Outcome {
        tables: vec![t],
        ok: true,
    })
}

#[derive(Debug, Default, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Domain {
    /// Unit disk.
    #[default]
    Disk,
}

/// Scaling sweep configuration file.
#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScalingConfig {
    #[serde(default)]
    pub domain: Domain,
    pub field: FieldKind,
    pub points: Vec<[f64; 2]>,
    pub eps: Vec<f64>,
}

pub fn scaling(
    field: Option<&str>,
    points: Option<&str>,
    eps: &str,
    config: Option<&Path>,
) -> Result<Outcome, CliError> {
    let cfg = match config {
        Some(path) => serde_json::from_str::<ScalingConfig>(&std::fs::read_to_string(path)?)?,
        None => ScalingConfig {
            domain: Domain::Disk,
            field: field
                .ok_or_else(|| CliError::Usage("--field is required".into()))?
                .parse()?,
            points: parse::plane_points(
                points.ok_or_else(|| CliError::Usage("--points is required".into()))?,
            )?,
            eps: parse::mesh_list(eps)?,
        },
    };
    let sweep = convergence_sweep(cfg.field, &cfg.points, &cfg.eps)?;
    let mut t = Table::new(
        "scaling_sweep",
        &[
            "domain",
            "field",
            "points",
            "epsilon",
            "vertices",
            "scaled",
            "target",
            "ratio",
            "relative_error",
            "path",
        ],
    );
    let label = plane_label(&cfg.points);
    let domain = match cfg.domain {
        Domain::Disk => "disk",
    };
    for r in &sweep.rows {
        t.push(vec![
            text(domain),
            text(cfg.field.label()),
            text(&label),
            num(r.epsilon),
            Value::from(r.vertices),
            num(r.scaled),
            num(r.target),
            num(r.scaled / r.target),
            num(r.relative_error),
            text("closed_form"),
        ]);
    }
    Ok(Outcome {
        tables: vec![t],
        ok: true,
    })
}
