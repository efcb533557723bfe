//! Parsers for lattice, point and mesh arguments.

use std::sync::Arc;

use fgff_core::lattice::{FiniteLattice, LatticeKind};

use crate::CliError;

/// `z2`, `z3`, `z4` or `tri`.
pub fn lattice_kind(s: &str) -> Result<LatticeKind, CliError> {
    match s.to_ascii_lowercase().as_str() {
        "z2" => Ok(LatticeKind::Hypercubic { dim: 2 }),
        "z3" => Ok(LatticeKind::Hypercubic { dim: 3 }),
        "z4" => Ok(LatticeKind::Hypercubic { dim: 4 }),
        "tri" | "triangular" => Ok(LatticeKind::Triangular),
        other => Err(CliError::Usage(format!("unknown lattice {other:?}"))),
    }
}

/// `WxH` (or more sides) into side lengths.
pub fn box_sides(s: &str) -> Result<Vec<usize>, CliError> {
    s.split(['x', 'X'])
        .map(|p| {
            p.trim()
                .parse::<usize>()
                .map_err(|_| CliError::Usage(format!("invalid box {s:?}")))
        })
        .collect()
}

/// Finite lattice from `--lattice` and `--box` / `--radius`.
pub fn lattice(
    kind: &str,
    box_spec: Option<&str>,
    radius: Option<usize>,
) -> Result<Arc<FiniteLattice>, CliError> {
    let kind = lattice_kind(kind)?;
    let l = match (kind, box_spec, radius) {
        (LatticeKind::Triangular, None, Some(r)) => FiniteLattice::triangular_patch(r)?,
        (LatticeKind::Triangular, _, _) => {
            return Err(CliError::Usage("triangular lattices need --radius".into()))
        }
        (LatticeKind::Hypercubic { dim }, Some(b), None) => {
            let sides = box_sides(b)?;
            if sides.len() != dim {
                return Err(CliError::Usage(format!("box {b:?} does not have {dim} sides")));
            }
            FiniteLattice::hypercubic_box(&sides)?
        }
        (LatticeKind::Hypercubic { .. }, _, _) => {
            return Err(CliError::Usage("hypercubic lattices need --box".into()))
        }
    };
    Ok(Arc::new(l))
}

fn split_points(s: &str) -> Vec<String> {
    let cleaned: String = s.chars().filter(|c| !c.is_whitespace()).collect();
    if cleaned.contains('(') {
        cleaned
            .split(')')
            .map(|p| p.trim_start_matches([',', ';']).trim_start_matches('('))
            .filter(|p| !p.is_empty())
            .map(str::to_string)
            .collect()
    } else {
        cleaned.split(';').filter(|p| !p.is_empty()).map(str::to_string).collect()
    }
}

/// `(1,1);(3,3)`, `(1,1),(3,3)` or `1,1;3,3` into integer points.
pub fn int_points(s: &str) -> Result<Vec<Vec<i64>>, CliError> {
    let pts: Vec<Vec<i64>> = split_points(s)
        .iter()
        .map(|p| {
            p.split(',')
                .map(|c| c.parse::<i64>())
                .collect::<Result<Vec<_>, _>>()
                .map_err(|_| CliError::Usage(format!("invalid point {p:?}")))
        })
        .collect::<Result<_, _>>()?;
    if pts.is_empty() {
        return Err(CliError::Usage("no points given".into()));
    }
    Ok(pts)
}

/// Continuum points in the plane.
pub fn plane_points(s: &str) -> Result<Vec<[f64; 2]>, CliError> {
    let pts: Vec<[f64; 2]> = split_points(s)
        .iter()
        .map(|p| {
            let c: Vec<f64> = p
                .split(',')
                .map(|c| c.parse::<f64>())
                .collect::<Result<_, _>>()
                .map_err(|_| CliError::Usage(format!("invalid point {p:?}")))?;
            match c[..] {
                [x, y] => Ok([x, y]),
                _ => Err(CliError::Usage(format!("point {p:?} is not planar"))),
            }
        })
        .collect::<Result<_, _>>()?;
    if pts.is_empty() {
        return Err(CliError::Usage("no points given".into()));
    }
    Ok(pts)
}

/// `1/16` or `0.0625`.
pub fn mesh(s: &str) -> Result<f64, CliError> {
    let bad = || CliError::Usage(format!("invalid mesh {s:?}"));
    match s.split_once('/') {
        Some((a, b)) => {
            let a: f64 = a.trim().parse().map_err(|_| bad())?;
            let b: f64 = b.trim().parse().map_err(|_| bad())?;
            Ok(a / b)
        }
        None => s.trim().parse().map_err(|_| bad()),
    }
}

pub fn mesh_list(s: &str) -> Result<Vec<f64>, CliError> {
    s.split(',').map(mesh).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn points() {
        assert_eq!(int_points("(1,1);(3,3)").unwrap(), vec![vec![1, 1], vec![3, 3]]);
        assert_eq!(int_points("(1, 1),(3,3)").unwrap(), vec![vec![1, 1], vec![3, 3]]);
        assert_eq!(int_points("1,1;3,3").unwrap(), vec![vec![1, 1], vec![3, 3]]);
        assert_eq!(plane_points("(-0.3,0);(0.3,0)").unwrap(), vec![[-0.3, 0.0], [0.3, 0.0]]);
        assert!(int_points("(1,a)").is_err());
        assert!(plane_points("(1,2,3)").is_err());
    }

    #[test]
    fn meshes_and_boxes() {
        assert_eq!(mesh_list("1/16,0.5").unwrap(), vec![0.0625, 0.5]);
        assert_eq!(box_sides("3x4").unwrap(), vec![3, 4]);
        assert!(box_sides("3xq").is_err());
        assert!(lattice("tri", Some("3x3"), None).is_err());
        assert_eq!(lattice("z2", Some("3x3"), None).unwrap().len(), 9);
    }
}
