//! Dirichlet Green's function of the unit disk.

use std::f64::consts::PI;

use crate::error::{Error, Result};

/// `g_U(x, y) = (1/4pi) [log(1 - 2 x.y + |x|^2 |y|^2) - log |x - y|^2]`, the
/// Green's function of `-Delta` on the unit disk with zero boundary values.
#[derive(Debug, Clone, Copy, Default)]
pub struct DiskGreen;

fn dot(a: [f64; 2], b: [f64; 2]) -> f64 {
    a[0] * b[0] + a[1] * b[1]
}

fn check(x: [f64; 2], y: [f64; 2]) -> Result<()> {
    if dot(x, x) >= 1.0 || dot(y, y) >= 1.0 {
        return Err(Error::Domain(format!("{x:?} or {y:?} is not inside the disk")));
    }
    let d = [x[0] - y[0], x[1] - y[1]];
    if dot(d, d) == 0.0 {
        return Err(Error::Domain(format!("{x:?} coincides with {y:?}")));
    }
    Ok(())
}

impl DiskGreen {
    pub fn value(&self, x: [f64; 2], y: [f64; 2]) -> Result<f64> {
        check(x, y)?;
        let big_d = 1.0 - 2.0 * dot(x, y) + dot(x, x) * dot(y, y);
        let e = [x[0] - y[0], x[1] - y[1]];
        Ok((big_d.ln() - dot(e, e).ln()) / (4.0 * PI))
    }

    /// `d/dx_i d/dy_j g_U(x, y)` in closed form.
    pub fn mixed_partial(&self, x: [f64; 2], y: [f64; 2], i: usize, j: usize) -> Result<f64> {
        check(x, y)?;
        if i > 1 || j > 1 {
            return Err(Error::InvalidInput("coordinate index must be 0 or 1".into()));
        }
        let delta = if i == j { 1.0 } else { 0.0 };
        let (xx, yy) = (dot(x, x), dot(y, y));
        let big_d = 1.0 - 2.0 * dot(x, y) + xx * yy;
        let dxi = -2.0 * y[i] + 2.0 * yy * x[i];
        let dyj = -2.0 * x[j] + 2.0 * xx * y[j];
        let dxy = -2.0 * delta + 4.0 * x[i] * y[j];
        let log_d = (dxy * big_d - dxi * dyj) / (big_d * big_d);
        let e = [x[0] - y[0], x[1] - y[1]];
        let ee = dot(e, e);
        let log_e = (-2.0 * delta * ee + 4.0 * e[i] * e[j]) / (ee * ee);
        Ok((log_d - log_e) / (4.0 * PI))
    }

    /// Central-difference mixed partial with one Richardson step, for
    /// cross-checking [`DiskGreen::mixed_partial`].
    pub fn mixed_partial_fd(&self, x: [f64; 2], y: [f64; 2], i: usize, j: usize, h: f64) -> Result<f64> {
        let cd = |h: f64| -> Result<f64> {
            let mut acc = 0.0;
            for (sx, sy, w) in [(1.0, 1.0, 1.0), (1.0, -1.0, -1.0), (-1.0, 1.0, -1.0), (-1.0, -1.0, 1.0)] {
                let mut xp = x;
                let mut yp = y;
                xp[i] += sx * h;
                yp[j] += sy * h;
                acc += w * self.value(xp, yp)?;
            }
            Ok(acc / (4.0 * h * h))
        };
        Ok((4.0 * cd(h / 2.0)? - cd(h)?) / 3.0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn boundary_and_symmetry() {
        let g = DiskGreen;
        assert!(g.value([0.2, 0.1], [0.999_999, 0.0]).unwrap().abs() <= 1e-5);
        let pairs = [([0.1, 0.3], [-0.4, 0.2]), ([0.5, -0.5], [0.0, 0.7])];
        for (x, y) in pairs {
            assert!((g.value(x, y).unwrap() - g.value(y, x).unwrap()).abs() <= 1e-12);
        }
        assert!(g.value([0.0, 0.0], [0.0, 0.0]).is_err());
        assert!(g.value([1.0, 0.0], [0.0, 0.0]).is_err());
    }

    #[test]
    fn harmonic_off_diagonal() {
        let g = DiskGreen;
        let x = [0.3, -0.1];
        let y = [-0.2, 0.4];
        let h = 1e-3;
        let c = g.value(x, y).unwrap();
        let lap = g.value(x, [y[0] + h, y[1]]).unwrap()
            + g.value(x, [y[0] - h, y[1]]).unwrap()
            + g.value(x, [y[0], y[1] + h]).unwrap()
            + g.value(x, [y[0], y[1] - h]).unwrap()
            - 4.0 * c;
        assert!((lap / (h * h)).abs() < 1e-6);
    }

    #[test]
    fn closed_form_matches_differences() {
        let g = DiskGreen;
        let x = [-0.3, 0.05];
        let y = [0.35, -0.1];
        for i in 0..2 {
            for j in 0..2 {
                let a = g.mixed_partial(x, y, i, j).unwrap();
                let b = g.mixed_partial_fd(x, y, i, j, 1e-3).unwrap();
                assert!((a - b).abs() < 1e-7 * a.abs().max(1.0), "{i}{j}: {a} vs {b}");
            }
        }
    }
}
