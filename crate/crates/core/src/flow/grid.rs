//! Hamiltonians sampled on a uniform planar grid, interpolated by bicubic
//! Hermite patches. Nodal derivatives come from finite differences, so the
//! interpolant and its gradient are continuous.

use serde::{Deserialize, Serialize};

use super::FlowError;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridField {
    nx: usize,
    ny: usize,
    x0: f64,
    x1: f64,
    y0: f64,
    y1: f64,
    /// row-major, `values[j * nx + i]` at (x_i, y_j)
    values: Vec<f64>,
    fx: Vec<f64>,
    fy: Vec<f64>,
    fxy: Vec<f64>,
}

impl GridField {
    pub fn new(nx: usize, ny: usize, x_range: (f64, f64), y_range: (f64, f64), values: Vec<f64>) -> Result<Self, FlowError> {
        if nx < 2 || ny < 2 || values.len() != nx * ny {
            return Err(FlowError::Grid(format!("need at least 2×2 values, got {nx}×{ny} with {} entries", values.len())));
        }
        if !(x_range.1 > x_range.0 && y_range.1 > y_range.0) {
            return Err(FlowError::Grid("empty grid extent".into()));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(FlowError::Grid("non-finite grid value".into()));
        }
        let mut g = GridField {
            nx,
            ny,
            x0: x_range.0,
            x1: x_range.1,
            y0: y_range.0,
            y1: y_range.1,
            values,
            fx: vec![],
            fy: vec![],
            fxy: vec![],
        };
        let (hx, hy) = g.spacing();
        let at = |v: &[f64], i: usize, j: usize| v[j * nx + i];
        let d = |v: &[f64], i: usize, j: usize, dir: usize| -> f64 {
            let (n, h) = if dir == 0 { (nx, hx) } else { (ny, hy) };
            let k = if dir == 0 { i } else { j };
            let pick = |kk: usize| if dir == 0 { at(v, kk, j) } else { at(v, i, kk) };
            if k == 0 {
                (pick(1) - pick(0)) / h
            } else if k == n - 1 {
                (pick(n - 1) - pick(n - 2)) / h
            } else {
                (pick(k + 1) - pick(k - 1)) / (2.0 * h)
            }
        };
        let mut fx = vec![0.0; nx * ny];
        let mut fy = vec![0.0; nx * ny];
        for j in 0..ny {
            for i in 0..nx {
                fx[j * nx + i] = d(&g.values, i, j, 0);
                fy[j * nx + i] = d(&g.values, i, j, 1);
            }
        }
        let mut fxy = vec![0.0; nx * ny];
        for j in 0..ny {
            for i in 0..nx {
                fxy[j * nx + i] = d(&fx, i, j, 1);
            }
        }
        g.fx = fx;
        g.fy = fy;
        g.fxy = fxy;
        Ok(g)
    }

    /// Samples a function on the grid.
    pub fn from_fn(nx: usize, ny: usize, x_range: (f64, f64), y_range: (f64, f64), f: impl Fn(f64, f64) -> f64) -> Result<Self, FlowError> {
        let hx = (x_range.1 - x_range.0) / (nx - 1) as f64;
        let hy = (y_range.1 - y_range.0) / (ny - 1) as f64;
        let values = (0..ny)
            .flat_map(|j| (0..nx).map(move |i| (i, j)))
            .map(|(i, j)| f(x_range.0 + i as f64 * hx, y_range.0 + j as f64 * hy))
            .collect();
        GridField::new(nx, ny, x_range, y_range, values)
    }

    /// Text format: a header `grid <nx> <ny> <x0> <x1> <y0> <y1>` followed by
    /// `nx·ny` values, rows of constant y from y0 upwards.
    pub fn parse(text: &str) -> Result<Self, FlowError> {
        let mut tokens = text.lines().filter(|l| !l.trim_start().starts_with('#')).flat_map(str::split_whitespace);
        if tokens.next() != Some("grid") {
            return Err(FlowError::Grid("grid file must start with 'grid'".into()));
        }
        let mut num = |what: &str| -> Result<f64, FlowError> {
            tokens
                .next()
                .ok_or_else(|| FlowError::Grid(format!("missing {what}")))?
                .parse::<f64>()
                .map_err(|e| FlowError::Grid(format!("{what}: {e}")))
        };
        let nx = num("nx")? as usize;
        let ny = num("ny")? as usize;
        let (x0, x1, y0, y1) = (num("x0")?, num("x1")?, num("y0")?, num("y1")?);
        let values = (0..nx * ny).map(|_| num("value")).collect::<Result<Vec<_>, _>>()?;
        GridField::new(nx, ny, (x0, x1), (y0, y1), values)
    }

    fn spacing(&self) -> (f64, f64) {
        ((self.x1 - self.x0) / (self.nx - 1) as f64, (self.y1 - self.y0) / (self.ny - 1) as f64)
    }

    /// Value and gradient; coordinates are clamped to the grid extent.
    pub fn eval(&self, x: f64, y: f64) -> (f64, [f64; 2]) {
        let (hx, hy) = self.spacing();
        let x = x.clamp(self.x0, self.x1);
        let y = y.clamp(self.y0, self.y1);
        let (fi, fj) = ((x - self.x0) / hx, (y - self.y0) / hy);
        let (i, j) = ((fi.floor() as usize).min(self.nx - 2), (fj.floor() as usize).min(self.ny - 2));
        let (t, u) = (fi - i as f64, fj - j as f64);
        let basis = |s: f64| {
            let (s2, s3) = (s * s, s * s * s);
            // h00, h10, h01, h11 and their derivatives
            (
                [2.0 * s3 - 3.0 * s2 + 1.0, s3 - 2.0 * s2 + s, -2.0 * s3 + 3.0 * s2, s3 - s2],
                [6.0 * s2 - 6.0 * s, 3.0 * s2 - 4.0 * s + 1.0, -6.0 * s2 + 6.0 * s, 3.0 * s2 - 2.0 * s],
            )
        };
        let (bt, dbt) = basis(t);
        let (bu, dbu) = basis(u);
        let (mut f, mut gx, mut gy) = (0.0, 0.0, 0.0);
        for (a, b) in [(0usize, 0usize), (1, 0), (0, 1), (1, 1)] {
            let k = (j + b) * self.nx + (i + a);
            // value basis index 0 or 2, slope basis index 1 or 3
            let (va, sa) = (2 * a, 2 * a + 1);
            let (vb, sb) = (2 * b, 2 * b + 1);
            let coeffs = [
                (self.values[k], va, vb),
                (self.fx[k] * hx, sa, vb),
                (self.fy[k] * hy, va, sb),
                (self.fxy[k] * hx * hy, sa, sb),
            ];
            for (c, ta, ub) in coeffs {
                f += c * bt[ta] * bu[ub];
                gx += c * dbt[ta] * bu[ub] / hx;
                gy += c * bt[ta] * dbu[ub] / hy;
            }
        }
        (f, [gx, gy])
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reproduces_nodes_and_smooth_functions() {
        let f = |x: f64, y: f64| (1.0 - x * x - y * y).max(0.0).powi(4) + 0.3 * x * y;
        let g = GridField::from_fn(81, 81, (-1.0, 1.0), (-1.0, 1.0), f).unwrap();
        let (v, _) = g.eval(0.25, -0.5);
        assert!((v - f(0.25, -0.5)).abs() < 1e-12);
        for p in [[0.13, 0.21], [-0.4, 0.33], [0.7, -0.1]] {
            let (v, grad) = g.eval(p[0], p[1]);
            assert!((v - f(p[0], p[1])).abs() < 1e-4);
            let h = 1e-6;
            let fd = (f(p[0] + h, p[1]) - f(p[0] - h, p[1])) / (2.0 * h);
            assert!((grad[0] - fd).abs() < 5e-3, "{} vs {}", grad[0], fd);
        }
    }

    #[test]
    fn gradient_is_continuous_across_cells() {
        let g = GridField::from_fn(11, 11, (0.0, 1.0), (0.0, 1.0), |x, y| (3.0 * x).sin() * (2.0 * y).cos()).unwrap();
        let eps = 1e-9;
        let (_, left) = g.eval(0.3 - eps, 0.47);
        let (_, right) = g.eval(0.3 + eps, 0.47);
        assert!((left[0] - right[0]).abs() < 1e-6 && (left[1] - right[1]).abs() < 1e-6);
    }

    #[test]
    fn parses_text() {
        let g = GridField::parse("grid 2 2 0 1 0 1\n0 1\n1 2\n").unwrap();
        assert!((g.eval(0.5, 0.5).0 - 1.0).abs() < 1e-12);
        assert!(GridField::parse("grid 2 2 0 1 0 1\n0 1\n").is_err());
    }
}
