//! Scalar Hamiltonians with value and ambient gradient.
//!
//! Planar fields read (x, y) and report a zero z-derivative; sphere fields
//! read ambient (x, y, z) on the unit sphere.

use serde::{Deserialize, Serialize};

use super::expr::Expr;
use super::grid::GridField;
use super::FlowError;

/// A(1 − |p − c|²/R²)⁶ inside the ball of radius R, zero outside. C⁵ at
/// the rim, so RK4 keeps its order across the support boundary.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Bump {
    pub center: [f64; 3],
    pub radius: f64,
    pub amplitude: f64,
}

impl Bump {
    pub fn planar(cx: f64, cy: f64, radius: f64, amplitude: f64) -> Self {
        Bump { center: [cx, cy, 0.0], radius, amplitude }
    }

    fn eval(&self, p: [f64; 3]) -> (f64, [f64; 3]) {
        let d = [p[0] - self.center[0], p[1] - self.center[1], p[2] - self.center[2]];
        let s = (d[0] * d[0] + d[1] * d[1] + d[2] * d[2]) / (self.radius * self.radius);
        if s >= 1.0 {
            return (0.0, [0.0; 3]);
        }
        let one = 1.0 - s;
        let v = self.amplitude * one.powi(6);
        let dv = -12.0 * self.amplitude * one.powi(5) / (self.radius * self.radius);
        (v, [dv * d[0], dv * d[1], dv * d[2]])
    }
}

/// A·exp(−|p − c|²/σ²).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Gaussian {
    pub center: [f64; 3],
    pub sigma: f64,
    pub amplitude: f64,
}

impl Gaussian {
    fn eval(&self, p: [f64; 3]) -> (f64, [f64; 3]) {
        let d = [p[0] - self.center[0], p[1] - self.center[1], p[2] - self.center[2]];
        let s2 = self.sigma * self.sigma;
        let v = self.amplitude * (-(d[0] * d[0] + d[1] * d[1] + d[2] * d[2]) / s2).exp();
        let k = -2.0 * v / s2;
        (v, [k * d[0], k * d[1], k * d[2]])
    }
}

/// F(coordinate)·χ(r) with F a cubic without constant term and χ a C⁵
/// cutoff equal to 1 for r ≤ r_inner and 0 for r ≥ r_outer.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Shear {
    /// Coordinate F reads: 0 = x, 1 = y.
    pub axis: usize,
    pub poly: [f64; 3],
    pub r_inner: f64,
    pub r_outer: f64,
}

impl Shear {
    fn eval(&self, p: [f64; 3]) -> (f64, [f64; 3]) {
        let t = p[self.axis];
        let [c1, c2, c3] = self.poly;
        let f = c1 * t + c2 * t * t + c3 * t * t * t;
        let df = c1 + 2.0 * c2 * t + 3.0 * c3 * t * t;
        let (chi, dchi_dr2) = cutoff(p[0] * p[0] + p[1] * p[1], self.r_inner, self.r_outer);
        let mut g = [2.0 * p[0] * dchi_dr2 * f, 2.0 * p[1] * dchi_dr2 * f, 0.0];
        g[self.axis] += df * chi;
        (f * chi, g)
    }
}

/// Rotation about `center` with angular speed rate·χ(r²): rigid on the
/// inner disc, still outside r_outer. H = −(rate/2)∫_{r²}^{r_outer²} χ.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Twist {
    pub center: [f64; 2],
    pub rate: f64,
    pub r_inner: f64,
    pub r_outer: f64,
}

impl Twist {
    fn eval(&self, p: [f64; 3]) -> (f64, [f64; 3]) {
        let d = [p[0] - self.center[0], p[1] - self.center[1]];
        let r2 = d[0] * d[0] + d[1] * d[1];
        let (chi, _) = cutoff(r2, self.r_inner, self.r_outer);
        let v = -0.5 * self.rate * cutoff_tail(r2, self.r_inner, self.r_outer);
        (v, [self.rate * chi * d[0], self.rate * chi * d[1], 0.0])
    }
}

/// ∫_{r2}^{r_outer²} χ.
fn cutoff_tail(r2: f64, r_inner: f64, r_outer: f64) -> f64 {
    let (a, b) = (r_inner * r_inner, r_outer * r_outer);
    if r2 >= b {
        return 0.0;
    }
    // the step is odd about its midpoint, so χ has mean 1/2 over [a, b]
    if r2 <= a {
        return (a - r2) + 0.5 * (b - a);
    }
    let t = (r2 - a) / (b - a);
    let mut tail = 1.0 - t;
    let mut binom = 1.0;
    for k in 0..=5 {
        let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
        tail -= 2772.0 * sign * binom * (1.0 - t.powi(7 + k)) / ((6 + k) * (7 + k)) as f64;
        binom = binom * (5 - k) as f64 / (k + 1) as f64;
    }
    (b - a) * tail
}

/// χ as a function of r² and its derivative in r².
fn cutoff(r2: f64, r_inner: f64, r_outer: f64) -> (f64, f64) {
    let (a, b) = (r_inner * r_inner, r_outer * r_outer);
    if r2 <= a {
        return (1.0, 0.0);
    }
    if r2 >= b {
        return (0.0, 0.0);
    }
    let s = (r2 - a) / (b - a);
    // step' = 2772 s⁵(1−s)⁵, the normalized smooth step of degree 11
    let mut step = 0.0;
    let mut binom = 1.0;
    for k in 0..=5 {
        let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
        step += sign * binom * s.powi(6 + k) / (6 + k) as f64;
        binom = binom * (5 - k) as f64 / (k + 1) as f64;
    }
    step *= 2772.0;
    let dstep = 2772.0 * (s * (1.0 - s)).powi(5);
    (1.0 - step, -dstep / (b - a))
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExprField {
    pub source: String,
    compiled: Box<(Expr, [Expr; 3])>,
}

impl ExprField {
    pub fn parse(source: &str) -> Result<Self, FlowError> {
        let e = Expr::parse(source)?;
        let grad = [e.diff(0), e.diff(1), e.diff(2)];
        Ok(ExprField { source: source.to_string(), compiled: Box::new((e, grad)) })
    }

    fn eval(&self, p: [f64; 3]) -> (f64, [f64; 3]) {
        let (e, g) = &*self.compiled;
        (e.eval(p), [g[0].eval(p), g[1].eval(p), g[2].eval(p)])
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum ScalarField {
    Zero,
    /// scale·(x² + y²)/2
    Quadratic { scale: f64 },
    /// a·x + b·y + c·z
    Linear { coeffs: [f64; 3] },
    Bumps(Vec<Bump>),
    Gaussians(Vec<Gaussian>),
    Shear(Shear),
    Twist(Twist),
    Expr(ExprField),
    Grid(GridField),
    Sum(Vec<(f64, ScalarField)>),
}

impl ScalarField {
    pub fn expr(source: &str) -> Result<Self, FlowError> {
        Ok(ScalarField::Expr(ExprField::parse(source)?))
    }

    pub fn eval(&self, p: [f64; 3]) -> (f64, [f64; 3]) {
        match self {
            ScalarField::Zero => (0.0, [0.0; 3]),
            ScalarField::Quadratic { scale } => {
                (0.5 * scale * (p[0] * p[0] + p[1] * p[1]), [scale * p[0], scale * p[1], 0.0])
            }
            ScalarField::Linear { coeffs } => (coeffs[0] * p[0] + coeffs[1] * p[1] + coeffs[2] * p[2], *coeffs),
            ScalarField::Bumps(bumps) => sum_terms(bumps.iter().map(|b| b.eval(p))),
            ScalarField::Gaussians(gs) => sum_terms(gs.iter().map(|g| g.eval(p))),
            ScalarField::Shear(s) => s.eval(p),
            ScalarField::Twist(t) => t.eval(p),
            ScalarField::Expr(e) => e.eval(p),
            ScalarField::Grid(g) => {
                let (v, [gx, gy]) = g.eval(p[0], p[1]);
                (v, [gx, gy, 0.0])
            }
            ScalarField::Sum(terms) => sum_terms(terms.iter().map(|(c, f)| {
                let (v, g) = f.eval(p);
                (c * v, [c * g[0], c * g[1], c * g[2]])
            })),
        }
    }

    pub fn scaled(self, c: f64) -> ScalarField {
        ScalarField::Sum(vec![(c, self)])
    }

    pub fn plus(self, other: ScalarField) -> ScalarField {
        ScalarField::Sum(vec![(1.0, self), (1.0, other)])
    }
}

fn sum_terms(terms: impl Iterator<Item = (f64, [f64; 3])>) -> (f64, [f64; 3]) {
    terms.fold((0.0, [0.0; 3]), |(v, g), (tv, tg)| (v + tv, [g[0] + tg[0], g[1] + tg[1], g[2] + tg[2]]))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn check_gradient(f: &ScalarField, p: [f64; 3], tol: f64) {
        let (_, g) = f.eval(p);
        let h = 1e-6;
        for i in 0..3 {
            let mut a = p;
            let mut b = p;
            a[i] += h;
            b[i] -= h;
            let fd = (f.eval(a).0 - f.eval(b).0) / (2.0 * h);
            assert!((fd - g[i]).abs() < tol, "{f:?} component {i}: {} vs {fd}", g[i]);
        }
    }

    #[test]
    fn analytic_gradients() {
        let fields = [
            ScalarField::Quadratic { scale: 1.5 },
            ScalarField::Linear { coeffs: [0.1, -2.0, 1.0] },
            ScalarField::Bumps(vec![Bump::planar(0.1, 0.2, 0.7, 2.0), Bump::planar(-0.3, 0.0, 0.5, -1.0)]),
            ScalarField::Gaussians(vec![Gaussian { center: [0.0, 0.6, 0.8], sigma: 0.5, amplitude: -1.0 }]),
            ScalarField::Shear(Shear { axis: 1, poly: [1.0, 0.5, 0.0], r_inner: 0.3, r_outer: 0.8 }),
            ScalarField::Twist(Twist { center: [0.1, -0.05], rate: 1.7, r_inner: 0.3, r_outer: 0.8 }),
            ScalarField::expr("sin(x)*y + z^2").unwrap(),
        ];
        for f in &fields {
            for p in [[0.1, 0.2, 0.3], [0.45, -0.35, 0.1], [-0.2, 0.5, -0.6], [0.05, 0.0, 0.0]] {
                check_gradient(f, p, 1e-6);
            }
        }
    }

    #[test]
    fn cutoff_is_a_unit_step() {
        assert_eq!(cutoff(0.01, 0.3, 0.9), (1.0, 0.0));
        assert_eq!(cutoff(0.81, 0.3, 0.9), (0.0, 0.0));
        let (near_end, _) = cutoff(0.81 - 1e-12, 0.3, 0.9);
        assert!(near_end.abs() < 1e-12);
        let (mid, _) = cutoff(0.5 * (0.09 + 0.81), 0.3, 0.9);
        assert!((mid - 0.5).abs() < 1e-14);
    }

    #[test]
    fn bump_vanishes_outside_support() {
        let b = ScalarField::Bumps(vec![Bump::planar(0.0, 0.0, 0.5, 1.0)]);
        assert_eq!(b.eval([0.6, 0.0, 0.0]), (0.0, [0.0; 3]));
        assert_eq!(b.eval([0.0, 0.0, 0.0]).0, 1.0);
    }
}
