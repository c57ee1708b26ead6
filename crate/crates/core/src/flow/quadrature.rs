//! Product Gauss rules for integrating over the three surfaces.

use std::f64::consts::PI;

use super::surface::{SurfaceKind, SurfaceModel, SurfacePoint};

/// Gauss–Legendre nodes and weights on [−1, 1], by Newton on P_n.
pub fn gauss_legendre(n: usize) -> Vec<(f64, f64)> {
    assert!(n > 0, "need at least one node");
    let mut out = Vec::with_capacity(n);
    for i in 0..n {
        let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 1.0;
        for _ in 0..100 {
            let (p, d) = legendre(n, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre(n, x);
        if d != 0.0 {
            dp = d;
        }
        out.push((x, 2.0 / ((1.0 - x * x) * dp * dp)));
    }
    out.reverse();
    out
}

/// P_n(x) and P_n'(x) by the three-term recurrence.
fn legendre(n: usize, x: f64) -> (f64, f64) {
    let (mut p0, mut p1) = (1.0, x);
    for k in 2..=n {
        let k = k as f64;
        let p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
    }
    let p = if n == 0 { 1.0 } else { p1 };
    let d = n as f64 * (x * p - p0) / (x * x - 1.0);
    (p, d)
}

/// Nodes on [a, b].
fn gauss_on(n: usize, a: f64, b: f64) -> Vec<(f64, f64)> {
    let (m, r) = (0.5 * (a + b), 0.5 * (b - a));
    gauss_legendre(n).into_iter().map(|(x, w)| (m + r * x, r * w)).collect()
}

/// Weighted surface nodes; weights sum to the total area (or to 1 when
/// normalized).
#[derive(Clone, Debug)]
pub struct QuadratureRule {
    pub nodes: Vec<(SurfacePoint, f64)>,
}

impl QuadratureRule {
    /// `n` Gauss nodes per radial/height/triangle direction and `2n`
    /// (respectively `4n`) uniform angular nodes.
    pub fn for_surface(surface: &SurfaceModel, n: usize) -> Self {
        let nodes = match surface.kind {
            SurfaceKind::Disc => {
                let m = 4 * n;
                let radial = gauss_on(n, 0.0, 1.0);
                let mut nodes = Vec::with_capacity(n * m);
                for (r, w) in radial {
                    for k in 0..m {
                        let th = 2.0 * PI * (k as f64 + 0.5) / m as f64;
                        nodes.push((SurfacePoint::plane(r * th.cos(), r * th.sin()), w * r * 2.0 * PI / m as f64));
                    }
                }
                nodes
            }
            SurfaceKind::Sphere => {
                let m = 4 * n;
                let mut nodes = Vec::with_capacity(n * m);
                for (z, w) in gauss_legendre(n) {
                    let rho = (1.0 - z * z).sqrt();
                    for k in 0..m {
                        let ph = 2.0 * PI * (k as f64 + 0.5) / m as f64;
                        nodes.push((SurfacePoint::sphere([rho * ph.cos(), rho * ph.sin(), z]), w * 2.0 * PI / m as f64));
                    }
                }
                nodes
            }
            SurfaceKind::PolygonGenus2 => {
                // eight centre triangles, each through the collapsed square
                // (s, t) ↦ s·(v_k + t(v_{k+1} − v_k))
                let oct = surface.octagon();
                let g = gauss_on(n, 0.0, 1.0);
                let mut nodes = Vec::with_capacity(8 * n * n);
                for k in 0..8 {
                    let (a, b) = (oct.vertices[k], oct.vertices[(k + 1) % 8]);
                    let e = [b[0] - a[0], b[1] - a[1]];
                    let jac = (a[0] * e[1] - a[1] * e[0]).abs();
                    for &(s, ws) in &g {
                        for &(t, wt) in &g {
                            let p = [s * (a[0] + t * e[0]), s * (a[1] + t * e[1])];
                            nodes.push((SurfacePoint::plane(p[0], p[1]), ws * wt * s * jac));
                        }
                    }
                }
                nodes
            }
        };
        QuadratureRule { nodes }
    }

    /// Rescales weights to total mass 1.
    pub fn normalized(mut self) -> Self {
        let total: f64 = self.total();
        for n in &mut self.nodes {
            n.1 /= total;
        }
        self
    }

    pub fn total(&self) -> f64 {
        self.nodes.iter().map(|n| n.1).sum()
    }

    pub fn integrate(&self, mut f: impl FnMut(&SurfacePoint) -> f64) -> f64 {
        self.nodes.iter().map(|(p, w)| w * f(p)).sum()
    }
}
