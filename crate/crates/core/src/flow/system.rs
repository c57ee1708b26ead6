//! Hamiltonian systems: a surface, a time-independent H and the derived
//! vector field X_H with dH(v) = ω(v, X_H).

use std::f64::consts::PI;

use super::field::ScalarField;
use super::surface::{area_density, chart_jacobian, cross, dot3, Chart, SurfaceKind, SurfaceModel, SurfacePoint};
use crate::tolerances::Tolerances;

#[derive(Clone, Debug)]
pub struct HamiltonianSystem {
    pub name: String,
    pub surface: SurfaceModel,
    pub h: ScalarField,
    /// H vanishes near the disc boundary or the octagon's cone point.
    pub boundary_flat: bool,
    pub tolerances: Tolerances,
    h_min: f64,
    h_max: f64,
    omega_max: f64,
}

impl HamiltonianSystem {
    pub fn new(name: impl Into<String>, surface: SurfaceModel, h: ScalarField, boundary_flat: bool) -> Self {
        HamiltonianSystem::with_tolerances(name, surface, h, boundary_flat, Tolerances::default())
    }

    pub fn with_tolerances(
        name: impl Into<String>,
        surface: SurfaceModel,
        h: ScalarField,
        boundary_flat: bool,
        tolerances: Tolerances,
    ) -> Self {
        let mut sys =
            HamiltonianSystem { name: name.into(), surface, h, boundary_flat, tolerances, h_min: 0.0, h_max: 0.0, omega_max: 0.0 };
        sys.scan();
        sys
    }

    /// Scales H by `c` (and the derived constants accordingly).
    pub fn scaled(&self, c: f64) -> Self {
        HamiltonianSystem::with_tolerances(
            format!("{}*{c}", self.name),
            self.surface.clone(),
            self.h.clone().scaled(c),
            self.boundary_flat,
            self.tolerances,
        )
    }

    pub fn kind(&self) -> SurfaceKind {
        self.surface.kind
    }

    pub fn value(&self, p: &SurfacePoint) -> f64 {
        self.h.eval(p.ambient()).0
    }

    /// H and X_H in the chart of `p`.
    pub fn value_and_field(&self, p: &SurfacePoint) -> (f64, [f64; 2]) {
        let (v, g) = self.h.eval(p.ambient());
        match p.chart {
            Chart::Plane => (v, [-g[1], g[0]]),
            chart => {
                let (pu, pv) = chart_jacobian(chart, p.w);
                let (hu, hv) = (dot3(g, pu), dot3(g, pv));
                let rho = area_density(chart, p.w);
                (v, [-hv / rho, hu / rho])
            }
        }
    }

    pub fn vector_field(&self, p: &SurfacePoint) -> [f64; 2] {
        self.value_and_field(p).1
    }

    /// |X_H| in the surface metric.
    pub fn field_norm(&self, p: &SurfacePoint) -> f64 {
        match p.chart {
            Chart::Plane => {
                let x = self.vector_field(p);
                x[0].hypot(x[1])
            }
            _ => {
                let q = p.ambient();
                let (_, g) = self.h.eval(q);
                let t = cross(q, g);
                dot3(t, t).sqrt()
            }
        }
    }

    pub fn h_range(&self) -> (f64, f64) {
        (self.h_min, self.h_max)
    }

    pub fn energy_tol(&self) -> f64 {
        self.tolerances.energy_rel * (self.h_max - self.h_min)
    }

    /// Largest operator norm of the chart derivative of X_H over the scan.
    pub fn omega_max(&self) -> f64 {
        self.omega_max
    }

    /// 2π/Ω_max: the period of the fastest linearized rotation.
    pub fn timescale(&self) -> f64 {
        if self.omega_max > 0.0 {
            2.0 * PI / self.omega_max
        } else {
            f64::INFINITY
        }
    }

    pub fn default_dt(&self) -> f64 {
        if self.omega_max > 0.0 {
            self.tolerances.dt_fraction * self.timescale()
        } else {
            1e-2
        }
    }

    /// Grid points covering the surface, used for scans.
    pub fn scan_points(surface: &SurfaceModel, resolution: usize) -> Vec<SurfacePoint> {
        let n = resolution.max(4);
        match surface.kind {
            SurfaceKind::Disc => {
                let mut pts = vec![SurfacePoint::plane(0.0, 0.0)];
                for i in 1..=n {
                    let r = i as f64 / n as f64 * 0.999;
                    for k in 0..(4 * n) {
                        let th = 2.0 * PI * k as f64 / (4 * n) as f64;
                        pts.push(SurfacePoint::plane(r * th.cos(), r * th.sin()));
                    }
                }
                pts
            }
            SurfaceKind::PolygonGenus2 => {
                let oct = surface.octagon();
                let m = 2 * n;
                (0..=m)
                    .flat_map(|i| (0..=m).map(move |j| (i, j)))
                    .map(|(i, j)| [-1.0 + 2.0 * i as f64 / m as f64, -1.0 + 2.0 * j as f64 / m as f64])
                    .filter(|p| oct.contains(*p))
                    .map(|p| SurfacePoint::plane(p[0], p[1]))
                    .collect()
            }
            SurfaceKind::Sphere => {
                let m = 2 * n;
                let mut pts = Vec::new();
                for chart in [Chart::South, Chart::North] {
                    for i in 0..=m {
                        for j in 0..=m {
                            let w = [-1.05 + 2.1 * i as f64 / m as f64, -1.05 + 2.1 * j as f64 / m as f64];
                            if w[0] * w[0] + w[1] * w[1] <= 1.05 * 1.05 {
                                pts.push(SurfacePoint { chart, w });
                            }
                        }
                    }
                }
                pts
            }
        }
    }

    fn scan(&mut self) {
        let pts = HamiltonianSystem::scan_points(&self.surface, 40);
        let (mut lo, mut hi, mut om) = (f64::INFINITY, f64::NEG_INFINITY, 0.0f64);
        for p in &pts {
            let v = self.value(p);
            lo = lo.min(v);
            hi = hi.max(v);
            om = om.max(self.jacobian_norm(p));
        }
        self.h_min = lo;
        self.h_max = hi;
        self.omega_max = om;
    }

    /// Operator norm of DX at `p` by central differences.
    pub fn jacobian_norm(&self, p: &SurfacePoint) -> f64 {
        let h = 1e-5;
        let at = |du: f64, dv: f64| self.vector_field(&SurfacePoint { chart: p.chart, w: [p.w[0] + du, p.w[1] + dv] });
        let (xp, xm, yp, ym) = (at(h, 0.0), at(-h, 0.0), at(0.0, h), at(0.0, -h));
        let j = [
            [(xp[0] - xm[0]) / (2.0 * h), (yp[0] - ym[0]) / (2.0 * h)],
            [(xp[1] - xm[1]) / (2.0 * h), (yp[1] - ym[1]) / (2.0 * h)],
        ];
        // largest singular value of a 2×2 matrix
        let a = j[0][0] * j[0][0] + j[1][0] * j[1][0];
        let b = j[0][0] * j[0][1] + j[1][0] * j[1][1];
        let d = j[0][1] * j[0][1] + j[1][1] * j[1][1];
        let tr = a + d;
        let disc = ((a - d) * (a - d) + 4.0 * b * b).sqrt();
        (0.5 * (tr + disc)).sqrt()
    }
}
