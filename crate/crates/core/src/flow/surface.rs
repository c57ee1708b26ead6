//! Surface models: unit disc, round sphere with two stereographic charts,
//! and the flat regular octagon with side pairing a1 b1 a1⁻¹ b1⁻¹ a2 b2 a2⁻¹ b2⁻¹.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use super::FlowError;

/// Chart switch threshold on the sphere.
pub const SPHERE_CHART_SWITCH: f64 = 2.0;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum SurfaceKind {
    Disc,
    Sphere,
    PolygonGenus2,
}

impl SurfaceKind {
    pub fn name(self) -> &'static str {
        match self {
            SurfaceKind::Disc => "disc",
            SurfaceKind::Sphere => "sphere",
            SurfaceKind::PolygonGenus2 => "polygon_genus2",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "disc" => Some(SurfaceKind::Disc),
            "sphere" => Some(SurfaceKind::Sphere),
            "polygon_genus2" | "polygon" | "octagon" => Some(SurfaceKind::PolygonGenus2),
            _ => None,
        }
    }

    pub fn all() -> [SurfaceKind; 3] {
        [SurfaceKind::Disc, SurfaceKind::Sphere, SurfaceKind::PolygonGenus2]
    }
}

/// Coordinate chart a point is expressed in.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Chart {
    /// Euclidean coordinates (disc and octagon).
    Plane,
    /// w = (x, y)/(1 + z); covers all but the south pole.
    South,
    /// w = (x, −y)/(1 − z); covers all but the north pole.
    North,
}

/// A point on a surface in chart coordinates.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SurfacePoint {
    pub chart: Chart,
    pub w: [f64; 2],
}

impl SurfacePoint {
    pub fn plane(x: f64, y: f64) -> Self {
        SurfacePoint { chart: Chart::Plane, w: [x, y] }
    }

    /// Sphere point from ambient coordinates, in the chart where it sits
    /// closest to the origin.
    pub fn sphere(p: [f64; 3]) -> Self {
        let n = norm3(p);
        let p = [p[0] / n, p[1] / n, p[2] / n];
        if p[2] >= 0.0 {
            SurfacePoint { chart: Chart::South, w: [p[0] / (1.0 + p[2]), p[1] / (1.0 + p[2])] }
        } else {
            SurfacePoint { chart: Chart::North, w: [p[0] / (1.0 - p[2]), -p[1] / (1.0 - p[2])] }
        }
    }

    /// Ambient coordinates; planar points get z = 0.
    pub fn ambient(&self) -> [f64; 3] {
        let [u, v] = self.w;
        let s = u * u + v * v;
        match self.chart {
            Chart::Plane => [u, v, 0.0],
            Chart::South => [2.0 * u / (1.0 + s), 2.0 * v / (1.0 + s), (1.0 - s) / (1.0 + s)],
            Chart::North => [2.0 * u / (1.0 + s), -2.0 * v / (1.0 + s), (s - 1.0) / (1.0 + s)],
        }
    }

    /// Same point in the other sphere chart (w ↦ 1/w̄ conjugated by the
    /// orientation flip, i.e. complex inversion).
    pub fn switched(&self) -> Self {
        let [u, v] = self.w;
        let s = u * u + v * v;
        let chart = match self.chart {
            Chart::South => Chart::North,
            Chart::North => Chart::South,
            Chart::Plane => return *self,
        };
        SurfacePoint { chart, w: [u / s, -v / s] }
    }
}

/// Derivatives of the inverse chart map: (∂p/∂u, ∂p/∂v).
pub fn chart_jacobian(chart: Chart, w: [f64; 2]) -> ([f64; 3], [f64; 3]) {
    let [u, v] = w;
    let s = u * u + v * v;
    let d = (1.0 + s) * (1.0 + s);
    match chart {
        Chart::Plane => ([1.0, 0.0, 0.0], [0.0, 1.0, 0.0]),
        Chart::South => (
            [(2.0 * (1.0 + s) - 4.0 * u * u) / d, -4.0 * u * v / d, -4.0 * u / d],
            [-4.0 * u * v / d, (2.0 * (1.0 + s) - 4.0 * v * v) / d, -4.0 * v / d],
        ),
        Chart::North => (
            [(2.0 * (1.0 + s) - 4.0 * u * u) / d, 4.0 * u * v / d, 4.0 * u / d],
            [-4.0 * u * v / d, -(2.0 * (1.0 + s) - 4.0 * v * v) / d, 4.0 * v / d],
        ),
    }
}

/// Area density of the chart: 1 in the plane, 4/(1+|w|²)² on the sphere.
pub fn area_density(chart: Chart, w: [f64; 2]) -> f64 {
    match chart {
        Chart::Plane => 1.0,
        _ => {
            let s = w[0] * w[0] + w[1] * w[1];
            4.0 / ((1.0 + s) * (1.0 + s))
        }
    }
}

pub fn norm3(p: [f64; 3]) -> f64 {
    (p[0] * p[0] + p[1] * p[1] + p[2] * p[2]).sqrt()
}

pub fn cross(a: [f64; 3], b: [f64; 3]) -> [f64; 3] {
    [a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]]
}

pub fn dot3(a: [f64; 3], b: [f64; 3]) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

/// Orientation-preserving plane isometry p ↦ rot(θ)·p + t.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Isometry {
    pub cos: f64,
    pub sin: f64,
    pub t: [f64; 2],
}

impl Isometry {
    pub fn apply(&self, p: [f64; 2]) -> [f64; 2] {
        [self.cos * p[0] - self.sin * p[1] + self.t[0], self.sin * p[0] + self.cos * p[1] + self.t[1]]
    }

    /// Rotational part only.
    pub fn rotate(&self, v: [f64; 2]) -> [f64; 2] {
        [self.cos * v[0] - self.sin * v[1], self.sin * v[0] + self.cos * v[1]]
    }

    pub fn rotate_back(&self, v: [f64; 2]) -> [f64; 2] {
        [self.cos * v[0] + self.sin * v[1], -self.sin * v[0] + self.cos * v[1]]
    }

    pub fn inverse(&self) -> Isometry {
        let t = self.rotate_back([-self.t[0], -self.t[1]]);
        Isometry { cos: self.cos, sin: -self.sin, t }
    }
}

/// The flat regular octagon with circumradius 1, vertices at angles
/// −π/8 + kπ/4. Edge k runs from vertex k to vertex k+1 and has outward
/// normal at angle kπ/4.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Octagon {
    pub vertices: [[f64; 2]; 8],
    pub apothem: f64,
    /// `exit_map[e]` carries a point just outside edge `e` to the inside of
    /// the partner edge.
    pub exit_map: [Isometry; 8],
}

/// Generator letter (signed) emitted when leaving through each edge.
/// Edges 0,1,2,3,4,5,6,7 carry a1, b1, a1⁻¹, b1⁻¹, a2, b2, a2⁻¹, b2⁻¹;
/// exits through b-type edges are recorded with the opposite sign so that a
/// small loop around the cone point spells the standard relator.
pub const EDGE_LETTERS: [i64; 8] = [1, -2, -1, 2, 3, -4, -3, 4];

impl Default for Octagon {
    fn default() -> Self {
        Octagon::regular()
    }
}

impl Octagon {
    pub fn regular() -> Self {
        let vertices: [[f64; 2]; 8] = std::array::from_fn(|k| {
            let th = -PI / 8.0 + k as f64 * PI / 4.0;
            [th.cos(), th.sin()]
        });
        let partner = |e: usize| if e % 4 < 2 { e + 2 } else { e - 2 };
        let exit_map = std::array::from_fn(|e| {
            let j = partner(e);
            // v_e ↦ v_{j+1}, v_{e+1} ↦ v_j
            let (p0, p1) = (vertices[e], vertices[(e + 1) % 8]);
            let (q0, q1) = (vertices[(j + 1) % 8], vertices[j]);
            let a = (p1[1] - p0[1]).atan2(p1[0] - p0[0]);
            let b = (q1[1] - q0[1]).atan2(q1[0] - q0[0]);
            let (sin, cos) = (b - a).sin_cos();
            let rotated = [cos * p0[0] - sin * p0[1], sin * p0[0] + cos * p0[1]];
            Isometry { cos, sin, t: [q0[0] - rotated[0], q0[1] - rotated[1]] }
        });
        Octagon { vertices, apothem: (PI / 8.0).cos(), exit_map }
    }

    pub fn partner(edge: usize) -> usize {
        if edge % 4 < 2 {
            edge + 2
        } else {
            edge - 2
        }
    }

    pub fn normal(edge: usize) -> [f64; 2] {
        let th = edge as f64 * PI / 4.0;
        [th.cos(), th.sin()]
    }

    /// Signed distance past edge `e` (positive outside).
    pub fn excess(&self, edge: usize, p: [f64; 2]) -> f64 {
        let n = Octagon::normal(edge);
        n[0] * p[0] + n[1] * p[1] - self.apothem
    }

    pub fn contains(&self, p: [f64; 2]) -> bool {
        (0..8).all(|e| self.excess(e, p) <= 0.0)
    }

    /// Edges whose half-plane `p` violates.
    pub fn violated_edges(&self, p: [f64; 2]) -> Vec<usize> {
        (0..8).filter(|&e| self.excess(e, p) > 0.0).collect()
    }

    pub fn area(&self) -> f64 {
        2.0 * 2f64.sqrt()
    }

    pub fn distance_to_vertices(&self, p: [f64; 2]) -> f64 {
        self.vertices.iter().map(|v| ((p[0] - v[0]).powi(2) + (p[1] - v[1]).powi(2)).sqrt()).fold(f64::INFINITY, f64::min)
    }

    pub fn edge_midpoint(&self, edge: usize) -> [f64; 2] {
        let n = Octagon::normal(edge);
        [n[0] * self.apothem, n[1] * self.apothem]
    }

    /// Brings a point that overshot one edge back inside, returning the edge
    /// crossed. Errors if the point is past two edges (a vertex region).
    pub fn wrap(&self, p: [f64; 2]) -> Result<([f64; 2], Option<usize>), FlowError> {
        match self.violated_edges(p).as_slice() {
            [] => Ok((p, None)),
            [e] => Ok((self.exit_map[*e].apply(p), Some(*e))),
            _ => Err(FlowError::CornerApproach { point: p }),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SurfaceModel {
    pub kind: SurfaceKind,
    pub octagon: Option<Octagon>,
}

impl SurfaceModel {
    pub fn disc() -> Self {
        SurfaceModel { kind: SurfaceKind::Disc, octagon: None }
    }

    pub fn sphere() -> Self {
        SurfaceModel { kind: SurfaceKind::Sphere, octagon: None }
    }

    pub fn polygon_genus2() -> Self {
        SurfaceModel { kind: SurfaceKind::PolygonGenus2, octagon: Some(Octagon::regular()) }
    }

    pub fn of_kind(kind: SurfaceKind) -> Self {
        match kind {
            SurfaceKind::Disc => SurfaceModel::disc(),
            SurfaceKind::Sphere => SurfaceModel::sphere(),
            SurfaceKind::PolygonGenus2 => SurfaceModel::polygon_genus2(),
        }
    }

    pub fn total_area(&self) -> f64 {
        match self.kind {
            SurfaceKind::Disc => PI,
            SurfaceKind::Sphere => 4.0 * PI,
            SurfaceKind::PolygonGenus2 => self.octagon().area(),
        }
    }

    pub fn octagon(&self) -> &Octagon {
        self.octagon.as_ref().expect("polygon surface carries its octagon")
    }

    /// Uniform sample with respect to the area form, from two uniforms and
    /// (for the octagon) a rejection loop over further uniforms.
    pub fn sample_uniform(&self, mut uniform: impl FnMut() -> f64) -> SurfacePoint {
        match self.kind {
            SurfaceKind::Disc => {
                let r = uniform().sqrt();
                let th = 2.0 * PI * uniform();
                SurfacePoint::plane(r * th.cos(), r * th.sin())
            }
            SurfaceKind::Sphere => {
                let z = 2.0 * uniform() - 1.0;
                let ph = 2.0 * PI * uniform();
                let rho = (1.0 - z * z).max(0.0).sqrt();
                SurfacePoint::sphere([rho * ph.cos(), rho * ph.sin(), z])
            }
            SurfaceKind::PolygonGenus2 => loop {
                let p = [2.0 * uniform() - 1.0, 2.0 * uniform() - 1.0];
                if self.octagon().contains(p) {
                    return SurfacePoint::plane(p[0], p[1]);
                }
            },
        }
    }

    /// Normalizes a point after a step: chart switching on the sphere,
    /// edge unfolding on the octagon (returning the crossed edge).
    pub fn settle(&self, p: SurfacePoint) -> Result<(SurfacePoint, Option<usize>), FlowError> {
        match self.kind {
            SurfaceKind::Disc => {
                if p.w[0] * p.w[0] + p.w[1] * p.w[1] > 1.0 {
                    return Err(FlowError::OutsideDomain { point: p.w });
                }
                Ok((p, None))
            }
            SurfaceKind::Sphere => {
                let s = p.w[0] * p.w[0] + p.w[1] * p.w[1];
                if s > SPHERE_CHART_SWITCH * SPHERE_CHART_SWITCH {
                    Ok((p.switched(), None))
                } else {
                    Ok((p, None))
                }
            }
            SurfaceKind::PolygonGenus2 => {
                let (w, edge) = self.octagon().wrap(p.w)?;
                Ok((SurfacePoint::plane(w[0], w[1]), edge))
            }
        }
    }

    /// Geodesic-ish distance used for separation checks: Euclidean in the
    /// plane, chordal on the sphere.
    pub fn distance(&self, a: &SurfacePoint, b: &SurfacePoint) -> f64 {
        let (pa, pb) = (a.ambient(), b.ambient());
        norm3([pa[0] - pb[0], pa[1] - pb[1], pa[2] - pb[2]])
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn charts_roundtrip_and_switch() {
        for p in [[0.3, -0.4, 0.866], [0.6, 0.0, -0.8], [0.0, 1.0, 0.0], [-0.48, 0.6, -0.64]] {
            let n = norm3(p);
            let p = p.map(|c| c / n);
            let sp = SurfacePoint::sphere(p);
            let q = sp.ambient();
            let back = sp.switched().ambient();
            for i in 0..3 {
                assert!((q[i] - p[i]).abs() < 1e-12);
                assert!((back[i] - p[i]).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn chart_density_matches_jacobian() {
        // |∂p/∂u × ∂p/∂v| is the area density, and its direction is the
        // outward normal for a positively oriented chart.
        for chart in [Chart::South, Chart::North] {
            for w in [[0.1, 0.2], [-0.7, 0.4], [1.3, -0.9]] {
                let (pu, pv) = chart_jacobian(chart, w);
                let n = cross(pu, pv);
                let p = SurfacePoint { chart, w }.ambient();
                assert!((norm3(n) - area_density(chart, w)).abs() < 1e-12);
                assert!(dot3(n, p) > 0.0);
                // finite-difference check of the jacobian
                let h = 1e-6;
                let plus = SurfacePoint { chart, w: [w[0] + h, w[1]] }.ambient();
                let minus = SurfacePoint { chart, w: [w[0] - h, w[1]] }.ambient();
                for i in 0..3 {
                    assert!(((plus[i] - minus[i]) / (2.0 * h) - pu[i]).abs() < 1e-7);
                }
            }
        }
    }

    #[test]
    fn transition_is_area_preserving() {
        // ρ_S(w) = ρ_N(1/w)·|d(1/w)/dw|²
        for w in [[0.5, 0.5], [1.2, -0.3], [-1.9, 0.1]] {
            let p = SurfacePoint { chart: Chart::South, w };
            let q = p.switched();
            let s = w[0] * w[0] + w[1] * w[1];
            let jac = 1.0 / (s * s);
            assert!((area_density(Chart::South, w) - area_density(Chart::North, q.w) * jac).abs() < 1e-10);
        }
    }

    #[test]
    fn octagon_pairing_is_an_involution() {
        let oct = Octagon::regular();
        for e in 0..8 {
            let j = Octagon::partner(e);
            assert_eq!(Octagon::partner(j), e);
            let composed = |p| oct.exit_map[j].apply(oct.exit_map[e].apply(p));
            for p in [[0.1, 0.2], [0.95, 0.0], [-0.3, 0.7]] {
                let q = composed(p);
                assert!((q[0] - p[0]).abs() < 1e-12 && (q[1] - p[1]).abs() < 1e-12);
            }
            // the edge is carried onto its partner, direction reversed
            let (a, b) = (oct.vertices[e], oct.vertices[(e + 1) % 8]);
            let (ga, gb) = (oct.exit_map[e].apply(a), oct.exit_map[e].apply(b));
            let (pa, pb) = (oct.vertices[(j + 1) % 8], oct.vertices[j]);
            assert!((ga[0] - pa[0]).abs() < 1e-12 && (ga[1] - pa[1]).abs() < 1e-12);
            assert!((gb[0] - pb[0]).abs() < 1e-12 && (gb[1] - pb[1]).abs() < 1e-12);
            // outside near e lands inside near j
            let m = oct.edge_midpoint(e);
            let n = Octagon::normal(e);
            let out = [m[0] + 0.01 * n[0], m[1] + 0.01 * n[1]];
            assert!(oct.contains(oct.exit_map[e].apply(out)));
        }
    }

    #[test]
    fn octagon_area() {
        let oct = Octagon::regular();
        let shoelace: f64 = (0..8)
            .map(|k| {
                let (a, b) = (oct.vertices[k], oct.vertices[(k + 1) % 8]);
                a[0] * b[1] - a[1] * b[0]
            })
            .sum::<f64>()
            / 2.0;
        assert!((shoelace - oct.area()).abs() < 1e-12);
    }
}
