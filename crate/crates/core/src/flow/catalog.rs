//! Named Hamiltonians and a grid + Newton critical point finder.

use std::f64::consts::PI;

use super::field::{Bump, Gaussian, ScalarField, Shear, Twist};
use super::surface::{area_density, chart_jacobian, dot3, Chart, Octagon, SurfaceKind, SurfaceModel, SurfacePoint};
use super::system::HamiltonianSystem;
use crate::tolerances::Tolerances;

/// Bump radius of the disc catalog's radial bump.
pub const DISC_BUMP_RADIUS: f64 = 0.9;
/// Amplitude of the disc radial bump; its centre rotates at 12A/R² rad per unit time.
pub const DISC_BUMP_AMPLITUDE: f64 = 0.6;
/// Step fraction for compactly supported disc flows, whose RK4 drift stays
/// orders of magnitude under the energy gate at this step.
pub const FLAT_DISC_DT_FRACTION: f64 = 5e-3;

fn flat_disc(name: &str, h: ScalarField) -> HamiltonianSystem {
    let tolerances = Tolerances { dt_fraction: FLAT_DISC_DT_FRACTION, ..Tolerances::default() };
    HamiltonianSystem::with_tolerances(name, SurfaceModel::disc(), h, true, tolerances)
}

pub fn disc_rotation() -> HamiltonianSystem {
    HamiltonianSystem::new("disc-rotation", SurfaceModel::disc(), ScalarField::Quadratic { scale: 1.0 }, false)
}

pub fn disc_radial_bump() -> HamiltonianSystem {
    flat_disc("disc-bump", ScalarField::Bumps(vec![Bump::planar(0.0, 0.0, DISC_BUMP_RADIUS, DISC_BUMP_AMPLITUDE)]))
}

pub fn disc_double_bump() -> HamiltonianSystem {
    flat_disc(
        "disc-double-bump",
        ScalarField::Bumps(vec![Bump::planar(-0.3, 0.1, 0.6, 0.25), Bump::planar(0.35, -0.1, 0.55, 0.18)]),
    )
}

pub fn disc_offset_bump() -> HamiltonianSystem {
    flat_disc("disc-offset-bump", ScalarField::Bumps(vec![Bump::planar(0.2, 0.15, 0.7, -0.35)]))
}

/// Twists: rigid rotation on an inner disc, tapering to rest. Their pair
/// windings vary little from sample to sample.
pub fn disc_twists() -> Vec<HamiltonianSystem> {
    let twist = |name: &str, center, rate, r_inner, r_outer| flat_disc(name, ScalarField::Twist(Twist { center, rate, r_inner, r_outer }));
    vec![
        twist("disc-twist", [0.0, 0.0], 2.0, 0.5, 0.9),
        twist("disc-twist-narrow", [0.0, 0.0], -1.5, 0.3, 0.8),
        twist("disc-twist-offset", [0.12, -0.08], 1.8, 0.4, 0.82),
    ]
}

/// Strength of the eggbeater shears; weaker shears barely braid triples of
/// points within a few iterations.
pub const EGGBEATER_STRENGTH: f64 = 16.0;

/// The two shears of the eggbeater: F(y)χ(r) and F(x)χ(r) with a
/// non-symmetric cubic F.
pub fn eggbeater_pair() -> (HamiltonianSystem, HamiltonianSystem) {
    let c = EGGBEATER_STRENGTH;
    let shear = |axis| Shear { axis, poly: [0.0, c, 0.5 * c], r_inner: 0.3, r_outer: 0.95 };
    (flat_disc("eggbeater-y", ScalarField::Shear(shear(1))), flat_disc("eggbeater-x", ScalarField::Shear(shear(0))))
}

pub fn sphere_height() -> HamiltonianSystem {
    HamiltonianSystem::new("sphere-height", SurfaceModel::sphere(), ScalarField::Linear { coeffs: [0.0, 0.0, 1.0] }, false)
}

pub fn sphere_perturbed_height() -> HamiltonianSystem {
    HamiltonianSystem::new(
        "sphere-perturbed-height",
        SurfaceModel::sphere(),
        ScalarField::Linear { coeffs: [0.0, 0.0, 1.0] }
            .plus(ScalarField::expr("0.25*x^2").expect("static expression parses")),
        false,
    )
}

pub fn sphere_double_well() -> HamiltonianSystem {
    HamiltonianSystem::new(
        "sphere-double-well",
        SurfaceModel::sphere(),
        ScalarField::Gaussians(vec![
            Gaussian { center: [0.8, 0.0, -0.6], sigma: 0.7, amplitude: -1.0 },
            Gaussian { center: [-0.6, 0.48, -0.64], sigma: 0.6, amplitude: -0.8 },
        ])
        .plus(ScalarField::Linear { coeffs: [0.0, 0.0, 0.3] }),
        false,
    )
}

/// Bump well inside the octagon, clear of every edge.
pub fn polygon_bump() -> HamiltonianSystem {
    HamiltonianSystem::new(
        "polygon-bump",
        SurfaceModel::polygon_genus2(),
        ScalarField::Bumps(vec![Bump::planar(0.1, -0.05, 0.5, 0.02)]),
        true,
    )
}

/// Ridges of overlapping bumps along the closed chords m2→m0 (class a1)
/// and m6→m4 (class a2), plus isolated wells.
pub fn polygon_multiwell() -> HamiltonianSystem {
    let oct = Octagon::regular();
    let mut bumps = Vec::new();
    let radius = 0.17;
    for (from, to, amp) in [(2, 0, 0.012), (6, 4, -0.010)] {
        let (a, b) = (oct.edge_midpoint(from), oct.edge_midpoint(to));
        let n = 16;
        for i in 0..n {
            // [0,1) so the shared endpoint is covered once, by its image
            let t = i as f64 / n as f64;
            let modulation = 1.0 + 0.3 * (2.0 * PI * t).sin();
            bumps.push(Bump::planar(a[0] + t * (b[0] - a[0]), a[1] + t * (b[1] - a[1]), radius, amp * modulation));
        }
    }
    bumps.push(Bump::planar(0.0, 0.0, 0.3, 0.02));
    bumps.push(Bump::planar(-0.45, 0.45, 0.2, -0.008));
    bumps.push(Bump::planar(0.45, -0.45, 0.2, 0.007));
    HamiltonianSystem::new("polygon-multiwell", SurfaceModel::polygon_genus2(), periodized(&oct, bumps), true)
}

/// Points up to this far outside the octagon see the glued function.
pub const GLUE_MARGIN: f64 = 0.12;

/// Adds the images of every bump under the edge pairings, so the planar
/// function agrees across glued edges within [`GLUE_MARGIN`] of them.
pub fn periodized(oct: &Octagon, bumps: Vec<Bump>) -> ScalarField {
    let mut all = bumps.clone();
    for b in &bumps {
        for e in 0..8 {
            let reach = oct.excess(e, [b.center[0], b.center[1]]) + b.radius;
            if reach > -GLUE_MARGIN {
                let c = oct.exit_map[e].apply([b.center[0], b.center[1]]);
                all.push(Bump { center: [c[0], c[1], 0.0], ..*b });
            }
        }
    }
    ScalarField::Bumps(all)
}

/// Catalog of Morse Hamiltonians per surface.
pub fn make_morse_catalog(kind: SurfaceKind) -> Vec<HamiltonianSystem> {
    match kind {
        SurfaceKind::Disc => vec![disc_radial_bump(), disc_double_bump(), disc_offset_bump()],
        SurfaceKind::Sphere => vec![sphere_height(), sphere_perturbed_height(), sphere_double_well()],
        SurfaceKind::PolygonGenus2 => vec![polygon_bump(), polygon_multiwell()],
    }
}

/// Every named system: the Morse catalogs plus the rotation, the twists
/// and the eggbeater shears.
pub fn all_named() -> Vec<HamiltonianSystem> {
    let (e1, e2) = eggbeater_pair();
    let mut out = vec![disc_rotation(), e1, e2];
    out.extend(disc_twists());
    for k in SurfaceKind::all() {
        out.extend(make_morse_catalog(k));
    }
    out
}

pub fn named_system(name: &str) -> Option<HamiltonianSystem> {
    all_named().into_iter().find(|s| s.name == name)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CriticalKind {
    Minimum,
    Maximum,
    Saddle,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CriticalPoint {
    pub point: SurfacePoint,
    pub value: f64,
    /// Hessian determinant with respect to the area form.
    pub hessian_det: f64,
    pub kind: CriticalKind,
}

fn chart_gradient(sys: &HamiltonianSystem, p: &SurfacePoint) -> [f64; 2] {
    let (_, g) = sys.h.eval(p.ambient());
    let (pu, pv) = chart_jacobian(p.chart, p.w);
    [dot3(g, pu), dot3(g, pv)]
}

fn chart_hessian(sys: &HamiltonianSystem, p: &SurfacePoint) -> [[f64; 2]; 2] {
    let h = 1e-6;
    let at = |du: f64, dv: f64| chart_gradient(sys, &SurfacePoint { chart: p.chart, w: [p.w[0] + du, p.w[1] + dv] });
    let (xp, xm, yp, ym) = (at(h, 0.0), at(-h, 0.0), at(0.0, h), at(0.0, -h));
    let hxy = 0.5 * ((xp[1] - xm[1]) + (yp[0] - ym[0])) / (2.0 * h);
    [[(xp[0] - xm[0]) / (2.0 * h), hxy], [hxy, (yp[1] - ym[1]) / (2.0 * h)]]
}

fn in_domain(surface: &SurfaceModel, p: &SurfacePoint) -> bool {
    match surface.kind {
        SurfaceKind::Disc => p.w[0].hypot(p.w[1]) < 1.0,
        SurfaceKind::PolygonGenus2 => surface.octagon().contains(p.w),
        SurfaceKind::Sphere => p.w[0].hypot(p.w[1]) <= 1.2,
    }
}

/// Critical points by Newton refinement from local minima of |∇H| on a
/// grid, excluding the flat collar (where H vanishes to 10⁻⁹ of its range).
pub fn critical_points(sys: &HamiltonianSystem, resolution: usize) -> Vec<CriticalPoint> {
    let m = resolution.max(8);
    let charts: &[Chart] = match sys.kind() {
        SurfaceKind::Sphere => &[Chart::South, Chart::North],
        _ => &[Chart::Plane],
    };
    let (lo, hi) = sys.h_range();
    let flat_tol = 1e-9 * (hi - lo).max(f64::MIN_POSITIVE);
    let extent = if sys.kind() == SurfaceKind::Sphere { 1.1 } else { 1.0 };
    let mut found: Vec<CriticalPoint> = Vec::new();
    for &chart in charts {
        let coord = |i: usize| -extent + 2.0 * extent * i as f64 / m as f64;
        let norms: Vec<Vec<f64>> = (0..=m)
            .map(|i| {
                (0..=m)
                    .map(|j| {
                        let g = chart_gradient(sys, &SurfacePoint { chart, w: [coord(i), coord(j)] });
                        g[0].hypot(g[1])
                    })
                    .collect()
            })
            .collect();
        for i in 1..m {
            for j in 1..m {
                let v = norms[i][j];
                let is_min = (i - 1..=i + 1).all(|a| (j - 1..=j + 1).all(|b| (a, b) == (i, j) || norms[a][b] >= v));
                let start = SurfacePoint { chart, w: [coord(i), coord(j)] };
                if !is_min || !in_domain(&sys.surface, &start) {
                    continue;
                }
                let Some(cp) = newton(sys, start) else { continue };
                if !in_domain(&sys.surface, &cp) {
                    continue;
                }
                let value = sys.value(&cp);
                if sys.boundary_flat && value.abs() <= flat_tol {
                    continue;
                }
                let hess = chart_hessian(sys, &cp);
                let rho = area_density(cp.chart, cp.w);
                let det = (hess[0][0] * hess[1][1] - hess[0][1] * hess[1][0]) / (rho * rho);
                let kind = if det < 0.0 {
                    CriticalKind::Saddle
                } else if hess[0][0] + hess[1][1] < 0.0 {
                    CriticalKind::Maximum
                } else {
                    CriticalKind::Minimum
                };
                let cand = CriticalPoint { point: cp, value, hessian_det: det, kind };
                if !found.iter().any(|f| sys.surface.distance(&f.point, &cand.point) < 1e-5) {
                    found.push(cand);
                }
            }
        }
    }
    found
}

fn newton(sys: &HamiltonianSystem, mut p: SurfacePoint) -> Option<SurfacePoint> {
    for _ in 0..60 {
        let g = chart_gradient(sys, &p);
        if g[0].hypot(g[1]) < 1e-11 {
            return Some(p);
        }
        let h = chart_hessian(sys, &p);
        let det = h[0][0] * h[1][1] - h[0][1] * h[1][0];
        if det.abs() < 1e-300 {
            return None;
        }
        let dx = [(h[1][1] * g[0] - h[0][1] * g[1]) / det, (-h[1][0] * g[0] + h[0][0] * g[1]) / det];
        let step = dx[0].hypot(dx[1]);
        let scale = if step > 0.05 { 0.05 / step } else { 1.0 };
        p.w = [p.w[0] - scale * dx[0], p.w[1] - scale * dx[1]];
        if !p.w[0].is_finite() || p.w[0].hypot(p.w[1]) > 3.0 {
            return None;
        }
    }
    let g = chart_gradient(sys, &p);
    (g[0].hypot(g[1]) < 1e-9).then_some(p)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn catalog_timescales_are_moderate() {
        for sys in all_named() {
            // eggbeater shears are checked at unit strength
            let strength = if sys.name.starts_with("eggbeater") { EGGBEATER_STRENGTH } else { 1.0 };
            let om = sys.omega_max() / strength;
            eprintln!("{}: Ω = {om:.3} range {:?}", sys.name, sys.h_range());
            assert!(om > 0.5 && om < 30.0, "{}: Ω = {om}", sys.name);
        }
    }
}
