use std::f64::consts::PI;
use std::sync::Arc;

use braidflow::flow::catalog::{
    EGGBEATER_STRENGTH,
    all_named, disc_radial_bump, disc_rotation, eggbeater_pair, make_morse_catalog, polygon_multiwell, sphere_height,
    CriticalKind,
};
use braidflow::flow::isotopy::{lp_length_with, lp_norm};
use braidflow::flow::quadrature::QuadratureRule;
use braidflow::flow::{
    critical_points, drift_study, flow_endpoint, integrate_flow, lp_length, make_composite, Isotopy, Octagon, ScalarField,
    SurfaceKind, SurfaceModel, SurfacePoint, EDGE_LETTERS,
};
use braidflow::flow::HamiltonianSystem;
use braidflow::quasimorphisms::surface::relator;
use braidflow::word::is_cyclic_rotation;
use braidflow::word::{inverse, GroupWord};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[test]
fn rotation_returns_after_full_turn() {
    let sys = disc_rotation();
    for r in [0.1, 0.5, 0.95] {
        let tr = integrate_flow(&sys, SurfacePoint::plane(r, 0.0), 2.0 * PI, sys.default_dt()).unwrap();
        let end = tr.end();
        assert!((end.w[0] - r).abs() < 1e-6 && end.w[1].abs() < 1e-6, "{r}: {:?}", end.w);
    }
}

#[test]
fn sphere_equator_stays_on_latitude() {
    let sys = sphere_height();
    let tr = integrate_flow(&sys, SurfacePoint::sphere([1.0, 0.0, 0.0]), 2.0 * PI, sys.default_dt()).unwrap();
    for p in &tr.points {
        assert!(p.ambient()[2].abs() < 1e-6);
    }
    let end = tr.end().ambient();
    assert!((end[0] - 1.0).abs() < 1e-6 && end[1].abs() < 1e-6);
    // crosses the chart seam on the way
    let tr = integrate_flow(&sys, SurfacePoint::sphere([0.6, 0.0, -0.8]), 2.0 * PI, sys.default_dt()).unwrap();
    assert!(tr.points.iter().all(|p| (p.ambient()[2] + 0.8).abs() < 1e-6));
}

#[test]
fn lp_length_closed_forms() {
    let rot = Arc::new(disc_rotation());
    let iso = Isotopy::autonomous(rot.clone(), 1.0);
    assert!((lp_length(&iso, 2.0, 16).unwrap() - (PI / 2.0).sqrt()).abs() < 1e-4);
    assert!((lp_length(&iso, 4.0, 16).unwrap() - (2.0 * PI / 6.0).powf(0.25)).abs() < 1e-4);
    for p in [1.0, 2.0, 3.0, 4.0] {
        let want = (2.0 * PI / (p + 2.0)).powf(1.0 / p);
        assert!((lp_length(&iso, p, 16).unwrap() - want).abs() < 1e-4, "p = {p}");
    }
    let zero = Arc::new(HamiltonianSystem::new("zero", SurfaceModel::disc(), ScalarField::Zero, true));
    assert_eq!(lp_length(&Isotopy::autonomous(zero, 1.0), 3.0, 8).unwrap(), 0.0);
    assert!(lp_length(&iso, 0.5, 8).is_err());
}

#[test]
fn lp_length_reversal_subadditivity_monotonicity() {
    let (a, b) = eggbeater_pair();
    let (a, b) = (Arc::new(a), Arc::new(b));
    let f = make_composite(vec![(a.clone(), 1.0), (b.clone(), 0.7)]).unwrap();
    let rule = QuadratureRule::for_surface(&SurfaceModel::disc(), 24);
    for p in [1.0, 2.0, 3.0] {
        let l = lp_length_with(&f, p, &rule).unwrap();
        let r = lp_length_with(&f.reversed(), p, &rule).unwrap();
        assert!((l - r).abs() < 1e-12);
        let la = lp_length_with(&Isotopy::autonomous(a.clone(), 1.0), p, &rule).unwrap();
        let lb = lp_length_with(&Isotopy::autonomous(b.clone(), 0.7), p, &rule).unwrap();
        assert!(l <= la + lb + 1e-12);
    }
    let normalized = rule.clone().normalized();
    for sys in make_morse_catalog(SurfaceKind::Disc).iter().chain([&*a]) {
        let norms: Vec<f64> = [1.0, 1.5, 2.0, 3.0, 4.0, 6.0].iter().map(|&p| lp_norm(sys, p, &normalized).unwrap()).collect();
        assert!(norms.windows(2).all(|w| w[0] <= w[1] * (1.0 + 1e-12)), "{}: {norms:?}", sys.name);
    }
}

#[test]
fn composite_followed_by_reverse_is_identity() {
    let (a, b) = eggbeater_pair();
    let f = make_composite(vec![(Arc::new(a), 1.0), (Arc::new(b), 1.0)]).unwrap();
    let g = f.then(&f.reversed()).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for _ in 0..10 {
        let x = SurfaceModel::disc().sample_uniform(|| rng.random());
        let (y, _) = g.apply(x).unwrap();
        assert!((y.w[0] - x.w[0]).abs() < 1e-6 && (y.w[1] - x.w[1]).abs() < 1e-6);
    }
    let single = Isotopy::autonomous(Arc::new(disc_radial_bump()), 1.0);
    let direct = flow_endpoint(&single.segments[0].system, SurfacePoint::plane(0.3, 0.1), 1.0, single.segment_dt(&single.segments[0]))
        .unwrap()
        .point;
    assert_eq!(single.apply(SurfacePoint::plane(0.3, 0.1)).unwrap().0, direct);
    let mismatch = make_composite(vec![(Arc::new(sphere_height()), 1.0), (Arc::new(disc_rotation()), 1.0)]);
    assert!(mismatch.is_err());
}

#[test]
fn eggbeater_displacement_is_stable_under_refinement() {
    let (a, b) = eggbeater_pair();
    let f = make_composite(vec![(Arc::new(a), 1.0), (Arc::new(b), 1.0)]).unwrap();
    let x = SurfacePoint::plane(0.1, 0.2);
    let (y, _) = f.apply(x).unwrap();
    let dt = f.segment_dt(&f.segments[0]);
    let (y2, _) = f.clone().with_dt(dt / 2.0).apply(x).unwrap();
    let disp = (y.w[0] - x.w[0]).hypot(y.w[1] - x.w[1]);
    assert!(disp > 0.1, "displacement {disp}");
    assert!((y.w[0] - y2.w[0]).abs() < 1e-8 && (y.w[1] - y2.w[1]).abs() < 1e-8);
}

/// Jacobian determinant of the time-one map by fourth-order central
/// differences.
fn jacobian_det(iso: &Isotopy, x: SurfacePoint, h: f64) -> f64 {
    let img = |dx: f64, dy: f64| iso.apply(SurfacePoint { chart: x.chart, w: [x.w[0] + dx, x.w[1] + dy] }).unwrap().0.w;
    let diff = |dir: [f64; 2]| {
        let at = |s: f64| img(s * h * dir[0], s * h * dir[1]);
        let (p1, m1, p2, m2) = (at(1.0), at(-1.0), at(2.0), at(-2.0));
        [0, 1].map(|i| (8.0 * (p1[i] - m1[i]) - (p2[i] - m2[i])) / (12.0 * h))
    };
    let (dx, dy) = (diff([1.0, 0.0]), diff([0.0, 1.0]));
    dx[0] * dy[1] - dy[0] * dx[1]
}

#[test]
fn time_one_maps_preserve_area() {
    let (a, b) = eggbeater_pair();
    // Unit-strength shears keep the difference stencil inside its regime of validity.
    let t = 1.0 / EGGBEATER_STRENGTH;
    let egg = make_composite(vec![(Arc::new(a), t), (Arc::new(b), t)]).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut worst = 0.0f64;
    for iso in [egg, Isotopy::autonomous(Arc::new(disc_radial_bump()), 1.0)] {
        for _ in 0..20 {
            let r = 0.8 * rng.random::<f64>().sqrt();
            let th = 2.0 * PI * rng.random::<f64>();
            let det = jacobian_det(&iso, SurfacePoint::plane(r * th.cos(), r * th.sin()), 1e-4);
            worst = worst.max((det - 1.0).abs());
        }
    }
    assert!(worst <= 1e-5, "area change {worst}");
}

#[test]
fn energy_gate_and_fourth_order_drift() {
    for sys in all_named() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let points: Vec<SurfacePoint> = std::iter::repeat_with(|| sys.surface.sample_uniform(|| rng.random()))
            .filter(|p| sys.field_norm(p) > 1e-3)
            .take(8)
            .collect();
        let duration = 10.0 * sys.timescale();
        let tr = integrate_flow(&sys, points[0], duration, sys.default_dt());
        assert!(tr.is_ok(), "{}: {tr:?}", sys.name);
        let study = drift_study(&sys, &points, duration).unwrap();
        assert!(study.passes(), "{}: {study:?} ratio {}", sys.name, study.ratio());
    }
}

#[test]
fn catalog_critical_points() {
    let sph = critical_points(&sphere_height(), 60);
    assert_eq!(sph.len(), 2, "{sph:?}");
    let bump = critical_points(&disc_radial_bump(), 60);
    assert_eq!(bump.len(), 1, "{bump:?}");
    assert_eq!(bump[0].kind, CriticalKind::Maximum);
    for kind in SurfaceKind::all() {
        for sys in make_morse_catalog(kind) {
            let cps = critical_points(&sys, 80);
            assert!(!cps.is_empty(), "{}", sys.name);
            for c in &cps {
                assert!(c.hessian_det.abs() > 1e-6, "{}: {c:?}", sys.name);
            }
        }
    }
    let multi = critical_points(&polygon_multiwell(), 120);
    assert!(multi.len() >= 6, "{multi:?}");
}

#[test]
fn flat_collars_vanish() {
    for sys in all_named().into_iter().filter(|s| s.boundary_flat) {
        let probes: Vec<SurfacePoint> = match sys.kind() {
            SurfaceKind::Disc => (0..64).map(|k| {
                let th = 2.0 * PI * k as f64 / 64.0;
                SurfacePoint::plane(0.97 * th.cos(), 0.97 * th.sin())
            })
            .collect(),
            _ => {
                let oct = Octagon::regular();
                oct.vertices.iter().map(|v| SurfacePoint::plane(0.96 * v[0], 0.96 * v[1])).collect()
            }
        };
        for p in probes {
            let (v, g) = sys.h.eval(p.ambient());
            assert!(v == 0.0 && g == [0.0; 3], "{} at {:?}", sys.name, p.w);
        }
    }
}

#[test]
fn polygon_hamiltonian_agrees_across_gluing() {
    let sys = polygon_multiwell();
    let oct = sys.surface.octagon().clone();
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    for _ in 0..2000 {
        let e = rng.random_range(0..8);
        let (a, b) = (oct.vertices[e], oct.vertices[(e + 1) % 8]);
        let t = 0.15 + 0.7 * rng.random::<f64>();
        let n = Octagon::normal(e);
        let out = 0.1 * rng.random::<f64>();
        let p = [a[0] + t * (b[0] - a[0]) + out * n[0], a[1] + t * (b[1] - a[1]) + out * n[1]];
        let q = oct.exit_map[e].apply(p);
        let (hp, _) = sys.h.eval([p[0], p[1], 0.0]);
        let (hq, _) = sys.h.eval([q[0], q[1], 0.0]);
        assert!((hp - hq).abs() < 1e-14, "edge {e}: {hp} vs {hq}");
    }
}

#[test]
fn loop_around_cone_point_spells_the_relator() {
    let oct = Octagon::regular();
    let mut centre = oct.vertices[0];
    let mut p = [centre[0] - 0.05, centre[1] + 0.0];
    let mut letters = Vec::new();
    let steps = 60_000;
    let dth = 6.0 * PI / steps as f64;
    for _ in 0..steps {
        let d = [p[0] - centre[0], p[1] - centre[1]];
        let (s, c) = dth.sin_cos();
        p = [centre[0] + c * d[0] - s * d[1], centre[1] + s * d[0] + c * d[1]];
        let (q, edge) = oct.wrap(p).unwrap();
        if let Some(e) = edge {
            letters.push(EDGE_LETTERS[e]);
            centre = oct.exit_map[e].apply(centre);
        }
        p = q;
    }
    assert_eq!(letters.len(), 8, "{letters:?}");
    let w = GroupWord::from_signed(4, &letters).unwrap();
    let rel = relator(2);
    let inv = inverse(&GroupWord::new(4, rel.clone()).unwrap());
    assert!(
        is_cyclic_rotation(w.letters(), &rel) || is_cyclic_rotation(w.letters(), inv.letters()),
        "{letters:?}"
    );
}
