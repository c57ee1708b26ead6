use std::f64::consts::PI;
use std::sync::Arc;

use braidflow::braid::{braid_permutation, linking_matrix};
use braidflow::flow::catalog::{
    disc_double_bump, disc_radial_bump, disc_rotation, polygon_bump, polygon_multiwell, sphere_height, sphere_perturbed_height,
};
use braidflow::flow::{integrate_flow, make_composite, Isotopy, Octagon, SurfaceModel, SurfacePoint, EDGE_LETTERS};
use braidflow::quasimorphisms::surface::{dehn_reduce_with, Symmetrization};
use braidflow::tracing::{crossings_csv, trace_braid, trace_loop_class, ConfigurationSample, TraceError};
use braidflow::word::{compose, inverse};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const NORTH: [f64; 3] = [0.0, 0.0, 1.0];

fn rotation_iso(duration: f64) -> Isotopy {
    Isotopy::autonomous(Arc::new(disc_rotation()), duration)
}

fn self_based(points: Vec<SurfacePoint>) -> ConfigurationSample {
    ConfigurationSample::based_at_self(&SurfaceModel::disc(), points, 1e-3).unwrap()
}

#[test]
fn rotation_pair_winds_once_per_turn() {
    let x = self_based(vec![SurfacePoint::plane(0.5, 0.0), SurfacePoint::plane(-0.5, 0.0)]);
    let one = trace_braid(&rotation_iso(2.0 * PI), &x, NORTH).unwrap();
    assert_eq!(one.braid.word().to_signed(), vec![1, 1]);
    assert_eq!(linking_matrix(&one.braid).unwrap().get(1, 2), 1);
    let two = trace_braid(&rotation_iso(4.0 * PI), &x, NORTH).unwrap();
    assert_eq!(two.braid.word().to_signed(), vec![1, 1, 1, 1]);
    let csv = crossings_csv(&two.events);
    assert_eq!(csv.lines().count(), 5);
    let back = trace_braid(&rotation_iso(-2.0 * PI), &x, NORTH).unwrap();
    assert_eq!(back.braid.word().to_signed(), vec![-1, -1]);
}

#[test]
fn identity_isotopy_gives_the_empty_braid() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let id = Isotopy::identity(Arc::new(disc_radial_bump()));
    for n in 2..6 {
        let pts: Vec<SurfacePoint> = (0..n).map(|_| SurfaceModel::disc().sample_uniform(|| rng.random())).collect();
        let base: Vec<SurfacePoint> = (0..n).map(|_| SurfaceModel::disc().sample_uniform(|| rng.random())).collect();
        let x = ConfigurationSample::new(&SurfaceModel::disc(), pts.clone(), base, 1e-3).unwrap();
        assert!(trace_braid(&id, &x, NORTH).unwrap().braid.is_empty());
        assert!(trace_braid(&id, &self_based(pts), NORTH).unwrap().braid.is_empty());
    }
}

#[test]
fn rotation_linking_matrix_matches_turn_count() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    for turns in 1..=3 {
        let pts: Vec<SurfacePoint> = (0..4).map(|_| SurfaceModel::disc().sample_uniform(|| rng.random())).collect();
        let b = trace_braid(&rotation_iso(2.0 * PI * turns as f64), &self_based(pts), NORTH).unwrap();
        assert!(braid_permutation(&b.braid).is_identity());
        let lk = linking_matrix(&b.braid).unwrap();
        for i in 1..=4 {
            for j in (i + 1)..=4 {
                assert_eq!(lk.get(i, j), turns);
            }
        }
    }
}

#[test]
fn words_are_stable_under_halving_dt() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let systems = [disc_radial_bump(), disc_double_bump(), sphere_height(), sphere_perturbed_height()];
    for sys in systems {
        let surface = sys.surface.clone();
        let iso = Isotopy::autonomous(Arc::new(sys), 4.0);
        let dt = iso.segment_dt(&iso.segments[0]);
        let mut checked = 0;
        while checked < 5 {
            let pts: Vec<SurfacePoint> = (0..3).map(|_| surface.sample_uniform(|| rng.random())).collect();
            let base = vec![SurfacePoint::sphere([0.3, 0.0, -0.95]), SurfacePoint::sphere([-0.2, 0.25, -0.95]), SurfacePoint::sphere([0.0, -0.3, -0.95])];
            let base = if surface.kind == braidflow::flow::SurfaceKind::Disc {
                vec![SurfacePoint::plane(0.3, 0.0), SurfacePoint::plane(-0.2, 0.25), SurfacePoint::plane(0.0, -0.3)]
            } else {
                base
            };
            let Ok(x) = ConfigurationSample::new(&surface, pts, base, 1e-2) else { continue };
            let (Ok(a), Ok(b)) = (trace_braid(&iso, &x, NORTH), trace_braid(&iso.clone().with_dt(dt / 2.0), &x, NORTH)) else {
                continue;
            };
            assert_eq!(a.braid, b.braid);
            assert!(braid_permutation(&a.braid).is_identity());
            checked += 1;
        }
    }
}

fn ridge_point() -> SurfacePoint {
    // on the a1 ridge of the multi-well, a quarter of the way from m2 to m0
    let oct = braidflow::flow::Octagon::regular();
    let (a, b) = (oct.edge_midpoint(2), oct.edge_midpoint(0));
    SurfacePoint::plane(a[0] + 0.25 * (b[0] - a[0]) + 0.03, a[1] + 0.25 * (b[1] - a[1]) + 0.03)
}

#[test]
fn loop_classes_from_edge_crossings() {
    let sym = Symmetrization::new(2);
    let sys = Arc::new(polygon_multiwell());
    let z = SurfacePoint::plane(0.0, 0.0);
    let x = ridge_point();
    let tr = integrate_flow(&sys, x, 40.0, sys.default_dt()).unwrap();
    let first = tr.crossings[0];
    let t_inside = 0.5 * first.time;
    let inside = Isotopy::autonomous(sys.clone(), t_inside);
    assert!(trace_loop_class(&inside, x, z, &sym).unwrap().word.word().is_empty());
    let t_once = first.time + 0.25 * (tr.crossings.get(1).map_or(first.time + 1.0, |c| c.time) - first.time);
    let once = trace_loop_class(&Isotopy::autonomous(sys.clone(), t_once), x, z, &sym).unwrap();
    assert_eq!(once.edges, vec![first.edge]);
    assert_eq!(once.word.word().to_signed(), vec![EDGE_LETTERS[first.edge]]);
    assert!(first.edge == 0 || first.edge == 2, "ridge runs through the a1 edges, got {}", first.edge);
    let back = make_composite(vec![(sys.clone(), t_once), (sys.clone(), -t_once)]).unwrap();
    let traced = trace_loop_class(&back, x, z, &sym).unwrap();
    assert_eq!(traced.edges, vec![first.edge, Octagon::partner(first.edge)]);
    assert!(traced.word.word().is_empty());
    assert!((traced.end.w[0] - x.w[0]).abs() < 1e-6 && (traced.end.w[1] - x.w[1]).abs() < 1e-6);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]
    #[test]
    fn loop_classes_are_cocycles(seed in any::<u64>(), t1 in 1.0f64..30.0, t2 in 1.0f64..30.0) {
        let sym = Symmetrization::new(2);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let multi = Arc::new(polygon_multiwell());
        let bump = Arc::new(polygon_bump());
        let x = multi.surface.sample_uniform(|| rng.random());
        let z = SurfacePoint::plane(0.05, -0.02);
        let f = make_composite(vec![(multi.clone(), t1), (bump.clone(), 2.0)]).unwrap();
        let g = make_composite(vec![(bump, -1.0), (multi, t2)]).unwrap();
        let both = f.then(&g).unwrap();
        let traced = (|| Ok::<_, TraceError>((trace_loop_class(&f, x, z, &sym)?, trace_loop_class(&both, x, z, &sym)?)))();
        let (wf, wfg) = match traced {
            Ok(v) => v,
            Err(e) => { prop_assert!(e.is_rejection(), "{e}"); return Ok(()); }
        };
        let wg = trace_loop_class(&g, wf.end, z, &sym).unwrap();
        let product = compose(wf.word.word(), wg.word.word()).unwrap();
        let diff = compose(&product, &inverse(wfg.word.word())).unwrap();
        prop_assert!(dehn_reduce_with(&sym, &diff).is_empty());
    }
}
