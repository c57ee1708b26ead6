//! Group words from trajectories: braids from n-point dances on the disc and
//! sphere, surface-group words from octagon edge crossings.
//!
//! Braid protocol: strands are projected to a plane (the disc itself, or the
//! sphere by stereographic projection from a pole), ordered by first
//! coordinate, and every exchange of neighbours emits σ_p with p the left
//! position. The sign is +1 when the strand that was on the left has the
//! smaller second coordinate at the crossing. A counterclockwise half turn
//! of two points thus reads σ₁. The dance is: straight connectors from the
//! basepoints to the sample, the isotopy, straight connectors back to the
//! same basepoints (so the braid is pure).

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::braid::{BraidError, BraidWord, SphericalBraidWord};
use crate::flow::integrate::rk4_step;
use crate::flow::surface::{cross, dot3, norm3, SurfaceKind, SurfaceModel, SurfacePoint, EDGE_LETTERS};
use crate::flow::{FlowError, HamiltonianSystem, Isotopy};
use crate::quasimorphisms::surface::{dehn_reduce_with, Symmetrization, SurfaceGroupWord};
use crate::quasimorphisms::QmError;
use crate::tolerances::Tolerances;
use crate::word::{cyclically_reduce, free_reduce, GroupWord, Letter, WordError};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TraceError {
    #[error(transparent)]
    Flow(#[from] FlowError),
    #[error("strands {i} and {j} came within {distance:e} at t = {time}")]
    Collision { time: f64, i: usize, j: usize, distance: f64 },
    #[error("two crossings within the event tolerance at t = {time}")]
    DegenerateCrossing { time: f64 },
    #[error("strand {strand} came within {distance:e} of the projection pole")]
    PoleApproach { strand: usize, distance: f64 },
    #[error("sample points closer than the separation tolerance")]
    Separation,
    #[error("{0}")]
    Surface(String),
    #[error(transparent)]
    Braid(#[from] BraidError),
    #[error(transparent)]
    Qm(#[from] QmError),
    #[error(transparent)]
    Word(#[from] WordError),
}

impl TraceError {
    /// Errors that call for resampling rather than aborting a run.
    pub fn is_rejection(&self) -> bool {
        matches!(
            self,
            TraceError::Collision { .. }
                | TraceError::DegenerateCrossing { .. }
                | TraceError::PoleApproach { .. }
                | TraceError::Separation
                | TraceError::Flow(FlowError::CornerApproach { .. })
        )
    }

    pub fn reason(&self) -> &'static str {
        match self {
            TraceError::Collision { .. } => "collision",
            TraceError::DegenerateCrossing { .. } => "degenerate-crossing",
            TraceError::PoleApproach { .. } => "pole-approach",
            TraceError::Separation => "separation",
            TraceError::Flow(FlowError::CornerApproach { .. }) => "corner-approach",
            TraceError::Flow(FlowError::EnergyDrift { .. }) => "energy-drift",
            _ => "other",
        }
    }
}

/// n sample points and their basepoints.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConfigurationSample {
    pub points: Vec<SurfacePoint>,
    pub basepoints: Vec<SurfacePoint>,
}

impl ConfigurationSample {
    pub fn new(surface: &SurfaceModel, points: Vec<SurfacePoint>, basepoints: Vec<SurfacePoint>, separation_tol: f64) -> Result<Self, TraceError> {
        if points.len() != basepoints.len() || points.len() < 2 {
            return Err(TraceError::Surface(format!("need n ≥ 2 points and as many basepoints, got {} and {}", points.len(), basepoints.len())));
        }
        for set in [&points, &basepoints] {
            for i in 0..set.len() {
                for j in 0..i {
                    if surface.distance(&set[i], &set[j]) < separation_tol {
                        return Err(TraceError::Separation);
                    }
                }
            }
        }
        Ok(ConfigurationSample { points, basepoints })
    }

    /// Basepoints equal to the sample points.
    pub fn based_at_self(surface: &SurfaceModel, points: Vec<SurfacePoint>, separation_tol: f64) -> Result<Self, TraceError> {
        let base = points.clone();
        ConfigurationSample::new(surface, points, base, separation_tol)
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

/// Plane coordinates used for braid projection.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Projector {
    /// Rows of the rotation taking the pole to (0, 0, 1); identity on the disc.
    rotation: Option<[[f64; 3]; 3]>,
}

impl Projector {
    pub fn plane() -> Self {
        Projector { rotation: None }
    }

    /// Stereographic projection from `pole`.
    pub fn from_pole(pole: [f64; 3]) -> Self {
        let n = norm3(pole);
        let p = pole.map(|c| c / n);
        let north = [0.0, 0.0, 1.0];
        let axis = cross(p, north);
        let s = norm3(axis);
        let c = dot3(p, north);
        let rot = if s < 1e-15 {
            if c > 0.0 {
                [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]]
            } else {
                [[1.0, 0.0, 0.0], [0.0, -1.0, 0.0], [0.0, 0.0, -1.0]]
            }
        } else {
            let k = axis.map(|a| a / s);
            // Rodrigues: R = I + sinθ K + (1 − cosθ) K²
            let km = [[0.0, -k[2], k[1]], [k[2], 0.0, -k[0]], [-k[1], k[0], 0.0]];
            let mut r = [[0.0; 3]; 3];
            for i in 0..3 {
                for j in 0..3 {
                    let k2: f64 = (0..3).map(|l| km[i][l] * km[l][j]).sum();
                    r[i][j] = if i == j { 1.0 } else { 0.0 } + s * km[i][j] + (1.0 - c) * k2;
                }
            }
            r
        };
        Projector { rotation: Some(rot) }
    }

    pub fn for_surface(surface: &SurfaceModel, pole: [f64; 3]) -> Self {
        match surface.kind {
            SurfaceKind::Sphere => Projector::from_pole(pole),
            _ => Projector::plane(),
        }
    }

    pub fn project(&self, p: &SurfacePoint) -> [f64; 2] {
        match self.rotation {
            None => p.w,
            Some(r) => {
                let a = p.ambient();
                let q = [0, 1, 2].map(|i| r[i][0] * a[0] + r[i][1] * a[1] + r[i][2] * a[2]);
                [q[0] / (1.0 - q[2]), q[1] / (1.0 - q[2])]
            }
        }
    }

    /// Inverse of [`Projector::project`].
    pub fn lift(&self, w: [f64; 2]) -> SurfacePoint {
        match self.rotation {
            None => SurfacePoint::plane(w[0], w[1]),
            Some(r) => {
                let s = w[0] * w[0] + w[1] * w[1];
                let q = [2.0 * w[0] / (1.0 + s), 2.0 * w[1] / (1.0 + s), (s - 1.0) / (1.0 + s)];
                // transpose undoes the rotation
                SurfacePoint::sphere([0, 1, 2].map(|i| r[0][i] * q[0] + r[1][i] * q[1] + r[2][i] * q[2]))
            }
        }
    }

    /// Chordal distance of `p` from the projection pole (∞ on the plane).
    pub fn pole_distance(&self, p: &SurfacePoint) -> f64 {
        match self.rotation {
            None => f64::INFINITY,
            Some(r) => {
                let a = p.ambient();
                let z = r[2][0] * a[0] + r[2][1] * a[1] + r[2][2] * a[2];
                (2.0 * (1.0 - z)).max(0.0).sqrt()
            }
        }
    }
}

/// Projection pole for a sphere system: the north pole when it is a
/// critical point of H, else the highest critical point found.
pub fn default_pole(sys: &HamiltonianSystem) -> [f64; 3] {
    let north = SurfacePoint::sphere([0.0, 0.0, 1.0]);
    if sys.kind() != SurfaceKind::Sphere || sys.field_norm(&north) < 1e-12 {
        return [0.0, 0.0, 1.0];
    }
    crate::flow::critical_points(sys, 60)
        .into_iter()
        .max_by(|a, b| a.value.total_cmp(&b.value))
        .map(|c| c.point.ambient())
        .unwrap_or([0.0, 0.0, 1.0])
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CrossingEvent {
    pub time: f64,
    /// Strand indices, left one first (before the exchange).
    pub strands: (usize, usize),
    /// Braid generator index (1-based position of the left strand).
    pub generator: u32,
    pub sign: i32,
}

#[derive(Clone, Debug, PartialEq)]
pub struct TracedBraid {
    pub braid: BraidWord,
    pub spherical: bool,
    pub events: Vec<CrossingEvent>,
}

impl TracedBraid {
    pub fn spherical_word(&self) -> SphericalBraidWord {
        SphericalBraidWord::new(self.braid.clone())
    }
}

struct Dance<'a> {
    proj: Projector,
    tol: &'a Tolerances,
    order: Vec<usize>,
    letters: Vec<Letter>,
    events: Vec<CrossingEvent>,
    pos: Vec<[f64; 2]>,
    time: f64,
}

impl Dance<'_> {
    /// Moves every strand linearly (in projected coordinates) to `next`
    /// over a time span `span`, emitting crossings in time order.
    fn advance(&mut self, next: &[[f64; 2]], span: f64) -> Result<(), TraceError> {
        let n = self.pos.len();
        let mut found: Vec<(f64, usize, usize)> = Vec::new();
        for i in 0..n {
            for j in (i + 1)..n {
                let d0 = self.pos[i][0] - self.pos[j][0];
                let d1 = next[i][0] - next[j][0];
                if (d0 < 0.0) != (d1 < 0.0) {
                    found.push((d0 / (d0 - d1), i, j));
                }
                // closest approach of the linear relative motion
                let a = [self.pos[i][0] - self.pos[j][0], self.pos[i][1] - self.pos[j][1]];
                let b = [next[i][0] - next[j][0] - a[0], next[i][1] - next[j][1] - a[1]];
                let bb = b[0] * b[0] + b[1] * b[1];
                let s = if bb > 0.0 { (-(a[0] * b[0] + a[1] * b[1]) / bb).clamp(0.0, 1.0) } else { 0.0 };
                let dist = (a[0] + s * b[0]).hypot(a[1] + s * b[1]);
                if dist < self.tol.collision_tol {
                    return Err(TraceError::Collision { time: self.time + s * span, i, j, distance: dist });
                }
            }
        }
        found.sort_by(|a, b| a.0.total_cmp(&b.0));
        let event_tol = self.tol.event_fraction * span;
        for w in found.windows(2) {
            if (w[1].0 - w[0].0) * span < event_tol {
                return Err(TraceError::DegenerateCrossing { time: self.time + w[0].0 * span });
            }
        }
        for (tau, i, j) in found {
            let pi = self.order.iter().position(|&s| s == i).expect("strand present");
            let pj = self.order.iter().position(|&s| s == j).expect("strand present");
            let (left, right, p) = if pi < pj { (i, j, pi) } else { (j, i, pj) };
            if pi.abs_diff(pj) != 1 {
                return Err(TraceError::DegenerateCrossing { time: self.time + tau * span });
            }
            let y = |s: usize| self.pos[s][1] + tau * (next[s][1] - self.pos[s][1]);
            let sign = if y(left) < y(right) { 1 } else { -1 };
            let generator = p as u32 + 1;
            self.letters.push(Letter::new(generator, sign)?);
            self.events.push(CrossingEvent { time: self.time + tau * span, strands: (left, right), generator, sign });
            self.order.swap(p, p + 1);
        }
        self.pos.copy_from_slice(next);
        self.time += span;
        Ok(())
    }
}

/// Traces the braid of the isotopy applied to the sample.
pub fn trace_braid(iso: &Isotopy, x: &ConfigurationSample, pole: [f64; 3]) -> Result<TracedBraid, TraceError> {
    let last = iso.segments.len() - 1;
    let mut out = trace_snapshots(iso, x, pole, |s| s == last)?;
    Ok(out.pop().expect("one snapshot at the last segment"))
}

/// Braids of `iso`, `iso²`, …, `iso^k_max` from a single pass: after each
/// copy the dance is closed by the return connector.
pub fn trace_braid_powers(iso: &Isotopy, x: &ConfigurationSample, pole: [f64; 3], k_max: usize) -> Result<Vec<TracedBraid>, TraceError> {
    if k_max == 0 {
        return Ok(Vec::new());
    }
    let per = iso.segments.len();
    trace_snapshots(&iso.power(k_max), x, pole, |s| (s + 1) % per == 0)
}

fn trace_snapshots(iso: &Isotopy, x: &ConfigurationSample, pole: [f64; 3], snapshot_after: impl Fn(usize) -> bool) -> Result<Vec<TracedBraid>, TraceError> {
    let surface = iso.surface().clone();
    let spherical = match surface.kind {
        SurfaceKind::Disc => false,
        SurfaceKind::Sphere => true,
        SurfaceKind::PolygonGenus2 => return Err(TraceError::Surface("braids are traced on the disc or the sphere".into())),
    };
    let tol = iso.segments[0].system.tolerances;
    let proj = Projector::for_surface(&surface, pole);
    let n = x.len();
    let check_pole = |strand: usize, p: &SurfacePoint| -> Result<(), TraceError> {
        let d = proj.pole_distance(p);
        if d < tol.pole_tol {
            return Err(TraceError::PoleApproach { strand, distance: d });
        }
        Ok(())
    };
    for (i, p) in x.points.iter().chain(&x.basepoints).enumerate() {
        check_pole(i % n, p)?;
    }
    let base: Vec<[f64; 2]> = x.basepoints.iter().map(|p| proj.project(p)).collect();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| base[a][0].total_cmp(&base[b][0]));
    // connectors take unit time: [−1, 0] in, [T, T + 1] out
    let mut dance = Dance { proj, tol: &tol, order, letters: Vec::new(), events: Vec::new(), pos: base.clone(), time: -1.0 };

    let start: Vec<[f64; 2]> = x.points.iter().map(|p| proj.project(p)).collect();
    dance.advance(&start, 1.0)?;

    let mut snapshots = Vec::new();
    let mut pts = x.points.clone();
    for (index, (seg, steps, h)) in iso.plan()?.into_iter().enumerate() {
        let sys = &seg.system;
        let tol_e = sys.energy_tol();
        let h0: Vec<f64> = pts.iter().map(|p| sys.value(p)).collect();
        let mut next = vec![[0.0; 2]; n];
        for _ in 0..steps {
            for i in 0..n {
                let step = rk4_step(sys, &pts[i], h)?;
                let drift = (step.energy - h0[i]).abs();
                if drift > tol_e {
                    return Err(FlowError::EnergyDrift { drift, tol: tol_e }.into());
                }
                pts[i] = step.point;
                if spherical {
                    check_pole(i, &pts[i])?;
                }
                next[i] = dance.proj.project(&pts[i]);
            }
            dance.advance(&next, h.abs())?;
        }
        for i in 0..n {
            let drift = (sys.value(&pts[i]) - h0[i]).abs();
            if drift > tol_e {
                return Err(FlowError::EnergyDrift { drift, tol: tol_e }.into());
            }
        }
        if snapshot_after(index) {
            let mut closing = Dance {
                proj,
                tol: &tol,
                order: dance.order.clone(),
                letters: dance.letters.clone(),
                events: dance.events.clone(),
                pos: dance.pos.clone(),
                time: dance.time,
            };
            closing.advance(&base, 1.0)?;
            let word = free_reduce(&GroupWord::new(n - 1, closing.letters)?);
            snapshots.push(TracedBraid { braid: BraidWord::new(n, word)?, spherical, events: closing.events });
        }
    }
    Ok(snapshots)
}

/// CSV dump of crossing events.
pub fn crossings_csv(events: &[CrossingEvent]) -> String {
    let mut out = String::from("time,left,right,generator,sign\n");
    for e in events {
        let _ = writeln!(out, "{},{},{},{},{}", e.time, e.strands.0, e.strands.1, e.generator, e.sign);
    }
    out
}

#[derive(Clone, Debug, PartialEq)]
pub struct TracedLoop {
    pub word: SurfaceGroupWord,
    pub end: SurfacePoint,
    pub edges: Vec<usize>,
}

/// Surface-group word of the loop basepoint → x → iso(x) → basepoint; the
/// connectors are straight segments inside the octagon.
pub fn trace_loop_class(iso: &Isotopy, x: SurfacePoint, basepoint: SurfacePoint, sym: &Symmetrization) -> Result<TracedLoop, TraceError> {
    let surface = iso.surface();
    if surface.kind != SurfaceKind::PolygonGenus2 {
        return Err(TraceError::Surface("loop classes are traced on the octagon".into()));
    }
    let oct = surface.octagon();
    if !oct.contains(basepoint.w) || !oct.contains(x.w) {
        return Err(FlowError::OutsideDomain { point: x.w }.into());
    }
    let (end, crossings) = iso.apply(x)?;
    let edges: Vec<usize> = crossings.iter().map(|c| c.edge).collect();
    let letters: Vec<i64> = edges.iter().map(|&e| EDGE_LETTERS[e]).collect();
    let raw = GroupWord::from_signed(2 * sym.genus(), &letters)?;
    let word = SurfaceGroupWord::new(sym.genus(), dehn_reduce_with(sym, &raw))?;
    Ok(TracedLoop { word, end, edges })
}

/// Loop classes of `iso`, `iso²`, …, `iso^k_max` from one pass.
pub fn trace_loop_powers(iso: &Isotopy, x: SurfacePoint, basepoint: SurfacePoint, sym: &Symmetrization, k_max: usize) -> Result<Vec<TracedLoop>, TraceError> {
    let surface = iso.surface();
    if surface.kind != SurfaceKind::PolygonGenus2 {
        return Err(TraceError::Surface("loop classes are traced on the octagon".into()));
    }
    let oct = surface.octagon();
    if !oct.contains(basepoint.w) || !oct.contains(x.w) {
        return Err(FlowError::OutsideDomain { point: x.w }.into());
    }
    let mut out = Vec::with_capacity(k_max);
    let mut p = x;
    let mut edges: Vec<usize> = Vec::new();
    for _ in 0..k_max {
        let (end, crossings) = iso.apply(p)?;
        p = end;
        edges.extend(crossings.iter().map(|c| c.edge));
        let letters: Vec<i64> = edges.iter().map(|&e| EDGE_LETTERS[e]).collect();
        let raw = GroupWord::from_signed(2 * sym.genus(), &letters)?;
        let word = SurfaceGroupWord::new(sym.genus(), dehn_reduce_with(sym, &raw))?;
        out.push(TracedLoop { word, end: p, edges: edges.clone() });
    }
    Ok(out)
}

/// Largest m with h = α′·L^m·α″ for the cyclic core L of `level`
/// (negative m for powers of L⁻¹), and the leftover length |α′| + |α″|.
pub fn winding_decomposition(h_word: &GroupWord, level_word: &GroupWord) -> (i64, usize) {
    let (core, _) = cyclically_reduce(&free_reduce(level_word));
    let h = h_word.letters();
    if core.is_empty() {
        return (0, h.len());
    }
    let l = core.letters();
    let inv: Vec<Letter> = l.iter().rev().map(|x| x.inverse()).collect();
    let mut best = (0i64, h.len());
    for (pattern, sign) in [(l, 1i64), (&inv[..], -1i64)] {
        let k = pattern.len();
        for start in 0..h.len() {
            let mut count = 0usize;
            while start + (count + 1) * k <= h.len() && h[start + count * k..start + (count + 1) * k] == *pattern {
                count += 1;
            }
            if count as i64 > best.0.abs() {
                best = (sign * count as i64, h.len() - count * k);
            }
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn projector_roundtrip() {
        for pole in [[0.0, 0.0, 1.0], [0.0, 0.0, -1.0], [0.3, -0.4, 0.5]] {
            let proj = Projector::from_pole(pole);
            for p in [[0.6, 0.0, -0.8], [0.0, 1.0, 0.0], [-0.48, 0.6, -0.64]] {
                let sp = SurfacePoint::sphere(p);
                let back = proj.lift(proj.project(&sp)).ambient();
                for i in 0..3 {
                    assert!((back[i] - p[i]).abs() < 1e-12, "{pole:?} {p:?} {back:?}");
                }
            }
            let n = norm3(pole);
            assert!(proj.pole_distance(&SurfacePoint::sphere(pole.map(|c| c / n))) < 1e-7);
        }
    }

    #[test]
    fn winding_examples() {
        let l = GroupWord::from_signed(4, &[1, 2, -1]).unwrap();
        let core = GroupWord::from_signed(4, &[2]).unwrap();
        assert_eq!(winding_decomposition(&core.power(3), &l), (3, 0));
        let h = GroupWord::from_signed(4, &[3, 4, 2, 2, -3]).unwrap();
        assert_eq!(winding_decomposition(&h, &core), (2, 3));
        let h = GroupWord::from_signed(4, &[-2, -2, -2, 1]).unwrap();
        assert_eq!(winding_decomposition(&h, &core), (-3, 1));
        let h = GroupWord::from_signed(4, &[1, 3]).unwrap();
        assert_eq!(winding_decomposition(&h, &core), (0, 2));
        let l = GroupWord::from_signed(4, &[1, 2]).unwrap();
        let h = GroupWord::from_signed(4, &[3, 1, 2, 1, 2, 1, 2, 4, 4]).unwrap();
        assert_eq!(winding_decomposition(&h, &l), (3, 3));
    }
}
