//! Isotopies built from autonomous segments, and their L^p length.

use std::sync::Arc;

use super::integrate::{flow_endpoint, step_plan, EdgeCrossing};
use super::quadrature::QuadratureRule;
use super::surface::SurfacePoint;
use super::system::HamiltonianSystem;
use super::FlowError;

/// Flow of `system` for `duration`; a negative duration runs the flow
/// backwards (the flow of −H).
#[derive(Clone, Debug)]
pub struct Segment {
    pub system: Arc<HamiltonianSystem>,
    pub duration: f64,
}

#[derive(Clone, Debug)]
pub struct Isotopy {
    pub segments: Vec<Segment>,
    /// Step override; each segment otherwise uses its system's default dt.
    pub dt: Option<f64>,
}

impl Isotopy {
    pub fn identity(system: Arc<HamiltonianSystem>) -> Self {
        Isotopy { segments: vec![Segment { system, duration: 0.0 }], dt: None }
    }

    pub fn autonomous(system: Arc<HamiltonianSystem>, duration: f64) -> Self {
        Isotopy { segments: vec![Segment { system, duration }], dt: None }
    }

    pub fn with_dt(mut self, dt: f64) -> Self {
        self.dt = Some(dt);
        self
    }

    pub fn is_autonomous(&self) -> bool {
        self.segments.windows(2).all(|w| Arc::ptr_eq(&w[0].system, &w[1].system) && w[0].duration.signum() == w[1].duration.signum())
    }

    pub fn duration(&self) -> f64 {
        self.segments.iter().map(|s| s.duration.abs()).sum()
    }

    pub fn surface(&self) -> &super::surface::SurfaceModel {
        &self.segments[0].system.surface
    }

    pub fn segment_dt(&self, seg: &Segment) -> f64 {
        self.dt.unwrap_or_else(|| seg.system.default_dt())
    }

    /// Signed steps per segment: (segment, number of steps, step length).
    pub fn plan(&self) -> Result<Vec<(&Segment, usize, f64)>, FlowError> {
        self.segments
            .iter()
            .map(|s| step_plan(s.duration, self.segment_dt(s)).map(|(n, h)| (s, n, h)))
            .collect()
    }

    pub fn steps(&self) -> Result<usize, FlowError> {
        Ok(self.plan()?.iter().map(|p| p.1).sum())
    }

    /// The inverse isotopy: segments reversed in order and time.
    pub fn reversed(&self) -> Isotopy {
        let segments = self.segments.iter().rev().map(|s| Segment { system: s.system.clone(), duration: -s.duration }).collect();
        Isotopy { segments, dt: self.dt }
    }

    /// `self` followed by `other`.
    pub fn then(&self, other: &Isotopy) -> Result<Isotopy, FlowError> {
        check_surface(self.surface(), other.surface())?;
        let segments = self.segments.iter().chain(&other.segments).cloned().collect();
        Ok(Isotopy { segments, dt: self.dt.or(other.dt) })
    }

    /// `self` repeated `m` times (time-m map).
    pub fn power(&self, m: usize) -> Isotopy {
        let segments = (0..m).flat_map(|_| self.segments.iter().cloned()).collect();
        Isotopy { segments, dt: self.dt }
    }

    /// Image of `x` under the time-one map, with every edge crossing (times
    /// are cumulative).
    pub fn apply(&self, x: SurfacePoint) -> Result<(SurfacePoint, Vec<EdgeCrossing>), FlowError> {
        let mut p = x;
        let mut crossings = Vec::new();
        let mut t0 = 0.0;
        let mut s0 = 0;
        for seg in &self.segments {
            let dt = self.segment_dt(seg);
            let end = flow_endpoint(&seg.system, p, seg.duration, dt)?;
            crossings.extend(end.crossings.into_iter().map(|c| EdgeCrossing { step: c.step + s0, time: c.time.abs() + t0, ..c }));
            s0 += step_plan(seg.duration, dt)?.0;
            t0 += seg.duration.abs();
            p = end.point;
        }
        Ok((p, crossings))
    }
}

fn check_surface(a: &super::surface::SurfaceModel, b: &super::surface::SurfaceModel) -> Result<(), FlowError> {
    if a != b {
        return Err(FlowError::SurfaceMismatch(a.kind.name().into(), b.kind.name().into()));
    }
    Ok(())
}

/// Concatenates autonomous pieces; the time-one map is their composition in
/// order.
pub fn make_composite(segments: Vec<(Arc<HamiltonianSystem>, f64)>) -> Result<Isotopy, FlowError> {
    let first = segments.first().ok_or_else(|| FlowError::Argument("composite needs at least one segment".into()))?;
    let surface = first.0.surface.clone();
    for (s, _) in &segments {
        check_surface(&surface, &s.surface)?;
    }
    Ok(Isotopy { segments: segments.into_iter().map(|(system, duration)| Segment { system, duration }).collect(), dt: None })
}

/// Spatial L^p norm (∫|X_H|^p)^{1/p} under the given rule.
pub fn lp_norm(sys: &HamiltonianSystem, p: f64, rule: &QuadratureRule) -> Result<f64, FlowError> {
    if !(p >= 1.0) {
        return Err(FlowError::Argument(format!("need p ≥ 1, got {p}")));
    }
    let mut acc = 0.0;
    for (x, w) in &rule.nodes {
        let v = sys.field_norm(x);
        if !v.is_finite() {
            return Err(FlowError::NonIntegrable { point: x.w });
        }
        acc += w * v.powf(p);
    }
    Ok(acc.powf(1.0 / p))
}

/// ∫ dt (∫|X_t|^p)^{1/p} with `nodes` Gauss nodes per direction.
pub fn lp_length(iso: &Isotopy, p: f64, nodes: usize) -> Result<f64, FlowError> {
    let rule = QuadratureRule::for_surface(iso.surface(), nodes);
    lp_length_with(iso, p, &rule)
}

pub fn lp_length_with(iso: &Isotopy, p: f64, rule: &QuadratureRule) -> Result<f64, FlowError> {
    let mut total = 0.0;
    for seg in &iso.segments {
        if seg.duration != 0.0 {
            total += seg.duration.abs() * lp_norm(&seg.system, p, rule)?;
        } else if !(p >= 1.0) {
            return Err(FlowError::Argument(format!("need p ≥ 1, got {p}")));
        }
    }
    Ok(total)
}
