//! Fixed-step RK4 on the surface charts with an energy gate.
//!
//! Stages are taken in the chart of the step's starting point. On the octagon
//! the Hamiltonian is a planar function already consistent with the gluing,
//! so stages that leave the fundamental domain are evaluated directly and
//! only the step's end point is wrapped back.

use serde::{Deserialize, Serialize};

use super::surface::{SurfaceKind, SurfacePoint};
use super::system::HamiltonianSystem;
use super::FlowError;

/// A paired-edge crossing: the trajectory left through `edge` during step
/// `step` and re-entered at `point`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EdgeCrossing {
    pub step: usize,
    pub time: f64,
    pub edge: usize,
    pub point: [f64; 2],
}

#[derive(Clone, Debug, PartialEq)]
pub struct Trajectory {
    pub points: Vec<SurfacePoint>,
    pub times: Vec<f64>,
    pub crossings: Vec<EdgeCrossing>,
    pub max_drift: f64,
}

impl Trajectory {
    pub fn start(&self) -> SurfacePoint {
        self.points[0]
    }

    pub fn end(&self) -> SurfacePoint {
        *self.points.last().expect("trajectories hold at least the initial point")
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Step {
    pub point: SurfacePoint,
    pub edge: Option<usize>,
    /// H at the start of the step.
    pub energy: f64,
}

/// One RK4 step of signed length `h` from `p`.
pub fn rk4_step(sys: &HamiltonianSystem, p: &SurfacePoint, h: f64) -> Result<Step, FlowError> {
    let at = |dw: [f64; 2], s: f64| SurfacePoint { chart: p.chart, w: [p.w[0] + s * dw[0], p.w[1] + s * dw[1]] };
    let (energy, k1) = sys.value_and_field(p);
    let k2 = sys.vector_field(&at(k1, 0.5 * h));
    let k3 = sys.vector_field(&at(k2, 0.5 * h));
    let k4 = sys.vector_field(&at(k3, h));
    let dw = [0, 1].map(|i| (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]) / 6.0);
    let next = at(dw, h);
    if !(next.w[0].is_finite() && next.w[1].is_finite() && energy.is_finite()) {
        return Err(FlowError::NonIntegrable { point: p.w });
    }
    let (point, edge) = sys.surface.settle(next)?;
    if edge.is_some() {
        let oct = sys.surface.octagon();
        if oct.distance_to_vertices(next.w).min(oct.distance_to_vertices(point.w)) < sys.tolerances.corner_tol {
            return Err(FlowError::CornerApproach { point: next.w });
        }
    }
    Ok(Step { point, edge, energy })
}

/// Number of steps and signed step length covering `duration` with steps no
/// longer than `dt`.
pub fn step_plan(duration: f64, dt: f64) -> Result<(usize, f64), FlowError> {
    if !(dt > 0.0) || !duration.is_finite() {
        return Err(FlowError::Argument(format!("need dt > 0 and finite duration, got dt={dt}, duration={duration}")));
    }
    let n = (duration.abs() / dt).ceil() as usize;
    Ok(if n == 0 { (0, 0.0) } else { (n, duration / n as f64) })
}

fn run(
    sys: &HamiltonianSystem,
    x0: SurfacePoint,
    duration: f64,
    dt: f64,
    gate: bool,
    mut visit: impl FnMut(usize, &Step),
) -> Result<(SurfacePoint, f64), FlowError> {
    let (n, h) = step_plan(duration, dt)?;
    if sys.kind() == SurfaceKind::PolygonGenus2 && !sys.surface.octagon().contains(x0.w) {
        return Err(FlowError::OutsideDomain { point: x0.w });
    }
    let tol = sys.energy_tol();
    let h0 = sys.value(&x0);
    let mut p = x0;
    let mut drift = 0.0f64;
    for i in 0..n {
        let step = rk4_step(sys, &p, h)?;
        drift = drift.max((step.energy - h0).abs());
        if gate && drift > tol {
            return Err(FlowError::EnergyDrift { drift, tol });
        }
        visit(i, &step);
        p = step.point;
    }
    drift = drift.max((sys.value(&p) - h0).abs());
    if gate && drift > tol {
        return Err(FlowError::EnergyDrift { drift, tol });
    }
    Ok((p, drift))
}

/// Integrates the flow of `sys` for `duration` (negative runs backwards),
/// recording every sample. Fails if the energy drift exceeds the gate.
pub fn integrate_flow(sys: &HamiltonianSystem, x0: SurfacePoint, duration: f64, dt: f64) -> Result<Trajectory, FlowError> {
    let (n, h) = step_plan(duration, dt)?;
    let mut points = Vec::with_capacity(n + 1);
    let mut times = Vec::with_capacity(n + 1);
    let mut crossings = Vec::new();
    points.push(x0);
    times.push(0.0);
    let (_, max_drift) = run(sys, x0, duration, dt, true, |i, s| {
        let t = (i + 1) as f64 * h;
        if let Some(edge) = s.edge {
            crossings.push(EdgeCrossing { step: i, time: t, edge, point: s.point.w });
        }
        points.push(s.point);
        times.push(t);
    })?;
    Ok(Trajectory { points, times, crossings, max_drift })
}

#[derive(Clone, Debug, PartialEq)]
pub struct Endpoint {
    pub point: SurfacePoint,
    pub crossings: Vec<EdgeCrossing>,
    pub max_drift: f64,
}

/// Like [`integrate_flow`] but keeps only the end point and the crossing log.
pub fn flow_endpoint(sys: &HamiltonianSystem, x0: SurfacePoint, duration: f64, dt: f64) -> Result<Endpoint, FlowError> {
    let (_, h) = step_plan(duration, dt)?;
    let mut crossings = Vec::new();
    let (point, max_drift) = run(sys, x0, duration, dt, true, |i, s| {
        if let Some(edge) = s.edge {
            crossings.push(EdgeCrossing { step: i, time: (i + 1) as f64 * h, edge, point: s.point.w });
        }
    })?;
    Ok(Endpoint { point, crossings, max_drift })
}

/// Maximum energy drift along the trajectory, without the gate.
pub fn measure_drift(sys: &HamiltonianSystem, x0: SurfacePoint, duration: f64, dt: f64) -> Result<f64, FlowError> {
    run(sys, x0, duration, dt, false, |_, _| {}).map(|(_, d)| d)
}

/// Energy gate at the default step and an order check at the first step
/// size (default × 2^j) whose drift clears a roundoff floor of
/// 10⁻⁹·(max H − min H).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DriftStudy {
    pub gate_drift: f64,
    pub gate_tol: f64,
    pub probe_dt: f64,
    pub coarse: f64,
    pub fine: f64,
}

impl DriftStudy {
    pub fn ratio(&self) -> f64 {
        self.coarse / self.fine
    }

    pub fn passes(&self) -> bool {
        self.gate_drift <= self.gate_tol && self.ratio() >= 8.0
    }
}

pub fn drift_study(sys: &HamiltonianSystem, points: &[SurfacePoint], duration: f64) -> Result<DriftStudy, FlowError> {
    let dt = sys.default_dt();
    let (lo, hi) = sys.h_range();
    let floor = 1e-9 * (hi - lo);
    let mut gate_drift = 0.0f64;
    for &x in points {
        gate_drift = gate_drift.max(measure_drift(sys, x, duration, dt)?);
    }
    let mut probe_dt = dt;
    let mut worst = (0.0, points[0]);
    for _ in 0..=10 {
        worst = (0.0, points[0]);
        for &x in points {
            let d = measure_drift(sys, x, duration, probe_dt)?;
            if d > worst.0 {
                worst = (d, x);
            }
        }
        if worst.0 >= floor {
            break;
        }
        probe_dt *= 2.0;
    }
    let fine = measure_drift(sys, worst.1, duration, 0.5 * probe_dt)?;
    Ok(DriftStudy { gate_drift, gate_tol: sys.energy_tol(), probe_dt, coarse: worst.0, fine })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::flow::field::ScalarField;
    use crate::flow::surface::SurfaceModel;
    use std::f64::consts::PI;

    #[test]
    fn critical_point_is_fixed() {
        let sys = HamiltonianSystem::new("rot", SurfaceModel::disc(), ScalarField::Quadratic { scale: 1.0 }, false);
        let tr = integrate_flow(&sys, SurfacePoint::plane(0.0, 0.0), 3.0, 0.01).unwrap();
        assert!(tr.points.iter().all(|p| p.w == [0.0, 0.0]));
        assert_eq!(tr.points.len(), 301);
    }

    #[test]
    fn backwards_undoes_forwards() {
        let sys = HamiltonianSystem::new("rot", SurfaceModel::disc(), ScalarField::Quadratic { scale: 1.0 }, false);
        let x = SurfacePoint::plane(0.3, 0.4);
        let fwd = flow_endpoint(&sys, x, 1.3, 1e-3).unwrap().point;
        let back = flow_endpoint(&sys, fwd, -1.3, 1e-3).unwrap().point;
        assert!((back.w[0] - 0.3).abs() < 1e-12 && (back.w[1] - 0.4).abs() < 1e-12);
        let rotated = [0.3 * 1.3f64.cos() - 0.4 * 1.3f64.sin(), 0.3 * 1.3f64.sin() + 0.4 * 1.3f64.cos()];
        assert!((fwd.w[0] - rotated[0]).abs() < 1e-12 && (fwd.w[1] - rotated[1]).abs() < 1e-12);
        assert!(flow_endpoint(&sys, x, 2.0 * PI, 0.0).is_err());
    }

    #[test]
    fn energy_gate_trips_on_coarse_steps() {
        let sys = HamiltonianSystem::new("rot", SurfaceModel::disc(), ScalarField::Quadratic { scale: 1.0 }, false);
        let err = integrate_flow(&sys, SurfacePoint::plane(0.5, 0.0), 10.0, 0.5).unwrap_err();
        assert!(matches!(err, FlowError::EnergyDrift { .. }), "{err:?}");
    }
}
