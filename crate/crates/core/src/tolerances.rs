//! Numerical tolerances shared by integration, tracing and estimation.

use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Tolerances {
    /// Energy gate as a fraction of max H − min H.
    pub energy_rel: f64,
    /// Default time step as a fraction of the flow timescale.
    pub dt_fraction: f64,
    /// Minimum pairwise distance of sampled configurations.
    pub separation_tol: f64,
    /// Minimum pairwise distance along traced strands.
    pub collision_tol: f64,
    /// Crossing events closer than this fraction of dt are degenerate.
    pub event_fraction: f64,
    /// Octagon edge crossings this close to a vertex are rejected.
    pub corner_tol: f64,
    /// Minimum distance of sphere samples from the projection pole.
    pub pole_tol: f64,
    /// Reports with a larger rejected fraction are flagged.
    pub max_reject_fraction: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            energy_rel: 1e-6,
            dt_fraction: 1e-3,
            separation_tol: 1e-3,
            collision_tol: 1e-6,
            event_fraction: 1e-3,
            corner_tol: 1e-3,
            pole_tol: 0.05,
            max_reject_fraction: 0.05,
        }
    }
}

impl Tolerances {
    /// Overrides a field by name; returns false for unknown names.
    pub fn set(&mut self, name: &str, value: f64) -> bool {
        let slot = match name {
            "energy_rel" => &mut self.energy_rel,
            "dt_fraction" => &mut self.dt_fraction,
            "separation_tol" => &mut self.separation_tol,
            "collision_tol" => &mut self.collision_tol,
            "event_fraction" => &mut self.event_fraction,
            "corner_tol" => &mut self.corner_tol,
            "pole_tol" => &mut self.pole_tol,
            "max_reject_fraction" => &mut self.max_reject_fraction,
            _ => return false,
        };
        *slot = value;
        true
    }
}
