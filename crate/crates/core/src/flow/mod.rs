//! Surface models, autonomous Hamiltonian flows, composite isotopies and the
//! L^p length of their generating fields.

pub mod catalog;
pub mod expr;
pub mod field;
pub mod grid;
pub mod integrate;
pub mod isotopy;
pub mod quadrature;
pub mod spec;
pub mod surface;
pub mod system;

use thiserror::Error;

pub use catalog::{critical_points, make_morse_catalog, CriticalPoint};
pub use field::{Bump, Gaussian, ScalarField, Shear, Twist};
pub use integrate::{drift_study, DriftStudy, flow_endpoint, integrate_flow, measure_drift, rk4_step, EdgeCrossing, Endpoint, Step, Trajectory};
pub use isotopy::{lp_length, make_composite, Isotopy, Segment};
pub use surface::{Chart, Octagon, SurfaceKind, SurfaceModel, SurfacePoint, EDGE_LETTERS};
pub use system::HamiltonianSystem;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FlowError {
    #[error("point {point:?} is outside the surface")]
    OutsideDomain { point: [f64; 2] },
    #[error("trajectory passed through an octagon corner near {point:?}")]
    CornerApproach { point: [f64; 2] },
    #[error("energy drift {drift:e} exceeds tolerance {tol:e}; refine dt")]
    EnergyDrift { drift: f64, tol: f64 },
    #[error("segments live on different surfaces ({0} vs {1})")]
    SurfaceMismatch(String, String),
    #[error("non-finite field sample at {point:?}")]
    NonIntegrable { point: [f64; 2] },
    #[error("invalid argument: {0}")]
    Argument(String),
    #[error("expression: {0}")]
    Expression(String),
    #[error("grid: {0}")]
    Grid(String),
    #[error("hamiltonian spec: {0}")]
    Spec(String),
}
