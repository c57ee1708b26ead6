//! Braids and surface-group loops traced by Hamiltonian flows, quasimorphisms
//! evaluated on them, and Monte-Carlo estimators built on top.

pub mod braid;
pub mod word;
pub mod quasimorphisms;
pub mod flow;
pub mod tolerances;
pub mod estimators;
pub mod tracing;
