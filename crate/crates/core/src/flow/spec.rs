//! Hamiltonian spec files: flat `key = value` lines, `#` comments.
//!
//! ```text
//! surface = disc
//! expr = 0.5*(1 - x^2 - y^2)^4      # or: grid = field.grid, or: catalog = disc-bump
//! boundary_flat = true
//! duration = 1
//! dt = 0.001
//! tol.energy_rel = 1e-6
//! ```

use std::path::{Path, PathBuf};

use super::catalog::named_system;
use super::field::ScalarField;
use super::grid::GridField;
use super::surface::{SurfaceKind, SurfaceModel};
use super::system::HamiltonianSystem;
use super::FlowError;
use crate::tolerances::Tolerances;

/// Splits `key = value` lines, dropping comments and blank lines.
pub fn parse_key_values(text: &str) -> Result<Vec<(String, String)>, String> {
    let mut out = Vec::new();
    for (n, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line.split_once('=').ok_or_else(|| format!("line {}: expected key = value, got {line:?}", n + 1))?;
        out.push((k.trim().to_string(), v.trim().to_string()));
    }
    Ok(out)
}

#[derive(Clone, Debug)]
pub struct HamiltonianSpec {
    pub system: HamiltonianSystem,
    pub duration: Option<f64>,
    pub dt: Option<f64>,
}

fn number(key: &str, v: &str) -> Result<f64, FlowError> {
    v.parse().map_err(|_| FlowError::Spec(format!("{key}: not a number: {v:?}")))
}

/// Parses a spec; grid paths resolve against `base_dir`.
pub fn parse_hamiltonian_spec(text: &str, base_dir: Option<&Path>) -> Result<HamiltonianSpec, FlowError> {
    let kv = parse_key_values(text).map_err(FlowError::Spec)?;
    let mut surface = None;
    let mut field: Option<(String, ScalarField)> = None;
    let mut catalog = None;
    let mut flat = None;
    let (mut duration, mut dt) = (None, None);
    let mut tol = Tolerances::default();
    let mut name = None;
    for (k, v) in &kv {
        match k.as_str() {
            "surface" => {
                surface = Some(SurfaceKind::parse(v).ok_or_else(|| FlowError::Spec(format!("unknown surface {v:?}")))?)
            }
            "name" => name = Some(v.clone()),
            "expr" => field = Some((v.clone(), ScalarField::expr(v)?)),
            "grid" => {
                let path = base_dir.map(|d| d.join(v)).unwrap_or_else(|| PathBuf::from(v));
                let text = std::fs::read_to_string(&path)
                    .map_err(|e| FlowError::Spec(format!("grid file {}: {e}", path.display())))?;
                field = Some((v.clone(), ScalarField::Grid(GridField::parse(&text)?)));
            }
            "catalog" => catalog = Some(named_system(v).ok_or_else(|| FlowError::Spec(format!("unknown catalog entry {v:?}")))?),
            "boundary_flat" => {
                flat = Some(v.parse::<bool>().map_err(|_| FlowError::Spec(format!("boundary_flat: expected true/false, got {v:?}")))?)
            }
            "duration" => duration = Some(number(k, v)?),
            "dt" => dt = Some(number(k, v)?),
            other => match other.strip_prefix("tol.") {
                Some(t) if tol.set(t, number(k, v)?) => {}
                _ => return Err(FlowError::Spec(format!("unknown key {other:?}"))),
            },
        }
    }
    let system = match (catalog, field) {
        (Some(_), Some(_)) => return Err(FlowError::Spec("give either catalog or expr/grid, not both".into())),
        (Some(sys), None) => {
            if surface.is_some_and(|s| s != sys.kind()) {
                return Err(FlowError::Spec(format!("catalog entry {} lives on {}", sys.name, sys.kind().name())));
            }
            HamiltonianSystem::with_tolerances(name.unwrap_or(sys.name.clone()), sys.surface.clone(), sys.h.clone(), sys.boundary_flat, tol)
        }
        (None, Some((src, f))) => {
            let kind = surface.ok_or_else(|| FlowError::Spec("missing surface".into()))?;
            HamiltonianSystem::with_tolerances(name.unwrap_or(src), SurfaceModel::of_kind(kind), f, flat.unwrap_or(false), tol)
        }
        (None, None) => return Err(FlowError::Spec("missing expr, grid or catalog".into())),
    };
    if dt.is_some_and(|d| d <= 0.0) {
        return Err(FlowError::Spec("dt must be positive".into()));
    }
    Ok(HamiltonianSpec { system, duration, dt })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_expression_spec() {
        let spec = parse_hamiltonian_spec("surface = disc\nexpr = 0.5*(x^2+y^2)  # rotation\nduration = 2\ntol.energy_rel = 1e-7\n", None).unwrap();
        assert_eq!(spec.duration, Some(2.0));
        assert_eq!(spec.system.tolerances.energy_rel, 1e-7);
        let x = spec.system.vector_field(&crate::flow::SurfacePoint::plane(1.0, 0.0));
        assert!((x[1] - 1.0).abs() < 1e-14);
    }

    #[test]
    fn rejects_bad_specs() {
        assert!(parse_hamiltonian_spec("expr = x", None).is_err());
        assert!(parse_hamiltonian_spec("surface = torus\nexpr = x", None).is_err());
        assert!(parse_hamiltonian_spec("surface = disc\nexpr = x\nfoo = 1", None).is_err());
        assert!(parse_hamiltonian_spec("catalog = sphere-height\nsurface = disc", None).is_err());
        assert!(parse_hamiltonian_spec("catalog = disc-bump", None).is_ok());
    }
}
