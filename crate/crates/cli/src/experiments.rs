//! Experiment dispatch: builds flows and quasimorphisms from a config and
//! renders reports, CSV tables and gnuplot scripts.

use std::f64::consts::PI;
use std::fmt::Write as _;
use std::path::Path;
use std::sync::Arc;

use braidflow::estimators::{self, EstimateReport, EstimatorError, REGULARITY_THRESHOLD};
use braidflow::flow::catalog::named_system;
use braidflow::flow::spec::parse_hamiltonian_spec;
use braidflow::flow::{make_composite, FlowError, HamiltonianSystem, Isotopy, SurfaceKind, SurfacePoint};
use braidflow::quasimorphisms::{vanishing_combination, DomainTag, QmError, Quasimorphism};
use braidflow::word::GroupWord;
use rand::Rng;
use serde::Serialize;
use serde_json::{json, Value};
use thiserror::Error;

use crate::config::{split_list, Config, ConfigError};

#[derive(Debug, Error)]
pub enum RunError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("tolerance gate failed: {0}")]
    Tolerance(String),
    #[error("{0}")]
    Failure(String),
}

impl RunError {
    pub fn exit_code(&self) -> i32 {
        match self {
            RunError::Config(_) => 3,
            RunError::Tolerance(_) => 2,
            RunError::Failure(_) => 1,
        }
    }

    fn invalid(key: &str, message: impl Into<String>) -> Self {
        RunError::Config(ConfigError::Invalid { key: key.into(), message: message.into() })
    }
}

impl From<EstimatorError> for RunError {
    fn from(e: EstimatorError) -> Self {
        if e.is_tolerance_failure() {
            return RunError::Tolerance(e.to_string());
        }
        match e {
            EstimatorError::Argument(m) => RunError::invalid("experiment", m),
            EstimatorError::MissingConstant(m) => RunError::invalid("defect", format!("missing {m}")),
            EstimatorError::NotRegular(m) => RunError::invalid("point", m),
            EstimatorError::Qm(q) => RunError::invalid("quasimorphism", q.to_string()),
            other => RunError::Failure(other.to_string()),
        }
    }
}

impl From<FlowError> for RunError {
    fn from(e: FlowError) -> Self {
        match e {
            FlowError::EnergyDrift { .. } => RunError::Tolerance(e.to_string()),
            FlowError::Spec(_) | FlowError::Expression(_) | FlowError::Grid(_) | FlowError::SurfaceMismatch(..) | FlowError::Argument(_) => {
                RunError::invalid("hamiltonian", e.to_string())
            }
            other => RunError::Failure(other.to_string()),
        }
    }
}

fn qm_error(e: QmError) -> RunError {
    RunError::invalid("quasimorphism", e.to_string())
}

/// Everything a run writes: `report.json`, named CSV tables and `plot.plt`.
pub struct Artifacts {
    pub report: Value,
    pub tables: Vec<(String, String)>,
    pub plot: String,
}

pub const EXPERIMENTS: &[&str] =
    &["gg", "polterovich", "calabi-check", "vanishing", "decomposition", "growth", "continuity", "lipschitz-probe"];

/// Reference value of gg_homogenized(lk₁₂, n = 2) / Calabi on the unit disc.
pub const CALABI_RATIO: f64 = -2.0 / (PI * PI);

struct Loaded {
    system: HamiltonianSystem,
    duration: Option<f64>,
    dt: Option<f64>,
}

fn load_system(cfg: &Config, reference: &str) -> Result<Loaded, RunError> {
    let mut loaded = match named_system(reference) {
        Some(system) => Loaded { system, duration: None, dt: None },
        None => {
            let text = cfg.files.get(reference).ok_or_else(|| RunError::invalid("hamiltonian", format!("unknown reference {reference:?}")))?;
            let spec = parse_hamiltonian_spec(text, Path::new(reference).parent())?;
            Loaded { system: spec.system, duration: spec.duration, dt: spec.dt }
        }
    };
    let overrides = cfg.tolerance_overrides()?;
    if !overrides.is_empty() {
        let s = &loaded.system;
        let mut tol = s.tolerances;
        for (name, value) in overrides {
            if !tol.set(&name, value) {
                return Err(ConfigError::UnknownKey(format!("tol.{name}")).into());
            }
        }
        loaded.system = HamiltonianSystem::with_tolerances(s.name.clone(), s.surface.clone(), s.h.clone(), s.boundary_flat, tol);
    }
    Ok(loaded)
}

fn systems(cfg: &Config, key: &'static str) -> Result<Vec<Loaded>, RunError> {
    let refs: Vec<&str> = split_list(cfg.require(key)?).collect();
    if refs.is_empty() {
        return Err(ConfigError::Missing(key).into());
    }
    refs.into_iter().map(|r| load_system(cfg, r)).collect()
}

fn durations(cfg: &Config, loaded: &[Loaded]) -> Result<Vec<f64>, RunError> {
    let given = cfg.list::<f64>("duration")?;
    match given {
        Some(d) if d.len() == 1 => Ok(vec![d[0]; loaded.len()]),
        Some(d) if d.len() == loaded.len() => Ok(d),
        Some(d) => Err(RunError::invalid("duration", format!("{} durations for {} hamiltonians", d.len(), loaded.len()))),
        None => Ok(loaded.iter().map(|l| l.duration.unwrap_or(1.0)).collect()),
    }
}

/// The configured hamiltonians composed in order.
pub fn composite(cfg: &Config) -> Result<Isotopy, RunError> {
    let loaded = systems(cfg, "hamiltonian")?;
    let ds = durations(cfg, &loaded)?;
    let dt = loaded.iter().find_map(|l| l.dt);
    let iso = make_composite(loaded.into_iter().zip(ds).map(|(l, d)| (Arc::new(l.system), d)).collect())?;
    Ok(match dt {
        Some(dt) => iso.with_dt(dt),
        None => iso,
    })
}

pub fn points_from(cfg: &Config, surface: SurfaceKind) -> Result<Vec<SurfacePoint>, RunError> {
    parse_points(cfg, surface)?.ok_or_else(|| ConfigError::Missing("point").into())
}

/// Each configured hamiltonian as its own autonomous flow.
fn separate(cfg: &Config) -> Result<Vec<(Arc<HamiltonianSystem>, f64)>, RunError> {
    let loaded = systems(cfg, "hamiltonian")?;
    let ds = durations(cfg, &loaded)?;
    Ok(loaded.into_iter().zip(ds).map(|(l, d)| (Arc::new(l.system), d)).collect())
}

fn braid_domain(cfg: &Config, n: usize) -> Result<DomainTag, RunError> {
    match cfg.get("domain").unwrap_or("artin") {
        "artin" => Ok(DomainTag::ArtinBraid(n)),
        "spherical" => Ok(DomainTag::SphericalBraid(n)),
        other => Err(RunError::invalid("domain", format!("expected artin or spherical, got {other:?}"))),
    }
}

fn quasimorphism(cfg: &Config, domain: DomainTag) -> Result<Quasimorphism, RunError> {
    let name = cfg.require("quasimorphism")?;
    if name == "corrected" {
        if domain != DomainTag::ArtinBraid(3) {
            return Err(RunError::invalid("quasimorphism", "`corrected` lives on artin_braid(3); set n = 3"));
        }
        return Ok(estimators::corrected_braid_quasimorphism()?);
    }
    if let Some(path) = name.strip_prefix("combo:") {
        let text = cfg.files.get(path).ok_or_else(|| RunError::invalid("quasimorphism", format!("combo file {path} not loaded")))?;
        return combo(text, domain);
    }
    Quasimorphism::from_name(name, domain).map_err(qm_error)
}

/// `member = <name>` and `target = <signed letters>` lines; the result is
/// the first combination of the members vanishing on every target.
fn combo(text: &str, domain: DomainTag) -> Result<Quasimorphism, RunError> {
    let pairs = braidflow::flow::spec::parse_key_values(text).map_err(|m| RunError::invalid("quasimorphism", m))?;
    let mut family = Vec::new();
    let mut targets = Vec::new();
    for (k, v) in pairs {
        match k.as_str() {
            "member" => family.push(Quasimorphism::from_name(&v, domain).map_err(qm_error)?),
            "target" => {
                let signed = v
                    .split_whitespace()
                    .map(|t| t.parse::<i64>().map_err(|e| RunError::invalid("quasimorphism", format!("target letter {t:?}: {e}"))))
                    .collect::<Result<Vec<_>, _>>()?;
                let word = GroupWord::from_signed(domain.alphabet_size(), &signed).map_err(|e| RunError::invalid("quasimorphism", e.to_string()))?;
                targets.push(word);
            }
            other => return Err(RunError::invalid("quasimorphism", format!("combo file: unknown key {other:?}"))),
        }
    }
    vanishing_combination(&family, &targets)
        .map_err(qm_error)?
        .ok_or_else(|| RunError::invalid("quasimorphism", "the combo family has no vanishing combination"))
}

fn to_value<T: Serialize>(v: &T) -> Value {
    serde_json::to_value(v).expect("reports serialize")
}

fn stamp(mut report: EstimateReport, hash: &str) -> EstimateReport {
    report.config_hash = Some(hash.to_string());
    report
}

fn report_row(r: &EstimateReport) -> String {
    format!("{},{},{},{},{},{}", r.estimate, r.std_error, r.samples, r.k, r.rejected_samples, r.homogenization_error)
}

const REPORT_HEADER: &str = "estimate,std_error,samples,k,rejected,homogenization_error";

fn plot_script(title: &str, table: &str, using: &str, xlabel: &str, ylabel: &str) -> String {
    format!(
        "set datafile separator ','\nset key autotitle columnhead\nset title '{title}'\nset xlabel '{xlabel}'\nset ylabel '{ylabel}'\nplot '{table}' using {using} with yerrorbars pt 7\npause mouse close\n"
    )
}

pub fn run(cfg: &Config) -> Result<Artifacts, RunError> {
    cfg.required::<u64>("seed")?;
    let kind = cfg.require("experiment")?;
    match kind {
        "gg" => gg(cfg),
        "polterovich" => polterovich(cfg),
        "calabi-check" => calabi_check(cfg),
        "vanishing" => vanishing(cfg),
        "decomposition" => decomposition(cfg),
        "growth" => growth(cfg),
        "continuity" => continuity(cfg),
        "lipschitz-probe" => lipschitz(cfg),
        other => Err(RunError::invalid("experiment", format!("unknown experiment {other:?}; expected one of {}", EXPERIMENTS.join(", ")))),
    }
}

fn gg(cfg: &Config) -> Result<Artifacts, RunError> {
    let (seed, n, samples) = (cfg.required("seed")?, cfg.required("n")?, cfg.required("samples")?);
    let k: usize = cfg.parsed("k")?.unwrap_or(1);
    let iso = composite(cfg)?;
    let q = quasimorphism(cfg, braid_domain(cfg, n)?)?;
    let report = stamp(estimators::gg_power(&iso, &q, n, samples, k, seed)?, &cfg.hash());
    Ok(Artifacts {
        tables: vec![("table.csv".into(), format!("{REPORT_HEADER}\n{}\n", report_row(&report)))],
        plot: plot_script("gg estimate", "table.csv", "(1):1:2", "", "estimate"),
        report: to_value(&report),
    })
}

fn polterovich(cfg: &Config) -> Result<Artifacts, RunError> {
    let (seed, samples) = (cfg.required("seed")?, cfg.required("samples")?);
    let k: usize = cfg.parsed("k")?.unwrap_or(1);
    let iso = composite(cfg)?;
    let q = quasimorphism(cfg, DomainTag::SurfaceGroup(2))?;
    let report = stamp(estimators::polterovich_estimate(&iso, &q, samples, k, seed)?, &cfg.hash());
    Ok(Artifacts {
        tables: vec![("table.csv".into(), format!("{REPORT_HEADER}\n{}\n", report_row(&report)))],
        plot: plot_script("loop-class estimate", "table.csv", "(1):1:2", "", "estimate"),
        report: to_value(&report),
    })
}

fn calabi_check(cfg: &Config) -> Result<Artifacts, RunError> {
    let (seed, samples) = (cfg.required("seed")?, cfg.required("samples")?);
    let k: usize = cfg.parsed("k")?.unwrap_or(8);
    let q = Quasimorphism::linking(2, 1, 2).map_err(qm_error)?;
    let hash = cfg.hash();
    let mut rows = Vec::new();
    let mut csv = String::from("flow,calabi,estimate,std_error,ratio,ratio_error,deviation\n");
    for (sys, duration) in separate(cfg)? {
        if duration != 1.0 {
            return Err(RunError::invalid("duration", "calabi-check uses time-one maps"));
        }
        let calabi = estimators::calabi_direct(&sys, 1.0)?;
        let report = stamp(estimators::gg_homogenized(sys.clone(), &q, 2, samples, k, seed)?, &hash);
        let ratio = report.estimate / calabi;
        let ratio_error = report.std_error / calabi.abs();
        let deviation = (ratio - CALABI_RATIO).abs();
        eprintln!("{}: ratio {ratio:.5} ± {ratio_error:.5}, |ratio − (−2/π²)| = {deviation:.5}", sys.name);
        writeln!(csv, "{},{calabi},{},{},{ratio},{ratio_error},{deviation}", sys.name, report.estimate, report.std_error).unwrap();
        rows.push(json!({ "flow": sys.name, "calabi": calabi, "ratio": ratio, "ratio_error": ratio_error, "deviation": deviation, "report": report }));
    }
    Ok(Artifacts {
        report: json!({ "experiment": "calabi-check", "config_hash": hash, "reference_ratio": CALABI_RATIO, "rows": rows }),
        tables: vec![("table.csv".into(), csv)],
        plot: plot_script("gg / Calabi", "table.csv", "0:5:6:xtic(1)", "flow", "ratio"),
    })
}

/// Uniform regular points of the surface, drawn from the run seed.
fn regular_points(sys: &HamiltonianSystem, count: usize, seed: u64) -> Vec<SurfacePoint> {
    let mut rng = estimators::sample_rng(seed, usize::MAX);
    let threshold = 10.0 * REGULARITY_THRESHOLD * sys.omega_max();
    std::iter::repeat_with(|| sys.surface.sample_uniform(|| rng.random::<f64>()))
        .filter(|p| sys.field_norm(p) > threshold)
        .take(count)
        .collect()
}

fn decomposition_csv(tables: &[estimators::DecompositionTable]) -> String {
    let mut csv = String::from("point,k,m,remainder,word_len\n");
    for (i, t) in tables.iter().enumerate() {
        for r in &t.rows {
            writeln!(csv, "{i},{},{},{},{}", r.k, r.m, r.remainder, r.word_len).unwrap();
        }
    }
    csv
}

fn parse_points(cfg: &Config, surface: SurfaceKind) -> Result<Option<Vec<SurfacePoint>>, RunError> {
    let Some(text) = cfg.get("point") else { return Ok(None) };
    text.split(';')
        .map(|item| {
            let c = item
                .split(',')
                .map(|t| t.trim().parse::<f64>().map_err(|e| RunError::invalid("point", format!("{t:?}: {e}"))))
                .collect::<Result<Vec<_>, _>>()?;
            match (surface, c.as_slice()) {
                (SurfaceKind::Sphere, [x, y, z]) => Ok(SurfacePoint::sphere([*x, *y, *z])),
                (SurfaceKind::Sphere, _) => Err(RunError::invalid("point", "sphere points take x,y,z")),
                (_, [x, y]) => Ok(SurfacePoint::plane(*x, *y)),
                _ => Err(RunError::invalid("point", "planar points take x,y")),
            }
        })
        .collect::<Result<Vec<_>, _>>()
        .map(Some)
}

fn decomposition_tables(cfg: &Config, sys: &Arc<HamiltonianSystem>, seed: u64, k: usize) -> Result<Vec<estimators::DecompositionTable>, RunError> {
    let points = match parse_points(cfg, sys.kind())? {
        Some(p) => p,
        None => regular_points(sys, cfg.parsed("points")?.unwrap_or(4), seed),
    };
    points.into_iter().map(|x| Ok(estimators::decomposition_verify(sys.clone(), x, k)?)).collect()
}

fn vanishing(cfg: &Config) -> Result<Artifacts, RunError> {
    let (seed, n, samples) = (cfg.required("seed")?, cfg.required("n")?, cfg.required("samples")?);
    let k: usize = cfg.parsed("k")?.unwrap_or(32);
    let q = quasimorphism(cfg, braid_domain(cfg, n)?)?;
    let hash = cfg.hash();
    let mut rows = Vec::new();
    let mut csv = format!("flow,{REPORT_HEADER},band,within_band\n");
    let mut tables = Vec::new();
    for (sys, _) in separate(cfg)? {
        let report = stamp(estimators::gg_homogenized(sys.clone(), &q, n, samples, k, seed)?, &hash);
        let band = report.vanishing_band();
        let within = report.estimate.abs() <= band;
        writeln!(csv, "{},{},{band},{within}", sys.name, report_row(&report)).unwrap();
        let decomposition = decomposition_tables(cfg, &sys, seed, k)?;
        tables.push((format!("decomposition-{}.csv", sys.name), decomposition_csv(&decomposition)));
        rows.push(json!({ "flow": sys.name, "band": band, "within_band": within, "report": report, "decomposition": decomposition }));
    }
    tables.insert(0, ("table.csv".into(), csv));
    Ok(Artifacts {
        report: json!({ "experiment": "vanishing", "config_hash": hash, "quasimorphism": q.name(), "rows": rows }),
        tables,
        plot: plot_script("homogenized estimates", "table.csv", "0:2:3:xtic(1)", "flow", "estimate"),
    })
}

fn decomposition(cfg: &Config) -> Result<Artifacts, RunError> {
    let seed = cfg.required("seed")?;
    let k = cfg.required("k")?;
    let loaded = separate(cfg)?;
    let [(sys, _)] = loaded.as_slice() else {
        return Err(RunError::invalid("hamiltonian", "decomposition takes one autonomous hamiltonian"));
    };
    let tables = decomposition_tables(cfg, sys, seed, k)?;
    Ok(Artifacts {
        report: json!({ "experiment": "decomposition", "config_hash": cfg.hash(), "flow": sys.name, "seed": seed, "tables": tables }),
        tables: vec![("table.csv".into(), decomposition_csv(&tables))],
        plot: "set datafile separator ','\nset key autotitle columnhead\nset xlabel 'k'\nset ylabel 'm_k'\nplot 'table.csv' using 2:3:1 with points pt 7 palette\npause mouse close\n".into(),
    })
}

fn growth(cfg: &Config) -> Result<Artifacts, RunError> {
    let (seed, n, samples) = (cfg.required("seed")?, cfg.required("n")?, cfg.required("samples")?);
    let (m_max, k): (usize, usize) = (cfg.required("m")?, cfg.parsed("k")?.unwrap_or(8));
    let factors: usize = cfg.parsed("factors")?.unwrap_or(1);
    let iso = composite(cfg)?;
    let q = quasimorphism(cfg, braid_domain(cfg, n)?)?;
    let hash = cfg.hash();
    let mut series = estimators::gg_growth(&iso, &q, n, m_max, k, samples, seed)?;
    for r in &mut series.reports {
        r.config_hash = Some(hash.clone());
    }
    let defect = cfg.parsed::<f64>("defect")?.or_else(|| q.defect_bound().map(|d| *d.numer() as f64 / *d.denom() as f64));
    let lipschitz = cfg.parsed::<f64>("lipschitz")?;
    let mut csv = String::from("m,estimate,std_error,c_lower,aut_bound,distance_bound\n");
    let mut certificates = Vec::new();
    for (i, r) in series.reports.iter().enumerate() {
        let m = i + 1;
        let aut = estimators::aut_norm_lower_bound(r, defect).ok();
        let cert = match lipschitz {
            Some(_) => Some(estimators::distance_lower_bound(&series.reports[0], defect, lipschitz, m, factors)?),
            None => None,
        };
        let fmt = |v: Option<f64>| v.map(|v| v.to_string()).unwrap_or_default();
        writeln!(csv, "{m},{},{},{},{},{}", r.estimate, r.std_error, estimators::c_lower(r), fmt(aut), fmt(cert.as_ref().map(|c| c.bound))).unwrap();
        certificates.push(json!({ "m": m, "aut_norm_lower_bound": aut, "distance": cert }));
    }
    Ok(Artifacts {
        report: json!({
            "experiment": "growth",
            "config_hash": hash,
            "series": series,
            "defect": defect,
            "lipschitz": lipschitz,
            "lipschitz_is_hypothesis": lipschitz.is_some(),
            "certificates": certificates,
        }),
        tables: vec![("table.csv".into(), csv)],
        plot: plot_script("growth along powers", "table.csv", "1:2:3", "m", "estimate of f^m"),
    })
}

fn continuity(cfg: &Config) -> Result<Artifacts, RunError> {
    let (seed, n, samples) = (cfg.required("seed")?, cfg.required("n")?, cfg.required("samples")?);
    let k: usize = cfg.parsed("k")?.unwrap_or(8);
    let deltas: Vec<f64> = cfg.list("deltas")?.ok_or(ConfigError::Missing("deltas"))?;
    let loaded = separate(cfg)?;
    let [(sys, _)] = loaded.as_slice() else {
        return Err(RunError::invalid("hamiltonian", "continuity takes one autonomous hamiltonian"));
    };
    let perturbation = systems(cfg, "perturbation")?;
    let [bump] = perturbation.as_slice() else {
        return Err(RunError::invalid("perturbation", "give one perturbation"));
    };
    if bump.system.kind() != sys.kind() {
        return Err(RunError::invalid("perturbation", "perturbation lives on another surface"));
    }
    let q = quasimorphism(cfg, braid_domain(cfg, n)?)?;
    let rows = estimators::continuity_experiment(sys, &bump.system.h, &deltas, &q, n, samples, k, seed)?;
    let mut csv = String::from("delta,difference,std_error,estimate,base_estimate\n");
    for r in &rows {
        writeln!(csv, "{},{},{},{},{}", r.delta, r.difference, r.std_error, r.estimate, r.base_estimate).unwrap();
    }
    Ok(Artifacts {
        report: json!({ "experiment": "continuity", "config_hash": cfg.hash(), "seed": seed, "quasimorphism": q.name(), "k": k, "rows": rows }),
        tables: vec![("table.csv".into(), csv)],
        plot: format!("set logscale x\n{}", plot_script("continuity", "table.csv", "1:2:3", "delta", "|difference|")),
    })
}

fn lipschitz(cfg: &Config) -> Result<Artifacts, RunError> {
    let (seed, n, samples) = (cfg.required("seed")?, cfg.required("n")?, cfg.required("samples")?);
    let p: f64 = cfg.required("p")?;
    let k: usize = cfg.parsed("k")?.unwrap_or(1);
    let flows: Vec<Isotopy> = separate(cfg)?.into_iter().map(|(s, d)| Isotopy::autonomous(s, d)).collect();
    let q = quasimorphism(cfg, braid_domain(cfg, n)?)?;
    let probe = estimators::lipschitz_ratio_probe(&flows, &q, n, p, samples, k, seed)?;
    let mut csv = String::from("flow,estimate,std_error,lp_length,ratio\n");
    for r in &probe.rows {
        writeln!(csv, "{},{},{},{},{}", r.flow, r.estimate, r.std_error, r.lp_length, r.ratio).unwrap();
    }
    Ok(Artifacts {
        report: json!({ "experiment": "lipschitz-probe", "config_hash": cfg.hash(), "seed": seed, "quasimorphism": q.name(), "probe": probe }),
        tables: vec![("table.csv".into(), csv)],
        plot: "set datafile separator ','\nset key autotitle columnhead\nset ylabel '|estimate| / l_p'\nset style data histograms\nplot 'table.csv' using 5:xtic(1)\npause mouse close\n".into(),
    })
}

/// Writes the artifacts under `dir`, creating it if needed.
pub fn write(artifacts: &Artifacts, dir: &Path) -> std::io::Result<()> {
    std::fs::create_dir_all(dir)?;
    let mut json = serde_json::to_string_pretty(&artifacts.report).expect("reports serialize");
    json.push('\n');
    std::fs::write(dir.join("report.json"), json)?;
    for (name, csv) in &artifacts.tables {
        std::fs::write(dir.join(name), csv)?;
    }
    std::fs::write(dir.join("plot.plt"), &artifacts.plot)
}
