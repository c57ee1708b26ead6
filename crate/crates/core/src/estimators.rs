//! Monte-Carlo estimators built on traced braids and loop classes, the
//! Calabi cross-check, decomposition tables and lower-bound certificates.
//!
//! Every sample draws from its own ChaCha8 stream (master seed, stream =
//! sample index) and partial results are summed in index order, so reports
//! do not depend on the number of worker threads.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::braid::make_eta;
use crate::flow::integrate::rk4_step;
use crate::flow::quadrature::QuadratureRule;
use crate::flow::surface::{dot3, norm3, SurfaceKind, SurfaceModel};
use crate::flow::{critical_points, lp_length, FlowError, HamiltonianSystem, Isotopy, ScalarField, SurfacePoint};
use crate::quasimorphisms::surface::Symmetrization;
use crate::quasimorphisms::{vanishing_combination, DomainTag, QmError, Quasimorphism};
use crate::tracing::{
    default_pole, trace_braid, trace_braid_powers, trace_loop_powers, ConfigurationSample, Projector, TraceError,
};
use crate::word::{cyclically_reduce, free_reduce, GroupWord};

/// Resampling attempts allowed for a single sample index.
pub const MAX_ATTEMPTS: usize = 100;
/// Radius of the basepoint circle in projected coordinates.
pub const BASEPOINT_RADIUS: f64 = 0.5;
/// Quadrature order for Calabi and L^p integrals.
pub const QUADRATURE_NODES: usize = 48;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EstimatorError {
    #[error(transparent)]
    Trace(#[from] TraceError),
    #[error(transparent)]
    Flow(#[from] FlowError),
    #[error(transparent)]
    Qm(#[from] QmError),
    #[error("sample {index} rejected {attempts} times in a row (last reason: {reason})")]
    ExcessiveRejection { index: usize, attempts: usize, reason: String },
    #[error("missing constant: {0}")]
    MissingConstant(String),
    #[error("unbounded certificate: positive value with zero defect (a homomorphism witness)")]
    UnboundedCertificate,
    #[error("point is not regular: {0}")]
    NotRegular(String),
    #[error("{0}")]
    Argument(String),
}

impl EstimatorError {
    /// Failures caused by the numerics gates rather than the configuration.
    pub fn is_tolerance_failure(&self) -> bool {
        matches!(
            self,
            EstimatorError::Trace(TraceError::Flow(FlowError::EnergyDrift { .. }))
                | EstimatorError::Flow(FlowError::EnergyDrift { .. })
                | EstimatorError::ExcessiveRejection { .. }
        )
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EstimateReport {
    pub estimate: f64,
    pub samples: usize,
    pub std_error: f64,
    pub k: usize,
    pub seed: u64,
    pub quasimorphism: String,
    pub flow: String,
    /// Defect D, homogenization error D/k, Lipschitz C when supplied.
    pub constants_used: BTreeMap<String, f64>,
    pub rejected_samples: usize,
    pub rejection_reasons: BTreeMap<String, usize>,
    /// Set when rejected / samples exceeds the rejection tolerance.
    pub flagged: bool,
    pub homogenization_error: f64,
    pub config_hash: Option<String>,
}

impl EstimateReport {
    /// Half-width used by the vanishing gates: 3 std errors plus D/k.
    pub fn vanishing_band(&self) -> f64 {
        3.0 * self.std_error + self.homogenization_error
    }
}

/// Mean and standard error (sample deviation over √N).
pub fn mean_and_error(values: &[f64]) -> (f64, f64) {
    let n = values.len();
    if n == 0 {
        return (0.0, 0.0);
    }
    let mean = values.iter().sum::<f64>() / n as f64;
    if n == 1 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1) as f64;
    (mean, (var / n as f64).sqrt())
}

/// Per-sample random stream.
pub fn sample_rng(seed: u64, index: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index as u64);
    rng
}

struct Batch {
    /// One row of values per accepted sample, in index order.
    rows: Vec<Vec<f64>>,
    rejected: usize,
    reasons: BTreeMap<String, usize>,
}

/// Runs `eval` once per sample index with resampling on rejections.
fn run_batch<F>(samples: usize, seed: u64, eval: F) -> Result<Batch, EstimatorError>
where
    F: Fn(&mut ChaCha8Rng) -> Result<Vec<f64>, EstimatorError> + Sync,
{
    let results: Vec<Result<(Vec<f64>, Vec<&'static str>), EstimatorError>> = (0..samples)
        .into_par_iter()
        .map(|index| {
            let mut rng = sample_rng(seed, index);
            let mut reasons = Vec::new();
            loop {
                match eval(&mut rng) {
                    Ok(row) => return Ok((row, reasons)),
                    Err(EstimatorError::Trace(e)) if e.is_rejection() => {
                        reasons.push(e.reason());
                        if reasons.len() >= MAX_ATTEMPTS {
                            return Err(EstimatorError::ExcessiveRejection {
                                index,
                                attempts: reasons.len(),
                                reason: e.reason().into(),
                            });
                        }
                    }
                    Err(e) => return Err(e),
                }
            }
        })
        .collect();
    let mut batch = Batch { rows: Vec::with_capacity(samples), rejected: 0, reasons: BTreeMap::new() };
    for r in results {
        let (row, reasons) = r?;
        batch.rejected += reasons.len();
        for reason in reasons {
            *batch.reasons.entry(reason.to_string()).or_insert(0) += 1;
        }
        batch.rows.push(row);
    }
    Ok(batch)
}

/// Fixed basepoints: `n` points on a circle of radius 0.5 in projected
/// coordinates, turned by `rotation`.
pub fn default_basepoints(surface: &SurfaceModel, n: usize, pole: [f64; 3], rotation: f64) -> Vec<SurfacePoint> {
    let proj = Projector::for_surface(surface, pole);
    (0..n)
        .map(|i| {
            let th = rotation + 0.1 + 2.0 * PI * i as f64 / n as f64;
            proj.lift([BASEPOINT_RADIUS * th.cos(), BASEPOINT_RADIUS * th.sin()])
        })
        .collect()
}

fn check_braid_domain(q: &Quasimorphism, n: usize, surface: &SurfaceModel) -> Result<(), EstimatorError> {
    let ok = match (surface.kind, q.domain()) {
        (SurfaceKind::Disc, DomainTag::ArtinBraid(m)) => m == n,
        (SurfaceKind::Sphere, DomainTag::ArtinBraid(m) | DomainTag::SphericalBraid(m)) => m == n,
        _ => false,
    };
    if !ok {
        return Err(EstimatorError::Argument(format!(
            "{} does not evaluate {n}-strand braids on the {}",
            q,
            surface.kind.name()
        )));
    }
    Ok(())
}

/// Braid sampling set-up shared by the GG estimators.
#[derive(Clone, Debug)]
pub struct BraidSampling {
    pub n: usize,
    pub pole: [f64; 3],
    pub basepoints: Vec<SurfacePoint>,
}

impl BraidSampling {
    pub fn for_isotopy(iso: &Isotopy, n: usize) -> Self {
        Self::rotated(iso, n, 0.0)
    }

    /// Basepoints turned by a fixed rotation of the projected plane.
    pub fn rotated(iso: &Isotopy, n: usize, rotation: f64) -> Self {
        let pole = default_pole(&iso.segments[0].system);
        let basepoints = default_basepoints(iso.surface(), n, pole, rotation);
        BraidSampling { n, pole, basepoints }
    }

    fn draw(&self, surface: &SurfaceModel, sep: f64, rng: &mut ChaCha8Rng) -> Result<ConfigurationSample, TraceError> {
        let points = (0..self.n).map(|_| surface.sample_uniform(|| rng.random::<f64>())).collect();
        ConfigurationSample::new(surface, points, self.basepoints.clone(), sep)
    }
}

fn base_report(q: &Quasimorphism, flow: &str, seed: u64, k: usize, batch: &Batch, column: usize, max_reject: f64) -> EstimateReport {
    let values: Vec<f64> = batch.rows.iter().map(|r| r[column]).collect();
    let (mean, err) = mean_and_error(&values);
    let mut constants = BTreeMap::new();
    if let Some(d) = q.defect_bound() {
        constants.insert("defect".to_string(), q_to_f64(d));
    }
    let samples = values.len();
    EstimateReport {
        estimate: mean,
        samples,
        std_error: err,
        k,
        seed,
        quasimorphism: q.name().to_string(),
        flow: flow.to_string(),
        constants_used: constants,
        rejected_samples: batch.rejected,
        rejection_reasons: batch.reasons.clone(),
        flagged: samples > 0 && batch.rejected as f64 > max_reject * samples as f64,
        homogenization_error: 0.0,
        config_hash: None,
    }
}

fn q_to_f64(v: crate::quasimorphisms::Q) -> f64 {
    *v.numer() as f64 / *v.denom() as f64
}

fn flow_name(iso: &Isotopy) -> String {
    let names: Vec<String> = iso.segments.iter().map(|s| format!("{}[{}]", s.system.name, s.duration)).collect();
    names.join(" then ")
}

/// Values q(braid of iso^j) / j for j = 1..=k_max, one row per sample.
fn gg_rows(
    isos: &[Isotopy],
    q: &Quasimorphism,
    sampling: &BraidSampling,
    k: usize,
    samples: usize,
    seed: u64,
) -> Result<Batch, EstimatorError> {
    let surface = isos[0].surface().clone();
    check_braid_domain(q, sampling.n, &surface)?;
    let sep = isos[0].segments[0].system.tolerances.separation_tol;
    run_batch(samples, seed, |rng| {
        let x = sampling.draw(&surface, sep, rng)?;
        isos.iter()
            .map(|iso| {
                let braid = if k == 1 { trace_braid(iso, &x, sampling.pole)? } else { trace_braid(&iso.power(k), &x, sampling.pole)? };
                Ok(q.evaluate_f64(braid.braid.word())? / k as f64)
            })
            .collect()
    })
}

/// Mean of q over braids traced from uniform n-point samples.
pub fn gg_estimate(iso: &Isotopy, q: &Quasimorphism, n: usize, samples: usize, seed: u64) -> Result<EstimateReport, EstimatorError> {
    gg_estimate_with(iso, q, &BraidSampling::for_isotopy(iso, n), samples, seed)
}

pub fn gg_estimate_with(
    iso: &Isotopy,
    q: &Quasimorphism,
    sampling: &BraidSampling,
    samples: usize,
    seed: u64,
) -> Result<EstimateReport, EstimatorError> {
    gg_power_with(iso, q, sampling, 1, samples, seed)
}

/// gg_estimate of `iso^k`, divided by k, with the D/k term reported.
pub fn gg_power(iso: &Isotopy, q: &Quasimorphism, n: usize, samples: usize, k: usize, seed: u64) -> Result<EstimateReport, EstimatorError> {
    gg_power_with(iso, q, &BraidSampling::for_isotopy(iso, n), k, samples, seed)
}

pub fn gg_power_with(
    iso: &Isotopy,
    q: &Quasimorphism,
    sampling: &BraidSampling,
    k: usize,
    samples: usize,
    seed: u64,
) -> Result<EstimateReport, EstimatorError> {
    if k == 0 {
        return Err(EstimatorError::Argument("k must be at least 1".into()));
    }
    let batch = gg_rows(std::slice::from_ref(iso), q, sampling, k, samples, seed)?;
    let max_reject = iso.segments[0].system.tolerances.max_reject_fraction;
    let mut report = base_report(q, &flow_name(iso), seed, k, &batch, 0, max_reject);
    finish_homogenized(&mut report, q, k);
    Ok(report)
}

fn finish_homogenized(report: &mut EstimateReport, q: &Quasimorphism, k: usize) {
    if k > 1 {
        let d = q.defect_bound().map(q_to_f64).unwrap_or(f64::INFINITY);
        report.homogenization_error = d / k as f64;
        report.constants_used.insert("homogenization_error".into(), report.homogenization_error);
    }
}

/// Homogenized estimate for an autonomous flow: the duration-k flow,
/// divided by k.
pub fn gg_homogenized(
    sys: Arc<HamiltonianSystem>,
    q: &Quasimorphism,
    n: usize,
    samples: usize,
    k: usize,
    seed: u64,
) -> Result<EstimateReport, EstimatorError> {
    if k == 0 {
        return Err(EstimatorError::Argument("k must be at least 1".into()));
    }
    let iso = Isotopy::autonomous(sys, k as f64);
    let sampling = BraidSampling::for_isotopy(&iso, n);
    let batch = gg_rows(std::slice::from_ref(&iso), q, &sampling, 1, samples, seed)?;
    let max_reject = iso.segments[0].system.tolerances.max_reject_fraction;
    let mut report = base_report(q, &iso.segments[0].system.name, seed, k, &batch, 0, max_reject);
    report.estimate /= k as f64;
    report.std_error /= k as f64;
    finish_homogenized(&mut report, q, k);
    Ok(report)
}

/// Estimates of Φ̄(f^m) for m = 1..=m_max with a least-squares line through
/// them.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GrowthSeries {
    pub reports: Vec<EstimateReport>,
    /// Mean of the per-sample least-squares slopes.
    pub slope: f64,
    pub slope_error: f64,
    pub intercept: f64,
    /// Coefficient of determination of the line through the mean series.
    pub r_squared: f64,
}

/// Least-squares (slope, intercept) of ys against 1, 2, ..., len.
fn line_fit(ys: &[f64]) -> (f64, f64) {
    let n = ys.len() as f64;
    let mx = (n + 1.0) / 2.0;
    let my = ys.iter().sum::<f64>() / n;
    let (sxy, sxx) = ys.iter().enumerate().fold((0.0, 0.0), |(sxy, sxx), (i, y)| {
        let dx = (i + 1) as f64 - mx;
        (sxy + dx * (y - my), sxx + dx * dx)
    });
    let slope = if sxx > 0.0 { sxy / sxx } else { 0.0 };
    (slope, my - slope * mx)
}

/// gg_power of `iso^m` for m = 1..=m_max from one pass per sample, so the
/// growth series shares its samples.
pub fn gg_growth(
    iso: &Isotopy,
    q: &Quasimorphism,
    n: usize,
    m_max: usize,
    k: usize,
    samples: usize,
    seed: u64,
) -> Result<GrowthSeries, EstimatorError> {
    if k == 0 || m_max == 0 {
        return Err(EstimatorError::Argument("k and m must be at least 1".into()));
    }
    let sampling = BraidSampling::for_isotopy(iso, n);
    let surface = iso.surface().clone();
    check_braid_domain(q, n, &surface)?;
    let sep = iso.segments[0].system.tolerances.separation_tol;
    let batch = run_batch(samples, seed, |rng| {
        let x = sampling.draw(&surface, sep, rng)?;
        let braids = trace_braid_powers(iso, &x, sampling.pole, m_max * k)?;
        (1..=m_max)
            .map(|m| Ok(q.evaluate_f64(braids[m * k - 1].braid.word())? / k as f64))
            .collect()
    })?;
    let max_reject = iso.segments[0].system.tolerances.max_reject_fraction;
    let reports: Vec<EstimateReport> = (1..=m_max)
        .map(|m| {
            let mut r = base_report(q, &format!("({})^{m}", flow_name(iso)), seed, k, &batch, m - 1, max_reject);
            finish_homogenized(&mut r, q, k);
            r
        })
        .collect();
    let slopes: Vec<f64> = batch.rows.iter().map(|row| line_fit(row).0).collect();
    let (slope, slope_error) = mean_and_error(&slopes);
    let means: Vec<f64> = reports.iter().map(|r| r.estimate).collect();
    let (fit_slope, intercept) = line_fit(&means);
    let my = means.iter().sum::<f64>() / means.len() as f64;
    let (ss_res, ss_tot) = means.iter().enumerate().fold((0.0, 0.0), |(res, tot), (i, y)| {
        let fit = intercept + fit_slope * (i + 1) as f64;
        (res + (y - fit).powi(2), tot + (y - my).powi(2))
    });
    let r_squared = if ss_tot > 0.0 { 1.0 - ss_res / ss_tot } else { 1.0 };
    Ok(GrowthSeries { reports, slope, slope_error, intercept, r_squared })
}

/// Area-weighted mean of q(loop class of iso^k at x)/k over the octagon.
pub fn polterovich_estimate(iso: &Isotopy, q: &Quasimorphism, samples: usize, k: usize, seed: u64) -> Result<EstimateReport, EstimatorError> {
    let surface = iso.surface().clone();
    if surface.kind != SurfaceKind::PolygonGenus2 {
        return Err(EstimatorError::Argument("the loop-class estimator runs on the octagon".into()));
    }
    let DomainTag::SurfaceGroup(genus) = q.domain() else {
        return Err(EstimatorError::Argument(format!("{q} is not a surface-group quasimorphism")));
    };
    if genus != 2 || k == 0 {
        return Err(EstimatorError::Argument("need genus 2 and k ≥ 1".into()));
    }
    let sym = Symmetrization::new(genus);
    let basepoint = SurfacePoint::plane(0.0, 0.0);
    let batch = run_batch(samples, seed, |rng| {
        let x = surface.sample_uniform(|| rng.random::<f64>());
        let loops = trace_loop_powers(iso, x, basepoint, &sym, k)?;
        let word = loops.last().map(|l| l.word.word().clone()).unwrap_or_else(|| GroupWord::empty(2 * genus));
        Ok(vec![q.evaluate_f64(&word)? / k as f64])
    })?;
    let max_reject = iso.segments[0].system.tolerances.max_reject_fraction;
    let mut report = base_report(q, &flow_name(iso), seed, k, &batch, 0, max_reject);
    finish_homogenized(&mut report, q, k);
    Ok(report)
}

/// ∫H ω over the disc times the duration.
pub fn calabi_direct(sys: &HamiltonianSystem, duration: f64) -> Result<f64, EstimatorError> {
    if sys.kind() != SurfaceKind::Disc {
        return Err(EstimatorError::Argument("the Calabi cross-check runs on the disc".into()));
    }
    let rule = QuadratureRule::for_surface(&sys.surface, QUADRATURE_NODES);
    Ok(duration * rule.integrate(|p| sys.value(p)))
}

/// Rademacher, exponent sum and five homogenized Brooks counts on B₃,
/// combined to vanish on the η images and to be nonzero on probe words.
pub fn corrected_braid_quasimorphism() -> Result<Quasimorphism, EstimatorError> {
    let b3 = DomainTag::ArtinBraid(3);
    let mut family = vec![Quasimorphism::rademacher(b3)?, Quasimorphism::exponent_sum(b3)?];
    for pattern in ["1,2", "1,-2", "1,2,1,-2", "1,2,1,2,1,2,1,2,1,-2", "1,2,1,2,1,-2"] {
        family.push(Quasimorphism::from_name(&format!("brooks:{pattern}"), b3)?);
    }
    let targets = (2..=3).map(|i| make_eta(i, 3).map(|b| b.into_word())).collect::<Result<Vec<_>, _>>().map_err(TraceError::from)?;
    vanishing_combination(&family, &targets)?.ok_or_else(|| EstimatorError::Argument("family has no vanishing combination".into()))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DecompositionRow {
    pub k: usize,
    pub m: i64,
    pub remainder: usize,
    pub word_len: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DecompositionTable {
    pub point: SurfacePoint,
    /// Critical point enclosed by the level curve (braid flows only).
    pub anchor: Option<SurfacePoint>,
    /// Level-curve period; `None` on a locally constant region.
    pub period: Option<f64>,
    /// Measured turns per unit time, 1/period.
    pub frequency: f64,
    pub level_word: Vec<i64>,
    pub rows: Vec<DecompositionRow>,
}

/// One period of the level curve through x: the return time and the path
/// (ambient coordinates) over it.
pub fn level_period(sys: &HamiltonianSystem, x: SurfacePoint, max_time: f64) -> Result<(f64, Vec<SurfacePoint>), EstimatorError> {
    let h = sys.default_dt();
    let x3 = x.ambient();
    let first = rk4_step(sys, &x, h)?.point.ambient();
    let v = [first[0] - x3[0], first[1] - x3[1], first[2] - x3[2]];
    let step_len = norm3(v);
    if step_len == 0.0 {
        return Err(EstimatorError::NotRegular("fixed point".into()));
    }
    let v = v.map(|c| c / step_len);
    let (h0, tol) = (sys.value(&x), sys.energy_tol());
    let mut path = vec![x];
    let (mut p, mut t, mut max_d, mut prev_s) = (x, 0.0, 0.0f64, 0.0);
    let steps = (max_time / h).ceil() as usize;
    for _ in 0..steps {
        let st = rk4_step(sys, &p, h)?;
        if (st.energy - h0).abs() > tol {
            return Err(FlowError::EnergyDrift { drift: (st.energy - h0).abs(), tol }.into());
        }
        let q3 = st.point.ambient();
        let d3 = [q3[0] - x3[0], q3[1] - x3[1], q3[2] - x3[2]];
        let (d, s) = (norm3(d3), dot3(d3, v));
        if max_d > 20.0 * step_len && d < 0.25 * max_d && prev_s < 0.0 && s >= 0.0 {
            let period = t + h * (-prev_s / (s - prev_s));
            return Ok((period, path));
        }
        max_d = max_d.max(d);
        prev_s = s;
        p = st.point;
        t += h;
        path.push(p);
    }
    Err(EstimatorError::NotRegular(format!("level curve did not close within time {max_time}")))
}

fn winding_around(path: &[SurfacePoint], proj: &Projector, c: [f64; 2]) -> i64 {
    let angle = |p: &SurfacePoint| {
        let w = proj.project(p);
        (w[1] - c[1]).atan2(w[0] - c[0])
    };
    let mut total = 0.0;
    let mut prev = angle(&path[0]);
    for p in path.iter().skip(1).chain(std::iter::once(&path[0])) {
        let a = angle(p);
        let mut d = a - prev;
        while d > PI {
            d -= 2.0 * PI;
        }
        while d < -PI {
            d += 2.0 * PI;
        }
        total += d;
        prev = a;
    }
    (total / (2.0 * PI)).round() as i64
}

/// Relative speed below which a point counts as critical, against Ω_max.
pub const REGULARITY_THRESHOLD: f64 = 1e-3;
/// Level curves must close within this many timescales.
pub const MAX_PERIODS: f64 = 400.0;

/// Table of (m_k, remainder_k) for k = 1..=k_max: the traced class of the
/// duration-k flow split against the class of the level curve through x.
pub fn decomposition_verify(sys: Arc<HamiltonianSystem>, x: SurfacePoint, k_max: usize) -> Result<DecompositionTable, EstimatorError> {
    let speed = sys.field_norm(&x);
    if speed == 0.0 {
        let rows = (1..=k_max).map(|k| DecompositionRow { k, m: 0, remainder: 0, word_len: 0 }).collect();
        return Ok(DecompositionTable { point: x, anchor: None, period: None, frequency: 0.0, level_word: vec![], rows });
    }
    if speed < REGULARITY_THRESHOLD * sys.omega_max() {
        return Err(EstimatorError::NotRegular(format!("|X_H| = {speed:e} below the regularity threshold")));
    }
    let (period, path) = level_period(&sys, x, MAX_PERIODS * sys.timescale())?;
    let unit = Isotopy::autonomous(sys.clone(), 1.0);
    let (level, anchor, words) = match sys.kind() {
        SurfaceKind::PolygonGenus2 => {
            let sym = Symmetrization::new(2);
            let level = trace_loop_powers(&Isotopy::autonomous(sys.clone(), period), x, x, &sym, 1)?.remove(0).word.into_word();
            let words = trace_loop_powers(&unit, x, x, &sym, k_max)?.into_iter().map(|l| l.word.into_word()).collect::<Vec<_>>();
            (level, None, words)
        }
        _ => {
            let pole = default_pole(&sys);
            let proj = Projector::for_surface(&sys.surface, pole);
            let tol = sys.tolerances;
            let h_x = sys.value(&x);
            let anchor = critical_points(&sys, 60)
                .into_iter()
                .filter(|c| proj.pole_distance(&c.point) > tol.pole_tol)
                .filter(|c| winding_around(&path, &proj, proj.project(&c.point)) != 0)
                .min_by(|a, b| (a.value - h_x).abs().total_cmp(&(b.value - h_x).abs()))
                .map(|c| c.point)
                .ok_or_else(|| EstimatorError::NotRegular("level curve encloses no usable critical point".into()))?;
            let sample = ConfigurationSample::based_at_self(&sys.surface, vec![x, anchor], tol.separation_tol)?;
            let level = trace_braid(&Isotopy::autonomous(sys.clone(), period), &sample, pole)?.braid.into_word();
            let words = trace_braid_powers(&unit, &sample, pole, k_max)?.into_iter().map(|b| b.braid.into_word()).collect::<Vec<_>>();
            (level, Some(anchor), words)
        }
    };
    let rows = words
        .iter()
        .enumerate()
        .map(|(i, w)| {
            let (m, remainder) = crate::tracing::winding_decomposition(w, &level);
            DecompositionRow { k: i + 1, m, remainder, word_len: w.len() }
        })
        .collect();
    Ok(DecompositionTable { point: x, anchor, period: Some(period), frequency: 1.0 / period, level_word: level.to_signed(), rows })
}

/// Distinct level-curve classes (cyclic cores up to rotation and inversion)
/// through `samples` uniform regular points of an octagon flow.
pub fn traced_level_classes(sys: Arc<HamiltonianSystem>, samples: usize, seed: u64) -> Result<Vec<GroupWord>, EstimatorError> {
    if sys.kind() != SurfaceKind::PolygonGenus2 {
        return Err(EstimatorError::Argument("level classes are traced on the octagon".into()));
    }
    let sym = Symmetrization::new(2);
    let max_time = MAX_PERIODS * sys.timescale();
    let batch = run_batch(samples, seed, |rng| {
        let x = sys.surface.sample_uniform(|| rng.random::<f64>());
        if sys.field_norm(&x) < REGULARITY_THRESHOLD * sys.omega_max() {
            return Ok(vec![]);
        }
        let Ok((period, _)) = level_period(&sys, x, max_time) else { return Ok(vec![]) };
        let word = trace_loop_powers(&Isotopy::autonomous(sys.clone(), period), x, x, &sym, 1)?.remove(0).word.into_word();
        Ok(word.to_signed().into_iter().map(|v| v as f64).collect())
    })?;
    let mut classes: Vec<GroupWord> = Vec::new();
    for row in batch.rows {
        let signed: Vec<i64> = row.into_iter().map(|v| v as i64).collect();
        let w = GroupWord::from_signed(4, &signed).map_err(TraceError::from)?;
        let (core, _) = cyclically_reduce(&free_reduce(&w));
        if core.is_empty() {
            continue;
        }
        let key = canonical_cyclic(&core);
        if !classes.iter().any(|c| canonical_cyclic(c) == key) {
            classes.push(core);
        }
    }
    Ok(classes)
}

/// Lexicographically least rotation of the word or of its inverse.
fn canonical_cyclic(w: &GroupWord) -> Vec<i64> {
    let rotations = |v: Vec<i64>| -> Vec<Vec<i64>> {
        (0..v.len()).map(|i| v[i..].iter().chain(&v[..i]).copied().collect()).collect()
    };
    let s = w.to_signed();
    let inv: Vec<i64> = s.iter().rev().map(|l| -l).collect();
    rotations(s).into_iter().chain(rotations(inv)).min().unwrap_or_default()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LowerBoundCertificate {
    pub target: String,
    pub bound: f64,
    pub estimate: f64,
    pub std_error: f64,
    pub homogenization_error: f64,
    pub c_lower: f64,
    pub defect: f64,
    /// User-supplied; an external hypothesis, never derived here.
    pub lipschitz: f64,
    pub m: usize,
    pub k: usize,
}

/// |estimate| − 2·std_error − homogenization error.
pub fn c_lower(report: &EstimateReport) -> f64 {
    report.estimate.abs() - 2.0 * report.std_error - report.homogenization_error
}

/// max(0, (c_lower·m − k·D)/C): a lower bound on the L^p distance from f^m
/// to products of k autonomous maps.
pub fn distance_lower_bound(
    report: &EstimateReport,
    defect: Option<f64>,
    lipschitz: Option<f64>,
    m: usize,
    k: usize,
) -> Result<LowerBoundCertificate, EstimatorError> {
    let d = defect.ok_or_else(|| EstimatorError::MissingConstant("defect D".into()))?;
    let c = lipschitz.ok_or_else(|| EstimatorError::MissingConstant("Lipschitz constant C".into()))?;
    if !(d >= 0.0) || !(c > 0.0) || m == 0 || k == 0 {
        return Err(EstimatorError::Argument(format!("need D ≥ 0, C > 0, m ≥ 1, k ≥ 1 (got D={d}, C={c}, m={m}, k={k})")));
    }
    let cl = c_lower(report);
    let bound = ((cl * m as f64 - k as f64 * d) / c).max(0.0);
    Ok(LowerBoundCertificate {
        target: format!("d_p(({})^{m}, Aut^{k})", report.flow),
        bound,
        estimate: report.estimate,
        std_error: report.std_error,
        homogenization_error: report.homogenization_error,
        c_lower: cl,
        defect: d,
        lipschitz: c,
        m,
        k,
    })
}

/// ‖f‖_Aut ≥ c_lower/D + 1 when c_lower > 0, else 1.
pub fn aut_norm_lower_bound(report: &EstimateReport, defect: Option<f64>) -> Result<f64, EstimatorError> {
    let d = defect.ok_or_else(|| EstimatorError::MissingConstant("defect D".into()))?;
    let cl = c_lower(report);
    if cl <= 0.0 {
        return Ok(1.0);
    }
    if d == 0.0 {
        return Err(EstimatorError::UnboundedCertificate);
    }
    if d < 0.0 {
        return Err(EstimatorError::Argument(format!("defect must be positive, got {d}")));
    }
    Ok(cl / d + 1.0)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ContinuityRow {
    pub delta: f64,
    pub base_estimate: f64,
    pub estimate: f64,
    /// |mean of the paired differences|.
    pub difference: f64,
    /// Standard error of the paired differences.
    pub std_error: f64,
}

/// Homogenized estimates for H and H + δ·bump at common samples.
#[allow(clippy::too_many_arguments)]
pub fn continuity_experiment(
    sys: &HamiltonianSystem,
    perturbation: &ScalarField,
    deltas: &[f64],
    q: &Quasimorphism,
    n: usize,
    samples: usize,
    k: usize,
    seed: u64,
) -> Result<Vec<ContinuityRow>, EstimatorError> {
    if k == 0 {
        return Err(EstimatorError::Argument("k must be at least 1".into()));
    }
    let base = Arc::new(sys.clone());
    let mut isos = vec![Isotopy::autonomous(base.clone(), k as f64)];
    for &delta in deltas {
        let h = sys.h.clone().plus(perturbation.clone().scaled(delta));
        let perturbed = HamiltonianSystem::with_tolerances(format!("{}+{delta}·bump", sys.name), sys.surface.clone(), h, sys.boundary_flat, sys.tolerances);
        isos.push(Isotopy::autonomous(Arc::new(perturbed), k as f64));
    }
    let sampling = BraidSampling::for_isotopy(&isos[0], n);
    let batch = gg_rows(&isos, q, &sampling, 1, samples, seed)?;
    let scale = k as f64;
    let (base_mean, _) = mean_and_error(&batch.rows.iter().map(|r| r[0] / scale).collect::<Vec<_>>());
    Ok(deltas
        .iter()
        .enumerate()
        .map(|(i, &delta)| {
            let column: Vec<f64> = batch.rows.iter().map(|r| r[i + 1] / scale).collect();
            let diffs: Vec<f64> = batch.rows.iter().map(|r| (r[i + 1] - r[0]) / scale).collect();
            let (estimate, _) = mean_and_error(&column);
            let (diff, err) = mean_and_error(&diffs);
            ContinuityRow { delta, base_estimate: base_mean, estimate, difference: diff.abs(), std_error: err }
        })
        .collect())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LipschitzRow {
    pub flow: String,
    pub estimate: f64,
    pub std_error: f64,
    pub lp_length: f64,
    pub ratio: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LipschitzProbe {
    pub p: f64,
    pub rows: Vec<LipschitzRow>,
    pub max_ratio: f64,
    /// Always false: l_p of the generating path only bounds ‖h‖_p above,
    /// so the ratio is a lower bound on the best constant.
    pub certified: bool,
}

/// |Φ̂|/l_p per flow and the maximum over flows.
pub fn lipschitz_ratio_probe(
    flows: &[Isotopy],
    q: &Quasimorphism,
    n: usize,
    p: f64,
    samples: usize,
    k: usize,
    seed: u64,
) -> Result<LipschitzProbe, EstimatorError> {
    if !(p >= 1.0) {
        return Err(EstimatorError::Argument(format!("p must be at least 1, got {p}")));
    }
    let rows = flows
        .iter()
        .map(|iso| {
            let length = lp_length(iso, p, QUADRATURE_NODES / 2)?;
            if !(length > 0.0) {
                return Err(EstimatorError::Argument(format!("{} has zero L^p length", flow_name(iso))));
            }
            let report = gg_power(iso, q, n, samples, k, seed)?;
            Ok(LipschitzRow {
                flow: flow_name(iso),
                estimate: report.estimate,
                std_error: report.std_error,
                lp_length: length,
                ratio: report.estimate.abs() / length,
            })
        })
        .collect::<Result<Vec<_>, EstimatorError>>()?;
    let max_ratio = rows.iter().map(|r| r.ratio).fold(0.0, f64::max);
    Ok(LipschitzProbe { p, rows, max_ratio, certified: false })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mean_and_error_basics() {
        assert_eq!(mean_and_error(&[]), (0.0, 0.0));
        assert_eq!(mean_and_error(&[2.0]), (2.0, 0.0));
        let (m, e) = mean_and_error(&[1.0, 3.0]);
        assert_eq!(m, 2.0);
        assert!((e - 1.0).abs() < 1e-15);
    }

    #[test]
    fn canonical_cyclic_identifies_rotations_and_inverses() {
        let a = GroupWord::from_signed(4, &[1, 2, -1, -2]).unwrap();
        let b = GroupWord::from_signed(4, &[-1, -2, 1, 2]).unwrap();
        let c = GroupWord::from_signed(4, &[2, 1, -2, -1]).unwrap();
        assert_eq!(canonical_cyclic(&a), canonical_cyclic(&b));
        assert_eq!(canonical_cyclic(&a), canonical_cyclic(&c));
        assert_ne!(canonical_cyclic(&a), canonical_cyclic(&GroupWord::from_signed(4, &[1, 2]).unwrap()));
    }

    #[test]
    fn line_fit_recovers_lines() {
        let (a, b) = line_fit(&[2.5, 4.5, 6.5, 8.5]);
        assert!((a - 2.0).abs() < 1e-12 && (b - 0.5).abs() < 1e-12);
        assert_eq!(line_fit(&[3.0]), (0.0, 3.0));
    }

    #[test]
    fn streams_are_independent_of_order() {
        let a: f64 = sample_rng(7, 3).random();
        let _: f64 = sample_rng(7, 2).random();
        let b: f64 = sample_rng(7, 3).random();
        assert_eq!(a, b);
        assert_ne!(a, sample_rng(7, 4).random::<f64>());
    }
}
