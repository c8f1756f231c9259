//! Explicit integration of the combinatorial Ricci, Calabi, fractional
//! Calabi and p-th Calabi flows, with surgery whenever the weighted Delaunay
//! condition fails.

use std::f64::consts::PI;
use std::fmt;
use std::io::Write;

use serde::Serialize;

use crate::curvature::{calabi_energy, curvature, jacobian, CurvatureVector};
use crate::error::{Error, Result};
use crate::metric::DecoratedMetric;
use crate::surgery::{default_max_flips, delaunay_violations, make_delaunay, SurgeryEvent};

pub const DEFAULT_TOL: f64 = 1e-8;
pub const DEFAULT_MAX_STEPS: usize = 1_000_000;
pub const MAX_HALVINGS: u32 = 30;
/// Absolute Gauss-Bonnet tolerance for targets.
pub const GAUSS_BONNET_TOL: f64 = 1e-9;
/// Resolution in the step fraction when locating a Delaunay crossing.
const CROSSING_RESOLUTION: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub enum FlowKind {
    Calabi,
    Fractional(f64),
    PCalabi(f64),
    Ricci,
}

impl FlowKind {
    /// Fractional order zero is the Ricci flow and shares its default.
    pub fn default_step(self) -> f64 {
        match self {
            FlowKind::Ricci => 0.1,
            FlowKind::Fractional(0.0) => 0.1,
            _ => 0.01,
        }
    }

    /// Whether the flow is the gradient flow of a quadratic form in `K − K̄`
    /// along which the Calabi energy cannot increase.
    fn energy_monotone(self) -> bool {
        !matches!(self, FlowKind::PCalabi(_))
    }
}

impl fmt::Display for FlowKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FlowKind::Calabi => write!(f, "calabi"),
            FlowKind::Fractional(s) => write!(f, "fractional(s={s})"),
            FlowKind::PCalabi(p) => write!(f, "p-calabi(p={p})"),
            FlowKind::Ricci => write!(f, "ricci"),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct FlowConfig {
    pub kind: FlowKind,
    pub target: Vec<f64>,
    /// Initial step size.
    pub step: f64,
    pub tol: f64,
    pub max_steps: usize,
    pub surgery: bool,
    /// Flip budget of a single `make_delaunay` call; `None` means
    /// `100·|E|`.
    pub max_flips_per_step: Option<usize>,
    /// Factor applied to `h` after a step accepted without halving. `1.0`
    /// keeps the step fixed.
    pub growth: f64,
}

impl FlowConfig {
    pub fn new(kind: FlowKind, target: Vec<f64>) -> Self {
        FlowConfig {
            kind,
            target,
            step: kind.default_step(),
            tol: DEFAULT_TOL,
            max_steps: DEFAULT_MAX_STEPS,
            surgery: true,
            max_flips_per_step: None,
            growth: 2.0,
        }
    }

    /// Validates the parameters and the target against `metric`.
    pub fn validate(&self, metric: &DecoratedMetric) -> Result<()> {
        match self.kind {
            FlowKind::Fractional(s) if !s.is_finite() => {
                return Err(Error::InvalidConfig(format!("fractional order s = {s}")))
            }
            FlowKind::PCalabi(p) if !(p > 1.0) || !p.is_finite() => return Err(Error::InvalidExponent(p)),
            _ => {}
        }
        if !(self.step > 0.0) || !self.step.is_finite() {
            return Err(Error::InvalidConfig(format!("step size {}", self.step)));
        }
        if !(self.tol > 0.0) {
            return Err(Error::InvalidConfig(format!("tolerance {}", self.tol)));
        }
        if !(self.growth >= 1.0) || !self.growth.is_finite() {
            return Err(Error::InvalidConfig(format!("growth factor {}", self.growth)));
        }
        validate_target(metric, &self.target)
    }
}

/// Checks that `target` has one finite entry per vertex, each below `2π`,
/// summing to `2πχ`.
pub fn validate_target(metric: &DecoratedMetric, target: &[f64]) -> Result<()> {
    let n = metric.num_vertices();
    if target.len() != n {
        return Err(Error::NonAdmissibleTarget(format!(
            "expected {n} entries, found {}",
            target.len()
        )));
    }
    if let Some((i, k)) = target.iter().enumerate().find(|(_, k)| !(**k < 2.0 * PI)) {
        return Err(Error::NonAdmissibleTarget(format!(
            "vertex {i}: target {k} is not below 2π"
        )));
    }
    let chi = metric.mesh().euler_characteristic();
    let residual = target.iter().sum::<f64>() - 2.0 * PI * chi as f64;
    if !(residual.abs() <= GAUSS_BONNET_TOL) {
        return Err(Error::NonAdmissibleTarget(format!(
            "Gauss-Bonnet residual {residual:e} for Euler characteristic {chi}"
        )));
    }
    Ok(())
}

/// Constant target `2πχ/N`.
pub fn uniform_target(metric: &DecoratedMetric) -> Result<Vec<f64>> {
    let n = metric.num_vertices();
    let value = 2.0 * PI * metric.mesh().euler_characteristic() as f64 / n as f64;
    let target = vec![value; n];
    validate_target(metric, &target)?;
    Ok(target)
}

fn max_abs(v: &[f64]) -> f64 {
    v.iter().fold(0.0_f64, |m, x| m.max(x.abs()))
}

fn residual(k: &CurvatureVector, target: &[f64]) -> Vec<f64> {
    k.0.iter().zip(target).map(|(a, b)| a - b).collect()
}

/// `du/dt` at the current state.
pub fn velocity(metric: &DecoratedMetric, config: &FlowConfig) -> Result<Vec<f64>> {
    let k = curvature(metric)?;
    velocity_from(metric, config.kind, &residual(&k, &config.target))
}

fn velocity_from(metric: &DecoratedMetric, kind: FlowKind, e: &[f64]) -> Result<Vec<f64>> {
    if kind == FlowKind::Ricci || kind == FlowKind::Fractional(0.0) {
        return Ok(e.iter().map(|x| -x).collect());
    }
    let l = jacobian(metric)?;
    match kind {
        FlowKind::Calabi => Ok(l.apply_laplacian(e)),
        FlowKind::Fractional(s) => l.apply_fractional(s, e),
        FlowKind::PCalabi(p) => l.apply_p_laplacian(p, e),
        FlowKind::Ricci => unreachable!(),
    }
}

/// Trapezoidal estimate of `∫ Σ (K − K̄) du` along a straight step, from the
/// residuals at both ends.
pub fn potential_increment(e0: &[f64], e1: &[f64], du: &[f64]) -> f64 {
    e0.iter()
        .zip(e1)
        .zip(du)
        .map(|((a, b), d)| 0.5 * (a + b) * d)
        .sum()
}

/// Relative size of changes treated as floating-point noise by the
/// acceptance tests of a step.
const ROUNDOFF: f64 = 1e-12;

fn potential_magnitude(e0: &[f64], e1: &[f64], du: &[f64]) -> f64 {
    e0.iter()
        .zip(e1)
        .zip(du)
        .map(|((a, b), d)| 0.5 * (a.abs() + b.abs()) * d.abs())
        .sum()
}

/// Energy change attributable to rounding in angle sums of size `2π`.
fn energy_noise(c0: f64, n: usize) -> f64 {
    let k_noise = 64.0 * f64::EPSILON * 2.0 * PI;
    ROUNDOFF * c0 + 0.5 * n as f64 * k_noise * k_noise
}

/// Curvature and area change across one `make_delaunay` call.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct SurgeryCheck {
    pub step: usize,
    pub flips: usize,
    /// `max_i |K_i(after) − K_i(before)|`.
    pub curvature_jump: f64,
    pub area_relative_change: f64,
}

#[derive(Clone, Debug)]
pub struct StepOutcome {
    pub metric: DecoratedMetric,
    /// Step size actually taken, after halvings.
    pub h: f64,
    pub halvings: u32,
    /// Fraction of the step taken when it was cut at a Delaunay crossing.
    pub fraction: f64,
    pub curvature: CurvatureVector,
    pub energy: f64,
    pub potential_increment: f64,
    pub events: Vec<SurgeryEvent>,
    pub check: Option<SurgeryCheck>,
}

enum Probe {
    /// Admissible and, if required, weighted Delaunay.
    Inside,
    /// Admissible with geometry defined, but some edge violates.
    Violating,
    Invalid(Error),
}

fn probe(metric: &DecoratedMetric, delaunay: bool) -> Probe {
    if let Err(e) = metric.require_admissible() {
        return Probe::Invalid(e);
    }
    if !delaunay {
        return match metric.effective().and_then(|eff| eff.geometry()) {
            Ok(_) => Probe::Inside,
            Err(e) => Probe::Invalid(e),
        };
    }
    match delaunay_violations(metric) {
        Ok(v) if v.is_empty() => Probe::Inside,
        Ok(_) => Probe::Violating,
        Err(e) => Probe::Invalid(e),
    }
}

fn with_u(metric: &DecoratedMetric, u: Vec<f64>) -> DecoratedMetric {
    let mut out = metric.clone();
    out.set_u_unchecked(u);
    out
}

/// `u0 + τ·du`, shifted so that `Σu` equals `sum0` when given.
fn point_on_step(u0: &[f64], du: &[f64], tau: f64, sum0: Option<f64>) -> Vec<f64> {
    let mut u: Vec<f64> = u0.iter().zip(du).map(|(a, d)| a + tau * d).collect();
    if let Some(sum0) = sum0 {
        let drift = (u.iter().sum::<f64>() - sum0) / u.len() as f64;
        u.iter_mut().for_each(|x| *x -= drift);
    }
    u
}

/// Moves `metric` from its `u` along the segment `du`, stopping at the first
/// weighted Delaunay crossing. Returns the reached state and the fraction of
/// the segment covered; a state past a crossing still needs surgery.
fn advance(
    metric: &DecoratedMetric,
    du: &[f64],
    sum0: Option<f64>,
    delaunay: bool,
) -> Result<(DecoratedMetric, f64)> {
    let u0 = metric.u();
    let full = with_u(metric, point_on_step(u0, du, 1.0, sum0));
    match probe(&full, delaunay) {
        Probe::Inside => return Ok((full, 1.0)),
        Probe::Invalid(e) if !delaunay => return Err(e),
        _ => {}
    }
    // Bisect for the first parameter at which the current triangulation
    // stops being weighted Delaunay or admissible.
    let (mut lo, mut hi) = (0.0_f64, 1.0_f64);
    let mut hi_state = full;
    while hi - lo > CROSSING_RESOLUTION {
        let mid = 0.5 * (lo + hi);
        let state = with_u(metric, point_on_step(u0, du, mid, sum0));
        match probe(&state, delaunay) {
            Probe::Inside => lo = mid,
            _ => {
                hi = mid;
                hi_state = state;
            }
        }
    }
    match probe(&hi_state, delaunay) {
        Probe::Violating => Ok((hi_state, hi)),
        Probe::Invalid(e) => Err(e),
        Probe::Inside => Ok((hi_state, hi)),
    }
}

fn surgery_with_check(
    metric: &mut DecoratedMetric,
    max_flips: usize,
    step: usize,
) -> Result<(Vec<SurgeryEvent>, Option<SurgeryCheck>)> {
    let k_before = curvature(metric)?;
    let area_before = metric.total_area()?;
    let events = make_delaunay(metric, max_flips)?;
    if events.is_empty() {
        return Ok((events, None));
    }
    let k_after = curvature(metric)?;
    let area_after = metric.total_area()?;
    let check = SurgeryCheck {
        step,
        flips: events.len(),
        curvature_jump: k_before.max_abs_diff(&k_after.0),
        area_relative_change: (area_after - area_before).abs() / area_before,
    };
    Ok((events, Some(check)))
}

/// One explicit Euler step of size at most `h` from a weighted Delaunay
/// state, with zero-sum projection, surgery and backtracking.
pub fn step(metric: &DecoratedMetric, config: &FlowConfig, h: f64) -> Result<StepOutcome> {
    step_indexed(metric, config, h, 0)
}

fn step_indexed(metric: &DecoratedMetric, config: &FlowConfig, h: f64, index: usize) -> Result<StepOutcome> {
    let k0 = curvature(metric)?;
    let e0 = residual(&k0, &config.target);
    let c0 = calabi_energy(&k0.0, &config.target);
    let v = velocity_from(metric, config.kind, &e0)?;
    if max_abs(&v) == 0.0 {
        return Ok(StepOutcome {
            metric: metric.clone(),
            h,
            halvings: 0,
            fraction: 1.0,
            curvature: k0,
            energy: c0,
            potential_increment: 0.0,
            events: Vec::new(),
            check: None,
        });
    }
    let sum0: f64 = metric.u().iter().sum();
    let max_flips = config
        .max_flips_per_step
        .unwrap_or_else(|| default_max_flips(metric));

    let mut last_reason = String::new();
    for halvings in 0..=MAX_HALVINGS {
        let h_try = h * 0.5_f64.powi(halvings as i32);
        let du: Vec<f64> = v.iter().map(|x| h_try * x).collect();
        let (mut candidate, fraction) = match advance(metric, &du, Some(sum0), config.surgery) {
            Ok(r) => r,
            Err(e) => {
                last_reason = e.to_string();
                continue;
            }
        };
        let (events, check) = if config.surgery {
            match surgery_with_check(&mut candidate, max_flips, index) {
                Ok(r) => r,
                Err(e) => {
                    last_reason = e.to_string();
                    continue;
                }
            }
        } else {
            (Vec::new(), None)
        };
        let k1 = match curvature(&candidate) {
            Ok(k) => k,
            Err(e) => {
                last_reason = e.to_string();
                continue;
            }
        };
        let e1 = residual(&k1, &config.target);
        let c1 = calabi_energy(&k1.0, &config.target);
        let taken: Vec<f64> = candidate
            .u()
            .iter()
            .zip(metric.u())
            .map(|(a, b)| a - b)
            .collect();
        let dw = potential_increment(&e0, &e1, &taken);
        let dw_noise = ROUNDOFF * potential_magnitude(&e0, &e1, &taken);
        if dw > dw_noise {
            last_reason = format!("potential increased by {dw:e}");
            continue;
        }
        if config.kind.energy_monotone() && c1 > c0 + energy_noise(c0, k0.0.len()) {
            last_reason = format!("Calabi energy increased from {c0:e} to {c1:e}");
            continue;
        }
        if !config.surgery {
            if let Some(v) = delaunay_violations(&candidate)?.first() {
                return Err(Error::LeftDelaunayCell { step: index, edge: v.edge });
            }
        }
        return Ok(StepOutcome {
            metric: candidate,
            h: h_try,
            halvings,
            fraction,
            curvature: k1,
            energy: c1,
            potential_increment: dw,
            events,
            check,
        });
    }
    Err(Error::StepCollapse {
        step: index,
        reason: last_reason,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Termination {
    Converged,
    Budget,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TraceRecord {
    pub step: usize,
    pub t: f64,
    pub max_curv_err: f64,
    pub calabi_energy: f64,
    pub w_est: f64,
    pub flips_total: usize,
    pub min_margin: f64,
    pub h: f64,
    /// `Σu` at this state.
    pub u_sum: f64,
}

#[derive(Clone, Debug)]
pub struct FlowTrace {
    pub kind: FlowKind,
    pub records: Vec<TraceRecord>,
    pub final_u: Vec<f64>,
    pub final_metric: DecoratedMetric,
    pub termination: Termination,
    pub events: Vec<SurgeryEvent>,
    pub surgery_checks: Vec<SurgeryCheck>,
}

impl FlowTrace {
    pub fn steps(&self) -> usize {
        self.records.last().map_or(0, |r| r.step)
    }

    pub fn final_error(&self) -> f64 {
        self.records.last().map_or(f64::NAN, |r| r.max_curv_err)
    }

    pub fn flips(&self) -> usize {
        self.events.len()
    }

    /// Writes the per-step records as CSV.
    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "step,t,max_curv_err,calabi_energy,W_est,flips_total,min_margin,h")?;
        for r in &self.records {
            writeln!(
                out,
                "{},{},{},{},{},{},{},{}",
                r.step,
                csv_float(r.t),
                csv_float(r.max_curv_err),
                csv_float(r.calabi_energy),
                csv_float(r.w_est),
                r.flips_total,
                csv_float(r.min_margin),
                csv_float(r.h)
            )?;
        }
        Ok(())
    }
}

/// Shortest round-trip scientific notation, always with a decimal point.
fn csv_float(x: f64) -> String {
    let s = format!("{x:e}");
    match s.split_once('e') {
        Some((mantissa, exp)) if !mantissa.contains('.') && x.is_finite() => format!("{mantissa}.0e{exp}"),
        _ => s,
    }
}

#[allow(clippy::too_many_arguments)]
fn record(
    step: usize,
    t: f64,
    metric: &DecoratedMetric,
    k: &CurvatureVector,
    target: &[f64],
    w: f64,
    flips: usize,
    h: f64,
) -> Result<TraceRecord> {
    Ok(TraceRecord {
        step,
        t,
        max_curv_err: k.max_abs_diff(target),
        calabi_energy: calabi_energy(&k.0, target),
        w_est: w,
        flips_total: flips,
        min_margin: metric.validate_triangles()?.min_relative(),
        h,
        u_sum: metric.u().iter().sum(),
    })
}

/// Integrates the flow until `max|K − K̄| < tol` or the step budget runs out.
pub fn run(metric: &DecoratedMetric, config: &FlowConfig) -> Result<FlowTrace> {
    config.validate(metric)?;
    metric.require_admissible()?;
    let mut current = metric.clone();
    let mut events = Vec::new();
    let mut checks = Vec::new();
    let max_flips = config
        .max_flips_per_step
        .unwrap_or_else(|| default_max_flips(metric));
    if config.surgery {
        let (initial, check) = surgery_with_check(&mut current, max_flips, 0)?;
        events.extend(initial);
        checks.extend(check);
    } else if let Some(v) = delaunay_violations(&current)?.first() {
        // Without surgery the flow is only meaningful inside the weighted
        // Delaunay cell of the fixed triangulation.
        return Err(Error::LeftDelaunayCell { step: 0, edge: v.edge });
    }

    let mut h = config.step;
    let mut t = 0.0;
    let mut w = 0.0;
    let mut k = curvature(&current)?;
    let mut records = vec![record(0, t, &current, &k, &config.target, w, events.len(), h)?];
    let mut termination = Termination::Budget;
    for index in 1..=config.max_steps + 1 {
        if k.max_abs_diff(&config.target) < config.tol {
            termination = Termination::Converged;
            break;
        }
        if index > config.max_steps {
            break;
        }
        let outcome = step_indexed(&current, config, h, index)?;
        t += outcome.h * outcome.fraction;
        w += outcome.potential_increment;
        for mut e in outcome.events {
            e.time = t;
            e.ordinal = events.len();
            events.push(e);
        }
        checks.extend(outcome.check);
        current = outcome.metric;
        k = outcome.curvature;
        records.push(record(index, t, &current, &k, &config.target, w, events.len(), outcome.h)?);
        h = if outcome.halvings == 0 && outcome.fraction == 1.0 {
            outcome.h * config.growth
        } else {
            outcome.h
        };
    }
    Ok(FlowTrace {
        kind: config.kind,
        records,
        final_u: current.u().to_vec(),
        final_metric: current,
        termination,
        events,
        surgery_checks: checks,
    })
}

/// Moves `metric` to conformal factor `u_target` along the straight segment
/// in `u`, flipping at every weighted Delaunay crossing so that the result
/// stays in the discrete conformal class of the input.
pub fn transport(metric: &DecoratedMetric, u_target: &[f64]) -> Result<(DecoratedMetric, Vec<SurgeryEvent>)> {
    let mut current = metric.clone();
    let mut events = make_delaunay(&mut current, default_max_flips(metric))?;
    for _ in 0..default_max_flips(metric).max(1000) {
        let du: Vec<f64> = u_target.iter().zip(current.u()).map(|(a, b)| a - b).collect();
        if max_abs(&du) == 0.0 {
            return Ok((current, events));
        }
        let (mut next, fraction) = advance(&current, &du, None, true)?;
        if fraction == 1.0 {
            next.set_u_unchecked(u_target.to_vec());
            next.require_admissible()?;
            return Ok((next, events));
        }
        let flips = make_delaunay(&mut next, default_max_flips(metric))?;
        events.extend(flips);
        current = next;
    }
    Err(Error::SurgeryBudgetExceeded(events.len()))
}
