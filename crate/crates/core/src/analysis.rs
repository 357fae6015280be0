//! Diagnostics over trajectories, wave-speed measurement, the string
//! stability experiment and the Eulerian instability analyzers.

use num_complex::Complex64;

use crate::engine::{
    init_lead_vehicle_problem, simulate_recorded, step, Model, Platoon, Scenario, Scheme,
    Trajectory,
};
use crate::error::{Error, Result};
use crate::fundamental::{Diagram, FundamentalDiagram};

/// Tolerance below `S dn` before a position difference counts as a collision (m).
pub const COLLISION_TOL: f64 = 1e-9;
/// Speeds below `-NEGATIVE_SPEED_TOL` count as negative (m/s).
pub const NEGATIVE_SPEED_TOL: f64 = 1e-12;
/// Event lists keep at most this many entries; the counts keep going.
pub const EVENT_CAP: usize = 10_000;
/// Vehicles `N = 1..=DISPLAYED_VEHICLES` are the ones measured.
pub const DISPLAYED_VEHICLES: usize = 5;
/// Fraction of a string-stability run discarded as transient.
pub const TRANSIENT_FRACTION: f64 = 0.2;

#[derive(Debug, Clone, PartialEq)]
pub struct DiagnosticsReport {
    /// `(step, vehicle)` with position difference below `S dn - 1e-9`.
    pub collision_events: Vec<(usize, usize)>,
    /// `(step, vehicle)` with speed below `-1e-12`.
    pub negative_speed_events: Vec<(usize, usize)>,
    pub collision_count: usize,
    pub negative_speed_count: usize,
    /// Smallest per-vehicle spacing `(Y[m-1] - Y[m]) / dn` (m).
    pub min_spacing: f64,
    /// Smallest position difference `Y[m-1] - Y[m]` (m).
    pub min_gap: f64,
    /// m/s^2
    pub max_abs_acceleration: f64,
}

impl DiagnosticsReport {
    pub fn is_clean(&self) -> bool {
        self.collision_count == 0 && self.negative_speed_count == 0
    }
}

/// Online version of [`diagnose`], fed one state at a time.
#[derive(Debug, Clone)]
pub struct DiagnosticsAccumulator {
    reserve: f64,
    dn: f64,
    report: DiagnosticsReport,
}

impl DiagnosticsAccumulator {
    pub fn new(fd: &Diagram, dn: f64) -> Self {
        Self {
            reserve: fd.jam_spacing() * dn,
            dn,
            report: DiagnosticsReport {
                collision_events: Vec::new(),
                negative_speed_events: Vec::new(),
                collision_count: 0,
                negative_speed_count: 0,
                min_spacing: f64::INFINITY,
                min_gap: f64::INFINITY,
                max_abs_acceleration: 0.0,
            },
        }
    }

    pub fn observe_state(&mut self, step: usize, positions: &[f64], speeds: &[f64]) {
        let r = &mut self.report;
        for m in 1..positions.len() {
            let gap = positions[m - 1] - positions[m];
            r.min_gap = r.min_gap.min(gap);
            r.min_spacing = r.min_spacing.min(gap / self.dn);
            if gap < self.reserve - COLLISION_TOL {
                r.collision_count += 1;
                if r.collision_events.len() < EVENT_CAP {
                    r.collision_events.push((step, m));
                }
            }
        }
        for (m, v) in speeds.iter().enumerate() {
            if *v < -NEGATIVE_SPEED_TOL {
                r.negative_speed_count += 1;
                if r.negative_speed_events.len() < EVENT_CAP {
                    r.negative_speed_events.push((step, m));
                }
            }
        }
    }

    pub fn observe_accelerations(&mut self, accelerations: &[f64]) {
        for a in accelerations {
            self.report.max_abs_acceleration = self.report.max_abs_acceleration.max(a.abs());
        }
    }

    pub fn finish(self) -> DiagnosticsReport {
        self.report
    }
}

/// Scans every recorded state of `trajectory`.
pub fn diagnose(trajectory: &Trajectory, fd: &Diagram) -> Result<DiagnosticsReport> {
    if trajectory.times.is_empty() {
        return Err(Error::InvalidArgument("empty trajectory".into()));
    }
    let mut acc = DiagnosticsAccumulator::new(fd, trajectory.dn);
    for (r, &step) in trajectory.steps.iter().enumerate() {
        acc.observe_state(step, &trajectory.positions[r], &trajectory.speeds[r]);
    }
    for row in &trajectory.accelerations {
        acc.observe_accelerations(row);
    }
    Ok(acc.finish())
}

/// Runs a scenario and diagnoses every step, recorded or not.
pub fn simulate_diagnosed(
    scenario: &Scenario,
    model: &Model,
    scheme: Scheme,
    record_every: usize,
) -> Result<(Trajectory, DiagnosticsReport)> {
    let mut acc = DiagnosticsAccumulator::new(&scenario.fd, scenario.dn);
    let mut prev: Option<Vec<f64>> = None;
    let mut accel = Vec::new();
    let dt = scenario.dt;
    let traj = simulate_recorded(scenario, model, scheme, record_every, |j, p: &Platoon, _| {
        acc.observe_state(j, &p.positions, &p.speeds);
        if let Some(before) = &prev {
            accel.clear();
            accel.extend(p.speeds.iter().zip(before).map(|(a, b)| (a - b) / dt));
            acc.observe_accelerations(&accel);
        }
        prev = Some(p.speeds.clone());
    })?;
    Ok((traj, acc.finish()))
}

#[derive(Debug, Clone, PartialEq)]
pub struct WaveMeasurement {
    /// `(slot, t, x)` per measured vehicle.
    pub crossing_points: Vec<(usize, f64, f64)>,
    /// m/s
    pub fitted_speed: f64,
    pub r_squared: f64,
}

/// Shock or front speed from the midpoint-speed crossings of vehicles
/// `N = 1..=5`.
pub fn measure_front_speed(trajectory: &Trajectory, v1: f64, v2: f64) -> Result<WaveMeasurement> {
    let slots = trajectory.unit_vehicle_slots(DISPLAYED_VEHICLES);
    measure_front_speed_on(trajectory, v1, v2, &slots)
}

pub fn measure_front_speed_on(
    trajectory: &Trajectory,
    v1: f64,
    v2: f64,
    slots: &[usize],
) -> Result<WaveMeasurement> {
    if v1 == v2 || !v1.is_finite() || !v2.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "front measurement needs distinct finite speeds, got {v1} and {v2}"
        )));
    }
    let mid = 0.5 * (v1 + v2);
    let side = (v1 - mid).signum();
    let points = slots
        .iter()
        .filter_map(|&m| {
            first_crossing(trajectory, m, |v| (v - mid) * side <= 0.0, mid).map(|(t, x)| (m, t, x))
        })
        .collect();
    fit(points)
}

/// Startup wave of a queue discharge: first time each vehicle's speed
/// exceeds `speed_threshold`. Vehicles already above it at `t = 0` are skipped.
pub fn measure_startup_wave(trajectory: &Trajectory, speed_threshold: f64) -> Result<WaveMeasurement> {
    let slots = trajectory.unit_vehicle_slots(DISPLAYED_VEHICLES);
    measure_startup_wave_on(trajectory, speed_threshold, &slots)
}

pub fn measure_startup_wave_on(
    trajectory: &Trajectory,
    speed_threshold: f64,
    slots: &[usize],
) -> Result<WaveMeasurement> {
    if !(speed_threshold > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "startup threshold must be positive, got {speed_threshold}"
        )));
    }
    let points = slots
        .iter()
        .filter(|&&m| trajectory.speeds.first().is_some_and(|row| row[m] <= speed_threshold))
        .filter_map(|&m| {
            first_crossing(trajectory, m, |v| v > speed_threshold, speed_threshold)
                .map(|(t, x)| (m, t, x))
        })
        .collect();
    fit(points)
}

/// Default startup threshold, `1e-3 V`.
pub fn default_startup_threshold(fd: &Diagram) -> f64 {
    1e-3 * fd.free_flow_speed()
}

/// First row where `crossed(speed)` holds, with time and position
/// interpolated linearly to where the speed equals `level`.
fn first_crossing(
    traj: &Trajectory,
    m: usize,
    crossed: impl Fn(f64) -> bool,
    level: f64,
) -> Option<(f64, f64)> {
    let r = traj.speeds.iter().position(|row| crossed(row[m]))?;
    if r == 0 {
        return Some((traj.times[0], traj.positions[0][m]));
    }
    let (v0, v1) = (traj.speeds[r - 1][m], traj.speeds[r][m]);
    let w = if v1 == v0 { 1.0 } else { ((level - v0) / (v1 - v0)).clamp(0.0, 1.0) };
    let (t0, t1) = (traj.times[r - 1], traj.times[r]);
    let (x0, x1) = (traj.positions[r - 1][m], traj.positions[r][m]);
    Some((t0 + w * (t1 - t0), x0 + w * (x1 - x0)))
}

fn fit(points: Vec<(usize, f64, f64)>) -> Result<WaveMeasurement> {
    if points.len() < 3 {
        return Err(Error::Measurement(format!(
            "only {} vehicles crossed; need at least 3",
            points.len()
        )));
    }
    let n = points.len() as f64;
    let tm = points.iter().map(|p| p.1).sum::<f64>() / n;
    let xm = points.iter().map(|p| p.2).sum::<f64>() / n;
    let stt: f64 = points.iter().map(|p| (p.1 - tm).powi(2)).sum();
    let stx: f64 = points.iter().map(|p| (p.1 - tm) * (p.2 - xm)).sum();
    let sxx: f64 = points.iter().map(|p| (p.2 - xm).powi(2)).sum();
    if stt == 0.0 {
        return Err(Error::Measurement("all crossings at the same time".into()));
    }
    let slope = stx / stt;
    let intercept = xm - slope * tm;
    let ss_res: f64 = points
        .iter()
        .map(|p| (p.2 - intercept - slope * p.1).powi(2))
        .sum();
    let r_squared = if sxx == 0.0 { 1.0 } else { (1.0 - ss_res / sxx).clamp(0.0, 1.0) };
    Ok(WaveMeasurement {
        crossing_points: points,
        fitted_speed: slope,
        r_squared,
    })
}

/// Parameters of a string-stability run: an equilibrium platoon at spacing
/// `s0` behind a leader whose speed is `eta(1/s0) + amplitude sin(omega t)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StringExperiment {
    /// m
    pub s0: f64,
    /// m/s
    pub amplitude: f64,
    /// rad/s
    pub omega: f64,
    pub followers: usize,
    pub dn: f64,
    pub dt: f64,
    /// s
    pub duration: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StringStabilityResult {
    pub omega: f64,
    /// Half peak-to-trough speed after the transient, leader first (m/s).
    pub per_vehicle_amplitude: Vec<f64>,
    /// Amplitude growth per unit vehicle, `(A_M / A_0)^(1 / (M dn))`.
    pub amplification_ratio: f64,
    /// `exp(T omega^2 / theta'(s0))`.
    pub predicted_ratio: f64,
}

pub fn string_stability_experiment(
    fd: &Diagram,
    model: &Model,
    exp: &StringExperiment,
) -> Result<StringStabilityResult> {
    let jam = fd.jam_spacing();
    if !(exp.s0 > jam) {
        return Err(Error::SubJamSpacing { spacing: exp.s0, jam });
    }
    let v0 = fd.theta(exp.s0)?;
    if !(exp.amplitude >= 0.0) || exp.amplitude > 0.01 * v0 * (1.0 + 1e-12) {
        return Err(Error::InvalidArgument(format!(
            "amplitude must lie in [0, 1% of {v0}], got {}",
            exp.amplitude
        )));
    }
    if exp.followers == 0 {
        return Err(Error::InvalidArgument("need at least one follower".into()));
    }
    let scenario = Scenario {
        fd: *fd,
        k1: 1.0 / exp.s0,
        lead_speed: v0,
        followers: exp.followers,
        dn: exp.dn,
        dt: exp.dt,
        duration: exp.duration,
        initial_speed: Some(v0),
    };
    crate::engine::check_combination(model, Scheme::AnisotropicSymplectic)?;
    let mut platoon = init_lead_vehicle_problem(&scenario)?;
    let steps = scenario.steps();
    let discard = (TRANSIENT_FRACTION * steps as f64).floor() as usize;
    let n = platoon.positions.len();
    let mut hi = vec![f64::NEG_INFINITY; n];
    let mut lo = vec![f64::INFINITY; n];
    let reserve = jam * exp.dn;
    for j in 1..=steps {
        let t = j as f64 * exp.dt;
        let lead = v0 + exp.amplitude * (exp.omega * t).sin();
        platoon = step(&platoon, model, Scheme::AnisotropicSymplectic, fd, exp.dt, lead)?.platoon;
        if let Some(m) = (1..n).find(|&m| platoon.gap(m) < reserve - COLLISION_TOL) {
            return Err(Error::ExperimentInvalid(format!(
                "vehicle {m} collided at t={t}"
            )));
        }
        if j > discard {
            for (m, v) in platoon.speeds.iter().enumerate() {
                hi[m] = hi[m].max(*v);
                lo[m] = lo[m].min(*v);
            }
        }
    }
    let per_vehicle_amplitude: Vec<f64> = hi
        .iter()
        .zip(&lo)
        .map(|(h, l)| if h >= l { 0.5 * (h - l) } else { 0.0 })
        .collect();
    let a0 = per_vehicle_amplitude[0];
    let am = per_vehicle_amplitude[n - 1];
    let amplification_ratio = if exp.amplitude == 0.0 || a0 == 0.0 {
        1.0
    } else {
        (am / a0).powf(1.0 / (exp.followers as f64 * exp.dn))
    };
    let relaxation = model.relaxation_time(exp.dt);
    let predicted_ratio = (relaxation * exp.omega * exp.omega / fd.theta_prime(exp.s0)?).exp();
    Ok(StringStabilityResult {
        omega: exp.omega,
        per_vehicle_amplitude,
        amplification_ratio,
        predicted_ratio,
    })
}

/// Roots of `w^2 + (2 b1 + i 2 b2) w + (d1 + i d2) = 0`, the dispersion
/// relation of the relaxation model linearized at `(k0, eta(k0))`.
pub fn eulerian_dispersion_roots(
    fd: &Diagram,
    k0: f64,
    relaxation_time: f64,
    wavenumber: f64,
) -> Result<[Complex64; 2]> {
    let jam = fd.jam_density();
    if !(k0 > 0.0 && k0 < jam) {
        return Err(Error::InvalidArgument(format!("k0 must lie in (0, {jam}), got {k0}")));
    }
    if !(relaxation_time > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "relaxation time must be positive, got {relaxation_time}"
        )));
    }
    if wavenumber == 0.0 || !wavenumber.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "wavenumber must be nonzero, got {wavenumber}"
        )));
    }
    let v0 = fd.speed_raw(k0);
    let m = wavenumber;
    let b = Complex64::new(2.0 * m * v0, 1.0 / relaxation_time);
    let c = Complex64::new(
        m * m * v0 * v0,
        (v0 - k0 * fd.speed_prime_raw(k0)) * m / relaxation_time,
    );
    Ok(complex_quadratic_roots(b, c))
}

/// Roots of `w^2 + b w + c`, avoiding cancellation.
pub fn complex_quadratic_roots(b: Complex64, c: Complex64) -> [Complex64; 2] {
    let sq = (b * b - 4.0 * c).sqrt();
    let sq = if (b.conj() * sq).re >= 0.0 { sq } else { -sq };
    let q = -0.5 * (b + sq);
    if q == Complex64::new(0.0, 0.0) {
        return [q, q];
    }
    [q, c / q]
}

/// `-T (k eta'(k))^2`, the viscous coefficient of the Chapman-Enskog
/// expansion of the relaxation model.
pub fn diffusion_coefficient(fd: &Diagram, k: f64, relaxation_time: f64) -> Result<f64> {
    let jam = fd.jam_density();
    if !(k > 0.0 && k < jam) {
        return Err(Error::InvalidArgument(format!("k must lie in (0, {jam}), got {k}")));
    }
    if !(relaxation_time > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "relaxation time must be positive, got {relaxation_time}"
        )));
    }
    let g = k * fd.speed_prime_raw(k);
    Ok(-relaxation_time * g * g)
}
