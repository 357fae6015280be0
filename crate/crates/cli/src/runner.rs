//! Executes run specs and writes their outputs.

use std::fmt::Write as _;
use std::fs;
use std::io::{BufWriter, Write};
use std::path::Path;

use anyhow::{Context, Result};
use kinwave::analysis::{
    default_startup_threshold, measure_front_speed_on, measure_startup_wave_on,
    simulate_diagnosed, string_stability_experiment, DiagnosticsReport, StringExperiment,
    StringStabilityResult, WaveMeasurement,
};
use kinwave::conditions::{validate_step_sizes, StepSizeReport};
use kinwave::engine::{unit_vehicle_slots, Trajectory};

use crate::config::{Measure, RunSpec};

/// What one run produced.
#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub diagnostics: DiagnosticsReport,
    pub thresholds: StepSizeReport,
    pub measurement: Option<std::result::Result<WaveMeasurement, String>>,
    /// Largest |acceleration| of vehicles `N = 1..=display` over recorded rows.
    pub max_abs_accel_displayed: f64,
    pub trajectory: Trajectory,
}

impl RunOutcome {
    pub fn is_clean(&self) -> bool {
        self.diagnostics.is_clean()
    }
}

/// Runs `spec` without writing anything.
pub fn execute(spec: &RunSpec) -> Result<RunOutcome> {
    let sc = &spec.scenario;
    let (trajectory, diagnostics) =
        simulate_diagnosed(sc, &spec.model, spec.scheme, spec.record_every)?;
    let thresholds = validate_step_sizes(&sc.fd, sc.dn, sc.dt)?;
    let slots = unit_vehicle_slots(sc.dn, sc.followers, spec.display);
    let measurement = match spec.measure {
        Measure::None => None,
        Measure::Shock => {
            let v1 = sc.initial_speed.unwrap_or_else(|| sc.upstream_speed());
            Some(measure_front_speed_on(&trajectory, v1, sc.lead_speed, &slots))
        }
        Measure::Startup => {
            let threshold = spec
                .startup_threshold
                .unwrap_or_else(|| default_startup_threshold(&sc.fd));
            Some(measure_startup_wave_on(&trajectory, threshold, &slots))
        }
    }
    .map(|m| m.map_err(|e| e.to_string()));
    let max_abs_accel_displayed = trajectory
        .accelerations
        .iter()
        .flat_map(|row| slots.iter().map(move |&m| row[m].abs()))
        .fold(0.0, f64::max);
    Ok(RunOutcome {
        diagnostics,
        thresholds,
        measurement,
        max_abs_accel_displayed,
        trajectory,
    })
}

/// Runs `spec` and writes `trajectory.csv`, `summary.txt` and, when a wave
/// was measured, `crossings.csv` into `dir`.
pub fn run(spec: &RunSpec, dir: &Path) -> Result<RunOutcome> {
    let outcome = execute(spec)?;
    write_outputs(spec, &outcome, dir)?;
    Ok(outcome)
}

fn write_outputs(spec: &RunSpec, outcome: &RunOutcome, dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).with_context(|| format!("cannot create {}", dir.display()))?;
    write_trajectory_csv(&outcome.trajectory, &dir.join("trajectory.csv"))?;
    write_file(&dir.join("summary.txt"), &summary(spec, outcome))?;
    if let Some(Ok(m)) = &outcome.measurement {
        let mut s = String::from("vehicle,N,t,x\n");
        for (slot, t, x) in &m.crossing_points {
            writeln!(s, "{slot},{},{},{}", num(*slot as f64 * spec.scenario.dn), num(*t), num(*x))?;
        }
        write_file(&dir.join("crossings.csv"), &s)?;
    }
    Ok(())
}

fn write_file(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).with_context(|| format!("cannot write {}", path.display()))
}

/// 17 significant digits.
fn num(v: f64) -> String {
    format!("{v:.16e}")
}

/// `t,vehicle,N,x,v,a`; the acceleration of the last row is `NaN`.
pub fn write_trajectory_csv(traj: &Trajectory, path: &Path) -> Result<()> {
    let file = fs::File::create(path).with_context(|| format!("cannot write {}", path.display()))?;
    let mut w = BufWriter::new(file);
    writeln!(w, "t,vehicle,N,x,v,a")?;
    for (r, t) in traj.times.iter().enumerate() {
        let accel = traj.accelerations.get(r);
        for (m, (x, v)) in traj.positions[r].iter().zip(&traj.speeds[r]).enumerate() {
            let a = accel.map_or(f64::NAN, |row| row[m]);
            writeln!(
                w,
                "{},{m},{},{},{},{}",
                num(*t),
                num(m as f64 * traj.dn),
                num(*x),
                num(*v),
                num(a)
            )?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Flat `key=value` lines.
pub fn summary(spec: &RunSpec, outcome: &RunOutcome) -> String {
    let d = &outcome.diagnostics;
    let sc = &spec.scenario;
    let mut s = String::new();
    let mut kv = |k: &str, v: String| {
        let _ = writeln!(s, "{k}={v}");
    };
    kv("fd", sc.fd.name().into());
    kv("model", spec.model.name().into());
    kv("scheme", spec.scheme.name().into());
    kv("dn", format!("{:?}", sc.dn));
    kv("dt", format!("{:?}", sc.dt));
    kv("followers", sc.followers.to_string());
    kv("steps", sc.steps().to_string());
    if let Some(m) = &outcome.measurement {
        let key = match spec.measure {
            Measure::Startup => "measured_startup_speed",
            _ => "measured_shock_speed",
        };
        match m {
            Ok(w) => {
                kv(key, format!("{:?}", w.fitted_speed));
                kv("r_squared", format!("{:?}", w.r_squared));
            }
            Err(e) => {
                kv(key, "NaN".into());
                kv("r_squared", "NaN".into());
                kv("measurement_error", e.clone());
            }
        }
    }
    kv("min_spacing", format!("{:?}", d.min_spacing));
    kv("min_gap", format!("{:?}", d.min_gap));
    kv("collision_count", d.collision_count.to_string());
    kv("negative_speed_count", d.negative_speed_count.to_string());
    kv("max_abs_accel", format!("{:?}", d.max_abs_acceleration));
    kv("max_abs_accel_displayed", format!("{:?}", outcome.max_abs_accel_displayed));
    let t = &outcome.thresholds;
    kv("collision_free_threshold", format!("{:?}", t.collision_free_threshold));
    kv("cfl_threshold", format!("{:?}", t.cfl_threshold));
    kv("collision_free_ok", t.collision_free_ok.to_string());
    kv("cfl_ok", t.cfl_ok.to_string());
    s
}

/// One row of a convergence sweep.
#[derive(Debug, Clone)]
pub struct SweepRow {
    pub dn: f64,
    pub dt: f64,
    pub measured_speed: Option<f64>,
    pub max_abs_accel: f64,
    pub max_abs_accel_displayed: f64,
    pub min_spacing: f64,
    pub collision_count: usize,
    /// Largest position difference to the previous row's run over displayed
    /// vehicles, at the previous run's recorded times.
    pub max_gap_vs_previous: Option<f64>,
}

/// `(t, x)` series of displayed vehicles `N = 1..=display`.
type Displayed = Vec<(Vec<f64>, Vec<f64>)>;

fn displayed(traj: &Trajectory, display: usize) -> Displayed {
    (1..=display)
        .map(|n| {
            let m = (n as f64 / traj.dn).round() as usize;
            if m == 0 || m > traj.followers() {
                return (Vec::new(), Vec::new());
            }
            (traj.times.clone(), traj.positions.iter().map(|row| row[m]).collect())
        })
        .collect()
}

fn interpolate(times: &[f64], xs: &[f64], t: f64) -> f64 {
    let i = times.partition_point(|&s| s < t);
    if i == 0 {
        return xs[0];
    }
    if i >= times.len() {
        return xs[xs.len() - 1];
    }
    let (t0, t1) = (times[i - 1], times[i]);
    let w = (t - t0) / (t1 - t0);
    xs[i - 1] + w * (xs[i] - xs[i - 1])
}

fn max_gap(previous: &Displayed, current: &Displayed) -> Option<f64> {
    let mut gap: Option<f64> = None;
    for ((tp, xp), (tc, xc)) in previous.iter().zip(current) {
        if tp.is_empty() || tc.is_empty() {
            continue;
        }
        for (t, x) in tp.iter().zip(xp) {
            let d = (interpolate(tc, xc, *t) - x).abs();
            gap = Some(gap.map_or(d, |g| g.max(d)));
        }
    }
    gap
}

/// Runs `spec` at every `dn` in parallel; entry `i` writes into `dir/dn_<i>`.
pub fn sweep(spec: &RunSpec, dns: &[f64], dir: &Path) -> Result<Vec<SweepRow>> {
    anyhow::ensure!(!dns.is_empty(), "sweep list is empty");
    fs::create_dir_all(dir).with_context(|| format!("cannot create {}", dir.display()))?;
    let results: Vec<Result<(SweepRow, Displayed)>> = std::thread::scope(|scope| {
        let handles: Vec<_> = dns
            .iter()
            .enumerate()
            .map(|(i, &dn)| {
                let entry = spec.with_dn(dn);
                let sub = dir.join(format!("dn_{i}"));
                scope.spawn(move || -> Result<(SweepRow, Displayed)> {
                    let outcome = run(&entry, &sub)?;
                    let row = SweepRow {
                        dn,
                        dt: entry.scenario.dt,
                        measured_speed: outcome
                            .measurement
                            .as_ref()
                            .and_then(|m| m.as_ref().ok())
                            .map(|w| w.fitted_speed),
                        max_abs_accel: outcome.diagnostics.max_abs_acceleration,
                        max_abs_accel_displayed: outcome.max_abs_accel_displayed,
                        min_spacing: outcome.diagnostics.min_spacing,
                        collision_count: outcome.diagnostics.collision_count,
                        max_gap_vs_previous: None,
                    };
                    Ok((row, displayed(&outcome.trajectory, entry.display)))
                })
            })
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().unwrap_or_else(|_| Err(anyhow::anyhow!("sweep entry panicked"))))
            .collect()
    });
    let mut rows = Vec::with_capacity(dns.len());
    let mut previous: Option<Displayed> = None;
    for result in results {
        let (mut row, series) = result?;
        row.max_gap_vs_previous = previous.as_ref().and_then(|p| max_gap(p, &series));
        previous = Some(series);
        rows.push(row);
    }
    write_file(&dir.join("sweep.csv"), &sweep_csv(&rows))?;
    Ok(rows)
}

pub fn sweep_csv(rows: &[SweepRow]) -> String {
    let opt = |v: Option<f64>| v.map_or_else(|| "NaN".to_string(), num);
    let mut s = String::from(
        "dn,dt,measured_speed,max_abs_accel,max_abs_accel_displayed,min_spacing,collision_count,max_gap_vs_previous\n",
    );
    for r in rows {
        let _ = writeln!(
            s,
            "{},{},{},{},{},{},{},{}",
            num(r.dn),
            num(r.dt),
            opt(r.measured_speed),
            num(r.max_abs_accel),
            num(r.max_abs_accel_displayed),
            num(r.min_spacing),
            r.collision_count,
            opt(r.max_gap_vs_previous)
        );
    }
    s
}

pub fn thresholds_report(spec: &RunSpec) -> Result<String> {
    let sc = &spec.scenario;
    let r = validate_step_sizes(&sc.fd, sc.dn, sc.dt)?;
    let mut s = String::new();
    writeln!(s, "fd={}", sc.fd.name())?;
    writeln!(s, "dn={:?}", r.dn)?;
    writeln!(s, "dt={:?}", r.dt)?;
    writeln!(s, "ratio={:?}", r.ratio())?;
    writeln!(s, "collision_free_threshold={:?}", r.collision_free_threshold)?;
    writeln!(s, "cfl_threshold={:?}", r.cfl_threshold)?;
    writeln!(s, "collision_free_ok={}", r.collision_free_ok)?;
    writeln!(s, "cfl_ok={}", r.cfl_ok)?;
    writeln!(s, "concave={}", r.concave)?;
    Ok(s)
}

/// String-stability experiment at `s0 = 1/k1`.
pub fn stability(spec: &RunSpec) -> Result<StringStabilityResult> {
    let st = spec
        .stability
        .context("configuration has no [stability] section")?;
    let sc = &spec.scenario;
    let exp = StringExperiment {
        s0: 1.0 / sc.k1,
        amplitude: st.amplitude,
        omega: st.omega,
        followers: sc.followers,
        dn: sc.dn,
        dt: sc.dt,
        duration: sc.duration,
    };
    Ok(string_stability_experiment(&sc.fd, &spec.model, &exp)?)
}

pub fn stability_report(r: &StringStabilityResult) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "omega={:?}", r.omega);
    let _ = writeln!(s, "amplification_ratio={:?}", r.amplification_ratio);
    let _ = writeln!(s, "predicted_ratio={:?}", r.predicted_ratio);
    s
}

pub fn write_stability(r: &StringStabilityResult, dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).with_context(|| format!("cannot create {}", dir.display()))?;
    write_file(&dir.join("stability.txt"), &stability_report(r))?;
    let mut s = String::from("vehicle,amplitude\n");
    for (m, a) in r.per_vehicle_amplitude.iter().enumerate() {
        let _ = writeln!(s, "{m},{}", num(*a));
    }
    write_file(&dir.join("stability.csv"), &s)
}
