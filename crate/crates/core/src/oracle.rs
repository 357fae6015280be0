//! Riemann solutions of the LWR model for concave diagrams.

use crate::conditions::check_concave;
use crate::engine::Trajectory;
use crate::error::{Error, Result};
use crate::fundamental::{Diagram, FundamentalDiagram};

const FAN_SAMPLES: usize = 1000;
const DEGENERATE_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum WaveKind {
    /// `degenerate` marks a fan whose characteristic speeds all coincide.
    Shock { speed: f64, degenerate: bool },
    Rarefaction { lo: f64, hi: f64 },
    Uniform,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WaveSolution {
    pub kind: WaveKind,
    /// Upstream density.
    pub k1: f64,
    /// Downstream density.
    pub k2: f64,
}

/// Rankine-Hugoniot speed `(phi(k2) - phi(k1)) / (k2 - k1)`.
pub fn shock_speed_rh(fd: &Diagram, k1: f64, k2: f64) -> Result<f64> {
    let k1 = fd.check_density(k1)?;
    let k2 = fd.check_density(k2)?;
    if k1 == k2 {
        return Err(Error::Degenerate(format!("no jump between equal densities {k1}")));
    }
    Ok((fd.phi(k2)? - fd.phi(k1)?) / (k2 - k1))
}

/// Riemann wave between upstream `k1` and downstream `k2`.
///
/// A fan spans the characteristic speeds `phi'(k)` of the states it passes
/// through where vehicle speed actually varies (`eta'(k) != 0`). When those
/// all coincide, as on the congested branch of a triangular diagram, the fan
/// is reported as a degenerate shock.
pub fn riemann_wave(fd: &Diagram, k1: f64, k2: f64) -> Result<WaveSolution> {
    if !check_concave(fd) {
        return Err(Error::NonConcave(format!(
            "{} has no classical Riemann solution",
            fd.name()
        )));
    }
    let k1 = fd.check_density(k1)?;
    let k2 = fd.check_density(k2)?;
    let kind = if k1 == k2 {
        WaveKind::Uniform
    } else if k1 < k2 {
        WaveKind::Shock {
            speed: shock_speed_rh(fd, k1, k2)?,
            degenerate: false,
        }
    } else {
        fan(fd, k2, k1)
    };
    Ok(WaveSolution { kind, k1, k2 })
}

fn fan(fd: &Diagram, lo_k: f64, hi_k: f64) -> WaveKind {
    let states: Vec<f64> = (0..=FAN_SAMPLES)
        .map(|i| lo_k + (hi_k - lo_k) * i as f64 / FAN_SAMPLES as f64)
        .collect();
    let varying: Vec<f64> = states
        .iter()
        .copied()
        .filter(|&k| fd.speed_prime_raw(k) != 0.0)
        .collect();
    let used = if varying.is_empty() { &states } else { &varying };
    let speeds = used.iter().map(|&k| fd.speed_raw(k) + k * fd.speed_prime_raw(k));
    let (lo, hi) = speeds.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), c| {
        (lo.min(c), hi.max(c))
    });
    let scale = lo.abs().max(hi.abs()).max(f64::MIN_POSITIVE);
    if hi - lo <= DEGENERATE_TOL * scale {
        WaveKind::Shock {
            speed: lo,
            degenerate: true,
        }
    } else {
        WaveKind::Rarefaction { lo, hi }
    }
}

/// Exact piecewise-linear trajectories of the shock between `k1 < k2`.
///
/// The leader drives at `eta(k2)` from `x = 0`; follower `m` starts at
/// `-m dn / k1` at `eta(k1)` and switches to `eta(k2)` where it meets
/// `x = sigma t`. Rows lie on the `dt` grid plus every switching time; at
/// its own switching row a vehicle's speed is the midpoint of the two.
pub fn synthetic_shock_trajectory(
    fd: &Diagram,
    k1: f64,
    k2: f64,
    followers: usize,
    dn: f64,
    duration: f64,
    dt: f64,
) -> Result<Trajectory> {
    let wave = riemann_wave(fd, k1, k2)?;
    let sigma = match wave.kind {
        WaveKind::Shock {
            speed,
            degenerate: false,
        } => speed,
        _ => {
            return Err(Error::InvalidArgument(format!(
                "k1 < k2 required for a shock, got {k1} and {k2}"
            )))
        }
    };
    for (name, v) in [("dn", dn), ("dt", dt)] {
        if !(v > 0.0) {
            return Err(Error::InvalidArgument(format!("{name} must be positive, got {v}")));
        }
    }
    if !(duration >= 0.0) {
        return Err(Error::InvalidArgument(format!("duration must be nonnegative, got {duration}")));
    }
    let v1 = fd.speed_raw(k1);
    let v2 = fd.speed_raw(k2);
    let start = |m: usize| -(m as f64) * dn / k1;
    let switch: Vec<f64> = (0..=followers)
        .map(|m| {
            if m == 0 {
                0.0
            } else if v1 > sigma {
                -start(m) / (v1 - sigma)
            } else {
                f64::INFINITY
            }
        })
        .collect();

    let grid_steps = (duration / dt - 1e-9).ceil().max(0.0) as usize;
    let mut times: Vec<f64> = (0..=grid_steps).map(|j| (j as f64 * dt).min(duration)).collect();
    times.extend(switch[1..].iter().copied().filter(|&t| t > 0.0 && t < duration));
    times.sort_by(f64::total_cmp);
    times.dedup();

    let speed_at = |m: usize, t: f64| {
        if m == 0 || t > switch[m] {
            v2
        } else if t == switch[m] {
            0.5 * (v1 + v2)
        } else {
            v1
        }
    };
    let position_at = |m: usize, t: f64| {
        if m == 0 {
            v2 * t
        } else if t <= switch[m] {
            start(m) + v1 * t
        } else {
            sigma * switch[m] + v2 * (t - switch[m])
        }
    };
    let positions: Vec<Vec<f64>> = times
        .iter()
        .map(|&t| (0..=followers).map(|m| position_at(m, t)).collect())
        .collect();
    let speeds: Vec<Vec<f64>> = times
        .iter()
        .map(|&t| (0..=followers).map(|m| speed_at(m, t)).collect())
        .collect();
    let accelerations = times
        .windows(2)
        .zip(speeds.windows(2))
        .map(|(t, v)| {
            v[1].iter()
                .zip(&v[0])
                .map(|(b, a)| (b - a) / (t[1] - t[0]))
                .collect()
        })
        .collect();
    Ok(Trajectory {
        dn,
        steps: (0..times.len()).collect(),
        times,
        positions,
        speeds,
        accelerations,
        clamp_events: Vec::new(),
        source: None,
    })
}
