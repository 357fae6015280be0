//! Step-size conditions for the discrete car-following update.
//!
//! The update is collision-free iff
//! `dn/dt >= max_{k in [0,K]} phi(k) / (1 - k/K)`. The classical CFL
//! condition of the Lagrangian Godunov scheme is
//! `dn/dt >= max_{k in [0,K]} |eta'(k)| k^2`. The two coincide when
//! `eta` is nonincreasing and `phi` is concave.

use crate::error::{Error, Result};
use crate::fundamental::FundamentalDiagram;

/// Points in the coarse scan before golden-section refinement.
pub const DEFAULT_SCAN_POINTS: usize = 100_000;

const CONCAVITY_POINTS: usize = 10_000;
const CONCAVITY_KINK_MARGIN: usize = 10;
const CONCAVITY_TOL: f64 = 1e-9;
const RATIO_SLACK: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepSizeReport {
    /// veh/s
    pub collision_free_threshold: f64,
    /// veh/s
    pub cfl_threshold: f64,
    pub dn: f64,
    pub dt: f64,
    pub collision_free_ok: bool,
    pub cfl_ok: bool,
    pub concave: bool,
}

impl StepSizeReport {
    pub fn ratio(&self) -> f64 {
        self.dn / self.dt
    }
}

/// `max_k phi(k)/(1 - k/K)`.
pub fn collision_free_threshold<D: FundamentalDiagram + ?Sized>(fd: &D) -> f64 {
    collision_free_threshold_with_grid(fd, DEFAULT_SCAN_POINTS)
}

pub fn collision_free_threshold_with_grid<D: FundamentalDiagram + ?Sized>(
    fd: &D,
    points: usize,
) -> f64 {
    let jam = fd.jam_density();
    let limit_at_jam = {
        // phi(K) = 0 makes the ratio 0/0; its limit is -eta'(K) K^2.
        let eta_jam = fd.speed_raw(jam);
        if eta_jam == 0.0 {
            -fd.speed_prime_raw(jam) * jam * jam
        } else {
            f64::NEG_INFINITY
        }
    };
    let integrand = |k: f64| {
        if k >= jam {
            limit_at_jam
        } else {
            k * fd.speed_raw(k) / (1.0 - k / jam)
        }
    };
    scan_max(integrand, jam, points)
}

/// `max_k |eta'(k)| k^2`.
pub fn cfl_threshold<D: FundamentalDiagram + ?Sized>(fd: &D) -> f64 {
    cfl_threshold_with_grid(fd, DEFAULT_SCAN_POINTS)
}

pub fn cfl_threshold_with_grid<D: FundamentalDiagram + ?Sized>(fd: &D, points: usize) -> f64 {
    let jam = fd.jam_density();
    scan_max(|k| (fd.speed_prime_raw(k) * k * k).abs(), jam, points)
}

/// Grid test of `k eta''(k) + 2 eta'(k) <= 0` on `(0, K)`.
///
/// Grid points within ten cells of a kink are skipped.
pub fn check_concave<D: FundamentalDiagram + ?Sized>(fd: &D) -> bool {
    let jam = fd.jam_density();
    let n = CONCAVITY_POINTS;
    let cell = jam / n as f64;
    let kinks = fd.kinks();
    (1..n).all(|i| {
        let k = cell * i as f64;
        if kinks
            .iter()
            .any(|&c| (k - c).abs() <= CONCAVITY_KINK_MARGIN as f64 * cell)
        {
            return true;
        }
        k * fd.speed_second_raw(k) + 2.0 * fd.speed_prime_raw(k) <= CONCAVITY_TOL
    })
}

/// Both thresholds plus pass/fail flags for a `(dn, dt)` pair.
pub fn validate_step_sizes<D: FundamentalDiagram + ?Sized>(
    fd: &D,
    dn: f64,
    dt: f64,
) -> Result<StepSizeReport> {
    if !(dn > 0.0) || !(dt > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "step sizes must be positive, got dn={dn}, dt={dt}"
        )));
    }
    let collision_free_threshold = collision_free_threshold(fd);
    let cfl_threshold = cfl_threshold(fd);
    let ratio = dn / dt;
    Ok(StepSizeReport {
        collision_free_threshold,
        cfl_threshold,
        dn,
        dt,
        collision_free_ok: meets(ratio, collision_free_threshold),
        cfl_ok: meets(ratio, cfl_threshold),
        concave: check_concave(fd),
    })
}

/// `ratio >= threshold` up to a relative slack of 1e-12.
pub fn meets(ratio: f64, threshold: f64) -> bool {
    ratio >= threshold * (1.0 - RATIO_SLACK) || ratio >= threshold
}

/// Maximum of `f` over `[0, upper]`: coarse scan, then golden-section
/// search in the two cells around the best grid point.
fn scan_max(f: impl Fn(f64) -> f64, upper: f64, points: usize) -> f64 {
    let points = points.max(2);
    let cell = upper / points as f64;
    let mut best_i = 0;
    let mut best = f64::NEG_INFINITY;
    for i in 0..=points {
        let v = f(cell * i as f64);
        if v > best {
            best = v;
            best_i = i;
        }
    }
    let lo = cell * best_i.saturating_sub(1) as f64;
    let hi = (cell * (best_i + 1) as f64).min(upper);
    best.max(golden_max(&f, lo, hi, 1e-9 * upper))
}

fn golden_max(f: &impl Fn(f64) -> f64, mut a: f64, mut b: f64, tol: f64) -> f64 {
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let mut fc = f(c);
    let mut fd = f(d);
    while b - a > tol {
        if fc >= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = f(d);
        }
    }
    fc.max(fd).max(f(a)).max(f(b))
}
