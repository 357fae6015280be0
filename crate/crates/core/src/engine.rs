//! Platoon simulation in Lagrangian coordinates.
//!
//! Vehicle `m` of a platoon sits at `N = m dn`; vehicle 0 is the leader.
//! The canonical update estimates spacing from the vehicle ahead only
//! (backward difference in `N`) and advances speed explicitly and position
//! with the *updated* speed (symplectic Euler):
//!
//! ```text
//! U[m]^{j+1} = theta((Y[m-1]^j - Y[m]^j) / dn)
//! Y[m]^{j+1} = Y[m]^j + dt * U[m]^{j+1}
//! ```
//!
//! This is the relaxation model with the relaxation time set to `dt`. The
//! other schemes and models here exist to be compared against it.

use crate::error::{Error, Result};
use crate::fundamental::{Diagram, FundamentalDiagram};

/// Positions and speeds of a platoon at one time step.
#[derive(Debug, Clone, PartialEq)]
pub struct Platoon {
    /// Vehicle granularity `dn` (veh).
    pub dn: f64,
    /// `positions[m]`, strictly decreasing in `m` while collision-free (m).
    pub positions: Vec<f64>,
    /// m/s
    pub speeds: Vec<f64>,
    /// Positions one step earlier; only the explicit-explicit scheme reads them.
    pub prev_positions: Option<Vec<f64>>,
}

impl Platoon {
    pub fn new(dn: f64, positions: Vec<f64>, speeds: Vec<f64>) -> Result<Self> {
        if !(dn > 0.0) {
            return Err(Error::InvalidArgument(format!("dn must be positive, got {dn}")));
        }
        if positions.is_empty() || positions.len() != speeds.len() {
            return Err(Error::InvalidArgument(format!(
                "platoon needs matching nonempty positions/speeds, got {} and {}",
                positions.len(),
                speeds.len()
            )));
        }
        Ok(Self {
            dn,
            positions,
            speeds,
            prev_positions: None,
        })
    }

    /// Number of followers `M`.
    pub fn followers(&self) -> usize {
        self.positions.len() - 1
    }

    /// Position difference to the vehicle ahead, `Y[m-1] - Y[m]` (m).
    pub fn gap(&self, m: usize) -> f64 {
        self.positions[m - 1] - self.positions[m]
    }

    /// Per-vehicle spacing `(Y[m-1] - Y[m]) / dn` (m).
    pub fn spacing(&self, m: usize) -> f64 {
        self.gap(m) / self.dn
    }
}

/// Discretization of `X_N` and of time.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Scheme {
    /// Backward difference in `N`, symplectic Euler in time.
    AnisotropicSymplectic,
    /// `(Y[m] - Y[m+1]) / dn`: looks at the follower.
    ForwardSpacing,
    /// Arithmetic mean of backward and forward spacings.
    ArithmeticCentral,
    /// Harmonic mean of backward and forward spacings.
    HarmonicCentral,
    /// Backward difference, explicit Euler for both speed and position.
    ExplicitExplicit,
}

impl Scheme {
    pub const ALL: [Scheme; 5] = [
        Scheme::AnisotropicSymplectic,
        Scheme::ForwardSpacing,
        Scheme::ArithmeticCentral,
        Scheme::HarmonicCentral,
        Scheme::ExplicitExplicit,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Scheme::AnisotropicSymplectic => "anisotropic",
            Scheme::ForwardSpacing => "forward",
            Scheme::ArithmeticCentral => "arithmetic",
            Scheme::HarmonicCentral => "harmonic",
            Scheme::ExplicitExplicit => "explicit-explicit",
        }
    }

    pub fn from_name(name: &str) -> Option<Scheme> {
        Scheme::ALL.into_iter().find(|s| s.name() == name)
    }
}

/// Acceleration law of a second-order model.
#[derive(Debug, Clone, PartialEq)]
pub enum Model {
    /// `(theta(s) - v) / dt`.
    NonstandardLwr,
    /// `(theta(s) - v) / T`, the optimal velocity model.
    PhillipsRelax { relaxation_time: f64 },
    /// `(theta(s) - v) / T + c0 (v[m-1] - v[m]) / (Y[m-1] - Y[m])`.
    Jwz { relaxation_time: f64, c0: f64 },
    /// Speed clamped into `[0, theta(s)]`.
    Corrected1(Box<Model>),
    /// Speed clamped into `[0, (gap - S dn) / dt]`.
    Corrected2(Box<Model>),
}

impl Model {
    pub fn corrected1(inner: Model) -> Model {
        Model::Corrected1(Box::new(inner))
    }

    pub fn corrected2(inner: Model) -> Model {
        Model::Corrected2(Box::new(inner))
    }

    pub fn name(&self) -> &'static str {
        match self {
            Model::NonstandardLwr => "nonstandard",
            Model::PhillipsRelax { .. } => "phillips",
            Model::Jwz { .. } => "jwz",
            Model::Corrected1(_) => "corrected1",
            Model::Corrected2(_) => "corrected2",
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            Model::NonstandardLwr => Ok(()),
            Model::PhillipsRelax { relaxation_time } | Model::Jwz { relaxation_time, .. } => {
                if relaxation_time.is_finite() && *relaxation_time > 0.0 {
                    if let Model::Jwz { c0, .. } = self {
                        if !c0.is_finite() {
                            return Err(Error::InvalidArgument(format!("c0 must be finite, got {c0}")));
                        }
                    }
                    Ok(())
                } else {
                    Err(Error::InvalidArgument(format!(
                        "relaxation time must be positive, got {relaxation_time}"
                    )))
                }
            }
            Model::Corrected1(inner) | Model::Corrected2(inner) => match **inner {
                Model::Corrected1(_) | Model::Corrected2(_) => Err(Error::Unsupported(
                    "a correction may only wrap nonstandard, phillips or jwz".into(),
                )),
                _ => inner.validate(),
            },
        }
    }

    /// Relaxation time used by the relaxation term; `dt` for the nonstandard model.
    pub fn relaxation_time(&self, dt: f64) -> f64 {
        match self {
            Model::NonstandardLwr => dt,
            Model::PhillipsRelax { relaxation_time } | Model::Jwz { relaxation_time, .. } => {
                *relaxation_time
            }
            Model::Corrected1(inner) | Model::Corrected2(inner) => inner.relaxation_time(dt),
        }
    }
}

/// What a follower sees when choosing its acceleration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LocalState {
    /// Own speed (m/s).
    pub speed: f64,
    /// Per-vehicle spacing `gap / dn` (m).
    pub spacing: f64,
    /// Leader speed minus own speed (m/s).
    pub speed_difference: f64,
}

/// Lead-vehicle problem: leader at constant speed from `x = 0`, followers
/// in equilibrium at density `k1` behind it.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub fd: Diagram,
    /// Upstream density (veh/m).
    pub k1: f64,
    /// Constant leader speed (m/s).
    pub lead_speed: f64,
    /// Follower count `M`.
    pub followers: usize,
    pub dn: f64,
    pub dt: f64,
    /// s
    pub duration: f64,
    /// Initial follower speed; `None` means `eta(k1)`.
    pub initial_speed: Option<f64>,
}

impl Scenario {
    pub fn validate(&self) -> Result<()> {
        let jam = self.fd.jam_density();
        if !(self.k1 > 0.0) || self.k1 > jam * (1.0 + 1e-12) {
            return Err(Error::InvalidArgument(format!(
                "k1 must lie in (0, {jam}], got {}",
                self.k1
            )));
        }
        if !(self.lead_speed >= 0.0) || !self.lead_speed.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "lead speed must be nonnegative, got {}",
                self.lead_speed
            )));
        }
        for (name, v) in [("dn", self.dn), ("dt", self.dt)] {
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::InvalidArgument(format!("{name} must be positive, got {v}")));
            }
        }
        if !(self.duration >= 0.0) || !self.duration.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "duration must be nonnegative, got {}",
                self.duration
            )));
        }
        if let Some(v) = self.initial_speed {
            if !v.is_finite() {
                return Err(Error::InvalidArgument(format!("initial speed must be finite, got {v}")));
            }
        }
        Ok(())
    }

    /// `ceil(duration / dt)`.
    pub fn steps(&self) -> usize {
        (self.duration / self.dt - 1e-9).ceil().max(0.0) as usize
    }

    pub fn upstream_speed(&self) -> f64 {
        self.fd.speed_raw(self.k1.min(self.fd.jam_density()))
    }
}

/// Initial platoon: `Y[m] = -m dn / k1`, followers at `eta(k1)`, leader at `lead_speed`.
pub fn init_lead_vehicle_problem(scenario: &Scenario) -> Result<Platoon> {
    scenario.validate()?;
    let s1 = 1.0 / scenario.k1;
    let v1 = scenario.initial_speed.unwrap_or_else(|| scenario.upstream_speed());
    let n = scenario.followers + 1;
    let positions = (0..n).map(|m| -(m as f64) * s1 * scenario.dn).collect();
    let mut speeds = vec![v1; n];
    speeds[0] = scenario.lead_speed;
    Platoon::new(scenario.dn, positions, speeds)
}

/// Result of one time step.
#[derive(Debug, Clone, PartialEq)]
pub struct Advance {
    pub platoon: Platoon,
    /// Followers whose spacing argument fell below jam spacing and was clamped.
    pub clamped: Vec<usize>,
}

/// `theta` with the spacing clamped up to jam spacing; flags the clamp.
fn theta_clamped(fd: &Diagram, spacing: f64) -> (f64, bool) {
    let jam = fd.jam_spacing();
    if spacing < jam {
        (fd.speed_raw(fd.jam_density()), true)
    } else {
        (fd.speed_raw((1.0 / spacing).min(fd.jam_density())), false)
    }
}

/// Spacing estimate for follower `m` under a stencil. The last vehicle has
/// no follower and always uses the backward difference.
pub fn spacing_estimate(platoon: &Platoon, m: usize, scheme: Scheme) -> f64 {
    let backward = platoon.spacing(m);
    if m == platoon.followers() {
        return backward;
    }
    let forward = platoon.spacing(m + 1);
    match scheme {
        Scheme::AnisotropicSymplectic | Scheme::ExplicitExplicit => backward,
        Scheme::ForwardSpacing => forward,
        Scheme::ArithmeticCentral => 0.5 * (backward + forward),
        Scheme::HarmonicCentral => 2.0 / (1.0 / backward + 1.0 / forward),
    }
}

fn lead(platoon: &Platoon, dt: f64, lead_speed: f64) -> (f64, f64) {
    (lead_speed, platoon.positions[0] + dt * lead_speed)
}

fn assemble(
    platoon: &Platoon,
    dt: f64,
    lead_speed: f64,
    prev: Option<Vec<f64>>,
    update: impl Fn(usize) -> (f64, f64, bool),
) -> Advance {
    let n = platoon.positions.len();
    let mut positions = Vec::with_capacity(n);
    let mut speeds = Vec::with_capacity(n);
    let mut clamped = Vec::new();
    let (u0, y0) = lead(platoon, dt, lead_speed);
    speeds.push(u0);
    positions.push(y0);
    for m in 1..n {
        let (u, y, c) = update(m);
        speeds.push(u);
        positions.push(y);
        if c {
            clamped.push(m);
        }
    }
    Advance {
        platoon: Platoon {
            dn: platoon.dn,
            positions,
            speeds,
            prev_positions: prev,
        },
        clamped,
    }
}

/// One step of the anisotropic symplectic update of the nonstandard model.
pub fn step_nonstandard(platoon: &Platoon, fd: &Diagram, dt: f64, lead_speed: f64) -> Advance {
    step_stencil(platoon, fd, dt, lead_speed, Scheme::AnisotropicSymplectic)
}

/// Symplectic update `Y += dt * theta(estimate)` with any spacing stencil.
///
/// `ExplicitExplicit` is treated as the backward stencil here; use
/// [`step_explicit_explicit`] for the lagged scheme.
pub fn step_stencil(
    platoon: &Platoon,
    fd: &Diagram,
    dt: f64,
    lead_speed: f64,
    scheme: Scheme,
) -> Advance {
    assemble(platoon, dt, lead_speed, None, |m| {
        let (u, c) = theta_clamped(fd, spacing_estimate(platoon, m, scheme));
        (u, platoon.positions[m] + dt * u, c)
    })
}

/// `Y^{j+1} = Y^j + dt * theta(spacing at j-1)`.
///
/// Without history the current positions stand in for the previous ones.
pub fn step_explicit_explicit(
    platoon: &Platoon,
    fd: &Diagram,
    dt: f64,
    lead_speed: f64,
) -> Advance {
    let prev = platoon
        .prev_positions
        .as_deref()
        .unwrap_or(&platoon.positions);
    assemble(
        platoon,
        dt,
        lead_speed,
        Some(platoon.positions.clone()),
        |m| {
            let (u, c) = theta_clamped(fd, (prev[m - 1] - prev[m]) / platoon.dn);
            (u, platoon.positions[m] + dt * u, c)
        },
    )
}

/// Acceleration of a follower under `model`.
///
/// `theta` is evaluated with the spacing clamped to jam spacing. The JWZ
/// gradient term is `c0 * dv / (spacing * dn)` and vanishes when the
/// position difference is exactly zero.
pub fn acceleration(model: &Model, fd: &Diagram, local: LocalState, dn: f64, dt: f64) -> f64 {
    let (theta, _) = theta_clamped(fd, local.spacing);
    (theta - local.speed) / model.relaxation_time(dt) + gradient_term(model, local, dn)
}

fn gradient_term(model: &Model, local: LocalState, dn: f64) -> f64 {
    match model {
        Model::Jwz { c0, .. } => {
            let gap = local.spacing * dn;
            if gap == 0.0 {
                0.0
            } else {
                c0 * local.speed_difference / gap
            }
        }
        Model::Corrected1(inner) | Model::Corrected2(inner) => gradient_term(inner, local, dn),
        _ => 0.0,
    }
}

/// `X_t + dt * A`, written so the relaxation part is a convex combination
/// `(1 - a) v + a theta` with `a = dt / T`. For `T = dt` this returns
/// `theta` bit for bit.
fn unclamped_speed(model: &Model, theta: f64, local: LocalState, dn: f64, dt: f64) -> f64 {
    let a = dt / model.relaxation_time(dt);
    (1.0 - a) * local.speed + a * theta + dt * gradient_term(model, local, dn)
}

fn local_state(platoon: &Platoon, m: usize) -> LocalState {
    LocalState {
        speed: platoon.speeds[m],
        spacing: platoon.spacing(m),
        speed_difference: platoon.speeds[m - 1] - platoon.speeds[m],
    }
}

/// Uncorrected second-order update: `U += dt A`, `Y += dt U_new`.
///
/// Negative speeds are kept and positions may regress.
pub fn step_second_order(
    platoon: &Platoon,
    model: &Model,
    fd: &Diagram,
    dt: f64,
    lead_speed: f64,
) -> Result<Advance> {
    if matches!(model, Model::Corrected1(_) | Model::Corrected2(_)) {
        return Err(Error::Unsupported(format!(
            "step_second_order takes an uncorrected model, got {}",
            model.name()
        )));
    }
    model.validate()?;
    Ok(assemble(platoon, dt, lead_speed, None, |m| {
        let local = local_state(platoon, m);
        let (theta, c) = theta_clamped(fd, local.spacing);
        let u = unclamped_speed(model, theta, local, platoon.dn, dt);
        (u, platoon.positions[m] + dt * u, c)
    }))
}

/// First correction: speed clamped into `[0, theta(s)]`, position advanced
/// with the clamped speed.
pub fn step_corrected_1(
    platoon: &Platoon,
    inner: &Model,
    fd: &Diagram,
    dt: f64,
    lead_speed: f64,
) -> Advance {
    assemble(platoon, dt, lead_speed, None, |m| {
        let local = local_state(platoon, m);
        let (theta, c) = theta_clamped(fd, local.spacing);
        let candidate = unclamped_speed(inner, theta, local, platoon.dn, dt);
        let u = candidate.min(theta).max(0.0);
        let y = platoon.positions[m];
        let next = (y + dt * u).min(y + dt * theta).max(y);
        (u, next, c)
    })
}

/// Second correction: speed clamped into `[0, (gap - S dn) / dt]`, position
/// never past the leader's previous position minus `S dn`.
pub fn step_corrected_2(
    platoon: &Platoon,
    inner: &Model,
    fd: &Diagram,
    dt: f64,
    lead_speed: f64,
) -> Advance {
    let reserve = fd.jam_spacing() * platoon.dn;
    assemble(platoon, dt, lead_speed, None, |m| {
        let local = local_state(platoon, m);
        let (theta, c) = theta_clamped(fd, local.spacing);
        let candidate = unclamped_speed(inner, theta, local, platoon.dn, dt);
        let headroom = (platoon.gap(m) - reserve) / dt;
        let u = candidate.min(headroom).max(0.0);
        let y = platoon.positions[m];
        let next = (y + dt * u).min(platoon.positions[m - 1] - reserve).max(y);
        (u, next, c)
    })
}

/// Checks that `model` can run under `scheme`.
pub fn check_combination(model: &Model, scheme: Scheme) -> Result<()> {
    model.validate()?;
    if scheme != Scheme::AnisotropicSymplectic && *model != Model::NonstandardLwr {
        return Err(Error::Unsupported(format!(
            "scheme {} only runs with the nonstandard model, got {}",
            scheme.name(),
            model.name()
        )));
    }
    Ok(())
}

/// One step of any supported model/scheme combination.
pub fn step(
    platoon: &Platoon,
    model: &Model,
    scheme: Scheme,
    fd: &Diagram,
    dt: f64,
    lead_speed: f64,
) -> Result<Advance> {
    check_combination(model, scheme)?;
    Ok(match (model, scheme) {
        (Model::NonstandardLwr, Scheme::ExplicitExplicit) => {
            step_explicit_explicit(platoon, fd, dt, lead_speed)
        }
        (Model::NonstandardLwr, s) => step_stencil(platoon, fd, dt, lead_speed, s),
        (Model::Corrected1(inner), _) => step_corrected_1(platoon, inner, fd, dt, lead_speed),
        (Model::Corrected2(inner), _) => step_corrected_2(platoon, inner, fd, dt, lead_speed),
        (m, _) => step_second_order(platoon, m, fd, dt, lead_speed)?,
    })
}

/// Full time series of a run.
///
/// Rows are recorded every `record_every` steps plus the final step.
/// `accelerations[r][m] = (U^{s+1} - U^s) / dt` where `s = steps[r]`; there
/// is one fewer acceleration row than state rows.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub dn: f64,
    pub steps: Vec<usize>,
    /// s
    pub times: Vec<f64>,
    pub positions: Vec<Vec<f64>>,
    pub speeds: Vec<Vec<f64>>,
    pub accelerations: Vec<Vec<f64>>,
    /// `(step, vehicle)` pairs where `theta` saw a sub-jam spacing.
    pub clamp_events: Vec<(usize, usize)>,
    pub source: Option<RunEcho>,
}

/// What produced a trajectory.
#[derive(Debug, Clone, PartialEq)]
pub struct RunEcho {
    pub scenario: Scenario,
    pub model: Model,
    pub scheme: Scheme,
}

impl Trajectory {
    pub fn followers(&self) -> usize {
        self.positions.first().map_or(0, |row| row.len().saturating_sub(1))
    }

    /// Slots at whole vehicle numbers `N = 1..=count` that exist in the platoon.
    pub fn unit_vehicle_slots(&self, count: usize) -> Vec<usize> {
        unit_vehicle_slots(self.dn, self.followers(), count)
    }
}

pub fn unit_vehicle_slots(dn: f64, followers: usize, count: usize) -> Vec<usize> {
    (1..=count)
        .map(|n| (n as f64 / dn).round() as usize)
        .filter(|&m| m >= 1 && m <= followers)
        .collect()
}

/// A running simulation. Each call to [`Simulation::advance`] performs one step.
#[derive(Debug, Clone)]
pub struct Simulation {
    scenario: Scenario,
    model: Model,
    scheme: Scheme,
    platoon: Platoon,
    step_index: usize,
    total_steps: usize,
}

impl Simulation {
    pub fn new(scenario: Scenario, model: Model, scheme: Scheme) -> Result<Self> {
        check_combination(&model, scheme)?;
        let platoon = init_lead_vehicle_problem(&scenario)?;
        let total_steps = scenario.steps();
        Ok(Self {
            scenario,
            model,
            scheme,
            platoon,
            step_index: 0,
            total_steps,
        })
    }

    pub fn platoon(&self) -> &Platoon {
        &self.platoon
    }

    pub fn step_index(&self) -> usize {
        self.step_index
    }

    pub fn total_steps(&self) -> usize {
        self.total_steps
    }

    pub fn time(&self) -> f64 {
        self.step_index as f64 * self.scenario.dt
    }

    pub fn scenario(&self) -> &Scenario {
        &self.scenario
    }

    pub fn is_finished(&self) -> bool {
        self.step_index >= self.total_steps
    }

    /// Steps once and returns the followers whose spacing was clamped, or
    /// `None` once the horizon is reached.
    pub fn advance(&mut self) -> Option<Vec<usize>> {
        if self.is_finished() {
            return None;
        }
        let sc = &self.scenario;
        let next = step(
            &self.platoon,
            &self.model,
            self.scheme,
            &sc.fd,
            sc.dt,
            sc.lead_speed,
        )
        .expect("combination checked at construction");
        self.platoon = next.platoon;
        self.step_index += 1;
        Some(next.clamped)
    }

    fn echo(&self) -> RunEcho {
        RunEcho {
            scenario: self.scenario.clone(),
            model: self.model.clone(),
            scheme: self.scheme,
        }
    }
}

/// Runs `ceil(duration / dt)` steps and records every state.
pub fn simulate(scenario: &Scenario, model: &Model, scheme: Scheme) -> Result<Trajectory> {
    simulate_recorded(scenario, model, scheme, 1, |_, _, _| {})
}

/// Runs a scenario, recording every `record_every`-th state (and the last).
///
/// `observe(step, platoon, clamped)` sees every state including unrecorded ones.
pub fn simulate_recorded(
    scenario: &Scenario,
    model: &Model,
    scheme: Scheme,
    record_every: usize,
    mut observe: impl FnMut(usize, &Platoon, &[usize]),
) -> Result<Trajectory> {
    if record_every == 0 {
        return Err(Error::InvalidArgument("record_every must be at least 1".into()));
    }
    let mut sim = Simulation::new(scenario.clone(), model.clone(), scheme)?;
    let dt = scenario.dt;
    let mut traj = Trajectory {
        dn: scenario.dn,
        steps: vec![0],
        times: vec![0.0],
        positions: vec![sim.platoon.positions.clone()],
        speeds: vec![sim.platoon.speeds.clone()],
        accelerations: Vec::new(),
        clamp_events: Vec::new(),
        source: Some(sim.echo()),
    };
    observe(0, &sim.platoon, &[]);
    let mut pending_accel = true;
    while let Some(clamped) = sim.advance() {
        let j = sim.step_index;
        let p = &sim.platoon;
        if pending_accel {
            let before = traj.speeds.last().expect("initial row recorded");
            traj.accelerations.push(
                p.speeds
                    .iter()
                    .zip(before)
                    .map(|(after, before)| (after - before) / dt)
                    .collect(),
            );
            pending_accel = false;
        }
        traj.clamp_events.extend(clamped.iter().map(|&m| (j, m)));
        observe(j, p, &clamped);
        if j % record_every == 0 || sim.is_finished() {
            traj.steps.push(j);
            traj.times.push(j as f64 * dt);
            traj.positions.push(p.positions.clone());
            traj.speeds.push(p.speeds.clone());
            pending_accel = true;
        }
    }
    Ok(traj)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::conditions::collision_free_threshold;
    use crate::fundamental::{Greenshields, Triangular};
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn greenshields() -> Diagram {
        Greenshields::new(20.0, 1.0 / 7.0).unwrap().into()
    }

    fn triangular() -> Diagram {
        Triangular::new(20.0, 5.0, 1.0 / 7.0).unwrap().into()
    }

    fn scenario(fd: Diagram, k1: f64, lead_speed: f64, followers: usize) -> Scenario {
        Scenario {
            fd,
            k1,
            lead_speed,
            followers,
            dn: 1.0,
            dt: 0.35,
            duration: 10.0,
            initial_speed: None,
        }
    }

    fn models() -> Vec<Model> {
        vec![
            Model::NonstandardLwr,
            Model::PhillipsRelax { relaxation_time: 5.0 },
            Model::Jwz { relaxation_time: 5.0, c0: 2.0 },
            Model::corrected1(Model::Jwz { relaxation_time: 5.0, c0: 2.0 }),
            Model::corrected2(Model::PhillipsRelax { relaxation_time: 5.0 }),
        ]
    }

    #[test]
    fn init_examples() {
        let g = greenshields();
        let p = init_lead_vehicle_problem(&scenario(g, 1.0 / 28.0, 7.5, 5)).unwrap();
        let expected = [0.0, -28.0, -56.0, -84.0, -112.0, -140.0];
        for (a, b) in p.positions.iter().zip(expected) {
            assert_relative_eq!(*a, b, epsilon = 1e-9);
        }
        assert_eq!(p.speeds[0], 7.5);
        for v in &p.speeds[1..] {
            assert_relative_eq!(*v, 15.0, epsilon = 1e-12);
        }

        let p = init_lead_vehicle_problem(&scenario(g, 1.0 / 7.0, 20.0, 3)).unwrap();
        for m in 1..=3 {
            assert_relative_eq!(p.gap(m), 7.0, epsilon = 1e-12);
            assert_eq!(p.speeds[m], 0.0);
        }

        let p = init_lead_vehicle_problem(&scenario(g, 0.05, 10.0, 0)).unwrap();
        assert_eq!(p.positions, vec![0.0]);
        assert_eq!(p.followers(), 0);
    }

    #[test]
    fn init_rejects_over_jam_density() {
        let err = init_lead_vehicle_problem(&scenario(greenshields(), 0.2, 1.0, 3));
        assert!(matches!(err, Err(Error::InvalidArgument(_))));
        let mut sc = scenario(greenshields(), 0.1, 1.0, 3);
        sc.dt = 0.0;
        assert!(init_lead_vehicle_problem(&sc).is_err());
        let mut sc = scenario(greenshields(), 0.1, 1.0, 3);
        sc.lead_speed = -1.0;
        assert!(init_lead_vehicle_problem(&sc).is_err());
    }

    #[test]
    fn nonstandard_step_examples() {
        let t = triangular();
        let p = Platoon::new(1.0, vec![0.0, -10.0], vec![0.0, 3.0]).unwrap();
        let next = step_nonstandard(&p, &t, 1.0, 0.0);
        assert_relative_eq!(next.platoon.speeds[1], 15.0 / 7.0, epsilon = 1e-12);
        assert_relative_eq!(next.platoon.positions[1], -55.0 / 7.0, epsilon = 1e-12);
        assert_eq!(next.platoon.positions[0], 0.0);
        assert!(next.clamped.is_empty());

        let p = Platoon::new(1.0, vec![0.0, -7.0], vec![0.0, 4.0]).unwrap();
        let next = step_nonstandard(&p, &t, 1.0, 0.0);
        assert_eq!(next.platoon.speeds[1], 0.0);
        assert_eq!(next.platoon.positions[1], -7.0);
    }

    #[test]
    fn sub_jam_spacing_is_clamped_and_flagged() {
        let t = triangular();
        let p = Platoon::new(1.0, vec![0.0, -5.0, -20.0], vec![0.0, 1.0, 1.0]).unwrap();
        let next = step_nonstandard(&p, &t, 1.0, 0.0);
        assert_eq!(next.clamped, vec![1]);
        assert_eq!(next.platoon.speeds[1], 0.0);
    }

    #[test]
    fn equilibrium_is_a_fixed_point() {
        for fd in [greenshields(), triangular()] {
            let k1 = fd.jam_density() / 3.0;
            let v1 = fd.eta(k1).unwrap();
            let sc = Scenario {
                dt: 0.2,
                ..scenario(fd, k1, v1, 8)
            };
            for model in models() {
                let traj = simulate(&sc, &model, Scheme::AnisotropicSymplectic).unwrap();
                for (row, t) in traj.positions.iter().zip(&traj.times) {
                    for m in 1..row.len() {
                        let gap = row[m - 1] - row[m];
                        assert!((gap - sc.dn / k1).abs() <= 1e-12 * (1.0 + gap), "{}", model.name());
                    }
                    assert!((row[0] - v1 * t).abs() <= 1e-9);
                }
                for row in &traj.speeds {
                    for v in row {
                        assert!((v - v1).abs() <= 1e-12);
                    }
                }
            }
        }
    }

    #[test]
    fn spacing_stencils() {
        let p = Platoon::new(1.0, vec![0.0, -7.0, -28.0, -40.0], vec![0.0; 4]).unwrap();
        assert_eq!(spacing_estimate(&p, 1, Scheme::AnisotropicSymplectic), 7.0);
        assert_eq!(spacing_estimate(&p, 1, Scheme::ForwardSpacing), 21.0);
        assert_relative_eq!(spacing_estimate(&p, 1, Scheme::ArithmeticCentral), 14.0);
        assert_relative_eq!(spacing_estimate(&p, 1, Scheme::HarmonicCentral), 10.5, epsilon = 1e-12);
        // tail falls back to backward
        for s in Scheme::ALL {
            assert_eq!(spacing_estimate(&p, 3, s), 12.0);
        }
        let u = Platoon::new(0.5, vec![0.0, -3.0, -6.0, -9.0], vec![0.0; 4]).unwrap();
        for s in Scheme::ALL {
            for m in 1..=3 {
                assert_relative_eq!(spacing_estimate(&u, m, s), 6.0, epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn non_anisotropic_stencils_collide_in_red_light() {
        let t = triangular();
        let s = t.jam_spacing();
        for scheme in [
            Scheme::ForwardSpacing,
            Scheme::ArithmeticCentral,
            Scheme::HarmonicCentral,
        ] {
            let p = Platoon::new(1.0, vec![0.0, -s, -s - 3.0 * s, -s - 6.0 * s], vec![0.0; 4]).unwrap();
            let next = step_stencil(&p, &t, 1.2, 0.0, scheme).platoon;
            assert!(next.gap(1) < s, "{}", scheme.name());
        }
        let p = Platoon::new(1.0, vec![0.0, -s, -s - 3.0 * s, -s - 6.0 * s], vec![0.0; 4]).unwrap();
        let next = step_nonstandard(&p, &t, 1.2, 0.0).platoon;
        assert!(next.gap(1) >= s);
    }

    #[test]
    fn explicit_explicit_red_light_collision() {
        let t = triangular();
        let s = t.jam_spacing();
        let mut p = Platoon::new(1.0, vec![0.0, -s], vec![0.0, 0.0]).unwrap();
        p.prev_positions = Some(vec![0.0, -3.0 * s]);
        let next = step_explicit_explicit(&p, &t, 1.0, 0.0).platoon;
        assert!(next.gap(1) < s);
        assert_eq!(next.prev_positions.as_deref(), Some(&[0.0, -s][..]));
    }

    #[test]
    fn explicit_explicit_without_history_matches_nonstandard() {
        let t = triangular();
        let p = Platoon::new(1.0, vec![0.0, -10.0, -30.0], vec![2.0, 1.0, 5.0]).unwrap();
        let a = step_explicit_explicit(&p, &t, 1.0, 2.0).platoon;
        let b = step_nonstandard(&p, &t, 1.0, 2.0).platoon;
        assert_eq!(a.positions, b.positions);
        assert_eq!(a.speeds, b.speeds);
    }

    #[test]
    fn acceleration_examples() {
        let t = triangular();
        let local = LocalState {
            speed: 0.0,
            spacing: 10.0,
            speed_difference: 0.0,
        };
        let phillips = Model::PhillipsRelax { relaxation_time: 5.0 };
        assert_relative_eq!(acceleration(&phillips, &t, local, 1.0, 0.1), 3.0 / 7.0, epsilon = 1e-12);

        let jwz = Model::Jwz { relaxation_time: 5.0, c0: 2.0 };
        let local = LocalState {
            speed_difference: -1.0,
            ..local
        };
        assert_relative_eq!(acceleration(&jwz, &t, local, 1.0, 0.1), 3.0 / 7.0 - 0.2, epsilon = 1e-12);

        let eq = LocalState {
            speed: 15.0 / 7.0,
            spacing: 10.0,
            speed_difference: 0.0,
        };
        for model in models() {
            assert!(acceleration(&model, &t, eq, 1.0, 0.5).abs() < 1e-12);
        }
    }

    #[test]
    fn phillips_with_relaxation_dt_is_nonstandard() {
        let g = greenshields();
        let p = Platoon::new(0.5, vec![3.0, -4.0, -9.0, -25.0], vec![1.0, 0.3, 7.1, 12.0]).unwrap();
        let dt = 0.17;
        let a = step_second_order(&p, &Model::PhillipsRelax { relaxation_time: dt }, &g, dt, 1.0).unwrap();
        let b = step_nonstandard(&p, &g, dt, 1.0);
        assert_eq!(a, b);
    }

    #[test]
    fn second_order_rejects_corrected() {
        let p = Platoon::new(1.0, vec![0.0, -10.0], vec![0.0, 0.0]).unwrap();
        let m = Model::corrected1(Model::NonstandardLwr);
        assert!(matches!(
            step_second_order(&p, &m, &triangular(), 1.0, 0.0),
            Err(Error::Unsupported(_))
        ));
    }

    #[test]
    fn corrected_1_clamps() {
        let t = triangular();
        let jwz = Model::Jwz { relaxation_time: 5.0, c0: 2.0 };
        // leader much slower: gradient term drives speed negative
        let p = Platoon::new(1.0, vec![0.0, -8.0], vec![0.0, 1.0]).unwrap();
        let raw = step_second_order(&p, &Model::Jwz { relaxation_time: 0.5, c0: 20.0 }, &t, 1.0, 0.0).unwrap();
        assert!(raw.platoon.speeds[1] < 0.0);
        let c = step_corrected_1(&p, &Model::Jwz { relaxation_time: 0.5, c0: 20.0 }, &t, 1.0, 0.0);
        assert_eq!(c.platoon.speeds[1], 0.0);
        assert_eq!(c.platoon.positions[1], -8.0);

        // fast follower far behind a fast leader: capped at theta(s)
        let p = Platoon::new(1.0, vec![0.0, -10.0], vec![30.0, 10.0]).unwrap();
        let c = step_corrected_1(&p, &jwz, &t, 1.0, 30.0);
        assert_eq!(c.platoon.speeds[1], t.theta(10.0).unwrap());

        let p = Platoon::new(1.0, vec![0.0, -10.0, -31.0], vec![4.0, 2.0, 9.0]).unwrap();
        let a = step_corrected_1(&p, &Model::NonstandardLwr, &t, 1.0, 4.0);
        let b = step_nonstandard(&p, &t, 1.0, 4.0);
        assert_eq!(a, b);
    }

    #[test]
    fn corrected_2_zero_headroom() {
        let t = triangular();
        let p = Platoon::new(1.0, vec![0.0, -7.0], vec![0.0, 10.0]).unwrap();
        for model in models().into_iter().take(3) {
            let c = step_corrected_2(&p, &model, &t, 1.0, 0.0);
            assert_eq!(c.platoon.speeds[1], 0.0);
            assert_eq!(c.platoon.positions[1], -7.0);
        }
    }

    #[test]
    fn combination_checks() {
        assert!(check_combination(&Model::NonstandardLwr, Scheme::HarmonicCentral).is_ok());
        assert!(matches!(
            check_combination(&Model::PhillipsRelax { relaxation_time: 1.0 }, Scheme::ForwardSpacing),
            Err(Error::Unsupported(_))
        ));
        let nested = Model::corrected1(Model::corrected2(Model::NonstandardLwr));
        assert!(check_combination(&nested, Scheme::AnisotropicSymplectic).is_err());
        assert!(check_combination(&Model::PhillipsRelax { relaxation_time: 0.0 }, Scheme::AnisotropicSymplectic).is_err());
        assert!(Simulation::new(
            scenario(greenshields(), 0.05, 1.0, 2),
            Model::Jwz { relaxation_time: 1.0, c0: 1.0 },
            Scheme::ExplicitExplicit
        )
        .is_err());
    }

    #[test]
    fn zero_duration_keeps_initial_state() {
        let sc = Scenario {
            duration: 0.0,
            ..scenario(greenshields(), 0.05, 1.0, 4)
        };
        let traj = simulate(&sc, &Model::NonstandardLwr, Scheme::AnisotropicSymplectic).unwrap();
        assert_eq!(traj.times, vec![0.0]);
        assert!(traj.accelerations.is_empty());
    }

    #[test]
    fn accelerations_are_speed_differences() {
        let sc = scenario(greenshields(), 1.0 / 28.0, 7.5, 6);
        let traj = simulate(&sc, &Model::NonstandardLwr, Scheme::AnisotropicSymplectic).unwrap();
        assert_eq!(traj.times.len(), sc.steps() + 1);
        assert_eq!(traj.accelerations.len(), traj.times.len() - 1);
        for j in 0..traj.accelerations.len() {
            for m in 0..=6 {
                assert_eq!(
                    traj.accelerations[j][m],
                    (traj.speeds[j + 1][m] - traj.speeds[j][m]) / sc.dt
                );
            }
        }
    }

    #[test]
    fn strided_recording_keeps_last_state() {
        let sc = scenario(greenshields(), 1.0 / 28.0, 7.5, 6);
        let full = simulate(&sc, &Model::NonstandardLwr, Scheme::AnisotropicSymplectic).unwrap();
        let mut seen = 0;
        let thin = simulate_recorded(&sc, &Model::NonstandardLwr, Scheme::AnisotropicSymplectic, 4, |_, _, _| seen += 1).unwrap();
        assert_eq!(seen, sc.steps() + 1);
        assert_eq!(thin.positions.last(), full.positions.last());
        assert_eq!(thin.accelerations.len(), thin.times.len() - 1);
        for (r, &j) in thin.steps.iter().enumerate() {
            assert_eq!(thin.speeds[r], full.speeds[j]);
            if r < thin.accelerations.len() {
                assert_eq!(thin.accelerations[r], full.accelerations[j]);
            }
        }
    }

    #[test]
    fn intra_step_order_does_not_matter() {
        let t = triangular();
        let p = Platoon::new(1.0, vec![0.0, -9.0, -20.0, -22.0, -40.0], vec![3.0, 1.0, 2.0, 0.5, 9.0]).unwrap();
        let forward = step_second_order(&p, &Model::Jwz { relaxation_time: 2.0, c0: 1.0 }, &t, 0.5, 3.0).unwrap();
        let mut reversed = p.clone();
        reversed.positions[1..].reverse();
        reversed.speeds[1..].reverse();
        // evaluate each follower against a platoon truncated at it: same answer
        for m in 1..=4 {
            let mut trunc = p.clone();
            trunc.positions.truncate(m + 1);
            trunc.speeds.truncate(m + 1);
            let single = step_second_order(&trunc, &Model::Jwz { relaxation_time: 2.0, c0: 1.0 }, &t, 0.5, 3.0).unwrap();
            assert_eq!(single.platoon.positions[m], forward.platoon.positions[m]);
            assert_eq!(single.platoon.speeds[m], forward.platoon.speeds[m]);
        }
    }

    #[test]
    fn corrected_1_of_nonstandard_matches_nonstandard() {
        let sc = Scenario {
            duration: 60.0,
            ..scenario(greenshields(), 1.0 / 28.0, 2.5, 20)
        };
        let a = simulate(&sc, &Model::NonstandardLwr, Scheme::AnisotropicSymplectic).unwrap();
        let b = simulate(&sc, &Model::corrected1(Model::NonstandardLwr), Scheme::AnisotropicSymplectic).unwrap();
        for (ra, rb) in a.positions.iter().zip(&b.positions) {
            for (x, y) in ra.iter().zip(rb) {
                assert!((x - y).abs() <= 1e-12);
            }
        }
    }

    fn platoon_strategy() -> impl Strategy<Value = (Vec<f64>, f64, f64)> {
        // spacings >= S = 7, dn, and dt satisfying the condition for Greenshields
        (
            proptest::collection::vec(7.0f64..200.0, 1..12),
            prop_oneof![Just(1.0), Just(0.5), Just(0.25)],
            0.05f64..1.0,
        )
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn collision_free_under_condition((spacings, dn, frac) in platoon_strategy(), lead in 0.0f64..20.0) {
            let g = greenshields();
            let dt = frac * dn / collision_free_threshold(&g);
            let mut positions = vec![0.0];
            for s in &spacings {
                let last = *positions.last().unwrap();
                positions.push(last - s * dn);
            }
            let speeds = vec![0.0; positions.len()];
            let mut p = Platoon::new(dn, positions, speeds).unwrap();
            let s_jam = g.jam_spacing();
            for j in 0..200 {
                let lead_speed = if j % 50 < 25 { lead } else { 0.0 };
                let adv = step_nonstandard(&p, &g, dt, lead_speed);
                prop_assert!(adv.clamped.is_empty());
                p = adv.platoon;
                for m in 1..=p.followers() {
                    prop_assert!(p.gap(m) >= s_jam * dn - 1e-9);
                    prop_assert!(p.gap(m) > 0.0);
                    prop_assert!(p.speeds[m] >= 0.0);
                }
            }
        }

        #[test]
        fn corrected_2_dominates_corrected_1((spacings, dn, frac) in platoon_strategy(), speeds in proptest::collection::vec(0.0f64..25.0, 13), c0 in -3.0f64..3.0) {
            let t = triangular();
            let dt = frac * dn / collision_free_threshold(&t);
            let mut positions = vec![0.0];
            for s in &spacings {
                let last = *positions.last().unwrap();
                positions.push(last - s * dn);
            }
            let n = positions.len();
            let p = Platoon::new(dn, positions, speeds[..n].to_vec()).unwrap();
            let inner = Model::Jwz { relaxation_time: 5.0, c0 };
            let a = step_corrected_1(&p, &inner, &t, dt, 0.0);
            let b = step_corrected_2(&p, &inner, &t, dt, 0.0);
            for m in 1..n {
                prop_assert!(b.platoon.speeds[m] >= a.platoon.speeds[m] - 1e-12);
            }
        }
    }
}
