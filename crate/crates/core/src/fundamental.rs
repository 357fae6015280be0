//! Speed-density relations and the quantities derived from them.
//!
//! Every diagram is described by its speed-density law `eta(k)` on
//! `[0, K]`. Flow `phi(k) = k eta(k)`, the speed-spacing law
//! `theta(s) = eta(1/s)` and their derivatives follow from it.

use crate::error::{Error, Result};

/// Relative slack used when checking that a density or spacing lies inside
/// the diagram's domain. Values within the slack are snapped to the bound.
const DOMAIN_SLACK: f64 = 1e-12;

/// A speed-density relation with jam density `K`.
///
/// Implementors supply the `*_raw` functions, which may assume their input
/// lies in `[0, K]`. The provided methods do the domain checking.
pub trait FundamentalDiagram {
    /// Jam density `K` (veh/m).
    fn jam_density(&self) -> f64;

    /// Equilibrium speed at density `k`, no domain check.
    fn speed_raw(&self, k: f64) -> f64;

    /// `d eta / dk`, no domain check.
    fn speed_prime_raw(&self, k: f64) -> f64;

    /// `d^2 eta / dk^2`, no domain check.
    fn speed_second_raw(&self, k: f64) -> f64;

    /// Densities at which `eta` is not differentiable.
    fn kinks(&self) -> Vec<f64> {
        Vec::new()
    }

    /// Jam spacing `S = 1/K` (m).
    fn jam_spacing(&self) -> f64 {
        1.0 / self.jam_density()
    }

    /// Speed at zero density.
    fn free_flow_speed(&self) -> f64 {
        self.speed_raw(0.0)
    }

    fn eta(&self, k: f64) -> Result<f64> {
        let k = self.check_density(k)?;
        Ok(self.speed_raw(k))
    }

    fn eta_prime(&self, k: f64) -> Result<f64> {
        let k = self.check_density(k)?;
        Ok(self.speed_prime_raw(k))
    }

    fn eta_second(&self, k: f64) -> Result<f64> {
        let k = self.check_density(k)?;
        Ok(self.speed_second_raw(k))
    }

    /// Flow `k eta(k)` (veh/s).
    fn phi(&self, k: f64) -> Result<f64> {
        let k = self.check_density(k)?;
        Ok(k * self.speed_raw(k))
    }

    /// Characteristic wave speed `eta(k) + k eta'(k)` (m/s).
    fn phi_prime(&self, k: f64) -> Result<f64> {
        let k = self.check_density(k)?;
        Ok(self.speed_raw(k) + k * self.speed_prime_raw(k))
    }

    /// Speed-spacing relation `theta(s) = eta(1/s)` for `s >= S`.
    ///
    /// `s = +inf` maps to zero density.
    fn theta(&self, s: f64) -> Result<f64> {
        let k = self.spacing_to_density(s)?;
        Ok(self.speed_raw(k))
    }

    /// `d theta / ds = -eta'(1/s) / s^2`, defined for `s > S`.
    fn theta_prime(&self, s: f64) -> Result<f64> {
        let jam = self.jam_spacing();
        if !(s > jam) {
            return Err(Error::SubJamSpacing { spacing: s, jam });
        }
        let k = (1.0 / s).min(self.jam_density());
        Ok(-self.speed_prime_raw(k) / (s * s))
    }

    /// Validates `k` and snaps values within rounding of `K` onto `K`.
    fn check_density(&self, k: f64) -> Result<f64> {
        let jam = self.jam_density();
        if k.is_nan() || k < 0.0 || k > jam * (1.0 + DOMAIN_SLACK) {
            return Err(Error::DensityOutOfRange { density: k, jam });
        }
        Ok(k.min(jam))
    }

    fn spacing_to_density(&self, s: f64) -> Result<f64> {
        let jam = self.jam_spacing();
        if s.is_nan() || s < jam * (1.0 - DOMAIN_SLACK) {
            return Err(Error::SubJamSpacing { spacing: s, jam });
        }
        Ok((1.0 / s).min(self.jam_density()))
    }
}

/// `eta(k) = V (1 - k/K)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Greenshields {
    pub free_flow_speed: f64,
    pub jam_density: f64,
}

impl Greenshields {
    pub fn new(free_flow_speed: f64, jam_density: f64) -> Result<Self> {
        check_positive("free_flow_speed", free_flow_speed)?;
        check_positive("jam_density", jam_density)?;
        Ok(Self {
            free_flow_speed,
            jam_density,
        })
    }
}

impl FundamentalDiagram for Greenshields {
    fn jam_density(&self) -> f64 {
        self.jam_density
    }

    fn speed_raw(&self, k: f64) -> f64 {
        self.free_flow_speed * (1.0 - k / self.jam_density)
    }

    fn speed_prime_raw(&self, _k: f64) -> f64 {
        -self.free_flow_speed / self.jam_density
    }

    fn speed_second_raw(&self, _k: f64) -> f64 {
        0.0
    }
}

/// `eta(k) = min{V, W (K/k - 1)}`, with time gap `tau = 1/(K W)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Triangular {
    pub free_flow_speed: f64,
    pub wave_speed: f64,
    pub jam_density: f64,
}

impl Triangular {
    pub fn new(free_flow_speed: f64, wave_speed: f64, jam_density: f64) -> Result<Self> {
        check_positive("free_flow_speed", free_flow_speed)?;
        check_positive("wave_speed", wave_speed)?;
        check_positive("jam_density", jam_density)?;
        Ok(Self {
            free_flow_speed,
            wave_speed,
            jam_density,
        })
    }

    /// `k_c = W K / (V + W)`.
    pub fn critical_density(&self) -> f64 {
        self.wave_speed * self.jam_density / (self.free_flow_speed + self.wave_speed)
    }

    pub fn time_gap(&self) -> f64 {
        1.0 / (self.jam_density * self.wave_speed)
    }

    // At the kink itself the congested branch is used.
    fn congested(&self, k: f64) -> bool {
        k >= self.critical_density()
    }
}

impl FundamentalDiagram for Triangular {
    fn jam_density(&self) -> f64 {
        self.jam_density
    }

    fn speed_raw(&self, k: f64) -> f64 {
        if k <= 0.0 {
            return self.free_flow_speed;
        }
        self.free_flow_speed
            .min(self.wave_speed * (self.jam_density / k - 1.0))
    }

    fn speed_prime_raw(&self, k: f64) -> f64 {
        if self.congested(k) {
            -self.wave_speed * self.jam_density / (k * k)
        } else {
            0.0
        }
    }

    fn speed_second_raw(&self, k: f64) -> f64 {
        if self.congested(k) {
            2.0 * self.wave_speed * self.jam_density / (k * k * k)
        } else {
            0.0
        }
    }

    fn kinks(&self) -> Vec<f64> {
        vec![self.critical_density()]
    }
}

/// Sigmoid speed-density law with a non-concave flow-density relation:
///
/// `eta(k) = c1 [ (1 + exp((k/K - c2)/c3))^-1 - c4 ] l / T_rel`.
///
/// The formula leaves `eta(K)` slightly negative (about `-1e-7` m/s with the
/// standard coefficients). With `clamp_nonnegative` set, speeds are clamped
/// at zero.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Kerner {
    pub unit_length: f64,
    pub relaxation_time: f64,
    pub jam_density: f64,
    pub c1: f64,
    pub c2: f64,
    pub c3: f64,
    pub c4: f64,
    pub clamp_nonnegative: bool,
}

impl Default for Kerner {
    fn default() -> Self {
        Self {
            unit_length: 28.0,
            relaxation_time: 5.0,
            jam_density: 0.18,
            c1: 5.0461,
            c2: 0.25,
            c3: 0.06,
            c4: 3.73e-6,
            clamp_nonnegative: true,
        }
    }
}

impl Kerner {
    pub fn validate(&self) -> Result<()> {
        check_positive("unit_length", self.unit_length)?;
        check_positive("relaxation_time", self.relaxation_time)?;
        check_positive("jam_density", self.jam_density)?;
        check_positive("c1", self.c1)?;
        check_positive("c3", self.c3)?;
        Ok(())
    }

    fn scale(&self) -> f64 {
        self.c1 * self.unit_length / self.relaxation_time
    }

    fn logistic(&self, k: f64) -> f64 {
        1.0 / (1.0 + ((k / self.jam_density - self.c2) / self.c3).exp())
    }

    /// The formula without clamping.
    pub fn unclamped_speed(&self, k: f64) -> f64 {
        self.scale() * (self.logistic(k) - self.c4)
    }

    fn unclamped_prime(&self, k: f64) -> f64 {
        let s = self.logistic(k);
        -self.scale() * s * (1.0 - s) / (self.c3 * self.jam_density)
    }

    fn clamped_here(&self, k: f64) -> bool {
        self.clamp_nonnegative && self.unclamped_speed(k) < 0.0
    }
}

impl FundamentalDiagram for Kerner {
    fn jam_density(&self) -> f64 {
        self.jam_density
    }

    fn speed_raw(&self, k: f64) -> f64 {
        let v = self.unclamped_speed(k);
        if self.clamp_nonnegative {
            v.max(0.0)
        } else {
            v
        }
    }

    fn speed_prime_raw(&self, k: f64) -> f64 {
        if self.clamped_here(k) {
            0.0
        } else {
            self.unclamped_prime(k)
        }
    }

    /// Centered difference of the analytic first derivative.
    fn speed_second_raw(&self, k: f64) -> f64 {
        if self.clamped_here(k) {
            return 0.0;
        }
        let h = 1e-6 * self.jam_density;
        (self.unclamped_prime(k + h) - self.unclamped_prime(k - h)) / (2.0 * h)
    }
}

/// The concrete diagrams, selectable from configuration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Diagram {
    Greenshields(Greenshields),
    Triangular(Triangular),
    Kerner(Kerner),
}

impl Diagram {
    pub fn name(&self) -> &'static str {
        match self {
            Diagram::Greenshields(_) => "greenshields",
            Diagram::Triangular(_) => "triangular",
            Diagram::Kerner(_) => "kerner",
        }
    }

    fn inner(&self) -> &dyn FundamentalDiagram {
        match self {
            Diagram::Greenshields(d) => d,
            Diagram::Triangular(d) => d,
            Diagram::Kerner(d) => d,
        }
    }
}

impl From<Greenshields> for Diagram {
    fn from(d: Greenshields) -> Self {
        Diagram::Greenshields(d)
    }
}

impl From<Triangular> for Diagram {
    fn from(d: Triangular) -> Self {
        Diagram::Triangular(d)
    }
}

impl From<Kerner> for Diagram {
    fn from(d: Kerner) -> Self {
        Diagram::Kerner(d)
    }
}

impl FundamentalDiagram for Diagram {
    fn jam_density(&self) -> f64 {
        self.inner().jam_density()
    }

    fn speed_raw(&self, k: f64) -> f64 {
        self.inner().speed_raw(k)
    }

    fn speed_prime_raw(&self, k: f64) -> f64 {
        self.inner().speed_prime_raw(k)
    }

    fn speed_second_raw(&self, k: f64) -> f64 {
        self.inner().speed_second_raw(k)
    }

    fn kinks(&self) -> Vec<f64> {
        self.inner().kinks()
    }
}

fn check_positive(name: &str, value: f64) -> Result<()> {
    if value.is_finite() && value > 0.0 {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!(
            "{name} must be positive and finite, got {value}"
        )))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn greenshields() -> Greenshields {
        Greenshields::new(20.0, 1.0 / 7.0).unwrap()
    }

    fn triangular() -> Triangular {
        Triangular::new(20.0, 5.0, 1.0 / 7.0).unwrap()
    }

    fn all() -> Vec<Diagram> {
        vec![
            greenshields().into(),
            triangular().into(),
            Kerner::default().into(),
        ]
    }

    #[test]
    fn eta_examples() {
        let g = greenshields();
        assert_relative_eq!(g.eta(g.jam_density / 4.0).unwrap(), 15.0, epsilon = 1e-12);
        let t = triangular();
        assert_eq!(t.eta(t.jam_density / 10.0).unwrap(), 20.0);
        for d in all() {
            assert_eq!(d.eta(d.jam_density()).unwrap(), 0.0, "{}", d.name());
        }
    }

    #[test]
    fn eta_rejects_out_of_range() {
        let g = greenshields();
        assert!(matches!(
            g.eta(-0.01),
            Err(Error::DensityOutOfRange { .. })
        ));
        assert!(g.eta(0.2).is_err());
        assert!(g.phi(0.2).is_err());
        assert!(g.eta(f64::NAN).is_err());
    }

    #[test]
    fn jam_spacing_is_reciprocal() {
        for d in all() {
            assert!((d.jam_spacing() * d.jam_density() - 1.0).abs() <= 1e-15);
        }
    }

    #[test]
    fn theta_examples() {
        for d in all() {
            assert_eq!(d.theta(d.jam_spacing()).unwrap(), 0.0);
        }
        assert_relative_eq!(triangular().theta(10.0).unwrap(), 15.0 / 7.0, epsilon = 1e-12);
        assert_relative_eq!(greenshields().theta(28.0).unwrap(), 15.0, epsilon = 1e-12);
        assert_eq!(greenshields().theta(f64::INFINITY).unwrap(), 20.0);
        assert!(matches!(
            greenshields().theta(6.9),
            Err(Error::SubJamSpacing { .. })
        ));
    }

    #[test]
    fn phi_examples() {
        let g = greenshields();
        let t = triangular();
        for d in all() {
            assert_eq!(d.phi(0.0).unwrap(), 0.0);
        }
        assert_relative_eq!(t.phi_prime(t.jam_density).unwrap(), -5.0, epsilon = 1e-12);
        assert_relative_eq!(g.phi_prime(g.jam_density).unwrap(), -20.0, epsilon = 1e-12);
        // congested branch at the kink
        assert_relative_eq!(
            t.phi_prime(t.critical_density()).unwrap(),
            -5.0,
            epsilon = 1e-12
        );
    }

    #[test]
    fn theta_prime_examples() {
        assert_relative_eq!(greenshields().theta_prime(14.0).unwrap(), 20.0 * 7.0 / 196.0, epsilon = 1e-12);
        assert_relative_eq!(triangular().theta_prime(10.0).unwrap(), 5.0 / 7.0, epsilon = 1e-12);
        assert_eq!(triangular().theta_prime(64.0).unwrap(), 0.0);
        assert!(triangular().theta_prime(7.0).is_err());
        for d in all() {
            for i in 1..200 {
                let s = d.jam_spacing() * (1.0 + 0.05 * i as f64);
                assert!(d.theta_prime(s).unwrap() >= 0.0);
            }
        }
    }

    #[test]
    fn triangular_kink_and_time_gap() {
        let t = triangular();
        let kc = t.critical_density();
        assert_relative_eq!(kc, 5.0 / 7.0 / 25.0, epsilon = 1e-15);
        assert_relative_eq!(t.eta(kc).unwrap(), 20.0, epsilon = 1e-12);
        assert_relative_eq!(t.time_gap(), 1.4, epsilon = 1e-12);
    }

    #[test]
    fn kerner_clamp() {
        let raw = Kerner {
            clamp_nonnegative: false,
            ..Kerner::default()
        };
        let at_jam = raw.eta(raw.jam_density).unwrap();
        assert!(at_jam < 0.0 && at_jam > -1e-6, "{at_jam}");
        assert_eq!(Kerner::default().eta(0.18).unwrap(), 0.0);
        assert_relative_eq!(Kerner::default().free_flow_speed(), 27.8265, epsilon = 1e-3);
    }

    #[test]
    fn constructors_reject_nonpositive() {
        assert!(Greenshields::new(0.0, 0.1).is_err());
        assert!(Triangular::new(20.0, -1.0, 0.1).is_err());
        assert!(Kerner {
            jam_density: 0.0,
            ..Kerner::default()
        }
        .validate()
        .is_err());
    }

    #[test]
    fn theta_is_eta_of_reciprocal() {
        for d in all() {
            let kj = d.jam_density();
            for i in 0..=10_000 {
                let k = kj * i as f64 / 10_000.0;
                let s = 1.0 / k;
                let lhs = d.theta(s).unwrap();
                let rhs = d.eta(k).unwrap();
                assert!((lhs - rhs).abs() <= 1e-12, "{} k={k}: {lhs} vs {rhs}", d.name());
            }
        }
    }

    #[test]
    fn eta_prime_matches_finite_difference() {
        for d in all() {
            let kj = d.jam_density();
            let h = 1e-6 * kj;
            let kinks = d.kinks();
            for i in 1..1000 {
                let k = kj * i as f64 / 1000.0;
                if kinks.iter().any(|&c| (k - c).abs() < 10.0 * h) || k + h > kj {
                    continue;
                }
                let fd = (d.speed_raw(k + h) - d.speed_raw(k - h)) / (2.0 * h);
                let an = d.eta_prime(k).unwrap();
                let scale = an.abs().max(1e-3);
                assert!(
                    (fd - an).abs() <= 1e-4 * scale,
                    "{} k={k}: fd {fd} analytic {an}",
                    d.name()
                );
            }
        }
    }

    #[test]
    fn monotone_speed() {
        for d in [Diagram::from(greenshields()), triangular().into()] {
            let kj = d.jam_density();
            for i in 0..=1000 {
                assert!(d.eta_prime(kj * i as f64 / 1000.0).unwrap() <= 0.0);
            }
        }
        let raw = Kerner {
            clamp_nonnegative: false,
            ..Kerner::default()
        };
        let mut prev = f64::INFINITY;
        for i in 0..=10_000 {
            let v = raw.eta(0.18 * i as f64 / 10_000.0).unwrap();
            assert!(v < prev);
            prev = v;
        }
    }

    #[test]
    fn kerner_second_derivative_matches_difference_of_eta() {
        let d = Kerner::default();
        let h = 1e-4 * d.jam_density;
        for i in 1..50 {
            let k = d.jam_density * i as f64 / 50.0;
            let fd = (d.speed_raw(k + h) - 2.0 * d.speed_raw(k) + d.speed_raw(k - h)) / (h * h);
            let an = d.eta_second(k).unwrap();
            assert!((fd - an).abs() <= 1e-3 * an.abs().max(1.0), "k={k}: {fd} vs {an}");
        }
    }
}
