//! Transmission success under Nakagami-m fading with integer `m`.
//!
//! For `h ~ Gamma(m, 1/m)` the success event `h >= theta_hat I` has
//! probability `E[sum_{i<m} (m theta_hat I)^i / i! exp(-m theta_hat I)]`, so
//! the single-slot and two-slot success probabilities are finite sums of
//! interference functionals. All integrals are written in the variable
//! `x = theta_hat l(r)` through `w = x / (1 + x)`, which keeps them bounded
//! near the pole of the singular path loss.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::functionals::{matrix_sum, NetworkConfig};
use crate::quadrature::{radial_integral_r, QuadratureSpec, RadialTail};
use crate::special::{factorial, ln_gamma};

/// A source-destination link at distance `d` with SIR threshold `theta`,
/// embedded in an interfering Poisson field.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinkConfig {
    pub network: NetworkConfig,
    pub threshold: f64,
    pub distance: f64,
    m: u32,
}

impl LinkConfig {
    pub fn new(network: NetworkConfig, threshold: f64, distance: f64) -> Result<Self> {
        if !(threshold > 0.0) || !threshold.is_finite() {
            return Err(Error::InvalidInput(format!("SIR threshold must be positive, got {threshold}")));
        }
        if !(distance > 0.0) || !distance.is_finite() {
            return Err(Error::InvalidInput(format!("link distance must be positive, got {distance}")));
        }
        let shape = network.fading.gamma_shape().ok_or_else(|| {
            Error::InvalidInput(format!(
                "success probabilities need Nakagami-m (or Rayleigh) fading, got {}",
                network.fading
            ))
        })?;
        if shape.fract() != 0.0 || !(1.0..=64.0).contains(&shape) {
            return Err(Error::InvalidInput(format!(
                "the finite ccdf sum requires an integer Nakagami m between 1 and 64, got {shape}"
            )));
        }
        Ok(Self {
            network,
            threshold,
            distance,
            m: shape as u32,
        })
    }

    pub fn m(&self) -> u32 {
        self.m
    }

    /// `theta / l(d)`.
    pub fn theta_hat(&self) -> f64 {
        self.threshold / self.network.pathloss.gain(self.distance)
    }
}

/// Success probabilities of one link and the derived two-slot quantities.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinkReport {
    pub p_success: f64,
    pub p_joint: f64,
    pub p_joint_outage: f64,
    pub p_at_least_one: f64,
    pub p_indep_square: f64,
    pub p_indep_diversity: f64,
}

fn clamp_probability(p: f64) -> f64 {
    p.clamp(0.0, 1.0)
}

/// `ln(Gamma(m + a) / Gamma(m))`.
fn ln_rising(m: u32, a: u32) -> f64 {
    (0..a).map(|i| f64::from(m + i).ln()).sum()
}

struct Kernel {
    theta_hat: f64,
    m: u32,
    link: LinkConfig,
}

impl Kernel {
    fn new(link: &LinkConfig) -> Self {
        Self {
            theta_hat: link.theta_hat(),
            m: link.m,
            link: *link,
        }
    }

    /// `(w, 1 - w)` with `w = x / (1 + x)`, `x = theta_hat l(r)`.
    fn split(&self, r: f64) -> (f64, f64) {
        let x = self.theta_hat * self.link.network.pathloss.gain(r);
        if x.is_infinite() {
            return (1.0, 0.0);
        }
        (x / (1.0 + x), 1.0 / (1.0 + x))
    }

    /// `1 - (1 + x)^-m`.
    fn laplace_complement(&self, r: f64) -> f64 {
        let x = self.theta_hat * self.link.network.pathloss.gain(r);
        if x.is_infinite() {
            return 1.0;
        }
        -(-f64::from(self.m) * x.ln_1p()).exp_m1()
    }

    /// `tx_prob Gamma(m + a) / Gamma(m) x^a / (1 + x)^(m + a) + (1 - tx_prob) 1(a = 0)`.
    fn slot_factor(&self, r: f64, a: u32) -> f64 {
        let p = self.link.network.tx_prob;
        let (w, v) = self.split(r);
        let active = p * ln_rising(self.m, a).exp() * w.powi(a as i32) * v.powi(self.m as i32);
        if a == 0 {
            active + (1.0 - p)
        } else {
            active
        }
    }

    fn radial(&self, f: impl Fn(f64) -> f64, quad: &QuadratureSpec) -> Result<f64> {
        radial_integral_r(
            f,
            RadialTail::Algebraic {
                alpha: self.link.network.pathloss.alpha(),
            },
            quad,
        )
    }
}

/// Probability that a single transmission meets the SIR threshold.
pub fn success_probability(link: &LinkConfig, quad: &QuadratureSpec) -> Result<f64> {
    let net = &link.network;
    if net.intensity == 0.0 {
        return Ok(1.0);
    }
    let k = Kernel::new(link);
    let lambda_p = net.intensity * net.tx_prob;
    let pgfl = (-lambda_p * k.radial(|r| k.laplace_complement(r), quad)?).exp();
    let mut series = 1.0;
    for i in 1..link.m {
        let inner = matrix_sum(&[i], |col| {
            let a = col[0];
            Ok(net.intensity * k.radial(|r| k.slot_factor(r, a), quad)?)
        })?;
        series += inner / factorial(i);
    }
    Ok(clamp_probability(pgfl * series))
}

/// Closed form of [`success_probability`] for singular path loss.
pub fn success_probability_singular(link: &LinkConfig) -> Result<f64> {
    let net = &link.network;
    if !net.pathloss.is_singular() {
        return Err(Error::InvalidInput("closed form needs singular path loss".into()));
    }
    if net.intensity == 0.0 {
        return Ok(1.0);
    }
    let m = f64::from(link.m);
    let delta = 2.0 / net.pathloss.alpha();
    let th = link.theta_hat().powf(delta);
    let ratio = (ln_gamma(m + delta) - ln_gamma(m)).exp();
    let lambda_p = net.intensity * net.tx_prob;
    let pgfl = (-lambda_p * PI * th * (ln_gamma(1.0 - delta)).exp() * ratio).exp();
    let base = lambda_p * delta * PI * th * ratio;
    let mut series = 1.0;
    for i in 1..link.m {
        let inner = matrix_sum(&[i], |col| Ok(base * ln_gamma(f64::from(col[0]) - delta).exp()))?;
        series += inner / factorial(i);
    }
    Ok(clamp_probability(pgfl * series))
}

/// Probability that two transmissions in distinct slots both succeed, with
/// the interferer positions shared between the slots.
pub fn joint_success_probability(link: &LinkConfig, quad: &QuadratureSpec) -> Result<f64> {
    let net = &link.network;
    if net.intensity == 0.0 {
        return Ok(1.0);
    }
    let k = Kernel::new(link);
    let p = net.tx_prob;
    // 1 - (1 - p u)^2 with u = 1 - (1 + x)^-m
    let pgfl_integrand = |r: f64| {
        let u = k.laplace_complement(r);
        p * u * (2.0 - p * u)
    };
    let pgfl = (-net.intensity * k.radial(pgfl_integrand, quad)?).exp();
    let mut series = 1.0;
    for i in 0..link.m {
        for j in 0..link.m {
            if i + j == 0 {
                continue;
            }
            let inner = matrix_sum(&[i, j], |col| {
                let (a, b) = (col[0], col[1]);
                Ok(net.intensity * k.radial(|r| k.slot_factor(r, a) * k.slot_factor(r, b), quad)?)
            })?;
            series += inner / (factorial(i) * factorial(j));
        }
    }
    Ok(clamp_probability(pgfl * series))
}

/// Closed form of [`joint_success_probability`] for singular path loss and
/// `tx_prob = 1`.
pub fn joint_success_probability_singular(link: &LinkConfig) -> Result<f64> {
    let net = &link.network;
    if !net.pathloss.is_singular() {
        return Err(Error::InvalidInput("closed form needs singular path loss".into()));
    }
    if net.tx_prob != 1.0 {
        return Err(Error::Unsupported(
            "the joint closed form holds for transmit probability 1 only".into(),
        ));
    }
    if net.intensity == 0.0 {
        return Ok(1.0);
    }
    let m = f64::from(link.m);
    let delta = 2.0 / net.pathloss.alpha();
    let th = link.theta_hat().powf(delta);
    let lambda = net.intensity;
    let pgfl = (-lambda * PI * th * (ln_gamma(1.0 - delta) + ln_gamma(2.0 * m + delta) - ln_gamma(2.0 * m)).exp()).exp();
    let base = lambda * delta * PI * th * (ln_gamma(2.0 * m + delta) - 2.0 * ln_gamma(m)).exp();
    let mut series = 1.0;
    for i in 0..link.m {
        for j in 0..link.m {
            if i + j == 0 {
                continue;
            }
            let inner = matrix_sum(&[i, j], |col| {
                let (a, b) = (f64::from(col[0]), f64::from(col[1]));
                let ln = ln_gamma(m + a) + ln_gamma(m + b) + ln_gamma(a + b - delta) - ln_gamma(a + b + 2.0 * m);
                Ok(base * ln.exp())
            })?;
            series += inner / (factorial(i) * factorial(j));
        }
    }
    Ok(clamp_probability(pgfl * series))
}

/// Both transmissions fail: `1 - 2 P + P_joint`.
pub fn joint_outage(p_success: f64, p_joint: f64) -> f64 {
    clamp_probability(1.0 - 2.0 * p_success + p_joint)
}

/// At least one of two transmissions succeeds: `2 P - P_joint`.
pub fn at_least_one(p_success: f64, p_joint: f64) -> f64 {
    clamp_probability(2.0 * p_success - p_joint)
}

/// Joint success and time-diversity success if the two slots saw
/// independent interference: `(P^2, 1 - (1 - P)^2)`.
pub fn independent_baselines(p_success: f64) -> (f64, f64) {
    let q = 1.0 - p_success;
    (clamp_probability(p_success * p_success), clamp_probability(1.0 - q * q))
}

/// Success probability as `alpha -> inf` for singular path loss with
/// `theta_hat` held finite: only interferers inside the link distance matter.
pub fn hard_core_limit(intensity: f64, distance: f64) -> f64 {
    (-PI * intensity * distance * distance).exp()
}

/// Which evaluation route produced a value.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    ClosedForm,
    Quadrature,
}

impl Method {
    pub fn as_str(&self) -> &'static str {
        match self {
            Method::ClosedForm => "closed-form",
            Method::Quadrature => "quadrature",
        }
    }
}

/// Single-slot success, using the closed form when the path loss allows it.
pub fn success_auto(link: &LinkConfig, quad: &QuadratureSpec) -> Result<(f64, Method)> {
    if link.network.pathloss.is_singular() {
        Ok((success_probability_singular(link)?, Method::ClosedForm))
    } else {
        Ok((success_probability(link, quad)?, Method::Quadrature))
    }
}

/// Two-slot success, using the closed form when it applies.
pub fn joint_auto(link: &LinkConfig, quad: &QuadratureSpec) -> Result<(f64, Method)> {
    if link.network.pathloss.is_singular() && link.network.tx_prob == 1.0 {
        Ok((joint_success_probability_singular(link)?, Method::ClosedForm))
    } else {
        Ok((joint_success_probability(link, quad)?, Method::Quadrature))
    }
}

pub fn link_report(link: &LinkConfig, quad: &QuadratureSpec) -> Result<LinkReport> {
    let (p, _) = success_auto(link, quad)?;
    let (pj, _) = joint_auto(link, quad)?;
    let (sq, div) = independent_baselines(p);
    Ok(LinkReport {
        p_success: p,
        p_joint: pj,
        p_joint_outage: joint_outage(p, pj),
        p_at_least_one: at_least_one(p, pj),
        p_indep_square: sq,
        p_indep_diversity: div,
    })
}
