//! Sum-product and interference functionals of a stationary Poisson field
//! on the plane.
//!
//! The general evaluator works with any radially symmetric integrand that
//! supplies `1 - E[g]` and the mark-averaged column products
//! `E[g prod_i f_i^{m_i}]`; the interference functional plugs in the
//! per-slot ALOHA/fading factors.

use std::collections::HashMap;
use std::f64::consts::PI;

use crate::combinatorics::{matrix_class, ExponentVector};
use crate::error::{Error, Result};
use crate::models::{DerivedExponents, FadingModel, PathLossModel};
use crate::quadrature::{radial_integral_r, QuadratureSpec, RadialTail};
use crate::special::{factorial, gamma, NeumaierSum};

/// Intensity, ALOHA probability, fading and path loss of the interferers.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NetworkConfig {
    pub intensity: f64,
    pub tx_prob: f64,
    pub fading: FadingModel,
    pub pathloss: PathLossModel,
}

impl NetworkConfig {
    /// `intensity = 0` is accepted and describes an empty field.
    pub fn new(intensity: f64, tx_prob: f64, fading: FadingModel, pathloss: PathLossModel) -> Result<Self> {
        if !(intensity >= 0.0) || !intensity.is_finite() {
            return Err(Error::InvalidInput(format!("intensity must be non-negative, got {intensity}")));
        }
        if !(tx_prob > 0.0 && tx_prob <= 1.0) {
            return Err(Error::InvalidInput(format!(
                "transmit probability must lie in (0, 1], got {tx_prob}"
            )));
        }
        Ok(Self {
            intensity,
            tx_prob,
            fading,
            pathloss,
        })
    }

    pub fn exponents(&self) -> DerivedExponents {
        DerivedExponents::new(self.pathloss.alpha(), self.tx_prob, self.intensity)
    }
}

/// Per-slot exponents and the damping constant `c`.
#[derive(Debug, Clone, PartialEq)]
pub struct FunctionalSpec {
    pub exponents: ExponentVector,
    pub damping: f64,
}

impl FunctionalSpec {
    pub fn new(exponents: ExponentVector, damping: f64) -> Result<Self> {
        if !(damping > 0.0) || !damping.is_finite() {
            return Err(Error::InvalidInput(format!("damping c must be positive, got {damping}")));
        }
        Ok(Self { exponents, damping })
    }

    pub fn slots(&self) -> usize {
        self.exponents.len()
    }
}

/// Radial integrand of a stationary sum-product functional, already
/// averaged over the i.i.d. marks.
pub trait RadialIntegrand {
    /// `1 - E[g]` at distance `r`.
    fn pgfl_complement(&self, r: f64) -> f64;

    /// `E[g prod_i f_i^{m_i}]` at distance `r` for one column `m` of an
    /// exponent matrix.
    fn column(&self, r: f64, exponents: &[u32]) -> f64;

    /// Large-distance behaviour used to pick the quadrature mapping.
    fn tail(&self) -> RadialTail;
}

/// `E[prod_i (sum_x f_i)^{p_i} prod_x g]` for a stationary PPP with
/// intensity `lambda` on the plane.
///
/// `p` may be all zeros, in which case only the pgfl `exp(-lambda int (1 - E[g]))`
/// is returned.
pub fn sum_product_stationary<I: RadialIntegrand + ?Sized>(
    integrand: &I,
    p: &[u32],
    intensity: f64,
    quad: &QuadratureSpec,
) -> Result<f64> {
    if p.is_empty() {
        return Err(Error::InvalidInput("exponent vector must have at least one entry".into()));
    }
    if intensity == 0.0 {
        return Ok(if p.iter().all(|&x| x == 0) { 1.0 } else { 0.0 });
    }
    let tail = integrand.tail();
    let pgfl_integral = radial_integral_r(|r| integrand.pgfl_complement(r), tail, quad)?;
    let pgfl = (-intensity * pgfl_integral).exp();
    if p.iter().all(|&x| x == 0) {
        return Ok(pgfl);
    }
    let series = matrix_sum(p, |col| Ok(intensity * radial_integral_r(|r| integrand.column(r, col), tail, quad)?))?;
    Ok(pgfl * series)
}

/// `sum_{l=1}^{||p||_1} sum_{M in M_l^p} (C_M / l!) prod_columns column(m)`.
///
/// Each distinct column is evaluated once; levels are accumulated in
/// ascending `l` with compensated summation.
pub fn matrix_sum<F>(p: &[u32], mut column: F) -> Result<f64>
where
    F: FnMut(&[u32]) -> Result<f64>,
{
    let exponents = ExponentVector::new(p.to_vec())?;
    let total = exponents.total() as usize;
    let mut cache: HashMap<Vec<u32>, f64> = HashMap::new();
    let mut sum = NeumaierSum::new();
    for l in 1..=total {
        let class = matrix_class(&exponents, l)?;
        let inv_l_factorial = 1.0 / factorial(l as u32);
        let mut level = NeumaierSum::new();
        for wm in class.iter() {
            let mut product = wm.weight * inv_l_factorial;
            for col in wm.matrix.columns() {
                let value = match cache.get(&col) {
                    Some(&v) => v,
                    None => {
                        let v = column(&col)?;
                        cache.insert(col, v);
                        v
                    }
                };
                product *= value;
            }
            level.add(product);
        }
        sum.add(level.value());
    }
    Ok(sum.value())
}

/// Slot factors `tx_prob * E[(h l)^m exp(-c h l)] + (1 - tx_prob) 1(m = 0)`.
#[derive(Debug, Clone, Copy)]
pub struct InterferenceIntegrand {
    pub network: NetworkConfig,
    pub damping: f64,
    pub slots: usize,
}

impl InterferenceIntegrand {
    fn slot_factor(&self, gain: f64, m: u32) -> f64 {
        let p = self.network.tx_prob;
        let moment = p * self.network.fading.exp_moment(gain, m, self.damping);
        if m == 0 {
            moment + (1.0 - p)
        } else {
            moment
        }
    }
}

impl RadialIntegrand for InterferenceIntegrand {
    fn pgfl_complement(&self, r: f64) -> f64 {
        let gain = self.network.pathloss.gain(r);
        let per_slot = self.network.tx_prob * self.network.fading.exp_moment_complement(gain, self.damping);
        // 1 - (1 - per_slot)^q
        -(self.slots as f64 * (-per_slot).ln_1p()).exp_m1()
    }

    fn column(&self, r: f64, exponents: &[u32]) -> f64 {
        let gain = self.network.pathloss.gain(r);
        exponents.iter().map(|&m| self.slot_factor(gain, m)).product()
    }

    fn tail(&self) -> RadialTail {
        RadialTail::Algebraic {
            alpha: self.network.pathloss.alpha(),
        }
    }
}

/// `E[prod_i I_i^{p_i} exp(-c I_i)]` over `q = len(p)` slots.
pub fn interference_functional(network: &NetworkConfig, spec: &FunctionalSpec, quad: &QuadratureSpec) -> Result<f64> {
    let integrand = InterferenceIntegrand {
        network: *network,
        damping: spec.damping,
        slots: spec.slots(),
    };
    sum_product_stationary(&integrand, spec.exponents.as_slice(), network.intensity, quad)
}

/// `E[prod_{i<=q} exp(-c I_i)]`, the joint Laplace transform over `q` slots.
pub fn interference_pgfl(network: &NetworkConfig, damping: f64, slots: usize, quad: &QuadratureSpec) -> Result<f64> {
    if !(damping > 0.0) {
        return Err(Error::InvalidInput(format!("damping c must be positive, got {damping}")));
    }
    let integrand = InterferenceIntegrand {
        network: *network,
        damping,
        slots,
    };
    sum_product_stationary(&integrand, &vec![0; slots], network.intensity, quad)
}

fn check_singular_inputs(intensity: f64, tx_prob: f64, alpha: f64) -> Result<()> {
    if !(alpha > 2.0) {
        return Err(Error::InvalidInput(format!("alpha must exceed 2, got {alpha}")));
    }
    if !(intensity >= 0.0) || !(tx_prob > 0.0 && tx_prob <= 1.0) {
        return Err(Error::InvalidInput("need intensity >= 0 and tx_prob in (0, 1]".into()));
    }
    Ok(())
}

/// `E[I^k exp(-I)]` for Rayleigh fading and singular path loss, `k` in 1..=4.
pub fn rayleigh_singular_moment(k: u32, intensity: f64, tx_prob: f64, alpha: f64) -> Result<f64> {
    check_singular_inputs(intensity, tx_prob, alpha)?;
    let DerivedExponents { delta: d, kappa } = DerivedExponents::new(alpha, tx_prob, intensity);
    let a = alpha;
    let e = (-kappa).exp();
    let value = match k {
        1 => d * kappa * e,
        2 => e * kappa * (d * (1.0 - d) + kappa * d * d),
        3 => {
            e * kappa * (4.0 * (a - 1.0) * (a - 2.0) + 2.0 * kappa * (6.0 * (a - 2.0) + 4.0 * kappa)) / a.powi(3)
        }
        4 => {
            let inner = 4.0 * a * (a - 1.0) * (a - 2.0) * (3.0 * a - 2.0)
                + 2.0
                    * kappa
                    * (2.0 * a * (a - 2.0) * (11.0 * a - 14.0)
                        + 8.0 * kappa * (3.0 * a * (a - 2.0) + kappa * a));
            e * kappa * inner / a.powi(5)
        }
        _ => {
            return Err(Error::Unsupported(format!(
                "closed form only for k in 1..=4 (got {k}); use interference_functional"
            )))
        }
    };
    Ok(value)
}

/// `(-1)^k d^k/ds^k exp(-a s^delta)` at `s = 1` with
/// `a = tx_prob lambda pi^2 delta / sin(pi delta)`, evaluated exactly through
/// the complete Bell polynomial recursion.
pub fn laplace_moment_check(k: u32, intensity: f64, tx_prob: f64, alpha: f64) -> Result<f64> {
    check_singular_inputs(intensity, tx_prob, alpha)?;
    if k == 0 {
        return Err(Error::InvalidInput("derivative order must be at least 1".into()));
    }
    let DerivedExponents { delta, kappa: a } = DerivedExponents::new(alpha, tx_prob, intensity);
    let n = k as usize;
    // x_j = a delta prod_{i<j} (i - delta): signed derivatives of -a s^delta
    let mut x = Vec::with_capacity(n + 1);
    x.push(0.0);
    let mut falling = a * delta;
    for j in 1..=n {
        if j > 1 {
            falling *= (j - 1) as f64 - delta;
        }
        x.push(falling);
    }
    let mut bell = vec![1.0];
    for m in 0..n {
        let mut acc = 0.0;
        let mut binom = 1.0;
        for i in 0..=m {
            acc += binom * bell[m - i] * x[i + 1];
            binom = binom * (m - i) as f64 / (i + 1) as f64;
        }
        bell.push(acc);
    }
    Ok((-a).exp() * bell[n])
}

/// Intensity at which Rayleigh fading reproduces the interference law of
/// `fading` under singular path loss: `lambda E[h^delta] / Gamma(1 + delta)`.
pub fn propagation_equivalent_intensity(intensity: f64, fading: &FadingModel, delta: f64) -> Result<f64> {
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::InvalidInput(format!("delta must lie in (0, 1), got {delta}")));
    }
    Ok(intensity * fading.delta_moment(delta) / gamma(1.0 + delta))
}

/// `E[I exp(-I)]` for Rayleigh fading, singular path loss and `alpha = 4`:
/// `lambda pi^2 / 4 * exp(-lambda pi^2 / 2)` (full transmit probability).
pub fn rayleigh_alpha4_moment(intensity: f64) -> f64 {
    0.25 * intensity * PI * PI * (-0.5 * intensity * PI * PI).exp()
}
