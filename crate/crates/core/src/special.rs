//! Special functions and summation helpers.
//!
//! Gamma and log-gamma delegate to `statrs`; the exponentially scaled
//! modified Bessel function of the first kind is evaluated here with a
//! power series for moderate arguments and the Hankel asymptotic expansion
//! for large ones.

use std::f64::consts::PI;

/// Natural logarithm of the gamma function for `x > 0`.
pub fn ln_gamma(x: f64) -> f64 {
    statrs::function::gamma::ln_gamma(x)
}

/// Gamma function.
pub fn gamma(x: f64) -> f64 {
    statrs::function::gamma::gamma(x)
}

/// `ln(n!)`.
pub fn ln_factorial(n: u32) -> f64 {
    ln_gamma(f64::from(n) + 1.0)
}

/// `n!` as a float (exact up to 22!).
pub fn factorial(n: u32) -> f64 {
    (1..=n).fold(1.0, |acc, k| acc * f64::from(k))
}

/// Normalized sinc, `sin(pi x) / (pi x)` with `sinc(0) = 1`.
pub fn sinc(x: f64) -> f64 {
    if x == 0.0 {
        1.0
    } else {
        (PI * x).sin() / (PI * x)
    }
}

/// `exp(-z) * I_nu(z)` for `z >= 0` and `nu > -1`.
///
/// Returns `+inf` at `z = 0` for negative orders, where `I_nu` itself has a pole.
pub fn bessel_i_scaled(nu: f64, z: f64) -> f64 {
    assert!(nu > -1.0, "bessel_i_scaled: order must exceed -1");
    assert!(z >= 0.0, "bessel_i_scaled: argument must be non-negative");
    if z == 0.0 {
        return if nu == 0.0 {
            1.0
        } else if nu > 0.0 {
            0.0
        } else {
            f64::INFINITY
        };
    }
    if z <= 25.0 + nu * nu {
        bessel_i_series_scaled(nu, z)
    } else {
        bessel_i_asymptotic_scaled(nu, z)
    }
}

fn bessel_i_series_scaled(nu: f64, z: f64) -> f64 {
    let half = 0.5 * z;
    let q = half * half;
    let mut term = (nu * half.ln() - ln_gamma(nu + 1.0) - z).exp();
    let mut sum = term;
    let mut k = 0.0;
    loop {
        k += 1.0;
        term *= q / (k * (k + nu));
        sum += term;
        if k > half && term <= sum * 1e-17 {
            break;
        }
        if k > 10_000.0 {
            break;
        }
    }
    sum
}

fn bessel_i_asymptotic_scaled(nu: f64, z: f64) -> f64 {
    let mu = 4.0 * nu * nu;
    let mut term = 1.0_f64;
    let mut sum = 1.0;
    let mut k = 1.0;
    loop {
        let odd = 2.0 * k - 1.0;
        let next = -term * (mu - odd * odd) / (k * 8.0 * z);
        if next.abs() >= term.abs() || next == 0.0 {
            break;
        }
        term = next;
        sum += term;
        if term.abs() < 1e-17 * sum.abs() {
            break;
        }
        k += 1.0;
    }
    sum / (2.0 * PI * z).sqrt()
}

/// `I_nu(z)`; overflows to infinity for large `z`.
pub fn bessel_i(nu: f64, z: f64) -> f64 {
    bessel_i_scaled(nu, z) * z.exp()
}

/// Neumaier's compensated summation.
#[derive(Debug, Clone, Copy, Default)]
pub struct NeumaierSum {
    sum: f64,
    compensation: f64,
}

impl NeumaierSum {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.compensation += (self.sum - t) + x;
        } else {
            self.compensation += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.compensation
    }
}

impl std::iter::FromIterator<f64> for NeumaierSum {
    fn from_iter<I: IntoIterator<Item = f64>>(iter: I) -> Self {
        let mut acc = NeumaierSum::new();
        for x in iter {
            acc.add(x);
        }
        acc
    }
}

/// Compensated sum of an iterator of floats.
pub fn compensated_sum<I: IntoIterator<Item = f64>>(values: I) -> f64 {
    values.into_iter().collect::<NeumaierSum>().value()
}
