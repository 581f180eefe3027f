//! Path-gain and fading models.
//!
//! Fading densities are implemented exactly as tabulated: Erlang(k) has mean
//! `k` and Rice(k, psi) is the non-central chi-square law with mean `k + psi`.
//! Setting `normalize_mean` rescales the power by its mean so that
//! `E[h] = 1`; every moment and the sampler honour the rescaling.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use rand::Rng;
use rand_distr::{ChiSquared, Distribution, Exp1, Gamma, StandardNormal};

use crate::error::{Error, Result};
use crate::quadrature::{integrate_to_infinity, radial_tail_integral, QuadratureSpec};
use crate::special::{bessel_i_scaled, gamma, ln_gamma, sinc};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PathLossKind {
    /// `r^-alpha`
    Singular,
    /// `min(1, r^-alpha)`
    Minimum,
    /// `1 / (eps + r^alpha)`
    Epsilon(f64),
    /// `(1 + r)^-alpha`
    DistancePlusOne,
}

impl fmt::Display for PathLossKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PathLossKind::Singular => write!(f, "singular"),
            PathLossKind::Minimum => write!(f, "min"),
            PathLossKind::Epsilon(e) => write!(f, "eps:{e}"),
            PathLossKind::DistancePlusOne => write!(f, "dist1"),
        }
    }
}

impl FromStr for PathLossKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        match s {
            "singular" => return Ok(PathLossKind::Singular),
            "min" | "minimum" => return Ok(PathLossKind::Minimum),
            "dist1" => return Ok(PathLossKind::DistancePlusOne),
            _ => {}
        }
        if let Some(e) = s.strip_prefix("eps:") {
            let eps: f64 = e
                .trim()
                .parse()
                .map_err(|_| Error::InvalidInput(format!("bad epsilon in path-loss model `{s}`")))?;
            return Ok(PathLossKind::Epsilon(eps));
        }
        Err(Error::InvalidInput(format!(
            "unknown path-loss model `{s}` (expected singular|min|eps:<e>|dist1)"
        )))
    }
}

/// A path-gain law `l(r)` with exponent `alpha > 2`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PathLossModel {
    kind: PathLossKind,
    alpha: f64,
}

impl PathLossModel {
    pub fn new(kind: PathLossKind, alpha: f64) -> Result<Self> {
        if !(alpha > 2.0) || !alpha.is_finite() {
            return Err(Error::InvalidInput(format!(
                "path-loss exponent must be finite and exceed 2, got {alpha}"
            )));
        }
        if let PathLossKind::Epsilon(eps) = kind {
            if !(eps > 0.0) || !eps.is_finite() {
                return Err(Error::InvalidInput(format!("epsilon must be positive, got {eps}")));
            }
        }
        Ok(Self { kind, alpha })
    }

    pub fn singular(alpha: f64) -> Result<Self> {
        Self::new(PathLossKind::Singular, alpha)
    }

    pub fn minimum(alpha: f64) -> Result<Self> {
        Self::new(PathLossKind::Minimum, alpha)
    }

    pub fn epsilon(eps: f64, alpha: f64) -> Result<Self> {
        Self::new(PathLossKind::Epsilon(eps), alpha)
    }

    pub fn distance_plus_one(alpha: f64) -> Result<Self> {
        Self::new(PathLossKind::DistancePlusOne, alpha)
    }

    pub fn kind(&self) -> PathLossKind {
        self.kind
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn is_singular(&self) -> bool {
        self.kind == PathLossKind::Singular
    }

    /// Gain at distance `r`; the singular model returns `+inf` at the origin.
    pub fn gain(&self, r: f64) -> f64 {
        let a = self.alpha;
        match self.kind {
            PathLossKind::Singular => r.powf(-a),
            PathLossKind::Minimum => {
                if r <= 1.0 {
                    1.0
                } else {
                    r.powf(-a)
                }
            }
            PathLossKind::Epsilon(eps) => 1.0 / (eps + r.powf(a)),
            PathLossKind::DistancePlusOne => (1.0 + r).powf(-a),
        }
    }

    /// Checked version of [`gain`](Self::gain).
    pub fn path_gain(&self, r: f64) -> Result<f64> {
        if !(r >= 0.0) {
            return Err(Error::Domain(format!("distance must be non-negative, got {r}")));
        }
        if r == 0.0 && self.is_singular() {
            return Err(Error::Domain("singular path loss has a pole at r = 0".into()));
        }
        Ok(self.gain(r))
    }

    /// `int_R^inf l(r)^power r dr` for `power` in {1, 2}.
    pub fn tail_integral(&self, radius: f64, power: u32) -> f64 {
        assert!(radius > 0.0, "tail radius must be positive");
        let a = self.alpha * f64::from(power);
        let algebraic = |rad: f64| rad.powf(2.0 - a) / (a - 2.0);
        match self.kind {
            PathLossKind::Singular => algebraic(radius),
            PathLossKind::Minimum => {
                if radius >= 1.0 {
                    algebraic(radius)
                } else {
                    0.5 * (1.0 - radius * radius) + 1.0 / (a - 2.0)
                }
            }
            PathLossKind::DistancePlusOne => {
                let s = 1.0 + radius;
                s.powf(2.0 - a) / (a - 2.0) - s.powf(1.0 - a) / (a - 1.0)
            }
            PathLossKind::Epsilon(_) => {
                let spec = QuadratureSpec::tight();
                let f = |r: f64| self.gain(r).powi(power as i32);
                match radial_tail_integral(f, radius, a, &spec) {
                    Ok(res) => res.value,
                    Err(Error::Accuracy { estimate, .. }) => estimate,
                    Err(e) => panic!("tail integral failed: {e}"),
                }
            }
        }
    }
}

impl fmt::Display for PathLossModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.kind)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum FadingFamily {
    Rayleigh,
    Erlang { k: u32 },
    Rice { k: u32, psi: f64 },
    Nakagami { m: f64 },
}

/// Power fading law, optionally rescaled to unit mean.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FadingModel {
    family: FadingFamily,
    normalize_mean: bool,
}

impl FadingModel {
    pub fn new(family: FadingFamily) -> Result<Self> {
        match family {
            FadingFamily::Rayleigh => {}
            FadingFamily::Erlang { k } => {
                if k == 0 {
                    return Err(Error::InvalidInput("Erlang order k must be at least 1".into()));
                }
            }
            FadingFamily::Rice { k, psi } => {
                if k == 0 {
                    return Err(Error::InvalidInput("Rice degrees of freedom k must be at least 1".into()));
                }
                if !(psi > 0.0) || !psi.is_finite() {
                    return Err(Error::InvalidInput(format!("Rice parameter psi must be positive, got {psi}")));
                }
            }
            FadingFamily::Nakagami { m } => {
                if !(m > 0.0) || !m.is_finite() {
                    return Err(Error::InvalidInput(format!("Nakagami m must be positive, got {m}")));
                }
            }
        }
        Ok(Self {
            family,
            normalize_mean: false,
        })
    }

    pub fn rayleigh() -> Self {
        Self {
            family: FadingFamily::Rayleigh,
            normalize_mean: false,
        }
    }

    pub fn erlang(k: u32) -> Result<Self> {
        Self::new(FadingFamily::Erlang { k })
    }

    pub fn rice(k: u32, psi: f64) -> Result<Self> {
        Self::new(FadingFamily::Rice { k, psi })
    }

    pub fn nakagami(m: f64) -> Result<Self> {
        Self::new(FadingFamily::Nakagami { m })
    }

    pub fn with_normalized_mean(mut self, normalize: bool) -> Self {
        self.normalize_mean = normalize;
        self
    }

    pub fn family(&self) -> FadingFamily {
        self.family
    }

    pub fn normalize_mean(&self) -> bool {
        self.normalize_mean
    }

    fn raw_mean(&self) -> f64 {
        match self.family {
            FadingFamily::Rayleigh | FadingFamily::Nakagami { .. } => 1.0,
            FadingFamily::Erlang { k } => f64::from(k),
            FadingFamily::Rice { k, psi } => f64::from(k) + psi,
        }
    }

    /// Divisor applied to the tabulated power.
    fn scale(&self) -> f64 {
        if self.normalize_mean {
            self.raw_mean()
        } else {
            1.0
        }
    }

    pub fn mean(&self) -> f64 {
        self.raw_mean() / self.scale()
    }

    pub fn second_moment(&self) -> f64 {
        let raw = match self.family {
            FadingFamily::Rayleigh => 2.0,
            FadingFamily::Erlang { k } => f64::from(k) * f64::from(k + 1),
            FadingFamily::Rice { k, psi } => {
                let k = f64::from(k);
                2.0 * k + 4.0 * psi + (k + psi) * (k + psi)
            }
            FadingFamily::Nakagami { m } => 1.0 + 1.0 / m,
        };
        raw / (self.scale() * self.scale())
    }

    /// Shape `m` when the power is exactly `Gamma(m, 1/m)` distributed.
    pub fn gamma_shape(&self) -> Option<f64> {
        match self.family {
            FadingFamily::Rayleigh => Some(1.0),
            FadingFamily::Nakagami { m } => Some(m),
            FadingFamily::Erlang { k } if k == 1 || self.normalize_mean => Some(f64::from(k)),
            _ => None,
        }
    }

    pub fn pdf(&self, x: f64) -> f64 {
        if x < 0.0 {
            return 0.0;
        }
        let mu = self.scale();
        mu * self.raw_pdf(mu * x)
    }

    fn raw_pdf(&self, x: f64) -> f64 {
        match self.family {
            FadingFamily::Rayleigh => (-x).exp(),
            FadingFamily::Erlang { k } => gamma_pdf(f64::from(k), 1.0, x),
            FadingFamily::Nakagami { m } => gamma_pdf(m, m, x),
            FadingFamily::Rice { k, psi } => rice_pdf(k, psi, x),
        }
    }

    pub fn sampler(&self) -> FadingSampler {
        let inner = match self.family {
            FadingFamily::Rayleigh => SamplerKind::Exponential,
            FadingFamily::Erlang { k: 1 } => SamplerKind::Exponential,
            FadingFamily::Erlang { k } => SamplerKind::Gamma(Gamma::new(f64::from(k), 1.0).expect("valid shape")),
            FadingFamily::Nakagami { m: 1.0 } => SamplerKind::Exponential,
            FadingFamily::Nakagami { m } => SamplerKind::Gamma(Gamma::new(m, 1.0 / m).expect("valid shape")),
            FadingFamily::Rice { k, psi } => SamplerKind::Rice {
                shift: psi.sqrt(),
                rest: if k > 1 {
                    Some(ChiSquared::new(f64::from(k - 1)).expect("valid dof"))
                } else {
                    None
                },
            },
        };
        FadingSampler {
            inner,
            inv_scale: 1.0 / self.scale(),
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        self.sampler().sample(rng)
    }

    /// `E[(h l)^j exp(-c h l)]`.
    pub fn exp_moment(&self, gain: f64, j: u32, c: f64) -> f64 {
        let l = gain / self.scale();
        if l == 0.0 {
            return if j == 0 { 1.0 } else { 0.0 };
        }
        if l.is_infinite() {
            return 0.0;
        }
        let s = c * l;
        // l / (1 + c l) written so that it stays finite as l grows
        let ratio = |shape: f64| 1.0 / (shape / l + c);
        match self.family {
            FadingFamily::Rayleigh => {
                crate::special::factorial(j) * ratio(1.0).powi(j as i32) / (1.0 + s)
            }
            FadingFamily::Erlang { k } => {
                let k = f64::from(k);
                gamma_ratio(k, j) * ratio(1.0).powi(j as i32) * (-k * s.ln_1p()).exp()
            }
            FadingFamily::Nakagami { m } => {
                gamma_ratio(m, j) * ratio(m).powi(j as i32) * (-m * (s / m).ln_1p()).exp()
            }
            FadingFamily::Rice { k, psi } => {
                let k = f64::from(k);
                let t = 1.0 + 2.0 * s;
                let laplace = (-psi * s / t - 0.5 * k * (2.0 * s).ln_1p()).exp();
                match j {
                    0 => laplace,
                    1 => l * laplace * (psi + k * t) / (t * t),
                    _ => rice_moment_quadrature(k as u32, psi, s, j) * l.powi(j as i32),
                }
            }
        }
    }

    /// `1 - E[exp(-c h l)]`, accurate when the Laplace transform is close to 1.
    pub fn exp_moment_complement(&self, gain: f64, c: f64) -> f64 {
        let l = gain / self.scale();
        if l.is_infinite() {
            return 1.0;
        }
        let s = c * l;
        match self.family {
            FadingFamily::Rayleigh => s / (1.0 + s),
            FadingFamily::Erlang { k } => -(-f64::from(k) * s.ln_1p()).exp_m1(),
            FadingFamily::Nakagami { m } => -(-m * (s / m).ln_1p()).exp_m1(),
            FadingFamily::Rice { k, psi } => {
                let t = 1.0 + 2.0 * s;
                -(-psi * s / t - 0.5 * f64::from(k) * (2.0 * s).ln_1p()).exp_m1()
            }
        }
    }

    /// `E[h^delta]`.
    pub fn delta_moment(&self, delta: f64) -> f64 {
        let raw = match self.family {
            FadingFamily::Rayleigh => gamma(1.0 + delta),
            FadingFamily::Erlang { k } => {
                let k = f64::from(k);
                (ln_gamma(k + delta) - ln_gamma(k)).exp()
            }
            FadingFamily::Nakagami { m } => (ln_gamma(m + delta) - ln_gamma(m) - delta * m.ln()).exp(),
            FadingFamily::Rice { k, psi } => {
                let spec = QuadratureSpec::tight();
                let f = |x: f64| x.powf(delta) * rice_pdf(k, psi, x);
                let head = crate::quadrature::integrate(f, 0.0, 1.0, &spec);
                let tail = integrate_to_infinity(f, 1.0, &spec);
                match (head, tail) {
                    (Ok(a), Ok(b)) => a.value + b.value,
                    (a, b) => panic!("Rice delta moment quadrature failed: {a:?} {b:?}"),
                }
            }
        };
        raw / self.scale().powf(delta)
    }
}

impl fmt::Display for FadingModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.family {
            FadingFamily::Rayleigh => write!(f, "rayleigh")?,
            FadingFamily::Erlang { k } => write!(f, "erlang:{k}")?,
            FadingFamily::Rice { k, psi } => write!(f, "rice:{k},{psi}")?,
            FadingFamily::Nakagami { m } => write!(f, "nakagami:{m}")?,
        }
        if self.normalize_mean {
            write!(f, ":unit")?;
        }
        Ok(())
    }
}

impl FromStr for FadingModel {
    type Err = Error;

    /// `rayleigh | erlang:k | rice:k,psi | nakagami:m`, with an optional
    /// `:unit` suffix requesting mean normalization.
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let (body, normalize) = match s.strip_suffix(":unit") {
            Some(b) => (b, true),
            None => (s, false),
        };
        let bad = || Error::InvalidInput(format!("bad fading model `{s}` (expected rayleigh|erlang:k|rice:k,psi|nakagami:m)"));
        let model = if body == "rayleigh" {
            FadingModel::rayleigh()
        } else if let Some(k) = body.strip_prefix("erlang:") {
            FadingModel::erlang(k.trim().parse().map_err(|_| bad())?)?
        } else if let Some(m) = body.strip_prefix("nakagami:") {
            FadingModel::nakagami(m.trim().parse().map_err(|_| bad())?)?
        } else if let Some(rest) = body.strip_prefix("rice:") {
            let (k, psi) = rest.split_once(',').ok_or_else(bad)?;
            FadingModel::rice(k.trim().parse().map_err(|_| bad())?, psi.trim().parse().map_err(|_| bad())?)?
        } else {
            return Err(bad());
        };
        Ok(model.with_normalized_mean(normalize))
    }
}

#[derive(Debug, Clone)]
enum SamplerKind {
    Exponential,
    Gamma(Gamma<f64>),
    Rice { shift: f64, rest: Option<ChiSquared<f64>> },
}

/// Pre-built sampler for a [`FadingModel`].
#[derive(Debug, Clone)]
pub struct FadingSampler {
    inner: SamplerKind,
    inv_scale: f64,
}

impl Distribution<f64> for FadingSampler {
    fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let raw = match &self.inner {
            SamplerKind::Exponential => rng.sample::<f64, _>(Exp1),
            SamplerKind::Gamma(g) => g.sample(rng),
            SamplerKind::Rice { shift, rest } => {
                let z: f64 = rng.sample(StandardNormal);
                let lead = (z + shift) * (z + shift);
                lead + rest.as_ref().map_or(0.0, |c| c.sample(rng))
            }
        };
        raw * self.inv_scale
    }
}

/// Density of Gamma(shape, rate) at `x`.
fn gamma_pdf(shape: f64, rate: f64, x: f64) -> f64 {
    if x == 0.0 {
        return if shape < 1.0 {
            f64::INFINITY
        } else if shape == 1.0 {
            rate
        } else {
            0.0
        };
    }
    (shape * rate.ln() + (shape - 1.0) * x.ln() - rate * x - ln_gamma(shape)).exp()
}

/// Non-central chi-square density with `k` degrees of freedom and
/// non-centrality `psi`.
fn rice_pdf(k: u32, psi: f64, x: f64) -> f64 {
    let nu = 0.5 * f64::from(k) - 1.0;
    if x == 0.0 {
        return if k == 1 {
            f64::INFINITY
        } else if k == 2 {
            0.5 * (-0.5 * psi).exp()
        } else {
            0.0
        };
    }
    let z = (psi * x).sqrt();
    let log_front = -0.5 * (x + psi) + z + (0.5 * nu) * (x / psi).ln();
    0.5 * log_front.exp() * bessel_i_scaled(nu, z)
}

/// `Gamma(a + j) / Gamma(a)` as a rising factorial.
fn gamma_ratio(a: f64, j: u32) -> f64 {
    (0..j).fold(1.0, |acc, i| acc * (a + f64::from(i)))
}

/// `int_0^inf x^j exp(-s x) f(x) dx` for the Rice density, after the
/// rescaling `x = y / (1 + s)` so the integrand's bulk sits near `y ~ 1`.
fn rice_moment_quadrature(k: u32, psi: f64, s: f64, j: u32) -> f64 {
    let spec = QuadratureSpec::new(1e-13, 1e-11, 10_000).expect("valid spec");
    let scale = 1.0 / (1.0 + s);
    let f = |y: f64| {
        let x = y * scale;
        let pdf = rice_pdf(k, psi, x);
        if pdf == 0.0 {
            0.0
        } else {
            x.powi(j as i32) * (-s * x).exp() * pdf * scale
        }
    };
    let head = crate::quadrature::integrate(f, 0.0, 1.0, &spec);
    let tail = integrate_to_infinity(f, 1.0, &spec);
    let value = |r: Result<crate::quadrature::QuadratureResult>| match r {
        Ok(q) => q.value,
        Err(Error::Accuracy { estimate, .. }) => estimate,
        Err(e) => panic!("Rice moment quadrature failed: {e}"),
    };
    value(head) + value(tail)
}

/// `delta = 2 / alpha` and `kappa = tx_prob * lambda * pi / sinc(delta)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DerivedExponents {
    pub delta: f64,
    pub kappa: f64,
}

impl DerivedExponents {
    pub fn new(alpha: f64, tx_prob: f64, intensity: f64) -> Self {
        let delta = 2.0 / alpha;
        Self {
            delta,
            kappa: tx_prob * intensity * PI / sinc(delta),
        }
    }
}
