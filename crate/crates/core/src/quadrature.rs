//! Adaptive Gauss-Kronrod quadrature for the radial integrals on the plane.
//!
//! Every analytic formula in this crate reduces to integrals of the form
//! `int_{R^2} F(|x|) dx = 2 pi int_0^inf F(r) r dr`. The radial integral is
//! split at `r = 1`; the inner piece is integrated directly and the outer
//! piece is mapped onto `(0, 1]` with `r = u^(-beta)`, with `beta` chosen
//! from the algebraic decay of the integrand so that the mapped integrand
//! vanishes linearly at `u = 0`.

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::models::PathLossModel;

/// Tolerances for the adaptive integrator.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadratureSpec {
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub max_subdivisions: usize,
}

impl Default for QuadratureSpec {
    fn default() -> Self {
        Self {
            abs_tol: 1e-10,
            rel_tol: 1e-8,
            max_subdivisions: 10_000,
        }
    }
}

impl QuadratureSpec {
    pub fn new(abs_tol: f64, rel_tol: f64, max_subdivisions: usize) -> Result<Self> {
        if !(abs_tol > 0.0) || !(rel_tol > 0.0) {
            return Err(Error::InvalidInput("quadrature tolerances must be positive".into()));
        }
        if max_subdivisions == 0 {
            return Err(Error::InvalidInput("max_subdivisions must be at least 1".into()));
        }
        Ok(Self {
            abs_tol,
            rel_tol,
            max_subdivisions,
        })
    }

    /// Tight tolerances used by the cross-checks between analytic routes.
    pub fn tight() -> Self {
        Self {
            abs_tol: 1e-14,
            rel_tol: 1e-12,
            max_subdivisions: 20_000,
        }
    }

    fn halved(&self) -> Self {
        Self {
            abs_tol: 0.5 * self.abs_tol,
            ..*self
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadratureResult {
    pub value: f64,
    pub error_bound: f64,
    pub subdivisions: usize,
}

impl std::ops::Add for QuadratureResult {
    type Output = Self;
    fn add(self, rhs: Self) -> Self {
        Self {
            value: self.value + rhs.value,
            error_bound: self.error_bound + rhs.error_bound,
            subdivisions: self.subdivisions + rhs.subdivisions,
        }
    }
}

// Gauss-Kronrod nodes and weights as tabulated (more digits than f64 holds)
#[allow(clippy::excessive_precision)]
const XGK: [f64; 8] = [
    0.991_455_371_120_812_639_206_854_697_526_329,
    0.949_107_912_342_758_524_526_189_684_047_851,
    0.864_864_423_359_769_072_789_712_788_640_926,
    0.741_531_185_599_394_439_863_864_773_280_788,
    0.586_087_235_467_691_130_294_144_845_693_013,
    0.405_845_151_377_397_166_906_606_412_076_961,
    0.207_784_955_007_898_467_600_689_403_773_245,
    0.0,
];

#[allow(clippy::excessive_precision)]
const WGK: [f64; 8] = [
    0.022_935_322_010_529_224_963_732_008_058_970,
    0.063_092_092_629_978_553_290_700_663_189_204,
    0.104_790_010_322_250_183_839_876_322_541_518,
    0.140_653_259_715_525_918_745_189_590_510_238,
    0.169_004_726_639_267_902_826_583_426_598_550,
    0.190_350_578_064_785_409_913_256_402_421_014,
    0.204_432_940_075_298_892_414_161_999_234_649,
    0.209_482_141_084_727_828_012_999_174_891_714,
];

#[allow(clippy::excessive_precision)]
const WG: [f64; 4] = [
    0.129_484_966_168_869_693_270_611_432_679_082,
    0.279_705_391_489_276_667_901_467_771_423_780,
    0.381_830_050_505_118_944_950_369_775_488_975,
    0.417_959_183_673_469_387_755_102_040_816_327,
];

struct Panel {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
}

impl PartialEq for Panel {
    fn eq(&self, other: &Self) -> bool {
        self.error == other.error
    }
}
impl Eq for Panel {}
impl PartialOrd for Panel {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Panel {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error.total_cmp(&other.error)
    }
}

fn rescale_error(err: f64, resabs: f64, resasc: f64) -> f64 {
    let mut err = err.abs();
    if resasc != 0.0 && err != 0.0 {
        let scale = (200.0 * err / resasc).powf(1.5);
        err = if scale < 1.0 { resasc * scale } else { resasc };
    }
    if resabs > f64::MIN_POSITIVE / (50.0 * f64::EPSILON) {
        err = err.max(50.0 * f64::EPSILON * resabs);
    }
    err
}

/// One 15-point Kronrod panel with its embedded 7-point Gauss estimate.
/// Returns `(value, error)`.
fn gauss_kronrod_15<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> Result<(f64, f64)> {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(center);
    let mut resg = fc * WG[3];
    let mut resk = fc * WGK[7];
    let mut resabs = resk.abs();
    let mut fv1 = [0.0; 7];
    let mut fv2 = [0.0; 7];
    for (j, wg) in WG.iter().take(3).enumerate() {
        let jtw = 2 * j + 1;
        let dx = half * XGK[jtw];
        let f1 = f(center - dx);
        let f2 = f(center + dx);
        fv1[jtw] = f1;
        fv2[jtw] = f2;
        resg += wg * (f1 + f2);
        resk += WGK[jtw] * (f1 + f2);
        resabs += WGK[jtw] * (f1.abs() + f2.abs());
    }
    for j in 0..4 {
        let jtwm1 = 2 * j;
        let dx = half * XGK[jtwm1];
        let f1 = f(center - dx);
        let f2 = f(center + dx);
        fv1[jtwm1] = f1;
        fv2[jtwm1] = f2;
        resk += WGK[jtwm1] * (f1 + f2);
        resabs += WGK[jtwm1] * (f1.abs() + f2.abs());
    }
    let reskh = 0.5 * resk;
    let mut resasc = WGK[7] * (fc - reskh).abs();
    for j in 0..7 {
        resasc += WGK[j] * ((fv1[j] - reskh).abs() + (fv2[j] - reskh).abs());
    }
    let value = resk * half;
    if !value.is_finite() {
        return Err(Error::Domain(format!(
            "integrand is not finite on [{a:e}, {b:e}]"
        )));
    }
    let err = rescale_error((resk - resg) * half, resabs * half.abs(), resasc * half.abs());
    Ok((value, err))
}

/// Adaptive bisection over `[a, b]` driven by the panel with the largest
/// error estimate.
pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, spec: &QuadratureSpec) -> Result<QuadratureResult> {
    if a == b {
        return Ok(QuadratureResult {
            value: 0.0,
            error_bound: 0.0,
            subdivisions: 0,
        });
    }
    let (value, error) = gauss_kronrod_15(&f, a, b)?;
    let mut heap = BinaryHeap::new();
    heap.push(Panel { a, b, value, error });
    let mut total = value;
    let mut total_err = error;
    let mut subdivisions = 1;
    loop {
        let tol = spec.abs_tol.max(spec.rel_tol * total.abs());
        if total_err <= tol {
            break;
        }
        if subdivisions >= spec.max_subdivisions {
            return Err(Error::Accuracy {
                estimate: total,
                error_bound: total_err,
                subdivisions,
            });
        }
        let worst = heap.pop().expect("heap never empties");
        let mid = 0.5 * (worst.a + worst.b);
        if mid <= worst.a || mid >= worst.b {
            // Panel cannot be split further in floating point; accept it.
            heap.push(Panel { error: 0.0, ..worst });
            total_err -= worst.error;
            if heap.iter().all(|p| p.error == 0.0) {
                break;
            }
            continue;
        }
        let (v1, e1) = gauss_kronrod_15(&f, worst.a, mid)?;
        let (v2, e2) = gauss_kronrod_15(&f, mid, worst.b)?;
        total += v1 + v2 - worst.value;
        total_err += e1 + e2 - worst.error;
        heap.push(Panel {
            a: worst.a,
            b: mid,
            value: v1,
            error: e1,
        });
        heap.push(Panel {
            a: mid,
            b: worst.b,
            value: v2,
            error: e2,
        });
        subdivisions += 1;
        // Re-sum occasionally to keep the running totals honest.
        if subdivisions % 64 == 0 {
            total = heap.iter().map(|p| p.value).sum();
            total_err = heap.iter().map(|p| p.error).sum();
        }
    }
    let value = heap.iter().map(|p| p.value).sum();
    let error_bound = heap.iter().map(|p| p.error).sum::<f64>().max(0.0);
    Ok(QuadratureResult {
        value,
        error_bound,
        subdivisions,
    })
}

/// `int_a^inf f(x) dx` via `x = a + (1 - t) / t`, suited to integrands with
/// exponential decay.
pub fn integrate_to_infinity<F: Fn(f64) -> f64>(f: F, a: f64, spec: &QuadratureSpec) -> Result<QuadratureResult> {
    integrate(
        |t: f64| {
            let x = a + (1.0 - t) / t;
            if !x.is_finite() {
                return 0.0;
            }
            let v = f(x);
            if v == 0.0 {
                0.0
            } else {
                v / (t * t)
            }
        },
        0.0,
        1.0,
        spec,
    )
}

/// Decay of a radial integrand `f(r)` for large `r`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RadialTail {
    /// `f(r) = O(r^(-alpha))` with `alpha > 2`.
    Algebraic { alpha: f64 },
    /// `f(r) = 0` for `r > radius`.
    Compact { radius: f64 },
}

impl RadialTail {
    fn mapping_exponent(alpha: f64) -> f64 {
        (2.0 / (alpha - 2.0)).clamp(1.0, 64.0)
    }
}

/// `int_{r0}^inf f(r) r dr` for an algebraically decaying `f`, mapped to
/// `(0, 1]` by `r = r0 * u^(-beta)`.
pub fn radial_tail_integral<F: Fn(f64) -> f64>(
    f: F,
    r0: f64,
    alpha: f64,
    spec: &QuadratureSpec,
) -> Result<QuadratureResult> {
    if !(alpha > 2.0) {
        return Err(Error::Domain(format!(
            "radial integrand decays like r^-{alpha}; need an exponent above 2 for integrability"
        )));
    }
    assert!(r0 > 0.0, "tail integral needs a positive lower radius");
    let beta = RadialTail::mapping_exponent(alpha);
    integrate(
        |u: f64| {
            let r = r0 * u.powf(-beta);
            if !r.is_finite() {
                return 0.0;
            }
            let v = f(r);
            if v == 0.0 {
                return 0.0;
            }
            // f(r) * r * dr/du with dr/du = beta * r / u
            (v * r) * r * beta / u
        },
        0.0,
        1.0,
        spec,
    )
}

/// `int_{R^2} f(|x|) dx = 2 pi int_0^inf f(r) r dr`.
pub fn radial_integral_r<F: Fn(f64) -> f64>(f: F, tail: RadialTail, spec: &QuadratureSpec) -> Result<f64> {
    let part = spec.halved();
    let total = match tail {
        RadialTail::Compact { radius } => {
            if radius <= 1.0 {
                integrate(|r| f(r) * r, 0.0, radius, spec)?
            } else {
                integrate(|r| f(r) * r, 0.0, 1.0, &part)? + integrate(|r| f(r) * r, 1.0, radius, &part)?
            }
        }
        RadialTail::Algebraic { alpha } => {
            integrate(|r| f(r) * r, 0.0, 1.0, &part)? + radial_tail_integral(&f, 1.0, alpha, &part)?
        }
    };
    Ok(2.0 * PI * total.value)
}

/// `int_{R^2} F(l(|x|)) dx` for a function `F` of the path gain, assuming
/// `F(l) = O(l)` as `l -> 0` so the integrand inherits the model's decay.
pub fn radial_integral<F: Fn(f64) -> f64>(f: F, model: &PathLossModel, spec: &QuadratureSpec) -> Result<f64> {
    radial_integral_r(
        |r| f(model.gain(r)),
        RadialTail::Algebraic { alpha: model.alpha() },
        spec,
    )
}
