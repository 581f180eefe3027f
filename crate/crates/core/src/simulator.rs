//! Monte Carlo oracle for the analytic functionals.
//!
//! Interferers are drawn from a Poisson field in the disk `b(o, R)`. The
//! same point set is used in every slot; ALOHA activity and fading are drawn
//! afresh per point and per slot. The field outside the disk is either
//! dropped (`TailMode::Truncate`) or replaced by its exact mean
//! (`TailMode::MeanField`, the default). Write the estimated quantity as
//! `E[F(I_1, ..., I_q)]`. Truncation moves every argument by at most
//! `I_tail`, so its bias is at most `L E[I_tail]` with `L` the sum of the
//! partial-derivative bounds of `F`. The mean-field shift is exact in mean and
//! the outer field is independent of the inner one, so the first-order term
//! of a Taylor expansion cancels and the bias is at most
//! `(1/2) sum_ij sup|d_i d_j F| Var(I_tail)`.
//!
//! Replication `i` draws from its own ChaCha8 stream `i` under the base
//! seed, and replications are reduced in fixed-size blocks merged in block
//! order, so results do not depend on the number of worker threads.

use std::f64::consts::PI;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::functionals::{FunctionalSpec, NetworkConfig};
use crate::models::FadingSampler;
use crate::outage::LinkConfig;

const BLOCK: u64 = 4096;
const MAX_WINDOW: f64 = 1e4;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TailMode {
    /// Add the exact mean of the interference from outside the window.
    MeanField,
    /// Ignore everything outside the window.
    Truncate,
}

impl std::str::FromStr for TailMode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "mean-field" => Ok(TailMode::MeanField),
            "truncate" => Ok(TailMode::Truncate),
            _ => Err(Error::InvalidInput(format!("unknown tail mode `{s}` (mean-field|truncate)"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimConfig {
    /// `None` picks the smallest radius meeting `bias_tolerance`.
    pub window_radius: Option<f64>,
    pub replications: u64,
    pub seed: u64,
    pub tail: TailMode,
    pub bias_tolerance: f64,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            window_radius: None,
            replications: 100_000,
            seed: 7,
            tail: TailMode::MeanField,
            bias_tolerance: 1e-3,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MonteCarloEstimate {
    pub mean: f64,
    pub std_error: f64,
    pub replications: u64,
    pub window_radius: f64,
    pub truncation_bias_bound: f64,
    pub elapsed: Duration,
}

impl MonteCarloEstimate {
    /// `|mean - value|` in units of the standard error.
    pub fn z_score(&self, value: f64) -> f64 {
        if self.std_error == 0.0 {
            if self.mean == value {
                0.0
            } else {
                f64::INFINITY
            }
        } else {
            (self.mean - value).abs() / self.std_error
        }
    }
}

/// Single-slot success, two-slot success and two-slot outage frequencies
/// from one shared run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinkEstimate {
    pub success: MonteCarloEstimate,
    pub joint: MonteCarloEstimate,
    pub joint_outage: MonteCarloEstimate,
}

/// Distances of the points of a Poisson field of intensity `lambda` in
/// `b(o, radius)`; never exactly zero.
pub fn sample_radii<R: Rng + ?Sized>(intensity: f64, radius: f64, rng: &mut R) -> Vec<f64> {
    let mean = intensity * PI * radius * radius;
    if mean <= 0.0 {
        return Vec::new();
    }
    let n = Poisson::new(mean).expect("positive Poisson mean").sample(rng) as usize;
    (0..n).map(|_| radius * (1.0 - rng.random::<f64>()).sqrt()).collect()
}

/// Points of a Poisson field of intensity `lambda` in `b(o, radius)`.
pub fn sample_ppp<R: Rng + ?Sized>(intensity: f64, radius: f64, rng: &mut R) -> Vec<[f64; 2]> {
    let radii = sample_radii(intensity, radius, rng);
    radii
        .into_iter()
        .map(|r| {
            let t = 2.0 * PI * rng.random::<f64>();
            [r * t.cos(), r * t.sin()]
        })
        .collect()
}

/// `sum_x h(x) l(x) 1(x active)` for one slot, given the path gains of the
/// points.
pub fn slot_interference<R: Rng + ?Sized>(gains: &[f64], tx_prob: f64, fading: &FadingSampler, rng: &mut R) -> f64 {
    let mut total = 0.0;
    if tx_prob >= 1.0 {
        for &g in gains {
            total += fading.sample(rng) * g;
        }
    } else {
        for &g in gains {
            if rng.random::<f64>() < tx_prob {
                total += fading.sample(rng) * g;
            }
        }
    }
    total
}

/// Interference in each of `slots` slots from a fixed point set.
pub fn interference_realization<R: Rng + ?Sized>(
    points: &[[f64; 2]],
    network: &NetworkConfig,
    slots: usize,
    rng: &mut R,
) -> Vec<f64> {
    let gains: Vec<f64> = points
        .iter()
        .map(|p| network.pathloss.gain(p[0].hypot(p[1])))
        .collect();
    let sampler = network.fading.sampler();
    (0..slots)
        .map(|_| slot_interference(&gains, network.tx_prob, &sampler, rng))
        .collect()
}

/// Mean and standard deviation of one slot's interference from outside `b(o, R)`.
pub fn tail_moments(network: &NetworkConfig, radius: f64) -> (f64, f64) {
    let scale = network.tx_prob * network.intensity * 2.0 * PI;
    let mean = scale * network.fading.mean() * network.pathloss.tail_integral(radius, 1);
    let var = scale * network.fading.second_moment() * network.pathloss.tail_integral(radius, 2);
    (mean, var.sqrt())
}

/// Derivative bounds of `F` used by the tail-bias bounds.
#[derive(Debug, Clone, Copy, PartialEq)]
struct Smoothness {
    lipschitz: f64,
    curvature: f64,
}

/// Bounds on one slot's factor `G` and its first two derivatives on `x >= 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
struct SlotBounds {
    sup: f64,
    d1: f64,
    d2: f64,
}

/// Smoothness of `F(x) = prod_i G_i(x_i)`.
fn product_smoothness(slots: &[SlotBounds]) -> Smoothness {
    let q = slots.len();
    let rest = |skip: &[usize]| -> f64 {
        (0..q).filter(|k| !skip.contains(k)).map(|k| slots[k].sup).product()
    };
    let lipschitz = (0..q).map(|i| slots[i].d1 * rest(&[i])).sum();
    let mut hessian = 0.0;
    for i in 0..q {
        for j in 0..q {
            hessian += if i == j {
                slots[i].d2 * rest(&[i])
            } else {
                slots[i].d1 * slots[j].d1 * rest(&[i, j])
            };
        }
    }
    Smoothness {
        lipschitz,
        curvature: 0.5 * hessian,
    }
}

fn bias_bound(network: &NetworkConfig, radius: f64, tail: TailMode, smooth: &Smoothness) -> f64 {
    let (mean, sd) = tail_moments(network, radius);
    match tail {
        TailMode::MeanField => smooth.curvature * sd * sd,
        TailMode::Truncate => smooth.lipschitz * mean,
    }
}

fn choose_window(network: &NetworkConfig, sim: &SimConfig, smooth: &Smoothness, min_radius: f64) -> Result<(f64, f64)> {
    if let Some(r) = sim.window_radius {
        if !(r > min_radius) || !r.is_finite() {
            return Err(Error::InvalidInput(format!(
                "window radius must be finite and exceed {min_radius}, got {r}"
            )));
        }
        return Ok((r, bias_bound(network, r, sim.tail, smooth)));
    }
    let mut r = (3.0 * min_radius).max(5.0);
    loop {
        let bound = bias_bound(network, r, sim.tail, smooth);
        if bound <= sim.bias_tolerance {
            return Ok((r, bound));
        }
        if r >= MAX_WINDOW {
            return Err(Error::OutOfRange(format!(
                "no window up to radius {MAX_WINDOW} keeps the truncation bias below {} (bound {bound:e}); \
                 use the mean-field tail or a larger tolerance",
                sim.bias_tolerance
            )));
        }
        r = (r * 1.25).min(MAX_WINDOW);
    }
}

fn check_sim(sim: &SimConfig) -> Result<()> {
    if sim.replications == 0 {
        return Err(Error::InvalidInput("need at least one replication".into()));
    }
    if !(sim.bias_tolerance > 0.0) {
        return Err(Error::InvalidInput("bias tolerance must be positive".into()));
    }
    Ok(())
}

fn replication_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

/// Runs `body` once per replication and reduces its outputs block-wise.
fn run_blocks<S, F>(replications: u64, seed: u64, body: F) -> Vec<S>
where
    S: Send + Default + Accumulate,
    F: Fn(&mut ChaCha8Rng) -> S::Item + Sync,
{
    let blocks = replications.div_ceil(BLOCK);
    (0..blocks)
        .into_par_iter()
        .map(|b| {
            let mut acc = S::default();
            let start = b * BLOCK;
            let end = (start + BLOCK).min(replications);
            for i in start..end {
                let mut rng = replication_rng(seed, i);
                acc.push(body(&mut rng));
            }
            acc
        })
        .collect()
}

trait Accumulate {
    type Item;
    fn push(&mut self, item: Self::Item);
}

#[derive(Default)]
struct Moments {
    sum: f64,
    sum_sq: f64,
}

impl Accumulate for Moments {
    type Item = f64;
    fn push(&mut self, x: f64) {
        self.sum += x;
        self.sum_sq += x * x;
    }
}

#[derive(Default)]
struct Counts {
    success: u64,
    joint: u64,
    both_failed: u64,
}

impl Accumulate for Counts {
    type Item = (bool, bool);
    fn push(&mut self, (s1, s2): (bool, bool)) {
        self.success += u64::from(s1);
        self.joint += u64::from(s1 && s2);
        self.both_failed += u64::from(!s1 && !s2);
    }
}

fn sup_power_damped(p: u32, c: f64) -> f64 {
    if p == 0 {
        1.0
    } else {
        let p = f64::from(p);
        (p / c).powf(p) * (-p).exp()
    }
}

/// `sup |d/dx x^p exp(-c x)|` over `x >= 0`.
fn lipschitz_power_damped(p: u32, c: f64) -> f64 {
    match p {
        0 => c,
        1 => 1.0,
        _ => {
            let pf = f64::from(p);
            let deriv = |x: f64| (x.powf(pf - 1.0) * (-c * x).exp() * (pf - c * x)).abs();
            let s = pf.sqrt();
            deriv((pf - s) / c).max(deriv((pf + s) / c))
        }
    }
}

/// `sup |d^2/dx^2 x^p exp(-c x)|` over `x >= 0`. With `y = c x` the second
/// derivative is `c^(2-p) y^(p-2) e^-y (y^2 - 2p y + p(p-1))`; its modulus is
/// maximized over a grid and refined by golden-section search.
fn curvature_power_damped(p: u32, c: f64) -> f64 {
    let pf = f64::from(p);
    let h = |y: f64| {
        let poly = y * y - 2.0 * pf * y + pf * (pf - 1.0);
        let front = match p {
            0 => 1.0 / (y * y),
            1 => 1.0 / y,
            _ => y.powi(p as i32 - 2),
        };
        if y == 0.0 {
            // limits of y^(p-2) (y^2 - 2p y + p(p-1)) at 0
            return match p {
                0 => 1.0,
                1 => 2.0,
                2 => 2.0,
                _ => 0.0,
            };
        }
        (front * poly * (-y).exp()).abs()
    };
    let hi = 4.0 * pf + 40.0;
    let n = 4000;
    let step = hi / n as f64;
    let (best, _) = (0..=n)
        .map(|i| (i, h(i as f64 * step)))
        .fold((0, -1.0), |acc, (i, v)| if v > acc.1 { (i, v) } else { acc });
    let (mut a, mut b) = ((best as f64 - 1.0).max(0.0) * step, (best as f64 + 1.0) * step);
    let ratio = 0.5 * (5f64.sqrt() - 1.0);
    for _ in 0..80 {
        let x1 = b - ratio * (b - a);
        let x2 = a + ratio * (b - a);
        if h(x1) > h(x2) {
            b = x2;
        } else {
            a = x1;
        }
    }
    let sup = h(0.5 * (a + b)).max(h(best as f64 * step));
    c.powi(2 - p as i32) * sup
}

/// `(sup f, sup |f'|)` for the Gamma(`shape`, `rate`) density, integer shape.
fn gamma_pdf_bounds(shape: u32, rate: f64) -> (f64, f64) {
    // f(x) = rate g(rate x) with g the unit-rate density
    let k = f64::from(shape);
    let ln_norm = crate::special::ln_gamma(k);
    let g = |y: f64| {
        if y == 0.0 {
            return if shape == 1 { 1.0 } else { 0.0 };
        }
        ((k - 1.0) * y.ln() - y - ln_norm).exp()
    };
    let dg = |y: f64| -> f64 {
        match shape {
            1 => (-y).exp(),
            2 => ((1.0 - y) * (-y).exp()).abs(),
            _ if y == 0.0 => 0.0,
            _ => ((k - 2.0) * y.ln() - y - ln_norm).exp() * (k - 1.0 - y).abs(),
        }
    };
    let sup_g = g(k - 1.0);
    let mut sup_dg = dg(0.0);
    if shape >= 2 {
        let s = (k - 1.0).sqrt();
        sup_dg = sup_dg.max(dg(k - 1.0 - s)).max(dg(k - 1.0 + s));
    }
    (rate * sup_g, rate * rate * sup_dg)
}

/// Estimates `E[prod_i I_i^{p_i} exp(-c I_i)]`.
pub fn estimate_functional(
    network: &NetworkConfig,
    spec: &FunctionalSpec,
    sim: &SimConfig,
) -> Result<MonteCarloEstimate> {
    check_sim(sim)?;
    let started = Instant::now();
    let p = spec.exponents.as_slice();
    let c = spec.damping;
    let slots: Vec<SlotBounds> = p
        .iter()
        .map(|&pi| SlotBounds {
            sup: sup_power_damped(pi, c),
            d1: lipschitz_power_damped(pi, c),
            d2: curvature_power_damped(pi, c),
        })
        .collect();
    let (radius, bound) = choose_window(network, sim, &product_smoothness(&slots), 0.0)?;
    let tail_mean = match sim.tail {
        TailMode::MeanField => tail_moments(network, radius).0,
        TailMode::Truncate => 0.0,
    };
    let sampler = network.fading.sampler();
    let blocks: Vec<Moments> = run_blocks(sim.replications, sim.seed, |rng| {
        let gains: Vec<f64> = sample_radii(network.intensity, radius, rng)
            .into_iter()
            .map(|r| network.pathloss.gain(r))
            .collect();
        p.iter()
            .map(|&pi| {
                let i = slot_interference(&gains, network.tx_prob, &sampler, rng) + tail_mean;
                i.powi(pi as i32) * (-c * i).exp()
            })
            .product()
    });
    let (sum, sum_sq) = blocks.iter().fold((0.0, 0.0), |(s, q), b| (s + b.sum, q + b.sum_sq));
    let n = sim.replications as f64;
    let mean = sum / n;
    let var = if sim.replications > 1 {
        ((sum_sq - n * mean * mean) / (n - 1.0)).max(0.0)
    } else {
        0.0
    };
    Ok(MonteCarloEstimate {
        mean,
        std_error: (var / n).sqrt(),
        replications: sim.replications,
        window_radius: radius,
        truncation_bias_bound: bound,
        elapsed: started.elapsed(),
    })
}

/// Estimates the single-slot and two-slot success probabilities of `link`
/// from one run with a shared point set per replication.
pub fn estimate_link(link: &LinkConfig, sim: &SimConfig) -> Result<LinkEstimate> {
    check_sim(sim)?;
    let started = Instant::now();
    let network = &link.network;
    let theta_hat = link.theta_hat();
    let fading = network.fading;
    // given the interference, a slot succeeds with probability G(I) = ccdf(theta_hat I)
    let (sup_pdf, sup_dpdf) = gamma_pdf_bounds(link.m(), f64::from(link.m()) / fading.mean());
    let slot = SlotBounds {
        sup: 1.0,
        d1: theta_hat * sup_pdf,
        d2: theta_hat * theta_hat * sup_dpdf,
    };
    let single = product_smoothness(&[slot]);
    // the two-slot events move with both arguments; size the window for them
    let (radius, bound) = choose_window(network, sim, &product_smoothness(&[slot, slot]), link.distance)?;
    let tail_mean = match sim.tail {
        TailMode::MeanField => tail_moments(network, radius).0,
        TailMode::Truncate => 0.0,
    };
    let sampler = fading.sampler();
    let blocks: Vec<Counts> = run_blocks(sim.replications, sim.seed, |rng| {
        let gains: Vec<f64> = sample_radii(network.intensity, radius, rng)
            .into_iter()
            .map(|r| network.pathloss.gain(r))
            .collect();
        let i1 = slot_interference(&gains, network.tx_prob, &sampler, rng) + tail_mean;
        let i2 = slot_interference(&gains, network.tx_prob, &sampler, rng) + tail_mean;
        let s1 = sampler.sample(rng) >= theta_hat * i1;
        let s2 = sampler.sample(rng) >= theta_hat * i2;
        (s1, s2)
    });
    let (success, joint, both_failed) = blocks
        .iter()
        .fold((0u64, 0u64, 0u64), |(s, j, f), b| (s + b.success, j + b.joint, f + b.both_failed));
    let n = sim.replications as f64;
    let elapsed = started.elapsed();
    let binomial = |count: u64, bias: f64| {
        let p = count as f64 / n;
        MonteCarloEstimate {
            mean: p,
            std_error: (p * (1.0 - p) / n).sqrt(),
            replications: sim.replications,
            window_radius: radius,
            truncation_bias_bound: bias,
            elapsed,
        }
    };
    Ok(LinkEstimate {
        success: binomial(success, bias_bound(network, radius, sim.tail, &single)),
        joint: binomial(joint, bound),
        joint_outage: binomial(both_failed, bound),
    })
}

pub fn estimate_outage(link: &LinkConfig, sim: &SimConfig) -> Result<MonteCarloEstimate> {
    Ok(estimate_link(link, sim)?.success)
}

pub fn estimate_joint(link: &LinkConfig, sim: &SimConfig) -> Result<MonteCarloEstimate> {
    Ok(estimate_link(link, sim)?.joint)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::combinatorics::ExponentVector;
    use crate::functionals::rayleigh_alpha4_moment;
    use crate::models::{FadingModel, PathLossModel};

    fn net(lambda: f64, tx: f64, fading: FadingModel, pathloss: PathLossModel) -> NetworkConfig {
        NetworkConfig::new(lambda, tx, fading, pathloss).unwrap()
    }

    #[test]
    fn poisson_counts() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let n = 100_000;
        let counts: Vec<f64> = (0..n).map(|_| sample_ppp(1.0, 2.0, &mut rng).len() as f64).collect();
        let mean = counts.iter().sum::<f64>() / n as f64;
        let var = counts.iter().map(|c| (c - mean).powi(2)).sum::<f64>() / (n as f64 - 1.0);
        assert!((mean - 4.0 * PI).abs() < 0.05, "{mean}");
        assert!((var / mean - 1.0).abs() < 0.03, "{var}");
        assert!(sample_ppp(0.0, 2.0, &mut rng).is_empty());
    }

    // Ripley's K with border correction: K(t) = pi t^2 under complete
    // spatial randomness.
    #[test]
    fn ripley_k_matches_csr() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let (lambda, radius) = (1.0, 20.0);
        for &t in &[0.5, 1.0, 2.0] {
            let (mut pairs, mut centers) = (0.0, 0.0);
            for _ in 0..20 {
                let pts = sample_ppp(lambda, radius, &mut rng);
                for a in &pts {
                    if a[0].hypot(a[1]) > radius - t {
                        continue;
                    }
                    centers += 1.0;
                    pairs += pts
                        .iter()
                        .filter(|b| *b != a && (a[0] - b[0]).hypot(a[1] - b[1]) <= t)
                        .count() as f64;
                }
            }
            let k = pairs / centers / lambda;
            let want = PI * t * t;
            assert!((k / want - 1.0).abs() < 0.05, "t={t}: {k} vs {want}");
        }
    }

    #[test]
    fn angles_are_uniform() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let pts = sample_ppp(50.0, 3.0, &mut rng);
        let n = pts.len() as f64;
        let c: f64 = pts.iter().map(|p| p[1].atan2(p[0]).cos()).sum::<f64>() / n;
        let s: f64 = pts.iter().map(|p| p[1].atan2(p[0]).sin()).sum::<f64>() / n;
        assert!(c.abs() < 4.0 / n.sqrt() && s.abs() < 4.0 / n.sqrt());
    }

    #[test]
    fn silent_network_has_no_interference() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let sampler = FadingModel::rayleigh().sampler();
        let gains = vec![1.0, 0.5, 3.0];
        for _ in 0..100 {
            assert_eq!(slot_interference(&gains, 0.0, &sampler, &mut rng), 0.0);
        }
    }

    #[test]
    fn campbell_mean_minimum_model() {
        let network = net(0.1, 1.0, FadingModel::rayleigh(), PathLossModel::minimum(4.0).unwrap());
        let radius = 20.0;
        let tail = tail_moments(&network, radius).0;
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let n = 200_000;
        let (mut s, mut s2) = (0.0, 0.0);
        for _ in 0..n {
            let pts = sample_ppp(network.intensity, radius, &mut rng);
            let i = interference_realization(&pts, &network, 1, &mut rng)[0] + tail;
            s += i;
            s2 += i * i;
        }
        let mean = s / n as f64;
        let se = ((s2 / n as f64 - mean * mean) / n as f64).sqrt();
        let want = 0.1 * 2.0 * PI;
        assert!((mean - want).abs() < 3.0 * se, "{mean} vs {want} (se {se})");
    }

    #[test]
    fn slots_are_positively_correlated() {
        let network = net(0.2, 1.0, FadingModel::rayleigh(), PathLossModel::distance_plus_one(3.0).unwrap());
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let n = 50_000;
        let (mut a, mut b, mut ab, mut aa, mut bb) = (0.0, 0.0, 0.0, 0.0, 0.0);
        for _ in 0..n {
            let pts = sample_ppp(network.intensity, 15.0, &mut rng);
            let i = interference_realization(&pts, &network, 2, &mut rng);
            a += i[0];
            b += i[1];
            ab += i[0] * i[1];
            aa += i[0] * i[0];
            bb += i[1] * i[1];
        }
        let n = n as f64;
        let cov = ab / n - (a / n) * (b / n);
        let corr = cov / ((aa / n - (a / n).powi(2)) * (bb / n - (b / n).powi(2))).sqrt();
        assert!(corr > 0.1, "{corr}");
    }

    #[test]
    fn functional_estimate_matches_closed_form() {
        let lambda = 0.1;
        let network = net(lambda, 1.0, FadingModel::rayleigh(), PathLossModel::singular(4.0).unwrap());
        let spec = FunctionalSpec::new(ExponentVector::scalar(1).unwrap(), 1.0).unwrap();
        let sim = SimConfig {
            replications: 200_000,
            ..SimConfig::default()
        };
        let est = estimate_functional(&network, &spec, &sim).unwrap();
        let want = rayleigh_alpha4_moment(lambda);
        assert!((want - 0.1505).abs() < 2e-4);
        assert!(est.z_score(want) < 3.0, "{est:?} vs {want}");
        assert!(est.truncation_bias_bound <= 1e-3);
        assert!(est.std_error < 1e-3);
    }

    #[test]
    fn empty_field_link_always_succeeds() {
        let network = net(0.0, 1.0, FadingModel::nakagami(3.0).unwrap(), PathLossModel::singular(4.0).unwrap());
        let link = LinkConfig::new(network, 0.5, 2.0).unwrap();
        let est = estimate_link(&link, &SimConfig { replications: 1000, ..SimConfig::default() }).unwrap();
        assert_eq!(est.success.mean, 1.0);
        assert_eq!(est.joint.mean, 1.0);
        let spec = FunctionalSpec::new(ExponentVector::scalar(1).unwrap(), 1.0).unwrap();
        let f = estimate_functional(&network, &spec, &SimConfig { replications: 100, ..SimConfig::default() }).unwrap();
        assert_eq!(f.mean, 0.0);
    }

    #[test]
    fn deterministic_across_thread_counts() {
        let network = net(0.05, 0.8, FadingModel::nakagami(2.0).unwrap(), PathLossModel::singular(3.0).unwrap());
        let link = LinkConfig::new(network, 0.5, 2.0).unwrap();
        let sim = SimConfig {
            replications: 3 * BLOCK + 17,
            seed: 42,
            ..SimConfig::default()
        };
        let run = |threads: usize| {
            rayon::ThreadPoolBuilder::new()
                .num_threads(threads)
                .build()
                .unwrap()
                .install(|| estimate_link(&link, &sim).unwrap())
        };
        let a = run(1);
        let b = run(3);
        assert_eq!(a.success.mean, b.success.mean);
        assert_eq!(a.joint.mean, b.joint.mean);
        let c = estimate_link(&link, &SimConfig { seed: 43, ..sim }).unwrap();
        assert_ne!(a.success.mean.to_bits(), c.success.mean.to_bits());
    }

    #[test]
    fn window_selection() {
        let network = net(0.03, 1.0, FadingModel::nakagami(3.0).unwrap(), PathLossModel::singular(2.5).unwrap());
        let link = LinkConfig::new(network, 0.5, 2.0).unwrap();
        let est = estimate_link(&link, &SimConfig { replications: 10, ..SimConfig::default() }).unwrap();
        assert!(est.joint.truncation_bias_bound <= 1e-3);
        assert!(est.joint.window_radius > 2.0);
        // plain truncation cannot reach the tolerance for alpha = 2.5
        let sim = SimConfig {
            replications: 10,
            tail: TailMode::Truncate,
            ..SimConfig::default()
        };
        assert!(matches!(estimate_link(&link, &sim), Err(Error::OutOfRange(_))));
        // explicit windows must contain the link
        let sim = SimConfig {
            window_radius: Some(1.5),
            ..SimConfig::default()
        };
        assert!(estimate_link(&link, &sim).is_err());
    }

    #[test]
    fn tail_moments_singular() {
        let network = net(0.1, 0.5, FadingModel::rayleigh(), PathLossModel::singular(4.0).unwrap());
        let (mean, sd) = tail_moments(&network, 10.0);
        let want_mean = 2.0 * PI * 0.05 * 1e-2 / 2.0;
        let want_var = 2.0 * PI * 0.05 * 2.0 * 1e-6 / 6.0;
        assert!((mean - want_mean).abs() < 1e-15);
        assert!((sd - want_var.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn lipschitz_constants() {
        for p in 0..5u32 {
            for &c in &[0.3, 1.0, 4.0] {
                let grid_max = (1..200_000)
                    .map(|i| {
                        let x = i as f64 * 1e-4 * (10.0 + f64::from(p)) / c;
                        let h = 1e-7 * x.max(1e-3);
                        let f = |x: f64| x.powi(p as i32) * (-c * x).exp();
                        ((f(x + h) - f(x - h)) / (2.0 * h)).abs()
                    })
                    .fold(0.0, f64::max);
                let l = lipschitz_power_damped(p, c);
                assert!(grid_max <= l * (1.0 + 1e-6), "p={p} c={c}: {grid_max} > {l}");
                let sup = (0..100_000)
                    .map(|i| {
                        let x = i as f64 * 1e-4 * (10.0 + f64::from(p)) / c;
                        x.powi(p as i32) * (-c * x).exp()
                    })
                    .fold(0.0, f64::max);
                assert!(sup <= sup_power_damped(p, c) * (1.0 + 1e-12));
                let second = (1..200_000)
                    .map(|i| {
                        let x = i as f64 * 1e-4 * (10.0 + f64::from(p)) / c;
                        let h = 1e-4 * x.max(1e-2);
                        let f = |x: f64| x.powi(p as i32) * (-c * x).exp();
                        ((f(x + h) - 2.0 * f(x) + f(x - h)) / (h * h)).abs()
                    })
                    .fold(0.0, f64::max);
                let k = curvature_power_damped(p, c);
                assert!(second <= k * (1.0 + 1e-4), "p={p} c={c}: {second} > {k}");
                assert!(second >= k * (1.0 - 1e-2), "p={p} c={c}: {second} << {k}");
            }
        }
    }

    #[test]
    fn gamma_density_bounds() {
        for m in 1..=6u32 {
            for mean in [1.0, 2.5] {
                let rate = f64::from(m) / mean;
                let model = FadingModel::nakagami(f64::from(m)).unwrap();
                // density of mean * h
                let pdf = |x: f64| model.pdf(x / mean) / mean;
                let (f_sup, df_sup) = gamma_pdf_bounds(m, rate);
                let h = 1e-6;
                let (mut f_grid, mut df_grid) = (0.0f64, 0.0f64);
                for i in 1..100_000 {
                    let x = i as f64 * 1e-4 * mean;
                    f_grid = f_grid.max(pdf(x));
                    df_grid = df_grid.max(((pdf(x + h) - pdf(x - h)) / (2.0 * h)).abs());
                }
                assert!(f_grid <= f_sup * (1.0 + 1e-9) && f_grid >= f_sup * (1.0 - 1e-3), "m={m}");
                assert!(df_grid <= df_sup * (1.0 + 1e-5) && df_grid >= df_sup * (1.0 - 1e-2), "m={m}: {df_grid} {df_sup}");
            }
        }
    }

    #[test]
    fn product_smoothness_two_slots() {
        let g = SlotBounds { sup: 1.0, d1: 2.0, d2: 3.0 };
        let s = product_smoothness(&[g, g]);
        assert_eq!(s.lipschitz, 4.0);
        assert_eq!(s.curvature, 0.5 * (3.0 + 3.0 + 4.0 + 4.0));
        let s = product_smoothness(&[g]);
        assert_eq!((s.lipschitz, s.curvature), (2.0, 1.5));
    }
}
