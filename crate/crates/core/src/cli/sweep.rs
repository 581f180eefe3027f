//! Parameter sweeps and figure presets.

use std::str::FromStr;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scale {
    Linear,
    Log,
}

/// `lo:hi:steps[:log]`, an inclusive grid of `steps >= 2` points.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepSpec {
    pub lo: f64,
    pub hi: f64,
    pub steps: usize,
    pub scale: Scale,
}

impl SweepSpec {
    pub fn new(lo: f64, hi: f64, steps: usize, scale: Scale) -> Result<Self> {
        if !(lo < hi) || !lo.is_finite() || !hi.is_finite() {
            return Err(Error::InvalidInput(format!("sweep needs lo < hi, got {lo}:{hi}")));
        }
        if steps < 2 {
            return Err(Error::InvalidInput(format!("sweep needs at least 2 steps, got {steps}")));
        }
        if scale == Scale::Log && lo <= 0.0 {
            return Err(Error::InvalidInput("log sweep needs lo > 0".into()));
        }
        Ok(Self { lo, hi, steps, scale })
    }

    pub fn values(&self) -> Vec<f64> {
        let n = self.steps - 1;
        (0..=n)
            .map(|i| {
                if i == n {
                    return self.hi;
                }
                let t = i as f64 / n as f64;
                match self.scale {
                    Scale::Linear => self.lo + t * (self.hi - self.lo),
                    Scale::Log => (self.lo.ln() + t * (self.hi.ln() - self.lo.ln())).exp(),
                }
            })
            .collect()
    }
}

impl FromStr for SweepSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let parts: Vec<&str> = s.split(':').collect();
        let bad = || Error::InvalidInput(format!("bad sweep `{s}` (expected lo:hi:steps[:log])"));
        if parts.len() != 3 && parts.len() != 4 {
            return Err(bad());
        }
        let lo: f64 = parts[0].trim().parse().map_err(|_| bad())?;
        let hi: f64 = parts[1].trim().parse().map_err(|_| bad())?;
        let steps: usize = parts[2].trim().parse().map_err(|_| bad())?;
        let scale = match parts.get(3).map(|p| p.trim()) {
            None | Some("lin") => Scale::Linear,
            Some("log") => Scale::Log,
            Some(_) => return Err(bad()),
        };
        SweepSpec::new(lo, hi, steps, scale)
    }
}

/// Comma-separated list of numbers.
pub fn parse_list<T: FromStr>(s: &str) -> Result<Vec<T>> {
    s.split(',')
        .map(|x| {
            x.trim()
                .parse()
                .map_err(|_| Error::InvalidInput(format!("bad list entry `{x}` in `{s}`")))
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Quantity {
    /// E[I exp(-I)] (or E[I^k exp(-I)] with --k), Rayleigh fading, singular path loss
    IExpI,
    /// general interference functional
    Functional,
    /// single-transmission success/outage
    Outage,
    /// two-slot success, joint outage and time diversity
    Joint,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Preset {
    Fig1,
    Fig2,
    Fig3,
    Fig4,
    Fig5,
    Fig6,
    Fig7,
    Fig8,
}

/// Parameter set printed with each figure.
#[derive(Debug, Clone, PartialEq)]
pub struct PresetParams {
    pub quantity: Quantity,
    pub alphas: Vec<f64>,
    pub ms: Vec<u32>,
    pub lambda: Option<f64>,
    pub lambda_sweep: Option<SweepSpec>,
    pub alpha_sweep: Option<SweepSpec>,
    pub theta: f64,
    pub distance: f64,
    /// `d = base^(1/alpha)` when set.
    pub distance_root: Option<f64>,
}

impl Preset {
    pub fn params(self) -> PresetParams {
        let lin = |lo, hi, n| SweepSpec::new(lo, hi, n, Scale::Linear).expect("valid preset sweep");
        let four_alphas = vec![2.5, 3.0, 4.0, 5.0];
        let all_m = vec![1, 2, 3, 4, 5];
        let base = PresetParams {
            quantity: Quantity::Outage,
            alphas: four_alphas.clone(),
            ms: vec![3],
            lambda: None,
            lambda_sweep: None,
            alpha_sweep: None,
            theta: 0.5,
            distance: 2.0,
            distance_root: None,
        };
        match self {
            Preset::Fig1 => PresetParams {
                quantity: Quantity::IExpI,
                ms: vec![1],
                lambda_sweep: Some(lin(0.0, 0.8, 101)),
                ..base
            },
            Preset::Fig2 => PresetParams {
                lambda_sweep: Some(lin(0.0, 0.03, 31)),
                ..base
            },
            Preset::Fig3 => PresetParams {
                alphas: vec![],
                ms: all_m,
                lambda: Some(0.03),
                alpha_sweep: Some(lin(2.05, 4.0, 40)),
                theta: 1.0,
                ..base
            },
            Preset::Fig4 => PresetParams {
                alphas: vec![3.0],
                ms: all_m,
                lambda_sweep: Some(lin(0.0, 0.1, 51)),
                ..base
            },
            Preset::Fig5 => PresetParams {
                alphas: vec![],
                ms: all_m,
                lambda: Some(0.01),
                alpha_sweep: Some(lin(2.05, 5.0, 60)),
                distance_root: Some(4.0),
                ..base
            },
            Preset::Fig6 => PresetParams {
                quantity: Quantity::Joint,
                lambda_sweep: Some(lin(0.0, 0.03, 31)),
                ..base
            },
            Preset::Fig7 | Preset::Fig8 => PresetParams {
                quantity: Quantity::Joint,
                alphas: vec![2.5, 3.0, 5.0],
                lambda_sweep: Some(lin(0.0, 0.1, 51)),
                ..base
            },
        }
    }
}
