//! Matched analytic and Monte Carlo evaluations.

use crate::combinatorics::ExponentVector;
use crate::error::Result;
use crate::functionals::{interference_functional, rayleigh_singular_moment, FunctionalSpec, NetworkConfig};
use crate::models::{FadingModel, PathLossModel};
use crate::outage::{joint_auto, joint_outage, success_auto, LinkConfig};
use crate::quadrature::QuadratureSpec;
use crate::simulator::{estimate_functional, estimate_link, MonteCarloEstimate, SimConfig};

use super::output::Row;

/// Largest accepted `|estimate - analytic| / std_error`.
pub const Z_LIMIT: f64 = 4.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Suite {
    /// a handful of cases at 2*10^4 replications
    Quick,
    /// a wider grid at 10^6 replications
    Full,
}

enum Case {
    Functional {
        name: &'static str,
        network: NetworkConfig,
        p: Vec<u32>,
        closed_form: bool,
    },
    Link {
        name: &'static str,
        link: LinkConfig,
    },
}

fn network(lambda: f64, tx: f64, fading: FadingModel, pathloss: PathLossModel) -> Result<NetworkConfig> {
    NetworkConfig::new(lambda, tx, fading, pathloss)
}

fn reference_link(alpha: f64, lambda: f64) -> Result<LinkConfig> {
    let net = network(lambda, 1.0, FadingModel::nakagami(3.0)?, PathLossModel::singular(alpha)?)?;
    LinkConfig::new(net, 0.5, 2.0)
}

fn cases(suite: Suite) -> Result<Vec<Case>> {
    let mut cases = vec![
        Case::Functional {
            name: "i-exp-i rayleigh singular",
            network: network(0.1, 1.0, FadingModel::rayleigh(), PathLossModel::singular(4.0)?)?,
            p: vec![1],
            closed_form: true,
        },
        Case::Functional {
            name: "i-exp-i nakagami min",
            network: network(0.1, 1.0, FadingModel::nakagami(3.0)?, PathLossModel::minimum(4.0)?)?,
            p: vec![1],
            closed_form: false,
        },
        Case::Functional {
            name: "two-slot rayleigh dist1",
            network: network(0.2, 0.5, FadingModel::rayleigh(), PathLossModel::distance_plus_one(3.0)?)?,
            p: vec![1, 1],
            closed_form: false,
        },
        Case::Link {
            name: "nakagami link",
            link: reference_link(4.0, 0.01)?,
        },
        Case::Link {
            name: "nakagami link",
            link: reference_link(2.5, 0.03)?,
        },
    ];
    if suite == Suite::Full {
        cases.extend([
            Case::Functional {
                name: "k=2 erlang eps",
                network: network(0.05, 0.7, FadingModel::erlang(2)?.with_normalized_mean(true), PathLossModel::epsilon(0.5, 3.0)?)?,
                p: vec![2],
                closed_form: false,
            },
            Case::Functional {
                name: "three-slot rice min",
                network: network(0.1, 0.8, FadingModel::rice(2, 1.0)?.with_normalized_mean(true), PathLossModel::minimum(4.0)?)?,
                p: vec![1, 0, 1],
                closed_form: false,
            },
            Case::Functional {
                name: "k=3 rayleigh singular",
                network: network(0.2, 0.5, FadingModel::rayleigh(), PathLossModel::singular(3.0)?)?,
                p: vec![3],
                closed_form: true,
            },
        ]);
        for alpha in [3.0, 5.0] {
            for lambda in [0.005, 0.03] {
                cases.push(Case::Link {
                    name: "nakagami link",
                    link: reference_link(alpha, lambda)?,
                });
            }
        }
        let net = network(0.05, 0.5, FadingModel::nakagami(2.0)?, PathLossModel::minimum(3.0)?)?;
        cases.push(Case::Link {
            name: "aloha link min",
            link: LinkConfig::new(net, 1.0, 1.5)?,
        });
    }
    Ok(cases)
}

fn check(row: Row, analytic: f64, est: &MonteCarloEstimate, failures: &mut usize) -> Row {
    let z = if est.std_error > 0.0 {
        (est.mean - analytic).abs() / est.std_error
    } else if est.mean == analytic {
        0.0
    } else {
        f64::INFINITY
    };
    let pass = z <= Z_LIMIT;
    if !pass {
        *failures += 1;
    }
    row.output("analytic", analytic)
        .output("estimate", est.mean)
        .output("std_error", est.std_error)
        .output("z", z)
        .output("bias_bound", est.truncation_bias_bound)
        .label("status", if pass { "pass" } else { "fail" })
}

/// Runs every case of `suite`; returns the rows and the number of failures.
pub fn run_suite(suite: Suite, seed: u64, reps: Option<u64>) -> Result<(Vec<Row>, usize)> {
    let sim = SimConfig {
        replications: reps.unwrap_or(match suite {
            Suite::Quick => 20_000,
            Suite::Full => 1_000_000,
        }),
        seed,
        ..SimConfig::default()
    };
    let quad = QuadratureSpec::default();
    let mut rows = Vec::new();
    let mut failures = 0;
    for case in cases(suite)? {
        match case {
            Case::Functional {
                name,
                network,
                p,
                closed_form,
            } => {
                let p = ExponentVector::new(p)?;
                let spec = FunctionalSpec::new(p.clone(), 1.0)?;
                let analytic = if closed_form {
                    rayleigh_singular_moment(p.total(), network.intensity, network.tx_prob, network.pathloss.alpha())?
                } else {
                    interference_functional(&network, &spec, &quad)?
                };
                let est = estimate_functional(&network, &spec, &sim)?;
                let row = case_row(name, "functional", &network).input("params", format!("p={}", super::p_list(&p)));
                rows.push(check(row, analytic, &est, &mut failures));
            }
            Case::Link { name, link } => {
                let (p, _) = success_auto(&link, &quad)?;
                let (pj, _) = joint_auto(&link, &quad)?;
                let est = estimate_link(&link, &sim)?;
                let pairs = [
                    ("p_success", p, &est.success),
                    ("p_joint", pj, &est.joint),
                    ("p_joint_outage", joint_outage(p, pj), &est.joint_outage),
                ];
                for (quantity, analytic, estimate) in pairs {
                    let row = case_row(name, quantity, &link.network)
                        .input("params", format!("m={},theta={},d={}", link.m(), link.threshold, link.distance));
                    rows.push(check(row, analytic, estimate, &mut failures));
                }
            }
        }
    }
    Ok((rows, failures))
}

fn case_row(name: &str, quantity: &str, network: &NetworkConfig) -> Row {
    Row::default()
        .input("case", name)
        .input("quantity", quantity)
        .input("fading", network.fading)
        .input("pathloss", network.pathloss.kind())
        .input("alpha", network.pathloss.alpha())
        .input("lambda", network.intensity)
        .input("tx_prob", network.tx_prob)
}
