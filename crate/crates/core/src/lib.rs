//! Sum-product functionals of Poisson point processes and the interference
//! functionals they induce in slotted-ALOHA Poisson networks.
//!
//! The crate is layered bottom-up:
//!
//! - [`combinatorics`]: exponent-matrix classes and their multiplicity
//!   coefficients, plus brute-force oracles on finite point sets.
//! - [`special`]: log-gamma, modified Bessel functions, compensated sums.
//! - [`models`]: path-gain and fading models with closed-form exponential
//!   moments.
//! - [`quadrature`]: adaptive Gauss-Kronrod integration of radial integrands
//!   on the plane.
//! - [`functionals`]: stationary sum-product functionals, interference
//!   functionals, closed forms and the Laplace-transform route.
//! - [`outage`]: single and joint success probabilities under Nakagami fading.
//! - [`simulator`]: the Monte Carlo point-process oracle.
//! - [`cli`]: the `pppi` command-line front end.

// `!(x > 0.0)` is used on purpose: it also rejects NaN
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod combinatorics;
pub mod error;
pub mod functionals;
pub mod models;
pub mod outage;
pub mod quadrature;
pub mod simulator;
pub mod special;

pub use error::{Error, Result};
