//! Property tests for the structural invariants of the analytic routes.

use ppp_interference::combinatorics::ExponentVector;
use ppp_interference::functionals::{
    interference_functional, interference_pgfl, laplace_moment_check, propagation_equivalent_intensity,
    rayleigh_singular_moment, FunctionalSpec, NetworkConfig,
};
use ppp_interference::models::{FadingModel, PathLossKind, PathLossModel};
use ppp_interference::outage::{
    at_least_one, joint_success_probability, joint_success_probability_singular, success_probability,
    success_probability_singular, LinkConfig,
};
use ppp_interference::quadrature::QuadratureSpec;
use proptest::prelude::*;

fn pathloss() -> impl Strategy<Value = PathLossKind> {
    prop_oneof![
        Just(PathLossKind::Singular),
        Just(PathLossKind::Minimum),
        Just(PathLossKind::DistancePlusOne),
        (0.1f64..2.0).prop_map(PathLossKind::Epsilon),
    ]
}

fn fading() -> impl Strategy<Value = FadingModel> {
    prop_oneof![
        Just(FadingModel::rayleigh()),
        (1u32..5).prop_map(|m| FadingModel::nakagami(f64::from(m)).unwrap()),
        (2u32..4).prop_map(|k| FadingModel::erlang(k).unwrap().with_normalized_mean(true)),
        (1u32..4, 0.2f64..3.0).prop_map(|(k, psi)| FadingModel::rice(k, psi).unwrap().with_normalized_mean(true)),
    ]
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(1e-300)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn slot_permutation_symmetry(
        kind in pathloss(),
        fading in fading(),
        alpha in 2.5f64..5.0,
        lambda in 0.01f64..0.3,
        tx in 0.2f64..1.0,
        p in prop::collection::vec(0u32..3, 2..=3),
        c in 0.3f64..2.0,
    ) {
        prop_assume!(p.iter().sum::<u32>() >= 1);
        let net = NetworkConfig::new(lambda, tx, fading, PathLossModel::new(kind, alpha).unwrap()).unwrap();
        let quad = QuadratureSpec::default();
        let value = |p: Vec<u32>| {
            interference_functional(&net, &FunctionalSpec::new(ExponentVector::new(p).unwrap(), c).unwrap(), &quad).unwrap()
        };
        let base = value(p.clone());
        let mut reversed = p.clone();
        reversed.reverse();
        let mut rotated = p.clone();
        rotated.rotate_left(1);
        prop_assert!(rel(base, value(reversed)) < 1e-12);
        prop_assert!(rel(base, value(rotated)) < 1e-12);
    }

    #[test]
    fn pgfl_monotone_in_lambda_and_damping(
        kind in pathloss(),
        fading in fading(),
        alpha in 2.5f64..5.0,
        lambda in 0.01f64..0.3,
        dl in 0.001f64..0.2,
        c in 0.1f64..2.0,
        dc in 0.01f64..2.0,
        q in 1usize..=3,
    ) {
        let quad = QuadratureSpec::default();
        let pgfl = |lambda: f64, c: f64| {
            let net = NetworkConfig::new(lambda, 0.7, fading, PathLossModel::new(kind, alpha).unwrap()).unwrap();
            interference_pgfl(&net, c, q, &quad).unwrap()
        };
        let base = pgfl(lambda, c);
        prop_assert!(base > 0.0 && base <= 1.0);
        prop_assert!(pgfl(lambda + dl, c) <= base);
        prop_assert!(pgfl(lambda, c + dc) <= base);
    }

    #[test]
    fn three_routes_agree(k in 1u32..=4, alpha in 2.2f64..6.0, lambda in 0.001f64..0.5, tx in 0.05f64..1.0) {
        let closed = rayleigh_singular_moment(k, lambda, tx, alpha).unwrap();
        let laplace = laplace_moment_check(k, lambda, tx, alpha).unwrap();
        let net = NetworkConfig::new(lambda, tx, FadingModel::rayleigh(), PathLossModel::singular(alpha).unwrap()).unwrap();
        let spec = FunctionalSpec::new(ExponentVector::scalar(k).unwrap(), 1.0).unwrap();
        let quad = interference_functional(&net, &spec, &QuadratureSpec::default()).unwrap();
        prop_assert!(rel(closed, laplace) < 1e-6, "closed {} laplace {}", closed, laplace);
        prop_assert!(rel(closed, quad) < 1e-6, "closed {} quadrature {}", closed, quad);
    }

    #[test]
    fn propagation_invariance(m in 1u32..6, alpha in 2.5f64..5.0, lambda in 0.01f64..0.3) {
        // singular path loss: general fading acts as Rayleigh at a rescaled intensity
        let fading = FadingModel::nakagami(f64::from(m)).unwrap();
        let delta = 2.0 / alpha;
        let equivalent = propagation_equivalent_intensity(lambda, &fading, delta).unwrap();
        let net = NetworkConfig::new(lambda, 1.0, fading, PathLossModel::singular(alpha).unwrap()).unwrap();
        let spec = FunctionalSpec::new(ExponentVector::scalar(1).unwrap(), 1.0).unwrap();
        let want = rayleigh_singular_moment(1, equivalent, 1.0, alpha).unwrap();
        let got = interference_functional(&net, &spec, &QuadratureSpec::default()).unwrap();
        prop_assert!(rel(want, got) < 1e-6, "{} vs {}", want, got);
    }

    #[test]
    fn link_probabilities_ordered(
        m in 1u32..=6,
        alpha in 2.3f64..6.0,
        lambda in 0.001f64..0.2,
        tx in prop_oneof![Just(1.0), 0.1f64..1.0],
        theta in 0.1f64..4.0,
        d in 0.5f64..3.0,
    ) {
        let net = NetworkConfig::new(lambda, tx, FadingModel::nakagami(f64::from(m)).unwrap(), PathLossModel::singular(alpha).unwrap()).unwrap();
        let link = LinkConfig::new(net, theta, d).unwrap();
        let quad = QuadratureSpec::default();
        let p = success_probability_singular(&link).unwrap();
        let pq = success_probability(&link, &quad).unwrap();
        let pj = joint_success_probability(&link, &quad).unwrap();
        prop_assert!((p - pq).abs() < 1e-8);
        prop_assert!(pj >= p * p && pj <= p);
        prop_assert!(at_least_one(p, pj) <= 1.0 - (1.0 - p) * (1.0 - p) + 1e-15);
        if tx == 1.0 {
            prop_assert!((pj - joint_success_probability_singular(&link).unwrap()).abs() < 1e-8);
        }
    }
}

#[test]
fn full_transmit_joint_closed_form() {
    let quad = QuadratureSpec::default();
    for m in 1..=5 {
        for alpha in [2.5, 3.0, 4.0, 5.0] {
            let net = NetworkConfig::new(0.05, 1.0, FadingModel::nakagami(f64::from(m)).unwrap(), PathLossModel::singular(alpha).unwrap()).unwrap();
            let link = LinkConfig::new(net, 0.5, 2.0).unwrap();
            let closed = joint_success_probability_singular(&link).unwrap();
            let quadrature = joint_success_probability(&link, &quad).unwrap();
            assert!((closed - quadrature).abs() < 1e-8, "m={m} alpha={alpha}: {closed} vs {quadrature}");
        }
    }
}
