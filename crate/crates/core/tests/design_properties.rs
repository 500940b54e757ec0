mod common;

use common::{random_rooted_digraph, unit_edges};
use formation_core::eso::{residual_gain, EsoParams};
use formation_core::signals::{uniform_grid, FormationSpec};
use formation_core::{design, presets, DesignInput, Error, PlantParams};
use nalgebra::Complex;
use proptest::prelude::*;
use rand::rngs::StdRng;
use rand::SeedableRng;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    #[test]
    fn observer_poles_at_minus_sigma(sigma in 0.01f64..1e3) {
        let p = EsoParams::from_bandwidth(sigma).unwrap();
        for pole in p.error_poles() {
            prop_assert!((pole + sigma).norm() < 1e-9 * sigma.max(1.0));
        }
    }

    #[test]
    fn residual_gain_closed_form(sigma in 0.1f64..100.0, w in 0.0f64..200.0) {
        let expected = w * (w * w + 4.0 * sigma * sigma).sqrt() / (w * w + sigma * sigma);
        prop_assert!((residual_gain(sigma, w).norm() - expected).abs() < 1e-12);
        let p = EsoParams::from_bandwidth(sigma).unwrap();
        let via_g = Complex::from(1.0) - p.transfer(Complex::new(0.0, w));
        prop_assert!((via_g - residual_gain(sigma, w)).norm() < 1e-12);
    }

    #[test]
    fn residual_gain_rises_until_peak(sigma in 0.1f64..100.0, a in 0.0f64..1.0, b in 0.0f64..1.0) {
        let peak = 2f64.sqrt() * sigma;
        let (lo, hi) = (a.min(b) * peak, a.max(b) * peak);
        prop_assert!(residual_gain(sigma, lo).norm() <= residual_gain(sigma, hi).norm() + 1e-15);
        prop_assert!(residual_gain(sigma, hi).norm() <= 2.0 / 3f64.sqrt() + 1e-15);
    }

    #[test]
    fn design_is_deterministic(seed in any::<u64>(), n in 2usize..=8, density in 0.0f64..0.6) {
        let g = random_rooted_digraph(&mut StdRng::seed_from_u64(seed), n, density);
        let f = FormationSpec::rotating_polygon(n, 3, 2.0, 0.7, 0.5);
        let sigma = vec![10.0; n];
        let input = DesignInput {
            graph: &g,
            plant: PlantParams::new(-0.01, 0.0, 3).unwrap(),
            formation: &f,
            disturbance: None,
            eps_f: 1e-6,
            sigma: &sigma,
            feasibility_grid: uniform_grid(5.0, 0.01),
            lambda2_override: None,
        };
        let a = design(&input).unwrap();
        let b = design(&input).unwrap();
        prop_assert_eq!(format!("{a:?}"), format!("{b:?}"));
        prop_assert!(a.hurwitz.is_hurwitz());
    }
}

#[test]
fn substitute_scenario_design() {
    let s = presets::hexagon_scenario(20.0).unwrap();
    let r = design(&s.design_input()).unwrap();
    assert!(r.feasible);
    assert!(r.feasibility.max < 1e-12);
    assert!((r.riccati.k_row.k_p - presets::PUBLISHED_GAIN[0]).abs() < 1e-3);
    assert!((r.riccati.k_row.k_v - presets::PUBLISHED_GAIN[1]).abs() < 1e-3);
    assert!(r.hurwitz.is_hurwitz());
    assert_eq!(r.hurwitz.margins.len(), 5);
    // sigma = 10, w = 1: residual below the warning level
    assert!(r.warnings.is_empty(), "{:?}", r.warnings);
    let at_one = r.observer.predictions.iter().find(|p| p.angular_frequency == 1.0).unwrap();
    assert!((at_one.residual_gain - 401f64.sqrt() / 101.0).abs() < 1e-12);
}

#[test]
fn design_errors_are_classified() {
    let f = FormationSpec::zero(4, 1);
    let sigma = [10.0; 4];
    let input = |g| DesignInput {
        graph: g,
        plant: PlantParams::new(-0.01, 0.0, 1).unwrap(),
        formation: &f,
        disturbance: None,
        eps_f: 1e-6,
        sigma: &sigma,
        feasibility_grid: uniform_grid(1.0, 0.1),
        lambda2_override: None,
    };
    let pairs = unit_edges(4, &[(0, 1), (2, 3)]);
    assert!(matches!(design(&input(&pairs)), Err(Error::NoSpanningTree { zero_count: 2 })));
    let path = unit_edges(4, &[(0, 1), (1, 2), (2, 3)]);
    let mut bad = input(&path);
    bad.lambda2_override = Some(-1.0);
    assert!(matches!(design(&bad), Err(Error::InvalidLambda2(_))));
}
