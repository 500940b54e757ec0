mod common;

use approx::assert_abs_diff_eq;
use common::{hamiltonian_riccati, random_rooted_digraph};
use formation_core::graph::{build_laplacian, spectrum};
use formation_core::riccati::{
    are_residual, hurwitz_margins, kernel_input, solve_are, synthesize, verify_hurwitz, PlantParams,
};
use nalgebra::{Complex, Matrix2};
use proptest::prelude::*;
use rand::rngs::StdRng;
use rand::SeedableRng;

fn plant(a: f64, b: f64) -> PlantParams {
    PlantParams::new(a, b, 3).unwrap()
}

#[test]
fn oracle_reproduces_double_integrator() {
    let p = hamiltonian_riccati(0.0, 0.0);
    let s3 = 3f64.sqrt();
    assert_abs_diff_eq!(p, Matrix2::new(s3, 1.0, 1.0, s3), epsilon = 1e-12);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    #[test]
    fn closed_form_satisfies_riccati(a in -5.0f64..5.0, b in -5.0f64..5.0) {
        let p = solve_are(&plant(a, b)).unwrap();
        prop_assert!(are_residual(&p, &plant(a, b)) < 1e-10);
        prop_assert_eq!(p[(0, 1)], p[(1, 0)]);
        prop_assert!(p[(0, 0)] > 0.0 && p.determinant() > 0.0);
    }

    #[test]
    fn closed_form_matches_hamiltonian_oracle(a in -5.0f64..5.0, b in -5.0f64..5.0) {
        let p = solve_are(&plant(a, b)).unwrap();
        let q = hamiltonian_riccati(a, b);
        prop_assert!((p - q).amax() < 1e-8, "closed form {p} vs oracle {q}");
    }

    #[test]
    fn riccati_closed_loop_is_stable(a in -5.0f64..5.0, b in -5.0f64..5.0) {
        let params = plant(a, b);
        let p = solve_are(&params).unwrap();
        let bb = kernel_input();
        let closed = params.kernel() - bb * bb.transpose() * p;
        prop_assert!(closed.trace() < 0.0 && closed.determinant() > 0.0);
    }

    #[test]
    fn gain_is_hurwitz_for_every_eigenvalue_right_of_lambda2(
        seed in any::<u64>(),
        n in 2usize..=10,
        density in 0.0f64..0.6,
        a in -2.0f64..2.0,
        b in -2.0f64..2.0,
    ) {
        let g = random_rooted_digraph(&mut StdRng::seed_from_u64(seed), n, density);
        let sp = spectrum(&build_laplacian(&g)).unwrap();
        let params = plant(a, b);
        let sol = synthesize(&params, sp.lambda2_re).unwrap();
        let report = verify_hurwitz(&params, &sol.k_row, sp.nonzero()).unwrap();
        prop_assert!(report.is_hurwitz());
        prop_assert_eq!(report.margins.len(), n - 1);
    }

    #[test]
    fn lyapunov_cross_check(a in -3.0f64..3.0, b in -3.0f64..3.0, re in 1.0f64..4.0, im in -3.0f64..3.0) {
        // P(A - l B K) + (A - l B K)^H P < 0 for Re(l) >= Re(lambda_2) = 1
        let params = plant(a, b);
        let sol = synthesize(&params, 1.0).unwrap();
        let p = solve_are(&params).unwrap().map(Complex::from);
        let lam = Complex::new(re, im);
        let k = nalgebra::RowVector2::new(sol.k_row.k_p, sol.k_row.k_v).map(Complex::from);
        let m = params.kernel().map(Complex::from) - kernel_input().map(Complex::from) * k * lam;
        let lyap = p * m + m.adjoint() * p;
        // Hermitian 2x2: negative definite iff trace < 0 and det > 0
        prop_assert!(lyap.trace().re < 0.0);
        prop_assert!(lyap.determinant().re > 0.0);
    }

    #[test]
    fn margins_invariant_under_weight_scaling(
        seed in any::<u64>(),
        n in 2usize..=8,
        density in 0.0f64..0.6,
        s in 0.1f64..10.0,
    ) {
        let g = random_rooted_digraph(&mut StdRng::seed_from_u64(seed), n, density);
        let params = plant(-0.01, 0.0);
        let margin = |g: &formation_core::Digraph| {
            let sp = spectrum(&build_laplacian(g)).unwrap();
            let sol = synthesize(&params, sp.lambda2_re).unwrap();
            hurwitz_margins(&params, &sol.k_row, sp.nonzero()).worst()
        };
        let (m1, m2) = (margin(&g), margin(&g.scaled(s).unwrap()));
        prop_assert!((m1 - m2).abs() < 1e-6 * m1.abs().max(1.0), "{m1} vs {m2}");
    }
}
