mod common;

use common::*;
use proptest::prelude::*;

proptest! {
    #[test]
    fn vote_share_is_monotone(
        taste in taste_strategy(),
        gamma in 0.1f64..50.0,
        s in (-5.0f64..5.0, -5.0f64..5.0),
        r in (-5.0f64..5.0, -5.0f64..5.0),
    ) {
        vote_share_monotone(taste, gamma, s, r)?;
    }

    #[test]
    fn point_district_threshold_is_its_type(taste in taste_strategy(), gamma in 0.1f64..50.0, s in -3.0f64..3.0) {
        threshold_identity(taste, gamma, s)?;
    }

    #[test]
    fn plans_round_trip(input in plan_input_strategy(), gamma in 0.2f64..20.0) {
        plan_round_trip(&input, gamma)?;
    }

    #[test]
    fn filtering_is_idempotent(records in prop::collection::vec(record_strategy(), 0..80)) {
        filter_idempotent(records)?;
    }

    #[test]
    fn probit_inverts_phi(v in 1e-9f64..(1.0 - 1e-9)) {
        probit_round_trip(v)?;
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn lp_solutions_are_single_dipped(half in 2usize..10, gamma in 0.1f64..12.0) {
        lp_single_dipped(2 * half + 1, gamma)?;
    }
}

#[test]
fn vertex_oracle_agrees_with_hand_solution() {
    // max x1 + 2 x2 s.t. x1 + x2 = 1: the vertex x2 = 1
    let a = vec![vec![1.0, 1.0]];
    assert_eq!(vertex_oracle(&a, &[1.0], &[1.0, 2.0]), Some(2.0));
}

#[test]
fn quadrature_oracle_is_accurate() {
    // 0.5 + Phi(1) - 1/2 - (phi(0) - phi(1)) in closed form
    let phi = |x: f64| (-0.5 * x * x).exp() / (2.0 * std::f64::consts::PI).sqrt();
    let exact = gerryopt::taste::normal_cdf(1.0) - phi(0.0) + phi(1.0);
    assert!((matching_slices_quadrature() - exact).abs() < 1e-12);
    assert!((exact - 0.6843).abs() < 1e-4);
}
