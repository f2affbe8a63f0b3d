mod common;

use common::{rng, score_fd_gap, triple, VARIANTS};
use nfe_core::flows::FlowParams;
use nfe_core::scoring::{score, score_via_oracle, ScoreVariant};
use proptest::prelude::*;

fn variant() -> impl Strategy<Value = ScoreVariant> {
    (0..VARIANTS.len()).prop_map(|i| VARIANTS[i])
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn scores_are_never_positive(v in variant(), seed in any::<u64>()) {
        let [h, r, t] = triple(v, &mut rng(seed), 6);
        prop_assert!(score(v, &h, &r, &t).unwrap() <= 0.0);
    }

    #[test]
    fn identity_relation_scores_self_at_zero(v in variant(), seed in any::<u64>()) {
        let [h, _, _] = triple(v, &mut rng(seed), 6);
        let id = FlowParams::identity_affine(6);
        prop_assert!(score(v, &h, &id, &h).unwrap().abs() <= 1e-12);
    }

    #[test]
    fn gradient_matches_central_differences(v in variant(), seed in any::<u64>()) {
        let x = triple(v, &mut rng(seed), 4);
        let gap = score_fd_gap(v, &x, 1e-5);
        prop_assert!(gap <= 1e-4, "{v}: {gap}");
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn closed_form_equals_distance_of_pushforwards(v in variant(), seed in any::<u64>()) {
        let [h, r, t] = triple(v, &mut rng(seed), 3);
        let a = score(v, &h, &r, &t).unwrap();
        let b = score_via_oracle(v, &h, &r, &t, 8192).unwrap();
        prop_assert!((a - b).abs() <= 1e-6 * (1.0 + a.abs()), "{v}: {a} vs {b}");
    }
}

#[test]
fn mirrored_two_piece_tail_is_not_a_match() {
    // the same slopes with the sign flipped give the mirrored law
    let h = FlowParams::two_piece(vec![0.0], vec![1.0], vec![2.0]).unwrap();
    let r = FlowParams::identity_affine(1);
    let t = FlowParams::two_piece(vec![0.0], vec![-1.0], vec![-2.0]).unwrap();
    let mirrored = FlowParams::two_piece(vec![0.0], vec![-2.0], vec![-1.0]).unwrap();
    for v in [ScoreVariant::Nfe2Uniform, ScoreVariant::Nfe2Normal] {
        assert!(score(v, &h, &r, &t).unwrap() < -0.1);
        assert_eq!(score(v, &h, &r, &mirrored).unwrap(), 0.0);
    }
}
