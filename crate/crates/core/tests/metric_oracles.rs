mod support;

use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use sgad_core::metrics::{auc_pr, auc_roc, ks_statistic, score_difference};
use support::{brute_auc_pr, brute_auc_roc, brute_ks, small_case};

#[test]
fn rankings_match_brute_force_on_small_corpus() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for case in 0..500 {
        let (s, l) = small_case(&mut rng);
        assert_eq!(auc_roc(&s, &l).unwrap(), brute_auc_roc(&s, &l), "case {case}: {s:?} {l:?}");
        assert_eq!(auc_pr(&s, &l).unwrap(), brute_auc_pr(&s, &l), "case {case}: {s:?} {l:?}");
    }
}

#[test]
fn ks_matches_ecdf_enumeration() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    for _ in 0..500 {
        let (s, l) = small_case(&mut rng);
        let a: Vec<f64> = s.iter().zip(&l).filter(|(_, &y)| y == 0).map(|(v, _)| *v).collect();
        let b: Vec<f64> = s.iter().zip(&l).filter(|(_, &y)| y == 1).map(|(v, _)| *v).collect();
        assert_eq!(ks_statistic(&a, &b).unwrap(), brute_ks(&a, &b));
    }
}

#[test]
fn random_scores_give_prevalence_precision() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let labels: Vec<u8> = (0..200).map(|i| u8::from(i % 5 == 0)).collect();
    let scores: Vec<f64> = (0..200).map(f64::from).collect();
    let mut shuffled = labels.clone();
    let mut total = 0.0;
    for _ in 0..1000 {
        shuffled.shuffle(&mut rng);
        total += auc_pr(&scores, &shuffled).unwrap();
    }
    let mean = total / 1000.0;
    assert!((mean - 0.2).abs() < 0.05, "mean AP {mean}");
}

fn scored_labels() -> impl Strategy<Value = (Vec<f64>, Vec<u8>)> {
    (2usize..60).prop_flat_map(|n| {
        (
            prop::collection::vec(-5.0f64..5.0, n),
            prop::collection::vec(0u8..=1, n),
        )
    })
    .prop_filter("both classes", |(_, l)| l.contains(&0) && l.contains(&1))
}

proptest! {
    #[test]
    fn auc_invariant_under_increasing_maps((s, l) in scored_labels(), scale in 0.1f64..10.0, shift in -3.0f64..3.0) {
        let base = auc_roc(&s, &l).unwrap();
        let exp: Vec<f64> = s.iter().map(|v| v.exp()).collect();
        let affine: Vec<f64> = s.iter().map(|v| scale * v + shift).collect();
        prop_assert!((auc_roc(&exp, &l).unwrap() - base).abs() <= 1e-12);
        prop_assert!((auc_roc(&affine, &l).unwrap() - base).abs() <= 1e-12);
    }

    #[test]
    fn auc_of_negated_scores_is_complement((s, l) in scored_labels()) {
        let mut sorted = s.clone();
        sorted.sort_by(f64::total_cmp);
        prop_assume!(sorted.windows(2).all(|w| w[0] < w[1]));
        let neg: Vec<f64> = s.iter().map(|v| -v).collect();
        prop_assert!((auc_roc(&s, &l).unwrap() + auc_roc(&neg, &l).unwrap() - 1.0).abs() <= 1e-12);
    }

    #[test]
    fn ks_symmetric_and_transform_invariant(
        a in prop::collection::vec(-4.0f64..4.0, 1..40),
        b in prop::collection::vec(-4.0f64..4.0, 1..40),
    ) {
        let d = ks_statistic(&a, &b).unwrap();
        prop_assert_eq!(d, ks_statistic(&b, &a).unwrap());
        let ea: Vec<f64> = a.iter().map(|v| v.exp()).collect();
        let eb: Vec<f64> = b.iter().map(|v| v.exp()).collect();
        prop_assert_eq!(d, ks_statistic(&ea, &eb).unwrap());
        prop_assert!((0.0..=1.0).contains(&d));
    }

    #[test]
    fn metrics_stay_in_unit_interval((s, l) in scored_labels()) {
        for m in [auc_roc(&s, &l).unwrap(), auc_pr(&s, &l).unwrap()] {
            prop_assert!((0.0..=1.0).contains(&m));
        }
    }

    #[test]
    fn score_differences_translation_invariant(
        (s, l) in scored_labels(),
        c in -10.0f64..10.0,
        seed in any::<u64>(),
    ) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let fields: Vec<u8> = (0..s.len()).map(|_| rand::Rng::gen_range(&mut rng, 0..4)).collect();
        let shifted: Vec<f64> = s.iter().map(|v| v + c).collect();
        let before = score_difference(&s, &l, &fields).unwrap();
        let after = score_difference(&shifted, &l, &fields).unwrap();
        for (x, y) in before.0.iter().zip(after.0.iter()) {
            match (x, y) {
                (Some(x), Some(y)) => prop_assert!((x - y).abs() < 1e-9),
                (None, None) => {}
                _ => prop_assert!(false, "presence changed"),
            }
        }
    }
}
