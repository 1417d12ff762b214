//! The t-distribution p-value against an independent implementation
//! (statrs), plus metric properties from brute-force confusion counts.

use mtmv_cli::stats::{paired_t_test, student_t_two_sided_p};
use mtmv_core::metrics::{compute_metrics, Confusion};

use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use statrs::distribution::{ContinuousCDF, StudentsT};

#[test]
fn p_values_match_statrs_to_1e8() {
    for df in [1usize, 2, 3, 5, 10, 30, 100, 500, 999] {
        for t in [0.01f64, 0.1, 0.5, 1.0, 1.5, 2.0, 3.0, 5.0, 10.0] {
            let ours = student_t_two_sided_p(t, df as f64);
            let dist = StudentsT::new(0.0, 1.0, df as f64).unwrap();
            let reference = 2.0 * (1.0 - dist.cdf(t.abs()));
            assert!(
                (ours - reference).abs() < 1e-8,
                "df {df} t {t}: {ours} vs {reference}"
            );
        }
    }
}

#[test]
fn t_statistic_matches_statrs_pipeline() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for _ in 0..20 {
        let n = rng.gen_range(3..12);
        let a: Vec<f64> = (0..n).map(|_| rng.gen_range(0.0..1.0)).collect();
        let b: Vec<f64> = (0..n).map(|_| rng.gen_range(0.0..1.0)).collect();
        let ours = paired_t_test(&a, &b).unwrap();
        let dist = StudentsT::new(0.0, 1.0, (n - 1) as f64).unwrap();
        let reference_p = 2.0 * (1.0 - dist.cdf(ours.t_stat.abs()));
        assert!((ours.p_value - reference_p).abs() < 1e-8);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(40))]

    /// Swapping the arguments negates t and keeps p.
    #[test]
    fn t_test_antisymmetry(seed in 0u64..100_000, n in 2usize..20) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let a: Vec<f64> = (0..n).map(|_| rng.gen_range(0.0..1.0)).collect();
        let b: Vec<f64> = (0..n).map(|_| rng.gen_range(0.0..1.0)).collect();
        let (ab, ba) = (paired_t_test(&a, &b), paired_t_test(&b, &a));
        match (ab, ba) {
            (Ok(x), Ok(y)) => {
                prop_assert!((x.t_stat + y.t_stat).abs() < 1e-10);
                prop_assert!((x.p_value - y.p_value).abs() < 1e-10);
            }
            (Err(_), Err(_)) => {}
            other => prop_assert!(false, "asymmetric outcome: {:?}", other.0.is_ok()),
        }
    }

    /// compute_metrics equals a brute-force confusion count.
    #[test]
    fn metrics_match_brute_force(seed in 0u64..100_000, n in 1usize..1000) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let preds: Vec<f64> = (0..n).map(|_| rng.gen_range(0.0..1.0)).collect();
        let labels: Vec<f64> = (0..n).map(|_| f64::from(rng.gen_bool(0.5))).collect();
        let report = compute_metrics(&[(&preds, &labels)]).unwrap();

        let (mut tp, mut tn, mut fp, mut fn_) = (0usize, 0usize, 0usize, 0usize);
        for (&p, &l) in preds.iter().zip(&labels) {
            match (p >= 0.5, l == 1.0) {
                (true, true) => tp += 1,
                (true, false) => fp += 1,
                (false, true) => fn_ += 1,
                (false, false) => tn += 1,
            }
        }
        let acc = (tp + tn) as f64 / n as f64;
        let f1 = if 2 * tp + fp + fn_ == 0 { 0.0 } else { 2.0 * tp as f64 / (2 * tp + fp + fn_) as f64 };
        prop_assert_eq!(report.per_task_accuracy[0], acc);
        prop_assert_eq!(report.per_task_f1[0], f1);
        prop_assert!(report.macro_f1 >= 0.0 && report.macro_f1 <= 1.0);

        let c = Confusion::count(&preds, &labels).unwrap();
        prop_assert_eq!((c.tp, c.tn, c.fp, c.fn_), (tp, tn, fp, fn_));
    }
}
