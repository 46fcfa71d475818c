use proptest::prelude::*;

use kogner::numeric::{dropout, lr_at, masked_bce_value, sigmoid_scalar, Matrix, ScheduleConfig};

proptest! {
    #[test]
    fn schedule_is_non_negative_and_continuous(
        base in 1e-5f64..1.0,
        total in 2usize..5000,
        ratio in 0.0f64..0.5,
    ) {
        let cfg = ScheduleConfig::new(base, total, ratio).unwrap();
        let warmup = cfg.warmup_steps();
        let mut prev = lr_at(0, &cfg);
        for step in 0..=total {
            let lr = lr_at(step, &cfg);
            prop_assert!(lr >= 0.0 && lr <= base * (1.0 + 1e-12));
            // adjacent steps never jump by more than the larger of one warmup or cosine increment
            let bound = base * (1.0 / warmup.max(1) as f64 + std::f64::consts::PI / (total - warmup) as f64);
            prop_assert!((lr - prev).abs() <= bound + 1e-12, "step {}: {} -> {}", step, prev, lr);
            prev = lr;
        }
        prop_assert_eq!(lr_at(total, &cfg), 0.0);
    }

    #[test]
    fn sigmoid_is_bounded_and_monotone(x in -800.0f64..800.0, dx in 1e-6f64..10.0) {
        let (a, b) = (sigmoid_scalar(x), sigmoid_scalar(x + dx));
        prop_assert!(a > 0.0 && a < 1.0);
        prop_assert!(b >= a);
    }

    #[test]
    fn masked_bce_is_non_negative(v in prop::collection::vec((0.0f64..=1.0, 0u8..2, 0u8..2), 1..30)) {
        let n = v.len();
        let s = Matrix::from_vec(1, n, v.iter().map(|x| x.0).collect()).unwrap();
        let y = Matrix::from_vec(1, n, v.iter().map(|x| f64::from(x.1)).collect()).unwrap();
        let m = Matrix::from_vec(1, n, v.iter().map(|x| f64::from(x.2)).collect()).unwrap();
        prop_assert!(masked_bce_value(&s, &y, &m) >= 0.0);
    }

    #[test]
    fn dropout_modes(vals in prop::collection::vec(-5.0f64..5.0, 1..40), seed in any::<u64>()) {
        let x = Matrix::from_vec(1, vals.len(), vals).unwrap();
        prop_assert_eq!(dropout(&x, 0.4, false, seed).unwrap(), x.clone());
        prop_assert_eq!(dropout(&x, 0.4, true, seed).unwrap(), dropout(&x, 0.4, true, seed).unwrap());
    }
}
