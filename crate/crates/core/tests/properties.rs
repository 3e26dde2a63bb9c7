//! Randomized invariants.

use faer::Mat;
use lgprobe::correlator::{lg_function, stc_ed};
use lgprobe::ed::EdSystem;
use lgprobe::model::{build_xxz, build_xy, Direction};
use lgprobe::scan::{
    detect_derivative_peaks, detect_jumps, detect_kinks, finite_diff, weighted_median, DetectorConfig,
};
use lgprobe::tensor::{svd_truncate, truncation_rank};
use proptest::prelude::*;

/// Strictly increasing grid from positive gaps.
fn grid_from(start: f64, gaps: &[f64]) -> Vec<f64> {
    let mut x = vec![start];
    for g in gaps {
        x.push(x[x.len() - 1] + g);
    }
    x
}

fn direction() -> impl Strategy<Value = Direction> {
    prop_oneof![Just(Direction::X), Just(Direction::Y), Just(Direction::Z)]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn finite_differences_exact_on_quadratics(
        a in -3.0..3.0f64, b in -3.0..3.0f64, c in -3.0..3.0f64,
        start in -2.0..2.0f64,
        gaps in prop::collection::vec(0.02..0.5f64, 2..20),
    ) {
        let x = grid_from(start, &gaps);
        let v: Vec<f64> = x.iter().map(|t| a * t * t + b * t + c).collect();
        let d1 = finite_diff(&x, &v, 1).unwrap();
        let d2 = finite_diff(&x, &v, 2).unwrap();
        for (i, t) in x.iter().enumerate() {
            prop_assert!((d1[i] - (2.0 * a * t + b)).abs() < 1e-8 * (1.0 + (2.0 * a * t + b).abs()));
            prop_assert!((d2[i] - 2.0 * a).abs() < 1e-6 * (1.0 + a.abs()));
        }
    }

    #[test]
    fn detector_windows_lie_inside_the_grid(
        start in -2.0..2.0f64,
        gaps in prop::collection::vec(0.01..0.3f64, 4..30),
        values in prop::collection::vec(-1.0..1.0f64, 31),
    ) {
        let x = grid_from(start, &gaps);
        let v = &values[..x.len()];
        let cfg = DetectorConfig::default();
        let (lo, hi) = (x[0], x[x.len() - 1]);
        let mut all = detect_jumps("v", &x, v, &cfg);
        all.extend(detect_derivative_peaks("v", &x, v, &cfg).unwrap());
        all.extend(detect_kinks("v", &x, v, &cfg));
        for c in all {
            prop_assert!(lo <= c.window.0 && c.window.0 <= c.lambda);
            prop_assert!(c.lambda <= c.window.1 && c.window.1 <= hi);
            prop_assert!(!c.ratio.is_nan() && c.magnitude >= 0.0);
        }
    }

    #[test]
    fn weighted_median_is_a_balancing_point(
        pairs in prop::collection::vec((-5.0..5.0f64, 0.01..2.0f64), 1..25),
    ) {
        let (v, w): (Vec<f64>, Vec<f64>) = pairs.into_iter().unzip();
        let m = weighted_median(&v, &w);
        let total: f64 = w.iter().sum();
        let below: f64 = v.iter().zip(&w).filter(|(x, _)| **x < m).map(|(_, w)| w).sum();
        let above: f64 = v.iter().zip(&w).filter(|(x, _)| **x > m).map(|(_, w)| w).sum();
        prop_assert!(v.contains(&m));
        prop_assert!(below <= total / 2.0 + 1e-12);
        prop_assert!(above <= total / 2.0 + 1e-12);
    }

    #[test]
    fn truncation_rank_respects_both_limits(
        mut s in prop::collection::vec(0.0..10.0f64, 1..30),
        chi in 1usize..40,
        cutoff in 0.0..0.5f64,
    ) {
        s.sort_by(|a, b| b.total_cmp(a));
        let (kept, w, capped) = truncation_rank(&s, chi, cutoff);
        prop_assert!(kept >= 1 && kept <= chi.max(1) && kept <= s.len().max(1));
        prop_assert!((0.0..=1.0).contains(&w));
        if !capped {
            prop_assert!(w <= cutoff + 1e-12);
        }
    }

    #[test]
    fn svd_preserves_frobenius_norm(
        r in 1usize..8, c in 1usize..8,
        entries in prop::collection::vec(-1.0..1.0f64, 64),
    ) {
        let m = Mat::from_fn(r, c, |i, j| entries[i * 8 + j]);
        let t = svd_truncate(m.as_ref(), 64, 0.0).unwrap();
        let fro: f64 = entries.iter().enumerate()
            .filter(|(k, _)| k / 8 < r && k % 8 < c)
            .map(|(_, x)| x * x).sum();
        let ss: f64 = t.s.iter().map(|x| x * x).sum();
        prop_assert!((fro - ss).abs() < 1e-10 * (1.0 + fro));
        prop_assert!(t.s.windows(2).all(|w| w[0] >= w[1]));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn correlations_and_lg_functions_are_bounded(
        n in 2usize..7,
        xxz in any::<bool>(),
        p in 0.0..1.0f64,
        q in 0.0..2.0f64,
        site_frac in 0.0..1.0f64,
        mu in direction(),
    ) {
        let h = if xxz { build_xxz(n, 1.0, 3.0 * p - 1.5).unwrap() } else { build_xy(n, 1.0, p, q).unwrap() };
        let sys = EdSystem::new(&h).unwrap();
        let k = ((site_frac * n as f64) as usize).min(n - 1);
        let ts: Vec<f64> = (0..=60).map(|i| i as f64 * 0.05).collect();
        let c = stc_ed(&sys, k, mu, &ts).unwrap();
        prop_assert!((c.values[0] - 1.0).abs() < 1e-12);
        prop_assert!(c.values.iter().all(|v| v.abs() <= 1.0 + 1e-12));
        let lg = lg_function(&c).unwrap();
        prop_assert!(lg.k_values.iter().all(|v| (-3.0 - 1e-12..=3.0 + 1e-12).contains(v)));
    }
}
