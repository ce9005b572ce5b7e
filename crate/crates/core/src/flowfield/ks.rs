use std::f64::consts::TAU;

/// Below this scaled statistic the complementary Kolmogorov CDF equals 1
/// to double precision (the CDF itself is below 1e-50).
const SMALL_T: f64 = 0.1;

/// Kolmogorov-Smirnov statistic of angles in `[0, 2π)` against the uniform
/// distribution on the circle. Returns 0 for an empty sample.
pub fn ks_statistic(angles: &[f64]) -> f64 {
    let n = angles.len();
    if n == 0 {
        return 0.0;
    }
    let mut u: Vec<f64> = angles.iter().map(|a| a.rem_euclid(TAU) / TAU).collect();
    u.sort_by(f64::total_cmp);
    let nf = n as f64;
    u.iter()
        .enumerate()
        .map(|(i, &ui)| {
            let above = (i + 1) as f64 / nf - ui;
            let below = ui - i as f64 / nf;
            above.max(below)
        })
        .fold(0.0, f64::max)
}

/// `P(K > t)` for the Kolmogorov distribution,
/// `2 Σ_{k≥1} (-1)^{k-1} exp(-2 k² t²)`, summed until a term drops below 1e-12.
pub fn kolmogorov_ccdf(t: f64) -> f64 {
    if t < SMALL_T {
        return 1.0;
    }
    let mut sum = 0.0;
    let mut k = 1.0f64;
    loop {
        let term = (-2.0 * k * k * t * t).exp();
        if term < 1e-12 {
            break;
        }
        sum += if k as u64 % 2 == 1 { term } else { -term };
        k += 1.0;
    }
    (2.0 * sum).clamp(0.0, 1.0)
}

/// p-value of the uniformity test on flow angles; `1.0` for an empty sample.
pub fn ks_pvalue(angles: &[f64]) -> f64 {
    if angles.is_empty() {
        return 1.0;
    }
    kolmogorov_ccdf((angles.len() as f64).sqrt() * ks_statistic(angles))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::f64::consts::PI;

    /// Independent evaluation: fixed long sum, no early exit.
    fn series(t: f64) -> f64 {
        let s: f64 = (1..=20_000)
            .map(|k| {
                let k = k as f64;
                let sign = if (k as u64) % 2 == 1 { 1.0 } else { -1.0 };
                sign * (-2.0 * k * k * t * t).exp()
            })
            .sum();
        (2.0 * s).clamp(0.0, 1.0)
    }

    #[test]
    fn equispaced_sample() {
        let angles: Vec<f64> = (0..100).map(|i| i as f64 * TAU / 100.0).collect();
        assert!((ks_statistic(&angles) - 0.01).abs() < 1e-12);
        assert!(ks_pvalue(&angles) > 0.999);
    }

    #[test]
    fn concentrated_sample() {
        let angles = vec![PI; 25];
        assert!((ks_statistic(&angles) - 0.5).abs() < 1e-12);
        let p = ks_pvalue(&angles);
        // 2 exp(-12.5) minus a negligible second term
        assert!((p - 7.4533e-6).abs() < 1e-9, "{p}");
    }

    #[test]
    fn empty_sample_is_noise() {
        assert_eq!(ks_pvalue(&[]), 1.0);
    }

    #[test]
    fn rotated_grid_keeps_statistic() {
        let base: Vec<f64> = (0..40).map(|i| i as f64 * TAU / 40.0).collect();
        let d0 = ks_statistic(&base);
        // rotations by whole grid steps map the sample onto itself
        for k in [1, 7, 33] {
            let off = k as f64 * TAU / 40.0;
            let rot: Vec<f64> = base.iter().map(|a| (a + off).rem_euclid(TAU)).collect();
            assert!((ks_statistic(&rot) - d0).abs() < 1e-12);
        }
    }

    proptest! {
        #[test]
        fn ccdf_matches_direct_series(t in 0.02f64..3.0) {
            prop_assert!((kolmogorov_ccdf(t) - series(t)).abs() <= 1e-9);
        }

        #[test]
        fn permutation_invariant(mut a in proptest::collection::vec(0.0f64..TAU, 1..60), seed in any::<u64>()) {
            let p0 = ks_pvalue(&a);
            // deterministic shuffle
            let n = a.len();
            let mut s = seed;
            for i in (1..n).rev() {
                s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
                a.swap(i, (s >> 33) as usize % (i + 1));
            }
            prop_assert_eq!(p0, ks_pvalue(&a));
        }

        #[test]
        fn pvalue_in_unit_interval(a in proptest::collection::vec(0.0f64..TAU, 0..80)) {
            let p = ks_pvalue(&a);
            prop_assert!((0.0..=1.0).contains(&p));
        }
    }
}
