//! Binomial error bars for per-gate click tallies.

/// `sqrt(p (1 - p) / n)` for `k` successes in `n` trials; zero when `n = 0`.
pub fn binomial_se(k: u64, n: u64) -> f64 {
    if n == 0 {
        return 0.0;
    }
    let p = k as f64 / n as f64;
    (p * (1.0 - p) / n as f64).sqrt()
}

/// Visibility estimate from `n` gates with `k_c`, `k_d` singles and
/// `k_coin` coincidences, and its delta-method standard error.
///
/// The covariance of the three per-gate indicators is multinomial, since a
/// coincidence is the product of the two singles indicators. `None` when a
/// singles tally is zero.
pub fn visibility_estimate(n: u64, k_c: u64, k_d: u64, k_coin: u64) -> Option<(f64, f64)> {
    if n == 0 || k_c == 0 || k_d == 0 {
        return None;
    }
    let nf = n as f64;
    let (pc, pd, pcd) = (k_c as f64 / nf, k_d as f64 / nf, k_coin as f64 / nf);
    let v = 1.0 - pcd / (pc * pd);

    let g = [-1.0 / (pc * pd), pcd / (pc * pc * pd), pcd / (pc * pd * pd)];
    let cov = [
        [pcd * (1.0 - pcd), pcd * (1.0 - pc), pcd * (1.0 - pd)],
        [pcd * (1.0 - pc), pc * (1.0 - pc), pcd - pc * pd],
        [pcd * (1.0 - pd), pcd - pc * pd, pd * (1.0 - pd)],
    ];
    let mut var = 0.0;
    for i in 0..3 {
        for j in 0..3 {
            var += g[i] * cov[i][j] * g[j];
        }
    }
    Some((v, (var.max(0.0) / nf).sqrt()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn binomial() {
        assert_eq!(binomial_se(0, 0), 0.0);
        assert_eq!(binomial_se(0, 10), 0.0);
        assert!((binomial_se(50, 100) - 0.05).abs() < 1e-15);
    }

    #[test]
    fn visibility_degenerate() {
        assert!(visibility_estimate(100, 0, 3, 0).is_none());
        assert!(visibility_estimate(0, 0, 0, 0).is_none());
    }

    #[test]
    fn visibility_se_matches_finite_difference_gradient() {
        // gradient by central differences instead of the analytic one
        let (n, kc, kd, kcd) = (1_000_000u64, 43_518u64, 43_518u64, 968u64);
        let (v, se) = visibility_estimate(n, kc, kd, kcd).unwrap();
        let vf = |pc: f64, pd: f64, pcd: f64| 1.0 - pcd / (pc * pd);
        let nf = n as f64;
        let (pc, pd, pcd) = (kc as f64 / nf, kd as f64 / nf, kcd as f64 / nf);
        assert!((v - vf(pc, pd, pcd)).abs() < 1e-15);
        let h = 1e-7;
        let g = [
            (vf(pc, pd, pcd + h) - vf(pc, pd, pcd - h)) / (2.0 * h),
            (vf(pc + h, pd, pcd) - vf(pc - h, pd, pcd)) / (2.0 * h),
            (vf(pc, pd + h, pcd) - vf(pc, pd - h, pcd)) / (2.0 * h),
        ];
        let cov = [
            [pcd * (1.0 - pcd), pcd * (1.0 - pc), pcd * (1.0 - pd)],
            [pcd * (1.0 - pc), pc * (1.0 - pc), pcd - pc * pd],
            [pcd * (1.0 - pd), pcd - pc * pd, pd * (1.0 - pd)],
        ];
        let mut var = 0.0;
        for i in 0..3 {
            for j in 0..3 {
                var += g[i] * cov[i][j] * g[j];
            }
        }
        let se_fd = (var / nf).sqrt();
        assert!((se - se_fd).abs() / se < 1e-5);
        // about 3% relative error on ~970 coincidences
        assert!(se > 0.01 && se < 0.03, "se = {se}");
    }
}
