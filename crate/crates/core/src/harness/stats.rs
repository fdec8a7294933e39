//! Interval estimates used by the experiment reports.

use statrs::distribution::{Beta, ContinuousCDF, Normal};

/// Two-sided standard-normal quantile for confidence `conf`.
pub fn z_two_sided(conf: f64) -> f64 {
    Normal::standard().inverse_cdf(0.5 + conf / 2.0)
}

/// Wilson score interval for `errors` out of `n` at confidence `conf`.
pub fn wilson(errors: usize, n: usize, conf: f64) -> (f64, f64) {
    if n == 0 {
        return (0.0, 1.0);
    }
    let z = z_two_sided(conf);
    let n = n as f64;
    let p = errors as f64 / n;
    let denom = 1.0 + z * z / n;
    let centre = (p + z * z / (2.0 * n)) / denom;
    let half = z * (p * (1.0 - p) / n + z * z / (4.0 * n * n)).sqrt() / denom;
    ((centre - half).max(0.0), (centre + half).min(1.0))
}

/// One-sided Clopper-Pearson upper bound on the error probability.
pub fn clopper_pearson_upper(errors: usize, n: usize, conf: f64) -> f64 {
    if errors >= n {
        return 1.0;
    }
    Beta::new(errors as f64 + 1.0, (n - errors) as f64).map(|b| b.inverse_cdf(conf)).unwrap_or(1.0)
}

/// Sample mean and (n-1) standard deviation.
pub fn mean_sd(xs: &[f64]) -> (f64, f64) {
    let n = xs.len();
    if n == 0 {
        return (f64::NAN, f64::NAN);
    }
    let mean = xs.iter().sum::<f64>() / n as f64;
    if n == 1 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    (mean, var.sqrt())
}

/// Half-width of the delta-method interval for `R = k / mean(eta)`:
/// `z * k * sd / (mean^2 sqrt(n))`.
pub fn rate_half_width(k: usize, mean_eta: f64, sd_eta: f64, n: usize, conf: f64) -> f64 {
    if n == 0 || mean_eta <= 0.0 {
        return f64::NAN;
    }
    z_two_sided(conf) * k as f64 * sd_eta / (mean_eta * mean_eta * (n as f64).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn wilson_reference_values() {
        // 10 of 100 at 95%: reference (0.05523, 0.17437).
        let (lo, hi) = wilson(10, 100, 0.95);
        assert!((lo - 0.05523).abs() < 1e-4 && (hi - 0.17437).abs() < 1e-4, "{lo} {hi}");
        let (lo, hi) = wilson(0, 50, 0.95);
        assert_eq!(lo, 0.0);
        assert!(hi > 0.0 && hi < 0.1);
    }

    #[test]
    fn clopper_pearson_zero_errors() {
        // With no errors the upper bound is 1 - (1 - conf)^{1/n}.
        let u = clopper_pearson_upper(0, 1000, 0.99);
        assert!((u - (1.0 - 0.01f64.powf(1e-3))).abs() < 1e-9);
        assert!(clopper_pearson_upper(5, 100, 0.99) > 0.05);
    }

    #[test]
    fn delta_method() {
        let (m, s) = mean_sd(&[2.0, 4.0]);
        assert_eq!(m, 3.0);
        assert!((s - 2f64.sqrt()).abs() < 1e-12);
        let h = rate_half_width(6, 3.0, 1.0, 100, 0.95);
        assert!((h - 1.959964 * 6.0 / 90.0).abs() < 1e-6);
    }
}
