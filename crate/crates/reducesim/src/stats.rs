//! Goodness-of-fit helpers for Monte Carlo output.

/// One-sample Kolmogorov-Smirnov statistic `D_n = sup |F_n - F|` of
/// `samples` against the model CDF.
pub fn ks_statistic(samples: &[f64], cdf: impl Fn(f64) -> f64) -> f64 {
    assert!(!samples.is_empty(), "KS statistic needs samples");
    let mut xs = samples.to_vec();
    xs.sort_unstable_by(|a, b| a.partial_cmp(b).unwrap());
    let n = xs.len() as f64;
    let mut sup = 0.0_f64;
    for (i, &x) in xs.iter().enumerate() {
        let f = cdf(x);
        sup = sup.max((i as f64 / n - f).abs());
        sup = sup.max(((i as f64 + 1.0) / n - f).abs());
    }
    sup
}

/// Asymptotic critical value for `D_n` at significance `alpha`:
/// `sqrt(-ln(alpha / 2) / 2) / sqrt(n)`. At `alpha = 0.01` the scaled
/// constant is about 1.628.
pub fn ks_critical_value(n: usize, alpha: f64) -> f64 {
    assert!(n > 0 && alpha > 0.0 && alpha < 1.0);
    libm::sqrt(-0.5 * libm::log(alpha / 2.0)) / libm::sqrt(n as f64)
}

/// Outcome of a uniformity test on `[lo, hi]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KsOutcome {
    pub statistic: f64,
    pub critical: f64,
    pub pass: bool,
}

/// Test `samples` against the uniform distribution on `[lo, hi]`.
pub fn ks_uniform_test(samples: &[f64], lo: f64, hi: f64, alpha: f64) -> KsOutcome {
    let span = hi - lo;
    let statistic = ks_statistic(samples, |x| ((x - lo) / span).clamp(0.0, 1.0));
    let critical = ks_critical_value(samples.len(), alpha);
    KsOutcome {
        statistic,
        critical,
        pass: statistic <= critical,
    }
}
