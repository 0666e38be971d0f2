//! Small sample statistics used for Monte-Carlo comparisons.

/// Mean and unbiased variance.
pub fn mean_var(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    if xs.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var)
}

pub fn std_error(xs: &[f64]) -> f64 {
    let (_, var) = mean_var(xs);
    (var / xs.len() as f64).sqrt()
}

/// One-sided 95% normal quantile.
pub const Z95_ONE_SIDED: f64 = 1.6448536269514722;
/// Two-sided 95% normal quantile.
pub const Z95_TWO_SIDED: f64 = 1.959963984540054;

/// Difference of means `a - b` with its standard error (Welch).
pub fn mean_difference(a: &[f64], b: &[f64]) -> (f64, f64) {
    let (ma, va) = mean_var(a);
    let (mb, vb) = mean_var(b);
    let se = (va / a.len() as f64 + vb / b.len() as f64).sqrt();
    (ma - mb, se)
}

/// Outcome of a one-sided test that `a` exceeds `b`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Comparison {
    pub difference: f64,
    pub std_error: f64,
    /// Lower end of the one-sided 95% interval for the difference.
    pub lower: f64,
}

impl Comparison {
    pub fn significantly_positive(&self) -> bool {
        self.lower > 0.0
    }
}

/// Paired or unpaired one-sided comparison `mean(a) - mean(b) > 0`.
pub fn compare_greater(a: &[f64], b: &[f64]) -> Comparison {
    let (difference, std_error) = mean_difference(a, b);
    Comparison {
        difference,
        std_error,
        lower: difference - Z95_ONE_SIDED * std_error,
    }
}

/// Normal-approximation lower confidence bound of a binomial proportion.
pub fn binomial_lower_bound(successes: u64, trials: u64, z: f64) -> f64 {
    if trials == 0 {
        return 0.0;
    }
    let p = successes as f64 / trials as f64;
    (p - z * (p * (1.0 - p) / trials as f64).sqrt()).max(0.0)
}
