//! Small descriptive statistics used when aggregating repetitions.

/// Linear-interpolation quantile (the "type 7" rule) of unsorted data.
/// Returns NaN for empty input.
pub fn quantile(values: &[f64], q: f64) -> f64 {
    if values.is_empty() {
        return f64::NAN;
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let pos = q.clamp(0.0, 1.0) * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (sorted[hi] - sorted[lo]) * (pos - lo as f64)
}

pub fn median(values: &[f64]) -> f64 {
    quantile(values, 0.5)
}

pub fn mean(values: &[f64]) -> f64 {
    values.iter().sum::<f64>() / values.len() as f64
}

/// Sample standard deviation (n − 1 denominator); 0 for fewer than two values.
pub fn std_dev(values: &[f64]) -> f64 {
    if values.len() < 2 {
        return 0.0;
    }
    let m = mean(values);
    (values.iter().map(|v| (v - m).powi(2)).sum::<f64>() / (values.len() - 1) as f64).sqrt()
}

/// One-sided sign test for `H1: a < b` over paired observations. Ties are
/// dropped. Returns `P(X ≥ wins)` with `X ~ Binomial(n_untied, 1/2)`.
pub fn sign_test_less(a: &[f64], b: &[f64]) -> SignTest {
    let mut wins = 0usize;
    let mut untied = 0usize;
    for (x, y) in a.iter().zip(b) {
        if x < y {
            wins += 1;
            untied += 1;
        } else if x > y {
            untied += 1;
        }
    }
    SignTest {
        wins,
        untied,
        p_value: binomial_upper_tail(untied, wins),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct SignTest {
    pub wins: usize,
    pub untied: usize,
    pub p_value: f64,
}

/// `P(X ≥ k)` for `X ~ Binomial(n, 1/2)`.
fn binomial_upper_tail(n: usize, k: usize) -> f64 {
    if k == 0 {
        return 1.0;
    }
    // log C(n, i) built incrementally
    let mut log_c = 0.0f64;
    let mut total = 0.0;
    let log_half_n = -(n as f64) * std::f64::consts::LN_2;
    for i in 0..=n {
        if i > 0 {
            log_c += ((n - i + 1) as f64).ln() - (i as f64).ln();
        }
        if i >= k {
            total += (log_c + log_half_n).exp();
        }
    }
    total.min(1.0)
}
