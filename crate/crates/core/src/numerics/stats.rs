//! Statistics helpers for trajectory post-processing.

/// Sample mean and (population) variance in one pass (Welford).
pub fn mean_var(xs: &[f64]) -> (f64, f64) {
    let mut mean = 0.0_f64;
    let mut m2 = 0.0_f64;
    for (k, &x) in xs.iter().enumerate() {
        let n = (k + 1) as f64;
        let d = x - mean;
        mean += d / n;
        m2 += d * (x - mean);
    }
    if xs.is_empty() {
        (f64::NAN, f64::NAN)
    } else {
        (mean, m2 / xs.len() as f64)
    }
}

/// Ordinary least-squares line y = slope * x + intercept.
pub fn linear_fit(xs: &[f64], ys: &[f64]) -> (f64, f64) {
    assert_eq!(xs.len(), ys.len());
    assert!(xs.len() >= 2, "linear fit needs at least two points");
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let mut sxx = 0.0;
    let mut sxy = 0.0;
    for (&x, &y) in xs.iter().zip(ys) {
        sxx += (x - mx) * (x - mx);
        sxy += (x - mx) * (y - my);
    }
    let slope = sxy / sxx;
    (slope, my - slope * mx)
}

/// Normalized autocorrelation of `xs` at the given sample lags.
pub fn autocorrelation(xs: &[f64], lags: &[usize]) -> Vec<f64> {
    let (mean, var) = mean_var(xs);
    lags.iter()
        .map(|&lag| {
            if lag >= xs.len() || var == 0.0 {
                return f64::NAN;
            }
            let n = xs.len() - lag;
            let mut acc = 0.0;
            for i in 0..n {
                acc += (xs[i] - mean) * (xs[i + lag] - mean);
            }
            acc / (n as f64 * var)
        })
        .collect()
}

/// Exponential decay rate of an autocorrelation function: fit
/// ln C(tau) = -rate * tau over the lags where C stays positive.
pub fn decay_rate_fit(taus: &[f64], corrs: &[f64]) -> f64 {
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for (&t, &c) in taus.iter().zip(corrs) {
        if c > 0.0 && c.is_finite() {
            xs.push(t);
            ys.push(c.ln());
        } else {
            break;
        }
    }
    if xs.len() < 2 {
        return f64::NAN;
    }
    let (slope, _) = linear_fit(&xs, &ys);
    -slope
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn mean_var_known_values() {
        let (m, v) = mean_var(&[1.0, 2.0, 3.0, 4.0]);
        assert_relative_eq!(m, 2.5);
        assert_relative_eq!(v, 1.25);
    }

    #[test]
    fn fit_recovers_line() {
        let xs: Vec<f64> = (0..50).map(|i| i as f64 * 0.1).collect();
        let ys: Vec<f64> = xs.iter().map(|x| -2.5 * x + 0.7).collect();
        let (slope, intercept) = linear_fit(&xs, &ys);
        assert_relative_eq!(slope, -2.5, max_relative = 1e-12);
        assert_relative_eq!(intercept, 0.7, max_relative = 1e-12);
    }

    #[test]
    fn decay_rate_of_exact_exponential() {
        let taus: Vec<f64> = (0..20).map(|i| i as f64 * 0.05).collect();
        let corrs: Vec<f64> = taus.iter().map(|t| (-3.0 * t).exp()).collect();
        assert_relative_eq!(decay_rate_fit(&taus, &corrs), 3.0, max_relative = 1e-10);
    }
}
