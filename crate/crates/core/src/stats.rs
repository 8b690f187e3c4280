//! Small Monte Carlo summaries shared by the experiments and the test suites.

use serde::Serialize;

/// A sample statistic with its standard error.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Estimate {
    pub value: f64,
    pub std_error: f64,
    pub n: usize,
}

impl Estimate {
    /// `|value − target| ≤ k · std_error`.
    pub fn agrees_with(&self, target: f64, k: f64) -> bool {
        (self.value - target).abs() <= k * self.std_error
    }

    /// Difference of two estimates, errors combined in quadrature.
    pub fn minus(&self, other: &Estimate) -> Estimate {
        Estimate {
            value: self.value - other.value,
            std_error: self.std_error.hypot(other.std_error),
            n: self.n.min(other.n),
        }
    }
}

pub fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Unbiased sample variance.
pub fn variance(xs: &[f64]) -> f64 {
    let m = mean(xs);
    xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (xs.len() as f64 - 1.0)
}

pub fn mean_estimate(xs: &[f64]) -> Estimate {
    Estimate {
        value: mean(xs),
        std_error: (variance(xs) / xs.len() as f64).sqrt(),
        n: xs.len(),
    }
}

/// Sample variance with the large-sample standard error
/// `sqrt((m4 − s⁴) / n)`, `m4` the fourth central moment.
pub fn variance_estimate(xs: &[f64]) -> Estimate {
    let n = xs.len() as f64;
    let m = mean(xs);
    let s2 = variance(xs);
    let m4 = xs.iter().map(|x| (x - m).powi(4)).sum::<f64>() / n;
    Estimate {
        value: s2,
        std_error: ((m4 - s2 * s2).max(0.0) / n).sqrt(),
        n: xs.len(),
    }
}

/// Sample covariance of paired observations, with the standard error of
/// the mean of the centred products.
pub fn covariance_estimate(xs: &[f64], ys: &[f64]) -> Estimate {
    let (mx, my) = (mean(xs), mean(ys));
    let products: Vec<f64> = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).collect();
    let mut e = mean_estimate(&products);
    e.value *= products.len() as f64 / (products.len() as f64 - 1.0);
    e
}

/// Least-squares slope of `ys` against `xs`; NaN with fewer than two points.
pub fn least_squares_slope(xs: &[f64], ys: &[f64]) -> f64 {
    if xs.len() < 2 {
        return f64::NAN;
    }
    let (mx, my) = (mean(xs), mean(ys));
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    sxy / sxx
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn basic_moments() {
        let xs = [1.0, 2.0, 3.0, 4.0];
        assert_eq!(mean(&xs), 2.5);
        assert!((variance(&xs) - 5.0 / 3.0).abs() < 1e-15);
        assert!((least_squares_slope(&xs, &[3.0, 5.0, 7.0, 9.0]) - 2.0).abs() < 1e-15);
        assert!(least_squares_slope(&[1.0], &[1.0]).is_nan());
    }
}
