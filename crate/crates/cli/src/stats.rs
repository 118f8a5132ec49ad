//! Small statistics toolkit for the Monte Carlo reports.

use serde::Serialize;
use statrs::distribution::{ChiSquared, ContinuousCDF};

/// Sample mean and its standard error.
pub fn mean_stderr(xs: &[f64]) -> (f64, f64) {
    let n = xs.len();
    if n == 0 {
        return (f64::NAN, f64::NAN);
    }
    let mean = xs.iter().sum::<f64>() / n as f64;
    if n == 1 {
        return (mean, f64::NAN);
    }
    (mean, (sample_variance(xs, mean) / n as f64).sqrt())
}

/// Unbiased sample variance around a known mean.
pub fn sample_variance(xs: &[f64], mean: f64) -> f64 {
    xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (xs.len() as f64 - 1.0)
}

/// Linearly interpolated quantile of sorted data (Hyndman-Fan type 7).
pub fn quantile(sorted: &[f64], q: f64) -> f64 {
    assert!(!sorted.is_empty());
    let h = (sorted.len() - 1) as f64 * q.clamp(0.0, 1.0);
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

pub fn sorted(xs: &[f64]) -> Vec<f64> {
    let mut v = xs.to_vec();
    v.sort_by(f64::total_cmp);
    v
}

/// Estimate and standard error from `batches` contiguous batches, for
/// statistics (quantiles, distances) without a simple variance formula.
pub fn batch_means(xs: &[f64], batches: usize, stat: impl Fn(&[f64]) -> f64) -> (f64, f64) {
    let full = stat(xs);
    let size = xs.len() / batches;
    if batches < 2 || size == 0 {
        return (full, f64::NAN);
    }
    let values: Vec<f64> = xs.chunks_exact(size).take(batches).map(&stat).collect();
    let (_, se) = mean_stderr(&values);
    (full, se)
}

/// Largest gap between the empirical distribution function of `sorted` and
/// `cdf`, taken over `[lo, hi]`. Both one-sided limits at every sample point
/// in the range are examined, so this is the exact supremum.
pub fn ks_distance_on(sorted: &[f64], cdf: impl Fn(f64) -> f64, lo: f64, hi: f64) -> f64 {
    let n = sorted.len() as f64;
    let below = |x: f64| sorted.partition_point(|&s| s < x) as f64 / n;
    let at_or_below = |x: f64| sorted.partition_point(|&s| s <= x) as f64 / n;
    let mut d = (at_or_below(lo) - cdf(lo)).abs().max((at_or_below(hi) - cdf(hi)).abs());
    for &x in sorted.iter().filter(|&&x| x > lo && x <= hi) {
        let f = cdf(x);
        d = d.max((at_or_below(x) - f).abs()).max((below(x) - f).abs());
    }
    d
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ChiSquare {
    pub statistic: f64,
    pub df: usize,
    pub p_value: f64,
}

/// Pearson goodness of fit of `counts` against equal cell probabilities.
pub fn chi_square_uniform(counts: &[u64]) -> ChiSquare {
    let total: u64 = counts.iter().sum();
    let cells = counts.len();
    if cells < 2 || total == 0 {
        return ChiSquare {
            statistic: 0.0,
            df: 0,
            p_value: 1.0,
        };
    }
    let expected = total as f64 / cells as f64;
    let statistic = counts.iter().map(|&c| (c as f64 - expected).powi(2) / expected).sum();
    let df = cells - 1;
    let p_value = ChiSquared::new(df as f64).expect("positive degrees of freedom").sf(statistic);
    ChiSquare { statistic, df, p_value }
}

/// Ordinary least squares fit of `y = intercept + slope·x`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LineFit {
    pub slope: f64,
    pub intercept: f64,
    pub slope_stderr: f64,
    pub t_statistic: f64,
    pub points: usize,
}

impl LineFit {
    pub fn predict(&self, x: f64) -> f64 {
        self.intercept + self.slope * x
    }
}

pub fn ols(x: &[f64], y: &[f64]) -> Option<LineFit> {
    let n = x.len();
    if n < 2 || n != y.len() {
        return None;
    }
    let nf = n as f64;
    let mx = x.iter().sum::<f64>() / nf;
    let my = y.iter().sum::<f64>() / nf;
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    if sxx == 0.0 {
        return None;
    }
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let (slope_stderr, t_statistic) = if n > 2 {
        let sse: f64 = x.iter().zip(y).map(|(a, b)| (b - intercept - slope * a).powi(2)).sum();
        let se = (sse / (nf - 2.0) / sxx).sqrt();
        (se, slope / se)
    } else {
        (f64::NAN, f64::NAN)
    };
    Some(LineFit {
        slope,
        intercept,
        slope_stderr,
        t_statistic,
        points: n,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn quantiles_interpolate() {
        let s = [1.0, 2.0, 3.0, 4.0];
        assert_eq!(quantile(&s, 0.0), 1.0);
        assert_eq!(quantile(&s, 1.0), 4.0);
        assert!((quantile(&s, 0.5) - 2.5).abs() < 1e-15);
    }

    #[test]
    fn chi_square_reference_values() {
        // perfectly balanced cells give p = 1
        assert_eq!(chi_square_uniform(&[10, 10, 10]).p_value, 1.0);
        // statistic 4 with 1 degree of freedom: p = erfc(√2)
        let c = chi_square_uniform(&[60, 40]);
        assert!((c.statistic - 4.0).abs() < 1e-12);
        assert!((c.p_value - 0.0455002638963584).abs() < 1e-9);
    }

    #[test]
    fn ols_recovers_line() {
        let x: Vec<f64> = (0..10).map(f64::from).collect();
        let y: Vec<f64> = x.iter().map(|v| 3.0 - 2.0 * v + if (*v as i32) % 2 == 0 { 0.01 } else { -0.01 }).collect();
        let fit = ols(&x, &y).unwrap();
        assert!((fit.slope + 2.0).abs() < 1e-2);
        assert!(fit.t_statistic < -100.0);
    }

    #[test]
    fn ks_against_uniform() {
        let s: Vec<f64> = (0..100).map(|i| (i as f64 + 0.5) / 100.0).collect();
        let d = ks_distance_on(&s, |x| x.clamp(0.0, 1.0), 0.0, 1.0);
        assert!((d - 0.005).abs() < 1e-12);
    }

    proptest! {
        #[test]
        fn ks_is_a_distance(mut xs in proptest::collection::vec(0.0f64..1.0, 1..60)) {
            xs.sort_by(f64::total_cmp);
            let d = ks_distance_on(&xs, |x| x.clamp(0.0, 1.0), 0.0, 1.0);
            prop_assert!((0.0..=1.0).contains(&d));
            // never below the gap at any single sample point
            for (i, &x) in xs.iter().enumerate() {
                prop_assert!(d + 1e-12 >= ((i as f64) / xs.len() as f64 - x).abs().min(((i + 1) as f64 / xs.len() as f64 - x).abs()));
            }
        }

        #[test]
        fn stderr_scales_with_samples(xs in proptest::collection::vec(-5.0f64..5.0, 4..40)) {
            let doubled: Vec<f64> = xs.iter().chain(xs.iter()).copied().collect();
            let (_, a) = mean_stderr(&xs);
            let (_, b) = mean_stderr(&doubled);
            prop_assume!(a > 1e-9);
            // duplicated data: same spread, twice the count
            let n = xs.len() as f64;
            let expected = ((n - 1.0) / (2.0 * n - 1.0)).sqrt();
            prop_assert!((b / a - expected).abs() < 1e-9);
        }
    }
}
