//! Small statistics helpers used by the Monte Carlo verification layer.

use crate::numerics::NeumaierSum;

/// Two-sided Kolmogorov-Smirnov statistic of a sample against a reference
/// CDF. `samples` need not be sorted.
pub fn ks_statistic<F: Fn(f64) -> f64>(samples: &[f64], cdf: F) -> f64 {
    let mut xs = samples.to_vec();
    xs.sort_unstable_by(|a, b| a.partial_cmp(b).expect("non-NaN samples"));
    let n = xs.len() as f64;
    let mut sup = 0.0f64;
    for (i, x) in xs.iter().enumerate() {
        let f = cdf(*x);
        let hi = ((i + 1) as f64 / n - f).abs();
        let lo = (i as f64 / n - f).abs();
        sup = sup.max(hi).max(lo);
    }
    sup
}

/// 1% critical value of the one-sample KS statistic.
pub fn ks_critical_1pct(n: usize) -> f64 {
    1.63 / (n as f64).sqrt()
}

/// Compensated sample mean and standard error.
pub fn mean_and_stderr(xs: &[f64]) -> (f64, f64) {
    let n = xs.len();
    assert!(n >= 2, "need at least two observations");
    let mut acc = NeumaierSum::new();
    for &x in xs {
        acc.add(x);
    }
    let mean = acc.total() / n as f64;
    let mut sq = NeumaierSum::new();
    for &x in xs {
        let d = x - mean;
        sq.add(d * d);
    }
    let var = sq.total() / (n as f64 - 1.0);
    (mean, (var / n as f64).sqrt())
}

/// Mean and standard error of a Bernoulli proportion given `hits` out of
/// `n` trials.
pub fn proportion_and_stderr(hits: usize, n: usize) -> (f64, f64) {
    assert!(n >= 1);
    let p = hits as f64 / n as f64;
    (p, (p * (1.0 - p) / n as f64).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ks_of_exact_uniform_grid_is_half_spacing() {
        // Points at (i + 0.5)/n against U(0,1): KS = 1/(2n).
        let n = 100;
        let xs: Vec<f64> = (0..n).map(|i| (i as f64 + 0.5) / n as f64).collect();
        let ks = ks_statistic(&xs, |x| x.clamp(0.0, 1.0));
        assert!((ks - 0.5 / n as f64).abs() < 1e-12);
    }

    #[test]
    fn ks_detects_shifted_distribution() {
        let xs: Vec<f64> = (0..1000).map(|i| (i as f64 + 0.5) / 1000.0 * 0.5).collect();
        let ks = ks_statistic(&xs, |x| x.clamp(0.0, 1.0));
        assert!(ks > 0.4);
    }

    #[test]
    fn mean_and_stderr_basics() {
        let xs = [1.0, 2.0, 3.0, 4.0];
        let (m, se) = mean_and_stderr(&xs);
        assert!((m - 2.5).abs() < 1e-15);
        // sample variance 5/3, stderr sqrt(5/12)
        assert!((se - (5.0f64 / 12.0).sqrt()).abs() < 1e-15);
    }

    #[test]
    fn proportion_stderr() {
        let (p, se) = proportion_and_stderr(25, 100);
        assert_eq!(p, 0.25);
        assert!((se - (0.25f64 * 0.75 / 100.0).sqrt()).abs() < 1e-15);
    }
}
