//! Monte Carlo summary statistics.

/// Mean with a standard error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate {
    pub mean: f64,
    pub stderr: f64,
}

pub fn mean(x: &[f64]) -> f64 {
    x.iter().sum::<f64>() / x.len() as f64
}

/// Unbiased sample variance.
pub fn variance(x: &[f64]) -> f64 {
    let m = mean(x);
    x.iter().map(|v| (v - m).powi(2)).sum::<f64>() / (x.len() as f64 - 1.0)
}

pub fn covariance(x: &[f64], y: &[f64]) -> f64 {
    let (mx, my) = (mean(x), mean(y));
    x.iter()
        .zip(y)
        .map(|(a, b)| (a - mx) * (b - my))
        .sum::<f64>()
        / (x.len() as f64 - 1.0)
}

pub fn correlation(x: &[f64], y: &[f64]) -> f64 {
    covariance(x, y) / (variance(x) * variance(y)).sqrt()
}

/// Mean and plain i.i.d. standard error.
pub fn iid_estimate(x: &[f64]) -> Estimate {
    Estimate {
        mean: mean(x),
        stderr: (variance(x) / x.len() as f64).sqrt(),
    }
}

/// Integrated autocorrelation time by Geyer's initial positive sequence.
pub fn integrated_autocorrelation(x: &[f64]) -> f64 {
    let n = x.len();
    if n < 4 {
        return 1.0;
    }
    let m = mean(x);
    let c0 = x.iter().map(|v| (v - m).powi(2)).sum::<f64>() / n as f64;
    if c0 == 0.0 {
        return 1.0;
    }
    let acf = |lag: usize| -> f64 {
        (0..n - lag)
            .map(|i| (x[i] - m) * (x[i + lag] - m))
            .sum::<f64>()
            / (n as f64 * c0)
    };
    let mut tau = 1.0;
    let mut lag = 1;
    while lag + 1 < n {
        let pair = acf(lag) + acf(lag + 1);
        if pair <= 0.0 {
            break;
        }
        tau += 2.0 * pair;
        lag += 2;
    }
    tau
}

/// Mean and standard error from batch means over chains: each chain is cut
/// into consecutive blocks of `max(20, ⌈2τ⌉)` values (shrunk so every chain
/// yields at least two blocks) and the block means are treated as i.i.d.
pub fn batch_means_estimate(chains: &[Vec<f64>]) -> Estimate {
    let all: Vec<f64> = chains.iter().flatten().copied().collect();
    let tau = chains
        .iter()
        .filter(|c| c.len() >= 4)
        .map(|c| integrated_autocorrelation(c))
        .fold(1.0, f64::max);
    let shortest = chains.iter().map(Vec::len).min().unwrap_or(0);
    let block = (2.0 * tau).ceil().max(20.0) as usize;
    let block = block.min((shortest / 2).max(1));
    let mut batch = Vec::new();
    for c in chains {
        for chunk in c.chunks_exact(block) {
            batch.push(mean(chunk));
        }
    }
    if batch.len() < 2 {
        return iid_estimate(&all);
    }
    let se = (variance(&batch) / batch.len() as f64).sqrt();
    Estimate {
        mean: mean(&all),
        stderr: se,
    }
}

/// Standard error of an i.i.d. sample variance, `√((m4 - s⁴)/n)`.
pub fn variance_stderr(x: &[f64]) -> f64 {
    let m = mean(x);
    let n = x.len() as f64;
    let m2 = x.iter().map(|v| (v - m).powi(2)).sum::<f64>() / n;
    let m4 = x.iter().map(|v| (v - m).powi(4)).sum::<f64>() / n;
    ((m4 - m2 * m2).max(0.0) / n).sqrt()
}

/// Sample skewness and its z-score under normality (`se = √(6/n)`).
pub fn skewness_z(x: &[f64]) -> (f64, f64) {
    let n = x.len() as f64;
    let m = mean(x);
    let m2 = x.iter().map(|v| (v - m).powi(2)).sum::<f64>() / n;
    let m3 = x.iter().map(|v| (v - m).powi(3)).sum::<f64>() / n;
    let g1 = m3 / m2.powf(1.5);
    (g1, g1 / (6.0 / n).sqrt())
}

/// Excess kurtosis and its z-score under normality (`se = √(24/n)`).
pub fn kurtosis_z(x: &[f64]) -> (f64, f64) {
    let n = x.len() as f64;
    let m = mean(x);
    let m2 = x.iter().map(|v| (v - m).powi(2)).sum::<f64>() / n;
    let m4 = x.iter().map(|v| (v - m).powi(4)).sum::<f64>() / n;
    let g2 = m4 / (m2 * m2) - 3.0;
    (g2, g2 / (24.0 / n).sqrt())
}

/// Empirical `q`-quantile (linear interpolation between order statistics).
pub fn quantile(x: &[f64], q: f64) -> f64 {
    let mut s = x.to_vec();
    s.sort_by(f64::total_cmp);
    let pos = q.clamp(0.0, 1.0) * (s.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    s[lo] + (pos - lo as f64) * (s[hi] - s[lo])
}

/// Wilson score interval for a binomial proportion at `z` standard errors.
pub fn wilson_interval(successes: usize, n: usize, z: f64) -> (f64, f64) {
    let nf = n as f64;
    let p = successes as f64 / nf;
    let z2 = z * z;
    let denom = 1.0 + z2 / nf;
    let center = (p + z2 / (2.0 * nf)) / denom;
    let half = z * (p * (1.0 - p) / nf + z2 / (4.0 * nf * nf)).sqrt() / denom;
    ((center - half).max(0.0), (center + half).min(1.0))
}

/// Two-sample Kolmogorov–Smirnov statistic.
pub fn ks_statistic(a: &[f64], b: &[f64]) -> f64 {
    let mut x = a.to_vec();
    let mut y = b.to_vec();
    x.sort_by(f64::total_cmp);
    y.sort_by(f64::total_cmp);
    let (mut i, mut j, mut d) = (0usize, 0usize, 0.0f64);
    while i < x.len() && j < y.len() {
        let v = x[i].min(y[j]);
        while i < x.len() && x[i] <= v {
            i += 1;
        }
        while j < y.len() && y[j] <= v {
            j += 1;
        }
        d = d.max((i as f64 / x.len() as f64 - j as f64 / y.len() as f64).abs());
    }
    d
}

/// Asymptotic 1% critical value of the two-sample KS statistic.
pub fn ks_critical_1pct(n: usize, m: usize) -> f64 {
    1.628 * ((n + m) as f64 / (n * m) as f64).sqrt()
}

/// Least-squares slope and intercept of `y` on `x`.
pub fn linear_fit(x: &[f64], y: &[f64]) -> (f64, f64) {
    let (mx, my) = (mean(x), mean(y));
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    let slope = sxy / sxx;
    (slope, my - slope * mx)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn basic_moments() {
        let x = [1.0, 2.0, 3.0, 4.0];
        assert_eq!(mean(&x), 2.5);
        assert_relative_eq!(variance(&x), 5.0 / 3.0);
        assert_relative_eq!(correlation(&x, &[2.0, 4.0, 6.0, 8.0]), 1.0);
        assert_eq!(quantile(&x, 0.5), 2.5);
        assert_eq!(quantile(&x, 1.0), 4.0);
    }

    #[test]
    fn wilson_contains_estimate() {
        let (lo, hi) = wilson_interval(30, 100, 1.96);
        assert!(lo < 0.3 && hi > 0.3);
        let (lo, hi) = wilson_interval(0, 100, 1.96);
        assert_eq!(lo, 0.0);
        assert!(hi > 0.0 && hi < 0.05);
    }

    #[test]
    fn ks_identical_and_disjoint() {
        let a: Vec<f64> = (0..100).map(|i| i as f64).collect();
        assert_eq!(ks_statistic(&a, &a), 0.0);
        let b: Vec<f64> = (0..100).map(|i| 1000.0 + i as f64).collect();
        assert_eq!(ks_statistic(&a, &b), 1.0);
    }

    #[test]
    fn autocorrelation_of_ar1() {
        // x_t = ρ x_{t-1} + ε: τ = (1+ρ)/(1-ρ) = 3 for ρ = 0.5.
        let mut x = vec![0.0; 200_000];
        let mut s: u64 = 12345;
        let mut unif = || {
            s ^= s << 13;
            s ^= s >> 7;
            s ^= s << 17;
            (s >> 11) as f64 / (1u64 << 53) as f64 - 0.5
        };
        for t in 1..x.len() {
            x[t] = 0.5 * x[t - 1] + unif();
        }
        let tau = integrated_autocorrelation(&x);
        assert!((tau - 3.0).abs() < 0.3, "{tau}");
        let iid = iid_estimate(&x);
        let bm = batch_means_estimate(&[x.clone()]);
        assert!(bm.stderr > 1.4 * iid.stderr);
    }

    #[test]
    fn line_fit() {
        let x = [0.0, 1.0, 2.0];
        let (s, c) = linear_fit(&x, &[1.0, 3.0, 5.0]);
        assert_relative_eq!(s, 2.0);
        assert_relative_eq!(c, 1.0);
    }
}
