//! Small statistics helpers: least squares, tail index, empirical distances.

use crate::error::{Error, Result};

/// Ordinary least squares `y ~ a + b x`; returns `(a, b)`.
pub fn least_squares(x: &[f64], y: &[f64]) -> Result<(f64, f64)> {
    if x.len() != y.len() || x.len() < 2 {
        return Err(Error::config("least squares needs two or more paired samples"));
    }
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxx: f64 = x.iter().map(|v| (v - mx).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::config("least squares abscissae are all equal"));
    }
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let b = sxy / sxx;
    Ok((my - b * mx, b))
}

pub fn mean(x: &[f64]) -> f64 {
    x.iter().sum::<f64>() / x.len() as f64
}

/// Sample standard deviation (n - 1 denominator).
pub fn std_dev(x: &[f64]) -> f64 {
    let m = mean(x);
    (x.iter().map(|v| (v - m).powi(2)).sum::<f64>() / (x.len() as f64 - 1.0)).sqrt()
}

/// Hill estimate of the tail index `alpha` in `P[X > x] ~ x^-alpha`, from the
/// `k` largest positive samples.
pub fn hill_tail_index(samples: &[f64], k: usize) -> Result<f64> {
    let mut pos: Vec<f64> = samples.iter().copied().filter(|v| *v > 0.0).collect();
    if k < 2 || k >= pos.len() {
        return Err(Error::config(format!("Hill estimator needs 2 <= k < {} positive samples", pos.len())));
    }
    pos.sort_by(|a, b| b.total_cmp(a));
    let threshold = pos[k].ln();
    let s: f64 = pos[..k].iter().map(|v| v.ln() - threshold).sum();
    Ok(k as f64 / s)
}

/// Kolmogorov–Smirnov distance between a sample and a continuous CDF.
pub fn ks_distance(samples: &[f64], cdf: impl Fn(f64) -> f64) -> f64 {
    let mut s = samples.to_vec();
    s.sort_by(f64::total_cmp);
    let n = s.len() as f64;
    s.iter().enumerate().fold(0.0f64, |d, (i, &x)| {
        let f = cdf(x);
        d.max((f - i as f64 / n).abs()).max(((i + 1) as f64 / n - f).abs())
    })
}

/// Running means at the given prefix lengths.
pub fn prefix_means(x: &[f64], lengths: &[usize]) -> Vec<f64> {
    lengths.iter().map(|&n| mean(&x[..n.min(x.len())])).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, Pareto};

    #[test]
    fn exact_line() {
        let x = [1.0, 2.0, 4.0];
        let y: Vec<f64> = x.iter().map(|v| 3.0 - 0.5 * v).collect();
        let (a, b) = least_squares(&x, &y).unwrap();
        assert!((a - 3.0).abs() < 1e-12 && (b + 0.5).abs() < 1e-12);
        assert!(least_squares(&[1.0, 1.0], &[0.0, 1.0]).is_err());
    }

    #[test]
    fn hill_recovers_pareto_index() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let d = Pareto::new(1.0, 0.5).unwrap();
        let x: Vec<f64> = (0..20_000).map(|_| d.sample(&mut rng)).collect();
        let a = hill_tail_index(&x, 1000).unwrap();
        assert!((a - 0.5).abs() < 0.05, "{a}");
    }

    #[test]
    fn ks_of_uniform() {
        let x: Vec<f64> = (0..1000).map(|i| (i as f64 + 0.5) / 1000.0).collect();
        assert!(ks_distance(&x, |v| v) <= 0.0005 + 1e-12);
        assert!(ks_distance(&x, |v| v * v) > 0.2);
    }
}
