//! Small statistical helpers: normal tail probabilities, one-sample
//! Kolmogorov–Smirnov, covariance estimates with standard errors and
//! Gauss–Legendre quadrature.

use statrs::function::erf::erfc;

pub fn normal_cdf(x: f64) -> f64 {
    0.5 * erfc(-x / std::f64::consts::SQRT_2)
}

/// `P(Z > x)` for standard normal `Z`.
pub fn normal_sf(x: f64) -> f64 {
    0.5 * erfc(x / std::f64::consts::SQRT_2)
}

/// Covariance estimate of `(x, y)` and the standard error of that estimate,
/// from the empirical spread of centered products.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CovEstimate {
    pub estimate: f64,
    pub standard_error: f64,
}

impl CovEstimate {
    /// `estimate / standard_error`, or 0 when both sides are degenerate.
    pub fn z_score(&self) -> f64 {
        if self.standard_error > 0.0 {
            self.estimate / self.standard_error
        } else if self.estimate == 0.0 {
            0.0
        } else {
            self.estimate.signum() * f64::INFINITY
        }
    }
}

pub fn covariance_with_se(x: &[f64], y: &[f64]) -> CovEstimate {
    assert_eq!(x.len(), y.len());
    let n = x.len();
    assert!(n >= 2, "covariance needs two observations");
    let nf = n as f64;
    let mx = x.iter().sum::<f64>() / nf;
    let my = y.iter().sum::<f64>() / nf;
    let mut sum = 0.0;
    let mut sum_sq = 0.0;
    for (a, b) in x.iter().zip(y) {
        let p = (a - mx) * (b - my);
        sum += p;
        sum_sq += p * p;
    }
    let mean_p = sum / nf;
    let var_p = ((sum_sq / nf) - mean_p * mean_p).max(0.0) * nf / (nf - 1.0);
    CovEstimate {
        estimate: sum / (nf - 1.0),
        standard_error: (var_p / nf).sqrt(),
    }
}

pub fn mean(x: &[f64]) -> f64 {
    x.iter().sum::<f64>() / x.len() as f64
}

/// Sample covariance matrix (divisor `n − 1`) of row-major `rows × dim` data.
pub fn sample_covariance(data: &[f64], dim: usize) -> Vec<Vec<f64>> {
    let n = data.len() / dim;
    let mut mu = vec![0.0; dim];
    for row in data.chunks_exact(dim) {
        for (m, v) in mu.iter_mut().zip(row) {
            *m += v;
        }
    }
    for m in &mut mu {
        *m /= n as f64;
    }
    let mut c = vec![vec![0.0; dim]; dim];
    for row in data.chunks_exact(dim) {
        for k in 0..dim {
            let a = row[k] - mu[k];
            for l in k..dim {
                c[k][l] += a * (row[l] - mu[l]);
            }
        }
    }
    for k in 0..dim {
        for l in k..dim {
            c[k][l] /= (n - 1) as f64;
            c[l][k] = c[k][l];
        }
    }
    c
}

/// Kolmogorov survival function `Q(λ) = P(K > λ)`.
pub fn kolmogorov_sf(lambda: f64) -> f64 {
    if lambda <= 0.0 {
        return 1.0;
    }
    if lambda < 1.18 {
        let pi2 = std::f64::consts::PI * std::f64::consts::PI;
        let mut s = 0.0;
        for j in 1..=8 {
            let k = (2 * j - 1) as f64;
            s += (-k * k * pi2 / (8.0 * lambda * lambda)).exp();
        }
        (1.0 - (2.0 * std::f64::consts::PI).sqrt() / lambda * s).clamp(0.0, 1.0)
    } else {
        let mut s = 0.0;
        for j in 1..=20 {
            let jf = j as f64;
            let term = (-2.0 * jf * jf * lambda * lambda).exp();
            s += if j % 2 == 1 { term } else { -term };
        }
        (2.0 * s).clamp(0.0, 1.0)
    }
}

/// One-sample KS test against a continuous CDF; returns `(D, p-value)`
/// using Stephens' finite-sample scaling of the Kolmogorov limit.
pub fn ks_test(data: &[f64], cdf: impl Fn(f64) -> f64) -> (f64, f64) {
    let mut x = data.to_vec();
    x.sort_by(f64::total_cmp);
    let n = x.len() as f64;
    let mut d: f64 = 0.0;
    for (i, &v) in x.iter().enumerate() {
        let f = cdf(v);
        d = d.max((i as f64 + 1.0) / n - f).max(f - i as f64 / n);
    }
    let sn = n.sqrt();
    (d, kolmogorov_sf((sn + 0.12 + 0.11 / sn) * d))
}

/// Gauss–Legendre nodes and weights on `[0, 1]`.
pub fn gauss_legendre_unit(n: usize) -> Vec<(f64, f64)> {
    assert!(n >= 1);
    let mut out = Vec::with_capacity(n);
    for i in 1..=n {
        let mut x = (std::f64::consts::PI * (i as f64 - 0.25) / (n as f64 + 0.5)).cos();
        for _ in 0..100 {
            let (p, p_prev) = legendre(n, x);
            let dp = n as f64 * (x * p - p_prev) / (x * x - 1.0);
            let dx = p / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let (p, p_prev) = legendre(n, x);
        let dp = n as f64 * (x * p - p_prev) / (x * x - 1.0);
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        out.push((0.5 * (1.0 - x), 0.5 * w));
    }
    out
}

fn legendre(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    if n == 0 {
        return (1.0, 0.0);
    }
    for j in 2..=n {
        let jf = j as f64;
        let p2 = ((2.0 * jf - 1.0) * x * p1 - (jf - 1.0) * p0) / jf;
        p0 = p1;
        p1 = p2;
    }
    (p1, p0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn normal_tails() {
        assert!((normal_cdf(0.0) - 0.5).abs() < 1e-15);
        let x = normal_cdf(1.959963984540054);
        // statrs erfc is accurate to about 1e-12 here
        assert!((x - 0.975).abs() < 1e-11, "{x}");
        assert!((normal_sf(3.0) - 0.0013498980316301).abs() < 1e-13);
    }

    #[test]
    fn gauss_legendre_integrates_polynomials_exactly() {
        let rule = gauss_legendre_unit(8);
        assert!((rule.iter().map(|(_, w)| w).sum::<f64>() - 1.0).abs() < 1e-14);
        // degree 15 is exact for 8 nodes: ∫₀¹ x^15 = 1/16
        let v: f64 = rule.iter().map(|(x, w)| w * x.powi(15)).sum();
        assert!((v - 1.0 / 16.0).abs() < 1e-14);
        let v: f64 = rule.iter().map(|(x, w)| w * (3.0 * x).exp()).sum();
        assert!((v - ((3.0f64).exp() - 1.0) / 3.0).abs() < 1e-12);
    }

    #[test]
    fn kolmogorov_branches_agree() {
        // Both series are accurate near the switch point.
        let a = kolmogorov_sf(1.17999);
        let b = kolmogorov_sf(1.18001);
        assert!((a - b).abs() < 1e-4);
        assert!((kolmogorov_sf(1.358) - 0.05).abs() < 1e-3);
    }

    #[test]
    fn ks_uniform_grid_has_tiny_distance() {
        let data: Vec<f64> = (0..1000).map(|i| (i as f64 + 0.5) / 1000.0).collect();
        let (d, p) = ks_test(&data, |x| x.clamp(0.0, 1.0));
        assert!(d <= 0.0005 + 1e-12);
        assert!(p > 0.99);
    }

    #[test]
    fn covariance_se_of_constant_is_zero() {
        let c = covariance_with_se(&[1.0, 1.0, 1.0], &[0.0, 1.0, 2.0]);
        assert_eq!(c.estimate, 0.0);
        assert_eq!(c.z_score(), 0.0);
    }
}
