//! Linear fitting helpers: ordinary least squares and the Theil-Sen
//! median-slope estimator used to seed robust line fits.

use super::FitError;

/// Ordinary least squares y = slope x + intercept.
/// Returns (slope, intercept, residuals).
pub fn ols_line(x: &[f64], y: &[f64]) -> Result<(f64, f64, Vec<f64>), FitError> {
    if x.len() != y.len() || x.len() < 2 {
        return Err(FitError::Underdetermined(format!(
            "need >= 2 points for a line, got {}",
            x.len()
        )));
    }
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxx: f64 = x.iter().map(|v| (v - mx) * (v - mx)).sum();
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    if sxx == 0.0 {
        return Err(FitError::DegenerateInput("all abscissae identical".into()));
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let residuals = x.iter().zip(y).map(|(a, b)| b - (slope * a + intercept)).collect();
    Ok((slope, intercept, residuals))
}

/// OLS slope standard error from the residual scatter.
pub fn ols_slope_sigma(x: &[f64], residuals: &[f64]) -> f64 {
    let n = x.len();
    if n <= 2 {
        return 0.0;
    }
    let mx = x.iter().sum::<f64>() / n as f64;
    let sxx: f64 = x.iter().map(|v| (v - mx) * (v - mx)).sum();
    let s2 = residuals.iter().map(|r| r * r).sum::<f64>() / (n - 2) as f64;
    (s2 / sxx).sqrt()
}

/// Theil-Sen estimator: median of pairwise slopes, median intercept.
/// Robust to a large fraction of gross outliers; O(n^2) and deterministic.
pub fn theil_sen(x: &[f64], y: &[f64]) -> Result<(f64, f64), FitError> {
    if x.len() != y.len() || x.len() < 2 {
        return Err(FitError::Underdetermined("need >= 2 points".into()));
    }
    let mut slopes = Vec::with_capacity(x.len() * (x.len() - 1) / 2);
    for i in 0..x.len() {
        for j in (i + 1)..x.len() {
            let dx = x[j] - x[i];
            if dx != 0.0 {
                slopes.push((y[j] - y[i]) / dx);
            }
        }
    }
    if slopes.is_empty() {
        return Err(FitError::DegenerateInput("all abscissae identical".into()));
    }
    let slope = median_inplace(&mut slopes);
    let mut intercepts: Vec<f64> = x.iter().zip(y).map(|(a, b)| b - slope * a).collect();
    let intercept = median_inplace(&mut intercepts);
    Ok((slope, intercept))
}

fn median_inplace(v: &mut [f64]) -> f64 {
    v.sort_by(|a, b| a.partial_cmp(b).unwrap_or(std::cmp::Ordering::Equal));
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn ols_exact_line() {
        let x = [0.0, 1.0, 2.0, 3.0];
        let y: Vec<f64> = x.iter().map(|v| 2.5 * v - 0.7).collect();
        let (s, i, r) = ols_line(&x, &y).unwrap();
        assert_abs_diff_eq!(s, 2.5, epsilon = 1e-14);
        assert_abs_diff_eq!(i, -0.7, epsilon = 1e-14);
        assert!(r.iter().all(|v| v.abs() < 1e-14));
    }

    #[test]
    fn theil_sen_ignores_gross_outliers() {
        let x: Vec<f64> = (0..20).map(|i| i as f64).collect();
        let mut y: Vec<f64> = x.iter().map(|v| 0.3 * v + 1.0).collect();
        y[3] = 100.0;
        y[11] = -50.0;
        let (s, i) = theil_sen(&x, &y).unwrap();
        assert_abs_diff_eq!(s, 0.3, epsilon = 1e-6);
        assert_abs_diff_eq!(i, 1.0, epsilon = 1e-6);
    }

    #[test]
    fn degenerate_abscissae_rejected() {
        assert!(ols_line(&[1.0, 1.0, 1.0], &[1.0, 2.0, 3.0]).is_err());
    }
}
