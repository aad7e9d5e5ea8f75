use crate::error::{Error, Result};

/// Least-squares fit of `ln r_k = intercept + slope k`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RateFit {
    /// `exp(slope)`, capped at 1.
    pub factor: f64,
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
    pub points: usize,
}

impl RateFit {
    /// Decay rate per unit time for samples spaced `h` apart.
    pub fn continuous_rate(&self, h: f64) -> f64 {
        -self.slope / h
    }
}

const MIN_POINTS: usize = 5;

/// Fits a geometric decay to `residuals`, using the prefix before the first value
/// at or below `100 ε`.
pub fn fit_linear_rate(residuals: &[f64]) -> Result<RateFit> {
    let floor = 100.0 * f64::EPSILON;
    let usable: Vec<f64> = residuals
        .iter()
        .copied()
        .take_while(|r| *r > floor && r.is_finite())
        .collect();
    if usable.len() < MIN_POINTS {
        return Err(Error::Diagnostics(format!(
            "need at least {MIN_POINTS} residuals above {floor:e}, have {}",
            usable.len()
        )));
    }
    let n = usable.len() as f64;
    let xs = (0..usable.len()).map(|k| k as f64);
    let ys: Vec<f64> = usable.iter().map(|r| r.ln()).collect();
    let mean_x = (n - 1.0) / 2.0;
    let mean_y = ys.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx) = (0.0, 0.0);
    for (x, y) in xs.zip(&ys) {
        sxy += (x - mean_x) * (y - mean_y);
        sxx += (x - mean_x) * (x - mean_x);
    }
    let slope = sxy / sxx;
    let intercept = mean_y - slope * mean_x;
    let (mut ss_res, mut ss_tot) = (0.0, 0.0);
    for (k, y) in ys.iter().enumerate() {
        let e = y - (intercept + slope * k as f64);
        ss_res += e * e;
        ss_tot += (y - mean_y) * (y - mean_y);
    }
    let r_squared = if ss_tot > 0.0 { 1.0 - ss_res / ss_tot } else { 1.0 };
    Ok(RateFit {
        factor: slope.exp().min(1.0),
        slope,
        intercept,
        r_squared,
        points: usable.len(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn geometric_sequence() {
        let r: Vec<f64> = (0..30).map(|n| 0.5f64.powi(n)).collect();
        let fit = fit_linear_rate(&r).unwrap();
        assert!((fit.factor - 0.5).abs() <= 1e-12);
        assert!((fit.r_squared - 1.0).abs() <= 1e-12);
        assert!((fit.continuous_rate(0.1) - 10.0 * 2f64.ln()).abs() < 1e-9);
    }

    #[test]
    fn truncates_at_floor() {
        let mut r: Vec<f64> = (0..10).map(|n| 0.1f64.powi(n)).collect();
        r.extend([1e-16, 3e-16, 1e-17]);
        let fit = fit_linear_rate(&r).unwrap();
        assert_eq!(fit.points, 10);
        assert!((fit.factor - 0.1).abs() < 1e-12);
    }

    #[test]
    fn growth_is_capped() {
        let r: Vec<f64> = (0..8).map(|n| 2f64.powi(n)).collect();
        let fit = fit_linear_rate(&r).unwrap();
        assert_eq!(fit.factor, 1.0);
        assert!(fit.slope > 0.0);
    }

    #[test]
    fn too_few_points() {
        assert!(fit_linear_rate(&[1.0, 0.5, 0.25, 0.125]).is_err());
        assert!(fit_linear_rate(&[1.0, 0.5, 0.0, 0.1, 0.1, 0.1]).is_err());
    }

    #[test]
    fn constant_sequence() {
        let fit = fit_linear_rate(&[0.3; 6]).unwrap();
        assert!((fit.factor - 1.0).abs() < 1e-12);
    }
}
