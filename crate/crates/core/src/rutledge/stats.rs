//! Correlation statistics used to score well-being models.

use crate::error::{Error, Result};

fn check_pair(x: &[f64], y: &[f64]) -> Result<()> {
    if x.len() != y.len() {
        return Err(Error::InvalidArgument(format!(
            "series lengths differ ({} vs {})",
            x.len(),
            y.len()
        )));
    }
    if x.len() < 2 {
        return Err(Error::InvalidArgument("need at least two points".into()));
    }
    Ok(())
}

fn mean(x: &[f64]) -> f64 {
    x.iter().sum::<f64>() / x.len() as f64
}

/// Sample Pearson correlation.
pub fn pearson_r(x: &[f64], y: &[f64]) -> Result<f64> {
    check_pair(x, y)?;
    let (mx, my) = (mean(x), mean(y));
    let mut sxy = 0.0;
    let mut sxx = 0.0;
    let mut syy = 0.0;
    for (a, b) in x.iter().zip(y) {
        let (dx, dy) = (a - mx, b - my);
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if sxx == 0.0 || syy == 0.0 {
        return Err(Error::UndefinedCorrelation("constant series".into()));
    }
    Ok((sxy / (sxx * syy).sqrt()).clamp(-1.0, 1.0))
}

pub fn r_squared(x: &[f64], y: &[f64]) -> Result<f64> {
    pearson_r(x, y).map(|r| r * r)
}

/// Standardises to zero mean and unit (population) standard deviation.
pub fn z_score(x: &[f64]) -> Result<Vec<f64>> {
    if x.is_empty() {
        return Err(Error::InvalidArgument("empty series".into()));
    }
    let m = mean(x);
    let sd = (x.iter().map(|v| (v - m).powi(2)).sum::<f64>() / x.len() as f64).sqrt();
    if sd == 0.0 {
        return Err(Error::UndefinedCorrelation("constant series has no z-score".into()));
    }
    Ok(x.iter().map(|v| (v - m) / sd).collect())
}

/// `1 − Σ (y_i − x_i)² / Σ (x_i − x̄)²` for data `x` and predictions `y`.
pub fn coefficient_of_determination(data: &[f64], predictions: &[f64]) -> Result<f64> {
    check_pair(data, predictions)?;
    let m = mean(data);
    let total: f64 = data.iter().map(|v| (v - m).powi(2)).sum();
    if total == 0.0 {
        return Err(Error::UndefinedCorrelation("constant data".into()));
    }
    let residual: f64 = data
        .iter()
        .zip(predictions)
        .map(|(x, y)| (y - x).powi(2))
        .sum();
    Ok(1.0 - residual / total)
}

/// Coefficient of determination on z-scored data and predictions.
pub fn big_r_squared(data: &[f64], predictions: &[f64]) -> Result<f64> {
    check_pair(data, predictions)?;
    coefficient_of_determination(&z_score(data)?, &z_score(predictions)?)
}

pub fn median(values: &[f64]) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let mid = sorted.len() / 2;
    Some(if sorted.len().is_multiple_of(2) {
        0.5 * (sorted[mid - 1] + sorted[mid])
    } else {
        sorted[mid]
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn perfect_and_anti_correlation() {
        let x = [1.0, 4.0, -2.0, 3.5];
        assert!((pearson_r(&x, &x).unwrap() - 1.0).abs() < 1e-12);
        assert!((big_r_squared(&x, &x).unwrap() - 1.0).abs() < 1e-12);
        let neg: Vec<f64> = x.iter().map(|v| -v).collect();
        assert!((pearson_r(&x, &neg).unwrap() + 1.0).abs() < 1e-12);
    }

    #[test]
    fn three_point_case() {
        // Σdxdy = 5, Σdx² = 2, Σdy² = 114/9  →  r = 5 / sqrt(228/9)
        let r = pearson_r(&[1.0, 2.0, 3.0], &[2.0, 4.0, 7.0]).unwrap();
        let expected = 5.0 / (228.0f64 / 9.0).sqrt();
        assert!((r - expected).abs() < 1e-12);
        assert!((r - 0.9934).abs() < 1e-4);
        assert!((r_squared(&[1.0, 2.0, 3.0], &[2.0, 4.0, 7.0]).unwrap() - r * r).abs() < 1e-12);
    }

    #[test]
    fn constant_series_is_an_error() {
        assert!(matches!(
            pearson_r(&[1.0, 1.0, 1.0], &[1.0, 2.0, 3.0]),
            Err(Error::UndefinedCorrelation(_))
        ));
        assert!(z_score(&[2.0, 2.0]).is_err());
        assert!(pearson_r(&[1.0], &[1.0]).is_err());
        assert!(pearson_r(&[1.0, 2.0], &[1.0]).is_err());
    }

    #[test]
    fn z_scored_r2_is_two_r_minus_one() {
        let x = [3.0, 1.0, 4.0, 1.0, 5.0, 9.0];
        let y = [2.0, 7.0, 1.0, 8.0, 2.0, 8.0];
        let r = pearson_r(&x, &y).unwrap();
        assert!((big_r_squared(&x, &y).unwrap() - (2.0 * r - 1.0)).abs() < 1e-12);
        let z = z_score(&x).unwrap();
        assert!(z.iter().sum::<f64>().abs() < 1e-12);
        assert!((z.iter().map(|v| v * v).sum::<f64>() / 6.0 - 1.0).abs() < 1e-12);
    }

    #[test]
    fn medians() {
        assert_eq!(median(&[3.0, 1.0, 2.0]), Some(2.0));
        assert_eq!(median(&[4.0, 1.0, 2.0, 3.0]), Some(2.5));
        assert_eq!(median(&[]), None);
    }
}
