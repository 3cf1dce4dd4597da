//! Order statistics and least-squares fits used by the experiment summaries.

use serde::{Deserialize, Serialize};

use crate::error::{input, Result};

/// Five-number summary with linearly interpolated quantiles.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Quantiles {
    pub q05: f64,
    pub q25: f64,
    pub q50: f64,
    pub q75: f64,
    pub q95: f64,
}

impl Quantiles {
    pub fn of(values: &[f64]) -> Result<Self> {
        let mut v = values.to_vec();
        if v.is_empty() || v.iter().any(|x| x.is_nan()) {
            return Err(input("quantiles need a non-empty NaN-free sample"));
        }
        v.sort_by(f64::total_cmp);
        Ok(Quantiles {
            q05: sorted_quantile(&v, 0.05),
            q25: sorted_quantile(&v, 0.25),
            q50: sorted_quantile(&v, 0.5),
            q75: sorted_quantile(&v, 0.75),
            q95: sorted_quantile(&v, 0.95),
        })
    }
}

/// Quantile `q` of an ascending slice, interpolating between order statistics.
pub fn sorted_quantile(sorted: &[f64], q: f64) -> f64 {
    let pos = q.clamp(0.0, 1.0) * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (pos - lo as f64) * (sorted[hi] - sorted[lo])
}

pub fn median(values: &[f64]) -> Result<f64> {
    Ok(Quantiles::of(values)?.q50)
}

/// Ordinary least-squares line `y = intercept + slope · x`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LineFit {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
}

pub fn fit_line(x: &[f64], y: &[f64]) -> Result<LineFit> {
    if x.len() != y.len() || x.len() < 2 {
        return Err(input("a line fit needs at least two paired points"));
    }
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    let syy: f64 = y.iter().map(|b| (b - my).powi(2)).sum();
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    if sxx == 0.0 {
        return Err(input("a line fit needs at least two distinct x values"));
    }
    let slope = sxy / sxx;
    let r_squared = if syy == 0.0 { 1.0 } else { sxy * sxy / (sxx * syy) };
    Ok(LineFit {
        slope,
        intercept: my - slope * mx,
        r_squared,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn quantiles_interpolate() {
        let q = Quantiles::of(&[4.0, 1.0, 3.0, 2.0, 5.0]).unwrap();
        assert_eq!(q.q50, 3.0);
        assert_relative_eq!(q.q25, 2.0);
        assert_relative_eq!(q.q05, 1.2);
        assert_relative_eq!(q.q95, 4.8);
        assert_eq!(median(&[7.0]).unwrap(), 7.0);
        assert_eq!(median(&[1.0, 2.0]).unwrap(), 1.5);
        assert!(median(&[]).is_err());
    }

    #[test]
    fn exact_line() {
        let x = [0.0, 1.0, 2.0, 3.0];
        let y: Vec<f64> = x.iter().map(|v| 2.0 - 0.5 * v).collect();
        let f = fit_line(&x, &y).unwrap();
        assert_relative_eq!(f.slope, -0.5, epsilon = 1e-15);
        assert_relative_eq!(f.intercept, 2.0, epsilon = 1e-15);
        assert_relative_eq!(f.r_squared, 1.0, epsilon = 1e-15);
        assert!(fit_line(&[1.0, 1.0], &[0.0, 1.0]).is_err());
    }
}
