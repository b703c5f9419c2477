use serde::Serialize;

use crate::error::{LabError, Result};

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct DecayFit {
    pub exponent: f64,
    pub intercept: f64,
    pub r_squared: f64,
    pub window: (f64, f64),
}

pub const MIN_DECAY_SAMPLES: usize = 5;

/// Least-squares line through `(ln t, ln value)`.
pub fn decay_fit(samples: &[(f64, f64)]) -> Result<DecayFit> {
    if samples.len() < MIN_DECAY_SAMPLES {
        return Err(LabError::InvalidArgument(format!(
            "decay fit needs at least {MIN_DECAY_SAMPLES} samples, got {}",
            samples.len()
        )));
    }
    log_log_fit(samples)
}

/// Slope/intercept/R^2 of `ln y` against `ln x` (at least two points).
pub fn log_log_fit(samples: &[(f64, f64)]) -> Result<DecayFit> {
    if samples.len() < 2 {
        return Err(LabError::InvalidArgument("fit needs two samples".into()));
    }
    if let Some(&(t, v)) = samples.iter().find(|(t, v)| !(*t > 0.0 && *v > 0.0 && t.is_finite() && v.is_finite())) {
        return Err(LabError::InvalidArgument(format!("log fit needs positive samples, got ({t}, {v})")));
    }
    let pts: Vec<(f64, f64)> = samples.iter().map(|&(t, v)| (t.ln(), v.ln())).collect();
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let syy: f64 = pts.iter().map(|p| (p.1 - my).powi(2)).sum();
    if sxx == 0.0 {
        return Err(LabError::InvalidArgument("fit abscissae are all equal".into()));
    }
    let slope = sxy / sxx;
    let r_squared = if syy == 0.0 { 1.0 } else { sxy * sxy / (sxx * syy) };
    let lo = samples.iter().map(|s| s.0).fold(f64::INFINITY, f64::min);
    let hi = samples.iter().map(|s| s.0).fold(f64::NEG_INFINITY, f64::max);
    Ok(DecayFit { exponent: slope, intercept: my - slope * mx, r_squared, window: (lo, hi) })
}

/// `max / min` of positive values; `inf` if any is zero.
pub fn spread_ratio(values: &[f64]) -> f64 {
    let hi = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let lo = values.iter().cloned().fold(f64::INFINITY, f64::min);
    if lo > 0.0 {
        hi / lo
    } else {
        f64::INFINITY
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_power_law() {
        let s: Vec<(f64, f64)> = (0..7).map(|k| 2f64.powi(k)).map(|t| (t, 3.0 * t.powf(-0.5))).collect();
        let f = decay_fit(&s).unwrap();
        assert!((f.exponent + 0.5).abs() < 1e-12);
        assert!((f.intercept - 3f64.ln()).abs() < 1e-12);
        assert!((f.r_squared - 1.0).abs() < 1e-12);
        assert_eq!(f.window, (1.0, 64.0));
    }

    #[test]
    fn rejects_short_or_nonpositive() {
        let s: Vec<(f64, f64)> = (1..5).map(|k| (k as f64, 1.0)).collect();
        assert!(decay_fit(&s).is_err());
        let mut s: Vec<(f64, f64)> = (1..7).map(|k| (k as f64, 1.0)).collect();
        s[2].1 = 0.0;
        assert!(decay_fit(&s).is_err());
    }
}
