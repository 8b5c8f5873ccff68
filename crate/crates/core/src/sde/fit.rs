use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::fit_line;

/// `gap(t) ≈ M e^{−λ t}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ContractionFit {
    pub m: f64,
    pub lambda: f64,
    pub r_squared: f64,
}

/// Least-squares line through `(t, ln gap)`.
pub fn contraction_fit(series: &[(f64, f64)]) -> Result<ContractionFit> {
    if let Some(&(t, g)) = series.iter().find(|(_, g)| !(*g > 0.0)) {
        return Err(Error::invalid("gap_series", format!("gap {g} at t = {t} is not positive")));
    }
    let logs: Vec<(f64, f64)> = series.iter().map(|&(t, g)| (t, g.ln())).collect();
    contraction_fit_log(&logs)
}

/// As [`contraction_fit`] with the gaps already given as logarithms.
pub fn contraction_fit_log(series: &[(f64, f64)]) -> Result<ContractionFit> {
    if series.len() < 5 {
        return Err(Error::TooFewSamples {
            got: series.len(),
            need: 5,
        });
    }
    if series.iter().any(|(t, l)| !t.is_finite() || !l.is_finite()) {
        return Err(Error::invalid("gap_series", "non-finite entry"));
    }
    let (t, y): (Vec<f64>, Vec<f64>) = series.iter().copied().unzip();
    let fit = fit_line(&t, &y);
    Ok(ContractionFit {
        m: fit.intercept.exp(),
        lambda: -fit.slope,
        r_squared: fit.r_squared,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn exact_exponential() {
        let s: Vec<(f64, f64)> = (0..10).map(|k| {
            let t = 0.1 * k as f64;
            (t, 2.0 * (-3.0 * t).exp())
        }).collect();
        let f = contraction_fit(&s).unwrap();
        assert_relative_eq!(f.m, 2.0, max_relative = 1e-12);
        assert_relative_eq!(f.lambda, 3.0, max_relative = 1e-12);
        assert_relative_eq!(f.r_squared, 1.0, max_relative = 1e-12);
    }

    #[test]
    fn constant_series_has_zero_rate() {
        let s: Vec<(f64, f64)> = (0..6).map(|k| (k as f64, 0.7)).collect();
        let f = contraction_fit(&s).unwrap();
        assert_eq!(f.lambda, 0.0);
        assert_eq!(f.r_squared, 1.0);
    }

    #[test]
    fn rejects_bad_input() {
        let s: Vec<(f64, f64)> = (0..6).map(|k| (k as f64, 1.0 - k as f64 * 0.2)).collect();
        assert!(contraction_fit(&s).is_err());
        assert!(matches!(
            contraction_fit(&[(0.0, 1.0); 4]),
            Err(Error::TooFewSamples { got: 4, need: 5 })
        ));
    }
}
