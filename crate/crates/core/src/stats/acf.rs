use crate::error::{Error, Result};
use crate::num::Real;

/// Sample autocorrelation at lags `0..=max_lag` using the biased
/// (length-normalised) covariance estimator, so `|acf[k]| <= 1`.
pub fn acf<T: Real>(x: &[T], max_lag: usize) -> Result<Vec<T>> {
    let n = x.len();
    if 2 * max_lag >= n {
        return Err(Error::Precondition(format!(
            "max lag {max_lag} must be below half the series length {n}"
        )));
    }
    if x.iter().any(|v| !v.is_finite()) {
        return Err(Error::Degenerate("ACF input contains non-finite values".into()));
    }
    let x: Vec<f64> = x.iter().map(|v| v.as_f64()).collect();
    let mean = super::mean(&x);
    let centered: Vec<f64> = x.iter().map(|v| v - mean).collect();
    let var: f64 = centered.iter().map(|c| c * c).sum();
    if !(var > 0.0) {
        return Err(Error::Degenerate("ACF of a series with zero variance".into()));
    }
    Ok((0..=max_lag)
        .map(|k| {
            let cov: f64 = centered.iter().zip(&centered[k..]).map(|(a, b)| a * b).sum();
            if k == 0 {
                T::one()
            } else {
                T::lit(cov / var)
            }
        })
        .collect())
}

/// Least-squares line through `(ln k, ln acf[k])`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PowerLawFit<T> {
    /// Slope of the log-log line; negative for a decaying ACF.
    pub exponent: T,
    /// `exp(intercept)`, the fitted value at lag 1.
    pub prefactor: T,
    /// Coefficient of determination of the log-log fit.
    pub r2: T,
    /// First lag used.
    pub lag_lo: usize,
    /// Last lag used; below the requested upper lag when the ACF reached
    /// zero inside the range.
    pub lag_hi: usize,
}

/// Fits `acf[k] ~ c k^exponent` over lags `lag_lo..=lag_hi`.
///
/// The fit stops at the first lag whose ACF is not positive; at least two
/// usable lags are required.
pub fn power_law_fit<T: Real>(values: &[T], lag_lo: usize, lag_hi: usize) -> Result<PowerLawFit<T>> {
    if lag_lo < 1 || lag_lo > lag_hi || lag_lo >= values.len() {
        return Err(Error::Precondition(format!(
            "power-law lags [{lag_lo}, {lag_hi}] need 1 <= lo <= hi with lo inside {} ACF values",
            values.len()
        )));
    }
    let hi = lag_hi.min(values.len() - 1);
    let usable = (lag_lo..=hi)
        .take_while(|&k| values[k] > T::zero() && values[k].is_finite())
        .count();
    if usable < 2 {
        return Err(Error::Degenerate(format!(
            "ACF has fewer than two positive values from lag {lag_lo}"
        )));
    }
    let hi = lag_lo + usable - 1;

    let pts: Vec<(f64, f64)> =
        (lag_lo..=hi).map(|k| ((k as f64).ln(), values[k].as_f64().ln())).collect();
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let (mut sxx, mut sxy, mut syy) = (0.0, 0.0, 0.0);
    for &(x, y) in &pts {
        sxx += (x - mx) * (x - mx);
        sxy += (x - mx) * (y - my);
        syy += (y - my) * (y - my);
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ss_res: f64 = pts.iter().map(|&(x, y)| (y - intercept - slope * x).powi(2)).sum();
    let r2 = if syy > 0.0 { 1.0 - ss_res / syy } else { 1.0 };

    Ok(PowerLawFit {
        exponent: T::lit(slope),
        prefactor: T::lit(intercept.exp()),
        r2: T::lit(r2),
        lag_lo,
        lag_hi: hi,
    })
}
