//! Statistics used to check simulated returns for stylised facts.

mod acf;
mod normality;

pub use acf::{acf, power_law_fit, PowerLawFit};
pub use normality::{
    normal_scores, shapiro_francia, shapiro_francia_subsampled, strided_subsample,
    NormalityTest, SF_MAX_LEN, SF_MIN_LEN,
};

use crate::error::{Error, Result};
use crate::num::Real;

/// Log returns of a price series at lag `delta`, using overlapping windows.
#[derive(Debug, Clone, PartialEq)]
pub struct ReturnSeries<T> {
    pub values: Vec<T>,
    pub delta: usize,
    pub normalized: bool,
    /// Length of the price series the returns came from.
    pub source_len: usize,
}

impl<T> ReturnSeries<T> {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// `values[i] = ln prices[i + delta] - ln prices[i]`.
pub fn log_returns<T: Real>(prices: &[T], delta: usize) -> Result<ReturnSeries<T>> {
    if delta < 1 || delta >= prices.len() {
        return Err(Error::Precondition(format!(
            "lag {delta} needs 1 <= lag < series length {}",
            prices.len()
        )));
    }
    if let Some(i) = prices.iter().position(|p| !(*p > T::zero()) || !p.is_finite()) {
        return Err(Error::Precondition(format!("price at index {i} is not positive and finite")));
    }
    let logs: Vec<T> = prices.iter().map(|p| p.ln()).collect();
    Ok(ReturnSeries {
        values: lagged_differences(&logs, delta),
        delta,
        normalized: false,
        source_len: prices.len(),
    })
}

fn lagged_differences<T: Real>(levels: &[T], delta: usize) -> Vec<T> {
    levels.iter().zip(&levels[delta..]).map(|(a, b)| *b - *a).collect()
}

/// Returns at lag `delta` built from lag-1 returns by summing overlapping
/// windows, i.e. the lag-`delta` differences of the cumulative log price.
pub fn aggregate_returns<T: Real>(returns: &[T], delta: usize) -> Result<Vec<T>> {
    if delta < 1 || delta > returns.len() {
        return Err(Error::Precondition(format!(
            "lag {delta} needs 1 <= lag <= number of returns {}",
            returns.len()
        )));
    }
    // Prefix sums in f64 regardless of T, to keep long aggregations accurate.
    let mut level = Vec::with_capacity(returns.len() + 1);
    let mut acc = 0.0_f64;
    level.push(acc);
    for r in returns {
        acc += r.as_f64();
        level.push(acc);
    }
    Ok(lagged_differences(&level, delta).into_iter().map(T::lit).collect())
}

/// Sample mean and standard deviation (denominator `n - 1`).
pub fn mean_sd<T: Real>(x: &[T]) -> Result<(T, T)> {
    if x.len() < 2 {
        return Err(Error::Degenerate(format!("need at least 2 values, got {}", x.len())));
    }
    let n = T::from_count(x.len());
    let mean = mean(x);
    let ss = x.iter().map(|&v| (v - mean) * (v - mean)).sum::<T>();
    Ok((mean, (ss / (n - T::one())).sqrt()))
}

/// Mean with one correction pass, exact for a constant series.
pub(crate) fn mean<T: Real>(x: &[T]) -> T {
    let n = T::from_count(x.len());
    let m = x.iter().copied().sum::<T>() / n;
    m + x.iter().map(|&v| v - m).sum::<T>() / n
}

/// Rescales to sample mean 0 and sample standard deviation 1.
pub fn normalize<T: Real>(series: &ReturnSeries<T>) -> Result<ReturnSeries<T>> {
    let (mean, sd) = mean_sd(&series.values)?;
    if !(sd > T::zero()) || !sd.is_finite() {
        return Err(Error::Degenerate("cannot normalize a series with zero variance".into()));
    }
    Ok(ReturnSeries {
        values: series.values.iter().map(|&v| (v - mean) / sd).collect(),
        normalized: true,
        ..series.clone()
    })
}

/// `m4 / m2^2 - 3` with central sample moments (denominator `n`).
pub fn excess_kurtosis<T: Real>(x: &[T]) -> Result<T> {
    if x.len() < 4 {
        return Err(Error::Degenerate(format!("kurtosis needs at least 4 values, got {}", x.len())));
    }
    let n = T::from_count(x.len());
    let mean = mean(x);
    let (m2, m4) = x.iter().fold((T::zero(), T::zero()), |(s2, s4), &v| {
        let d2 = (v - mean) * (v - mean);
        (s2 + d2, s4 + d2 * d2)
    });
    let (m2, m4) = (m2 / n, m4 / n);
    if !(m2 > T::zero()) || !m2.is_finite() {
        return Err(Error::Degenerate("kurtosis of a series with zero variance".into()));
    }
    Ok(m4 / (m2 * m2) - T::lit(3.0))
}

fn check_kurtosis_lags(deltas: &[usize], len: usize) -> Result<()> {
    match deltas.iter().max() {
        None => Err(Error::Precondition("no lags requested".into())),
        Some(&max) if max * 10 >= len => Err(Error::Precondition(format!(
            "largest lag {max} must be below a tenth of the series length {len}"
        ))),
        Some(_) => Ok(()),
    }
}

/// Excess kurtosis of the lag-`delta` log returns for each requested lag.
pub fn kurtosis_by_delta<T: Real>(prices: &[T], deltas: &[usize]) -> Result<Vec<(usize, T)>> {
    check_kurtosis_lags(deltas, prices.len())?;
    deltas
        .iter()
        .map(|&delta| Ok((delta, excess_kurtosis(&log_returns(prices, delta)?.values)?)))
        .collect()
}

/// [`kurtosis_by_delta`] for data that is already a lag-1 return series.
pub fn kurtosis_by_delta_from_returns<T: Real>(
    returns: &[T],
    deltas: &[usize],
) -> Result<Vec<(usize, T)>> {
    check_kurtosis_lags(deltas, returns.len() + 1)?;
    deltas
        .iter()
        .map(|&delta| Ok((delta, excess_kurtosis(&aggregate_returns(returns, delta)?)?)))
        .collect()
}

/// One histogram bin: its center and the estimated probability density.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DensityBin<T> {
    pub center: T,
    pub density: T,
}

/// Equal-width density histogram over `[min, max]`; the top edge belongs to
/// the last bin. Densities integrate to one over the binned range.
pub fn histogram_density<T: Real>(x: &[T], bins: usize) -> Result<Vec<DensityBin<T>>> {
    if bins == 0 || x.len() < bins {
        return Err(Error::Precondition(format!(
            "histogram needs 1 <= bins <= data length, got {bins} bins for {} values",
            x.len()
        )));
    }
    if x.iter().any(|v| !v.is_finite()) {
        return Err(Error::Degenerate("histogram input contains non-finite values".into()));
    }
    let lo = x.iter().copied().fold(T::infinity(), T::min);
    let hi = x.iter().copied().fold(T::neg_infinity(), T::max);
    if !(hi > lo) {
        return Err(Error::Degenerate("histogram input has an empty range".into()));
    }
    let width = (hi - lo) / T::from_count(bins);
    let mut counts = vec![0usize; bins];
    for &v in x {
        let idx = ((v - lo) / width).floor().to_usize().unwrap_or(bins - 1);
        counts[idx.min(bins - 1)] += 1;
    }
    let norm = T::from_count(x.len()) * width;
    Ok(counts
        .iter()
        .enumerate()
        .map(|(i, &c)| DensityBin {
            center: lo + width * (T::from_count(i) + T::lit(0.5)),
            density: T::from_count(c) / norm,
        })
        .collect())
}

/// Results of the requested analyses on one return series. Entries are
/// `None` when the analysis was not requested or failed.
#[derive(Debug, Clone, PartialEq)]
pub struct StatsReport<T> {
    pub excess_kurtosis: Option<T>,
    pub sf_statistic: Option<T>,
    pub sf_p_value: Option<T>,
    pub acf_signed: Option<Vec<T>>,
    pub acf_abs: Option<Vec<T>>,
    pub powerlaw: Option<PowerLawFit<T>>,
    pub kurtosis_by_delta: Option<Vec<(usize, T)>>,
}

impl<T> Default for StatsReport<T> {
    fn default() -> Self {
        Self {
            excess_kurtosis: None,
            sf_statistic: None,
            sf_p_value: None,
            acf_signed: None,
            acf_abs: None,
            powerlaw: None,
            kurtosis_by_delta: None,
        }
    }
}
