//! Shapiro-Francia test: squared correlation between the ordered sample and
//! expected normal order statistics, with Royston's normal approximation for
//! `ln(1 - W')` giving the p-value.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use statrs::distribution::{ContinuousCDF, Normal};

use crate::error::{Error, Result};
use crate::num::Real;

pub const SF_MIN_LEN: usize = 5;
pub const SF_MAX_LEN: usize = 5000;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NormalityTest<T> {
    /// `W'` in `(0, 1]`; small values indicate non-normality.
    pub statistic: T,
    /// Upper-tail probability of the transformed statistic.
    pub p_value: T,
    pub n: usize,
}

fn std_normal() -> Normal {
    Normal::new(0.0, 1.0).expect("unit normal is valid")
}

/// Blom-type normal scores `Phi^{-1}((i - 3/8) / (n + 1/4))`, `i = 1..=n`.
pub fn normal_scores(n: usize) -> Vec<f64> {
    let dist = std_normal();
    let denom = n as f64 + 0.25;
    (1..=n).map(|i| dist.inverse_cdf((i as f64 - 0.375) / denom)).collect()
}

pub fn shapiro_francia<T: Real>(x: &[T]) -> Result<NormalityTest<T>> {
    let n = x.len();
    if !(SF_MIN_LEN..=SF_MAX_LEN).contains(&n) {
        return Err(Error::SampleSize { given: n, min: SF_MIN_LEN, max: SF_MAX_LEN });
    }
    if x.iter().any(|v| !v.is_finite()) {
        return Err(Error::Degenerate("Shapiro-Francia input contains non-finite values".into()));
    }
    let mut sorted: Vec<f64> = x.iter().map(|v| v.as_f64()).collect();
    sorted.sort_by(f64::total_cmp);

    let scores = normal_scores(n);
    let nf = n as f64;
    let x_mean = sorted.iter().sum::<f64>() / nf;
    let m_mean = scores.iter().sum::<f64>() / nf;
    let (mut sxy, mut sxx, mut smm) = (0.0, 0.0, 0.0);
    for (xi, mi) in sorted.iter().zip(&scores) {
        let (dx, dm) = (xi - x_mean, mi - m_mean);
        sxy += dx * dm;
        sxx += dx * dx;
        smm += dm * dm;
    }
    if !(sxx > 0.0) {
        return Err(Error::Degenerate("Shapiro-Francia input has zero variance".into()));
    }
    let w = (sxy * sxy / (sxx * smm)).min(1.0);

    let u = nf.ln();
    let v = u.ln();
    let mu = -1.2725 + 1.0521 * (v - u);
    let sigma = 1.0308 - 0.26758 * (v + 2.0 / u);
    let z = ((1.0 - w).ln() - mu) / sigma;
    let p = if z == f64::NEG_INFINITY { 1.0 } else { std_normal().sf(z) };

    Ok(NormalityTest { statistic: T::lit(w), p_value: T::lit(p), n })
}

/// Every `len / max_len`-th element starting at a seeded offset; the input
/// itself when it is already short enough.
pub fn strided_subsample<T: Copy>(x: &[T], max_len: usize, seed: u64) -> Vec<T> {
    if x.len() <= max_len || max_len == 0 {
        return x.to_vec();
    }
    let stride = x.len() / max_len;
    let offset = ChaCha8Rng::seed_from_u64(seed).random_range(0..stride);
    x.iter().skip(offset).step_by(stride).take(max_len).copied().collect()
}

/// Shapiro-Francia on a strided subsample of at most [`SF_MAX_LEN`] points.
pub fn shapiro_francia_subsampled<T: Real>(x: &[T], seed: u64) -> Result<NormalityTest<T>> {
    shapiro_francia(&strided_subsample(x, SF_MAX_LEN, seed))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use rand_distr::{Distribution, StandardNormal, Uniform};

    fn normal_sample(n: usize, rng: &mut ChaCha8Rng) -> Vec<f64> {
        (0..n).map(|_| StandardNormal.sample(rng)).collect()
    }

    #[test]
    fn scores_are_symmetric_and_increasing() {
        let s = normal_scores(101);
        assert_abs_diff_eq!(s[50], 0.0, epsilon = 1e-12);
        for i in 0..101 {
            assert_abs_diff_eq!(s[i], -s[100 - i], epsilon = 1e-12);
        }
        assert!(s.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn perfect_scores_give_unit_statistic() {
        for n in [5, 50, 5000] {
            let t = shapiro_francia(&normal_scores(n)).unwrap();
            assert_abs_diff_eq!(t.statistic, 1.0, epsilon = 1e-12);
            assert!(t.p_value > 0.5);
        }
    }

    #[test]
    fn size_and_variance_errors() {
        assert!(matches!(shapiro_francia(&[1.0, 2.0, 3.0, 4.0]), Err(Error::SampleSize { .. })));
        assert!(matches!(shapiro_francia(&vec![0.0; 5001]), Err(Error::SampleSize { .. })));
        assert!(matches!(shapiro_francia(&[1.0; 10]), Err(Error::Degenerate(_))));
        assert!(shapiro_francia(&[1.0, 2.0, f64::NAN, 3.0, 4.0]).is_err());
    }

    #[test]
    fn statistic_falls_as_an_outlier_grows() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let base = normal_sample(200, &mut rng);
        let mut last = f64::INFINITY;
        for mag in [3.0, 5.0, 10.0, 30.0, 100.0, 1000.0] {
            let mut x = base.clone();
            x.push(mag);
            let w = shapiro_francia(&x).unwrap().statistic;
            assert!(w < last, "outlier {mag}: {w} !< {last}");
            last = w;
        }
    }

    #[test]
    fn laplace_samples_are_rejected() {
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        let uni = Uniform::new(-0.5_f64, 0.5).unwrap();
        let rejected = (0..100)
            .filter(|_| {
                let x: Vec<f64> = (0..5000)
                    .map(|_| {
                        let u = uni.sample(&mut rng);
                        -u.signum() * (1.0 - 2.0 * u.abs()).ln()
                    })
                    .collect();
                shapiro_francia(&x).unwrap().p_value < 0.001
            })
            .count();
        assert!(rejected >= 99, "{rejected}/100 rejected");
    }

    #[test]
    fn normal_samples_are_rarely_rejected() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let reps = 200;
        let rejected =
            (0..reps).filter(|_| shapiro_francia(&normal_sample(1000, &mut rng)).unwrap().p_value < 0.05).count();
        // Binomial(200, 0.05): mean 10, sd ~3.1.
        assert!(rejected <= 22, "{rejected}/{reps} rejected at 5%");
    }

    #[test]
    fn subsample_is_seeded_and_strided() {
        let x: Vec<usize> = (0..12_345).collect();
        let a = strided_subsample(&x, 5000, 1);
        assert_eq!(a, strided_subsample(&x, 5000, 1));
        assert_eq!(a.len(), 5000);
        assert!(a[0] < 2);
        assert!(a.windows(2).all(|w| w[1] - w[0] == 2));
        assert_eq!(strided_subsample(&x[..100], 5000, 1), x[..100].to_vec());
    }

    #[test]
    fn works_in_single_precision() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let x: Vec<f32> = normal_sample(500, &mut rng).iter().map(|&v| v as f32).collect();
        let t = shapiro_francia(&x).unwrap();
        assert!(t.statistic > 0.99 && t.statistic <= 1.0);
    }
}
