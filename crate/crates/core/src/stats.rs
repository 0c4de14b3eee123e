//! Monte-Carlo estimates, compensated accumulation, weighted least squares,
//! and empirical-CDF distances.

use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use crate::math;

/// A Monte-Carlo (or quadrature) estimate with its standard error.
#[derive(Debug, Clone, PartialEq)]
pub struct Estimate {
    pub mean: f64,
    pub std_error: f64,
    pub n_samples: usize,
    /// Short free-form note on how the value was produced (method, fallback).
    pub metadata: String,
}

impl Estimate {
    pub fn exact(value: f64, metadata: &str) -> Self {
        Estimate {
            mean: value,
            std_error: 0.0,
            n_samples: 1,
            metadata: String::from(metadata),
        }
    }

    /// Mean and standard error of a sample.
    pub fn from_samples(samples: &[f64], metadata: &str) -> Self {
        let n = samples.len();
        assert!(n >= 1);
        let mean = kahan_sum(samples.iter().copied()) / n as f64;
        let var = if n > 1 {
            kahan_sum(samples.iter().map(|x| (x - mean) * (x - mean))) / (n as f64 - 1.0)
        } else {
            0.0
        };
        Estimate {
            mean,
            std_error: math::sqrt(var / n as f64),
            n_samples: n,
            metadata: String::from(metadata),
        }
    }

    /// |self.mean − other.mean| measured in combined standard errors.
    pub fn sigma_distance(&self, other: &Estimate) -> f64 {
        let se = math::hypot(self.std_error, other.std_error);
        if se == 0.0 {
            if self.mean == other.mean {
                0.0
            } else {
                f64::INFINITY
            }
        } else {
            math::abs(self.mean - other.mean) / se
        }
    }
}

impl fmt::Display for Estimate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{:.6e} ± {:.2e} (n={})",
            self.mean, self.std_error, self.n_samples
        )
    }
}

/// Kahan–Babuška compensated summation.
pub fn kahan_sum<I: Iterator<Item = f64>>(iter: I) -> f64 {
    let mut sum = 0.0;
    let mut c = 0.0;
    for x in iter {
        let t = sum + x;
        if math::abs(sum) >= math::abs(x) {
            c += (sum - t) + x;
        } else {
            c += (x - t) + sum;
        }
        sum = t;
    }
    sum + c
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum FitError {
    TooFewPoints,
    NonPositiveMean,
    NonIncreasingTimes,
}

impl fmt::Display for FitError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FitError::TooFewPoints => write!(f, "need at least 3 points to fit"),
            FitError::NonPositiveMean => write!(f, "log fit requires positive means"),
            FitError::NonIncreasingTimes => write!(f, "abscissae must be strictly increasing"),
        }
    }
}

#[cfg(feature = "std")]
impl std::error::Error for FitError {}

/// Result of a weighted linear fit `y ≈ intercept + slope·t`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LineFit {
    pub slope: f64,
    pub intercept: f64,
    pub slope_stderr: f64,
    pub intercept_stderr: f64,
}

/// Weighted least squares of `log(mean)` against `t`.
///
/// Each point carries the delta-method weight `(mean/std_error)²`; points
/// with zero standard error get the largest finite weight present (or unit
/// weight if all are exact, in which case the fit is unweighted and the
/// reported errors are zero for an exact linear input).
pub fn fit_decay_rate(points: &[(f64, Estimate)]) -> Result<LineFit, FitError> {
    if points.len() < 3 {
        return Err(FitError::TooFewPoints);
    }
    for w in points.windows(2) {
        if !(w[1].0 > w[0].0) {
            return Err(FitError::NonIncreasingTimes);
        }
    }
    let mut xs = Vec::with_capacity(points.len());
    let mut ys = Vec::with_capacity(points.len());
    let mut ws = Vec::with_capacity(points.len());
    for (t, e) in points {
        if !(e.mean > 0.0) {
            return Err(FitError::NonPositiveMean);
        }
        xs.push(*t);
        ys.push(math::ln(e.mean));
        // variance of log(mean) ≈ (se/mean)²
        let rel = e.std_error / e.mean;
        ws.push(if rel > 0.0 { 1.0 / (rel * rel) } else { f64::NAN });
    }
    let max_finite = ws.iter().copied().filter(|w| w.is_finite()).fold(0.0, f64::max);
    let fallback = if max_finite > 0.0 { max_finite } else { 1.0 };
    for w in ws.iter_mut() {
        if !w.is_finite() {
            *w = fallback;
        }
    }
    Ok(weighted_line_fit(&xs, &ys, &ws))
}

/// Weighted least squares line fit with parameter standard errors computed
/// from the supplied weights (taken as inverse variances).
pub fn weighted_line_fit(x: &[f64], y: &[f64], w: &[f64]) -> LineFit {
    let sw = kahan_sum(w.iter().copied());
    let swx = kahan_sum(x.iter().zip(w).map(|(x, w)| w * x));
    let swy = kahan_sum(y.iter().zip(w).map(|(y, w)| w * y));
    let xbar = swx / sw;
    let ybar = swy / sw;
    let sxx = kahan_sum(x.iter().zip(w).map(|(x, w)| w * (x - xbar) * (x - xbar)));
    let sxy = kahan_sum(
        x.iter()
            .zip(y)
            .zip(w)
            .map(|((x, y), w)| w * (x - xbar) * (y - ybar)),
    );
    let slope = sxy / sxx;
    let intercept = ybar - slope * xbar;
    let slope_stderr = math::sqrt(1.0 / sxx);
    let intercept_stderr = math::sqrt(1.0 / sw + xbar * xbar / sxx);
    LineFit {
        slope,
        intercept,
        slope_stderr,
        intercept_stderr,
    }
}

/// Kolmogorov–Smirnov distance between a sample and an analytic CDF.
/// Sorts a copy of the sample.
pub fn ks_distance<F: Fn(f64) -> f64>(samples: &[f64], cdf: F) -> f64 {
    let mut v: Vec<f64> = samples.to_vec();
    v.sort_by(|a, b| a.partial_cmp(b).expect("samples must be finite"));
    let n = v.len() as f64;
    let mut d: f64 = 0.0;
    for (i, x) in v.iter().enumerate() {
        let c = cdf(*x);
        let lo = i as f64 / n;
        let hi = (i + 1) as f64 / n;
        d = d.max(math::abs(c - lo)).max(math::abs(hi - c));
    }
    d
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_exponential_fit() {
        // e^{-0.75 t} at t = 1, 2, 3
        let pts: Vec<(f64, Estimate)> = [1.0, 2.0, 3.0]
            .iter()
            .map(|&t| (t, Estimate::exact(math::exp(-0.75 * t), "synthetic")))
            .collect();
        let fit = fit_decay_rate(&pts).unwrap();
        assert!((fit.slope + 0.75).abs() < 1e-12);
        assert!(fit.intercept.abs() < 1e-12);
    }

    #[test]
    fn fit_rejects_bad_input() {
        let e = Estimate::exact(1.0, "");
        assert_eq!(
            fit_decay_rate(&[(0.0, e.clone()), (1.0, e.clone())]).unwrap_err(),
            FitError::TooFewPoints
        );
        let neg = Estimate::exact(-1.0, "");
        assert_eq!(
            fit_decay_rate(&[(0.0, e.clone()), (1.0, neg), (2.0, e.clone())]).unwrap_err(),
            FitError::NonPositiveMean
        );
        assert_eq!(
            fit_decay_rate(&[(0.0, e.clone()), (0.0, e.clone()), (2.0, e)]).unwrap_err(),
            FitError::NonIncreasingTimes
        );
    }

    #[test]
    fn ks_of_exact_uniform_grid() {
        let n = 1000;
        let samples: Vec<f64> = (0..n).map(|i| (i as f64 + 0.5) / n as f64).collect();
        let d = ks_distance(&samples, |x| x.clamp(0.0, 1.0));
        assert!(d <= 0.5 / n as f64 + 1e-12);
    }

    #[test]
    fn estimate_from_samples() {
        let e = Estimate::from_samples(&[1.0, 2.0, 3.0, 4.0], "test");
        assert!((e.mean - 2.5).abs() < 1e-15);
        // sample variance 5/3, se = sqrt(5/12)
        assert!((e.std_error - (5.0f64 / 12.0).sqrt()).abs() < 1e-15);
    }
}
