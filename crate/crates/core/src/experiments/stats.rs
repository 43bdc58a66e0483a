use serde::Serialize;

use crate::error::{Error, Result};
use crate::exec::pairwise_sum;

/// Two-sided 99% normal quantile.
pub const Z99: f64 = 2.5758293035489004;
/// One-sided 99% normal quantile.
pub const Z99_ONE_SIDED: f64 = 2.3263478740408408;

/// A Monte Carlo mean with its standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Estimate {
    pub mean: f64,
    pub se: f64,
    pub n: usize,
}

impl Estimate {
    /// Sample mean and `s/√n`, summed in a fixed pairwise order.
    pub fn from_samples(xs: &[f64]) -> Result<Estimate> {
        if xs.len() < 2 {
            return Err(Error::invalid(
                "n_samples",
                "at least two samples are required",
            ));
        }
        let n = xs.len() as f64;
        let mean = pairwise_sum(xs) / n;
        let dev: Vec<f64> = xs.iter().map(|x| (x - mean).powi(2)).collect();
        let var = pairwise_sum(&dev) / (n - 1.0);
        Ok(Estimate {
            mean,
            se: (var / n).sqrt(),
            n: xs.len(),
        })
    }

    pub fn upper(&self, z: f64) -> f64 {
        self.mean + z * self.se
    }

    pub fn lower(&self, z: f64) -> f64 {
        self.mean - z * self.se
    }
}

/// Least-squares line `y = intercept + slope · x`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LineFit {
    pub slope: f64,
    pub intercept: f64,
    pub slope_se: f64,
}

impl LineFit {
    pub fn ci99(&self) -> (f64, f64) {
        (
            self.slope - Z99 * self.slope_se,
            self.slope + Z99 * self.slope_se,
        )
    }
}

/// Weighted least squares; `weights = None` gives ordinary least squares
/// with the slope error estimated from the residuals. With weights `1/σᵢ²`
/// the slope error is the model-based `1/√(Σ wᵢ(xᵢ−x̄)²)`.
pub fn fit_line(x: &[f64], y: &[f64], weights: Option<&[f64]>) -> Result<LineFit> {
    if x.len() != y.len() || x.len() < 2 {
        return Err(Error::invalid(
            "x",
            "need at least two matching points for a fit",
        ));
    }
    let ones = vec![1.0; x.len()];
    let w = weights.unwrap_or(&ones);
    if w.len() != x.len() || w.iter().any(|v| !(*v > 0.0) || !v.is_finite()) {
        return Err(Error::invalid(
            "weights",
            "weights must be positive and finite",
        ));
    }
    let sw: f64 = w.iter().sum();
    let xm = x.iter().zip(w).map(|(a, b)| a * b).sum::<f64>() / sw;
    let ym = y.iter().zip(w).map(|(a, b)| a * b).sum::<f64>() / sw;
    let sxx: f64 = x.iter().zip(w).map(|(a, b)| b * (a - xm).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::invalid("x", "abscissae are all equal"));
    }
    let sxy: f64 = x
        .iter()
        .zip(y)
        .zip(w)
        .map(|((a, c), b)| b * (a - xm) * (c - ym))
        .sum();
    let slope = sxy / sxx;
    let intercept = ym - slope * xm;
    let slope_se = match weights {
        Some(_) => (1.0 / sxx).sqrt(),
        None if x.len() > 2 => {
            let rss: f64 = x
                .iter()
                .zip(y)
                .map(|(a, c)| (c - intercept - slope * a).powi(2))
                .sum();
            (rss / (x.len() as f64 - 2.0) / sxx).sqrt()
        }
        None => f64::NAN,
    };
    Ok(LineFit {
        slope,
        intercept,
        slope_se,
    })
}

/// Uniformity of a family of estimates indexed by a parameter.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BandCheck {
    pub params: Vec<f64>,
    pub estimates: Vec<Estimate>,
    /// `max mean / min mean`
    pub band_ratio: f64,
    /// Weighted trend of the means in the parameter.
    pub trend: LineFit,
    /// `slope / slope_se`
    pub trend_z: f64,
    pub within_band: bool,
    pub increasing_trend: bool,
}

impl BandCheck {
    pub fn new(params: Vec<f64>, estimates: Vec<Estimate>, band: f64) -> Result<BandCheck> {
        let means: Vec<f64> = estimates.iter().map(|e| e.mean).collect();
        let max = means.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let min = means.iter().cloned().fold(f64::INFINITY, f64::min);
        let band_ratio = if max == min { 1.0 } else { max / min };
        let floor = 1e-12 * max.abs().max(1e-300);
        let weights: Vec<f64> = estimates
            .iter()
            .map(|e| 1.0 / e.se.max(floor).powi(2))
            .collect();
        let trend = fit_line(&params, &means, Some(&weights))?;
        let trend_z = if trend.slope == 0.0 {
            0.0
        } else {
            trend.slope / trend.slope_se
        };
        Ok(BandCheck {
            within_band: band_ratio.is_finite() && band_ratio > 0.0 && band_ratio <= band,
            increasing_trend: trend_z > Z99_ONE_SIDED,
            params,
            estimates,
            band_ratio,
            trend,
            trend_z,
        })
    }
}
