use serde::{Deserialize, Serialize};

use crate::spectrum::ReducedSpectrum;
use crate::{Error, Result};

/// Width of the high band as a fraction of `R`.
pub const HIGH_BAND_FRACTION: f64 = 0.25;

/// Values at or below zero are raised to this before taking logs.
pub const ZERO_CLAMP: f64 = 1e-12;

const BAND_START: f64 = 1.0 - HIGH_BAND_FRACTION;

/// Power-law fit `S(f) = a * f^(-b2)` of the high band.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DecayFeatures {
    /// `S(0.75)`, start value of the fitted curve.
    pub b1: f64,
    /// Decay exponent; negative when the tail rises.
    pub b2: f64,
    /// `S(1.0) = a`, end value of the fitted curve.
    pub b3: f64,
    /// RMS of the log-space residuals.
    pub fit_residual: f64,
    /// Number of band values clamped to [`ZERO_CLAMP`].
    pub clamped: usize,
}

impl DecayFeatures {
    pub fn to_vec(&self) -> Vec<f64> {
        vec![self.b1, self.b2, self.b3]
    }

    /// Evaluates the fitted curve at normalized frequency `f`.
    pub fn eval(&self, f: f64) -> f64 {
        self.b3 * f.powf(-self.b2)
    }
}

/// Least-squares line through `(ln f, ln S)` over the high band of an
/// un-normalized reduced spectrum.
pub fn fit_decay(rs: &ReducedSpectrum) -> Result<DecayFeatures> {
    let band = rs.high_band(HIGH_BAND_FRACTION)?;
    fit_power_law(&band.freqs, &band.values)
}

/// Fits `values ~ a * freqs^(-b2)`; `freqs` must be positive.
pub fn fit_power_law(freqs: &[f64], values: &[f64]) -> Result<DecayFeatures> {
    assert_eq!(freqs.len(), values.len());
    let n = freqs.len();
    if n < 3 {
        return Err(Error::BandTooSmall { bins: n, needed: 3 });
    }
    if values.iter().all(|&v| v <= 0.0) {
        return Err(Error::DegenerateBand);
    }
    if freqs.iter().any(|&f| f <= 0.0) {
        return Err(Error::Validation(
            "power-law fit needs positive frequencies".into(),
        ));
    }

    let mut clamped = 0;
    let xs: Vec<f64> = freqs.iter().map(|f| f.ln()).collect();
    let ys: Vec<f64> = values
        .iter()
        .map(|&v| {
            if v <= 0.0 {
                clamped += 1;
                ZERO_CLAMP.ln()
            } else {
                v.ln()
            }
        })
        .collect();

    let x_mean = xs.iter().sum::<f64>() / n as f64;
    let y_mean = ys.iter().sum::<f64>() / n as f64;
    let (mut sxx, mut sxy) = (0.0, 0.0);
    for (x, y) in xs.iter().zip(&ys) {
        sxx += (x - x_mean) * (x - x_mean);
        sxy += (x - x_mean) * (y - y_mean);
    }
    if sxx == 0.0 {
        return Err(Error::Validation("band frequencies are all equal".into()));
    }
    let slope = sxy / sxx;
    let intercept = y_mean - slope * x_mean;
    let rss: f64 = xs
        .iter()
        .zip(&ys)
        .map(|(x, y)| (y - intercept - slope * x).powi(2))
        .sum();

    let a = intercept.exp();
    let b2 = -slope;
    let out = DecayFeatures {
        b1: a * BAND_START.powf(-b2),
        b2,
        b3: a,
        fit_residual: (rss / n as f64).sqrt(),
        clamped,
    };
    if !(out.b1.is_finite() && out.b3.is_finite()) {
        return Err(Error::DegenerateBand);
    }
    Ok(out)
}
