//! Welch power spectral density estimates of profile accelerations.

use std::f64::consts::PI;

use comfortplan_core::kinematics::resample_uniform;
use comfortplan_core::metrics::Spectrum;
use comfortplan_core::{Error, MotionProfile};
use rustfft::num_complex::Complex;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::error::{AppError, Result};

/// Fewest samples a spectrum is estimated from.
pub const MIN_SAMPLES: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct WelchSettings {
    /// Resampling rate of the profile, Hz.
    pub rate_hz: f64,
    /// Longest segment, samples.
    pub segment_cap: usize,
    /// Fraction of a segment shared with the next one.
    pub overlap: f64,
}

impl Default for WelchSettings {
    fn default() -> Self {
        Self {
            rate_hz: 10.0,
            segment_cap: 512,
            overlap: 0.5,
        }
    }
}

impl WelchSettings {
    pub fn validate(&self) -> Result<()> {
        if !(self.rate_hz > 0.0 && self.rate_hz.is_finite()) {
            return Err(AppError::Usage(format!("PSD rate {} must be positive", self.rate_hz)));
        }
        if self.segment_cap < MIN_SAMPLES {
            return Err(AppError::Usage(format!(
                "PSD segment cap {} is below {MIN_SAMPLES}",
                self.segment_cap
            )));
        }
        if !(0.0..0.95).contains(&self.overlap) {
            return Err(AppError::Usage(format!(
                "PSD overlap {} must lie in [0, 0.95)",
                self.overlap
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Axis {
    Longitudinal,
    Lateral,
}

fn hann(n: usize) -> Vec<f64> {
    (0..n)
        .map(|i| 0.5 - 0.5 * (2.0 * PI * i as f64 / n as f64).cos())
        .collect()
}

/// One-sided Welch estimate of `signal` sampled at `rate` Hz with a periodic
/// Hann window. Segments are `min(N, segment_cap)` long and hop by
/// `(1 - overlap)` of that; the density is in units² per Hz.
pub fn welch(signal: &[f64], rate: f64, settings: &WelchSettings) -> Result<Spectrum> {
    settings.validate()?;
    if !(rate > 0.0 && rate.is_finite()) {
        return Err(AppError::Usage(format!("sample rate {rate} must be positive")));
    }
    let n = signal.len();
    if n < MIN_SAMPLES {
        return Err(Error::Resolution {
            samples: n,
            required: MIN_SAMPLES,
        }
        .into());
    }
    let len = n.min(settings.segment_cap);
    let hop = ((len as f64 * (1.0 - settings.overlap)).round() as usize).max(1);
    let window = hann(len);
    let scale = 1.0 / (rate * window.iter().map(|w| w * w).sum::<f64>());
    let fft = FftPlanner::new().plan_fft_forward(len);
    let bins = len / 2 + 1;
    let mut density = vec![0.0; bins];
    let mut buffer = vec![Complex::new(0.0, 0.0); len];
    let mut segments = 0usize;
    let mut start = 0;
    while start + len <= n {
        for (b, (x, w)) in buffer.iter_mut().zip(signal[start..start + len].iter().zip(&window)) {
            *b = Complex::new(x * w, 0.0);
        }
        fft.process(&mut buffer);
        for (d, c) in density.iter_mut().zip(&buffer) {
            *d += c.norm_sqr();
        }
        segments += 1;
        start += hop;
    }
    for (k, d) in density.iter_mut().enumerate() {
        let one_sided = if k == 0 || (len % 2 == 0 && k == len / 2) { 1.0 } else { 2.0 };
        *d *= one_sided * scale / segments as f64;
    }
    let frequencies = (0..bins).map(|k| k as f64 * rate / len as f64).collect();
    Ok(Spectrum { frequencies, density })
}

/// Resamples one acceleration axis of `profile` and estimates its spectrum.
pub fn profile_psd(profile: &MotionProfile, axis: Axis, settings: &WelchSettings) -> Result<Spectrum> {
    let series = resample_uniform(profile, settings.rate_hz)?;
    let signal = match axis {
        Axis::Longitudinal => &series.ax,
        Axis::Lateral => &series.ay,
    };
    welch(signal, settings.rate_hz, settings)
}

/// Mean square of a sequence, for comparison with the integrated density.
pub fn mean_square(signal: &[f64]) -> f64 {
    signal.iter().map(|x| x * x).sum::<f64>() / signal.len() as f64
}
