//! Receive-chain stand-in: additive Gaussian noise per acquisition, averaging
//! over repeated acquisitions, and noise-floor estimation.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng;
use crate::waveform::{SampledWaveform, TimeWindow};

/// Per-sample additive white Gaussian noise.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseModel {
    /// Standard deviation per sample per acquisition, volts.
    pub sigma: f64,
    pub seed: u64,
}

impl NoiseModel {
    pub fn new(sigma: f64, seed: u64) -> Result<Self> {
        let model = Self { sigma, seed };
        model.validate()?;
        Ok(model)
    }

    pub fn noiseless() -> Self {
        Self { sigma: 0.0, seed: 0 }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.sigma.is_finite() && self.sigma >= 0.0) {
            return Err(Error::invalid("sigma", format!("must be non-negative, got {}", self.sigma)));
        }
        Ok(())
    }

    /// Noise of acquisition `index`, samples `start..start + len`.
    pub fn draw(&self, index: u64, start: u64, len: usize) -> Vec<f64> {
        let mut z = rng::standard_normal(self.seed, index, start, len);
        for v in &mut z {
            *v *= self.sigma;
        }
        z
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AcquisitionRecord {
    pub averaged: SampledWaveform,
    pub n_avg: usize,
    pub noise: NoiseModel,
    /// Noise-free trace the record was acquired from (simulation only).
    pub clean_ref: Option<SampledWaveform>,
}

impl AcquisitionRecord {
    /// Wraps an already-measured trace (e.g. loaded from disk).
    pub fn from_trace(trace: SampledWaveform, n_avg: usize, noise: NoiseModel) -> Result<Self> {
        if n_avg == 0 {
            return Err(Error::invalid("n_avg", "must be at least 1"));
        }
        Ok(Self {
            averaged: trace,
            n_avg,
            noise,
            clean_ref: None,
        })
    }
}

/// Averages `n_avg` noisy acquisitions of `clean`. Acquisition `i` uses noise
/// stream `i` of `noise.seed`, so the record is fully determined by the inputs.
pub fn acquire(clean: &SampledWaveform, noise: NoiseModel, n_avg: usize) -> Result<AcquisitionRecord> {
    noise.validate()?;
    if n_avg == 0 {
        return Err(Error::invalid("n_avg", "must be at least 1"));
    }
    let averaged = if noise.sigma == 0.0 {
        clean.clone()
    } else {
        let n = clean.len();
        let mut acc = vec![0.0; n];
        let mut buf = vec![0.0; n];
        for i in 0..n_avg as u64 {
            rng::fill_standard_normal(noise.seed, i, 0, &mut buf);
            for (a, z) in acc.iter_mut().zip(&buf) {
                *a += z;
            }
        }
        let scale = noise.sigma / n_avg as f64;
        let samples = clean.samples().iter().zip(&acc).map(|(c, a)| c + a * scale).collect();
        SampledWaveform::new(samples, clean.sample_rate(), clean.t0())?
    };
    Ok(AcquisitionRecord {
        averaged,
        n_avg,
        noise,
        clean_ref: Some(clean.clone()),
    })
}

/// Mean squared amplitude (V²) of the samples whose times fall in `quiet`.
pub fn estimate_noise_floor(rec: &AcquisitionRecord, quiet: TimeWindow) -> Result<f64> {
    let w = &rec.averaged;
    if !(quiet.start.is_finite() && quiet.end.is_finite()) || quiet.end <= quiet.start {
        return Err(Error::invalid("quiet_window", "empty window"));
    }
    let support_end = w.t0() + w.duration();
    if quiet.start < w.t0() - 1e-9 * w.sample_period() || quiet.end > support_end + 1e-9 * w.sample_period() {
        return Err(Error::WindowOutsideSupport {
            start: quiet.start,
            end: quiet.end,
        });
    }
    let first = ((quiet.start - w.t0()) * w.sample_rate() - 1e-9).ceil().max(0.0) as usize;
    let end = (((quiet.end - w.t0()) * w.sample_rate() - 1e-9).ceil().max(0.0) as usize).min(w.len());
    if first >= end {
        return Err(Error::invalid("quiet_window", "contains no samples"));
    }
    let s = &w.samples()[first..end];
    Ok(s.iter().map(|v| v * v).sum::<f64>() / s.len() as f64)
}
