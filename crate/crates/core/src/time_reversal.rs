//! Time-reversal pre-filter construction and the equivalent TR channel.
//!
//! The pre-filter is built from a measured (noisy, averaged) channel estimate
//! in a fixed order: truncate, reverse, resample to the generator rate,
//! normalise. It is then replayed through the true channel.

use crate::acquisition::{acquire, AcquisitionRecord, NoiseModel};
use crate::channel::{convolve, ChannelResponse};
use crate::dsp;
use crate::error::{Error, Result};
use crate::waveform::{
    normalize_power_with_gain, resample, truncate_window, PowerConvention, SampledWaveform, TimeWindow,
    TruncationPolicy,
};

/// Time-reversed, truncated, resampled and power-normalised channel estimate.
#[derive(Debug, Clone, PartialEq)]
pub struct TrPrefilter {
    /// Transmit waveform, anchored at `t0 = 0`.
    pub waveform: SampledWaveform,
    /// Scale applied to the reversed estimate to meet the power target.
    pub gain_a: f64,
    /// Part of the estimate that was kept, on the estimate's time axis.
    pub window: TimeWindow,
    pub source_rate: f64,
    pub target_rate: f64,
    pub convention: PowerConvention,
    pub p_o: f64,
}

impl TrPrefilter {
    /// Delay at which the equivalent channel peaks for a channel at the
    /// prefilter rate: the span of the prefilter, `(len - 1) / rate`.
    pub fn peak_delay(&self) -> f64 {
        (self.waveform.len() - 1) as f64 / self.waveform.sample_rate()
    }
}

pub fn build_prefilter(
    h_est: &AcquisitionRecord,
    trunc: &TruncationPolicy,
    target_rate: f64,
    p_o: f64,
    convention: PowerConvention,
) -> Result<TrPrefilter> {
    if !(target_rate.is_finite() && target_rate > 0.0) {
        return Err(Error::invalid("target_rate", format!("must be positive, got {target_rate}")));
    }
    let (kept, window) = truncate_window(&h_est.averaged, trunc)?;
    if kept.sum_of_squares() == 0.0 {
        return Err(Error::ZeroEnergy);
    }
    let reversed = kept.reversed();
    let resampled = resample(&reversed, target_rate)?;
    let (waveform, gain_a) = normalize_power_with_gain(&resampled, p_o, convention)?;
    Ok(TrPrefilter {
        waveform,
        gain_a,
        window,
        source_rate: h_est.averaged.sample_rate(),
        target_rate,
        convention,
        p_o,
    })
}

/// Noise-free equivalent channel: the prefilter, brought to the channel rate,
/// convolved with the true channel.
pub fn tr_channel_clean(pf: &TrPrefilter, h_true: &ChannelResponse) -> Result<SampledWaveform> {
    let tx = resample(&pf.waveform, h_true.sample_rate())?;
    convolve(&tx, h_true)
}

/// Equivalent TR channel as received: [`tr_channel_clean`] then averaged acquisition.
pub fn tr_channel_response(
    pf: &TrPrefilter,
    h_true: &ChannelResponse,
    noise: NoiseModel,
    n_avg: usize,
) -> Result<AcquisitionRecord> {
    acquire(&tr_channel_clean(pf, h_true)?, noise, n_avg)
}

/// Full linear autocorrelation Σₖ h[k]·h[k+m] for lags `-(n-1)..=(n-1)`,
/// on an axis centred at zero lag. Symmetric by construction, with the
/// zero-lag value equal to Σ|h|².
pub fn ideal_autocorrelation(h: &ChannelResponse) -> SampledWaveform {
    let taps = h.impulse().samples();
    let n = taps.len();
    let rev: Vec<f64> = taps.iter().rev().copied().collect();
    let mut r = dsp::convolve(taps, &rev);
    r[n - 1] = h.tap_energy();
    for m in 1..n {
        r[n - 1 - m] = r[n - 1 + m];
    }
    let rate = h.sample_rate();
    SampledWaveform::from_parts(r, rate, -((n - 1) as f64) / rate)
}
