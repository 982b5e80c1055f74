//! Multipath channel responses: synthetic tapped delay lines, file-backed
//! responses, linear convolution and the antenna band-limiting front end.

use std::path::Path;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::dsp;
use crate::error::{Error, Result};
use crate::rng::{self, domain};
use crate::trace_io;
use crate::waveform::SampledWaveform;

/// Default channel observation window (seconds).
pub const DEFAULT_CHANNEL_WINDOW: f64 = 400e-9;
/// Default capture rate of the receive chain, also the tap grid of synthetic channels.
pub const DEFAULT_DSO_RATE: f64 = 40e9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scenario {
    CoPolar,
    CrossPolar,
    Custom,
}

impl Scenario {
    pub fn as_str(&self) -> &'static str {
        match self {
            Scenario::CoPolar => "co_polar",
            Scenario::CrossPolar => "cross_polar",
            Scenario::Custom => "custom",
        }
    }
}

/// Tapped impulse response h(r₀, τ). Tap amplitudes are unitless path gains
/// on the sample grid of `impulse`.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelResponse {
    impulse: SampledWaveform,
    location_label: String,
    scenario: Scenario,
}

impl ChannelResponse {
    /// Validates against the default 400 ns window.
    pub fn new(impulse: SampledWaveform, location_label: impl Into<String>, scenario: Scenario) -> Result<Self> {
        Self::with_window(impulse, location_label, scenario, DEFAULT_CHANNEL_WINDOW)
    }

    pub fn with_window(
        impulse: SampledWaveform,
        location_label: impl Into<String>,
        scenario: Scenario,
        window: f64,
    ) -> Result<Self> {
        if impulse.sum_of_squares() == 0.0 {
            return Err(Error::ZeroEnergy);
        }
        if impulse.duration() > window * (1.0 + 1e-12) {
            return Err(Error::ChannelTooLong {
                length: impulse.duration(),
                window,
            });
        }
        Ok(Self {
            impulse,
            location_label: location_label.into(),
            scenario,
        })
    }

    pub fn impulse(&self) -> &SampledWaveform {
        &self.impulse
    }

    pub fn location_label(&self) -> &str {
        &self.location_label
    }

    pub fn scenario(&self) -> Scenario {
        self.scenario
    }

    pub fn sample_rate(&self) -> f64 {
        self.impulse.sample_rate()
    }

    /// Span of the response, equal to the impulse duration.
    pub fn max_delay(&self) -> f64 {
        self.impulse.duration()
    }

    /// Σ|h|² over taps (sample-sum, unitless).
    pub fn tap_energy(&self) -> f64 {
        self.impulse.sum_of_squares()
    }
}

/// A polarisation-preserving specular path (e.g. a large metallic reflector),
/// placed relative to the direct tap.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpecularPath {
    pub delay_ns: f64,
    /// Amplitude relative to the direct tap, dB (20·log10).
    pub relative_db: f64,
    /// Reflection inverts polarity when true.
    #[serde(default)]
    pub inverted: bool,
}

/// Single-cluster Poisson-arrival, exponentially decaying tapped delay line.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthChannelParams {
    /// Mean scattered arrivals per nanosecond.
    pub arrival_rate: f64,
    /// Power decay constant of the scattered taps, ns.
    pub decay_const: f64,
    /// Direct-tap power above the summed scattered power, dB. `None` omits the direct tap.
    pub los_excess_db: Option<f64>,
    /// Optional specular reflection of the direct path; ignored without a direct tap.
    #[serde(default)]
    pub specular: Option<SpecularPath>,
    /// Response length, ns.
    pub total_length: f64,
    /// Total tap power Σ|h|² relative to unity, dB.
    pub scatter_power_offset_db: f64,
    /// Tap grid rate, Hz.
    #[serde(default = "default_tap_rate")]
    pub sample_rate: f64,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_scenario")]
    pub scenario: Scenario,
}

fn default_tap_rate() -> f64 {
    DEFAULT_DSO_RATE
}

fn default_scenario() -> Scenario {
    Scenario::Custom
}

impl SynthChannelParams {
    /// Line-of-sight, co-polarised antennas: direct coupling, one strong
    /// specular reflection and diffuse scattering.
    pub fn co_polar(seed: u64) -> Self {
        Self {
            arrival_rate: 5.0,
            decay_const: 8.0,
            los_excess_db: Some(15.0),
            specular: Some(SpecularPath {
                delay_ns: 20.0,
                relative_db: 0.0,
                inverted: true,
            }),
            total_length: 120.0,
            scatter_power_offset_db: 0.0,
            sample_rate: DEFAULT_DSO_RATE,
            seed,
            scenario: Scenario::CoPolar,
        }
    }

    /// Cross-polarised antennas: direct coupling and specular paths suppressed,
    /// same diffuse statistics, total power 5.7 dB below the co-polar preset.
    pub fn cross_polar(seed: u64) -> Self {
        Self {
            los_excess_db: None,
            specular: None,
            scatter_power_offset_db: -5.7,
            scenario: Scenario::CrossPolar,
            ..Self::co_polar(seed)
        }
    }

    pub fn preset(name: &str, seed: u64) -> Option<Self> {
        match name {
            "co_polar" | "co-polar" | "copolar" => Some(Self::co_polar(seed)),
            "cross_polar" | "cross-polar" | "crosspolar" => Some(Self::cross_polar(seed)),
            _ => None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let positive = |v: f64| v.is_finite() && v > 0.0;
        if !positive(self.arrival_rate) {
            return Err(Error::invalid("arrival_rate", "must be positive"));
        }
        if !positive(self.decay_const) {
            return Err(Error::invalid("decay_const", "must be positive"));
        }
        if !positive(self.total_length) {
            return Err(Error::invalid("total_length", "must be positive"));
        }
        if !positive(self.sample_rate) {
            return Err(Error::invalid("sample_rate", "must be positive"));
        }
        if !self.scatter_power_offset_db.is_finite() {
            return Err(Error::invalid("scatter_power_offset_db", "must be finite"));
        }
        if self.los_excess_db.is_some_and(|k| !k.is_finite()) {
            return Err(Error::invalid("los_excess_db", "must be finite"));
        }
        if let Some(sp) = self.specular {
            if !(sp.delay_ns.is_finite() && sp.delay_ns > 0.0 && sp.delay_ns < self.total_length) {
                return Err(Error::invalid("specular.delay_ns", "must lie inside the response"));
            }
            if !sp.relative_db.is_finite() {
                return Err(Error::invalid("specular.relative_db", "must be finite"));
            }
        }
        if self.total_length * 1e-9 > DEFAULT_CHANNEL_WINDOW * (1.0 + 1e-12) {
            return Err(Error::ChannelTooLong {
                length: self.total_length * 1e-9,
                window: DEFAULT_CHANNEL_WINDOW,
            });
        }
        Ok(())
    }
}

fn exp_draw<R: Rng>(rng: &mut R, mean: f64) -> f64 {
    let u: f64 = rng.gen();
    -mean * (1.0 - u).ln()
}

/// Draws a channel. The scattered taps depend only on the seed and the
/// scatter statistics, so presets with matched seeds share them.
pub fn synth_channel(params: &SynthChannelParams) -> Result<ChannelResponse> {
    params.validate()?;
    let fs = params.sample_rate;
    let n = ((params.total_length * 1e-9 * fs).round() as usize).max(1);
    let mut taps = vec![0.0; n];

    let tap_seed = rng::derive_seed(params.seed, domain::CHANNEL, 0);
    let mut arrivals = rng::stream_rng(tap_seed, 0);
    let mean_gap = 1.0 / params.arrival_rate;
    let mut delays = Vec::new();
    let mut t = exp_draw(&mut arrivals, mean_gap);
    while t < params.total_length {
        delays.push(t);
        t += exp_draw(&mut arrivals, mean_gap);
    }
    let gains = rng::standard_normal(tap_seed, 1, 0, delays.len());
    for (&delay, g) in delays.iter().zip(gains) {
        let k = (delay * 1e-9 * fs).round() as usize;
        if k < n {
            taps[k] += g * (-delay / params.decay_const).exp().sqrt();
        }
    }
    let scattered: f64 = taps.iter().map(|h| h * h).sum();

    if let Some(excess_db) = params.los_excess_db {
        // a draw with no scattered arrivals still gets a unit direct tap
        let direct = if scattered > 0.0 {
            (10f64.powf(excess_db / 10.0) * scattered).sqrt()
        } else {
            1.0
        };
        taps[0] += direct;
        if let Some(sp) = params.specular {
            let k = (sp.delay_ns * 1e-9 * fs).round() as usize;
            let sign = if sp.inverted { -1.0 } else { 1.0 };
            taps[k.min(n - 1)] += sign * direct * 10f64.powf(sp.relative_db / 20.0);
        }
    }

    let total: f64 = taps.iter().map(|h| h * h).sum();
    if total == 0.0 {
        return Err(Error::ZeroEnergy);
    }
    let scale = (10f64.powf(params.scatter_power_offset_db / 10.0) / total).sqrt();
    for h in &mut taps {
        *h *= scale;
    }
    let label = format!("{}#{}", params.scenario.as_str(), params.seed);
    ChannelResponse::new(SampledWaveform::new(taps, fs, 0.0)?, label, params.scenario)
}

/// Reads a channel stored with [`save_channel`] (binary) or as a CSV trace.
pub fn load_channel(path: &Path) -> Result<ChannelResponse> {
    let impulse = trace_io::load_trace(path)?;
    let label = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "file".into());
    ChannelResponse::new(impulse, label, Scenario::Custom)
}

pub fn save_channel(path: &Path, h: &ChannelResponse) -> Result<()> {
    trace_io::save_trace(path, h.impulse())
}

/// Full linear convolution `x * h`; both must share a sample rate.
/// The output starts at `x.t0 + h.t0`.
pub fn convolve(x: &SampledWaveform, h: &ChannelResponse) -> Result<SampledWaveform> {
    convolve_waveforms(x, h.impulse())
}

pub fn convolve_waveforms(x: &SampledWaveform, h: &SampledWaveform) -> Result<SampledWaveform> {
    check_rates(x.sample_rate(), h.sample_rate())?;
    let y = dsp::convolve(x.samples(), h.samples());
    SampledWaveform::new(y, x.sample_rate(), x.t0() + h.t0())
}

pub(crate) fn check_rates(a: f64, b: f64) -> Result<()> {
    if (a - b).abs() > 1e-12 * a.max(b) {
        return Err(Error::RateMismatch { left: a, right: b });
    }
    Ok(())
}

/// Default antenna pass band.
pub const DEFAULT_BAND_LO: f64 = 0.7e9;
pub const DEFAULT_BAND_HI: f64 = 2.7e9;
/// Nominal transition width of the front-end filter, Hz.
const BAND_TRANSITION: f64 = 0.3e9;
const BAND_ATTEN_DB: f64 = 60.0;

/// Linear-phase (odd-length, symmetric) Kaiser-windowed band-pass taps.
/// `f_lo = 0` degenerates to a low-pass.
pub fn bandpass_taps(f_lo: f64, f_hi: f64, sample_rate: f64) -> Result<Vec<f64>> {
    let nyquist = sample_rate / 2.0;
    if !(f_lo >= 0.0 && f_hi.is_finite()) {
        return Err(Error::invalid("f_lo", "must be non-negative"));
    }
    if f_lo >= f_hi {
        return Err(Error::invalid("f_lo", format!("must be below f_hi ({f_lo} ≥ {f_hi})")));
    }
    if f_hi >= nyquist {
        return Err(Error::invalid("f_hi", format!("must be below Nyquist ({f_hi} ≥ {nyquist})")));
    }
    let mut transition = BAND_TRANSITION.min(nyquist - f_hi);
    if f_lo > 0.0 {
        transition = transition.min(f_lo);
    }
    let d_omega = 2.0 * std::f64::consts::PI * transition / sample_rate;
    let mut len = ((BAND_ATTEN_DB - 7.95) / (2.285 * d_omega)).ceil() as usize + 1;
    if len.is_multiple_of(2) {
        len += 1;
    }
    let beta = dsp::kaiser_beta(BAND_ATTEN_DB);
    let half = (len - 1) as f64 / 2.0;
    let (lo, hi) = (f_lo / sample_rate, f_hi / sample_rate);
    Ok((0..len)
        .map(|k| {
            let t = k as f64 - half;
            let ideal = dsp::lowpass_kernel(t, hi) - if lo > 0.0 { dsp::lowpass_kernel(t, lo) } else { 0.0 };
            ideal * dsp::kaiser(t, half + 1.0, beta)
        })
        .collect())
}

/// Band-limits `w` to `[f_lo, f_hi]` with a linear-phase FIR. The output is the
/// full convolution, with `t0` moved back by the filter's group delay so
/// features stay at their original times.
pub fn bandpass_frontend(w: &SampledWaveform, f_lo: f64, f_hi: f64) -> Result<SampledWaveform> {
    let taps = bandpass_taps(f_lo, f_hi, w.sample_rate())?;
    let delay = (taps.len() - 1) as f64 / 2.0 / w.sample_rate();
    let y = dsp::convolve(w.samples(), &taps);
    SampledWaveform::new(y, w.sample_rate(), w.t0() - delay)
}

/// Applies the front end to a channel response, giving the antenna-inclusive channel.
pub fn bandlimit_channel(h: &ChannelResponse, f_lo: f64, f_hi: f64) -> Result<ChannelResponse> {
    let filtered = bandpass_frontend(h.impulse(), f_lo, f_hi)?;
    let window = filtered.duration().max(DEFAULT_CHANNEL_WINDOW);
    ChannelResponse::with_window(filtered, h.location_label(), h.scenario(), window)
}
