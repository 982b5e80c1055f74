//! Run configuration. Every field has an explicit default so a serialised
//! config fully describes a run.

use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use crate::channel::{SynthChannelParams, DEFAULT_BAND_HI, DEFAULT_BAND_LO, DEFAULT_CHANNEL_WINDOW, DEFAULT_DSO_RATE};
use crate::error::{Error, Result};
use crate::metrics::DEFAULT_LENGTH_THRESHOLD;
use crate::waveform::{ImpulseSpec, PowerConvention, TruncationPolicy};

/// Generator sample rate.
pub const DEFAULT_AWG_RATE: f64 = 5e9;
pub const DEFAULT_N_AVG: usize = 128;
/// Per-acquisition noise standard deviation, volts.
pub const DEFAULT_NOISE_SIGMA: f64 = 5e-3;
/// Burst energy both sounding pulse and pre-filter are normalised to, V²·s.
pub const DEFAULT_P_O: f64 = 1e-10;
/// Signal-free tail appended to every record for noise-floor estimation.
pub const DEFAULT_QUIET_TAIL: f64 = 100e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PulseConfig {
    /// Gaussian-edged impulse generated at the AWG rate.
    Gaussian {
        rise_time: f64,
        amplitude_pp: f64,
        duration: f64,
    },
    /// A single sample at the AWG rate (ideal impulse sounding).
    UnitImpulse,
}

impl Default for PulseConfig {
    fn default() -> Self {
        let spec = ImpulseSpec::default();
        PulseConfig::Gaussian {
            rise_time: spec.rise_time,
            amplitude_pp: spec.amplitude_pp,
            duration: spec.duration,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ChannelSource {
    /// `co_polar` or `cross_polar`, seeded from the run seed.
    Preset { name: String },
    /// Explicit synthesis parameters; the seed field is replaced by the run seed.
    Synthetic { params: SynthChannelParams },
    /// Trace file (binary or CSV) sampled at the DSO rate.
    File { path: PathBuf },
}

impl Default for ChannelSource {
    fn default() -> Self {
        ChannelSource::Preset {
            name: "co_polar".into(),
        }
    }
}

impl ChannelSource {
    /// Parses a `--channel` argument: a preset name, otherwise a file path.
    pub fn from_arg(arg: &str) -> Self {
        if SynthChannelParams::preset(arg, 0).is_some() {
            ChannelSource::Preset { name: arg.to_string() }
        } else {
            ChannelSource::File { path: arg.into() }
        }
    }

    pub fn label(&self) -> String {
        match self {
            ChannelSource::Preset { name } => name.clone(),
            ChannelSource::Synthetic { params } => params.scenario.as_str().to_string(),
            ChannelSource::File { path } => path.display().to_string(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Band {
    pub f_lo: f64,
    pub f_hi: f64,
}

impl Default for Band {
    fn default() -> Self {
        Self {
            f_lo: DEFAULT_BAND_LO,
            f_hi: DEFAULT_BAND_HI,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RunConfig {
    pub pulse: PulseConfig,
    pub channel: ChannelSource,
    pub noise_sigma: f64,
    pub n_avg: usize,
    pub truncation: TruncationPolicy,
    pub convention: PowerConvention,
    pub p_o: f64,
    pub awg_rate: f64,
    pub dso_rate: f64,
    /// Antenna pass band; `null` disables band limiting.
    pub band: Option<Band>,
    /// Minimum record length, seconds.
    pub record_window: f64,
    /// Signal-free tail appended after the signal, seconds.
    pub quiet_tail: f64,
    /// Main-lobe half-width for the sidelobe metric; `null` picks 1/bandwidth,
    /// or half a sample when band limiting is off.
    pub mainlobe_halfwidth: Option<f64>,
    pub length_threshold: f64,
    pub seed: u64,
    pub output_dir: PathBuf,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            pulse: PulseConfig::default(),
            channel: ChannelSource::default(),
            noise_sigma: DEFAULT_NOISE_SIGMA,
            n_avg: DEFAULT_N_AVG,
            truncation: TruncationPolicy::default(),
            convention: PowerConvention::EqualEnergy,
            p_o: DEFAULT_P_O,
            awg_rate: DEFAULT_AWG_RATE,
            dso_rate: DEFAULT_DSO_RATE,
            band: Some(Band::default()),
            record_window: DEFAULT_CHANNEL_WINDOW,
            quiet_tail: DEFAULT_QUIET_TAIL,
            mainlobe_halfwidth: None,
            length_threshold: DEFAULT_LENGTH_THRESHOLD,
            seed: 1,
            output_dir: PathBuf::from("out"),
        }
    }
}

impl RunConfig {
    pub fn impulse_spec(&self) -> Option<ImpulseSpec> {
        match self.pulse {
            PulseConfig::Gaussian {
                rise_time,
                amplitude_pp,
                duration,
            } => Some(ImpulseSpec {
                rise_time,
                amplitude_pp,
                sample_rate: self.awg_rate,
                duration,
            }),
            PulseConfig::UnitImpulse => None,
        }
    }

    pub fn mainlobe_halfwidth(&self) -> f64 {
        match (self.mainlobe_halfwidth, self.band) {
            (Some(hw), _) => hw,
            (None, Some(b)) => crate::metrics::default_mainlobe_halfwidth(b.f_lo, b.f_hi),
            (None, None) => 0.5 / self.dso_rate,
        }
    }

    /// Checks every field; errors name the offending field.
    pub fn validate(&self) -> Result<()> {
        let positive = |v: f64| v.is_finite() && v > 0.0;
        if !positive(self.awg_rate) {
            return Err(Error::invalid("awg_rate", "must be positive"));
        }
        if !positive(self.dso_rate) {
            return Err(Error::invalid("dso_rate", "must be positive"));
        }
        if self.n_avg == 0 {
            return Err(Error::invalid("n_avg", "must be at least 1"));
        }
        if !(self.noise_sigma.is_finite() && self.noise_sigma >= 0.0) {
            return Err(Error::invalid("noise_sigma", "must be non-negative"));
        }
        if !positive(self.p_o) {
            return Err(Error::invalid("p_o", "must be positive"));
        }
        if !(self.record_window.is_finite() && self.record_window >= 0.0) {
            return Err(Error::invalid("record_window", "must be non-negative"));
        }
        if !(self.quiet_tail.is_finite() && self.quiet_tail >= 0.0) {
            return Err(Error::invalid("quiet_tail", "must be non-negative"));
        }
        if !(self.length_threshold > 0.0 && self.length_threshold < 1.0) {
            return Err(Error::invalid("length_threshold", "must lie in (0, 1)"));
        }
        if let Some(hw) = self.mainlobe_halfwidth {
            if !positive(hw) {
                return Err(Error::invalid("mainlobe_halfwidth", "must be positive"));
            }
        }
        self.truncation.validate()?;
        if let Some(spec) = self.impulse_spec() {
            spec.validate()?;
        }
        if let Some(b) = self.band {
            if !(b.f_lo >= 0.0 && b.f_lo < b.f_hi) {
                return Err(Error::invalid("band", "need 0 ≤ f_lo < f_hi"));
            }
            if b.f_hi >= self.dso_rate / 2.0 {
                return Err(Error::invalid("band", "f_hi must be below half the DSO rate"));
            }
        }
        match &self.channel {
            ChannelSource::Preset { name } => {
                if SynthChannelParams::preset(name, 0).is_none() {
                    return Err(Error::invalid("channel", format!("unknown preset `{name}`")));
                }
            }
            ChannelSource::Synthetic { params } => params.validate()?,
            ChannelSource::File { .. } => {}
        }
        Ok(())
    }
}
