//! Time-reversal ultra-wideband link simulation and analysis.
//!
//! The crate reproduces a TR measurement chain in software: an impulse is
//! sounded through a multipath channel and captured with averaging, the
//! captured response is time-reversed into a transmit pre-filter, the
//! pre-filter is replayed through the channel, and focusing gain, energy gain,
//! sidelobe level and delay-spread statistics are extracted.

pub mod acquisition;
pub mod channel;
pub mod config;
pub mod dsp;
pub mod error;
pub mod metrics;
pub mod pipeline;
pub mod rng;
pub mod time_reversal;
pub mod trace_io;
pub mod waveform;

pub use acquisition::{acquire, estimate_noise_floor, AcquisitionRecord, NoiseModel};
pub use channel::{
    bandpass_frontend, convolve, load_channel, save_channel, synth_channel, ChannelResponse, Scenario,
    SynthChannelParams,
};
pub use config::RunConfig;
pub use error::{Error, Result};
pub use metrics::{
    compare_scenarios, effective_length, energy_gain, focusing_gain, pdp, rms_delay_spread, sidelobe_ratio,
    ComparisonSummary, MetricsReport, Pdp, SidelobeRatio,
};
pub use time_reversal::{build_prefilter, ideal_autocorrelation, tr_channel_response, TrPrefilter};
pub use waveform::{
    generate_impulse, normalize_power, resample, truncate_window, ImpulseSpec, PowerConvention, SampledWaveform,
    TimeWindow, TruncationPolicy,
};
