//! End-to-end link simulation: channel resolution, impulse sounding, pre-filter
//! construction, TR replay and metric extraction.
//!
//! Sounding chain: pulse at the AWG rate → power normalisation → upsampling to
//! the DSO rate → antenna band limiting → channel → averaged acquisition.
//! The TR replay goes through the same band-limited channel.

use crate::acquisition::{acquire, estimate_noise_floor, AcquisitionRecord, NoiseModel};
use crate::channel::{bandlimit_channel, convolve, load_channel, synth_channel, ChannelResponse, SynthChannelParams};
use crate::config::{ChannelSource, RunConfig};
use crate::error::{Error, Result};
use crate::metrics::MetricsReport;
use crate::rng::{derive_seed, domain};
use crate::time_reversal::{build_prefilter, tr_channel_clean, TrPrefilter};
use crate::waveform::{generate_impulse, normalize_power, resample, SampledWaveform, TimeWindow};

/// Builds the physical channel named by the config, on the DSO grid.
pub fn resolve_channel(cfg: &RunConfig) -> Result<ChannelResponse> {
    let params = match &cfg.channel {
        ChannelSource::Preset { name } => SynthChannelParams::preset(name, cfg.seed)
            .ok_or_else(|| Error::invalid("channel", format!("unknown preset `{name}`")))?,
        ChannelSource::Synthetic { params } => SynthChannelParams {
            seed: cfg.seed,
            ..params.clone()
        },
        ChannelSource::File { path } => {
            let h = load_channel(path)?;
            crate::channel::check_rates(h.sample_rate(), cfg.dso_rate)?;
            return Ok(h);
        }
    };
    synth_channel(&SynthChannelParams {
        sample_rate: cfg.dso_rate,
        ..params
    })
}

/// Channel including the antenna front end (identity when band limiting is off).
pub fn effective_channel(cfg: &RunConfig, h: &ChannelResponse) -> Result<ChannelResponse> {
    match cfg.band {
        Some(b) => bandlimit_channel(h, b.f_lo, b.f_hi),
        None => Ok(h.clone()),
    }
}

/// Sounding pulse at the AWG rate, normalised to the configured power.
pub fn sounding_pulse(cfg: &RunConfig) -> Result<SampledWaveform> {
    let raw = match cfg.impulse_spec() {
        Some(spec) => generate_impulse(&spec)?,
        None => SampledWaveform::unit_impulse(cfg.awg_rate, 0.0)?,
    };
    normalize_power(&raw, cfg.p_o, cfg.convention)
}

/// Zero-pads a received trace to the record window plus the quiet tail.
fn pad_record(cfg: &RunConfig, y: &SampledWaveform) -> SampledWaveform {
    let rate = y.sample_rate();
    let quiet = (cfg.quiet_tail * rate).round() as usize;
    let window = (cfg.record_window * rate).round() as usize;
    y.padded_to(window.max(y.len() + quiet))
}

pub fn sound_noise(cfg: &RunConfig) -> NoiseModel {
    NoiseModel {
        sigma: cfg.noise_sigma,
        seed: derive_seed(cfg.seed, domain::SOUND_NOISE, 0),
    }
}

pub fn tr_noise(cfg: &RunConfig) -> NoiseModel {
    NoiseModel {
        sigma: cfg.noise_sigma,
        seed: derive_seed(cfg.seed, domain::TR_NOISE, 0),
    }
}

/// Noise-free received sounding trace (before padding and noise).
pub fn sounding_clean(cfg: &RunConfig, h_eff: &ChannelResponse) -> Result<SampledWaveform> {
    let tx = resample(&sounding_pulse(cfg)?, cfg.dso_rate)?;
    convolve(&tx, h_eff)
}

/// Direct-channel measurement: the averaged record the pre-filter is built from.
pub fn sound(cfg: &RunConfig, h_eff: &ChannelResponse) -> Result<AcquisitionRecord> {
    let clean = pad_record(cfg, &sounding_clean(cfg, h_eff)?);
    acquire(&clean, sound_noise(cfg), cfg.n_avg)
}

#[derive(Debug, Clone)]
pub struct TrRun {
    pub prefilter: TrPrefilter,
    pub record: AcquisitionRecord,
}

/// Builds the pre-filter from `sounding` and replays it through `h_eff`.
pub fn time_reverse(cfg: &RunConfig, sounding: &AcquisitionRecord, h_eff: &ChannelResponse) -> Result<TrRun> {
    let prefilter = build_prefilter(sounding, &cfg.truncation, cfg.awg_rate, cfg.p_o, cfg.convention)?;
    let clean = pad_record(cfg, &tr_channel_clean(&prefilter, h_eff)?);
    let record = acquire(&clean, tr_noise(cfg), cfg.n_avg)?;
    Ok(TrRun { prefilter, record })
}

/// Mean squared amplitude over the final `quiet_tail` of a record.
pub fn record_noise_floor(cfg: &RunConfig, rec: &AcquisitionRecord) -> Result<f64> {
    let w = &rec.averaged;
    let end = w.t0() + w.duration();
    let tail = cfg.quiet_tail.min(w.duration());
    estimate_noise_floor(rec, TimeWindow { start: end - tail, end })
}

pub fn report(cfg: &RunConfig, tr: &AcquisitionRecord, direct: &AcquisitionRecord) -> Result<MetricsReport> {
    MetricsReport::compute(&tr.averaged, &direct.averaged, cfg.mainlobe_halfwidth(), cfg.length_threshold)
}

#[derive(Debug, Clone)]
pub struct RunOutput {
    pub channel: ChannelResponse,
    pub effective: ChannelResponse,
    pub sounding: AcquisitionRecord,
    pub tr: TrRun,
    pub report: MetricsReport,
    /// Noise floor of the TR record's quiet tail, V².
    pub noise_floor: f64,
}

/// Sound, time-reverse and measure in one go.
pub fn run(cfg: &RunConfig) -> Result<RunOutput> {
    cfg.validate()?;
    let channel = resolve_channel(cfg)?;
    let effective = effective_channel(cfg, &channel)?;
    let sounding = sound(cfg, &effective)?;
    let tr = time_reverse(cfg, &sounding, &effective)?;
    let report = report(cfg, &tr.record, &sounding)?;
    let noise_floor = record_noise_floor(cfg, &tr.record)?;
    Ok(RunOutput {
        channel,
        effective,
        sounding,
        tr,
        report,
        noise_floor,
    })
}
