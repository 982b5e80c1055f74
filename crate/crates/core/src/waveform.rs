//! Uniformly sampled real waveforms and the primitives the pre-filter path is
//! built from: impulse generation, resampling, truncation and power normalisation.

use serde::{Deserialize, Serialize};

use crate::dsp;
use crate::error::{Error, Result};

/// A uniformly sampled real amplitude trace (volts) with its time origin.
#[derive(Debug, Clone, PartialEq)]
pub struct SampledWaveform {
    samples: Vec<f64>,
    sample_rate: f64,
    t0: f64,
}

impl SampledWaveform {
    pub fn new(samples: Vec<f64>, sample_rate: f64, t0: f64) -> Result<Self> {
        if !(sample_rate.is_finite() && sample_rate > 0.0) {
            return Err(Error::invalid("sample_rate", format!("must be positive and finite, got {sample_rate}")));
        }
        if !t0.is_finite() {
            return Err(Error::invalid("t0", "must be finite"));
        }
        if samples.is_empty() {
            return Err(Error::EmptyWaveform);
        }
        if let Some(index) = samples.iter().position(|s| !s.is_finite()) {
            return Err(Error::NonFiniteSample { index });
        }
        Ok(Self {
            samples,
            sample_rate,
            t0,
        })
    }

    /// A single unit sample at `t0`.
    pub fn unit_impulse(sample_rate: f64, t0: f64) -> Result<Self> {
        Self::new(vec![1.0], sample_rate, t0)
    }

    /// Same rate and origin, new samples. Only used where the samples are
    /// known to be finite and non-empty.
    pub(crate) fn with_samples(&self, samples: Vec<f64>) -> Self {
        debug_assert!(!samples.is_empty());
        Self {
            samples,
            sample_rate: self.sample_rate,
            t0: self.t0,
        }
    }

    pub(crate) fn from_parts(samples: Vec<f64>, sample_rate: f64, t0: f64) -> Self {
        debug_assert!(!samples.is_empty() && sample_rate > 0.0);
        Self {
            samples,
            sample_rate,
            t0,
        }
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn into_samples(self) -> Vec<f64> {
        self.samples
    }

    pub fn sample_rate(&self) -> f64 {
        self.sample_rate
    }

    pub fn t0(&self) -> f64 {
        self.t0
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn sample_period(&self) -> f64 {
        1.0 / self.sample_rate
    }

    /// `len / sample_rate`.
    pub fn duration(&self) -> f64 {
        self.samples.len() as f64 / self.sample_rate
    }

    /// Time of sample `k`.
    pub fn time_at(&self, k: usize) -> f64 {
        self.t0 + k as f64 / self.sample_rate
    }

    /// Σ s² / sample_rate (V²·s).
    pub fn energy(&self) -> f64 {
        self.sum_of_squares() / self.sample_rate
    }

    pub fn sum_of_squares(&self) -> f64 {
        self.samples.iter().map(|s| s * s).sum()
    }

    /// Mean squared amplitude (V²).
    pub fn mean_power(&self) -> f64 {
        self.sum_of_squares() / self.samples.len() as f64
    }

    pub fn peak_abs(&self) -> f64 {
        self.samples.iter().fold(0.0, |m, s| m.max(s.abs()))
    }

    pub fn scaled(&self, factor: f64) -> Self {
        self.with_samples(self.samples.iter().map(|s| s * factor).collect())
    }

    pub fn with_t0(mut self, t0: f64) -> Self {
        self.t0 = t0;
        self
    }

    /// Sample order reversed; the time axis is re-anchored at `t0 = 0`.
    pub fn reversed(&self) -> Self {
        let mut samples = self.samples.clone();
        samples.reverse();
        Self::from_parts(samples, self.sample_rate, 0.0)
    }

    /// Zero-pads at the end so the trace spans at least `min_len` samples.
    pub fn padded_to(&self, min_len: usize) -> Self {
        let mut samples = self.samples.clone();
        if samples.len() < min_len {
            samples.resize(min_len, 0.0);
        }
        self.with_samples(samples)
    }
}

/// Parameters of the sounding impulse (arbitrary-waveform-generator stand-in).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ImpulseSpec {
    /// 10-90 % rise time, seconds.
    pub rise_time: f64,
    /// Peak-to-peak amplitude, volts.
    pub amplitude_pp: f64,
    pub sample_rate: f64,
    pub duration: f64,
}

impl Default for ImpulseSpec {
    fn default() -> Self {
        Self {
            rise_time: 230e-12,
            amplitude_pp: 1.0,
            sample_rate: 5e9,
            duration: 4e-9,
        }
    }
}

impl ImpulseSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.sample_rate.is_finite() && self.sample_rate > 0.0) {
            return Err(Error::invalid("sample_rate", "must be positive"));
        }
        if !(self.amplitude_pp.is_finite() && self.amplitude_pp > 0.0) {
            return Err(Error::invalid("amplitude_pp", "must be positive"));
        }
        if !(self.rise_time.is_finite() && self.rise_time > 0.0) {
            return Err(Error::invalid("rise_time", "must be positive"));
        }
        if self.rise_time * self.sample_rate <= 1.0 {
            return Err(Error::UnrepresentablePulse {
                rise_time: self.rise_time,
                sample_rate: self.sample_rate,
            });
        }
        if !(self.duration.is_finite() && self.duration >= 4.0 * self.rise_time) {
            return Err(Error::DurationTooShort {
                duration: self.duration,
                rise_time: self.rise_time,
            });
        }
        Ok(())
    }
}

/// Ratio between the 10-90 % rise time of a Gaussian edge and its standard deviation.
const GAUSS_RISE_PER_SIGMA: f64 = 1.686_972_590_366_014_6;

/// Fraction of the peak the pulse must have decayed to at both ends of the record.
const TAIL_FRACTION: f64 = 0.01;

/// Generates a unipolar Gaussian pulse whose 10-90 % edge equals `spec.rise_time`.
/// The peak sits on a sample, so the maximum is exactly `amplitude_pp / 2`.
pub fn generate_impulse(spec: &ImpulseSpec) -> Result<SampledWaveform> {
    spec.validate()?;
    let n = (spec.duration * spec.sample_rate).round() as usize + 1;
    let centre = n / 2;
    let sigma = spec.rise_time / GAUSS_RISE_PER_SIGMA;
    let peak = spec.amplitude_pp / 2.0;
    let samples: Vec<f64> = (0..n)
        .map(|k| {
            let t = (k as f64 - centre as f64) / spec.sample_rate;
            peak * (-(t * t) / (2.0 * sigma * sigma)).exp()
        })
        .collect();
    let tail = samples[0].max(samples[n - 1]);
    if tail > TAIL_FRACTION * peak {
        return Err(Error::DurationTooShort {
            duration: spec.duration,
            rise_time: spec.rise_time,
        });
    }
    SampledWaveform::new(samples, spec.sample_rate, 0.0)
}

/// 10-90 % rise time of the leading edge, linearly interpolated between samples.
/// Returns `None` when the trace never rises through both levels before its peak.
pub fn rise_time_10_90(w: &SampledWaveform) -> Option<f64> {
    let s = w.samples();
    let (peak_idx, peak) = s
        .iter()
        .enumerate()
        .fold((0, f64::NEG_INFINITY), |(bi, bv), (i, &v)| if v > bv { (i, v) } else { (bi, bv) });
    if peak <= 0.0 {
        return None;
    }
    let crossing = |level: f64| -> Option<f64> {
        let target = level * peak;
        (1..=peak_idx).find_map(|k| {
            let (a, b) = (s[k - 1], s[k]);
            (a < target && b >= target).then(|| (k - 1) as f64 + (target - a) / (b - a))
        })
    };
    let lo = crossing(0.1)?;
    let hi = crossing(0.9)?;
    Some((hi - lo) / w.sample_rate())
}

/// Low-pass cutoff of the resampling filter as a fraction of the lower of the two rates.
const RESAMPLE_CUTOFF: f64 = 0.45;
/// Kernel half-length in periods of the lower rate.
const RESAMPLE_HALF_PERIODS: f64 = 32.0;
const RESAMPLE_ATTEN_DB: f64 = 80.0;
/// Largest rational numerator for which a polyphase table is built.
const MAX_POLYPHASE_PHASES: u64 = 4096;

/// Band-limited resampling with a Kaiser-windowed sinc kernel. The low-pass
/// cutoff is `0.45·min(rate, target_rate)`, so decimation is anti-aliased.
/// Rational ratios use a precomputed polyphase bank; others evaluate the kernel
/// per output sample. The signal is taken as zero outside its support.
pub fn resample(w: &SampledWaveform, target_rate: f64) -> Result<SampledWaveform> {
    if !(target_rate.is_finite() && target_rate > 0.0) {
        return Err(Error::invalid("target_rate", format!("must be positive, got {target_rate}")));
    }
    let src_rate = w.sample_rate();
    if (target_rate - src_rate).abs() <= 1e-12 * src_rate {
        return Ok(w.clone());
    }
    let ratio = target_rate / src_rate;
    let n_out = ((w.len() as f64 * ratio).round() as usize).max(1);
    let fc = RESAMPLE_CUTOFF * ratio.min(1.0);
    let half = RESAMPLE_HALF_PERIODS * (1.0 / ratio).max(1.0);
    let beta = dsp::kaiser_beta(RESAMPLE_ATTEN_DB);
    let reach = half.ceil() as i64;
    let x = w.samples();

    let weights_at = |frac: f64| -> Vec<f64> {
        // offsets j = -reach..=reach relative to floor(position)
        let raw: Vec<f64> = (-reach..=reach)
            .map(|j| {
                let t = frac - j as f64;
                dsp::lowpass_kernel(t, fc) * dsp::kaiser(t, half, beta)
            })
            .collect();
        let sum: f64 = raw.iter().sum();
        raw.into_iter().map(|v| v / sum).collect()
    };

    let apply = |base: i64, weights: &[f64]| -> f64 {
        let mut acc = 0.0;
        for (j, wt) in (-reach..=reach).zip(weights) {
            let k = base + j;
            if k >= 0 && (k as usize) < x.len() {
                acc += x[k as usize] * wt;
            }
        }
        acc
    };

    let out: Vec<f64> = match rational_approx(ratio, MAX_POLYPHASE_PHASES) {
        Some((p, q)) => {
            // output n sits at input position n·q/p
            let bank: Vec<Vec<f64>> = (0..p).map(|phase| weights_at(phase as f64 / p as f64)).collect();
            (0..n_out as u64)
                .map(|n| {
                    let num = n * q;
                    apply((num / p) as i64, &bank[(num % p) as usize])
                })
                .collect()
        }
        None => (0..n_out)
            .map(|n| {
                let pos = n as f64 / ratio;
                let base = pos.floor();
                apply(base as i64, &weights_at(pos - base))
            })
            .collect(),
    };
    SampledWaveform::new(out, target_rate, w.t0())
}

/// Best rational p/q (p ≤ max_num) matching `ratio` to 1e-12 relative, via continued fractions.
fn rational_approx(ratio: f64, max_num: u64) -> Option<(u64, u64)> {
    let (mut h0, mut h1) = (0u64, 1u64);
    let (mut k0, mut k1) = (1u64, 0u64);
    let mut x = ratio;
    for _ in 0..64 {
        let a = x.floor();
        if a > u32::MAX as f64 {
            return None;
        }
        let a = a as u64;
        let h2 = a.checked_mul(h1)?.checked_add(h0)?;
        let k2 = a.checked_mul(k1)?.checked_add(k0)?;
        if h2 > max_num || k2 > max_num * 64 {
            return None;
        }
        if h2 > 0 && ((h2 as f64 / k2 as f64) - ratio).abs() <= 1e-12 * ratio {
            return Some((h2, k2));
        }
        (h0, h1, k0, k1) = (h1, h2, k1, k2);
        let frac = x - a as f64;
        if frac <= 0.0 {
            return None;
        }
        x = 1.0 / frac;
    }
    None
}

/// How the pre-filter source trace is cut before reversal.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum TruncationPolicy {
    /// Shortest contiguous interval holding at least `fraction` of the energy.
    /// `fraction = 1` keeps the whole trace.
    EnergyFraction { fraction: f64 },
    /// All samples with `t_start ≤ t ≤ t_end`.
    FixedWindow { t_start: f64, t_end: f64 },
    /// From the first to the last sample whose power exceeds `threshold · max power`.
    TapThreshold { threshold: f64 },
}

impl Default for TruncationPolicy {
    fn default() -> Self {
        TruncationPolicy::EnergyFraction { fraction: 0.99 }
    }
}

impl TruncationPolicy {
    pub fn validate(&self) -> Result<()> {
        match *self {
            TruncationPolicy::EnergyFraction { fraction } => {
                if !(fraction > 0.0 && fraction <= 1.0) {
                    return Err(Error::invalid("energy_fraction", format!("must lie in (0, 1], got {fraction}")));
                }
            }
            TruncationPolicy::FixedWindow { t_start, t_end } => {
                if !(t_start.is_finite() && t_end.is_finite() && t_start < t_end) {
                    return Err(Error::invalid("window", format!("need t_start < t_end, got [{t_start}, {t_end}]")));
                }
            }
            TruncationPolicy::TapThreshold { threshold } => {
                if !(threshold > 0.0 && threshold < 1.0) {
                    return Err(Error::invalid("threshold", format!("must lie in (0, 1), got {threshold}")));
                }
            }
        }
        Ok(())
    }
}

/// Time span covered by a truncated trace: `[start, end)` with
/// `end = start + samples / rate`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimeWindow {
    pub start: f64,
    pub end: f64,
}

impl TimeWindow {
    pub fn duration(&self) -> f64 {
        self.end - self.start
    }
}

/// Cuts `w` according to `policy`, returning the kept samples and their time span.
pub fn truncate_window(w: &SampledWaveform, policy: &TruncationPolicy) -> Result<(SampledWaveform, TimeWindow)> {
    policy.validate()?;
    let (first, last) = match *policy {
        TruncationPolicy::EnergyFraction { fraction } => {
            if fraction >= 1.0 {
                (0, w.len() - 1)
            } else {
                shortest_energy_window(w.samples(), fraction).ok_or(Error::ZeroEnergy)?
            }
        }
        TruncationPolicy::FixedWindow { t_start, t_end } => {
            let period = w.sample_period();
            let slack = 1e-9 * period;
            let first = ((t_start - w.t0()) * w.sample_rate() - slack * w.sample_rate()).ceil().max(0.0);
            let last = ((t_end - w.t0()) * w.sample_rate() + slack * w.sample_rate()).floor();
            if last < 0.0 || first > (w.len() - 1) as f64 || first > last {
                return Err(Error::WindowOutsideSupport {
                    start: t_start,
                    end: t_end,
                });
            }
            (first as usize, (last as usize).min(w.len() - 1))
        }
        TruncationPolicy::TapThreshold { threshold } => {
            let power: Vec<f64> = w.samples().iter().map(|s| s * s).collect();
            let max = power.iter().cloned().fold(0.0, f64::max);
            if max == 0.0 {
                return Err(Error::ZeroEnergy);
            }
            let level = threshold * max;
            let first = power.iter().position(|&p| p > level).unwrap_or(0);
            let last = power.iter().rposition(|&p| p > level).unwrap_or(first);
            (first, last)
        }
    };
    let kept = w.samples()[first..=last].to_vec();
    let start = w.time_at(first);
    let window = TimeWindow {
        start,
        end: start + kept.len() as f64 / w.sample_rate(),
    };
    Ok((SampledWaveform::from_parts(kept, w.sample_rate(), start), window))
}

/// Inclusive index range of the shortest run of samples carrying at least
/// `fraction` of the total energy. Earliest start wins among equal lengths.
fn shortest_energy_window(samples: &[f64], fraction: f64) -> Option<(usize, usize)> {
    let mut prefix = Vec::with_capacity(samples.len() + 1);
    prefix.push(0.0);
    let mut acc = 0.0;
    for s in samples {
        acc += s * s;
        prefix.push(acc);
    }
    let total = acc;
    if total <= 0.0 {
        return None;
    }
    let target = fraction * total;
    let mut best: Option<(usize, usize)> = None;
    let mut end = 0;
    for start in 0..samples.len() {
        if end < start {
            end = start;
        }
        while end < samples.len() && prefix[end + 1] - prefix[start] < target {
            end += 1;
        }
        if end == samples.len() {
            break;
        }
        if best.is_none_or(|(b0, b1)| end - start < b1 - b0) {
            best = Some((start, end));
        }
    }
    best
}

/// Which power quantity `normalize_power` pins to `P_o`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PowerConvention {
    /// Burst energy Σs²/rate equals `P_o` × 1 s.
    #[default]
    EqualEnergy,
    /// Mean squared amplitude over the record equals `P_o`.
    EqualAveragePower,
}

/// Scales `w` so its energy or mean power matches `p_o`.
pub fn normalize_power(w: &SampledWaveform, p_o: f64, convention: PowerConvention) -> Result<SampledWaveform> {
    normalize_power_with_gain(w, p_o, convention).map(|(w, _)| w)
}

/// As [`normalize_power`], also returning the applied (positive) scale factor.
pub fn normalize_power_with_gain(
    w: &SampledWaveform,
    p_o: f64,
    convention: PowerConvention,
) -> Result<(SampledWaveform, f64)> {
    if !(p_o.is_finite() && p_o > 0.0) {
        return Err(Error::invalid("p_o", format!("must be positive, got {p_o}")));
    }
    let current = match convention {
        PowerConvention::EqualEnergy => w.energy(),
        PowerConvention::EqualAveragePower => w.mean_power(),
    };
    if current == 0.0 {
        return Err(Error::ZeroEnergy);
    }
    let gain = (p_o / current).sqrt();
    Ok((w.scaled(gain), gain))
}
