//! Figures of merit for direct and time-reversed channel traces.
//!
//! All ratios are reported in dB. Ratios whose denominator would be zero are
//! surfaced as errors or as [`SidelobeRatio::NoSidelobe`], never as infinities.

use std::fmt::{self, Write as _};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::waveform::SampledWaveform;

/// Default fraction of the peak power for the effective-length criterion.
pub const DEFAULT_LENGTH_THRESHOLD: f64 = 0.1;

/// Instantaneous power delay profile |s(τ)|².
#[derive(Debug, Clone, PartialEq)]
pub struct Pdp {
    pub power: Vec<f64>,
    pub sample_rate: f64,
    pub t0: f64,
}

impl Pdp {
    pub fn delay_at(&self, k: usize) -> f64 {
        self.t0 + k as f64 / self.sample_rate
    }

    /// Σ power / rate.
    pub fn energy(&self) -> f64 {
        self.power.iter().sum::<f64>() / self.sample_rate
    }

    fn max(&self) -> f64 {
        self.power.iter().cloned().fold(0.0, f64::max)
    }
}

pub fn pdp(w: &SampledWaveform) -> Pdp {
    Pdp {
        power: w.samples().iter().map(|s| s * s).collect(),
        sample_rate: w.sample_rate(),
        t0: w.t0(),
    }
}

/// Index of the largest |s|²; earliest wins on ties.
pub fn peak_index(w: &SampledWaveform) -> usize {
    let mut best = 0;
    let mut best_p = f64::NEG_INFINITY;
    for (k, s) in w.samples().iter().enumerate() {
        let p = s * s;
        if p > best_p {
            best = k;
            best_p = p;
        }
    }
    best
}

fn peak_power(w: &SampledWaveform) -> f64 {
    let s = w.samples()[peak_index(w)];
    s * s
}

/// 10·log10(max|tr|² / max|direct|²).
pub fn focusing_gain(tr: &SampledWaveform, direct: &SampledWaveform) -> Result<f64> {
    let (num, den) = (peak_power(tr), peak_power(direct));
    if den == 0.0 || num == 0.0 {
        return Err(Error::ZeroEnergy);
    }
    Ok(10.0 * (num / den).log10())
}

/// 10·log10(energy(tr) / energy(direct)).
pub fn energy_gain(tr: &SampledWaveform, direct: &SampledWaveform) -> Result<f64> {
    let (num, den) = (tr.energy(), direct.energy());
    if den == 0.0 || num == 0.0 {
        return Err(Error::ZeroEnergy);
    }
    Ok(10.0 * (num / den).log10())
}

/// Peak-to-strongest-sidelobe power ratio.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SidelobeRatio {
    Db(f64),
    /// Nothing (or only zeros) outside the main lobe.
    NoSidelobe,
}

impl SidelobeRatio {
    pub fn db(&self) -> Option<f64> {
        match *self {
            SidelobeRatio::Db(v) => Some(v),
            SidelobeRatio::NoSidelobe => None,
        }
    }
}

impl fmt::Display for SidelobeRatio {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SidelobeRatio::Db(v) => write!(f, "{v}"),
            SidelobeRatio::NoSidelobe => f.write_str("no_sidelobe"),
        }
    }
}

impl std::str::FromStr for SidelobeRatio {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s.trim() {
            "no_sidelobe" => Ok(SidelobeRatio::NoSidelobe),
            other => other
                .parse::<f64>()
                .map(SidelobeRatio::Db)
                .map_err(|_| format!("bad sidelobe ratio `{other}`")),
        }
    }
}

/// Main-lobe half-width used when none is given: the reciprocal bandwidth.
pub fn default_mainlobe_halfwidth(f_lo: f64, f_hi: f64) -> f64 {
    1.0 / (f_hi - f_lo)
}

/// 10·log10(peak power / max power outside ±`mainlobe_halfwidth` of the peak).
pub fn sidelobe_ratio(tr: &SampledWaveform, mainlobe_halfwidth: f64) -> Result<SidelobeRatio> {
    if !(mainlobe_halfwidth.is_finite() && mainlobe_halfwidth > 0.0) {
        return Err(Error::invalid("mainlobe_halfwidth", "must be positive"));
    }
    let k = peak_index(tr);
    let peak = peak_power(tr);
    if peak == 0.0 {
        return Err(Error::ZeroEnergy);
    }
    // samples strictly further than the half-width (with rounding slack) are sidelobes
    let reach = (mainlobe_halfwidth * tr.sample_rate() * (1.0 + 1e-12)).floor() as usize;
    let s = tr.samples();
    let lo = k.saturating_sub(reach);
    let hi = (k + reach).min(s.len() - 1);
    let outside = s[..lo].iter().chain(&s[hi + 1..]).map(|v| v * v).fold(0.0, f64::max);
    if outside == 0.0 {
        return Ok(SidelobeRatio::NoSidelobe);
    }
    Ok(SidelobeRatio::Db(10.0 * (peak / outside).log10()))
}

/// Span between the first and last samples whose power exceeds
/// `threshold_fraction` of the maximum.
pub fn effective_length(p: &Pdp, threshold_fraction: f64) -> Result<f64> {
    let max = p.max();
    if max == 0.0 {
        return Err(Error::ZeroEnergy);
    }
    let level = threshold_fraction * max;
    let first = p.power.iter().position(|&v| v > level);
    let last = p.power.iter().rposition(|&v| v > level);
    Ok(match (first, last) {
        (Some(a), Some(b)) => (b - a) as f64 / p.sample_rate,
        // threshold ≥ 1: nothing strictly above
        _ => 0.0,
    })
}

/// Power-weighted standard deviation of delay.
pub fn rms_delay_spread(p: &Pdp) -> Result<f64> {
    let total: f64 = p.power.iter().sum();
    if total == 0.0 {
        return Err(Error::ZeroEnergy);
    }
    let mean = p.power.iter().enumerate().map(|(k, v)| v * k as f64).sum::<f64>() / total;
    let var = p
        .power
        .iter()
        .enumerate()
        .map(|(k, v)| v * (k as f64 - mean).powi(2))
        .sum::<f64>()
        / total;
    Ok(var.max(0.0).sqrt() / p.sample_rate)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub focusing_gain_db: f64,
    pub energy_gain_db: f64,
    pub peak_to_sidelobe_db: SidelobeRatio,
    /// Effective length of the TR equivalent channel.
    pub effective_length_s: f64,
    /// RMS delay spread of the TR equivalent channel.
    pub rms_delay_spread_s: f64,
    /// Peak |s|² of the TR equivalent channel, V².
    pub peak_power: f64,
    /// Energy of the TR equivalent channel, V²·s.
    pub total_energy: f64,
    pub direct_effective_length_s: f64,
    pub direct_rms_delay_spread_s: f64,
    /// Delay of the TR peak on the trace's own time axis.
    pub peak_delay_s: f64,
    pub mainlobe_halfwidth_s: f64,
}

/// Column order of [`MetricsReport::csv_row`].
pub const REPORT_FIELDS: [&str; 11] = [
    "focusing_gain_db",
    "energy_gain_db",
    "peak_to_sidelobe_db",
    "effective_length_s",
    "rms_delay_spread_s",
    "peak_power",
    "total_energy",
    "direct_effective_length_s",
    "direct_rms_delay_spread_s",
    "peak_delay_s",
    "mainlobe_halfwidth_s",
];

impl MetricsReport {
    /// Computes every metric from a TR trace and the direct trace it is compared against.
    pub fn compute(
        tr: &SampledWaveform,
        direct: &SampledWaveform,
        mainlobe_halfwidth: f64,
        length_threshold: f64,
    ) -> Result<Self> {
        let tr_pdp = pdp(tr);
        let direct_pdp = pdp(direct);
        Ok(Self {
            focusing_gain_db: focusing_gain(tr, direct)?,
            energy_gain_db: energy_gain(tr, direct)?,
            peak_to_sidelobe_db: sidelobe_ratio(tr, mainlobe_halfwidth)?,
            effective_length_s: effective_length(&tr_pdp, length_threshold)?,
            rms_delay_spread_s: rms_delay_spread(&tr_pdp)?,
            peak_power: peak_power(tr),
            total_energy: tr.energy(),
            direct_effective_length_s: effective_length(&direct_pdp, length_threshold)?,
            direct_rms_delay_spread_s: rms_delay_spread(&direct_pdp)?,
            peak_delay_s: tr.time_at(peak_index(tr)),
            mainlobe_halfwidth_s: mainlobe_halfwidth,
        })
    }

    fn values(&self) -> [String; 11] {
        [
            self.focusing_gain_db.to_string(),
            self.energy_gain_db.to_string(),
            self.peak_to_sidelobe_db.to_string(),
            self.effective_length_s.to_string(),
            self.rms_delay_spread_s.to_string(),
            self.peak_power.to_string(),
            self.total_energy.to_string(),
            self.direct_effective_length_s.to_string(),
            self.direct_rms_delay_spread_s.to_string(),
            self.peak_delay_s.to_string(),
            self.mainlobe_halfwidth_s.to_string(),
        ]
    }

    /// `key=value` lines in [`REPORT_FIELDS`] order.
    pub fn to_key_value(&self) -> String {
        let mut out = String::new();
        for (k, v) in REPORT_FIELDS.iter().zip(self.values()) {
            let _ = writeln!(out, "{k}={v}");
        }
        out
    }

    pub fn from_key_value(text: &str) -> std::result::Result<Self, String> {
        let mut values: Vec<Option<String>> = vec![None; REPORT_FIELDS.len()];
        for line in text.lines() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let Some((k, v)) = line.split_once('=') else {
                continue;
            };
            if let Some(i) = REPORT_FIELDS.iter().position(|f| *f == k.trim()) {
                values[i] = Some(v.trim().to_string());
            }
        }
        let values: Vec<String> = values
            .into_iter()
            .zip(REPORT_FIELDS)
            .map(|(v, k)| v.ok_or_else(|| format!("missing field `{k}`")))
            .collect::<std::result::Result<_, _>>()?;
        Self::from_values(&values)
    }

    pub fn csv_header() -> String {
        REPORT_FIELDS.join(",")
    }

    pub fn csv_row(&self) -> String {
        self.values().join(",")
    }

    pub fn from_csv_row(row: &str) -> std::result::Result<Self, String> {
        let values: Vec<String> = row.split(',').map(|s| s.trim().to_string()).collect();
        if values.len() != REPORT_FIELDS.len() {
            return Err(format!("expected {} columns, got {}", REPORT_FIELDS.len(), values.len()));
        }
        Self::from_values(&values)
    }

    fn from_values(v: &[String]) -> std::result::Result<Self, String> {
        let num = |i: usize| -> std::result::Result<f64, String> {
            v[i].parse::<f64>()
                .map_err(|_| format!("field `{}`: cannot parse `{}`", REPORT_FIELDS[i], v[i]))
        };
        Ok(Self {
            focusing_gain_db: num(0)?,
            energy_gain_db: num(1)?,
            peak_to_sidelobe_db: v[2].parse()?,
            effective_length_s: num(3)?,
            rms_delay_spread_s: num(4)?,
            peak_power: num(5)?,
            total_energy: num(6)?,
            direct_effective_length_s: num(7)?,
            direct_rms_delay_spread_s: num(8)?,
            peak_delay_s: num(9)?,
            mainlobe_halfwidth_s: num(10)?,
        })
    }
}

/// Cross-polar minus co-polar differences.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonSummary {
    /// cross F.G − co F.G, dB.
    pub delta_focusing_gain_db: f64,
    /// cross − co peak-to-sidelobe, dB; positive means lower cross-polar sidelobes.
    /// `None` when either side has no sidelobe.
    pub delta_sidelobe_db: Option<f64>,
    /// cross − co energy gain, dB.
    pub delta_energy_gain_db: f64,
    /// True when the cross-polar peak-to-sidelobe ratio exceeds the co-polar one.
    pub cross_sidelobes_lower: bool,
}

pub fn compare_scenarios(co: &MetricsReport, cross: &MetricsReport) -> ComparisonSummary {
    let delta_sidelobe_db = match (co.peak_to_sidelobe_db, cross.peak_to_sidelobe_db) {
        (SidelobeRatio::Db(a), SidelobeRatio::Db(b)) => Some(b - a),
        _ => None,
    };
    let cross_sidelobes_lower = match (co.peak_to_sidelobe_db, cross.peak_to_sidelobe_db) {
        (SidelobeRatio::Db(a), SidelobeRatio::Db(b)) => b > a,
        (SidelobeRatio::Db(_), SidelobeRatio::NoSidelobe) => true,
        _ => false,
    };
    ComparisonSummary {
        delta_focusing_gain_db: cross.focusing_gain_db - co.focusing_gain_db,
        delta_sidelobe_db,
        delta_energy_gain_db: cross.energy_gain_db - co.energy_gain_db,
        cross_sidelobes_lower,
    }
}

impl ComparisonSummary {
    pub fn to_key_value(&self) -> String {
        let sidelobe = self
            .delta_sidelobe_db
            .map_or_else(|| "no_sidelobe".to_string(), |v| v.to_string());
        format!(
            "delta_focusing_gain_db={}\ndelta_sidelobe_db={}\ndelta_energy_gain_db={}\ncross_sidelobes_lower={}\n",
            self.delta_focusing_gain_db, sidelobe, self.delta_energy_gain_db, self.cross_sidelobes_lower
        )
    }
}
