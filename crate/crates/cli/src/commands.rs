//! `sound`, `tr`, `demo-paper` and `config init`.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use truwb_core::config::ChannelSource;
use truwb_core::metrics::{compare_scenarios, ComparisonSummary, MetricsReport};
use truwb_core::pipeline::{self, TrRun};
use truwb_core::{effective_length, pdp, rms_delay_spread, AcquisitionRecord, ChannelResponse, RunConfig};

use crate::output::{self, Layout};
use crate::{CliError, CliResult};

/// Seed used by `demo-paper` unless `--seed` is given. Chosen from a scan of
/// seeds 1..100 at the default noise level, where the cross-polar sidelobe
/// ratio beats the co-polar one in 96 cases; seed 1 is one of them.
pub const DEMO_SEED: u64 = 1;

/// Command-line overrides layered over a config file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub config: Option<PathBuf>,
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
    pub channel: Option<String>,
}

impl Overrides {
    pub fn resolve(&self) -> CliResult<RunConfig> {
        let mut cfg = match &self.config {
            Some(path) => output::load_config(path)?,
            None => RunConfig::default(),
        };
        self.apply(&mut cfg);
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn apply(&self, cfg: &mut RunConfig) {
        if let Some(seed) = self.seed {
            cfg.seed = seed;
        }
        if let Some(out) = &self.out {
            cfg.output_dir = out.clone();
        }
        if let Some(ch) = &self.channel {
            cfg.channel = ChannelSource::from_arg(ch);
        }
    }
}

#[derive(Debug, Clone)]
pub struct SoundOutcome {
    pub channel: ChannelResponse,
    pub record: AcquisitionRecord,
    pub effective_length_s: f64,
    pub rms_delay_spread_s: f64,
    pub noise_floor: f64,
}

fn sounding_summary(cfg: &RunConfig, s: &SoundOutcome) -> String {
    let w = &s.record.averaged;
    let mut out = String::new();
    let _ = writeln!(out, "channel={}", cfg.channel.label());
    let _ = writeln!(out, "seed={}", cfg.seed);
    let _ = writeln!(out, "n_avg={}", cfg.n_avg);
    let _ = writeln!(out, "noise_sigma_v={}", cfg.noise_sigma);
    let _ = writeln!(out, "sample_rate_hz={}", w.sample_rate());
    let _ = writeln!(out, "samples={}", w.len());
    let _ = writeln!(out, "channel_energy={}", s.channel.tap_energy());
    let _ = writeln!(out, "record_energy={}", w.energy());
    let _ = writeln!(out, "peak_power={}", w.peak_abs().powi(2));
    let _ = writeln!(out, "effective_length_s={}", s.effective_length_s);
    let _ = writeln!(out, "rms_delay_spread_s={}", s.rms_delay_spread_s);
    let _ = writeln!(out, "noise_floor_v2={}", s.noise_floor);
    out
}

/// Sounds the configured channel and writes the record, its PDP, the channel
/// taps and a summary into the output directory.
pub fn cmd_sound(cfg: &RunConfig) -> CliResult<SoundOutcome> {
    cfg.validate()?;
    let channel = pipeline::resolve_channel(cfg)?;
    let effective = pipeline::effective_channel(cfg, &channel)?;
    let record = pipeline::sound(cfg, &effective)?;
    let p = pdp(&record.averaged);
    let outcome = SoundOutcome {
        effective_length_s: effective_length(&p, cfg.length_threshold)?,
        rms_delay_spread_s: rms_delay_spread(&p)?,
        noise_floor: pipeline::record_noise_floor(cfg, &record)?,
        channel,
        record,
    };

    let layout = Layout::new(&cfg.output_dir);
    output::ensure_dir(&layout.dir)?;
    output::write_trace(&layout.sounding(), &outcome.record.averaged)?;
    output::write_trace(&layout.channel(), outcome.channel.impulse())?;
    output::write_text(&layout.sounding_pdp(), &output::pdp_csv(&outcome.record.averaged))?;
    output::write_text(&layout.sounding_summary(), &sounding_summary(cfg, &outcome))?;
    Ok(outcome)
}

#[derive(Debug, Clone)]
pub struct TrOutcome {
    pub run: TrRun,
    pub report: MetricsReport,
    pub noise_floor: f64,
}

fn tr_report_text(cfg: &RunConfig, t: &TrOutcome) -> String {
    let pf = &t.run.prefilter;
    let mut out = t.report.to_key_value();
    let _ = writeln!(out, "noise_floor_v2={}", t.noise_floor);
    let _ = writeln!(out, "prefilter_gain_a={}", pf.gain_a);
    let _ = writeln!(out, "prefilter_window_start_s={}", pf.window.start);
    let _ = writeln!(out, "prefilter_window_end_s={}", pf.window.end);
    let _ = writeln!(out, "prefilter_samples={}", pf.waveform.len());
    let _ = writeln!(out, "prefilter_rate_hz={}", pf.target_rate);
    let _ = writeln!(out, "channel={}", cfg.channel.label());
    let _ = writeln!(out, "seed={}", cfg.seed);
    out
}

/// Builds the pre-filter from a saved sounding record, replays it through the
/// configured channel and writes the report.
pub fn cmd_tr(cfg: &RunConfig, record_path: Option<&Path>) -> CliResult<TrOutcome> {
    cfg.validate()?;
    let layout = Layout::new(&cfg.output_dir);
    let path = record_path.map_or_else(|| layout.sounding(), Path::to_path_buf);
    let trace = output::read_trace(&path)?;
    let sounding = AcquisitionRecord::from_trace(trace, cfg.n_avg, pipeline::sound_noise(cfg))
        .map_err(|e| CliError::io(path.display(), e))?;

    let channel = pipeline::resolve_channel(cfg)?;
    let effective = pipeline::effective_channel(cfg, &channel)?;
    let run = pipeline::time_reverse(cfg, &sounding, &effective)?;
    let report = pipeline::report(cfg, &run.record, &sounding)?;
    let noise_floor = pipeline::record_noise_floor(cfg, &run.record)?;
    let outcome = TrOutcome {
        run,
        report,
        noise_floor,
    };

    output::ensure_dir(&layout.dir)?;
    output::write_trace(&layout.prefilter(), &outcome.run.prefilter.waveform)?;
    output::write_trace(&layout.tr(), &outcome.run.record.averaged)?;
    output::write_text(&layout.tr_pdp(), &output::pdp_csv(&outcome.run.record.averaged))?;
    output::write_text(&layout.report_txt(), &tr_report_text(cfg, &outcome))?;
    output::write_text(&layout.report_csv(), &output::report_csv(&outcome.report))?;
    Ok(outcome)
}

pub const DEMO_NOTE: &str = "\
# The measured reference values (focusing gain 7.8 dB, strongest sidelobes
# -5.3 dB co-polar and -11.5 dB cross-polar) belong to one physical indoor
# channel. Synthetic presets reproduce the trend only: lower sidelobes and
# shorter delay spread with cross-polarised antennas.
";

#[derive(Debug, Clone)]
pub struct DemoOutcome {
    pub co: MetricsReport,
    pub cross: MetricsReport,
    pub summary: ComparisonSummary,
    pub text: String,
}

fn demo_text(seed: u64, co: &MetricsReport, cross: &MetricsReport, cmp: &ComparisonSummary) -> String {
    let mut out = String::from(DEMO_NOTE);
    let _ = writeln!(out, "seed={seed}");
    let _ = writeln!(out, "{:<28} {:>32} {:>32}", "metric", "co_polar", "cross_polar");
    let pairs = co.to_key_value();
    let cross_kv = cross.to_key_value();
    for (a, b) in pairs.lines().zip(cross_kv.lines()) {
        let (k, va) = a.split_once('=').unwrap_or((a, ""));
        let vb = b.split_once('=').map_or("", |(_, v)| v);
        let _ = writeln!(out, "{k:<28} {va:>32} {vb:>32}");
    }
    out.push_str(&cmp.to_key_value());
    let _ = writeln!(out, "trend_reproduced={}", cmp.cross_sidelobes_lower);
    out
}

/// Runs the co- and cross-polar presets with the same seed and writes both
/// reports plus a side-by-side comparison.
pub fn cmd_demo_paper(base: &RunConfig) -> CliResult<DemoOutcome> {
    let mut reports = Vec::with_capacity(2);
    for name in ["co_polar", "cross_polar"] {
        let cfg = RunConfig {
            channel: ChannelSource::Preset { name: name.into() },
            output_dir: base.output_dir.join(name),
            ..base.clone()
        };
        cmd_sound(&cfg)?;
        reports.push(cmd_tr(&cfg, None)?.report);
    }
    let cross = reports.pop().expect("two reports");
    let co = reports.pop().expect("two reports");
    let summary = compare_scenarios(&co, &cross);
    let text = demo_text(base.seed, &co, &cross, &summary);
    output::write_text(&base.output_dir.join("demo_summary.txt"), &text)?;
    Ok(DemoOutcome {
        co,
        cross,
        summary,
        text,
    })
}

/// Writes the fully explicit default config to `<out>/config.json`.
pub fn cmd_config_init(cfg: &RunConfig) -> CliResult<PathBuf> {
    let layout = Layout::new(&cfg.output_dir);
    output::ensure_dir(&layout.dir)?;
    let path = layout.config();
    output::write_text(&path, &output::config_json(cfg))?;
    Ok(path)
}
