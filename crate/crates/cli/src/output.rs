//! Files written by the commands and their readers.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use truwb_core::metrics::{pdp, MetricsReport};
use truwb_core::trace_io;
use truwb_core::{RunConfig, SampledWaveform};

use crate::{CliError, CliResult};

/// dB value written for zero power.
pub const POWER_DB_FLOOR: f64 = -300.0;
pub const PDP_HEADER: &str = "delay_ns,power_db";

pub fn ensure_dir(dir: &Path) -> CliResult<()> {
    fs::create_dir_all(dir).map_err(|e| CliError::io(dir.display(), e))
}

pub fn write_text(path: &Path, text: &str) -> CliResult<()> {
    fs::write(path, text).map_err(|e| CliError::io(path.display(), e))
}

pub fn read_text(path: &Path) -> CliResult<String> {
    fs::read_to_string(path).map_err(|e| CliError::io(path.display(), e))
}

pub fn write_trace(path: &Path, w: &SampledWaveform) -> CliResult<()> {
    trace_io::save_trace(path, w).map_err(|e| CliError::io(path.display(), e))
}

pub fn read_trace(path: &Path) -> CliResult<SampledWaveform> {
    trace_io::load_trace(path).map_err(|e| CliError::io(path.display(), e))
}

fn power_db(p: f64) -> f64 {
    if p > 0.0 {
        (10.0 * p.log10()).max(POWER_DB_FLOOR)
    } else {
        POWER_DB_FLOOR
    }
}

/// Plot-ready PDP: delay in ns on the trace's own axis, power in dB re 1 V².
pub fn pdp_csv(w: &SampledWaveform) -> String {
    let p = pdp(w);
    let mut out = String::with_capacity(32 * p.power.len());
    out.push_str(PDP_HEADER);
    out.push('\n');
    for (k, v) in p.power.iter().enumerate() {
        let _ = writeln!(out, "{},{}", p.delay_at(k) * 1e9, power_db(*v));
    }
    out
}

/// Parses a PDP CSV back into `(delay_ns, power_db)` columns.
pub fn parse_pdp_csv(text: &str) -> Result<(Vec<f64>, Vec<f64>), String> {
    let mut lines = text.lines();
    if lines.next().map(str::trim) != Some(PDP_HEADER) {
        return Err(format!("expected header `{PDP_HEADER}`"));
    }
    let mut delay = Vec::new();
    let mut power = Vec::new();
    for (i, line) in lines.enumerate() {
        let (d, p) = line.split_once(',').ok_or_else(|| format!("row {i}: expected two columns"))?;
        delay.push(d.parse().map_err(|_| format!("row {i}: bad delay"))?);
        power.push(p.parse().map_err(|_| format!("row {i}: bad power"))?);
    }
    Ok((delay, power))
}

pub fn report_csv(report: &MetricsReport) -> String {
    format!("{}\n{}\n", MetricsReport::csv_header(), report.csv_row())
}

pub fn parse_report_csv(text: &str) -> Result<MetricsReport, String> {
    let mut lines = text.lines();
    if lines.next() != Some(MetricsReport::csv_header().as_str()) {
        return Err("unexpected report header".into());
    }
    MetricsReport::from_csv_row(lines.next().ok_or("missing report row")?)
}

pub fn config_json(cfg: &RunConfig) -> String {
    let mut s = serde_json::to_string_pretty(cfg).expect("config serialises");
    s.push('\n');
    s
}

pub fn load_config(path: &Path) -> CliResult<RunConfig> {
    let text = read_text(path)?;
    serde_json::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
}

/// Standard file names inside an output directory.
pub struct Layout {
    pub dir: PathBuf,
}

impl Layout {
    pub fn new(dir: impl Into<PathBuf>) -> Self {
        Self { dir: dir.into() }
    }

    pub fn channel(&self) -> PathBuf {
        self.dir.join("channel.truw")
    }
    pub fn sounding(&self) -> PathBuf {
        self.dir.join("sounding.truw")
    }
    pub fn sounding_pdp(&self) -> PathBuf {
        self.dir.join("sounding_pdp.csv")
    }
    pub fn sounding_summary(&self) -> PathBuf {
        self.dir.join("sounding_summary.txt")
    }
    pub fn prefilter(&self) -> PathBuf {
        self.dir.join("prefilter.truw")
    }
    pub fn tr(&self) -> PathBuf {
        self.dir.join("tr.truw")
    }
    pub fn tr_pdp(&self) -> PathBuf {
        self.dir.join("tr_pdp.csv")
    }
    pub fn report_txt(&self) -> PathBuf {
        self.dir.join("report.txt")
    }
    pub fn report_csv(&self) -> PathBuf {
        self.dir.join("report.csv")
    }
    pub fn sweep_csv(&self) -> PathBuf {
        self.dir.join("sweep.csv")
    }
    pub fn config(&self) -> PathBuf {
        self.dir.join("config.json")
    }
}
