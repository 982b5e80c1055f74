//! Trace persistence.
//!
//! Binary layout (all little-endian):
//!
//! | bytes | field                  |
//! |-------|------------------------|
//! | 4     | magic `TRUW`           |
//! | 2     | version (u16, = 1)     |
//! | 8     | sample rate (f64, Hz)  |
//! | 8     | t0 (f64, s)            |
//! | 8     | sample count (u64)     |
//! | 8·n   | samples (f64, V)       |
//!
//! CSV layout: optional `# sample_rate_hz=` / `# t0_s=` comment lines, then the
//! header `time_s,amplitude_v` and one sample per row. Numbers are written in
//! shortest round-trip form, so both formats reproduce samples bit-exactly.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::waveform::SampledWaveform;

pub const MAGIC: &[u8; 4] = b"TRUW";
pub const VERSION: u16 = 1;
const HEADER_LEN: usize = 4 + 2 + 8 + 8 + 8;
pub const CSV_HEADER: &str = "time_s,amplitude_v";

pub fn encode_binary(w: &SampledWaveform) -> Vec<u8> {
    let mut buf = Vec::with_capacity(HEADER_LEN + 8 * w.len());
    buf.extend_from_slice(MAGIC);
    buf.extend_from_slice(&VERSION.to_le_bytes());
    buf.extend_from_slice(&w.sample_rate().to_le_bytes());
    buf.extend_from_slice(&w.t0().to_le_bytes());
    buf.extend_from_slice(&(w.len() as u64).to_le_bytes());
    for s in w.samples() {
        buf.extend_from_slice(&s.to_le_bytes());
    }
    buf
}

fn f64_at(bytes: &[u8], at: usize) -> f64 {
    f64::from_le_bytes(bytes[at..at + 8].try_into().expect("8-byte slice"))
}

pub fn decode_binary(bytes: &[u8]) -> Result<SampledWaveform> {
    if bytes.len() < 4 || &bytes[..4] != MAGIC {
        return Err(Error::BadMagic);
    }
    if bytes.len() < HEADER_LEN {
        return Err(Error::Truncated {
            expected: HEADER_LEN,
            found: bytes.len(),
        });
    }
    let version = u16::from_le_bytes([bytes[4], bytes[5]]);
    if version != VERSION {
        return Err(Error::UnsupportedVersion(version));
    }
    let rate = f64_at(bytes, 6);
    let t0 = f64_at(bytes, 14);
    let count = u64::from_le_bytes(bytes[22..30].try_into().expect("8-byte slice"));
    if !(rate.is_finite() && rate > 0.0) {
        return Err(Error::InvalidRate(rate));
    }
    let expected = (count as usize)
        .checked_mul(8)
        .and_then(|n| n.checked_add(HEADER_LEN))
        .ok_or(Error::Truncated {
            expected: usize::MAX,
            found: bytes.len(),
        })?;
    if bytes.len() != expected {
        return Err(Error::Truncated {
            expected,
            found: bytes.len(),
        });
    }
    let samples = (0..count as usize).map(|k| f64_at(bytes, HEADER_LEN + 8 * k)).collect();
    SampledWaveform::new(samples, rate, t0)
}

pub fn encode_csv(w: &SampledWaveform) -> String {
    let mut out = String::with_capacity(40 * (w.len() + 3));
    let _ = writeln!(out, "# sample_rate_hz={}", w.sample_rate());
    let _ = writeln!(out, "# t0_s={}", w.t0());
    out.push_str(CSV_HEADER);
    out.push('\n');
    for (k, s) in w.samples().iter().enumerate() {
        let _ = writeln!(out, "{},{}", w.time_at(k), s);
    }
    out
}

fn parse_num(text: &str, line: usize, what: &str) -> Result<f64> {
    text.trim().parse::<f64>().map_err(|_| Error::Csv {
        line,
        reason: format!("cannot parse {what} `{}`", text.trim()),
    })
}

pub fn decode_csv(text: &str) -> Result<SampledWaveform> {
    let mut rate_meta = None;
    let mut t0_meta = None;
    let mut header_seen = false;
    let mut times = Vec::new();
    let mut samples = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.trim();
        if line.is_empty() {
            continue;
        }
        if let Some(meta) = line.strip_prefix('#') {
            if let Some((key, value)) = meta.trim().split_once('=') {
                match key.trim() {
                    "sample_rate_hz" => rate_meta = Some(parse_num(value, line_no, "sample rate")?),
                    "t0_s" => t0_meta = Some(parse_num(value, line_no, "t0")?),
                    _ => {}
                }
            }
            continue;
        }
        if !header_seen {
            if line != CSV_HEADER {
                return Err(Error::Csv {
                    line: line_no,
                    reason: format!("expected header `{CSV_HEADER}`"),
                });
            }
            header_seen = true;
            continue;
        }
        let (t, v) = line.split_once(',').ok_or(Error::Csv {
            line: line_no,
            reason: "expected two columns".into(),
        })?;
        let t = parse_num(t, line_no, "time")?;
        let v = parse_num(v, line_no, "amplitude")?;
        if !v.is_finite() {
            return Err(Error::NonFiniteSample { index: samples.len() });
        }
        times.push(t);
        samples.push(v);
    }
    if !header_seen {
        return Err(Error::Csv {
            line: 1,
            reason: format!("missing header `{CSV_HEADER}`"),
        });
    }
    if samples.is_empty() {
        return Err(Error::EmptyWaveform);
    }
    let t0 = t0_meta.unwrap_or(times[0]);
    let rate = match rate_meta {
        Some(r) => r,
        None if times.len() >= 2 => (times.len() - 1) as f64 / (times[times.len() - 1] - times[0]),
        None => {
            return Err(Error::Csv {
                line: 1,
                reason: "single-row trace needs a `# sample_rate_hz=` line".into(),
            })
        }
    };
    if !(rate.is_finite() && rate > 0.0) {
        return Err(Error::InvalidRate(rate));
    }
    let period = 1.0 / rate;
    for (k, &t) in times.iter().enumerate() {
        let expect = t0 + k as f64 * period;
        if (t - expect).abs() > 1e-9 * expect.abs().max(period) {
            return Err(Error::NonUniformSpacing { row: k });
        }
    }
    SampledWaveform::new(samples, rate, t0)
}

/// Writes `w` in the format implied by the extension (`.csv` → CSV, otherwise binary).
pub fn save_trace(path: &Path, w: &SampledWaveform) -> Result<()> {
    if is_csv(path) {
        fs::write(path, encode_csv(w))?;
    } else {
        fs::write(path, encode_binary(w))?;
    }
    Ok(())
}

pub fn load_trace(path: &Path) -> Result<SampledWaveform> {
    if is_csv(path) {
        decode_csv(&fs::read_to_string(path)?)
    } else {
        decode_binary(&fs::read(path)?)
    }
}

fn is_csv(path: &Path) -> bool {
    path.extension().is_some_and(|e| e.eq_ignore_ascii_case("csv"))
}
