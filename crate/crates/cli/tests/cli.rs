use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::Command;

use truwb::commands::{cmd_sound, cmd_tr};
use truwb::output::{parse_pdp_csv, parse_report_csv, pdp_csv};
use truwb::sweep::{run_sweep, SweepGrid};
use truwb_core::config::{ChannelSource, PulseConfig};
use truwb_core::metrics::{MetricsReport, SidelobeRatio};
use truwb_core::pipeline;
use truwb_core::trace_io::{load_trace, save_trace};
use truwb_core::{RunConfig, SampledWaveform, TruncationPolicy};

struct Out {
    code: i32,
    stdout: String,
    stderr: String,
}

fn truwb(args: &[&str]) -> Out {
    let o = Command::new(env!("CARGO_BIN_EXE_truwb")).args(args).output().unwrap();
    Out {
        code: o.status.code().unwrap(),
        stdout: String::from_utf8(o.stdout).unwrap(),
        stderr: String::from_utf8(o.stderr).unwrap(),
    }
}

fn files(dir: &Path) -> BTreeMap<PathBuf, Vec<u8>> {
    let mut out = BTreeMap::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for e in fs::read_dir(&d).unwrap() {
            let p = e.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else {
                out.insert(p.strip_prefix(dir).unwrap().to_path_buf(), fs::read(&p).unwrap());
            }
        }
    }
    out
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

/// Unit-impulse sounding without noise, band limiting or truncation, at one rate.
fn ideal(channel: ChannelSource, out: &Path) -> RunConfig {
    RunConfig {
        pulse: PulseConfig::UnitImpulse,
        channel,
        noise_sigma: 0.0,
        n_avg: 1,
        truncation: TruncationPolicy::EnergyFraction { fraction: 1.0 },
        awg_rate: 40e9,
        band: None,
        output_dir: out.to_path_buf(),
        ..RunConfig::default()
    }
}

fn write_json(path: &Path, cfg: &RunConfig) {
    fs::write(path, serde_json::to_string_pretty(cfg).unwrap()).unwrap();
}

fn fixture(dir: &Path, name: &str, taps: Vec<f64>) -> PathBuf {
    let p = dir.join(name);
    save_trace(&p, &SampledWaveform::new(taps, 40e9, 0.0).unwrap()).unwrap();
    p
}

#[test]
fn sound_then_tr_writes_every_file_and_reruns_identically() {
    let t = tempfile::tempdir().unwrap();
    for run in ["a", "b"] {
        let out = t.path().join(run);
        assert_eq!(truwb(&["sound", "--seed", "7", "--out", s(&out), "--quiet"]).code, 0);
        let r = truwb(&["tr", "--seed", "7", "--out", s(&out), "--quiet"]);
        assert_eq!(r.code, 0, "{}", r.stderr);
        assert!(r.stdout.is_empty());
    }
    let a = files(&t.path().join("a"));
    let b = files(&t.path().join("b"));
    let names: Vec<_> = a.keys().map(|p| p.to_str().unwrap().to_string()).collect();
    for f in [
        "channel.truw",
        "sounding.truw",
        "sounding_pdp.csv",
        "sounding_summary.txt",
        "prefilter.truw",
        "tr.truw",
        "tr_pdp.csv",
        "report.txt",
        "report.csv",
    ] {
        assert!(names.iter().any(|n| n == f), "missing {f}");
    }
    assert_eq!(a, b);
}

#[test]
fn written_files_read_back_exactly() {
    let t = tempfile::tempdir().unwrap();
    let cfg = RunConfig {
        seed: 3,
        output_dir: t.path().to_path_buf(),
        ..RunConfig::default()
    };
    let snd = cmd_sound(&cfg).unwrap();
    let tr = cmd_tr(&cfg, None).unwrap();
    let dir = t.path();

    let sounding = load_trace(&dir.join("sounding.truw")).unwrap();
    assert_eq!(sounding.samples(), snd.record.averaged.samples());
    assert_eq!(load_trace(&dir.join("channel.truw")).unwrap().samples(), snd.channel.impulse().samples());
    assert_eq!(
        load_trace(&dir.join("prefilter.truw")).unwrap().samples(),
        tr.run.prefilter.waveform.samples()
    );
    let tr_trace = load_trace(&dir.join("tr.truw")).unwrap();
    assert_eq!(tr_trace.samples(), tr.run.record.averaged.samples());
    assert_eq!(tr_trace.t0(), tr.run.record.averaged.t0());

    let pdp_text = fs::read_to_string(dir.join("tr_pdp.csv")).unwrap();
    let (delay, power) = parse_pdp_csv(&pdp_text).unwrap();
    assert_eq!(delay.len(), tr_trace.len());
    assert_eq!(pdp_csv(&tr_trace), pdp_text);
    assert!(power.iter().all(|p| p.is_finite()));

    let csv = parse_report_csv(&fs::read_to_string(dir.join("report.csv")).unwrap()).unwrap();
    let kv = MetricsReport::from_key_value(&fs::read_to_string(dir.join("report.txt")).unwrap()).unwrap();
    assert_eq!(csv, tr.report);
    assert_eq!(kv, tr.report);
}

#[test]
fn noiseless_sounding_is_the_filtered_convolution() {
    let t = tempfile::tempdir().unwrap();
    let cfg = RunConfig {
        noise_sigma: 0.0,
        output_dir: t.path().to_path_buf(),
        ..RunConfig::default()
    };
    write_json(&t.path().join("cfg.json"), &cfg);
    assert_eq!(truwb(&["sound", "--config", s(&t.path().join("cfg.json")), "--quiet"]).code, 0);
    let saved = load_trace(&t.path().join("sounding.truw")).unwrap();
    let h = pipeline::resolve_channel(&cfg).unwrap();
    let clean = pipeline::sounding_clean(&cfg, &pipeline::effective_channel(&cfg, &h).unwrap()).unwrap();
    assert_eq!(&saved.samples()[..clean.len()], clean.samples());
    assert!(saved.samples()[clean.len()..].iter().all(|&v| v == 0.0));
    assert_eq!(saved.t0(), clean.t0());
}

#[test]
fn co_polar_sounding_reports_length_in_preset_band() {
    let t = tempfile::tempdir().unwrap();
    let snd = cmd_sound(&RunConfig {
        output_dir: t.path().to_path_buf(),
        ..RunConfig::default()
    })
    .unwrap();
    let ns = snd.effective_length_s * 1e9;
    assert!((15.0..=30.0).contains(&ns), "{ns} ns");
    let summary = fs::read_to_string(t.path().join("sounding_summary.txt")).unwrap();
    assert!(summary.contains(&format!("effective_length_s={}", snd.effective_length_s)));
}

#[test]
fn delta_channel_reports_zero_gain_and_no_sidelobe() {
    let t = tempfile::tempdir().unwrap();
    let h = fixture(t.path(), "delta.truw", vec![1.0]);
    let cfg = ideal(ChannelSource::File { path: h }, &t.path().join("out"));
    let cfg_path = t.path().join("cfg.json");
    write_json(&cfg_path, &cfg);
    assert_eq!(truwb(&["sound", "--config", s(&cfg_path), "--quiet"]).code, 0);
    let r = truwb(&["tr", "--config", s(&cfg_path)]);
    assert_eq!(r.code, 0, "{}", r.stderr);
    assert!(r.stdout.contains("peak_to_sidelobe_db=no_sidelobe"));
    let rep = MetricsReport::from_key_value(&fs::read_to_string(t.path().join("out/report.txt")).unwrap()).unwrap();
    assert!(rep.focusing_gain_db.abs() < 1e-12);
    assert_eq!(rep.peak_to_sidelobe_db, SidelobeRatio::NoSidelobe);
}

#[test]
fn two_tap_fixture_matches_hand_oracle() {
    let t = tempfile::tempdir().unwrap();
    let h = fixture(t.path(), "h.csv", vec![1.0, 0.5]);
    let cfg = RunConfig {
        // keep the main lobe inside one sample so both neighbours count as sidelobes
        mainlobe_halfwidth: Some(0.5 / 40e9),
        ..ideal(ChannelSource::File { path: h }, t.path())
    };
    cmd_sound(&cfg).unwrap();
    let rep = cmd_tr(&cfg, None).unwrap().report;
    // direct peak 1, TR peak Σh²/‖h‖ = √1.25 at equal energy
    let fg = 10.0 * 1.25f64.log10();
    // R_hh = [0.5, 1.25, 0.5]
    let psr = 10.0 * (1.25f64 * 1.25 / 0.25).log10();
    assert!((rep.focusing_gain_db - fg).abs() < 1e-9, "{}", rep.focusing_gain_db);
    assert!((fg - 0.969).abs() < 1e-3);
    let got = rep.peak_to_sidelobe_db.db().unwrap();
    assert!((got - psr).abs() < 1e-9 && (psr - 7.96).abs() < 5e-3, "{got}");
}

#[test]
fn diffuse_channel_is_compressed_by_time_reversal() {
    let t = tempfile::tempdir().unwrap();
    let cfg = RunConfig {
        channel: ChannelSource::Preset {
            name: "cross_polar".into(),
        },
        output_dir: t.path().to_path_buf(),
        ..RunConfig::default()
    };
    cmd_sound(&cfg).unwrap();
    let rep = cmd_tr(&cfg, None).unwrap().report;
    assert!(rep.direct_effective_length_s >= 15e-9);
    assert!(rep.effective_length_s < rep.direct_effective_length_s);
}

#[test]
fn tr_with_missing_or_corrupt_record_is_an_io_error() {
    let t = tempfile::tempdir().unwrap();
    let r = truwb(&["tr", "--out", s(t.path())]);
    assert_eq!(r.code, 2);
    assert!(r.stderr.contains("sounding.truw"));
    let bad = t.path().join("bad.truw");
    fs::write(&bad, b"NOPE\x01\x00").unwrap();
    assert_eq!(truwb(&["tr", "--out", s(t.path()), "--record", s(&bad)]).code, 2);
}

#[test]
fn config_errors_exit_with_one_and_name_the_field() {
    let t = tempfile::tempdir().unwrap();
    let p = t.path().join("cfg.json");
    fs::write(&p, r#"{"n_avg": 0}"#).unwrap();
    let r = truwb(&["sound", "--config", s(&p), "--out", s(t.path())]);
    assert_eq!(r.code, 1);
    assert!(r.stderr.contains("n_avg"), "{}", r.stderr);

    fs::write(&p, "{not json").unwrap();
    assert_eq!(truwb(&["sound", "--config", s(&p)]).code, 1);
    assert_eq!(truwb(&["sound", "--channel", "h.truw", "--out", s(t.path())]).code, 2);
    assert_eq!(truwb(&["sound", "--bogus"]).code, 1);
    assert_eq!(truwb(&["--help"]).code, 0);
}

#[test]
fn zero_channel_file_is_a_numeric_failure() {
    let t = tempfile::tempdir().unwrap();
    let h = fixture(t.path(), "zero.truw", vec![0.0; 8]);
    let r = truwb(&["sound", "--channel", s(&h), "--out", s(&t.path().join("o"))]);
    assert_eq!(r.code, 3, "{}", r.stderr);
}

#[test]
fn commands_leave_their_inputs_untouched() {
    let t = tempfile::tempdir().unwrap();
    let out = t.path().join("o");
    assert_eq!(truwb(&["config", "init", "--out", s(&out)]).code, 0);
    let cfg_path = out.join("config.json");
    assert_eq!(truwb(&["sound", "--config", s(&cfg_path), "--out", s(&out), "--quiet"]).code, 0);
    let rec = out.join("sounding.truw");
    let before = (fs::read(&cfg_path).unwrap(), fs::read(&rec).unwrap());
    assert_eq!(
        truwb(&["tr", "--config", s(&cfg_path), "--out", s(&out), "--record", s(&rec), "--quiet"]).code,
        0
    );
    assert_eq!(before, (fs::read(&cfg_path).unwrap(), fs::read(&rec).unwrap()));
}

#[test]
fn config_init_emits_every_default() {
    let t = tempfile::tempdir().unwrap();
    assert_eq!(truwb(&["config", "init", "--out", s(t.path()), "--quiet"]).code, 0);
    let text = fs::read_to_string(t.path().join("config.json")).unwrap();
    let cfg: RunConfig = serde_json::from_str(&text).unwrap();
    assert_eq!(
        cfg,
        RunConfig {
            output_dir: t.path().to_path_buf(),
            ..RunConfig::default()
        }
    );
    for key in ["pulse", "channel", "noise_sigma", "n_avg", "truncation", "convention", "p_o", "awg_rate", "dso_rate", "band", "seed", "output_dir"] {
        assert!(text.contains(&format!("\"{key}\"")), "missing {key}");
    }
}

#[test]
fn one_point_sweep_matches_sound_then_tr() {
    let t = tempfile::tempdir().unwrap();
    let base = RunConfig {
        seed: 11,
        output_dir: t.path().to_path_buf(),
        ..RunConfig::default()
    };
    cmd_sound(&base).unwrap();
    let rep = cmd_tr(&base, None).unwrap();
    let csv = run_sweep(
        &SweepGrid {
            base: base.clone(),
            ..SweepGrid::default()
        },
        Some(1),
    )
    .unwrap();
    let row = csv.lines().nth(1).unwrap();
    assert!(row.contains(&format!(",ok,{},{},", rep.report.csv_row(), rep.noise_floor)), "{row}");
}

#[test]
fn sweep_cli_is_independent_of_thread_count() {
    let t = tempfile::tempdir().unwrap();
    let grid = t.path().join("grid.json");
    fs::write(
        &grid,
        r#"{"channel": ["co_polar", "cross_polar", "missing.truw"], "n_avg": [1, 16], "seed_count": 3}"#,
    )
    .unwrap();
    let mut outputs = Vec::new();
    for threads in ["1", "3", "8"] {
        let out = t.path().join(threads);
        let r = truwb(&["sweep", "--config", s(&grid), "--out", s(&out), "--threads", threads]);
        assert_eq!(r.code, 0, "{}", r.stderr);
        outputs.push(fs::read(out.join("sweep.csv")).unwrap());
    }
    assert_eq!(outputs[0], outputs[1]);
    assert_eq!(outputs[0], outputs[2]);
    let text = String::from_utf8(outputs.remove(0)).unwrap();
    // 3 channels x 2 n_avg x 3 seeds, failed cells kept as error rows
    assert_eq!(text.lines().count(), 1 + 18);
    assert_eq!(text.lines().filter(|l| l.contains(",error,")).count(), 6);
    assert_eq!(truwb(&["sweep", "--out", s(t.path())]).code, 1);
}

#[test]
fn sweep_noise_floor_follows_inverse_root_m() {
    let ms = [1usize, 4, 16, 64, 128];
    let grid = SweepGrid {
        n_avg: ms.to_vec(),
        seed_count: Some(4),
        ..SweepGrid::default()
    };
    let csv = run_sweep(&grid, None).unwrap();
    let header: Vec<&str> = csv.lines().next().unwrap().split(',').collect();
    let col = |name: &str| header.iter().position(|h| *h == name).unwrap();
    let (c_m, c_rms) = (col("n_avg"), col("noise_rms_v"));
    let mut mean = BTreeMap::<usize, (f64, usize)>::new();
    for line in csv.lines().skip(1) {
        let f: Vec<&str> = line.split(',').collect();
        let e = mean.entry(f[c_m].parse().unwrap()).or_insert((0.0, 0));
        e.0 += f[c_rms].parse::<f64>().unwrap();
        e.1 += 1;
    }
    let rms = |m: usize| mean[&m].0 / mean[&m].1 as f64;
    for &m in &ms {
        let ratio = rms(m) / rms(1);
        let expect = 1.0 / (m as f64).sqrt();
        assert!((ratio / expect - 1.0).abs() <= 0.05, "M={m}: {ratio} vs {expect}");
    }
}

#[test]
fn demo_reports_both_scenarios_with_trend_flag() {
    let t = tempfile::tempdir().unwrap();
    let mut texts = Vec::new();
    for run in ["a", "b"] {
        let out = t.path().join(run);
        let r = truwb(&["demo-paper", "--out", s(&out)]);
        assert_eq!(r.code, 0, "{}", r.stderr);
        texts.push(files(&out));
    }
    assert_eq!(texts[0], texts[1]);
    let dir = t.path().join("a");
    let summary = fs::read_to_string(dir.join("demo_summary.txt")).unwrap();
    assert!(summary.contains("co_polar") && summary.contains("cross_polar"));
    assert!(summary.contains("trend_reproduced=true"));
    assert!(summary.contains("7.8 dB"));
    let co = MetricsReport::from_key_value(&fs::read_to_string(dir.join("co_polar/report.txt")).unwrap()).unwrap();
    let cross =
        MetricsReport::from_key_value(&fs::read_to_string(dir.join("cross_polar/report.txt")).unwrap()).unwrap();
    assert!(cross.peak_to_sidelobe_db.db().unwrap() > co.peak_to_sidelobe_db.db().unwrap());
}
