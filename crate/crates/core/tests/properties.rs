use proptest::prelude::*;
use truwb_core::acquisition::{acquire, NoiseModel};
use truwb_core::channel::{convolve_waveforms, ChannelResponse, Scenario};
use truwb_core::metrics::{effective_length, energy_gain, focusing_gain, pdp, sidelobe_ratio, MetricsReport};
use truwb_core::time_reversal::{build_prefilter, ideal_autocorrelation, tr_channel_response};
use truwb_core::trace_io::{decode_binary, decode_csv, encode_binary, encode_csv};
use truwb_core::waveform::{
    generate_impulse, normalize_power, resample, rise_time_10_90, truncate_window, ImpulseSpec, PowerConvention,
    SampledWaveform, TruncationPolicy,
};
use truwb_core::AcquisitionRecord;

const RATE: f64 = 40e9;

fn samples(min: usize, max: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-1.0f64..1.0, min..max)
}

fn nonzero(min: usize, max: usize) -> impl Strategy<Value = Vec<f64>> {
    samples(min, max).prop_filter("nonzero energy", |v| v.iter().any(|x| x.abs() > 1e-3))
}

fn wf(s: Vec<f64>) -> SampledWaveform {
    SampledWaveform::new(s, RATE, 0.0).unwrap()
}

fn channel(s: Vec<f64>) -> ChannelResponse {
    ChannelResponse::new(wf(s), "r0", Scenario::Custom).unwrap()
}

fn record(s: Vec<f64>) -> AcquisitionRecord {
    AcquisitionRecord::from_trace(wf(s), 1, NoiseModel::noiseless()).unwrap()
}

fn max_abs(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn resample_is_amplitude_linear(
        s in samples(8, 200),
        a in -100.0f64..100.0,
        pair in prop::sample::select(vec![(40e9, 5e9), (5e9, 40e9), (40e9, 12.5e9), (3e9, 7.3e9), (40e9, 40e9)]),
    ) {
        let w = SampledWaveform::new(s, pair.0, 1e-9).unwrap();
        let lhs = resample(&w.scaled(a), pair.1).unwrap();
        let rhs = resample(&w, pair.1).unwrap().scaled(a);
        prop_assert_eq!(lhs.len(), rhs.len());
        prop_assert_eq!(lhs.sample_rate(), pair.1);
        let scale = max_abs(rhs.samples()).max(f64::MIN_POSITIVE);
        for (x, y) in lhs.samples().iter().zip(rhs.samples()) {
            prop_assert!((x - y).abs() <= 1e-12 * scale);
        }
    }

    #[test]
    fn energy_window_is_minimal_and_sufficient(s in nonzero(1, 96), f in 0.05f64..0.999) {
        let w = wf(s.clone());
        let (kept, win) = truncate_window(&w, &TruncationPolicy::EnergyFraction { fraction: f }).unwrap();
        let total: f64 = s.iter().map(|x| x * x).sum();
        let got: f64 = kept.samples().iter().map(|x| x * x).sum();
        prop_assert!(got >= f * total * (1.0 - 1e-12));
        prop_assert_eq!(kept.len(), brute_force_min_window(&s, f));
        prop_assert!((win.end - win.start - kept.len() as f64 / RATE).abs() < 1e-21);
    }

    #[test]
    fn normalize_is_idempotent(s in nonzero(1, 64), p in 1e-12f64..1.0, avg in any::<bool>()) {
        let conv = if avg { PowerConvention::EqualAveragePower } else { PowerConvention::EqualEnergy };
        let once = normalize_power(&wf(s), p, conv).unwrap();
        let twice = normalize_power(&once, p, conv).unwrap();
        let scale = max_abs(once.samples());
        for (x, y) in once.samples().iter().zip(twice.samples()) {
            prop_assert!((x - y).abs() <= 1e-12 * scale);
        }
    }

    #[test]
    fn impulse_is_deterministic_and_well_formed(
        rise in 210e-12f64..1e-9,
        amp in 0.1f64..5.0,
        rate in prop::sample::select(vec![5e9, 10e9, 40e9]),
    ) {
        let spec = ImpulseSpec { rise_time: rise, amplitude_pp: amp, sample_rate: rate, duration: 8.0 * rise + 2e-9 };
        prop_assume!(spec.validate().is_ok());
        let a = generate_impulse(&spec).unwrap();
        let b = generate_impulse(&spec).unwrap();
        prop_assert_eq!(a.samples(), b.samples());
        prop_assert_eq!(a.peak_abs(), amp / 2.0);
        let s = a.samples();
        prop_assert!(s[0] <= 0.01 * amp / 2.0 && s[s.len() - 1] <= 0.01 * amp / 2.0);
        let measured = rise_time_10_90(&a).unwrap();
        prop_assert!((measured - rise).abs() <= 1.0 / rate);
    }

    #[test]
    fn convolution_obeys_young_bound_and_commutes(x in samples(1, 300), h in nonzero(1, 300)) {
        let xw = wf(x);
        let hw = wf(h.clone());
        let y = convolve_waveforms(&xw, &hw).unwrap();
        prop_assert_eq!(y.len(), xw.len() + hw.len() - 1);
        let l1: f64 = h.iter().map(|v| v.abs()).sum();
        prop_assert!(y.energy() <= l1 * l1 * xw.energy() * (1.0 + 1e-12) + 1e-300);
        let z = convolve_waveforms(&hw, &xw).unwrap();
        let scale = max_abs(y.samples()).max(f64::MIN_POSITIVE);
        for (a, b) in y.samples().iter().zip(z.samples()) {
            prop_assert!((a - b).abs() <= 1e-12 * scale);
        }
    }

    #[test]
    fn pdp_total_is_energy(s in samples(1, 500)) {
        let w = wf(s);
        let p = pdp(&w);
        prop_assert!(p.power.iter().all(|v| *v >= 0.0 && v.is_finite()));
        prop_assert!((p.energy() - w.energy()).abs() <= 1e-12 * w.energy().max(f64::MIN_POSITIVE));
    }

    #[test]
    fn db_metrics_are_scale_invariant(a in nonzero(2, 80), b in nonzero(2, 80), c in 1e-3f64..1e3) {
        let (ta, tb) = (wf(a), wf(b));
        let (sa, sb) = (ta.scaled(c), tb.scaled(c));
        let fg = focusing_gain(&ta, &tb).unwrap();
        prop_assert!((focusing_gain(&sa, &sb).unwrap() - fg).abs() <= 1e-12 * fg.abs().max(1.0));
        let eg = energy_gain(&ta, &tb).unwrap();
        prop_assert!((energy_gain(&sa, &sb).unwrap() - eg).abs() <= 1e-12 * eg.abs().max(1.0));
        let hw = 0.6 / RATE;
        match (sidelobe_ratio(&ta, hw).unwrap().db(), sidelobe_ratio(&sa, hw).unwrap().db()) {
            (Some(x), Some(y)) => prop_assert!((x - y).abs() <= 1e-12 * x.abs().max(1.0)),
            (x, y) => prop_assert_eq!(x, y),
        }
    }

    #[test]
    fn effective_length_shrinks_with_threshold(s in nonzero(1, 300), t1 in 0.01f64..0.99, t2 in 0.01f64..0.99) {
        let p = pdp(&wf(s));
        let (lo, hi) = if t1 <= t2 { (t1, t2) } else { (t2, t1) };
        prop_assert!(effective_length(&p, hi).unwrap() <= effective_length(&p, lo).unwrap());
    }

    #[test]
    fn autocorrelation_is_symmetric_with_central_peak(h in nonzero(1, 200)) {
        let hc = channel(h);
        let r = ideal_autocorrelation(&hc);
        let s = r.samples();
        let n = s.len();
        prop_assert_eq!(n % 2, 1);
        for k in 0..n {
            prop_assert_eq!(s[k], s[n - 1 - k]);
        }
        let c = n / 2;
        prop_assert_eq!(s[c], hc.impulse().samples().iter().map(|v| v * v).sum::<f64>());
        prop_assert!(s.iter().all(|v| v.abs() <= s[c]));
    }

    #[test]
    fn prefilter_invariants(h in nonzero(1, 200), c in 1e-3f64..1e3, avg in any::<bool>()) {
        let conv = if avg { PowerConvention::EqualAveragePower } else { PowerConvention::EqualEnergy };
        let p_o = 1e-9;
        let trunc = TruncationPolicy::default();
        let pf = build_prefilter(&record(h.clone()), &trunc, RATE, p_o, conv).unwrap();
        let scaled: Vec<f64> = h.iter().map(|v| v * c).collect();
        let pf2 = build_prefilter(&record(scaled), &trunc, RATE, p_o, conv).unwrap();

        prop_assert!(pf.gain_a > 0.0);
        let target = match conv {
            PowerConvention::EqualEnergy => p_o,
            PowerConvention::EqualAveragePower => p_o * pf.waveform.duration(),
        };
        prop_assert!((pf.waveform.energy() - target).abs() <= 1e-9 * target);
        prop_assert!(pf.window.start >= 0.0 && pf.window.end <= h.len() as f64 / RATE * (1.0 + 1e-12));

        prop_assert_eq!(pf.waveform.len(), pf2.waveform.len());
        let scale = max_abs(pf.waveform.samples());
        for (a, b) in pf.waveform.samples().iter().zip(pf2.waveform.samples()) {
            prop_assert!((a - b).abs() <= 1e-9 * scale);
        }
    }

    #[test]
    fn noiseless_tr_peak_is_at_central_lag(h in nonzero(1, 200)) {
        let hc = channel(h);
        let rec = AcquisitionRecord::from_trace(hc.impulse().clone(), 1, NoiseModel::noiseless()).unwrap();
        let pf = build_prefilter(
            &rec,
            &TruncationPolicy::EnergyFraction { fraction: 1.0 },
            RATE,
            1e-9,
            PowerConvention::EqualEnergy,
        )
        .unwrap();
        let s = tr_channel_response(&pf, &hc, NoiseModel::noiseless(), 1).unwrap().averaged;
        let centre = pf.waveform.len() - 1;
        let peak = s.samples()[centre].powi(2);
        prop_assert!(s.samples().iter().all(|v| v * v <= peak * (1.0 + 1e-12)));
        prop_assert!((s.time_at(centre) - pf.peak_delay()).abs() < 1e-21);
    }

    #[test]
    fn noiseless_acquisition_is_exact(s in samples(1, 300), m in 1usize..200, seed in any::<u64>()) {
        let w = wf(s);
        let rec = acquire(&w, NoiseModel::new(0.0, seed).unwrap(), m).unwrap();
        prop_assert_eq!(rec.averaged.samples(), w.samples());
        prop_assert_eq!(rec.n_avg, m);
    }

    #[test]
    fn traces_round_trip_bit_exactly(
        bits in prop::collection::vec(any::<u64>(), 1..200),
        rate in 1.0f64..1e12,
        t0 in -1e-3f64..1e-3,
    ) {
        let s: Vec<f64> = bits.into_iter().map(f64::from_bits).filter(|v| v.is_finite()).collect();
        prop_assume!(!s.is_empty());
        let w = SampledWaveform::new(s, rate, t0).unwrap();
        let b = decode_binary(&encode_binary(&w)).unwrap();
        let c = decode_csv(&encode_csv(&w)).unwrap();
        for back in [b, c] {
            prop_assert_eq!(back.sample_rate().to_bits(), w.sample_rate().to_bits());
            prop_assert_eq!(back.t0().to_bits(), w.t0().to_bits());
            let lhs: Vec<u64> = back.samples().iter().map(|v| v.to_bits()).collect();
            let rhs: Vec<u64> = w.samples().iter().map(|v| v.to_bits()).collect();
            prop_assert_eq!(lhs, rhs);
        }
    }

    #[test]
    fn report_invariants(a in nonzero(2, 200), b in nonzero(2, 200)) {
        let r = MetricsReport::compute(&wf(a), &wf(b), 0.5e-9, 0.1).unwrap();
        prop_assert!(r.effective_length_s >= 0.0);
        prop_assert!(r.rms_delay_spread_s >= 0.0);
        prop_assert!(r.peak_power <= r.total_energy * RATE * (1.0 + 1e-12));
    }
}

/// Length of the shortest contiguous run holding at least `f` of the energy,
/// by exhaustive search with direct sums.
fn brute_force_min_window(s: &[f64], f: f64) -> usize {
    let total: f64 = s.iter().map(|x| x * x).sum();
    for len in 1..=s.len() {
        for start in 0..=s.len() - len {
            let e: f64 = s[start..start + len].iter().map(|x| x * x).sum();
            if e >= f * total {
                return len;
            }
        }
    }
    s.len()
}

#[test]
fn energy_window_matches_exhaustive_search_at_512_samples() {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
    for _ in 0..20 {
        let n = rng.gen_range(256..=512);
        let s: Vec<f64> = (0..n)
            .map(|k| rng.gen_range(-1.0..1.0) * (-(k as f64) / 80.0).exp())
            .collect();
        let f = rng.gen_range(0.3..0.99);
        let (kept, _) = truncate_window(&wf(s.clone()), &TruncationPolicy::EnergyFraction { fraction: f }).unwrap();
        assert_eq!(kept.len(), brute_force_min_window(&s, f));
    }
}
