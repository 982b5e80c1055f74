//! Low-level numeric kernels shared by the waveform and channel modules:
//! linear convolution (direct and FFT), Kaiser windows and windowed-sinc taps.

use std::f64::consts::PI;

use rustfft::num_complex::Complex64;
use rustfft::FftPlanner;

/// Below this product of input lengths the direct sum is cheaper than FFTs.
const DIRECT_CONV_LIMIT: usize = 4096;

/// Full linear convolution, output length `a.len() + b.len() - 1`.
/// Picks the direct or FFT path by problem size.
pub fn convolve(a: &[f64], b: &[f64]) -> Vec<f64> {
    if a.is_empty() || b.is_empty() {
        return Vec::new();
    }
    if a.len().min(b.len()) <= 32 || a.len() * b.len() <= DIRECT_CONV_LIMIT {
        convolve_direct(a, b)
    } else {
        convolve_fft(a, b)
    }
}

/// O(n·m) direct-sum convolution.
pub fn convolve_direct(a: &[f64], b: &[f64]) -> Vec<f64> {
    if a.is_empty() || b.is_empty() {
        return Vec::new();
    }
    let mut out = vec![0.0; a.len() + b.len() - 1];
    for (i, &x) in a.iter().enumerate() {
        if x == 0.0 {
            continue;
        }
        for (o, &y) in out[i..].iter_mut().zip(b) {
            *o += x * y;
        }
    }
    out
}

/// FFT convolution with zero padding to the next power of two.
pub fn convolve_fft(a: &[f64], b: &[f64]) -> Vec<f64> {
    if a.is_empty() || b.is_empty() {
        return Vec::new();
    }
    let out_len = a.len() + b.len() - 1;
    let n = out_len.next_power_of_two();
    let mut planner = FftPlanner::<f64>::new();
    let fwd = planner.plan_fft_forward(n);
    let inv = planner.plan_fft_inverse(n);

    // Pack both real inputs into one complex transform: z = a + i·b.
    let mut z = vec![Complex64::new(0.0, 0.0); n];
    for (zi, &x) in z.iter_mut().zip(a) {
        zi.re = x;
    }
    for (zi, &y) in z.iter_mut().zip(b) {
        zi.im = y;
    }
    fwd.process(&mut z);

    // A[k] = (Z[k] + conj Z[-k]) / 2, B[k] = (Z[k] - conj Z[-k]) / 2i,
    // so A·B = (Z[k]² - conj(Z[-k])²) / 4i.
    let mut prod = vec![Complex64::new(0.0, 0.0); n];
    for k in 0..n {
        let zk = z[k];
        let zm = z[(n - k) % n].conj();
        prod[k] = (zk * zk - zm * zm) / Complex64::new(0.0, 4.0);
    }
    inv.process(&mut prod);
    let scale = 1.0 / n as f64;
    prod[..out_len].iter().map(|c| c.re * scale).collect()
}

/// Zeroth-order modified Bessel function of the first kind (power series).
pub fn bessel_i0(x: f64) -> f64 {
    let half = x / 2.0;
    let mut term = 1.0;
    let mut sum = 1.0;
    let mut k = 1.0;
    loop {
        term *= (half / k) * (half / k);
        sum += term;
        if term < sum * 1e-17 {
            break;
        }
        k += 1.0;
    }
    sum
}

/// Kaiser window evaluated at offset `t` from the centre of a window with
/// half-length `half_width`. Zero outside.
pub fn kaiser(t: f64, half_width: f64, beta: f64) -> f64 {
    let r = t / half_width;
    if r.abs() > 1.0 {
        return 0.0;
    }
    bessel_i0(beta * (1.0 - r * r).max(0.0).sqrt()) / bessel_i0(beta)
}

/// Kaiser β for a target stop-band attenuation in dB.
pub fn kaiser_beta(atten_db: f64) -> f64 {
    if atten_db > 50.0 {
        0.1102 * (atten_db - 8.7)
    } else if atten_db >= 21.0 {
        0.5842 * (atten_db - 21.0).powf(0.4) + 0.07886 * (atten_db - 21.0)
    } else {
        0.0
    }
}

/// Normalised sinc, sin(πx)/(πx).
pub fn sinc(x: f64) -> f64 {
    if x == 0.0 {
        1.0
    } else {
        let px = PI * x;
        px.sin() / px
    }
}

/// Ideal low-pass impulse response with cutoff `fc` (cycles/sample) at offset `t` samples.
pub fn lowpass_kernel(t: f64, fc: f64) -> f64 {
    2.0 * fc * sinc(2.0 * fc * t)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn direct_small_case() {
        assert_eq!(convolve_direct(&[1.0, 0.5], &[1.0, 0.5]), vec![1.0, 1.0, 0.25]);
    }

    #[test]
    fn fft_matches_direct_on_odd_lengths() {
        let a: Vec<f64> = (0..37).map(|i| ((i * 7) % 11) as f64 - 5.0).collect();
        let b: Vec<f64> = (0..101).map(|i| ((i * 3) % 13) as f64 * 0.1).collect();
        let d = convolve_direct(&a, &b);
        let f = convolve_fft(&a, &b);
        assert_eq!(d.len(), f.len());
        let peak = d.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        for (x, y) in d.iter().zip(&f) {
            assert!((x - y).abs() <= 1e-12 * peak);
        }
    }

    #[test]
    fn empty_inputs_give_empty_output() {
        assert!(convolve(&[], &[1.0]).is_empty());
        assert!(convolve_fft(&[1.0], &[]).is_empty());
    }

    #[test]
    fn bessel_reference_values() {
        assert!((bessel_i0(0.0) - 1.0).abs() < 1e-15);
        // I0(1) and I0(5) from tables
        assert!((bessel_i0(1.0) - 1.266_065_877_752_008_4).abs() < 1e-14);
        assert!((bessel_i0(5.0) - 27.239_871_823_604_44).abs() < 1e-11);
    }

    #[test]
    fn kaiser_is_one_at_centre_and_zero_outside() {
        assert!((kaiser(0.0, 10.0, 8.0) - 1.0).abs() < 1e-15);
        assert_eq!(kaiser(10.5, 10.0, 8.0), 0.0);
    }
}
