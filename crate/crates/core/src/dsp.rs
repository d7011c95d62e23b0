//! FIR design helpers and convolution.

use std::f64::consts::PI;

use num_complex::Complex64;
use rustfft::FftPlanner;

/// Periodic Hann window of length `n`.
pub fn hann_periodic(n: usize) -> Vec<f64> {
    (0..n)
        .map(|i| 0.5 - 0.5 * (2.0 * PI * i as f64 / n as f64).cos())
        .collect()
}

/// Symmetric Hamming window of length `n`.
pub fn hamming(n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![1.0];
    }
    (0..n)
        .map(|i| 0.54 - 0.46 * (2.0 * PI * i as f64 / (n - 1) as f64).cos())
        .collect()
}

fn sinc(x: f64) -> f64 {
    if x == 0.0 {
        1.0
    } else {
        (PI * x).sin() / (PI * x)
    }
}

/// Hamming-windowed sinc low-pass with unity DC gain.
///
/// `cutoff` is normalized to the sample rate (0 < cutoff < 0.5).
pub fn windowed_sinc_lowpass(num_taps: usize, cutoff: f64) -> Vec<f64> {
    let center = (num_taps - 1) as f64 / 2.0;
    let w = hamming(num_taps);
    let mut taps: Vec<f64> = (0..num_taps)
        .map(|i| 2.0 * cutoff * sinc(2.0 * cutoff * (i as f64 - center)) * w[i])
        .collect();
    let dc: f64 = taps.iter().sum();
    taps.iter_mut().for_each(|t| *t /= dc);
    taps
}

/// Linear-phase (type I) FIR by frequency sampling.
///
/// `magnitude(f)` gives the desired amplitude response at normalized
/// frequency `f` in [0, 0.5]; it is sampled on the `k / num_taps` grid.
pub fn frequency_sampling_design(num_taps: usize, magnitude: impl Fn(f64) -> f64) -> Vec<f64> {
    assert!(num_taps % 2 == 1, "type I design needs an odd tap count");
    let n = num_taps as f64;
    let half = (num_taps - 1) / 2;
    let amp: Vec<f64> = (0..=half).map(|k| magnitude(k as f64 / n)).collect();
    (0..num_taps)
        .map(|i| {
            let m = i as f64 - half as f64;
            let acc: f64 = amp[1..]
                .iter()
                .enumerate()
                .map(|(k, a)| 2.0 * a * (2.0 * PI * (k + 1) as f64 * m / n).cos())
                .sum();
            (amp[0] + acc) / n
        })
        .collect()
}

/// Full linear convolution of a real signal with real taps.
pub fn convolve_real(signal: &[f64], taps: &[f64]) -> Vec<f64> {
    if signal.is_empty() || taps.is_empty() {
        return Vec::new();
    }
    if signal.len().min(taps.len()) < 64 {
        return direct_convolve(signal, taps);
    }
    fft_convolve(signal, taps)
}

fn direct_convolve(signal: &[f64], taps: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; signal.len() + taps.len() - 1];
    for (i, &x) in signal.iter().enumerate() {
        for (j, &h) in taps.iter().enumerate() {
            out[i + j] += x * h;
        }
    }
    out
}

/// Overlap-add FFT convolution.
fn fft_convolve(signal: &[f64], taps: &[f64]) -> Vec<f64> {
    let fft_len = (4 * taps.len()).next_power_of_two().max(1024);
    let block = fft_len - taps.len() + 1;
    let mut planner = FftPlanner::<f64>::new();
    let fwd = planner.plan_fft_forward(fft_len);
    let inv = planner.plan_fft_inverse(fft_len);

    let mut h: Vec<Complex64> = taps.iter().map(|&t| Complex64::new(t, 0.0)).collect();
    h.resize(fft_len, Complex64::new(0.0, 0.0));
    fwd.process(&mut h);

    let scale = 1.0 / fft_len as f64;
    let mut out = vec![0.0; signal.len() + taps.len() - 1];
    let mut buf = vec![Complex64::new(0.0, 0.0); fft_len];
    for (b, chunk) in signal.chunks(block).enumerate() {
        buf.iter_mut().for_each(|c| *c = Complex64::new(0.0, 0.0));
        for (c, &x) in buf.iter_mut().zip(chunk) {
            c.re = x;
        }
        fwd.process(&mut buf);
        for (c, hk) in buf.iter_mut().zip(&h) {
            *c *= hk;
        }
        inv.process(&mut buf);
        let start = b * block;
        let valid = chunk.len() + taps.len() - 1;
        for (o, c) in out[start..start + valid].iter_mut().zip(&buf) {
            *o += c.re * scale;
        }
    }
    out
}

/// Full convolution of a complex signal with real taps.
pub fn convolve_complex(signal: &[Complex64], taps: &[f64]) -> Vec<Complex64> {
    if signal.is_empty() || taps.is_empty() {
        return Vec::new();
    }
    let re: Vec<f64> = signal.iter().map(|c| c.re).collect();
    let im: Vec<f64> = signal.iter().map(|c| c.im).collect();
    convolve_real(&re, taps)
        .into_iter()
        .zip(convolve_real(&im, taps))
        .map(|(r, i)| Complex64::new(r, i))
        .collect()
}

/// Convolution trimmed to the input length, compensating the `(taps-1)/2` group delay.
pub fn convolve_same(signal: &[f64], taps: &[f64]) -> Vec<f64> {
    let delay = (taps.len().saturating_sub(1)) / 2;
    let full = convolve_real(signal, taps);
    full.into_iter().skip(delay).take(signal.len()).collect()
}

/// Frequency response magnitude of real taps at normalized frequency `f`.
pub fn magnitude_response(taps: &[f64], f: f64) -> f64 {
    taps.iter()
        .enumerate()
        .map(|(n, &h)| Complex64::from_polar(h, -2.0 * PI * f * n as f64))
        .sum::<Complex64>()
        .norm()
}
