//! Spectral measurement: Welch PSD, peak picking, band power and SNDR.

use num_complex::Complex64;
use rustfft::FftPlanner;

use crate::dsp::hann_periodic;
use crate::{Error, Result, SampleBuffer};

/// Floor applied to the dB scale.
pub const PSD_FLOOR_DB: f64 = -300.0;

/// One-sided power spectral density in dB per Hz.
#[derive(Debug, Clone, PartialEq)]
pub struct Psd {
    pub freqs_hz: Vec<f64>,
    pub power_db: Vec<f64>,
    pub resolution_hz: f64,
}

impl Psd {
    pub fn len(&self) -> usize {
        self.freqs_hz.len()
    }

    pub fn is_empty(&self) -> bool {
        self.freqs_hz.is_empty()
    }

    /// Linear density of bin `k`.
    pub fn density(&self, k: usize) -> f64 {
        10f64.powf(self.power_db[k] / 10.0)
    }

    /// Bin nearest to `freq_hz`.
    pub fn bin_of(&self, freq_hz: f64) -> usize {
        ((freq_hz / self.resolution_hz).round().max(0.0) as usize).min(self.len() - 1)
    }

    /// Power in the bins whose centers lie in `[lo_hz, hi_hz]`.
    pub fn integrate(&self, lo_hz: f64, hi_hz: f64) -> f64 {
        self.freqs_hz
            .iter()
            .enumerate()
            .filter(|(_, &f)| f >= lo_hz && f <= hi_hz)
            .map(|(k, _)| self.density(k) * self.resolution_hz)
            .sum()
    }

    pub fn total_power(&self) -> f64 {
        (0..self.len())
            .map(|k| self.density(k) * self.resolution_hz)
            .sum()
    }

    pub fn max_frequency_hz(&self) -> f64 {
        *self.freqs_hz.last().unwrap_or(&0.0)
    }
}

/// Hann-windowed averaged periodogram, scaled so the PSD integrates to the mean power.
pub fn welch_psd(signal: &SampleBuffer, segment: usize, overlap_fraction: f64) -> Result<Psd> {
    if segment < 2 || !segment.is_power_of_two() {
        return Err(Error::InvalidArgument(format!(
            "segment {segment} must be a power of two"
        )));
    }
    if !(0.0..1.0).contains(&overlap_fraction) {
        return Err(Error::InvalidArgument(format!(
            "overlap {overlap_fraction} must lie in [0, 1)"
        )));
    }
    let n = signal.len();
    if n < segment {
        return Err(Error::SignalTooShort { len: n, segment });
    }
    let step = (segment - (overlap_fraction * segment as f64).round() as usize).max(1);
    let window = hann_periodic(segment);
    let window_power: f64 = window.iter().map(|w| w * w).sum();
    let fft = FftPlanner::<f64>::new().plan_fft_forward(segment);

    let bins = segment / 2 + 1;
    let mut acc = vec![0.0f64; bins];
    let mut buf = vec![Complex64::new(0.0, 0.0); segment];
    let mut count = 0usize;
    let mut start = 0usize;
    while start + segment <= n {
        for ((b, &x), &w) in buf
            .iter_mut()
            .zip(&signal.samples[start..start + segment])
            .zip(&window)
        {
            *b = Complex64::new(x * w, 0.0);
        }
        fft.process(&mut buf);
        for (a, c) in acc.iter_mut().zip(&buf[..bins]) {
            *a += c.norm_sqr();
        }
        count += 1;
        start += step;
    }

    let fs = signal.sample_rate_hz as f64;
    let scale = 1.0 / (fs * window_power * count as f64);
    let power_db = acc
        .iter()
        .enumerate()
        .map(|(k, &p)| {
            let one_sided = if k == 0 || k == segment / 2 { 1.0 } else { 2.0 };
            let d = p * scale * one_sided;
            if d > 0.0 {
                (10.0 * d.log10()).max(PSD_FLOOR_DB)
            } else {
                PSD_FLOOR_DB
            }
        })
        .collect();
    let resolution_hz = fs / segment as f64;
    Ok(Psd {
        freqs_hz: (0..bins).map(|k| k as f64 * resolution_hz).collect(),
        power_db,
        resolution_hz,
    })
}

/// The `count` strongest local maxima at least `min_separation_hz` apart, in frequency order.
pub fn find_peaks(psd: &Psd, count: usize, min_separation_hz: f64) -> Result<Vec<(f64, f64)>> {
    if count == 0 {
        return Err(Error::InvalidArgument(
            "peak count must be at least 1".into(),
        ));
    }
    let p = &psd.power_db;
    let n = p.len();
    let mut candidates: Vec<usize> = (0..n)
        .filter(|&k| {
            let left = k == 0 || p[k] > p[k - 1];
            let right = k + 1 == n || p[k] >= p[k + 1];
            left && right && p[k] > PSD_FLOOR_DB
        })
        .collect();
    candidates.sort_by(|&a, &b| p[b].total_cmp(&p[a]).then(a.cmp(&b)));

    let mut picked: Vec<usize> = Vec::with_capacity(count);
    for k in candidates {
        if picked
            .iter()
            .all(|&j| (psd.freqs_hz[j] - psd.freqs_hz[k]).abs() >= min_separation_hz)
        {
            picked.push(k);
            if picked.len() == count {
                break;
            }
        }
    }
    if picked.len() < count {
        return Err(Error::NotEnoughPeaks {
            found: picked.len(),
            requested: count,
        });
    }
    picked.sort_unstable();
    Ok(picked
        .into_iter()
        .map(|k| (psd.freqs_hz[k], p[k]))
        .collect())
}

/// In-band power over the power of an equal-width window shifted by `noise_ref_offset_hz`.
pub fn band_sndr(
    psd: &Psd,
    center_hz: f64,
    bandwidth_hz: f64,
    noise_ref_offset_hz: f64,
) -> Result<f64> {
    if bandwidth_hz.is_nan() || bandwidth_hz <= 0.0 {
        return Err(Error::InvalidArgument("bandwidth must be positive".into()));
    }
    if noise_ref_offset_hz.abs() < bandwidth_hz {
        return Err(Error::InvalidArgument(
            "signal and reference windows overlap".into(),
        ));
    }
    let half = bandwidth_hz / 2.0;
    let reference = center_hz + noise_ref_offset_hz;
    let top = psd.max_frequency_hz();
    for c in [center_hz, reference] {
        if c - half < 0.0 || c + half > top {
            return Err(Error::FrequencyOutOfRange {
                freq_hz: c,
                min_hz: half,
                max_hz: top - half,
            });
        }
    }
    let signal = psd.integrate(center_hz - half, center_hz + half);
    let noise = psd.integrate(reference - half, reference + half);
    Ok(10.0 * (signal / noise).log10())
}

/// Tone power over the remaining power in `[0, band_hz]`.
///
/// The tone occupies `tone_bins` bins either side of its center.
pub fn tone_sndr(psd: &Psd, tone_hz: f64, band_hz: f64, tone_bins: usize) -> f64 {
    let center = psd.bin_of(tone_hz);
    let last = psd.bin_of(band_hz);
    let (mut tone, mut rest) = (0.0, 0.0);
    for k in 0..=last {
        let p = psd.density(k) * psd.resolution_hz;
        if k.abs_diff(center) <= tone_bins {
            tone += p;
        } else {
            rest += p;
        }
    }
    10.0 * (tone / rest).log10()
}

/// Power of a band signal at `center_hz` with occupied width `bandwidth_hz`.
///
/// Uses a long Welch segment so the band spans many bins, and widens the
/// integration window by two bins each side to catch window leakage.
pub fn band_power(signal: &SampleBuffer, center_hz: f64, bandwidth_hz: f64) -> Result<f64> {
    let segment = prev_power_of_two(signal.len()).min(1 << 16);
    let psd = welch_psd(signal, segment.max(2), 0.5)?;
    let margin = 2.0 * psd.resolution_hz;
    let half = bandwidth_hz / 2.0;
    Ok(psd.integrate(center_hz - half - margin, center_hz + half + margin))
}

fn prev_power_of_two(n: usize) -> usize {
    if n == 0 {
        0
    } else {
        1 << (usize::BITS - 1 - n.leading_zeros())
    }
}
