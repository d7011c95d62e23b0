//! Coherent per-band receiver.
//!
//! Chain: sinusoidal downconversion, cascaded windowed-sinc decimation to
//! the pulse-shaping rate, RRC matched filter, preamble correlation over
//! every sampling phase, then derotation and QAM-16 slicing.

use std::f64::consts::PI;

use crate::config::{BandConfig, LinkConfig};
use crate::dsp::windowed_sinc_lowpass;
use crate::link::{self, preamble_symbols, HEADER_BITS};
use crate::modem::{self, demap_symbols, matched_filter, qam16_slice};
use crate::{BitBuffer, Error, FrameError, IqSample, Result, SampleBuffer};

/// Tap count of each decimation low-pass.
pub const LOWPASS_TAPS: usize = 129;
/// Minimum normalized correlation for a detected preamble.
pub const SYNC_THRESHOLD: f64 = 0.5;
/// Largest decimation factor handled by a single stage when it can be split.
const MAX_STAGE_DECIMATION: usize = 10;
/// Stage cutoff as a fraction of the stage output rate.
const STAGE_CUTOFF_FRACTION: f64 = 0.4;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SyncResult {
    /// Symbol index of the first preamble symbol.
    pub sample_offset: usize,
    pub phase_rad: f64,
    pub amplitude: f64,
    pub peak_metric: f64,
}

/// Local oscillator `2·e^{-j2π·fc·k/fs}` tabulated over one exact period.
struct LocalOscillator {
    table: Vec<IqSample>,
}

impl LocalOscillator {
    fn new(carrier_hz: u64, sample_rate_hz: u64) -> Self {
        let g = gcd(carrier_hz, sample_rate_hz).max(1);
        let period = (sample_rate_hz / g) as usize;
        let step = carrier_hz / g;
        let table = (0..period)
            .map(|k| {
                let cycles = ((k as u128 * step as u128) % period as u128) as f64 / period as f64;
                IqSample::from_polar(2.0, -2.0 * PI * cycles)
            })
            .collect();
        Self { table }
    }

    #[inline]
    fn at(&self, k: usize) -> IqSample {
        self.table[k % self.table.len()]
    }
}

fn gcd(mut a: u64, mut b: u64) -> u64 {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

/// `y(k) = s(k)·(2cos(2πfc·k/fs) − 2j·sin(2πfc·k/fs))`.
pub fn downconvert(signal: &SampleBuffer, carrier_hz: u64) -> Vec<IqSample> {
    let lo = LocalOscillator::new(carrier_hz, signal.sample_rate_hz);
    signal
        .samples
        .iter()
        .enumerate()
        .map(|(k, &s)| lo.at(k) * s)
        .collect()
}

/// Filters and keeps samples `start, start + decim, …`; group delay compensated.
fn fir_decimate(
    len: usize,
    input: impl Fn(usize) -> IqSample,
    taps: &[f64],
    decim: usize,
    start: usize,
) -> Vec<IqSample> {
    let half = taps.len() / 2;
    (start..len)
        .step_by(decim)
        .map(|n| {
            let mut acc = IqSample::new(0.0, 0.0);
            let lo = (n + half + 1).saturating_sub(len);
            let hi = (n + half).min(taps.len() - 1);
            for (j, &h) in taps.iter().enumerate().take(hi + 1).skip(lo) {
                acc += input(n + half - j) * h;
            }
            acc
        })
        .collect()
}

fn validate_cutoff(sample_rate_hz: f64, cutoff_hz: f64, decim: usize) -> Result<()> {
    if decim == 0 {
        return Err(Error::InvalidArgument(
            "decimation factor must be at least 1".into(),
        ));
    }
    let limit = sample_rate_hz / (2.0 * decim as f64);
    if !(cutoff_hz > 0.0 && cutoff_hz < limit) {
        return Err(Error::InvalidArgument(format!(
            "cutoff {cutoff_hz} Hz must lie in (0, {limit}) Hz"
        )));
    }
    Ok(())
}

/// Hamming-windowed-sinc low-pass followed by keeping every `decim`-th sample.
pub fn lowpass_decimate(
    iq: &[IqSample],
    sample_rate_hz: f64,
    cutoff_hz: f64,
    decim: usize,
) -> Result<Vec<IqSample>> {
    validate_cutoff(sample_rate_hz, cutoff_hz, decim)?;
    let taps = windowed_sinc_lowpass(LOWPASS_TAPS, cutoff_hz / sample_rate_hz);
    Ok(fir_decimate(iq.len(), |i| iq[i], &taps, decim, 0))
}

/// Splits a decimation factor into stages of at most 10 where the factors allow.
pub fn decimation_plan(total: usize) -> Vec<usize> {
    let mut primes = Vec::new();
    let mut n = total;
    let mut p = 2;
    while p * p <= n {
        while n.is_multiple_of(p) {
            primes.push(p);
            n /= p;
        }
        p += 1;
    }
    if n > 1 {
        primes.push(n);
    }
    primes.sort_unstable();
    let mut stages = Vec::new();
    while let Some(big) = primes.pop() {
        let mut stage = big;
        while let Some(&small) = primes.first() {
            if stage * small > MAX_STAGE_DECIMATION {
                break;
            }
            stage *= small;
            primes.remove(0);
        }
        stages.push(stage);
    }
    stages.sort_unstable_by(|a, b| b.cmp(a));
    stages
}

/// Downconverts `rf` around `carrier_hz` and decimates by `total` in stages.
///
/// The first kept RF sample is `start`, so output `m` sits at RF index
/// `start + m·total`.
pub fn downconvert_decimate(
    rf: &SampleBuffer,
    carrier_hz: u64,
    total: usize,
    start: usize,
) -> Vec<IqSample> {
    let lo = LocalOscillator::new(carrier_hz, rf.sample_rate_hz);
    let plan = decimation_plan(total.max(1));
    let mut rate = rf.sample_rate_hz as f64;
    let mut current: Option<Vec<IqSample>> = None;
    for (i, &d) in plan.iter().enumerate() {
        let out_rate = rate / d as f64;
        let taps = windowed_sinc_lowpass(LOWPASS_TAPS, STAGE_CUTOFF_FRACTION * out_rate / rate);
        let next = match &current {
            None => {
                let s = &rf.samples;
                fir_decimate(
                    s.len(),
                    |k| lo.at(k) * s[k],
                    &taps,
                    d,
                    if i == 0 { start } else { 0 },
                )
            }
            Some(x) => fir_decimate(x.len(), |k| x[k], &taps, d, 0),
        };
        current = Some(next);
        rate = out_rate;
    }
    current.unwrap_or_else(|| {
        rf.samples
            .iter()
            .enumerate()
            .skip(start)
            .map(|(k, &s)| lo.at(k) * s)
            .collect()
    })
}

/// Sliding normalized complex correlation against `preamble`.
pub fn synchronize(stream: &[IqSample], preamble: &[IqSample]) -> Result<SyncResult> {
    let best = correlate_best(stream, preamble)?;
    if best.peak_metric >= SYNC_THRESHOLD {
        Ok(best)
    } else {
        Err(Error::SyncNotFound {
            metric: best.peak_metric,
        })
    }
}

/// Strongest correlation, whether or not it clears the threshold.
fn correlate_best(stream: &[IqSample], preamble: &[IqSample]) -> Result<SyncResult> {
    let l = preamble.len();
    if l < 16 {
        return Err(Error::InvalidArgument(format!(
            "preamble of {l} symbols is shorter than 16"
        )));
    }
    if stream.len() < l {
        return Err(Error::SyncNotFound { metric: 0.0 });
    }
    let preamble_energy: f64 = preamble.iter().map(|p| p.norm_sqr()).sum();
    let mut window_energy: f64 = stream[..l].iter().map(|y| y.norm_sqr()).sum();
    let mut best = (0usize, IqSample::new(0.0, 0.0), 0.0f64, window_energy);
    for o in 0..=stream.len() - l {
        if o > 0 {
            window_energy += stream[o + l - 1].norm_sqr() - stream[o - 1].norm_sqr();
        }
        let c: IqSample = stream[o..o + l]
            .iter()
            .zip(preamble)
            .map(|(y, p)| y * p.conj())
            .sum();
        let mag = c.norm();
        if mag > best.2 {
            best = (o, c, mag, window_energy);
        }
    }
    let (offset, c, mag, energy) = best;
    let denom = (energy.max(0.0) * preamble_energy).sqrt();
    let metric = if denom > 0.0 {
        (mag / denom).min(1.0)
    } else {
        0.0
    };
    let mut phase = c.arg();
    if phase <= -PI {
        phase = PI;
    }
    Ok(SyncResult {
        sample_offset: offset,
        phase_rad: phase,
        amplitude: mag / preamble_energy,
        peak_metric: metric,
    })
}

/// Symbols following a detected preamble, derotated and amplitude-normalized.
#[derive(Debug, Clone)]
pub struct BandSymbols {
    pub symbols: Vec<IqSample>,
    pub sync: SyncResult,
}

/// Runs the receive chain up to preamble removal.
pub fn receive_band_symbols(
    rf: &SampleBuffer,
    band: &BandConfig,
    link: &LinkConfig,
) -> Result<BandSymbols> {
    if rf.sample_rate_hz != link.rf_sample_rate_hz {
        return Err(Error::RateMismatch {
            expected: link.rf_sample_rate_hz,
            actual: rf.sample_rate_hz,
        });
    }
    let timing = link.band_timing(band)?;
    let filter = modem::rrc_taps(
        band.rolloff,
        timing.samples_per_symbol,
        modem::DEFAULT_SPAN_SYMBOLS,
    )?;
    // The zero-order hold delays the waveform by (hold − 1)/2 RF samples.
    let start = (timing.hold - 1) / 2;
    let baseband = downconvert_decimate(rf, band.carrier_hz, timing.hold, start);
    if baseband.is_empty() {
        return Err(Error::SyncNotFound { metric: 0.0 });
    }
    let preamble = preamble_symbols();
    let sps = timing.samples_per_symbol;
    let mut best: Option<(SyncResult, Vec<IqSample>)> = None;
    for phase in 0..sps {
        let Ok(stream) = matched_filter(&baseband, &filter, phase) else {
            continue;
        };
        let Ok(s) = correlate_best(&stream, preamble) else {
            continue;
        };
        if best
            .as_ref()
            .is_none_or(|(b, _)| s.peak_metric > b.peak_metric)
        {
            best = Some((s, stream));
        }
    }
    let (sync, stream) = best.ok_or(Error::SyncNotFound { metric: 0.0 })?;
    if sync.peak_metric < SYNC_THRESHOLD {
        return Err(Error::SyncNotFound {
            metric: sync.peak_metric,
        });
    }
    let derotate = IqSample::from_polar(1.0 / sync.amplitude, -sync.phase_rad);
    let symbols = stream[sync.sample_offset + preamble.len()..]
        .iter()
        .map(|&y| y * derotate)
        .collect();
    Ok(BandSymbols { symbols, sync })
}

/// RMS error vector relative to the RMS of the sliced decisions.
pub fn evm_rms(symbols: &[IqSample]) -> f64 {
    if symbols.is_empty() {
        return 0.0;
    }
    let (err, sig) = symbols.iter().fold((0.0, 0.0), |(e, s), &z| {
        let d = qam16_slice(z);
        (e + (z - d).norm_sqr(), s + d.norm_sqr())
    });
    (err / sig).sqrt()
}

/// Demodulated frame bits of one band.
#[derive(Debug, Clone)]
pub struct Demodulated {
    /// Frame bits starting at the SFD, sized by the received length field.
    pub bits: BitBuffer,
    /// Derotated symbols covering `bits`.
    pub symbols: Vec<IqSample>,
    pub evm_rms: f64,
    pub sync: SyncResult,
}

pub fn demodulate_band(
    rf: &SampleBuffer,
    band: &BandConfig,
    link: &LinkConfig,
) -> Result<Demodulated> {
    demodulate_symbols(receive_band_symbols(rf, band, link)?, None)
}

/// Slices a synchronized symbol stream into frame bits.
///
/// The frame extent comes from the received length field unless
/// `payload_len` overrides it; a short stream yields the bits available.
pub fn demodulate_symbols(
    received: BandSymbols,
    payload_len: Option<usize>,
) -> Result<Demodulated> {
    let BandSymbols { mut symbols, sync } = received;
    let header_symbols = HEADER_BITS / 4;
    let payload_len = match payload_len {
        Some(n) => n,
        None => {
            if symbols.len() < header_symbols {
                return Err(FrameError::Truncated {
                    needed: HEADER_BITS,
                    available: symbols.len() * 4,
                }
                .into());
            }
            demap_symbols(&symbols[..header_symbols])
                .read_uint(16, 16)
                .unwrap() as usize
        }
    };
    let needed = link::frame_symbol_count(payload_len) - preamble_symbols().len();
    symbols.truncate(needed);
    Ok(Demodulated {
        bits: demap_symbols(&symbols),
        evm_rms: evm_rms(&symbols),
        symbols,
        sync,
    })
}
