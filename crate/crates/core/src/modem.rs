//! QAM-16 mapping and root-raised-cosine pulse shaping.
//!
//! Each axis carries two Gray-coded bits: `00 → -3`, `01 → -1`, `11 → +1`,
//! `10 → +3`, scaled by `1/√10` for unit average symbol energy. The high
//! bit pair of a nibble drives I, the low pair drives Q.

use std::f64::consts::PI;

use crate::dsp::convolve_complex;
use crate::{BitBuffer, Error, IqSample, Result};

/// Default roll-off of the pulse shape.
pub const DEFAULT_ROLLOFF: f64 = 0.25;
/// Default filter span in symbols.
pub const DEFAULT_SPAN_SYMBOLS: usize = 8;

const NORM: f64 = 0.316_227_766_016_837_94; // 1/√10
const DECISION_THRESHOLD: f64 = 2.0 * NORM;

/// Amplitude of the outermost per-axis level.
pub const MAX_AXIS_AMPLITUDE: f64 = 3.0 * NORM;

fn level_of_pair(bits: u8) -> f64 {
    match bits & 0b11 {
        0b00 => -3.0,
        0b01 => -1.0,
        0b11 => 1.0,
        _ => 3.0,
    }
}

fn pair_of_value(v: f64) -> u8 {
    if v < -DECISION_THRESHOLD {
        0b00
    } else if v < 0.0 {
        0b01
    } else if v <= DECISION_THRESHOLD {
        0b11
    } else {
        0b10
    }
}

/// Maps the low four bits of `nibble` (b3 b2 b1 b0) onto the constellation.
pub fn qam16_map(nibble: u8) -> IqSample {
    IqSample::new(
        level_of_pair(nibble >> 2) * NORM,
        level_of_pair(nibble) * NORM,
    )
}

/// Nearest-point decision. Exact boundary values go to the inner level,
/// and a zero component goes to `+1`.
pub fn qam16_demap(sample: IqSample) -> u8 {
    pair_of_value(sample.re) << 2 | pair_of_value(sample.im)
}

/// The constellation point closest to `sample`.
pub fn qam16_slice(sample: IqSample) -> IqSample {
    qam16_map(qam16_demap(sample))
}

/// Maps a bit buffer (length a multiple of 4) onto symbols, MSB-first.
pub fn map_bits(bits: &BitBuffer) -> Result<Vec<IqSample>> {
    if !bits.len().is_multiple_of(4) {
        return Err(Error::InvalidArgument(format!(
            "{} bits is not a whole number of QAM-16 symbols",
            bits.len()
        )));
    }
    Ok((0..bits.len() / 4)
        .map(|i| qam16_map(bits.read_uint(4 * i, 4).unwrap() as u8))
        .collect())
}

pub fn demap_symbols(symbols: &[IqSample]) -> BitBuffer {
    let mut out = BitBuffer::with_capacity(symbols.len() * 4);
    for &s in symbols {
        out.push_bits(qam16_demap(s) as u64, 4);
    }
    out
}

/// Root-raised-cosine FIR with unit energy.
#[derive(Debug, Clone, PartialEq)]
pub struct RrcFilter {
    taps: Vec<f64>,
    samples_per_symbol: usize,
    rolloff: f64,
    span_symbols: usize,
}

impl RrcFilter {
    pub fn taps(&self) -> &[f64] {
        &self.taps
    }

    pub fn samples_per_symbol(&self) -> usize {
        self.samples_per_symbol
    }

    pub fn rolloff(&self) -> f64 {
        self.rolloff
    }

    pub fn span_symbols(&self) -> usize {
        self.span_symbols
    }

    pub fn len(&self) -> usize {
        self.taps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.taps.is_empty()
    }

    /// Largest `Σ_m |h[p + m·sps]|` over polyphase branches `p`.
    ///
    /// Times [`MAX_AXIS_AMPLITUDE`] this bounds the per-axis magnitude of
    /// any shaped symbol stream.
    pub fn peak_gain(&self) -> f64 {
        (0..self.samples_per_symbol)
            .map(|p| {
                self.taps
                    .iter()
                    .skip(p)
                    .step_by(self.samples_per_symbol)
                    .map(|h| h.abs())
                    .sum::<f64>()
            })
            .fold(0.0, f64::max)
    }
}

fn rrc_impulse(t: f64, beta: f64) -> f64 {
    const EPS: f64 = 1e-9;
    if t.abs() < EPS {
        return 1.0 - beta + 4.0 * beta / PI;
    }
    if beta > 0.0 && (t.abs() - 1.0 / (4.0 * beta)).abs() < EPS {
        let a = PI / (4.0 * beta);
        return beta / 2f64.sqrt() * ((1.0 + 2.0 / PI) * a.sin() + (1.0 - 2.0 / PI) * a.cos());
    }
    let num = (PI * t * (1.0 - beta)).sin() + 4.0 * beta * t * (PI * t * (1.0 + beta)).cos();
    let den = PI * t * (1.0 - (4.0 * beta * t).powi(2));
    num / den
}

pub fn rrc_taps(rolloff: f64, samples_per_symbol: usize, span_symbols: usize) -> Result<RrcFilter> {
    if !(0.0..=1.0).contains(&rolloff) {
        return Err(Error::InvalidArgument(format!(
            "rolloff {rolloff} outside [0, 1]"
        )));
    }
    if samples_per_symbol < 2 {
        return Err(Error::InvalidArgument(
            "samples per symbol must be at least 2".into(),
        ));
    }
    if span_symbols < 4 || !span_symbols.is_multiple_of(2) {
        return Err(Error::InvalidArgument(format!(
            "span {span_symbols} must be even and at least 4"
        )));
    }
    let n = span_symbols * samples_per_symbol + 1;
    let center = (n / 2) as f64;
    let mut taps: Vec<f64> = (0..n)
        .map(|i| rrc_impulse((i as f64 - center) / samples_per_symbol as f64, rolloff))
        .collect();
    let energy = taps.iter().map(|t| t * t).sum::<f64>().sqrt();
    taps.iter_mut().for_each(|t| *t /= energy);
    Ok(RrcFilter {
        taps,
        samples_per_symbol,
        rolloff,
        span_symbols,
    })
}

/// Zero-insertion upsampling followed by full convolution with the taps.
pub fn pulse_shape(symbols: &[IqSample], filter: &RrcFilter) -> Vec<IqSample> {
    if symbols.is_empty() {
        return Vec::new();
    }
    let sps = filter.samples_per_symbol;
    let mut up = vec![IqSample::new(0.0, 0.0); symbols.len() * sps];
    for (i, &s) in symbols.iter().enumerate() {
        up[i * sps] = s;
    }
    convolve_complex(&up, &filter.taps)
}

/// Filters with the same taps and keeps every `sps`-th output from `timing_offset`.
pub fn matched_filter(
    samples: &[IqSample],
    filter: &RrcFilter,
    timing_offset: usize,
) -> Result<Vec<IqSample>> {
    let full = convolve_complex(samples, &filter.taps);
    if timing_offset >= full.len() {
        return Err(Error::OffsetOutOfRange {
            offset: timing_offset,
            len: full.len(),
        });
    }
    Ok(full
        .into_iter()
        .skip(timing_offset)
        .step_by(filter.samples_per_symbol)
        .collect())
}
