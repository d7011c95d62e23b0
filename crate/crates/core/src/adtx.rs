//! All-digital transmitter: 1-bit sigma-delta modulation of I and Q, XOR
//! mixing with quadrature square-wave carriers, and multiband combining.
//!
//! Everything after pulse shaping is a ±1 datapath running at the RF clock.
//! The two mixed bitstreams of a band are summed, so a band's output takes
//! values in `gain·{-2, 0, +2}`.

use rayon::prelude::*;

use crate::config::{BandConfig, LinkConfig, SdmOrder};
use crate::modem::{self, pulse_shape, rrc_taps, RrcFilter, MAX_AXIS_AMPLITUDE};
use crate::{Error, IqSample, Result, SampleBuffer};

/// Default clip level of the modulator error memories.
pub const DEFAULT_SDM_CLAMP: f64 = 4.0;

/// Error-feedback sigma-delta modulator with NTF `(1 - z⁻¹)^order`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SdmState {
    order: SdmOrder,
    e1: f64,
    e2: f64,
    clamp: f64,
}

impl SdmState {
    pub fn new(order: SdmOrder, clamp: f64) -> Result<Self> {
        if clamp.is_nan() || clamp < 2.0 {
            return Err(Error::InvalidArgument(format!(
                "SDM clamp {clamp} must be at least 2"
            )));
        }
        Ok(Self {
            order,
            e1: 0.0,
            e2: 0.0,
            clamp,
        })
    }

    pub fn errors(&self) -> (f64, f64) {
        (self.e1, self.e2)
    }

    /// One modulator step; `x` must already lie in [-1, 1].
    #[inline]
    pub fn step(&mut self, x: f64) -> i8 {
        let v = match self.order {
            SdmOrder::First => x + self.e1,
            SdmOrder::Second => x + 2.0 * self.e1 - self.e2,
        };
        let y = if v >= 0.0 { 1 } else { -1 };
        self.e2 = self.e1;
        self.e1 = (v - y as f64).clamp(-self.clamp, self.clamp);
        y
    }
}

/// Sequence of ±1 values at a fixed rate.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BitWave {
    values: Vec<i8>,
    sample_rate_hz: u64,
}

impl BitWave {
    pub fn new(values: Vec<i8>, sample_rate_hz: u64) -> Result<Self> {
        if let Some(i) = values.iter().position(|&v| v != 1 && v != -1) {
            return Err(Error::InvalidArgument(format!("element {i} is not ±1")));
        }
        Ok(Self {
            values,
            sample_rate_hz,
        })
    }

    pub fn values(&self) -> &[i8] {
        &self.values
    }

    pub fn sample_rate_hz(&self) -> u64 {
        self.sample_rate_hz
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn mean(&self) -> f64 {
        if self.values.is_empty() {
            return 0.0;
        }
        self.values.iter().map(|&v| v as f64).sum::<f64>() / self.values.len() as f64
    }
}

/// Runs the modulator over `x` from zero state.
pub fn sdm_modulate(
    x: &[f64],
    order: SdmOrder,
    clamp: f64,
    sample_rate_hz: u64,
) -> Result<BitWave> {
    if let Some((index, &value)) = x
        .iter()
        .enumerate()
        .find(|(_, v)| v.is_nan() || v.abs() > 1.0)
    {
        return Err(Error::InputOverrange { index, value });
    }
    let mut sdm = SdmState::new(order, clamp)?;
    Ok(BitWave {
        values: x.iter().map(|&v| sdm.step(v)).collect(),
        sample_rate_hz,
    })
}

fn carrier_period(carrier_hz: u64, rf_rate_hz: u64) -> Result<usize> {
    if carrier_hz == 0 || !rf_rate_hz.is_multiple_of(4 * carrier_hz) {
        return Err(Error::InvalidArgument(format!(
            "RF rate {rf_rate_hz} Hz is not a multiple of 4×{carrier_hz} Hz"
        )));
    }
    Ok((rf_rate_hz / carrier_hz) as usize)
}

/// One period of the in-phase and quadrature square carriers.
fn carrier_tables(period: usize) -> (Vec<i8>, Vec<i8>) {
    let i_phase: Vec<i8> = (0..period)
        .map(|k| if k < period / 2 { 1 } else { -1 })
        .collect();
    let q_phase = (0..period)
        .map(|k| i_phase[(k + period / 4) % period])
        .collect();
    (i_phase, q_phase)
}

/// 50%-duty square carriers; quadrature is the in-phase wave advanced by a quarter period.
pub fn square_carrier(carrier_hz: u64, rf_rate_hz: u64, n: usize) -> Result<(BitWave, BitWave)> {
    let period = carrier_period(carrier_hz, rf_rate_hz)?;
    let (ti, tq) = carrier_tables(period);
    let i = (0..n).map(|k| ti[k % period]).collect();
    let q = (0..n).map(|k| tq[k % period]).collect();
    Ok((
        BitWave {
            values: i,
            sample_rate_hz: rf_rate_hz,
        },
        BitWave {
            values: q,
            sample_rate_hz: rf_rate_hz,
        },
    ))
}

/// XOR mixing expressed as the element-wise product in the ±1 domain.
pub fn xor_mix(data: &BitWave, carrier: &BitWave) -> Result<BitWave> {
    if data.len() != carrier.len() {
        return Err(Error::LengthMismatch {
            expected: data.len(),
            actual: carrier.len(),
        });
    }
    if data.sample_rate_hz != carrier.sample_rate_hz {
        return Err(Error::RateMismatch {
            expected: data.sample_rate_hz,
            actual: carrier.sample_rate_hz,
        });
    }
    Ok(BitWave {
        values: data
            .values
            .iter()
            .zip(&carrier.values)
            .map(|(a, b)| a * b)
            .collect(),
        sample_rate_hz: data.sample_rate_hz,
    })
}

/// Pulse shape used for `band`.
pub fn band_filter(band: &BandConfig, link: &LinkConfig) -> Result<RrcFilter> {
    let timing = link.band_timing(band)?;
    rrc_taps(
        band.rolloff,
        timing.samples_per_symbol,
        modem::DEFAULT_SPAN_SYMBOLS,
    )
}

/// Scale applied to the shaped baseband before the modulators.
///
/// Worst-case shaped amplitude maps onto `backoff`, so the modulator input
/// never leaves [-1, 1] for any symbol sequence.
pub fn drive_scale(filter: &RrcFilter, backoff: f64) -> f64 {
    backoff / (filter.peak_gain() * MAX_AXIS_AMPLITUDE)
}

/// Modulates one band's symbols onto its square-wave carrier at the RF clock.
///
/// Output length is `(n·sps + taps − 1)·hold` RF samples.
pub fn transmit_band(
    symbols: &[IqSample],
    band: &BandConfig,
    link: &LinkConfig,
) -> Result<SampleBuffer> {
    link.validate()?;
    let rf = link.rf_sample_rate_hz;
    if symbols.is_empty() {
        return Ok(SampleBuffer::zeros(0, rf));
    }
    let timing = link.band_timing(band)?;
    let filter = band_filter(band, link)?;
    let scale = drive_scale(&filter, link.backoff);
    let shaped = pulse_shape(symbols, &filter);

    let (ci, cq) = carrier_tables(timing.carrier_period);
    let period = timing.carrier_period;
    let mut sdm_i = SdmState::new(link.sdm_order, DEFAULT_SDM_CLAMP)?;
    let mut sdm_q = sdm_i;
    let mut out = Vec::with_capacity(shaped.len() * timing.hold);
    let mut phase = 0usize;
    for s in &shaped {
        let (xi, xq) = (s.re * scale, s.im * scale);
        debug_assert!(xi.abs() <= 1.0 && xq.abs() <= 1.0);
        for _ in 0..timing.hold {
            let bi = sdm_i.step(xi) * ci[phase];
            let bq = sdm_q.step(xq) * cq[phase];
            out.push(band.gain * (bi + bq) as f64);
            phase += 1;
            if phase == period {
                phase = 0;
            }
        }
    }
    Ok(SampleBuffer {
        samples: out,
        sample_rate_hz: rf,
    })
}

/// Transmits every band in parallel; results are in band order.
pub fn transmit_bands(per_band: &[Vec<IqSample>], link: &LinkConfig) -> Result<Vec<SampleBuffer>> {
    if per_band.len() != link.bands.len() {
        return Err(Error::LengthMismatch {
            expected: link.bands.len(),
            actual: per_band.len(),
        });
    }
    per_band
        .par_iter()
        .zip(link.bands.par_iter())
        .map(|(syms, band)| transmit_band(syms, band, link))
        .collect()
}

/// Digital power combiner: element-wise sum of equally long band signals.
pub fn combine_bands(band_signals: &[SampleBuffer]) -> Result<SampleBuffer> {
    let first = band_signals
        .first()
        .ok_or_else(|| Error::InvalidArgument("no band signals to combine".into()))?;
    let mut out = first.samples.clone();
    for s in &band_signals[1..] {
        if s.sample_rate_hz != first.sample_rate_hz {
            return Err(Error::RateMismatch {
                expected: first.sample_rate_hz,
                actual: s.sample_rate_hz,
            });
        }
        if s.len() != out.len() {
            return Err(Error::LengthMismatch {
                expected: out.len(),
                actual: s.len(),
            });
        }
        out.iter_mut().zip(&s.samples).for_each(|(o, v)| *o += v);
    }
    Ok(SampleBuffer {
        samples: out,
        sample_rate_hz: first.sample_rate_hz,
    })
}
