//! Stream striping, framing, and end-to-end link orchestration.
//!
//! A frame on air is a 64-symbol corner-point preamble followed by the
//! QAM-16 mapping of `sfd(16) ‖ length(16) ‖ payload ‖ crc32(32)`, MSB-first.
//! The CRC covers the two length bytes and the payload.

use std::sync::LazyLock;

use rayon::prelude::*;

use crate::adtx::{self, combine_bands, transmit_band};
use crate::analysis::band_power;
use crate::bits::crc32;
use crate::channel::noise_std_for_ebn0;
use crate::config::LinkConfig;
use crate::modem::{map_bits, qam16_map};
use crate::receiver::{demodulate_symbols, receive_band_symbols, BandSymbols};
use crate::{BitBuffer, Error, FrameError, IqSample, Result, SampleBuffer};

/// Start-of-frame delimiter.
pub const SFD: u16 = 0xB7A0;
pub const PREAMBLE_SYMBOLS: usize = 64;
/// SFD plus length field.
pub const HEADER_BITS: usize = 32;
pub const CRC_BITS: usize = 32;
pub const MAX_PAYLOAD: usize = u16::MAX as usize;
/// Zero symbols sent before and after each band's frame.
pub const GUARD_SYMBOLS: usize = 16;

/// One period of the maximal-length sequence of `x⁶ + x⁵ + 1`, seeded `0b111111`.
pub fn m_sequence() -> Vec<bool> {
    let mut state: u8 = 0b11_1111;
    (0..63)
        .map(|_| {
            let out = state & 0b10_0000 != 0;
            let feedback = ((state >> 5) ^ (state >> 4)) & 1;
            state = ((state << 1) | feedback) & 0b11_1111;
            out
        })
        .collect()
}

static PREAMBLE: LazyLock<Vec<IqSample>> = LazyLock::new(|| {
    let m = m_sequence();
    let mut symbols: Vec<IqSample> = (0..PREAMBLE_SYMBOLS - 1)
        .map(|i| {
            let a = m[(2 * i) % 63] as u8;
            let b = m[(2 * i + 1) % 63] as u8;
            // outer level on both axes: the low bit of each pair is zero
            qam16_map((a << 3) | (b << 1))
        })
        .collect();
    symbols.push(symbols[0]);
    symbols
});

/// The fixed 64-symbol preamble.
pub fn preamble_symbols() -> &'static [IqSample] {
    &PREAMBLE
}

/// Symbols in a frame carrying `payload_len` bytes, preamble included.
pub fn frame_symbol_count(payload_len: usize) -> usize {
    PREAMBLE_SYMBOLS + (HEADER_BITS + 8 * payload_len + CRC_BITS) / 4
}

/// Byte streams striped across bands.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BandPlan {
    pub streams: Vec<Vec<u8>>,
}

impl BandPlan {
    pub fn band_count(&self) -> usize {
        self.streams.len()
    }
}

/// Byte-wise round robin: byte `i` goes to band `i mod n_bands`.
pub fn split_stream(data: &[u8], n_bands: usize) -> Result<BandPlan> {
    if n_bands == 0 {
        return Err(Error::InvalidArgument(
            "band count must be at least 1".into(),
        ));
    }
    let mut streams = vec![Vec::with_capacity(data.len() / n_bands + 1); n_bands];
    for (i, &byte) in data.iter().enumerate() {
        streams[i % n_bands].push(byte);
    }
    Ok(BandPlan { streams })
}

/// Inverse of [`split_stream`].
pub fn merge_streams(streams: &[Vec<u8>]) -> Result<Vec<u8>> {
    let lens: Vec<usize> = streams.iter().map(Vec::len).collect();
    let Some(&first) = lens.first() else {
        return Err(Error::InvalidArgument("no streams to merge".into()));
    };
    let consistent = lens.windows(2).all(|w| w[0] >= w[1]) && first - lens[lens.len() - 1] <= 1;
    if !consistent {
        return Err(Error::InconsistentStreams(lens));
    }
    let total: usize = lens.iter().sum();
    Ok((0..total)
        .map(|i| streams[i % streams.len()][i / streams.len()])
        .collect())
}

/// Frame bits from the SFD through the CRC.
pub fn frame_bits(payload: &[u8]) -> Result<BitBuffer> {
    if payload.len() > MAX_PAYLOAD {
        return Err(FrameError::Oversize(payload.len()).into());
    }
    let len = payload.len() as u16;
    let mut covered = Vec::with_capacity(payload.len() + 2);
    covered.extend_from_slice(&len.to_be_bytes());
    covered.extend_from_slice(payload);
    let mut bits = BitBuffer::with_capacity(HEADER_BITS + 8 * payload.len() + CRC_BITS);
    bits.push_bits(SFD as u64, 16);
    bits.extend_from(&BitBuffer::from_bytes(&covered));
    bits.push_bits(crc32(&covered) as u64, 32);
    Ok(bits)
}

/// Preamble followed by the mapped frame bits.
pub fn frame_encode(payload: &[u8]) -> Result<Vec<IqSample>> {
    let bits = frame_bits(payload)?;
    let mut symbols = Vec::with_capacity(frame_symbol_count(payload.len()));
    symbols.extend_from_slice(preamble_symbols());
    symbols.extend(map_bits(&bits)?);
    Ok(symbols)
}

/// Parses frame bits that begin at the SFD.
pub fn frame_decode(bits: &BitBuffer) -> Result<Vec<u8>, FrameError> {
    let truncated = |needed| FrameError::Truncated {
        needed,
        available: bits.len(),
    };
    let sfd = bits
        .read_uint(0, 16)
        .ok_or_else(|| truncated(HEADER_BITS))? as u16;
    if sfd != SFD {
        return Err(FrameError::BadSfd { found: sfd });
    }
    let len = bits
        .read_uint(16, 16)
        .ok_or_else(|| truncated(HEADER_BITS))? as usize;
    let needed = HEADER_BITS + 8 * len + CRC_BITS;
    if bits.len() < needed {
        return Err(truncated(needed));
    }
    let covered = bits.slice(16, HEADER_BITS + 8 * len).pack();
    let received = bits.read_uint(HEADER_BITS + 8 * len, 32).unwrap() as u32;
    let computed = crc32(&covered);
    if received != computed {
        return Err(FrameError::CrcMismatch { received, computed });
    }
    Ok(covered[2..].to_vec())
}

/// Transmitted waveform and what went into it.
#[derive(Debug, Clone)]
pub struct LinkTransmission {
    pub signal: SampleBuffer,
    /// Configured throughput `Σ 4·symbol_rate`.
    pub aggregate_bps: u64,
    /// Per-band payload streams.
    pub streams: Vec<Vec<u8>>,
}

/// Stripes `data` over the bands, frames each stream and sums the band waveforms.
///
/// Each band carries guard symbols around its frame and is zero-padded at
/// the symbol level so all bands end on the same RF sample.
pub fn link_transmit(data: &[u8], link: &LinkConfig) -> Result<LinkTransmission> {
    link.validate()?;
    let plan = split_stream(data, link.bands.len())?;
    let mut per_band = plan
        .streams
        .iter()
        .map(|s| {
            let mut symbols = vec![IqSample::new(0.0, 0.0); GUARD_SYMBOLS];
            symbols.extend(frame_encode(s)?);
            symbols.extend(std::iter::repeat_n(IqSample::new(0.0, 0.0), GUARD_SYMBOLS));
            Ok(symbols)
        })
        .collect::<Result<Vec<_>>>()?;

    let span = adtx::band_filter(&link.bands[0], link)?.span_symbols();
    let natural: Vec<(u64, usize)> = link
        .bands
        .iter()
        .zip(&per_band)
        .map(|(band, syms)| {
            let t = link.band_timing(band)?;
            let filter_len = span * t.samples_per_symbol + 1;
            Ok((
                t.rf_per_symbol,
                (syms.len() * t.samples_per_symbol + filter_len - 1) * t.hold,
            ))
        })
        .collect::<Result<_>>()?;
    let target = natural.iter().map(|&(_, len)| len).max().unwrap_or(0);
    for (syms, &(rf_per_symbol, len)) in per_band.iter_mut().zip(&natural) {
        let extra = (target - len).div_ceil(rf_per_symbol as usize);
        syms.extend(std::iter::repeat_n(IqSample::new(0.0, 0.0), extra));
    }

    let band_signals = per_band
        .par_iter()
        .zip(link.bands.par_iter())
        .map(|(syms, band)| {
            let mut s = transmit_band(syms, band, link)?;
            s.samples.truncate(target);
            Ok(s)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(LinkTransmission {
        signal: combine_bands(&band_signals)?,
        aggregate_bps: link.aggregate_bps(),
        streams: plan.streams,
    })
}

/// Real AWGN standard deviation giving `ebn0_db` on average across the bands.
///
/// Each band's power is measured in its occupied bandwidth of `signal`; the
/// per-band noise densities are averaged so a single white noise source
/// serves all bands.
pub fn noise_std_for_link(signal: &SampleBuffer, link: &LinkConfig, ebn0_db: f64) -> Result<f64> {
    if link.bands.is_empty() {
        return Err(Error::Config(crate::ConfigError::NoBands));
    }
    let mut variance = 0.0;
    for band in &link.bands {
        let power = band_power(signal, band.carrier_hz as f64, band.occupied_bandwidth_hz())?;
        let std = noise_std_for_ebn0(
            power,
            band.bit_rate_bps() as f64,
            signal.sample_rate_hz as f64,
            ebn0_db,
        );
        variance += std * std;
    }
    Ok((variance / link.bands.len() as f64).sqrt())
}

/// Receive-side measurements of one band.
#[derive(Debug, Clone, PartialEq)]
pub struct BandReport {
    pub band: usize,
    pub carrier_hz: u64,
    pub sync_ok: bool,
    pub crc_ok: bool,
    /// `error_count / bit_count`; `None` when nothing could be compared.
    pub ber: Option<f64>,
    pub evm_rms: f64,
    pub bit_count: usize,
    pub error_count: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LinkReport {
    pub bands: Vec<BandReport>,
    /// Configured rate summed over the bands that decoded.
    pub aggregate_bps: u64,
}

impl LinkReport {
    pub fn all_ok(&self) -> bool {
        self.bands.iter().all(|b| b.sync_ok && b.crc_ok)
    }
}

#[derive(Debug, Clone)]
pub struct LinkReception {
    /// Merged payload, present when every band decoded.
    pub data: Option<Vec<u8>>,
    pub report: LinkReport,
    /// Decoded stream per band.
    pub streams: Vec<Option<Vec<u8>>>,
    /// Derotated frame symbols per band after the preamble.
    pub symbols: Vec<Vec<IqSample>>,
}

/// Demodulates every band, decodes frames and merges the streams.
///
/// With `reference` (the transmitted data), BER is counted over the payload
/// bits of each band whether or not its CRC passed. Without it, a band with
/// a valid CRC counts its payload bits as error free.
pub fn link_receive(
    rf: &SampleBuffer,
    link: &LinkConfig,
    reference: Option<&[u8]>,
) -> Result<LinkReception> {
    link.validate()?;
    if rf.sample_rate_hz != link.rf_sample_rate_hz {
        return Err(Error::RateMismatch {
            expected: link.rf_sample_rate_hz,
            actual: rf.sample_rate_hz,
        });
    }
    let reference = reference
        .map(|r| split_stream(r, link.bands.len()))
        .transpose()?;
    let outcomes: Vec<(BandReport, Option<Vec<u8>>, Vec<IqSample>)> = link
        .bands
        .par_iter()
        .enumerate()
        .map(|(i, _)| {
            let expected = reference.as_ref().map(|p| p.streams[i].as_slice());
            receive_band(rf, link, i, expected)
        })
        .collect::<Result<_>>()?;

    let mut report = LinkReport {
        bands: Vec::with_capacity(outcomes.len()),
        aggregate_bps: 0,
    };
    let mut streams = Vec::with_capacity(outcomes.len());
    let mut symbols = Vec::with_capacity(outcomes.len());
    for ((r, s, sy), band) in outcomes.into_iter().zip(&link.bands) {
        if r.sync_ok && r.crc_ok {
            report.aggregate_bps += band.bit_rate_bps();
        }
        report.bands.push(r);
        streams.push(s);
        symbols.push(sy);
    }
    let data = if report.all_ok() {
        let decoded: Vec<Vec<u8>> = streams.iter().flatten().cloned().collect();
        merge_streams(&decoded).ok()
    } else {
        None
    };
    Ok(LinkReception {
        data,
        report,
        streams,
        symbols,
    })
}

fn receive_band(
    rf: &SampleBuffer,
    link: &LinkConfig,
    index: usize,
    expected: Option<&[u8]>,
) -> Result<(BandReport, Option<Vec<u8>>, Vec<IqSample>)> {
    let band = &link.bands[index];
    let mut report = BandReport {
        band: index,
        carrier_hz: band.carrier_hz,
        sync_ok: false,
        crc_ok: false,
        ber: None,
        evm_rms: f64::NAN,
        bit_count: 0,
        error_count: 0,
    };
    let received: BandSymbols = match receive_band_symbols(rf, band, link) {
        Ok(r) => r,
        Err(Error::SyncNotFound { .. }) => {
            if let Some(exp) = expected {
                report.bit_count = 8 * exp.len();
                report.error_count = report.bit_count;
                report.ber = (report.bit_count > 0).then_some(1.0);
            }
            return Ok((report, None, Vec::new()));
        }
        Err(e) => return Err(e),
    };
    report.sync_ok = true;

    // Decode with the length the frame itself announces.
    let decoded = demodulate_symbols(received.clone(), None)
        .ok()
        .and_then(|d| frame_decode(&d.bits).ok().map(|p| (p, d)));
    let (payload, demod) = match (decoded, expected) {
        (Some((p, d)), None) => (Some(p), d),
        (Some((p, _)), Some(exp)) => (Some(p), demodulate_symbols(received, Some(exp.len()))?),
        (None, Some(exp)) => (None, demodulate_symbols(received, Some(exp.len()))?),
        (None, None) => (None, demodulate_symbols(received, Some(0))?),
    };
    report.crc_ok = payload.is_some();
    report.evm_rms = demod.evm_rms;
    match expected {
        Some(exp) => {
            let reference = BitBuffer::from_bytes(exp);
            report.bit_count = reference.len();
            report.error_count = (0..reference.len())
                .filter(|&k| demod.bits.get(HEADER_BITS + k) != reference.get(k))
                .count();
        }
        None => {
            if let Some(p) = &payload {
                report.bit_count = 8 * p.len();
            }
        }
    }
    if report.bit_count > 0 && (expected.is_some() || report.crc_ok) {
        report.ber = Some(report.error_count as f64 / report.bit_count as f64);
    }
    Ok((report, payload, demod.symbols))
}
