//! Binary sample files.
//!
//! Layout: magic `MBNFC1`, kind byte (0 real, 1 complex interleaved I/Q),
//! one zero byte, the sample rate as a little-endian `u64`, then samples
//! as little-endian `f32`.

use std::path::Path;

use mbnfc::SampleBuffer;

use crate::CliError;

pub const MAGIC: &[u8; 6] = b"MBNFC1";
const HEADER_LEN: usize = 16;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SampleKind {
    Real = 0,
    Complex = 1,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SampleFile {
    pub kind: SampleKind,
    pub sample_rate_hz: u64,
    /// Raw values; complex files interleave I and Q.
    pub values: Vec<f32>,
}

impl SampleFile {
    pub fn from_real(buffer: &SampleBuffer) -> Self {
        Self {
            kind: SampleKind::Real,
            sample_rate_hz: buffer.sample_rate_hz,
            values: buffer.samples.iter().map(|&v| v as f32).collect(),
        }
    }

    pub fn to_real(&self) -> Result<SampleBuffer, CliError> {
        if self.kind != SampleKind::Real {
            return Err(CliError::Input("expected a real-valued sample file".into()));
        }
        SampleBuffer::new(
            self.values.iter().map(|&v| v as f64).collect(),
            self.sample_rate_hz,
        )
        .map_err(|e| CliError::Input(e.to_string()))
    }

    pub fn encode(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(HEADER_LEN + 4 * self.values.len());
        out.extend_from_slice(MAGIC);
        out.push(self.kind as u8);
        out.push(0);
        out.extend_from_slice(&self.sample_rate_hz.to_le_bytes());
        for v in &self.values {
            out.extend_from_slice(&v.to_le_bytes());
        }
        out
    }

    pub fn decode(bytes: &[u8]) -> Result<Self, CliError> {
        let invalid = |msg: &str| CliError::Input(format!("not a sample file: {msg}"));
        if bytes.len() < HEADER_LEN {
            return Err(invalid("shorter than the 16-byte header"));
        }
        if &bytes[..6] != MAGIC {
            return Err(invalid("bad magic"));
        }
        let kind = match bytes[6] {
            0 => SampleKind::Real,
            1 => SampleKind::Complex,
            k => return Err(invalid(&format!("unknown kind {k}"))),
        };
        if bytes[7] != 0 {
            return Err(invalid("reserved byte is not zero"));
        }
        let sample_rate_hz = u64::from_le_bytes(bytes[8..16].try_into().unwrap());
        let body = &bytes[HEADER_LEN..];
        let unit = if kind == SampleKind::Complex { 8 } else { 4 };
        if !body.len().is_multiple_of(unit) {
            return Err(invalid("length does not match sample kind"));
        }
        let values = body
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes(c.try_into().unwrap()))
            .collect();
        Ok(Self {
            kind,
            sample_rate_hz,
            values,
        })
    }

    pub fn read(path: &Path) -> Result<Self, CliError> {
        let bytes = std::fs::read(path).map_err(CliError::io(path))?;
        Self::decode(&bytes).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))
    }

    pub fn write(&self, path: &Path) -> Result<(), CliError> {
        std::fs::write(path, self.encode()).map_err(CliError::io(path))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn header_layout() {
        let f = SampleFile {
            kind: SampleKind::Real,
            sample_rate_hz: 8_000_000_000,
            values: vec![1.0, -2.0],
        };
        let bytes = f.encode();
        assert_eq!(&bytes[..6], b"MBNFC1");
        assert_eq!(bytes[6], 0);
        assert_eq!(bytes[7], 0);
        assert_eq!(&bytes[8..16], &8_000_000_000u64.to_le_bytes());
        assert_eq!(&bytes[16..20], &1.0f32.to_le_bytes());
        assert_eq!(bytes.len(), 24);
    }

    #[test]
    fn rejects_malformed() {
        let good = SampleFile {
            kind: SampleKind::Complex,
            sample_rate_hz: 10,
            values: vec![0.5, 0.25],
        }
        .encode();
        assert!(SampleFile::decode(&good).is_ok());
        let mut b = good.clone();
        b[0] = b'X';
        assert!(SampleFile::decode(&b).is_err());
        let mut b = good.clone();
        b[7] = 1;
        assert!(SampleFile::decode(&b).is_err());
        let mut b = good.clone();
        b[6] = 2;
        assert!(SampleFile::decode(&b).is_err());
        assert!(SampleFile::decode(&good[..good.len() - 4]).is_err());
        assert!(SampleFile::decode(&good[..10]).is_err());
    }

    proptest! {
        #[test]
        fn bit_exact_round_trip(bits in proptest::collection::vec(any::<u32>(), 0..200), rate in any::<u64>(), complex in any::<bool>()) {
            let mut values: Vec<f32> = bits.into_iter().map(f32::from_bits).collect();
            if complex && values.len() % 2 == 1 {
                values.pop();
            }
            let f = SampleFile {
                kind: if complex { SampleKind::Complex } else { SampleKind::Real },
                sample_rate_hz: rate,
                values,
            };
            let back = SampleFile::decode(&f.encode()).unwrap();
            prop_assert_eq!(back.kind, f.kind);
            prop_assert_eq!(back.sample_rate_hz, f.sample_rate_hz);
            let a: Vec<u32> = back.values.iter().map(|v| v.to_bits()).collect();
            let b: Vec<u32> = f.values.iter().map(|v| v.to_bits()).collect();
            prop_assert_eq!(a, b);
        }
    }
}
