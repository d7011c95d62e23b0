//! Bit packing, CRC-32 and seed derivation.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::{Error, Result};

/// Ordered bit sequence. Packs MSB-first, zero-padded to whole bytes.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash)]
pub struct BitBuffer {
    bits: Vec<bool>,
}

impl BitBuffer {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with_capacity(bits: usize) -> Self {
        Self {
            bits: Vec::with_capacity(bits),
        }
    }

    pub fn from_bits(bits: Vec<bool>) -> Self {
        Self { bits }
    }

    /// All bits of `bytes`, MSB of the first byte first.
    pub fn from_bytes(bytes: &[u8]) -> Self {
        let mut buf = Self::with_capacity(bytes.len() * 8);
        for &b in bytes {
            buf.push_bits(b as u64, 8);
        }
        buf
    }

    /// Inverse of [`BitBuffer::pack`] for a known bit length.
    pub fn unpack(bytes: &[u8], len: usize) -> Result<Self> {
        if len > bytes.len() * 8 {
            return Err(Error::LengthMismatch {
                expected: len.div_ceil(8),
                actual: bytes.len(),
            });
        }
        let bits = (0..len)
            .map(|i| bytes[i / 8] >> (7 - i % 8) & 1 == 1)
            .collect();
        Ok(Self { bits })
    }

    pub fn len(&self) -> usize {
        self.bits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_empty()
    }

    pub fn push(&mut self, bit: bool) {
        self.bits.push(bit);
    }

    /// Appends the low `count` bits of `value`, most significant first.
    pub fn push_bits(&mut self, value: u64, count: u32) {
        debug_assert!(count <= 64);
        for i in (0..count).rev() {
            self.bits.push(value >> i & 1 == 1);
        }
    }

    pub fn extend_from(&mut self, other: &BitBuffer) {
        self.bits.extend_from_slice(&other.bits);
    }

    pub fn get(&self, index: usize) -> Option<bool> {
        self.bits.get(index).copied()
    }

    pub fn flip(&mut self, index: usize) {
        self.bits[index] = !self.bits[index];
    }

    pub fn as_slice(&self) -> &[bool] {
        &self.bits
    }

    pub fn iter(&self) -> impl Iterator<Item = bool> + '_ {
        self.bits.iter().copied()
    }

    /// Reads `count` bits starting at `start` as an unsigned integer, MSB first.
    pub fn read_uint(&self, start: usize, count: usize) -> Option<u64> {
        if count > 64 || start + count > self.bits.len() {
            return None;
        }
        Some(
            self.bits[start..start + count]
                .iter()
                .fold(0u64, |acc, &b| acc << 1 | b as u64),
        )
    }

    pub fn slice(&self, start: usize, end: usize) -> BitBuffer {
        BitBuffer::from_bits(self.bits[start..end].to_vec())
    }

    /// `ceil(len / 8)` bytes, MSB-first, trailing pad bits zero.
    pub fn pack(&self) -> Vec<u8> {
        let mut out = vec![0u8; self.bits.len().div_ceil(8)];
        for (i, &b) in self.bits.iter().enumerate() {
            if b {
                out[i / 8] |= 0x80 >> (i % 8);
            }
        }
        out
    }
}

impl FromIterator<bool> for BitBuffer {
    fn from_iter<I: IntoIterator<Item = bool>>(iter: I) -> Self {
        Self {
            bits: iter.into_iter().collect(),
        }
    }
}

/// Free-function form of [`BitBuffer::pack`].
pub fn pack_bits(bits: &BitBuffer) -> Vec<u8> {
    bits.pack()
}

const CRC32_POLY_REFLECTED: u32 = 0xEDB8_8320;

const CRC32_TABLE: [u32; 256] = {
    let mut table = [0u32; 256];
    let mut i = 0;
    while i < 256 {
        let mut c = i as u32;
        let mut k = 0;
        while k < 8 {
            c = if c & 1 != 0 {
                CRC32_POLY_REFLECTED ^ (c >> 1)
            } else {
                c >> 1
            };
            k += 1;
        }
        table[i] = c;
        i += 1;
    }
    table
};

/// Reflected CRC-32 (polynomial 0x04C11DB7, init and final XOR 0xFFFFFFFF).
pub fn crc32(bytes: &[u8]) -> u32 {
    !bytes.iter().fold(!0u32, |crc, &b| {
        CRC32_TABLE[((crc ^ b as u32) & 0xFF) as usize] ^ (crc >> 8)
    })
}

const GOLDEN_GAMMA: u64 = 0x9E37_79B9_7F4A_7C15;

/// `seed + stream_index * 0x9E3779B97F4A7C15 mod 2^64`.
pub fn derive_seed(seed: u64, stream_index: u64) -> u64 {
    seed.wrapping_add(stream_index.wrapping_mul(GOLDEN_GAMMA))
}

/// The generator every stochastic stage draws from.
pub fn rng_for(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}
