//! Link-level simulator for a multiband near-field RF interconnect.
//!
//! The transmit chain maps bytes onto per-band QAM-16 frames, pulse-shapes
//! them, and produces a 1-bit RF waveform per band with a sigma-delta
//! modulator followed by XOR mixing against square-wave carriers. The bands
//! are summed, passed through a parametric coupler model with optional AWGN,
//! and recovered by a coherent per-band receiver.
//!
//! ```no_run
//! use mbnfc::{config::LinkConfig, link};
//!
//! let cfg = LinkConfig::default_two_band();
//! let tx = link::link_transmit(b"hello", &cfg).unwrap();
//! let rx = link::link_receive(&tx.signal, &cfg, None).unwrap();
//! assert_eq!(rx.data.as_deref(), Some(&b"hello"[..]));
//! ```

pub mod adtx;
pub mod analysis;
pub mod bits;
pub mod channel;
pub mod config;
pub mod dsp;
mod error;
pub mod link;
pub mod modem;
pub mod receiver;

pub use bits::{crc32, derive_seed, BitBuffer};
pub use error::{ConfigError, Error, FrameError, Result};

use num_complex::Complex64;

/// Complex baseband sample.
pub type IqSample = Complex64;

/// Real-valued sample sequence at a fixed integer rate.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleBuffer {
    pub samples: Vec<f64>,
    pub sample_rate_hz: u64,
}

impl SampleBuffer {
    pub fn new(samples: Vec<f64>, sample_rate_hz: u64) -> Result<Self> {
        if sample_rate_hz == 0 {
            return Err(Error::InvalidArgument(
                "sample rate must be positive".into(),
            ));
        }
        if let Some(i) = samples.iter().position(|s| !s.is_finite()) {
            return Err(Error::InvalidArgument(format!("sample {i} is not finite")));
        }
        Ok(Self {
            samples,
            sample_rate_hz,
        })
    }

    pub fn zeros(len: usize, sample_rate_hz: u64) -> Self {
        Self {
            samples: vec![0.0; len],
            sample_rate_hz,
        }
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// Mean of the squared samples; zero for an empty buffer.
    pub fn mean_power(&self) -> f64 {
        if self.samples.is_empty() {
            return 0.0;
        }
        self.samples.iter().map(|s| s * s).sum::<f64>() / self.samples.len() as f64
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            samples: self.samples.iter().map(|s| s * factor).collect(),
            sample_rate_hz: self.sample_rate_hz,
        }
    }
}

/// Complex sample sequence at a fixed integer rate.
#[derive(Debug, Clone, PartialEq)]
pub struct IqBuffer {
    pub samples: Vec<IqSample>,
    pub sample_rate_hz: u64,
}
