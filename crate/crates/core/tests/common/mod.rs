#![allow(dead_code)]

use mbnfc::bits::rng_for;
use mbnfc::config::{BandConfig, LinkConfig};
use rand::RngCore;

/// The default band plan with every rate divided by 250.
pub fn scaled_link() -> LinkConfig {
    LinkConfig {
        bands: vec![
            BandConfig::new(1_000_000, 16_000),
            BandConfig::new(1_600_000, 16_000),
        ],
        rf_sample_rate_hz: 32_000_000,
        ..LinkConfig::default_two_band()
    }
}

pub fn random_bytes(n: usize, seed: u64) -> Vec<u8> {
    let mut v = vec![0u8; n];
    rng_for(seed).fill_bytes(&mut v);
    v
}
