//! Band plan and link-wide configuration.

use crate::{ConfigError, Error, Result};

/// Largest pulse-shaping oversampling factor tried at the intermediate rate.
pub const MAX_SAMPLES_PER_SYMBOL: u64 = 8;

/// Bits carried by one QAM-16 symbol.
pub const BITS_PER_SYMBOL: u64 = 4;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BandConfig {
    pub carrier_hz: u64,
    pub symbol_rate_hz: u64,
    pub gain: f64,
    pub rolloff: f64,
}

impl BandConfig {
    pub fn new(carrier_hz: u64, symbol_rate_hz: u64) -> Self {
        Self {
            carrier_hz,
            symbol_rate_hz,
            gain: 1.0,
            rolloff: 0.25,
        }
    }

    pub fn occupied_bandwidth_hz(&self) -> f64 {
        self.symbol_rate_hz as f64 * (1.0 + self.rolloff)
    }

    pub fn passband_hz(&self) -> (f64, f64) {
        let half = self.occupied_bandwidth_hz() / 2.0;
        let fc = self.carrier_hz as f64;
        (fc - half, fc + half)
    }

    pub fn bit_rate_bps(&self) -> u64 {
        self.symbol_rate_hz * BITS_PER_SYMBOL
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SdmOrder {
    First,
    #[default]
    Second,
}

impl SdmOrder {
    pub fn as_u32(self) -> u32 {
        match self {
            SdmOrder::First => 1,
            SdmOrder::Second => 2,
        }
    }
}

impl TryFrom<u32> for SdmOrder {
    type Error = ConfigError;

    fn try_from(v: u32) -> Result<Self, ConfigError> {
        match v {
            1 => Ok(SdmOrder::First),
            2 => Ok(SdmOrder::Second),
            other => Err(ConfigError::SdmOrder(other)),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LinkConfig {
    pub bands: Vec<BandConfig>,
    pub rf_sample_rate_hz: u64,
    pub seed: u64,
    pub sdm_order: SdmOrder,
    pub backoff: f64,
}

/// Non-fatal band-plan observation.
#[derive(Debug, Clone, PartialEq)]
pub enum BandPlanWarning {
    /// The third harmonic of `aggressor`'s square-wave carrier falls inside `victim`'s passband.
    ThirdHarmonic { aggressor: usize, victim: usize },
}

impl std::fmt::Display for BandPlanWarning {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            BandPlanWarning::ThirdHarmonic { aggressor, victim } => write!(
                f,
                "third harmonic of band {aggressor} carrier lands in band {victim} passband"
            ),
        }
    }
}

impl LinkConfig {
    /// 250 MHz and 400 MHz carriers at 4 Msym/s each, 8 GHz RF clock.
    pub fn default_two_band() -> Self {
        Self {
            bands: vec![
                BandConfig::new(250_000_000, 4_000_000),
                BandConfig::new(400_000_000, 4_000_000),
            ],
            rf_sample_rate_hz: 8_000_000_000,
            seed: 1,
            sdm_order: SdmOrder::Second,
            backoff: 0.5,
        }
    }

    /// 250 MHz and 500 MHz carriers at a 4 GHz RF clock, for quick runs.
    pub fn fast_two_band() -> Self {
        Self {
            bands: vec![
                BandConfig::new(250_000_000, 4_000_000),
                BandConfig::new(500_000_000, 4_000_000),
            ],
            rf_sample_rate_hz: 4_000_000_000,
            ..Self::default_two_band()
        }
    }

    /// Checks every band-plan invariant and returns the non-fatal lint findings.
    pub fn validate(&self) -> Result<Vec<BandPlanWarning>, ConfigError> {
        if self.bands.is_empty() {
            return Err(ConfigError::NoBands);
        }
        if !(self.backoff > 0.0 && self.backoff <= 1.0) {
            return Err(ConfigError::Backoff(self.backoff));
        }
        let rf = self.rf_sample_rate_hz;
        let mut top_edge = 0.0f64;
        for (i, b) in self.bands.iter().enumerate() {
            if b.carrier_hz == 0 {
                return Err(ConfigError::NotPositive {
                    band: i,
                    field: "carrier_hz",
                });
            }
            if b.symbol_rate_hz == 0 {
                return Err(ConfigError::NotPositive {
                    band: i,
                    field: "symbol_rate_hz",
                });
            }
            if !(b.gain > 0.0 && b.gain.is_finite()) {
                return Err(ConfigError::NotPositive {
                    band: i,
                    field: "gain",
                });
            }
            if !(0.0..=1.0).contains(&b.rolloff) {
                return Err(ConfigError::Rolloff {
                    band: i,
                    rolloff: b.rolloff,
                });
            }
            if rf == 0 || !rf.is_multiple_of(4 * b.carrier_hz) {
                return Err(ConfigError::CarrierDivisibility {
                    band: i,
                    rf_hz: rf,
                    divisor: 4 * b.carrier_hz,
                });
            }
            if !rf.is_multiple_of(b.symbol_rate_hz) {
                return Err(ConfigError::SymbolRateDivisibility {
                    band: i,
                    rf_hz: rf,
                    symbol_rate_hz: b.symbol_rate_hz,
                });
            }
            let ratio = rf / b.symbol_rate_hz;
            if samples_per_symbol_for_ratio(ratio).is_none() {
                return Err(ConfigError::NoSamplesPerSymbol { band: i, ratio });
            }
            let occupied = b.occupied_bandwidth_hz();
            if occupied >= 2.0 * b.carrier_hz as f64 {
                return Err(ConfigError::Bandwidth {
                    band: i,
                    occupied_hz: occupied,
                });
            }
            top_edge = top_edge.max(b.passband_hz().1);
        }
        for a in 0..self.bands.len() {
            for b in a + 1..self.bands.len() {
                let (lo_a, hi_a) = self.bands[a].passband_hz();
                let (lo_b, hi_b) = self.bands[b].passband_hz();
                if lo_a < hi_b && lo_b < hi_a {
                    return Err(ConfigError::Overlap { a, b });
                }
            }
        }
        if rf as f64 <= 2.0 * top_edge {
            return Err(ConfigError::Nyquist {
                rf_hz: rf,
                edge_hz: top_edge,
            });
        }
        Ok(self.lint())
    }

    fn lint(&self) -> Vec<BandPlanWarning> {
        let mut out = Vec::new();
        for (a, agg) in self.bands.iter().enumerate() {
            let h3 = 3.0 * agg.carrier_hz as f64;
            for (v, victim) in self.bands.iter().enumerate() {
                let (lo, hi) = victim.passband_hz();
                if v != a && h3 >= lo && h3 <= hi {
                    out.push(BandPlanWarning::ThirdHarmonic {
                        aggressor: a,
                        victim: v,
                    });
                }
            }
        }
        out
    }

    /// Configured aggregate throughput `Σ 4·symbol_rate`.
    pub fn aggregate_bps(&self) -> u64 {
        self.bands.iter().map(BandConfig::bit_rate_bps).sum()
    }

    pub(crate) fn band_timing(&self, band: &BandConfig) -> Result<BandTiming> {
        BandTiming::new(band, self.rf_sample_rate_hz)
    }
}

/// Rate relationships between the symbol clock, the pulse-shaping rate and the RF clock.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BandTiming {
    /// RF samples per symbol.
    pub rf_per_symbol: u64,
    /// Samples per symbol at the pulse-shaping rate.
    pub samples_per_symbol: usize,
    /// Zero-order-hold factor from the pulse-shaping rate to the RF clock.
    pub hold: usize,
    /// RF samples per carrier period.
    pub carrier_period: usize,
}

impl BandTiming {
    pub fn new(band: &BandConfig, rf_sample_rate_hz: u64) -> Result<Self> {
        if band.symbol_rate_hz == 0 || !rf_sample_rate_hz.is_multiple_of(band.symbol_rate_hz) {
            return Err(Error::InvalidArgument(format!(
                "symbol rate {} does not divide RF rate {rf_sample_rate_hz}",
                band.symbol_rate_hz
            )));
        }
        if band.carrier_hz == 0 || !rf_sample_rate_hz.is_multiple_of(4 * band.carrier_hz) {
            return Err(Error::InvalidArgument(format!(
                "4×carrier {} does not divide RF rate {rf_sample_rate_hz}",
                band.carrier_hz
            )));
        }
        let rf_per_symbol = rf_sample_rate_hz / band.symbol_rate_hz;
        let sps = samples_per_symbol_for_ratio(rf_per_symbol).ok_or_else(|| {
            Error::InvalidArgument(format!(
                "no pulse-shaping factor in 2..=8 divides {rf_per_symbol}"
            ))
        })?;
        Ok(Self {
            rf_per_symbol,
            samples_per_symbol: sps as usize,
            hold: (rf_per_symbol / sps) as usize,
            carrier_period: (rf_sample_rate_hz / band.carrier_hz) as usize,
        })
    }

    pub fn shaping_rate_hz(&self, band: &BandConfig) -> u64 {
        band.symbol_rate_hz * self.samples_per_symbol as u64
    }
}

fn samples_per_symbol_for_ratio(ratio: u64) -> Option<u64> {
    (2..=MAX_SAMPLES_PER_SYMBOL.min(ratio))
        .rev()
        .find(|d| ratio.is_multiple_of(*d))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_plan_is_valid_and_quiet() {
        let cfg = LinkConfig::default_two_band();
        assert_eq!(cfg.validate().unwrap(), vec![]);
        assert_eq!(cfg.aggregate_bps(), 32_000_000);
        LinkConfig::fast_two_band().validate().unwrap();
    }

    #[test]
    fn timing_of_default_band() {
        let cfg = LinkConfig::default_two_band();
        let t = cfg.band_timing(&cfg.bands[0]).unwrap();
        assert_eq!(t.rf_per_symbol, 2000);
        assert_eq!(t.samples_per_symbol, 8);
        assert_eq!(t.hold, 250);
        assert_eq!(t.carrier_period, 32);
    }

    #[test]
    fn rejects_carrier_not_dividing_rf_rate() {
        let mut cfg = LinkConfig::default_two_band();
        cfg.rf_sample_rate_hz = 4_000_000_000;
        let err = cfg.validate().unwrap_err();
        assert!(matches!(
            err,
            ConfigError::CarrierDivisibility { band: 1, .. }
        ));
        assert!(err.to_string().contains("multiple of 4×carrier_hz"));
    }

    #[test]
    fn rejects_each_invariant() {
        let base = LinkConfig::default_two_band();
        let mut c = base.clone();
        c.bands.clear();
        assert_eq!(c.validate(), Err(ConfigError::NoBands));

        let mut c = base.clone();
        c.bands[0].rolloff = 1.5;
        assert!(matches!(c.validate(), Err(ConfigError::Rolloff { .. })));

        let mut c = base.clone();
        c.bands[1].symbol_rate_hz = 3_000_000;
        assert!(matches!(
            c.validate(),
            Err(ConfigError::SymbolRateDivisibility { .. })
        ));

        let mut c = base.clone();
        c.bands[1].carrier_hz = 250_000_000;
        assert_eq!(c.validate(), Err(ConfigError::Overlap { a: 0, b: 1 }));

        let mut c = base.clone();
        c.backoff = 0.0;
        assert!(matches!(c.validate(), Err(ConfigError::Backoff(_))));

        let mut c = base.clone();
        c.bands[0].gain = -1.0;
        assert!(matches!(
            c.validate(),
            Err(ConfigError::NotPositive { field: "gain", .. })
        ));

        let mut c = base.clone();
        c.bands = vec![BandConfig::new(1_000_000, 4_000_000)];
        c.rf_sample_rate_hz = 8_000_000;
        assert!(matches!(c.validate(), Err(ConfigError::Bandwidth { .. })));

        assert_eq!(SdmOrder::try_from(3), Err(ConfigError::SdmOrder(3)));
    }

    #[test]
    fn lint_flags_third_harmonic_overlap() {
        let mut cfg = LinkConfig::default_two_band();
        cfg.bands[1].carrier_hz = 750_000_000;
        cfg.rf_sample_rate_hz = 6_000_000_000;
        let warnings = cfg.validate().unwrap();
        assert_eq!(
            warnings,
            vec![BandPlanWarning::ThirdHarmonic {
                aggressor: 0,
                victim: 1
            }]
        );
    }

    #[test]
    fn eight_band_rate_arithmetic() {
        let cfg = LinkConfig {
            bands: (1..=8)
                .map(|i| BandConfig::new(i * 100_000_000, 10_000_000))
                .collect(),
            rf_sample_rate_hz: 8_000_000_000,
            ..LinkConfig::default_two_band()
        };
        assert_eq!(cfg.aggregate_bps(), 320_000_000);
    }
}
