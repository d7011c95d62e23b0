use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Frame(#[from] FrameError),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("length mismatch: expected {expected}, got {actual}")]
    LengthMismatch { expected: usize, actual: usize },
    #[error("sample rate mismatch: {expected} Hz vs {actual} Hz")]
    RateMismatch { expected: u64, actual: u64 },
    #[error("sample {index} has magnitude {value}, exceeds modulator full scale 1")]
    InputOverrange { index: usize, value: f64 },
    #[error("frequency {freq_hz} Hz outside table range [{min_hz}, {max_hz}] Hz")]
    FrequencyOutOfRange {
        freq_hz: f64,
        min_hz: f64,
        max_hz: f64,
    },
    #[error("timing offset {offset} outside buffer of {len} samples")]
    OffsetOutOfRange { offset: usize, len: usize },
    #[error("sync not found (best normalized correlation {metric:.3})")]
    SyncNotFound { metric: f64 },
    #[error("signal of {len} samples is shorter than segment of {segment}")]
    SignalTooShort { len: usize, segment: usize },
    #[error("found {found} peaks, {requested} requested")]
    NotEnoughPeaks { found: usize, requested: usize },
    #[error("inconsistent stream lengths {0:?}")]
    InconsistentStreams(Vec<usize>),
}

/// Link configuration problems, worded so the fix is obvious.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum ConfigError {
    #[error("at least one band is required")]
    NoBands,
    #[error("band {band}: {field} must be positive")]
    NotPositive { band: usize, field: &'static str },
    #[error("band {band}: rolloff {rolloff} must lie in [0, 1]")]
    Rolloff { band: usize, rolloff: f64 },
    #[error("rf_sample_rate_hz must be a multiple of 4×carrier_hz (band {band}: {rf_hz} is not divisible by {divisor})")]
    CarrierDivisibility {
        band: usize,
        rf_hz: u64,
        divisor: u64,
    },
    #[error("rf_sample_rate_hz must be a multiple of symbol_rate_hz (band {band}: {rf_hz} is not divisible by {symbol_rate_hz})")]
    SymbolRateDivisibility {
        band: usize,
        rf_hz: u64,
        symbol_rate_hz: u64,
    },
    #[error("band {band}: rf_sample_rate_hz / symbol_rate_hz = {ratio} needs a factor between 2 and 8 for pulse shaping")]
    NoSamplesPerSymbol { band: usize, ratio: u64 },
    #[error("band {band}: occupied bandwidth {occupied_hz} Hz must be below 2×carrier_hz")]
    Bandwidth { band: usize, occupied_hz: f64 },
    #[error("bands {a} and {b} overlap: passbands must be disjoint")]
    Overlap { a: usize, b: usize },
    #[error("rf_sample_rate_hz {rf_hz} must exceed twice the highest band edge {edge_hz} Hz")]
    Nyquist { rf_hz: u64, edge_hz: f64 },
    #[error("backoff {0} must lie in (0, 1]")]
    Backoff(f64),
    #[error("sdm_order {0} must be 1 or 2")]
    SdmOrder(u32),
}

/// Frame decoding failures.
#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum FrameError {
    #[error("bad start-of-frame delimiter {found:#06x}")]
    BadSfd { found: u16 },
    #[error("frame needs {needed} bits, only {available} available")]
    Truncated { needed: usize, available: usize },
    #[error("crc mismatch: frame carries {received:#010x}, payload gives {computed:#010x}")]
    CrcMismatch { received: u32, computed: u32 },
    #[error("payload of {0} bytes exceeds the 65535-byte frame limit")]
    Oversize(usize),
}
