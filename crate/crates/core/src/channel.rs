//! Near-field coupler and noise channel.
//!
//! The coupler is a frequency → loss table realized as a linear-phase FIR;
//! noise is real AWGN over the full RF bandwidth.

use rand_distr::{Distribution, StandardNormal};

use crate::bits::rng_for;
use crate::dsp::{convolve_same, frequency_sampling_design};
use crate::{Error, Result, SampleBuffer};

/// Default FIR length of the coupler realization.
pub const DEFAULT_COUPLER_TAPS: usize = 257;

/// Piecewise-linear coupling loss in dB over frequency.
#[derive(Debug, Clone, PartialEq)]
pub struct CouplerModel {
    points: Vec<(f64, f64)>,
}

impl CouplerModel {
    pub fn new(points: Vec<(f64, f64)>) -> Result<Self> {
        if points.len() < 2 {
            return Err(Error::InvalidArgument(
                "coupler table needs at least two points".into(),
            ));
        }
        for w in points.windows(2) {
            if w[1].0.is_nan() || w[1].0 <= w[0].0 {
                return Err(Error::InvalidArgument(format!(
                    "coupler frequencies must be strictly increasing ({} then {})",
                    w[0].0, w[1].0
                )));
            }
        }
        if let Some(&(f, l)) = points
            .iter()
            .find(|(f, l)| !l.is_finite() || *l <= 0.0 || !f.is_finite() || *f < 0.0)
        {
            return Err(Error::InvalidArgument(format!(
                "coupler loss must be positive and finite (got {l} dB at {f} Hz)"
            )));
        }
        Ok(Self { points })
    }

    /// 100 MHz–1 GHz, falling from 20 dB to 10 dB.
    pub fn default_profile() -> Self {
        Self {
            points: vec![
                (100e6, 20.0),
                (250e6, 17.0),
                (400e6, 14.5),
                (550e6, 12.5),
                (700e6, 11.2),
                (850e6, 10.4),
                (1000e6, 10.0),
            ],
        }
    }

    /// Frequency-independent loss over every frequency a simulation can reach.
    pub fn flat(loss_db: f64) -> Result<Self> {
        Self::new(vec![(0.0, loss_db), (1e15, loss_db)])
    }

    pub fn points(&self) -> &[(f64, f64)] {
        &self.points
    }

    pub fn frequency_range(&self) -> (f64, f64) {
        (self.points[0].0, self.points[self.points.len() - 1].0)
    }

    /// Interpolated loss; `f_hz` must lie within the table.
    pub fn loss_at(&self, f_hz: f64) -> Result<f64> {
        let (lo, hi) = self.frequency_range();
        if !(f_hz >= lo && f_hz <= hi) {
            return Err(Error::FrequencyOutOfRange {
                freq_hz: f_hz,
                min_hz: lo,
                max_hz: hi,
            });
        }
        Ok(self.interpolate(f_hz))
    }

    /// Interpolated loss with flat extension past the table edges.
    pub fn loss_extended(&self, f_hz: f64) -> f64 {
        let (lo, hi) = self.frequency_range();
        self.interpolate(f_hz.clamp(lo, hi))
    }

    fn interpolate(&self, f: f64) -> f64 {
        let i = self.points.partition_point(|p| p.0 <= f);
        if i == 0 {
            return self.points[0].1;
        }
        if i == self.points.len() {
            return self.points[i - 1].1;
        }
        let (f0, l0) = self.points[i - 1];
        let (f1, l1) = self.points[i];
        l0 + (l1 - l0) * (f - f0) / (f1 - f0)
    }

    /// FIR whose magnitude at `f` is `-loss(f)` dB.
    pub fn design_fir(&self, sample_rate_hz: u64, num_taps: usize) -> Vec<f64> {
        let fs = sample_rate_hz as f64;
        frequency_sampling_design(num_taps, |f| 10f64.powf(-self.loss_extended(f * fs) / 20.0))
    }

    /// Parses `freq_hz,loss_db` CSV with a header row.
    pub fn from_csv(text: &str) -> Result<Self> {
        let mut lines = text
            .lines()
            .map(str::trim)
            .filter(|l| !l.is_empty() && !l.starts_with('#'));
        match lines.next() {
            Some(h) if h.replace(' ', "") == "freq_hz,loss_db" => {}
            other => {
                return Err(Error::InvalidArgument(format!(
                    "coupler CSV must start with header `freq_hz,loss_db`, found {other:?}"
                )))
            }
        }
        let mut points = Vec::new();
        for (n, line) in lines.enumerate() {
            let mut cols = line.split(',').map(str::trim);
            let parse = |c: Option<&str>| -> Result<f64> {
                c.and_then(|v| v.parse().ok()).ok_or_else(|| {
                    Error::InvalidArgument(format!("coupler CSV row {}: `{line}`", n + 2))
                })
            };
            let f = parse(cols.next())?;
            let l = parse(cols.next())?;
            points.push((f, l));
        }
        Self::new(points)
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("freq_hz,loss_db\n");
        for (f, l) in &self.points {
            out.push_str(&format!("{f},{l}\n"));
        }
        out
    }
}

/// Filters `signal` through the coupler; output length equals input length.
pub fn apply_coupler(signal: &SampleBuffer, model: &CouplerModel) -> SampleBuffer {
    apply_coupler_with_taps(signal, model, DEFAULT_COUPLER_TAPS)
}

pub fn apply_coupler_with_taps(
    signal: &SampleBuffer,
    model: &CouplerModel,
    num_taps: usize,
) -> SampleBuffer {
    let taps = model.design_fir(signal.sample_rate_hz, num_taps);
    SampleBuffer {
        samples: convolve_same(&signal.samples, &taps),
        sample_rate_hz: signal.sample_rate_hz,
    }
}

/// Real noise standard deviation that gives `ebn0_db` for a band of
/// `signal_power` at `bit_rate_hz`, with noise spread over `rf_rate_hz / 2`.
pub fn noise_std_for_ebn0(
    signal_power: f64,
    bit_rate_hz: f64,
    rf_rate_hz: f64,
    ebn0_db: f64,
) -> f64 {
    let eb = signal_power / bit_rate_hz;
    let n0 = eb / 10f64.powf(ebn0_db / 10.0);
    (n0 * rf_rate_hz / 2.0).sqrt()
}

/// Adds i.i.d. Gaussian noise; the draw sequence depends only on `seed`.
pub fn add_awgn(signal: &SampleBuffer, std: f64, seed: u64) -> Result<SampleBuffer> {
    if !std.is_finite() || std < 0.0 {
        return Err(Error::InvalidArgument(format!(
            "noise std {std} must be non-negative"
        )));
    }
    if std == 0.0 {
        return Ok(signal.clone());
    }
    let mut rng = rng_for(seed);
    let samples = signal
        .samples
        .iter()
        .map(|&s| {
            let n: f64 = StandardNormal.sample(&mut rng);
            s + std * n
        })
        .collect();
    Ok(SampleBuffer {
        samples,
        sample_rate_hz: signal.sample_rate_hz,
    })
}
