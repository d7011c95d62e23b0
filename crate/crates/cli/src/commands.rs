//! The `tx`, `channel`, `rx`, `simulate` and `spectrum` commands.

use std::path::Path;

use mbnfc::analysis::{find_peaks, welch_psd};
use mbnfc::channel::{add_awgn, apply_coupler};
use mbnfc::link::{link_receive, link_transmit, noise_std_for_link, LinkReport};
use mbnfc::{derive_seed, Error, SampleBuffer};
use rand::RngCore;

use crate::config_file::ConfigFile;
use crate::report::{link_report_csv, psd_csv, simulate_csv, SimRow};
use crate::sample_file::SampleFile;
use crate::CliError;

/// Stream index of payload bytes drawn by `simulate`.
const PAYLOAD_STREAM: u64 = 0;
/// Base stream index of channel noise; sweep point `i` uses `NOISE_STREAM + i`.
const NOISE_STREAM: u64 = 1;

pub const DEFAULT_SEGMENT: usize = 4096;

pub fn load_config(path: Option<&Path>) -> Result<ConfigFile, CliError> {
    match path {
        Some(p) => ConfigFile::load(p),
        None => Ok(ConfigFile::default()),
    }
}

fn write_text(path: &Path, text: &str) -> Result<(), CliError> {
    std::fs::write(path, text).map_err(CliError::io(path))
}

/// Transmits a payload file; returns the configured aggregate rate in bit/s.
pub fn cmd_tx(config: Option<&Path>, payload: &Path, output: &Path) -> Result<u64, CliError> {
    let cfg = load_config(config)?;
    let data = std::fs::read(payload).map_err(CliError::io(payload))?;
    let tx = link_transmit(&data, &cfg.link)?;
    SampleFile::from_real(&tx.signal).write(output)?;
    Ok(tx.aggregate_bps)
}

/// Noise setting of the channel command.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Noise {
    Off,
    EbN0Db(f64),
}

/// Coupler followed by optional AWGN calibrated against the coupled band powers.
pub fn channel(
    signal: &SampleBuffer,
    cfg: &ConfigFile,
    noise: Noise,
    noise_seed: u64,
) -> Result<SampleBuffer, CliError> {
    let coupled = apply_coupler(signal, &cfg.coupler.load()?);
    match noise {
        Noise::Off => Ok(coupled),
        Noise::EbN0Db(db) => {
            let std = noise_std_for_link(&coupled, &cfg.link, db)?;
            Ok(add_awgn(&coupled, std, noise_seed)?)
        }
    }
}

pub fn cmd_channel(
    config: Option<&Path>,
    input: &Path,
    output: &Path,
    noise: Noise,
    seed: Option<u64>,
) -> Result<(), CliError> {
    let cfg = load_config(config)?;
    let signal = SampleFile::read(input)?.to_real()?;
    let seed = derive_seed(seed.unwrap_or(cfg.link.seed), NOISE_STREAM);
    let out = channel(&signal, &cfg, noise, seed)?;
    SampleFile::from_real(&out).write(output)
}

fn failure_summary(report: &LinkReport) -> String {
    report
        .bands
        .iter()
        .filter(|b| !(b.sync_ok && b.crc_ok))
        .map(|b| {
            let what = if b.sync_ok {
                "crc mismatch"
            } else {
                "sync not found"
            };
            format!("band {} ({} Hz): {what}", b.band, b.carrier_hz)
        })
        .collect::<Vec<_>>()
        .join("; ")
}

/// Receives a sample file. The report is written even when a band fails.
pub fn cmd_rx(
    config: Option<&Path>,
    input: &Path,
    output: Option<&Path>,
    reference: Option<&Path>,
    report: Option<&Path>,
) -> Result<LinkReport, CliError> {
    let cfg = load_config(config)?;
    let signal = SampleFile::read(input)?.to_real()?;
    let reference = reference
        .map(|p| std::fs::read(p).map_err(CliError::io(p)))
        .transpose()?;
    let rx = link_receive(&signal, &cfg.link, reference.as_deref())?;
    if let Some(path) = report {
        write_text(path, &link_report_csv(&rx.report))?;
    }
    let Some(data) = rx.data else {
        return Err(CliError::Demod(failure_summary(&rx.report)));
    };
    if let Some(path) = output {
        std::fs::write(path, &data).map_err(CliError::io(path))?;
    }
    Ok(rx.report)
}

/// In-memory tx → channel → rx sweep over `points`, ascending with the
/// noiseless point first. Fails with a demodulation error after writing the
/// CSV if any band lost sync.
pub fn cmd_simulate(
    config: Option<&Path>,
    bytes: usize,
    seed: Option<u64>,
    points: &[Noise],
    report: Option<&Path>,
) -> Result<Vec<SimRow>, CliError> {
    let cfg = load_config(config)?;
    let seed = seed.unwrap_or(cfg.link.seed);
    let mut data = vec![0u8; bytes];
    mbnfc::bits::rng_for(derive_seed(seed, PAYLOAD_STREAM)).fill_bytes(&mut data);
    let tx = link_transmit(&data, &cfg.link)?;

    let mut points = points.to_vec();
    points.sort_by(|a, b| match (a, b) {
        (Noise::Off, Noise::Off) => std::cmp::Ordering::Equal,
        (Noise::Off, _) => std::cmp::Ordering::Less,
        (_, Noise::Off) => std::cmp::Ordering::Greater,
        (Noise::EbN0Db(x), Noise::EbN0Db(y)) => x.total_cmp(y),
    });
    let mut rows = Vec::new();
    let mut lost_sync = Vec::new();
    for (i, &point) in points.iter().enumerate() {
        let rf = channel(
            &tx.signal,
            &cfg,
            point,
            derive_seed(seed, NOISE_STREAM + i as u64),
        )?;
        let rx = link_receive(&rf, &cfg.link, Some(&data))?;
        for b in &rx.report.bands {
            let ebn0_db = match point {
                Noise::Off => None,
                Noise::EbN0Db(db) => Some(db),
            };
            if !b.sync_ok {
                lost_sync.push(format!("band {} at Eb/N0 {ebn0_db:?}", b.band));
            }
            rows.push(SimRow {
                ebn0_db,
                band: b.band,
                ber: b.ber,
                evm_rms: b.evm_rms,
            });
        }
    }
    if let Some(path) = report {
        write_text(path, &simulate_csv(&rows))?;
    }
    if !lost_sync.is_empty() {
        return Err(CliError::Demod(format!(
            "sync not found: {}",
            lost_sync.join(", ")
        )));
    }
    Ok(rows)
}

/// Welch PSD of a sample file; returns up to two strongest peaks `(Hz, dB)`.
pub fn cmd_spectrum(
    input: &Path,
    segment: usize,
    output: Option<&Path>,
) -> Result<Vec<(f64, f64)>, CliError> {
    if !segment.is_power_of_two() {
        return Err(CliError::Input(format!(
            "segment {segment} must be a power of two"
        )));
    }
    let signal = SampleFile::read(input)?.to_real()?;
    let psd = welch_psd(&signal, segment, 0.5)?;
    if let Some(path) = output {
        write_text(path, &psd_csv(&psd))?;
    }
    let min_separation = 8.0 * psd.resolution_hz;
    for count in [2, 1] {
        match find_peaks(&psd, count, min_separation) {
            Ok(p) => return Ok(p),
            Err(Error::NotEnoughPeaks { .. }) => continue,
            Err(e) => return Err(e.into()),
        }
    }
    Ok(Vec::new())
}
