//! `key = value` link configuration files.
//!
//! ```text
//! # two bands
//! rf_sample_rate_hz = 8000000000
//! band.0.carrier_hz = 250000000
//! band.0.symbol_rate_hz = 4000000
//! band.1.carrier_hz = 400000000
//! band.1.symbol_rate_hz = 4000000
//! coupler_table = flat:15
//! ```
//!
//! Keys left out take the values of the default two-band link. When any
//! `band.N.*` key appears the band list comes entirely from the file, with
//! indices running from 0 without gaps.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use mbnfc::channel::CouplerModel;
use mbnfc::config::{BandConfig, BandPlanWarning, LinkConfig, SdmOrder};

use crate::CliError;

/// Where the coupler loss table comes from.
#[derive(Debug, Clone, PartialEq)]
pub enum CouplerSource {
    Default,
    Flat(f64),
    Table(PathBuf),
}

impl CouplerSource {
    pub fn load(&self) -> Result<CouplerModel, CliError> {
        match self {
            CouplerSource::Default => Ok(CouplerModel::default_profile()),
            CouplerSource::Flat(db) => Ok(CouplerModel::flat(*db)?),
            CouplerSource::Table(path) => {
                let text = std::fs::read_to_string(path).map_err(CliError::io(path))?;
                CouplerModel::from_csv(&text)
                    .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConfigFile {
    pub link: LinkConfig,
    pub coupler: CouplerSource,
    pub warnings: Vec<BandPlanWarning>,
}

impl Default for ConfigFile {
    fn default() -> Self {
        Self {
            link: LinkConfig::default_two_band(),
            coupler: CouplerSource::Default,
            warnings: Vec::new(),
        }
    }
}

#[derive(Default)]
struct BandKeys {
    carrier_hz: Option<u64>,
    symbol_rate_hz: Option<u64>,
    rolloff: Option<f64>,
    gain: Option<f64>,
}

fn bad(line: usize, msg: impl std::fmt::Display) -> CliError {
    CliError::Config(format!("line {line}: {msg}"))
}

fn parse_u64(line: usize, key: &str, value: &str) -> Result<u64, CliError> {
    let cleaned = value.replace('_', "");
    if let Ok(v) = cleaned.parse::<u64>() {
        return Ok(v);
    }
    match cleaned.parse::<f64>() {
        Ok(f) if f >= 0.0 && f.fract() == 0.0 && f < u64::MAX as f64 => Ok(f as u64),
        _ => Err(bad(
            line,
            format!("{key}: '{value}' is not a non-negative integer"),
        )),
    }
}

fn parse_f64(line: usize, key: &str, value: &str) -> Result<f64, CliError> {
    value
        .parse::<f64>()
        .ok()
        .filter(|v| v.is_finite())
        .ok_or_else(|| bad(line, format!("{key}: '{value}' is not a number")))
}

impl ConfigFile {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(CliError::io(path))?;
        Self::parse(&text, path.parent())
    }

    /// Parses config text; relative coupler table paths resolve against `base_dir`.
    pub fn parse(text: &str, base_dir: Option<&Path>) -> Result<Self, CliError> {
        let mut cfg = Self::default();
        let mut bands: BTreeMap<usize, BandKeys> = BTreeMap::new();
        let mut seen = std::collections::HashSet::new();

        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let content = raw.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            let (key, value) = content
                .split_once('=')
                .map(|(k, v)| (k.trim(), v.trim()))
                .ok_or_else(|| bad(line, format!("expected 'key = value', got '{content}'")))?;
            if !seen.insert(key.to_string()) {
                return Err(bad(line, format!("duplicate key '{key}'")));
            }
            match key {
                "rf_sample_rate_hz" => cfg.link.rf_sample_rate_hz = parse_u64(line, key, value)?,
                "seed" => cfg.link.seed = parse_u64(line, key, value)?,
                "backoff" => cfg.link.backoff = parse_f64(line, key, value)?,
                "sdm_order" => {
                    let order = parse_u64(line, key, value)?;
                    cfg.link.sdm_order =
                        SdmOrder::try_from(order as u32).map_err(|e| bad(line, e))?;
                }
                "coupler_table" => {
                    cfg.coupler = if value.eq_ignore_ascii_case("default") {
                        CouplerSource::Default
                    } else if let Some(db) = value.strip_prefix("flat:") {
                        CouplerSource::Flat(parse_f64(line, key, db.trim())?)
                    } else {
                        let p = PathBuf::from(value);
                        CouplerSource::Table(match base_dir {
                            Some(dir) if p.is_relative() => dir.join(p),
                            _ => p,
                        })
                    }
                }
                _ => {
                    let Some((index, field)) = key
                        .strip_prefix("band.")
                        .and_then(|rest| rest.split_once('.'))
                    else {
                        return Err(bad(line, format!("unknown key '{key}'")));
                    };
                    let index: usize = index.parse().map_err(|_| {
                        bad(line, format!("'{key}': band index must be an integer"))
                    })?;
                    let entry = bands.entry(index).or_default();
                    match field {
                        "carrier_hz" => entry.carrier_hz = Some(parse_u64(line, key, value)?),
                        "symbol_rate_hz" => {
                            entry.symbol_rate_hz = Some(parse_u64(line, key, value)?)
                        }
                        "rolloff" => entry.rolloff = Some(parse_f64(line, key, value)?),
                        "gain" => entry.gain = Some(parse_f64(line, key, value)?),
                        _ => return Err(bad(line, format!("unknown key '{key}'"))),
                    }
                }
            }
        }

        if !bands.is_empty() {
            cfg.link.bands = bands
                .into_iter()
                .enumerate()
                .map(|(expected, (index, keys))| {
                    if index != expected {
                        return Err(CliError::Config(format!(
                            "band indices must run 0, 1, 2, ... without gaps; band.{expected} is missing"
                        )));
                    }
                    let missing = |field| CliError::Config(format!("band.{index}.{field} is required"));
                    let mut band = BandConfig::new(
                        keys.carrier_hz.ok_or_else(|| missing("carrier_hz"))?,
                        keys.symbol_rate_hz.ok_or_else(|| missing("symbol_rate_hz"))?,
                    );
                    if let Some(r) = keys.rolloff {
                        band.rolloff = r;
                    }
                    if let Some(g) = keys.gain {
                        band.gain = g;
                    }
                    Ok(band)
                })
                .collect::<Result<_, _>>()?;
        }
        cfg.warnings = cfg.link.validate()?;
        Ok(cfg)
    }

    /// Renders a config that parses back to the same link and coupler source.
    pub fn to_text(&self) -> String {
        let l = &self.link;
        let mut out = format!(
            "rf_sample_rate_hz = {}\nsdm_order = {}\nbackoff = {}\nseed = {}\n",
            l.rf_sample_rate_hz,
            l.sdm_order.as_u32(),
            l.backoff,
            l.seed
        );
        match &self.coupler {
            CouplerSource::Default => {}
            CouplerSource::Flat(db) => out.push_str(&format!("coupler_table = flat:{db}\n")),
            CouplerSource::Table(p) => out.push_str(&format!("coupler_table = {}\n", p.display())),
        }
        for (i, b) in l.bands.iter().enumerate() {
            out.push_str(&format!(
                "band.{i}.carrier_hz = {}\nband.{i}.symbol_rate_hz = {}\nband.{i}.rolloff = {}\nband.{i}.gain = {}\n",
                b.carrier_hz, b.symbol_rate_hz, b.rolloff, b.gain
            ));
        }
        out
    }
}
