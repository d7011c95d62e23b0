//! CSV outputs.

use std::fmt::Write;

use mbnfc::analysis::Psd;
use mbnfc::link::LinkReport;

fn opt(v: Option<f64>) -> String {
    v.filter(|x| x.is_finite())
        .map(|x| format!("{x:e}"))
        .unwrap_or_default()
}

/// `band,carrier_hz,sync,ber,evm_rms,bits`; unknown values are left empty.
pub fn link_report_csv(report: &LinkReport) -> String {
    let mut out = String::from("band,carrier_hz,sync,ber,evm_rms,bits\n");
    for b in &report.bands {
        writeln!(
            out,
            "{},{},{},{},{},{}",
            b.band,
            b.carrier_hz,
            b.sync_ok,
            opt(b.ber),
            opt(Some(b.evm_rms)),
            b.bit_count
        )
        .unwrap();
    }
    out
}

pub fn psd_csv(psd: &Psd) -> String {
    let mut out = String::with_capacity(32 * psd.len() + 16);
    out.push_str("freq_hz,power_db\n");
    for (f, p) in psd.freqs_hz.iter().zip(&psd.power_db) {
        writeln!(out, "{f},{p:.4}").unwrap();
    }
    out
}

/// One row of a simulation sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct SimRow {
    /// `None` for the noiseless point.
    pub ebn0_db: Option<f64>,
    pub band: usize,
    pub ber: Option<f64>,
    pub evm_rms: f64,
}

/// `ebn0_db,band,ber,evm_rms`, in the order given.
pub fn simulate_csv(rows: &[SimRow]) -> String {
    let mut out = String::from("ebn0_db,band,ber,evm_rms\n");
    for r in rows {
        let ebn0 = r
            .ebn0_db
            .map_or_else(|| "none".to_string(), |v| v.to_string());
        writeln!(
            out,
            "{ebn0},{},{},{}",
            r.band,
            opt(r.ber),
            opt(Some(r.evm_rms))
        )
        .unwrap();
    }
    out
}
