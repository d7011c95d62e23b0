//! Argument parsing and dispatch for the `mbnfc` binary.

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use crate::commands::{self, Noise, DEFAULT_SEGMENT};
use crate::CliError;

/// Multiband near-field link simulator.
#[derive(Parser)]
#[command(name = "mbnfc", version)]
pub struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct ConfigArg {
    /// Link configuration file; the default two-band link when omitted.
    #[arg(long, short)]
    config: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Frame and transmit a payload file into a sample file.
    Tx {
        #[command(flatten)]
        config: ConfigArg,
        payload: PathBuf,
        output: PathBuf,
    },
    /// Pass a sample file through the coupler model and optional noise.
    Channel {
        #[command(flatten)]
        config: ConfigArg,
        input: PathBuf,
        output: PathBuf,
        /// Per-band Eb/N0 in dB.
        #[arg(
            long,
            conflicts_with = "no_noise",
            required_unless_present = "no_noise"
        )]
        ebn0: Option<f64>,
        #[arg(long)]
        no_noise: bool,
        /// Noise seed; defaults to the config seed.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Demodulate a sample file back into the payload.
    Rx {
        #[command(flatten)]
        config: ConfigArg,
        input: PathBuf,
        /// Where to write the recovered payload.
        output: Option<PathBuf>,
        /// Transmitted payload, for bit error counting.
        #[arg(long = "ref")]
        reference: Option<PathBuf>,
        /// Per-band report CSV.
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Run tx → channel → rx in memory over a list of Eb/N0 points.
    Simulate {
        #[command(flatten)]
        config: ConfigArg,
        #[arg(long, default_value_t = 1024)]
        bytes: usize,
        #[arg(long)]
        seed: Option<u64>,
        /// Comma-separated Eb/N0 values in dB; `none` for a noiseless point.
        #[arg(long, value_delimiter = ',', default_value = "none")]
        ebn0: Vec<String>,
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Welch power spectral density of a sample file.
    Spectrum {
        input: PathBuf,
        #[arg(long, default_value_t = DEFAULT_SEGMENT)]
        segment: usize,
        /// PSD CSV output.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn parse_points(values: &[String]) -> Result<Vec<Noise>, CliError> {
    values
        .iter()
        .map(|v| {
            let v = v.trim();
            if v.eq_ignore_ascii_case("none") {
                Ok(Noise::Off)
            } else {
                v.parse()
                    .map(Noise::EbN0Db)
                    .map_err(|_| CliError::Input(format!("bad Eb/N0 value '{v}'")))
            }
        })
        .collect()
}

fn dispatch(cli: Cli, out: &mut dyn Write) -> Result<(), CliError> {
    match cli.command {
        Command::Tx {
            config,
            payload,
            output,
        } => {
            let bps = commands::cmd_tx(config.config.as_deref(), &payload, &output)?;
            writeln!(out, "{bps} bps").ok();
        }
        Command::Channel {
            config,
            input,
            output,
            ebn0,
            no_noise,
            seed,
        } => {
            let noise = match (no_noise, ebn0) {
                (false, Some(db)) => Noise::EbN0Db(db),
                _ => Noise::Off,
            };
            commands::cmd_channel(config.config.as_deref(), &input, &output, noise, seed)?;
        }
        Command::Rx {
            config,
            input,
            output,
            reference,
            report,
        } => {
            let r = commands::cmd_rx(
                config.config.as_deref(),
                &input,
                output.as_deref(),
                reference.as_deref(),
                report.as_deref(),
            )?;
            for b in &r.bands {
                let ber = b.ber.map_or_else(|| "-".to_string(), |v| format!("{v:e}"));
                writeln!(
                    out,
                    "band {} ({} Hz): ber {ber}, evm {:.4}",
                    b.band, b.carrier_hz, b.evm_rms
                )
                .ok();
            }
            writeln!(out, "{} bps", r.aggregate_bps).ok();
        }
        Command::Simulate {
            config,
            bytes,
            seed,
            ebn0,
            report,
        } => {
            let points = parse_points(&ebn0)?;
            let result = commands::cmd_simulate(
                config.config.as_deref(),
                bytes,
                seed,
                &points,
                report.as_deref(),
            );
            let rows = match &result {
                Ok(rows) => rows.as_slice(),
                Err(_) => &[],
            };
            for r in rows {
                let ebn0 = r
                    .ebn0_db
                    .map_or_else(|| "none".to_string(), |v| format!("{v} dB"));
                let ber = r.ber.map_or_else(|| "-".to_string(), |v| format!("{v:e}"));
                writeln!(
                    out,
                    "Eb/N0 {ebn0}, band {}: ber {ber}, evm {:.4}",
                    r.band, r.evm_rms
                )
                .ok();
            }
            result?;
        }
        Command::Spectrum {
            input,
            segment,
            out: csv,
        } => {
            for (f, p) in commands::cmd_spectrum(&input, segment, csv.as_deref())? {
                writeln!(out, "peak {f} Hz {p:.2} dB").ok();
            }
        }
    }
    Ok(())
}

/// Runs the command line `args` (program name first), writing results to
/// `out` and diagnostics to `err`. Returns the process exit code.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            if e.use_stderr() {
                write!(err, "{e}").ok();
            } else {
                write!(out, "{e}").ok();
            }
            return e.exit_code();
        }
    };
    match dispatch(cli, out) {
        Ok(()) => 0,
        Err(e) => {
            writeln!(err, "error: {e}").ok();
            e.exit_code()
        }
    }
}
