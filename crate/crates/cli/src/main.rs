//! `oetransduce`: conversion spectra, bandwidth scans, noise, loss and
//! coupling optimization for transducer arrays, written as CSV/JSON files.
//!
//! Exit codes: 0 success, 1 I/O failure, 2 bad config or flags, 3 numerical
//! failure, 4 optimization found no feasible profile.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

mod commands;
mod config;
mod error;
mod output;

use error::{CliError, CliResult};

const VERSION: &str = concat!(env!("CARGO_PKG_VERSION"), " (config schema 1)");

#[derive(Debug, Parser)]
#[command(name = "oetransduce", version = VERSION, about = "Optoelectromechanical transducer array simulations")]
struct Cli {
    /// Worker threads; all cores when omitted. Outputs do not depend on it.
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Conversion spectrum |T21|² with unwrapped phase, plus its bandwidth.
    Spectrum {
        #[command(flatten)]
        io: IoArgs,
        #[command(flatten)]
        array: ArrayArgs,
        #[command(flatten)]
        grid: GridArgs,
    },
    /// Numeric FWHM against the closed form and the linear fit over a range of N.
    BandwidthScan(ScanArgs),
    /// Added thermal noise at both output ports.
    Noise {
        #[command(flatten)]
        io: IoArgs,
        #[command(flatten)]
        array: ArrayArgs,
        #[command(flatten)]
        grid: GridArgs,
        /// Also integrate the noise over the conversion band.
        #[arg(long)]
        integrate: bool,
    },
    /// Stokes noise from the counter-rotating terms.
    Stokes {
        #[command(flatten)]
        io: IoArgs,
        #[command(flatten)]
        array: ArrayArgs,
        #[command(flatten)]
        grid: GridArgs,
        /// Mechanical frequency in units of κ_ref.
        #[arg(long)]
        omega_m: Option<f64>,
        /// Also integrate over the band around ω_m.
        #[arg(long)]
        integrate: bool,
    },
    /// |T21|² while sweeping one loss parameter.
    Loss(LossArgs),
    /// Backscatter sweep and the fit η ≈ 1 − α·κL/κR.
    Backscatter(BackscatterArgs),
    /// Bandwidth-optimal coupling profile under a passband efficiency floor.
    Optimize(OptimizeArgs),
}

#[derive(Debug, Args)]
struct IoArgs {
    /// JSON run configuration.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Directory for data files and the manifest.
    #[arg(long, default_value = ".")]
    out_dir: PathBuf,
}

#[derive(Debug, Args)]
struct ArrayArgs {
    /// Number of sites.
    #[arg(long)]
    n: Option<usize>,
    /// Mechanical linewidth.
    #[arg(long)]
    gamma: Option<f64>,
    /// Thermal phonon occupation.
    #[arg(long)]
    n_bar: Option<f64>,
}

#[derive(Debug, Args)]
struct GridArgs {
    #[arg(long, allow_hyphen_values = true)]
    omega_min: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    omega_max: Option<f64>,
    /// Number of grid points.
    #[arg(long)]
    points: Option<usize>,
}

#[derive(Debug, Args)]
struct LossSettingsArgs {
    #[arg(long)]
    kappa_int: Option<f64>,
    /// κL/κR.
    #[arg(long)]
    backscatter_ratio: Option<f64>,
    /// Amplitude loss per link.
    #[arg(long)]
    transmission_loss: Option<f64>,
    /// Propagation phase per link in radians.
    #[arg(long, allow_hyphen_values = true)]
    link_phase: Option<f64>,
    #[arg(long)]
    link_delay: Option<f64>,
}

#[derive(Debug, Args)]
struct ScanArgs {
    #[command(flatten)]
    io: IoArgs,
    #[command(flatten)]
    array: ArrayArgs,
    #[arg(long)]
    n_min: Option<usize>,
    #[arg(long)]
    n_max: Option<usize>,
    /// Add a column with κ2 = 10·κ1.
    #[arg(long)]
    asymmetric: bool,
}

#[derive(Debug, Args)]
struct LossArgs {
    #[command(flatten)]
    io: IoArgs,
    #[command(flatten)]
    array: ArrayArgs,
    #[command(flatten)]
    grid: GridArgs,
    #[command(flatten)]
    loss: LossSettingsArgs,
    /// intrinsic_loss, transmission_loss or backscatter.
    #[arg(long)]
    parameter: Option<String>,
    /// Comma-separated parameter values.
    #[arg(long, value_delimiter = ',')]
    values: Option<Vec<f64>>,
}

#[derive(Debug, Args)]
struct BackscatterArgs {
    #[command(flatten)]
    io: IoArgs,
    #[command(flatten)]
    array: ArrayArgs,
    #[command(flatten)]
    loss: LossSettingsArgs,
    /// Comma-separated κL/κR values.
    #[arg(long, value_delimiter = ',')]
    ratios: Option<Vec<f64>>,
    /// Half-width of the frequency window.
    #[arg(long)]
    half_width: Option<f64>,
    #[arg(long)]
    points: Option<usize>,
    /// Fit α to the envelope efficiencies.
    #[arg(long)]
    fit_alpha: bool,
}

#[derive(Debug, Args)]
struct OptimizeArgs {
    #[command(flatten)]
    io: IoArgs,
    #[arg(long)]
    n: Option<usize>,
    /// Γ = Γ1 + Γ2 per site.
    #[arg(long)]
    gamma_total: Option<f64>,
    /// Required |T21|² across the passband.
    #[arg(long)]
    min_eff: Option<f64>,
    /// Optimize every site instead of the mirror-symmetric half.
    #[arg(long)]
    asymmetric: bool,
    /// Seed of the random restarts.
    #[arg(long)]
    seed: Option<u64>,
    /// Number of starting profiles (at least 8 are used).
    #[arg(long)]
    starts: Option<usize>,
}

fn run(cli: Cli) -> CliResult<()> {
    if let Some(n) = cli.threads {
        if n == 0 {
            return Err(CliError::Config("--threads must be at least 1".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Config(format!("--threads: {e}")))?;
    }
    match cli.command {
        Command::Spectrum { io, array, grid } => commands::spectrum(&io, &array, &grid),
        Command::BandwidthScan(args) => commands::bandwidth_scan(&args),
        Command::Noise { io, array, grid, integrate } => commands::noise(&io, &array, &grid, integrate),
        Command::Stokes { io, array, grid, omega_m, integrate } => {
            commands::stokes(&io, &array, &grid, omega_m, integrate)
        }
        Command::Loss(args) => commands::loss(&args),
        Command::Backscatter(args) => commands::backscatter(&args),
        Command::Optimize(args) => commands::optimize(&args),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use clap::CommandFactory;

    #[test]
    fn version_names_schema() {
        assert!(VERSION.contains(&format!("config schema {}", config::SCHEMA_VERSION)));
        assert!(VERSION.starts_with(output::TOOL_VERSION));
    }

    #[test]
    fn cli_definition_is_consistent() {
        Cli::command().debug_assert();
    }
}
