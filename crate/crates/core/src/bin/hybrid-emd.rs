use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use hybrid_emd::cli::{self, Amplitude, RunConfig};

#[derive(Parser)]
#[command(
    version,
    about = "Hybrid operator-based empirical mode decomposition of x,y CSV signals"
)]
struct Args {
    /// Spline order
    #[arg(short = 'k', long = "order", default_value_t = 4, global = true)]
    order: usize,
    /// Points in-filled between neighbouring knots
    #[arg(short = 'q', long = "infill", default_value_t = 4, global = true)]
    infill: usize,
    /// Number of B-spline basis functions
    #[arg(short = 'n', long = "basis", default_value_t = 180, global = true)]
    basis: usize,
    /// Envelope tolerance; `inf` gives the classic envelope
    #[arg(long, default_value_t = 0.01, global = true)]
    eps: f64,
    /// Fraction of samples mirrored past each end before fitting
    #[arg(long = "extend-ratio", default_value_t = 0.0, global = true)]
    extend_ratio: f64,
    /// Maximum number of components to extract
    #[arg(long = "max-imfs", default_value_t = 8, global = true)]
    max_imfs: usize,
    /// Leakage factor for the reported component costs
    #[arg(long, default_value_t = 0.0, global = true)]
    gamma: f64,
    /// Output directory
    #[arg(long = "out", default_value = ".", global = true)]
    out: PathBuf,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Fit the input and write fit.csv
    Fit { input: PathBuf },
    /// Write upper.csv and lower.csv
    Envelope { input: PathBuf },
    /// Instantaneous frequency of a single IMF, written to freq.csv
    Spectral {
        input: PathBuf,
        /// The input already has amplitude 1
        #[arg(
            long,
            conflicts_with = "amplitude",
            required_unless_present = "amplitude"
        )]
        unit_amplitude: bool,
        /// Amplitude series to divide by first
        #[arg(long)]
        amplitude: Option<PathBuf>,
    },
    /// Characteristic (mu0, mu1, mu2) of an amplitude/frequency pair
    Characteristic {
        amplitude: PathBuf,
        frequency: PathBuf,
    },
    /// Full decomposition into imf-i, a-i, freq-i, char-i and residual files
    Emd { input: PathBuf },
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info"))
        .format_timestamp(None)
        .init();
    let args = Args::parse();
    let cfg = RunConfig {
        order: args.order,
        infill: args.infill,
        basis: args.basis,
        eps: args.eps,
        extend_ratio: args.extend_ratio,
        max_imfs: args.max_imfs,
        gamma: args.gamma,
        output_dir: args.out,
        ..RunConfig::default()
    };

    let result = match &args.command {
        Command::Fit { input } => cli::cmd_fit(input, &cfg),
        Command::Envelope { input } => cli::cmd_envelope(input, &cfg),
        Command::Spectral {
            input, amplitude, ..
        } => {
            let amplitude = amplitude.clone().map_or(Amplitude::Unit, Amplitude::File);
            cli::cmd_spectral(input, &amplitude, &cfg)
        }
        Command::Characteristic {
            amplitude,
            frequency,
        } => cli::cmd_characteristic(amplitude, frequency, &cfg).and_then(|(mu, written)| {
            cli::print_characteristic(&mu)?;
            Ok(written)
        }),
        Command::Emd { input } => cli::cmd_emd(input, &cfg),
    };

    match result {
        Ok(written) => {
            for path in written {
                log::info!("wrote {}", path.display());
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
