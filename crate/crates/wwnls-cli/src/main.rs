mod commands;
mod io;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};

use io::Format;

#[derive(Debug)]
pub enum CliError {
    /// Invalid or missing configuration (exit 2).
    Config(String),
    /// Numerical failure (exit 3).
    Numeric(String),
    Io(String),
}

impl CliError {
    pub fn io(p: &Path, e: std::io::Error) -> Self {
        CliError::Io(format!("{}: {e}", p.display()))
    }

    fn code(&self) -> u8 {
        match self {
            CliError::Config(_) => 2,
            CliError::Numeric(_) => 3,
            CliError::Io(_) => 1,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Config(m) => write!(f, "invalid config: {m}"),
            CliError::Numeric(m) => write!(f, "numerical failure: {m}"),
            CliError::Io(m) => write!(f, "i/o error: {m}"),
        }
    }
}

#[derive(Parser, Debug)]
#[command(name = "wwnls", version, about = "NLS approximation toolkit for capillary-gravity water waves")]
struct Cli {
    /// Directory for all outputs.
    #[arg(long, global = true, default_value = "out")]
    output_dir: PathBuf,
    /// JSON config file; flags override its values.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output format for field data.
    #[arg(long, global = true, value_enum, default_value = "csv")]
    format: Format,
    /// Also write figure data (k, r̂(k,b)) per Bond number.
    #[arg(long, global = true)]
    emit_plot_data: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Tabulate ω and its derivatives.
    Dispersion(DispersionArgs),
    /// Resonance zeros, critical Bond numbers and stability.
    #[command(subcommand)]
    Resonance(ResonanceCmd),
    /// Symbol tables of q̂ and n̂.
    #[command(subcommand)]
    Kernels(KernelsCmd),
    /// Three-wave interaction system.
    #[command(subcommand)]
    Twi(TwiCmd),
    /// NLS envelope solver.
    #[command(subcommand)]
    Nls(NlsCmd),
    /// Modulated approximation on the carrier grid.
    #[command(subcommand)]
    Wavepacket(WavepacketCmd),
    /// Simulator of the quadratic-truncated model.
    #[command(subcommand)]
    Sim(SimCmd),
}

#[derive(Subcommand, Debug)]
enum ResonanceCmd {
    /// Zeros of r̂(·, b) for each Bond number.
    Scan(ScanArgs),
    /// Critical Bond numbers b₀ and b₁.
    Critical(CriticalArgs),
    /// Stability of the NLS subspace against the resonant triad.
    Stability(StabilityArgs),
}

#[derive(Subcommand, Debug)]
enum KernelsCmd {
    /// Tabulate the symbols on a wavenumber grid.
    Dump(KernelsArgs),
}

#[derive(Subcommand, Debug)]
enum TwiCmd {
    /// Integrate the three-wave system.
    Run(TwiArgs),
}

#[derive(Subcommand, Debug)]
enum NlsCmd {
    /// Evolve a Gaussian envelope.
    Run(NlsArgs),
}

#[derive(Subcommand, Debug)]
enum WavepacketCmd {
    /// Assemble the four fields at one time.
    Build(PacketArgs),
}

#[derive(Subcommand, Debug)]
enum SimCmd {
    /// Run the diagonalized system from a packet and record the error.
    Run(SimArgs),
    /// Approximation error against ε for several Bond numbers.
    ErrorScan(ErrorScanArgs),
    /// Residual of the packet against ε.
    ResidualScan(ResidualScanArgs),
}

#[derive(Args, Debug, Clone, Serialize, Deserialize, Default)]
#[serde(default)]
pub struct DispersionArgs {
    #[arg(long)]
    pub b: Option<f64>,
    #[arg(long)]
    pub k_min: Option<f64>,
    #[arg(long)]
    pub k_max: Option<f64>,
    #[arg(long)]
    pub n: Option<usize>,
}

#[derive(Args, Debug, Clone, Serialize, Deserialize, Default)]
#[serde(default)]
pub struct ScanArgs {
    #[arg(long)]
    pub k0: Option<f64>,
    /// Comma-separated Bond numbers; defaults to nine reference values spanning both critical Bond numbers.
    #[arg(long, value_delimiter = ',')]
    pub b: Option<Vec<f64>>,
    #[arg(long)]
    pub k_max: Option<f64>,
    /// Sample spacing of the plot data.
    #[arg(long)]
    pub plot_step: Option<f64>,
}

#[derive(Args, Debug, Clone, Serialize, Deserialize, Default)]
#[serde(default)]
pub struct CriticalArgs {
    #[arg(long)]
    pub k0: Option<f64>,
}

#[derive(Args, Debug, Clone, Serialize, Deserialize, Default)]
#[serde(default)]
pub struct StabilityArgs {
    #[arg(long)]
    pub k0: Option<f64>,
    #[arg(long, value_delimiter = ',')]
    pub b: Option<Vec<f64>>,
}

#[derive(Args, Debug, Clone, Serialize, Deserialize, Default)]
#[serde(default)]
pub struct KernelsArgs {
    #[arg(long)]
    pub k0: Option<f64>,
    #[arg(long)]
    pub b: Option<f64>,
    #[arg(long)]
    pub eps: Option<f64>,
    #[arg(long)]
    pub k_min: Option<f64>,
    #[arg(long)]
    pub k_max: Option<f64>,
    #[arg(long)]
    pub n: Option<usize>,
    /// Number of random (k, m) pairs for the q̂ table.
    #[arg(long)]
    pub random: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Args, Debug, Clone, Serialize, Deserialize, Default)]
#[serde(default)]
pub struct TwiArgs {
    #[arg(long)]
    pub k0: Option<f64>,
    #[arg(long)]
    pub b: Option<f64>,
    #[arg(long)]
    pub ell: Option<i32>,
    /// Initial |A0|, |A1|, |A2|.
    #[arg(long, value_delimiter = ',')]
    pub amplitudes: Option<Vec<f64>>,
    /// Synthetic coefficients c0, c1, c2 as imaginary parts; bypasses extraction.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub synthetic: Option<Vec<f64>>,
    #[arg(long)]
    pub dt: Option<f64>,
    #[arg(long)]
    pub t_end: Option<f64>,
    #[arg(long)]
    pub stride: Option<usize>,
}

#[derive(Args, Debug, Clone, Serialize, Deserialize, Default)]
#[serde(default)]
pub struct NlsArgs {
    #[arg(long)]
    pub k0: Option<f64>,
    #[arg(long)]
    pub b: Option<f64>,
    /// User-supplied ν (otherwise derived).
    #[arg(long, allow_hyphen_values = true)]
    pub nu: Option<f64>,
    /// User-supplied ∂²ω/2 (otherwise derived).
    #[arg(long, allow_hyphen_values = true)]
    pub half_omega2: Option<f64>,
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long)]
    pub length: Option<f64>,
    #[arg(long)]
    pub amplitude: Option<f64>,
    #[arg(long)]
    pub width: Option<f64>,
    #[arg(long)]
    pub dtau: Option<f64>,
    #[arg(long)]
    pub tau_end: Option<f64>,
    #[arg(long)]
    pub stride: Option<usize>,
}

#[derive(Args, Debug, Clone, Serialize, Deserialize, Default)]
#[serde(default)]
pub struct PacketArgs {
    #[arg(long)]
    pub k0: Option<f64>,
    #[arg(long)]
    pub b: Option<f64>,
    #[arg(long)]
    pub eps: Option<f64>,
    #[arg(long)]
    pub amplitude: Option<f64>,
    #[arg(long)]
    pub width: Option<f64>,
    #[arg(long)]
    pub t: Option<f64>,
    #[arg(long)]
    pub corrections: Option<bool>,
    /// Band half-width δ₀ of the Fourier truncation.
    #[arg(long)]
    pub truncate: Option<f64>,
}

#[derive(Args, Debug, Clone, Serialize, Deserialize, Default)]
#[serde(default)]
pub struct SimArgs {
    #[arg(long)]
    pub k0: Option<f64>,
    #[arg(long)]
    pub b: Option<f64>,
    #[arg(long)]
    pub eps: Option<f64>,
    #[arg(long)]
    pub amplitude: Option<f64>,
    #[arg(long)]
    pub width: Option<f64>,
    #[arg(long)]
    pub dt: Option<f64>,
    #[arg(long)]
    pub t_end: Option<f64>,
    /// Steps between snapshots.
    #[arg(long)]
    pub snapshot_every: Option<usize>,
    #[arg(long)]
    pub corrections: Option<bool>,
    #[arg(long)]
    pub dealias: Option<bool>,
}

#[derive(Args, Debug, Clone, Serialize, Deserialize, Default)]
#[serde(default)]
pub struct ErrorScanArgs {
    #[arg(long)]
    pub k0: Option<f64>,
    #[arg(long, value_delimiter = ',')]
    pub b: Option<Vec<f64>>,
    #[arg(long, value_delimiter = ',')]
    pub eps: Option<Vec<f64>>,
    #[arg(long)]
    pub tau0: Option<f64>,
    /// `eps` for τ₀/ε, `eps2` for τ₀/ε².
    #[arg(long)]
    pub horizon: Option<String>,
    #[arg(long)]
    pub amplitude: Option<f64>,
    #[arg(long)]
    pub dt: Option<f64>,
}

#[derive(Args, Debug, Clone, Serialize, Deserialize, Default)]
#[serde(default)]
pub struct ResidualScanArgs {
    #[arg(long)]
    pub k0: Option<f64>,
    #[arg(long)]
    pub b: Option<f64>,
    #[arg(long, value_delimiter = ',')]
    pub eps: Option<Vec<f64>>,
    #[arg(long)]
    pub amplitude: Option<f64>,
}

pub struct Ctx {
    pub out: io::Out,
    pub config: Option<PathBuf>,
    pub emit_plot_data: bool,
}

fn init_threads() {
    if let Some(n) = std::env::var("WWNLS_THREADS").ok().and_then(|s| s.parse::<usize>().ok()) {
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n.max(1)).build_global();
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    init_threads();
    let res = io::Out::new(&cli.output_dir, cli.format).and_then(|out| {
        let ctx = Ctx { out, config: cli.config.clone(), emit_plot_data: cli.emit_plot_data };
        use commands as c;
        match &cli.command {
            Command::Dispersion(a) => c::dispersion(&ctx, a),
            Command::Resonance(ResonanceCmd::Scan(a)) => c::resonance_scan(&ctx, a),
            Command::Resonance(ResonanceCmd::Critical(a)) => c::resonance_critical(&ctx, a),
            Command::Resonance(ResonanceCmd::Stability(a)) => c::resonance_stability(&ctx, a),
            Command::Kernels(KernelsCmd::Dump(a)) => c::kernels_dump(&ctx, a),
            Command::Twi(TwiCmd::Run(a)) => c::twi_run(&ctx, a),
            Command::Nls(NlsCmd::Run(a)) => c::nls_run(&ctx, a),
            Command::Wavepacket(WavepacketCmd::Build(a)) => c::wavepacket_build(&ctx, a),
            Command::Sim(SimCmd::Run(a)) => c::sim_run(&ctx, a),
            Command::Sim(SimCmd::ErrorScan(a)) => c::error_scan(&ctx, a),
            Command::Sim(SimCmd::ResidualScan(a)) => c::residual_scan(&ctx, a),
        }
    });
    match res {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.code())
        }
    }
}
