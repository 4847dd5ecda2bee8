use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

/// Spectral-overlap statistics, PLE fitting, heralded-GHZ modelling and
/// confocal occupancy for ensembles of solid-state emitters.
#[derive(Debug, Parser)]
#[command(name = "emitternet", version)]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalArgs,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Default, Args)]
pub struct GlobalArgs {
    /// JSON run configuration.
    #[arg(long, global = true, value_name = "PATH")]
    pub config: Option<PathBuf>,

    /// Base seed. Falls back to the config file, then EMITTERNET_SEED, then 1.
    #[arg(long, global = true)]
    pub seed: Option<u64>,

    /// Output directory.
    #[arg(long, global = true, value_name = "DIR")]
    pub out: Option<PathBuf>,

    /// Trial count: bootstrap resamples (overlap), survey trials (birthday) or spot trials (spatial).
    #[arg(long, global = true)]
    pub trials: Option<usize>,

    /// Overlap window in MHz (overlap, birthday, spatial chain search).
    #[arg(long = "window-mhz", global = true, value_name = "MHZ")]
    pub window_mhz: Option<f64>,

    /// Photon detection efficiency (protocol).
    #[arg(long, global = true)]
    pub eta: Option<f64>,

    /// Emitter count (sample, overlap), register size (protocol) or chain length (spatial).
    #[arg(long, global = true)]
    pub n: Option<usize>,

    /// Worker thread cap; defaults to the available parallelism.
    #[arg(long, global = true)]
    pub threads: Option<usize>,
}

#[derive(Debug, Clone, Subcommand)]
pub enum Command {
    /// Draw an emitter ensemble and export line list and histograms.
    Sample,
    /// Pair-overlap probability, bootstrap error and the window-scan slope.
    Overlap {
        /// Line-list CSV; a parametric ensemble is sampled when omitted.
        #[arg(long, value_name = "PATH")]
        input: Option<PathBuf>,
    },
    /// Number of emitters needed before two overlap with the target probability.
    Birthday {
        /// Pairwise overlap probability; estimated from the ensemble when omitted.
        #[arg(long)]
        q: Option<f64>,
        #[arg(long)]
        target: Option<f64>,
        /// Also run the sequential-survey simulation.
        #[arg(long)]
        monte_carlo: bool,
    },
    /// Multi-Lorentzian fit of a PLE spectrum.
    FitPle {
        /// Two-column spectrum CSV; a synthetic spectrum is used when omitted.
        #[arg(long, value_name = "PATH")]
        input: Option<PathBuf>,
        /// JSON sidecar holding the dwell time.
        #[arg(long, value_name = "PATH")]
        sidecar: Option<PathBuf>,
        /// Number of peaks.
        #[arg(long)]
        k: Option<usize>,
    },
    /// Heralded GHZ chain and its fidelity under photon loss.
    Protocol,
    /// Confocal spot occupancy and spectral chain arrangements.
    Spatial {
        /// Lateral confocal resolution in μm (required here or in the config).
        #[arg(long, value_name = "UM")]
        lateral_fwhm_um: Option<f64>,
        /// Emitter density in μm⁻³.
        #[arg(long, value_name = "PER_UM3")]
        density: Option<f64>,
    },
    /// Aggregate the summaries found in the output directory.
    Report,
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Sample => "sample",
            Command::Overlap { .. } => "overlap",
            Command::Birthday { .. } => "birthday",
            Command::FitPle { .. } => "fit-ple",
            Command::Protocol => "protocol",
            Command::Spatial { .. } => "spatial",
            Command::Report => "report",
        }
    }
}
