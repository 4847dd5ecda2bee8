//! Run configuration document.
//!
//! Every section and field is optional; omitted values take the defaults
//! below. Unknown keys anywhere in the document are rejected. The JSON
//! schema published in `schema/run_config.schema.json` describes the same
//! structure.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ple::ZfsPrior;
use crate::spatial::{DEFAULT_AXIAL_FWHM_UM, MAX_CHAIN_LENGTH, REFERENCE_DENSITY_PER_UM3};
use crate::spectral::{EnsembleModel, LineCombos};

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    /// Base seed; `None` defers to the command line or the environment.
    pub seed: Option<u64>,
    pub out_dir: Option<String>,
    pub threads: Option<usize>,
    pub ensemble: EnsembleModel,
    pub combos: LineCombos,
    pub sample: SampleConfig,
    pub overlap: OverlapConfig,
    pub birthday: BirthdayConfig,
    pub ple: PleConfig,
    pub protocol: ProtocolConfig,
    pub spatial: SpatialConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SampleConfig {
    pub n_emitters: usize,
    pub zfs_bin_mhz: f64,
    pub line_bin_ghz: f64,
}

impl Default for SampleConfig {
    fn default() -> Self {
        Self {
            n_emitters: 50,
            zfs_bin_mhz: 25.0,
            line_bin_ghz: 0.5,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OverlapConfig {
    /// Line-list CSV; when absent an ensemble of `n_emitters` is sampled.
    pub input: Option<String>,
    pub n_emitters: usize,
    /// Reported window; defaults to the lifetime-limited linewidth.
    pub window_mhz: Option<f64>,
    /// Curve windows as multiples of the lifetime-limited linewidth.
    pub curve_windows_gamma: Vec<f64>,
    pub bootstrap_resamples: usize,
}

impl Default for OverlapConfig {
    fn default() -> Self {
        Self {
            input: None,
            n_emitters: 50,
            window_mhz: None,
            curve_windows_gamma: (1..=10).map(|i| 0.5 * i as f64).collect(),
            bootstrap_resamples: 10_000,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BirthdayConfig {
    /// Pairwise overlap probability; estimated from the ensemble when absent.
    pub q: Option<f64>,
    pub target: f64,
    pub window_mhz: Option<f64>,
    /// Also run the sequential-survey simulation.
    pub monte_carlo: bool,
    pub trials: usize,
    pub q_pairs: usize,
}

impl Default for BirthdayConfig {
    fn default() -> Self {
        Self {
            q: None,
            target: 0.5,
            window_mhz: None,
            monte_carlo: false,
            trials: 2_000,
            q_pairs: 200_000,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PeakSpec {
    pub center_ghz: f64,
    pub fwhm_mhz: f64,
    pub amplitude: f64,
}

/// Synthetic spectrum used when no measured spectrum is supplied.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SyntheticSpectrumConfig {
    pub peaks: Vec<PeakSpec>,
    pub background: f64,
    pub start_ghz: f64,
    pub stop_ghz: f64,
    pub step_ghz: f64,
    pub shot_noise: bool,
}

impl Default for SyntheticSpectrumConfig {
    // two emitters whose A2 and A1 lines coincide at zero detuning
    fn default() -> Self {
        let peak = |center_ghz, amplitude| PeakSpec {
            center_ghz,
            fwhm_mhz: 316.0,
            amplitude,
        };
        Self {
            peaks: vec![peak(-1.027, 100.0), peak(0.0, 200.0), peak(1.027, 100.0)],
            background: 5.0,
            start_ghz: -3.0,
            stop_ghz: 3.0,
            step_ghz: 0.01,
            shot_noise: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PleConfig {
    /// Two-column spectrum CSV.
    pub input: Option<String>,
    /// JSON sidecar with the dwell time of `input`.
    pub sidecar: Option<String>,
    pub k: usize,
    /// Classify a three-peak fit as an emitter pair sharing the middle line.
    pub classify: bool,
    pub zfs_prior: ZfsPrior,
    pub synthetic: SyntheticSpectrumConfig,
}

impl Default for PleConfig {
    fn default() -> Self {
        Self {
            input: None,
            sidecar: None,
            k: 3,
            classify: true,
            zfs_prior: ZfsPrior::default(),
            synthetic: SyntheticSpectrumConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ProtocolConfig {
    pub n: usize,
    pub eta: f64,
    pub eta_sweep: Vec<f64>,
}

impl Default for ProtocolConfig {
    fn default() -> Self {
        Self {
            n: 4,
            eta: 0.85,
            eta_sweep: (0..=10).map(|i| 0.5 + 0.05 * i as f64).collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SpatialConfig {
    pub density_per_um3: f64,
    /// Lateral confocal resolution, μm. Required by the `spatial` command.
    pub lateral_fwhm_um: Option<f64>,
    pub axial_fwhm_um: f64,
    pub trials: usize,
    /// Emitter count of the spectral-chain search; omitted skips it.
    pub chain_length: Option<usize>,
    pub chain_window_mhz: Option<f64>,
    pub chain_trials: usize,
}

impl Default for SpatialConfig {
    fn default() -> Self {
        Self {
            density_per_um3: REFERENCE_DENSITY_PER_UM3,
            lateral_fwhm_um: None,
            axial_fwhm_um: DEFAULT_AXIAL_FWHM_UM,
            trials: 100_000,
            chain_length: None,
            chain_window_mhz: None,
            chain_trials: 100_000,
        }
    }
}

fn check(ok: bool, msg: impl FnOnce() -> String) -> Result<()> {
    if ok {
        Ok(())
    } else {
        Err(Error::Validation(msg()))
    }
}

fn positive(v: f64) -> bool {
    v > 0.0 && v.is_finite()
}

impl RunConfig {
    pub fn from_json(bytes: &[u8]) -> Result<Self> {
        let cfg: Self = serde_json::from_slice(bytes)?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Range checks the type system does not express.
    pub fn validate(&self) -> Result<()> {
        self.ensemble.validate().map_err(|e| Error::Validation(e.to_string()))?;
        check(self.threads != Some(0), || "threads must be >= 1".into())?;

        let s = &self.sample;
        check(s.n_emitters >= 2, || format!("sample.n_emitters must be >= 2, got {}", s.n_emitters))?;
        check(positive(s.zfs_bin_mhz) && positive(s.line_bin_ghz), || {
            "sample bin widths must be > 0".into()
        })?;

        let o = &self.overlap;
        check(o.n_emitters >= 2, || format!("overlap.n_emitters must be >= 2, got {}", o.n_emitters))?;
        check(o.window_mhz.is_none_or(|w| w >= 0.0 && w.is_finite()), || {
            "overlap.window_mhz must be >= 0".into()
        })?;
        check(
            !o.curve_windows_gamma.is_empty() && o.curve_windows_gamma.iter().all(|&g| positive(g)),
            || "overlap.curve_windows_gamma needs at least one positive entry".into(),
        )?;
        check(o.bootstrap_resamples >= 100, || {
            format!("overlap.bootstrap_resamples must be >= 100, got {}", o.bootstrap_resamples)
        })?;

        let b = &self.birthday;
        check(b.q.is_none_or(|q| q > 0.0 && q < 1.0), || "birthday.q must lie in (0, 1)".into())?;
        check(b.target > 0.0 && b.target < 1.0, || "birthday.target must lie in (0, 1)".into())?;
        check(b.window_mhz.is_none_or(|w| w >= 0.0 && w.is_finite()), || {
            "birthday.window_mhz must be >= 0".into()
        })?;
        check(b.q_pairs >= 1, || "birthday.q_pairs must be >= 1".into())?;
        check(b.trials >= 1000, || format!("birthday.trials must be >= 1000, got {}", b.trials))?;

        let p = &self.ple;
        check(p.k >= 1, || "ple.k must be >= 1".into())?;
        check(positive(p.zfs_prior.sigma_ghz) && positive(p.zfs_prior.n_sigma), || {
            "ple.zfs_prior sigma and n_sigma must be > 0".into()
        })?;
        let syn = &p.synthetic;
        check(positive(syn.step_ghz) && syn.stop_ghz > syn.start_ghz, || {
            "ple.synthetic grid needs step > 0 and stop > start".into()
        })?;
        check(
            syn.peaks.iter().all(|pk| positive(pk.fwhm_mhz) && positive(pk.amplitude) && pk.center_ghz.is_finite()),
            || "ple.synthetic peaks need finite centres and positive width and amplitude".into(),
        )?;

        let r = &self.protocol;
        check((2..=crate::register::MAX_QUBITS).contains(&r.n), || {
            format!("protocol.n must lie in [2, {}], got {}", crate::register::MAX_QUBITS, r.n)
        })?;
        check(
            std::iter::once(r.eta).chain(r.eta_sweep.iter().copied()).all(|e| e > 0.0 && e <= 1.0),
            || "protocol eta values must lie in (0, 1]".into(),
        )?;

        let sp = &self.spatial;
        check(sp.density_per_um3 >= 0.0 && sp.density_per_um3.is_finite(), || {
            "spatial.density_per_um3 must be >= 0".into()
        })?;
        check(sp.lateral_fwhm_um.is_none_or(positive) && positive(sp.axial_fwhm_um), || {
            "spatial PSF widths must be > 0".into()
        })?;
        check(sp.trials >= 1000, || format!("spatial.trials must be >= 1000, got {}", sp.trials))?;
        check(
            sp.chain_length.is_none_or(|k| (2..=MAX_CHAIN_LENGTH).contains(&k)),
            || format!("spatial.chain_length must lie in [2, {MAX_CHAIN_LENGTH}]"),
        )?;
        check(sp.chain_trials >= 10_000, || {
            format!("spatial.chain_trials must be >= 10000, got {}", sp.chain_trials)
        })?;
        Ok(())
    }
}
