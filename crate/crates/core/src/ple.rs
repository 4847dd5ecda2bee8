//! Photoluminescence-excitation (PLE) spectra: synthesis, peak finding,
//! multi-Lorentzian least-squares fitting and three-peak pair classification.
//!
//! Peaks are parameterised by height, not area:
//! `L(ν) = A·(w/2)² / ((ν − ν₀)² + (w/2)²)`, so `L(ν₀) = A` and
//! `L(ν₀ ± w/2) = A/2`. Frequencies are GHz detunings, widths MHz.

use nalgebra::{DMatrix, DVector};
use rand_distr::{Distribution, Poisson};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::SeedSpec;
use crate::spectral::{FrequencyDetuning, DEFAULT_FWHM_MEAN_MHZ, DEFAULT_ZFS_MEAN_GHZ, DEFAULT_ZFS_SIGMA_GHZ};
use crate::stats;

/// Relative decrease of the residual sum of squares that ends the iteration.
pub const FIT_REL_TOLERANCE: f64 = 1e-8;
pub const FIT_MAX_ITERATIONS: usize = 500;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LorentzianPeak {
    pub center: FrequencyDetuning,
    pub fwhm_mhz: f64,
    /// Height above background at the centre.
    pub amplitude: f64,
}

impl LorentzianPeak {
    pub fn new(center_ghz: f64, fwhm_mhz: f64, amplitude: f64) -> Result<Self> {
        if !(fwhm_mhz > 0.0 && fwhm_mhz.is_finite()) {
            return Err(Error::domain(format!("peak fwhm must be > 0, got {fwhm_mhz}")));
        }
        if !(amplitude > 0.0 && amplitude.is_finite()) {
            return Err(Error::domain(format!("peak amplitude must be > 0, got {amplitude}")));
        }
        Ok(Self {
            center: FrequencyDetuning::new(center_ghz)?,
            fwhm_mhz,
            amplitude,
        })
    }

    pub fn value(&self, frequency_ghz: f64) -> f64 {
        lorentzian(self.center.ghz(), self.fwhm_mhz * 1e-3, self.amplitude, frequency_ghz)
    }
}

fn lorentzian(center: f64, fwhm: f64, amplitude: f64, nu: f64) -> f64 {
    let h2 = 0.25 * fwhm * fwhm;
    let d = nu - center;
    amplitude * h2 / (d * d + h2)
}

pub fn lorentzian_value(peak: &LorentzianPeak, frequency_ghz: f64) -> f64 {
    peak.value(frequency_ghz)
}

/// Counts recorded against laser detuning.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PleSpectrum {
    frequencies_ghz: Vec<f64>,
    counts: Vec<f64>,
    pub dwell_time_s: f64,
}

fn check_grid(grid: &[f64]) -> Result<()> {
    if grid.iter().any(|f| !f.is_finite()) {
        return Err(Error::domain("frequency grid contains non-finite values"));
    }
    if grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::domain("frequency grid must be strictly increasing"));
    }
    Ok(())
}

impl PleSpectrum {
    pub fn new(frequencies_ghz: Vec<f64>, counts: Vec<f64>, dwell_time_s: f64) -> Result<Self> {
        check_grid(&frequencies_ghz)?;
        if frequencies_ghz.len() != counts.len() {
            return Err(Error::Validation(format!(
                "spectrum has {} frequencies but {} counts",
                frequencies_ghz.len(),
                counts.len()
            )));
        }
        if let Some(c) = counts.iter().find(|c| !(**c >= 0.0) || !c.is_finite()) {
            return Err(Error::Validation(format!("counts must be finite and >= 0, got {c}")));
        }
        if !(dwell_time_s > 0.0) {
            return Err(Error::Validation(format!("dwell time must be > 0 s, got {dwell_time_s}")));
        }
        Ok(Self {
            frequencies_ghz,
            counts,
            dwell_time_s,
        })
    }

    pub fn frequencies_ghz(&self) -> &[f64] {
        &self.frequencies_ghz
    }

    pub fn counts(&self) -> &[f64] {
        &self.counts
    }

    pub fn len(&self) -> usize {
        self.counts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.counts.is_empty()
    }
}

/// Evenly spaced grid from `start` to `stop` inclusive with the given step (GHz).
pub fn linear_grid(start_ghz: f64, stop_ghz: f64, step_ghz: f64) -> Result<Vec<f64>> {
    if !(step_ghz > 0.0) || !(stop_ghz > start_ghz) {
        return Err(Error::domain("grid needs step > 0 and stop > start"));
    }
    let n = ((stop_ghz - start_ghz) / step_ghz + 1e-9).floor() as usize + 1;
    Ok((0..n).map(|i| start_ghz + i as f64 * step_ghz).collect())
}

/// Expected counts `background + Σ peaks`, optionally replaced by Poisson draws.
pub fn synthesize(
    peaks: &[LorentzianPeak],
    background: f64,
    grid_ghz: &[f64],
    shot_noise: bool,
    seed: SeedSpec,
) -> Result<PleSpectrum> {
    if !(background >= 0.0) || !background.is_finite() {
        return Err(Error::domain(format!("background must be >= 0, got {background}")));
    }
    check_grid(grid_ghz)?;
    let mut rng = seed.rng();
    let counts = grid_ghz
        .iter()
        .map(|&nu| {
            let mean = background + peaks.iter().map(|p| p.value(nu)).sum::<f64>();
            if shot_noise && mean > 0.0 {
                Poisson::new(mean).expect("positive finite mean").sample(&mut rng)
            } else if shot_noise {
                0.0
            } else {
                mean
            }
        })
        .collect();
    PleSpectrum::new(grid_ghz.to_vec(), counts, 1.0)
}

/// Seeds `k` peaks from the highest well-separated local maxima.
///
/// Background is the median count. Noise is 1.4826 times the median
/// deviation of the points below it (peaks only push counts up), and a
/// maximum qualifies when it exceeds the background by three noise units.
/// Maxima closer than the default ensemble FWHM to a taller one are dropped.
pub fn initial_guess(spectrum: &PleSpectrum, k: usize) -> Result<Vec<LorentzianPeak>> {
    if k == 0 {
        return Err(Error::domain("peak count must be at least 1"));
    }
    if spectrum.len() < 5 * k {
        return Err(Error::domain(format!(
            "spectrum has {} points, need at least {} for {k} peaks",
            spectrum.len(),
            5 * k
        )));
    }
    let y = spectrum.counts();
    let x = spectrum.frequencies_ghz();
    let bg = stats::median(y);
    let deviations: Vec<f64> = y.iter().filter(|&&v| v <= bg).map(|v| bg - v).collect();
    let threshold = bg + 3.0 * 1.4826 * stats::median(&deviations);

    let n = y.len();
    let mut candidates: Vec<usize> = (0..n)
        .filter(|&i| {
            let left = if i > 0 { y[i - 1] } else { f64::NEG_INFINITY };
            let right = if i + 1 < n { y[i + 1] } else { f64::NEG_INFINITY };
            y[i] > threshold && y[i] >= left && y[i] >= right
        })
        .collect();
    candidates.sort_by(|&a, &b| y[b].total_cmp(&y[a]).then(a.cmp(&b)));

    let min_sep = DEFAULT_FWHM_MEAN_MHZ * 1e-3;
    let mut picked: Vec<usize> = Vec::new();
    for c in candidates {
        if picked.iter().all(|&p| (x[p] - x[c]).abs() >= min_sep) {
            picked.push(c);
        }
    }
    if picked.len() < k {
        return Err(Error::Detection {
            requested: k,
            found: picked.len(),
        });
    }
    picked.truncate(k);
    picked.sort_unstable();
    picked
        .into_iter()
        .map(|i| LorentzianPeak::new(x[i], DEFAULT_FWHM_MEAN_MHZ, y[i] - bg))
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    /// Sorted by centre frequency.
    pub peaks: Vec<LorentzianPeak>,
    pub background: f64,
    pub residual_rms: f64,
    pub converged: bool,
    pub iterations: usize,
}

// parameter layout: [c0, w0, a0, c1, w1, a1, ..., background], c and w in GHz
fn evaluate(params: &[f64], x: &[f64]) -> Vec<f64> {
    let k = params.len() / 3;
    let bg = params[3 * k];
    x.iter()
        .map(|&nu| {
            bg + (0..k)
                .map(|p| lorentzian(params[3 * p], params[3 * p + 1], params[3 * p + 2], nu))
                .sum::<f64>()
        })
        .collect()
}

fn jacobian(params: &[f64], x: &[f64]) -> DMatrix<f64> {
    let k = params.len() / 3;
    let mut j = DMatrix::zeros(x.len(), params.len());
    for (row, &nu) in x.iter().enumerate() {
        for p in 0..k {
            let (c, w, a) = (params[3 * p], params[3 * p + 1], params[3 * p + 2]);
            let h = 0.5 * w;
            let d = nu - c;
            let den = d * d + h * h;
            let den2 = den * den;
            j[(row, 3 * p)] = 2.0 * a * h * h * d / den2;
            j[(row, 3 * p + 1)] = a * h * d * d / den2;
            j[(row, 3 * p + 2)] = h * h / den;
        }
        j[(row, 3 * k)] = 1.0;
    }
    j
}

fn ssr(params: &[f64], x: &[f64], y: &[f64]) -> f64 {
    evaluate(params, x)
        .iter()
        .zip(y)
        .map(|(m, o)| (o - m) * (o - m))
        .sum()
}

// keep widths and heights positive and the background non-negative
fn project(params: &mut [f64]) {
    let k = params.len() / 3;
    for p in 0..k {
        params[3 * p + 1] = params[3 * p + 1].max(1e-9);
        params[3 * p + 2] = params[3 * p + 2].max(1e-12);
    }
    params[3 * k] = params[3 * k].max(0.0);
}

/// Levenberg–Marquardt fit of `k` Lorentzians plus a shared constant background.
///
/// Stops when an accepted step lowers the residual sum of squares by less
/// than [`FIT_REL_TOLERANCE`] relative, when no damping can lower it further
/// (stationary to machine precision), or after [`FIT_MAX_ITERATIONS`]; only
/// the last case reports `converged = false`.
pub fn fit_multi_lorentzian(
    spectrum: &PleSpectrum,
    k: usize,
    guess: Option<&[LorentzianPeak]>,
) -> Result<FitResult> {
    if k == 0 {
        return Err(Error::domain("peak count must be at least 1"));
    }
    let seeded;
    let start = match guess {
        Some(g) => {
            if g.len() != k {
                return Err(Error::domain(format!("guess has {} peaks, expected {k}", g.len())));
            }
            g
        }
        None => {
            seeded = initial_guess(spectrum, k)?;
            &seeded[..]
        }
    };
    let x = spectrum.frequencies_ghz();
    let y = spectrum.counts();

    let mut params: Vec<f64> = start
        .iter()
        .flat_map(|p| [p.center.ghz(), p.fwhm_mhz * 1e-3, p.amplitude])
        .collect();
    params.push(stats::quantile(y, 0.1).max(0.0));

    let mut cost = ssr(&params, x, y);
    let mut lambda = 1e-3;
    let mut converged = false;
    let mut iterations = 0;

    while iterations < FIT_MAX_ITERATIONS {
        iterations += 1;
        if cost == 0.0 {
            converged = true;
            break;
        }
        let model = evaluate(&params, x);
        let r = DVector::from_iterator(y.len(), y.iter().zip(&model).map(|(o, m)| o - m));
        let j = jacobian(&params, x);
        let jtj = j.transpose() * &j;
        let jtr = j.transpose() * r;

        let mut damped = jtj.clone();
        for d in 0..params.len() {
            damped[(d, d)] += lambda * jtj[(d, d)].max(1e-12);
        }
        let step = damped.clone().cholesky().map(|c| c.solve(&jtr)).or_else(|| damped.lu().solve(&jtr));
        let Some(step) = step else {
            lambda *= 10.0;
            continue;
        };

        let mut trial: Vec<f64> = params.iter().zip(step.iter()).map(|(p, s)| p + s).collect();
        project(&mut trial);
        let trial_cost = ssr(&trial, x, y);

        if trial_cost < cost {
            let rel = (cost - trial_cost) / cost;
            params = trial;
            cost = trial_cost;
            lambda = (lambda / 10.0).max(1e-15);
            if rel < FIT_REL_TOLERANCE {
                converged = true;
                break;
            }
        } else {
            lambda *= 10.0;
            if lambda > 1e16 {
                converged = true;
                break;
            }
        }
    }

    let kk = params.len() / 3;
    let mut peaks: Vec<LorentzianPeak> = (0..kk)
        .map(|p| LorentzianPeak {
            center: FrequencyDetuning::new(params[3 * p]).expect("finite"),
            fwhm_mhz: params[3 * p + 1] * 1e3,
            amplitude: params[3 * p + 2],
        })
        .collect();
    peaks.sort_by(|a, b| a.center.ghz().total_cmp(&b.center.ghz()));
    Ok(FitResult {
        peaks,
        background: params[3 * kk],
        residual_rms: (cost / y.len() as f64).sqrt(),
        converged,
        iterations,
    })
}

/// Gaussian prior on the zero-field splitting used to accept a pair assignment.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ZfsPrior {
    pub mean_ghz: f64,
    pub sigma_ghz: f64,
    /// Half-width of the acceptance window in units of sigma.
    pub n_sigma: f64,
}

impl Default for ZfsPrior {
    fn default() -> Self {
        Self {
            mean_ghz: DEFAULT_ZFS_MEAN_GHZ,
            sigma_ghz: DEFAULT_ZFS_SIGMA_GHZ,
            n_sigma: 3.0,
        }
    }
}

impl ZfsPrior {
    pub fn accepts(&self, zfs_ghz: f64) -> bool {
        (zfs_ghz - self.mean_ghz).abs() <= self.n_sigma * self.sigma_ghz
    }
}

/// Two emitters sharing the middle line: A2 of the first coincides with A1 of the second.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PairAssignment {
    /// Peak indices (A1, A2) in frequency order.
    pub emitter1: (usize, usize),
    pub emitter2: (usize, usize),
    pub shared_peak: usize,
    pub zfs1_ghz: f64,
    pub zfs2_ghz: f64,
}

pub fn classify_peaks(peaks: &[LorentzianPeak], prior: &ZfsPrior) -> Result<PairAssignment> {
    if peaks.len() != 3 {
        return Err(Error::domain(format!(
            "pair classification needs exactly 3 peaks, got {}",
            peaks.len()
        )));
    }
    let mut f: Vec<f64> = peaks.iter().map(|p| p.center.ghz()).collect();
    f.sort_by(f64::total_cmp);
    let zfs1 = f[1] - f[0];
    let zfs2 = f[2] - f[1];
    if !(prior.accepts(zfs1) && prior.accepts(zfs2)) {
        return Err(Error::Classification {
            zfs1_ghz: zfs1,
            zfs2_ghz: zfs2,
        });
    }
    Ok(PairAssignment {
        emitter1: (0, 1),
        emitter2: (1, 2),
        shared_peak: 1,
        zfs1_ghz: zfs1,
        zfs2_ghz: zfs2,
    })
}

pub fn classify_pair_spectrum(fit: &FitResult, prior: &ZfsPrior) -> Result<PairAssignment> {
    classify_peaks(&fit.peaks, prior)
}
