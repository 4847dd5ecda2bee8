//! Poisson placement of emitters and confocal spot occupancy.
//!
//! The excitation spot is the FWHM ellipsoid of the confocal point-spread
//! function. Lateral resolution has no default and must be configured; only
//! the axial FWHM (1.22 μm) comes with one.

use std::f64::consts::PI;

use rand::Rng;
use rand_distr::{Distribution, Poisson};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::SeedSpec;
use crate::spectral::EnsembleModel;

/// Colour-centre density of the reference sample, μm⁻³.
pub const REFERENCE_DENSITY_PER_UM3: f64 = 0.43;
pub const DEFAULT_AXIAL_FWHM_UM: f64 = 1.22;
/// Largest chain length the exact subset search accepts.
pub const MAX_CHAIN_LENGTH: usize = 16;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpatialScene {
    /// Box extents (x, y, z) in μm; the box spans `[0, extent)` on each axis.
    pub box_um: [f64; 3],
    pub positions_um: Vec<[f64; 3]>,
}

impl SpatialScene {
    pub fn volume_um3(&self) -> f64 {
        self.box_um.iter().product()
    }
}

fn poisson_count<R: Rng>(lambda: f64, rng: &mut R) -> usize {
    if lambda <= 0.0 {
        return 0;
    }
    Poisson::new(lambda).expect("positive finite rate").sample(rng) as usize
}

/// Homogeneous Poisson process with the given density in a box.
pub fn sample_scene(density_per_um3: f64, box_um: [f64; 3], seed: SeedSpec) -> Result<SpatialScene> {
    if !(density_per_um3 >= 0.0) || !density_per_um3.is_finite() {
        return Err(Error::domain(format!("density must be >= 0, got {density_per_um3}")));
    }
    if box_um.iter().any(|e| !(*e > 0.0) || !e.is_finite()) {
        return Err(Error::domain(format!("box extents must be > 0, got {box_um:?}")));
    }
    let mut rng = seed.rng();
    let lambda = density_per_um3 * box_um.iter().product::<f64>();
    let count = poisson_count(lambda, &mut rng);
    let positions_um = (0..count)
        .map(|_| box_um.map(|e| e * rng.random::<f64>()))
        .collect();
    Ok(SpatialScene { box_um, positions_um })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConfocalPsf {
    lateral_fwhm_um: f64,
    axial_fwhm_um: f64,
}

impl ConfocalPsf {
    pub fn new(lateral_fwhm_um: f64, axial_fwhm_um: f64) -> Result<Self> {
        if !(lateral_fwhm_um > 0.0 && axial_fwhm_um > 0.0) || !lateral_fwhm_um.is_finite() || !axial_fwhm_um.is_finite() {
            return Err(Error::domain(format!(
                "PSF widths must be > 0, got lateral {lateral_fwhm_um} and axial {axial_fwhm_um} μm"
            )));
        }
        Ok(Self {
            lateral_fwhm_um,
            axial_fwhm_um,
        })
    }

    /// Configured lateral width with the default axial resolution.
    pub fn with_lateral(lateral_fwhm_um: f64) -> Result<Self> {
        Self::new(lateral_fwhm_um, DEFAULT_AXIAL_FWHM_UM)
    }

    pub fn lateral_fwhm_um(&self) -> f64 {
        self.lateral_fwhm_um
    }

    pub fn axial_fwhm_um(&self) -> f64 {
        self.axial_fwhm_um
    }

    fn contains(&self, offset: [f64; 3]) -> bool {
        let rl = 0.5 * self.lateral_fwhm_um;
        let ra = 0.5 * self.axial_fwhm_um;
        (offset[0] / rl).powi(2) + (offset[1] / rl).powi(2) + (offset[2] / ra).powi(2) <= 1.0
    }
}

/// FWHM-ellipsoid volume (π/6)·lateral²·axial, μm³.
pub fn spot_volume(psf: &ConfocalPsf) -> f64 {
    PI / 6.0 * psf.lateral_fwhm_um.powi(2) * psf.axial_fwhm_um
}

fn poisson_pmf(lambda: f64, k: usize) -> f64 {
    if lambda == 0.0 {
        return if k == 0 { 1.0 } else { 0.0 };
    }
    let ln = k as f64 * lambda.ln() - lambda - (1..=k).map(|i| (i as f64).ln()).sum::<f64>();
    ln.exp()
}

/// `P(k ≥ 2) = 1 − e^(−λ)(1 + λ)` for Poisson occupancy.
pub fn multi_occupancy_closed_form(lambda: f64) -> f64 {
    // expm1 keeps precision for small λ
    -(-lambda).exp_m1() - lambda * (-lambda).exp()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OccupancyStats {
    /// Expected emitters per spot, density × spot volume.
    pub lambda: f64,
    /// Monte Carlo mean occupancy.
    pub mean_per_spot: f64,
    /// Monte Carlo probability of occupancy k, k = 0 ..= max observed.
    pub distribution: Vec<f64>,
    /// Poisson pmf over the same k range.
    pub closed_form: Vec<f64>,
    pub multi_emitter_fraction: f64,
    pub multi_emitter_closed_form: f64,
    /// Binomial standard error of `multi_emitter_fraction`.
    pub multi_emitter_std_error: f64,
    pub trials: usize,
}

/// Occupancy of one confocal spot, simulated by Poisson placement in the
/// spot's bounding box and counting emitters inside the ellipsoid.
pub fn occupancy_stats(density_per_um3: f64, psf: &ConfocalPsf, trials: usize, seed: SeedSpec) -> Result<OccupancyStats> {
    if trials < 1000 {
        return Err(Error::domain(format!("need at least 1000 trials, got {trials}")));
    }
    if !(density_per_um3 >= 0.0) || !density_per_um3.is_finite() {
        return Err(Error::domain(format!("density must be >= 0, got {density_per_um3}")));
    }
    let bbox = [psf.lateral_fwhm_um, psf.lateral_fwhm_um, psf.axial_fwhm_um];
    let centre = bbox.map(|e| 0.5 * e);
    let counts: Vec<usize> = (0..trials as u64)
        .into_par_iter()
        .map(|t| {
            let scene = sample_scene(density_per_um3, bbox, seed.substream(t)).expect("validated inputs");
            scene
                .positions_um
                .iter()
                .filter(|p| psf.contains([p[0] - centre[0], p[1] - centre[1], p[2] - centre[2]]))
                .count()
        })
        .collect();

    let max_k = counts.iter().copied().max().unwrap_or(0);
    let mut hist = vec![0usize; max_k + 1];
    for &c in &counts {
        hist[c] += 1;
    }
    let n = trials as f64;
    let distribution: Vec<f64> = hist.iter().map(|&h| h as f64 / n).collect();
    let lambda = density_per_um3 * spot_volume(psf);
    let multi = hist.iter().skip(2).sum::<usize>() as f64 / n;
    Ok(OccupancyStats {
        lambda,
        mean_per_spot: counts.iter().sum::<usize>() as f64 / n,
        closed_form: (0..=max_k).map(|k| poisson_pmf(lambda, k)).collect(),
        distribution,
        multi_emitter_fraction: multi,
        multi_emitter_closed_form: multi_occupancy_closed_form(lambda),
        multi_emitter_std_error: (multi * (1.0 - multi) / n).sqrt(),
        trials,
    })
}

/// True when some ordering of the emitters has every consecutive gap
/// `|A2(first) − A1(next)|` below the window, i.e. a Hamiltonian path in
/// the directed "A2 meets A1" graph. Exact subset dynamic programme.
pub fn has_overlap_chain(a1_ghz: &[f64], a2_ghz: &[f64], window_mhz: f64) -> bool {
    let k = a1_ghz.len();
    debug_assert_eq!(k, a2_ghz.len());
    if k <= 1 {
        return true;
    }
    let edge = |u: usize, v: usize| 1e3 * (a2_ghz[u] - a1_ghz[v]).abs() < window_mhz;
    // reach[mask] = bitset of end vertices of paths covering exactly `mask`
    let full = (1usize << k) - 1;
    let mut reach = vec![0u32; 1 << k];
    for v in 0..k {
        reach[1 << v] = 1 << v;
    }
    for mask in 1..=full {
        let ends = reach[mask];
        if ends == 0 {
            continue;
        }
        for u in 0..k {
            if ends & (1 << u) == 0 {
                continue;
            }
            for v in 0..k {
                if mask & (1 << v) == 0 && edge(u, v) {
                    reach[mask | (1 << v)] |= 1 << v;
                }
            }
        }
    }
    reach[full] != 0
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ArrangementRate {
    pub probability: f64,
    pub std_error: f64,
    pub hits: usize,
    pub trials: usize,
}

/// Fraction of trials in which `k` independently drawn emitters admit an
/// A2→A1 overlap chain within `window_mhz`.
pub fn spectral_arrangement_rate(
    model: &EnsembleModel,
    k: usize,
    window_mhz: f64,
    trials: usize,
    seed: SeedSpec,
) -> Result<ArrangementRate> {
    model.validate()?;
    if !(2..=MAX_CHAIN_LENGTH).contains(&k) {
        return Err(Error::domain(format!("chain length must be in 2..={MAX_CHAIN_LENGTH}, got {k}")));
    }
    if trials < 10_000 {
        return Err(Error::domain(format!("need at least 10000 trials, got {trials}")));
    }
    if !(window_mhz > 0.0) {
        return Err(Error::domain(format!("window must be > 0 MHz, got {window_mhz}")));
    }
    let hits = (0..trials as u64)
        .into_par_iter()
        .filter(|&t| {
            let mut rng = seed.substream(t).rng();
            let emitters: Vec<_> = (0..k).map(|_| model.draw(String::new(), &mut rng)).collect();
            let a1: Vec<f64> = emitters.iter().map(|e| e.a1().ghz()).collect();
            let a2: Vec<f64> = emitters.iter().map(|e| e.a2().ghz()).collect();
            has_overlap_chain(&a1, &a2, window_mhz)
        })
        .count();
    let p = hits as f64 / trials as f64;
    Ok(ArrangementRate {
        probability: p,
        std_error: (p * (1.0 - p) / trials as f64).sqrt(),
        hits,
        trials,
    })
}
