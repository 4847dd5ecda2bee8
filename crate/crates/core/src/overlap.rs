//! Spectral-overlap collision statistics.
//!
//! Two emitters "overlap" within a window Δ when the minimum separation over
//! the selected [`LineCombos`] is strictly below Δ; ties count as no overlap.
//!
//! The pairwise overlap probability `q` feeds a birthday-style estimate of how
//! many emitters must be surveyed before some pair overlaps. Two estimators
//! are provided: the independent-pairs closed form
//! ([`collision_probability`], [`birthday_threshold`]) and sequential
//! simulation from an [`EnsembleModel`] ([`monte_carlo_threshold`]), which
//! keeps the correlations between pairs that share an emitter.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::SeedSpec;
use crate::spectral::{min_pair_separation, EmitterLines, EnsembleModel, LineCombos};
use crate::stats;

/// Empirical pair-overlap probability as a function of window width.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OverlapCurve {
    pub windows_mhz: Vec<f64>,
    pub probabilities: Vec<f64>,
    pub std_errors: Vec<f64>,
    pub n_emitters: usize,
    pub n_pairs: usize,
}

impl OverlapCurve {
    pub fn len(&self) -> usize {
        self.windows_mhz.len()
    }

    pub fn is_empty(&self) -> bool {
        self.windows_mhz.is_empty()
    }

    /// Replaces the default binomial errors, e.g. with bootstrap estimates.
    pub fn with_std_errors(mut self, std_errors: Vec<f64>) -> Result<Self> {
        if std_errors.len() != self.windows_mhz.len() {
            return Err(Error::domain("std_errors length differs from window count"));
        }
        self.std_errors = std_errors;
        Ok(self)
    }
}

fn check_windows(windows_mhz: &[f64]) -> Result<()> {
    if windows_mhz.iter().any(|w| !(*w > 0.0) || !w.is_finite()) {
        return Err(Error::domain("overlap windows must be positive and finite"));
    }
    if windows_mhz.windows(2).any(|w| w[1] < w[0]) {
        return Err(Error::domain("overlap windows must be sorted ascending"));
    }
    Ok(())
}

fn need_two(emitters: &[EmitterLines]) -> Result<()> {
    if emitters.len() < 2 {
        return Err(Error::domain(format!(
            "overlap statistics need at least 2 emitters, got {}",
            emitters.len()
        )));
    }
    Ok(())
}

/// Minimum separations (MHz) of all unordered pairs, in (i, j > i) order.
pub fn pair_separations(emitters: &[EmitterLines], combos: LineCombos) -> Vec<f64> {
    let n = emitters.len();
    let mut out = Vec::with_capacity(n * n.saturating_sub(1) / 2);
    for i in 0..n {
        for j in i + 1..n {
            out.push(min_pair_separation(&emitters[i], &emitters[j], combos));
        }
    }
    out
}

/// Fraction of unordered emitter pairs whose separation is below each window.
///
/// `std_errors` default to the pair-binomial estimate `sqrt(p(1-p)/n_pairs)`,
/// which ignores correlations between pairs sharing an emitter; use
/// [`bootstrap_std_errors`] for the emitter-level estimate.
pub fn overlap_curve(
    emitters: &[EmitterLines],
    windows_mhz: &[f64],
    combos: LineCombos,
) -> Result<OverlapCurve> {
    need_two(emitters)?;
    check_windows(windows_mhz)?;
    let mut seps = pair_separations(emitters, combos);
    seps.sort_by(f64::total_cmp);
    let n_pairs = seps.len();
    let probabilities: Vec<f64> = windows_mhz
        .iter()
        .map(|&w| seps.partition_point(|&s| s < w) as f64 / n_pairs as f64)
        .collect();
    let std_errors = probabilities
        .iter()
        .map(|p| (p * (1.0 - p) / n_pairs as f64).sqrt())
        .collect();
    Ok(OverlapCurve {
        windows_mhz: windows_mhz.to_vec(),
        probabilities,
        std_errors,
        n_emitters: emitters.len(),
        n_pairs,
    })
}

/// Overlap probability of one bootstrap resample at every window.
///
/// Pairs that repeat the same original emitter are left out of both the
/// numerator and the denominator; a resample with no such pairs scores 0.
fn resample_probabilities(seps: &[Vec<f64>], idx: &[usize], windows_mhz: &[f64]) -> Vec<f64> {
    let mut counts = vec![0usize; windows_mhz.len()];
    let mut valid = 0usize;
    for a in 0..idx.len() {
        for b in a + 1..idx.len() {
            let (i, j) = (idx[a], idx[b]);
            if i == j {
                continue;
            }
            valid += 1;
            let s = seps[i][j];
            for (c, &w) in counts.iter_mut().zip(windows_mhz) {
                if s < w {
                    *c += 1;
                }
            }
        }
    }
    if valid == 0 {
        return vec![0.0; windows_mhz.len()];
    }
    counts.iter().map(|&c| c as f64 / valid as f64).collect()
}

/// Emitter-level bootstrap standard error of the overlap probability at each window.
///
/// Resample `r` uses stream `seed.substream(r)`; the standard deviation is
/// taken over resamples in index order, so the result is independent of
/// thread scheduling.
pub fn bootstrap_std_errors(
    emitters: &[EmitterLines],
    windows_mhz: &[f64],
    combos: LineCombos,
    resamples: usize,
    seed: SeedSpec,
) -> Result<Vec<f64>> {
    need_two(emitters)?;
    check_windows(windows_mhz)?;
    if resamples < 100 {
        return Err(Error::domain(format!("bootstrap needs at least 100 resamples, got {resamples}")));
    }
    let n = emitters.len();
    let mut seps = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in i + 1..n {
            let s = min_pair_separation(&emitters[i], &emitters[j], combos);
            seps[i][j] = s;
            seps[j][i] = s;
        }
    }
    let per_resample: Vec<Vec<f64>> = (0..resamples as u64)
        .into_par_iter()
        .map(|r| {
            let mut rng = seed.substream(r).rng();
            let idx: Vec<usize> = (0..n).map(|_| rng.random_range(0..n)).collect();
            resample_probabilities(&seps, &idx, windows_mhz)
        })
        .collect();
    Ok((0..windows_mhz.len())
        .map(|w| {
            let column: Vec<f64> = per_resample.iter().map(|p| p[w]).collect();
            stats::sample_std(&column)
        })
        .collect())
}

pub fn bootstrap_std_error(
    emitters: &[EmitterLines],
    window_mhz: f64,
    combos: LineCombos,
    resamples: usize,
    seed: SeedSpec,
) -> Result<f64> {
    Ok(bootstrap_std_errors(emitters, &[window_mhz], combos, resamples, seed)?[0])
}

/// Least-squares slope of `P = s·(Δ/γ)` with zero intercept, unweighted.
pub fn fit_slope_through_origin(curve: &OverlapCurve, gamma_mhz: f64) -> Result<f64> {
    if curve.is_empty() {
        return Err(Error::domain("cannot fit an empty curve"));
    }
    if !(gamma_mhz > 0.0) {
        return Err(Error::domain(format!("gamma must be > 0 MHz, got {gamma_mhz}")));
    }
    let (sxy, sxx) = curve
        .windows_mhz
        .iter()
        .zip(&curve.probabilities)
        .fold((0.0, 0.0), |(sxy, sxx), (&w, &p)| {
            let x = w / gamma_mhz;
            (sxy + x * p, sxx + x * x)
        });
    if sxx == 0.0 {
        return Err(Error::domain("all windows are zero; slope undefined"));
    }
    Ok(sxy / sxx)
}

/// Small-window overlap probability per linewidth for uniformly spread lines.
///
/// Each selected line combination contributes the probability that two
/// independent uniform positions on a `2·half_width` interval fall within
/// ±γ of each other, ≈ 2γ/(2·half_width); combinations are summed (union bound).
pub fn analytic_homogeneous_slope(half_width_ghz: f64, gamma_mhz: f64, n_combos: usize) -> Result<f64> {
    let gamma_ghz = gamma_mhz * 1e-3;
    if !(half_width_ghz > 0.0) || gamma_ghz < 0.0 {
        return Err(Error::domain("half width must be > 0 and gamma >= 0"));
    }
    if gamma_ghz >= half_width_ghz {
        return Err(Error::domain(format!(
            "gamma ({gamma_mhz} MHz) must be much smaller than the half width ({half_width_ghz} GHz)"
        )));
    }
    Ok(n_combos as f64 * 2.0 * gamma_ghz / (2.0 * half_width_ghz))
}

/// Probability that at least one of the n(n−1)/2 pairs collides, treating pairs as independent.
pub fn collision_probability(q: f64, n: usize) -> f64 {
    let pairs = n.saturating_sub(1) as f64 * n as f64 / 2.0;
    if pairs == 0.0 {
        return 0.0;
    }
    1.0 - (1.0 - q).powf(pairs)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThresholdResult {
    pub n_star: usize,
    pub target_probability: f64,
    pub pairwise_q: f64,
    /// `(n, P(collision among n))` for n = 1 ..= 2·n_star.
    pub curve: Vec<(usize, f64)>,
}

/// Smallest n with `collision_probability(q, n) >= target`.
pub fn birthday_threshold(q: f64, target: f64) -> Result<ThresholdResult> {
    if !(q > 0.0 && q <= 1.0) {
        return Err(Error::domain(format!(
            "pairwise probability must lie in (0, 1], got {q}; q = 0 never collides"
        )));
    }
    if !(target > 0.0 && target < 1.0) {
        return Err(Error::domain(format!("target must lie in (0, 1), got {target}")));
    }
    // closed-form starting point, then exact search around it
    let pairs_needed = if q == 1.0 {
        1.0
    } else {
        (1.0 - target).ln() / (1.0 - q).ln()
    };
    let mut n = ((1.0 + (1.0 + 8.0 * pairs_needed).sqrt()) / 2.0).floor().max(2.0) as usize;
    while n > 2 && collision_probability(q, n - 1) >= target {
        n -= 1;
    }
    while collision_probability(q, n) < target {
        n += 1;
    }
    let curve = (1..=2 * n).map(|k| (k, collision_probability(q, k))).collect();
    Ok(ThresholdResult {
        n_star: n,
        target_probability: target,
        pairwise_q: q,
        curve,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct McThresholdConfig {
    pub window_mhz: f64,
    pub target: f64,
    pub trials: usize,
    pub combos: LineCombos,
    /// Trials still collision-free after this many emitters are censored.
    pub max_emitters: usize,
    /// Independent emitter pairs drawn to estimate the pairwise rate.
    pub q_pairs: usize,
}

impl McThresholdConfig {
    pub fn new(window_mhz: f64, target: f64, trials: usize) -> Self {
        Self {
            window_mhz,
            target,
            trials,
            combos: LineCombos::ALL,
            max_emitters: 10_000,
            q_pairs: 200_000,
        }
    }
}

/// Sequential-survey simulation of the collision threshold.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct McThresholdResult {
    /// Empirical threshold; `pairwise_q` holds the Monte Carlo pair rate.
    pub threshold: ThresholdResult,
    /// 95 % interval on `n_star` from the binomial error of the empirical curve.
    pub n_star_ci: (usize, usize),
    /// `(n, fraction of trials that collided with at most n emitters, std error)`.
    pub empirical_curve: Vec<(usize, f64, f64)>,
    pub stop_median: f64,
    pub stop_quantiles: Vec<(f64, f64)>,
    pub trials: usize,
    pub censored_trials: usize,
    /// Closed-form threshold evaluated at the Monte Carlo pair rate.
    pub closed_form: Option<ThresholdResult>,
}

impl McThresholdResult {
    pub fn empirical_probability(&self, n: usize) -> f64 {
        self.empirical_curve
            .iter()
            .take_while(|(k, _, _)| *k <= n)
            .last()
            .map_or(0.0, |(_, p, _)| *p)
    }
}

/// Fraction of independently drawn emitter pairs that overlap within the window.
pub fn pairwise_overlap_rate(
    model: &EnsembleModel,
    window_mhz: f64,
    combos: LineCombos,
    pairs: usize,
    seed: SeedSpec,
) -> Result<f64> {
    model.validate()?;
    if !(window_mhz > 0.0) {
        return Err(Error::domain(format!("window must be > 0 MHz, got {window_mhz}")));
    }
    if pairs == 0 {
        return Err(Error::domain("pair count must be positive"));
    }
    const CHUNK: usize = 4096;
    let chunks = pairs.div_ceil(CHUNK);
    let hits: usize = (0..chunks as u64)
        .into_par_iter()
        .map(|c| {
            let mut rng = seed.substream(c).rng();
            let len = CHUNK.min(pairs - c as usize * CHUNK);
            (0..len)
                .filter(|_| {
                    let e1 = model.draw(String::new(), &mut rng);
                    let e2 = model.draw(String::new(), &mut rng);
                    min_pair_separation(&e1, &e2, combos) < window_mhz
                })
                .count()
        })
        .sum();
    Ok(hits as f64 / pairs as f64)
}

/// Draws emitters one at a time until some pair overlaps; returns the count
/// drawn at that moment, or `None` after `max_emitters` without a collision.
fn stopping_count(model: &EnsembleModel, cfg: &McThresholdConfig, seed: SeedSpec) -> Option<usize> {
    let mut rng = seed.rng();
    let mut seen: Vec<EmitterLines> = Vec::new();
    while seen.len() < cfg.max_emitters {
        let e = model.draw(String::new(), &mut rng);
        if seen
            .iter()
            .any(|prev| min_pair_separation(prev, &e, cfg.combos) < cfg.window_mhz)
        {
            return Some(seen.len() + 1);
        }
        seen.push(e);
    }
    None
}

pub fn monte_carlo_threshold(
    model: &EnsembleModel,
    cfg: &McThresholdConfig,
    seed: SeedSpec,
) -> Result<McThresholdResult> {
    model.validate()?;
    if !(cfg.window_mhz > 0.0) {
        return Err(Error::domain(format!("window must be > 0 MHz, got {}", cfg.window_mhz)));
    }
    if cfg.trials < 1000 {
        return Err(Error::domain(format!("need at least 1000 trials, got {}", cfg.trials)));
    }
    if !(cfg.target > 0.0 && cfg.target < 1.0) {
        return Err(Error::domain(format!("target must lie in (0, 1), got {}", cfg.target)));
    }
    if cfg.max_emitters < 2 {
        return Err(Error::domain("max_emitters must be at least 2"));
    }
    let survey = seed.family(0);
    let stops: Vec<Option<usize>> = (0..cfg.trials as u64)
        .into_par_iter()
        .map(|t| stopping_count(model, cfg, survey.substream(t)))
        .collect();

    let max_stop = stops.iter().flatten().copied().max().unwrap_or(1);
    let mut hist = vec![0usize; max_stop + 1];
    for s in stops.iter().flatten() {
        hist[*s] += 1;
    }
    let total = cfg.trials as f64;
    let mut cumulative = 0usize;
    let empirical_curve: Vec<(usize, f64, f64)> = (1..=max_stop)
        .map(|n| {
            cumulative += hist[n];
            let p = cumulative as f64 / total;
            (n, p, (p * (1.0 - p) / total).sqrt())
        })
        .collect();

    let first_reaching = |f: &dyn Fn(f64, f64) -> f64| {
        empirical_curve
            .iter()
            .find(|(_, p, se)| f(*p, *se) >= cfg.target)
            .map(|(n, _, _)| *n)
    };
    let n_star = first_reaching(&|p, _| p).ok_or_else(|| {
        Error::domain("target probability not reached before max_emitters; raise max_emitters")
    })?;
    let ci_low = first_reaching(&|p, se| p + 1.96 * se).unwrap_or(n_star);
    let ci_high = first_reaching(&|p, se| p - 1.96 * se).unwrap_or(cfg.max_emitters);

    // censored trials sort after every observed stop
    let as_real: Vec<f64> = stops
        .iter()
        .map(|s| s.map_or(f64::INFINITY, |v| v as f64))
        .collect();
    let mut sorted = as_real.clone();
    sorted.sort_by(f64::total_cmp);
    let stop_quantiles = [0.05, 0.25, 0.5, 0.75, 0.95]
        .iter()
        .map(|&q| (q, stats::quantile_sorted(&sorted, q)))
        .collect();

    let q_mc = pairwise_overlap_rate(model, cfg.window_mhz, cfg.combos, cfg.q_pairs, seed.family(1))?;
    let closed_form = if q_mc > 0.0 {
        Some(birthday_threshold(q_mc, cfg.target)?)
    } else {
        None
    };

    Ok(McThresholdResult {
        threshold: ThresholdResult {
            n_star,
            target_probability: cfg.target,
            pairwise_q: q_mc,
            curve: empirical_curve.iter().map(|(n, p, _)| (*n, *p)).collect(),
        },
        n_star_ci: (ci_low, ci_high),
        stop_median: stats::quantile_sorted(&sorted, 0.5),
        stop_quantiles,
        empirical_curve,
        trials: cfg.trials,
        censored_trials: stops.iter().filter(|s| s.is_none()).count(),
        closed_form,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HistogramBin {
    pub lower: f64,
    pub upper: f64,
    pub count: usize,
}

/// Counts values into half-open bins `[origin + k·w, origin + (k+1)·w)`.
///
/// Bins are contiguous from the lowest to the highest occupied bin, empty
/// bins in between included. Non-finite values are skipped.
pub fn histogram(values: &[f64], bin_width: f64, origin: f64) -> Result<Vec<HistogramBin>> {
    if !(bin_width > 0.0) || !bin_width.is_finite() {
        return Err(Error::domain(format!("bin width must be > 0, got {bin_width}")));
    }
    let edge = |k: i64| origin + k as f64 * bin_width;
    let index = |v: f64| {
        let mut k = ((v - origin) / bin_width).floor() as i64;
        // reconcile the division with the edges actually reported
        if v >= edge(k + 1) {
            k += 1;
        } else if v < edge(k) {
            k -= 1;
        }
        k
    };
    let ks: Vec<i64> = values.iter().filter(|v| v.is_finite()).map(|&v| index(v)).collect();
    let (Some(&lo), Some(&hi)) = (ks.iter().min(), ks.iter().max()) else {
        return Ok(Vec::new());
    };
    let mut bins: Vec<HistogramBin> = (lo..=hi)
        .map(|k| HistogramBin {
            lower: edge(k),
            upper: edge(k + 1),
            count: 0,
        })
        .collect();
    for k in ks {
        bins[(k - lo) as usize].count += 1;
    }
    Ok(bins)
}
