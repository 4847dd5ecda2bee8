//! Emitter line records and the parametric ensemble model.
//!
//! Each emitter carries two optical absorption lines: A1 (spin-1/2 subspace,
//! lower frequency) and A2 (spin-3/2 subspace, higher frequency). Their
//! separation is the excited-state zero-field splitting (ZFS).
//!
//! Emitters are generated as `a1 = c - z/2`, `a2 = c + z/2` with the centre
//! `c` and splitting `z` drawn independently, so the two are uncorrelated by
//! construction.

use std::f64::consts::PI;
use std::fmt;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::SeedSpec;
use crate::stats::Moments;

/// Absolute optical frequency that all detunings are measured from.
pub const REFERENCE_FREQUENCY_THZ: f64 = 347.940_59;

/// Ground-state splitting of the emitter. Informational only, no computation uses it.
pub const GROUND_STATE_SPLITTING_MHZ: f64 = 5.0;

/// Microwave spin-mixing drive used during PLE scans. Informational only.
pub const MW_MIXING_FREQUENCY_MHZ: f64 = 5.0;

pub const DEFAULT_ZFS_MEAN_GHZ: f64 = 1.027;
pub const DEFAULT_ZFS_SIGMA_GHZ: f64 = 0.075;
pub const DEFAULT_FWHM_MEAN_MHZ: f64 = 316.0;
pub const DEFAULT_FWHM_SIGMA_MHZ: f64 = 122.0;
pub const DEFAULT_LIFETIME_NS: f64 = 5.5;
pub const DEFAULT_CENTER_HALF_WIDTH_GHZ: f64 = 10.0;
/// Normal-centre width whose extreme of ~100 lines lands near ±10 GHz.
pub const DEFAULT_CENTER_SIGMA_GHZ: f64 = 4.0;

/// Optical detuning in GHz relative to [`REFERENCE_FREQUENCY_THZ`].
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct FrequencyDetuning(f64);

impl FrequencyDetuning {
    pub fn new(ghz: f64) -> Result<Self> {
        if !ghz.is_finite() {
            return Err(Error::domain(format!("detuning must be finite, got {ghz}")));
        }
        Ok(Self(ghz))
    }

    pub const fn ghz(self) -> f64 {
        self.0
    }

    pub fn absolute_thz(self) -> f64 {
        REFERENCE_FREQUENCY_THZ + self.0 * 1e-3
    }
}

impl fmt::Display for FrequencyDetuning {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:+.6} GHz", self.0)
    }
}

/// One emitter's pair of absorption lines.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmitterLines {
    pub id: String,
    a1: FrequencyDetuning,
    a2: FrequencyDetuning,
    fwhm_a1_mhz: f64,
    fwhm_a2_mhz: f64,
}

impl EmitterLines {
    pub fn new(
        id: impl Into<String>,
        a1_ghz: f64,
        a2_ghz: f64,
        fwhm_a1_mhz: f64,
        fwhm_a2_mhz: f64,
    ) -> Result<Self> {
        let id = id.into();
        let a1 = FrequencyDetuning::new(a1_ghz)?;
        let a2 = FrequencyDetuning::new(a2_ghz)?;
        if a2_ghz <= a1_ghz {
            return Err(Error::Validation(format!(
                "emitter {id}: A2 ({a2_ghz} GHz) must lie above A1 ({a1_ghz} GHz)"
            )));
        }
        if !(fwhm_a1_mhz > 0.0 && fwhm_a2_mhz > 0.0) || !fwhm_a1_mhz.is_finite() || !fwhm_a2_mhz.is_finite() {
            return Err(Error::Validation(format!(
                "emitter {id}: linewidths must be positive, got {fwhm_a1_mhz} and {fwhm_a2_mhz} MHz"
            )));
        }
        Ok(Self {
            id,
            a1,
            a2,
            fwhm_a1_mhz,
            fwhm_a2_mhz,
        })
    }

    pub fn a1(&self) -> FrequencyDetuning {
        self.a1
    }

    pub fn a2(&self) -> FrequencyDetuning {
        self.a2
    }

    pub fn fwhm_a1_mhz(&self) -> f64 {
        self.fwhm_a1_mhz
    }

    pub fn fwhm_a2_mhz(&self) -> f64 {
        self.fwhm_a2_mhz
    }

    pub fn zfs_ghz(&self) -> f64 {
        self.a2.0 - self.a1.0
    }

    pub fn center_ghz(&self) -> f64 {
        0.5 * (self.a1.0 + self.a2.0)
    }

    fn line(&self, label: LineLabel) -> f64 {
        match label {
            LineLabel::A1 => self.a1.0,
            LineLabel::A2 => self.a2.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum LineLabel {
    A1,
    A2,
}

/// A combination of one line from the first emitter with one line from the second.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum LinePair {
    A1A1,
    A2A2,
    /// A1 of the first emitter against A2 of the second.
    A1A2,
    /// A2 of the first emitter against A1 of the second.
    A2A1,
}

impl LinePair {
    pub const ALL: [LinePair; 4] = [LinePair::A1A1, LinePair::A2A2, LinePair::A1A2, LinePair::A2A1];

    fn bit(self) -> u8 {
        match self {
            LinePair::A1A1 => 1,
            LinePair::A2A2 => 2,
            LinePair::A1A2 => 4,
            LinePair::A2A1 => 8,
        }
    }

    fn labels(self) -> (LineLabel, LineLabel) {
        match self {
            LinePair::A1A1 => (LineLabel::A1, LineLabel::A1),
            LinePair::A2A2 => (LineLabel::A2, LineLabel::A2),
            LinePair::A1A2 => (LineLabel::A1, LineLabel::A2),
            LinePair::A2A1 => (LineLabel::A2, LineLabel::A1),
        }
    }

    fn swapped(self) -> Self {
        match self {
            LinePair::A1A2 => LinePair::A2A1,
            LinePair::A2A1 => LinePair::A1A2,
            other => other,
        }
    }
}

/// Non-empty set of [`LinePair`]s that count as a possible overlap.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "Vec<LinePair>", into = "Vec<LinePair>")]
pub struct LineCombos(u8);

impl LineCombos {
    pub const ALL: LineCombos = LineCombos(0b1111);
    pub const SAME_LABEL: LineCombos = LineCombos(0b0011);

    pub fn new(pairs: &[LinePair]) -> Result<Self> {
        let bits = pairs.iter().fold(0u8, |acc, p| acc | p.bit());
        if bits == 0 {
            return Err(Error::domain("line combination set must not be empty"));
        }
        Ok(Self(bits))
    }

    pub fn contains(self, pair: LinePair) -> bool {
        self.0 & pair.bit() != 0
    }

    pub fn iter(self) -> impl Iterator<Item = LinePair> {
        LinePair::ALL.into_iter().filter(move |p| self.contains(*p))
    }

    pub fn len(self) -> usize {
        self.0.count_ones() as usize
    }

    pub fn is_empty(self) -> bool {
        self.0 == 0
    }

    /// True when swapping the two emitters maps the set onto itself.
    pub fn is_swap_closed(self) -> bool {
        self.iter().all(|p| self.contains(p.swapped()))
    }
}

impl Default for LineCombos {
    fn default() -> Self {
        Self::ALL
    }
}

impl TryFrom<Vec<LinePair>> for LineCombos {
    type Error = Error;

    fn try_from(value: Vec<LinePair>) -> Result<Self> {
        Self::new(&value)
    }
}

impl From<LineCombos> for Vec<LinePair> {
    fn from(value: LineCombos) -> Self {
        value.iter().collect()
    }
}

/// Distribution of the emitter centre frequency around zero detuning.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum CenterDistribution {
    Uniform { half_width_ghz: f64 },
    Normal { sigma_ghz: f64 },
}

impl CenterDistribution {
    fn validate(&self) -> Result<()> {
        let (name, v) = match *self {
            CenterDistribution::Uniform { half_width_ghz } => ("half_width_ghz", half_width_ghz),
            CenterDistribution::Normal { sigma_ghz } => ("sigma_ghz", sigma_ghz),
        };
        if !(v >= 0.0 && v.is_finite()) {
            return Err(Error::domain(format!("centre distribution {name} must be >= 0, got {v}")));
        }
        Ok(())
    }

    fn sample(&self, rng: &mut ChaCha8Rng) -> f64 {
        match *self {
            CenterDistribution::Uniform { half_width_ghz } => {
                half_width_ghz * (2.0 * rng.random::<f64>() - 1.0)
            }
            CenterDistribution::Normal { sigma_ghz } => sigma_ghz * standard_normal(rng),
        }
    }
}

impl Default for CenterDistribution {
    fn default() -> Self {
        CenterDistribution::Uniform {
            half_width_ghz: DEFAULT_CENTER_HALF_WIDTH_GHZ,
        }
    }
}

/// Normal distribution truncated to strictly positive values by rejection.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PositiveNormal {
    pub mean: f64,
    pub sigma: f64,
}

impl PositiveNormal {
    pub const fn new(mean: f64, sigma: f64) -> Self {
        Self { mean, sigma }
    }

    fn validate(&self, what: &str) -> Result<()> {
        if !(self.mean > 0.0 && self.mean.is_finite()) {
            return Err(Error::domain(format!("{what} mean must be > 0, got {}", self.mean)));
        }
        if !(self.sigma >= 0.0 && self.sigma.is_finite()) {
            return Err(Error::domain(format!("{what} sigma must be >= 0, got {}", self.sigma)));
        }
        Ok(())
    }

    // mean > 0 bounds the rejection rate below 1/2
    fn sample(&self, rng: &mut ChaCha8Rng) -> f64 {
        loop {
            let v = self.mean + self.sigma * standard_normal(rng);
            if v > 0.0 {
                return v;
            }
        }
    }
}

fn standard_normal(rng: &mut ChaCha8Rng) -> f64 {
    Normal::new(0.0, 1.0).expect("unit normal").sample(rng)
}

/// Parametric population that emitters are drawn from.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EnsembleModel {
    pub center: CenterDistribution,
    /// Excited-state zero-field splitting, GHz.
    pub zfs_ghz: PositiveNormal,
    /// Per-line full width at half maximum, MHz.
    pub fwhm_mhz: PositiveNormal,
    pub lifetime_ns: f64,
}

impl Default for EnsembleModel {
    fn default() -> Self {
        Self {
            center: CenterDistribution::default(),
            zfs_ghz: PositiveNormal::new(DEFAULT_ZFS_MEAN_GHZ, DEFAULT_ZFS_SIGMA_GHZ),
            fwhm_mhz: PositiveNormal::new(DEFAULT_FWHM_MEAN_MHZ, DEFAULT_FWHM_SIGMA_MHZ),
            lifetime_ns: DEFAULT_LIFETIME_NS,
        }
    }
}

impl EnsembleModel {
    /// Default model with normally distributed centres.
    pub fn with_normal_centers(sigma_ghz: f64) -> Self {
        Self {
            center: CenterDistribution::Normal { sigma_ghz },
            ..Self::default()
        }
    }

    /// Every parameter deterministic: all sampled emitters are identical.
    pub fn zero_spread() -> Self {
        Self {
            center: CenterDistribution::Uniform { half_width_ghz: 0.0 },
            zfs_ghz: PositiveNormal::new(DEFAULT_ZFS_MEAN_GHZ, 0.0),
            fwhm_mhz: PositiveNormal::new(DEFAULT_FWHM_MEAN_MHZ, 0.0),
            lifetime_ns: DEFAULT_LIFETIME_NS,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.center.validate()?;
        self.zfs_ghz.validate("zfs")?;
        self.fwhm_mhz.validate("fwhm")?;
        if !(self.lifetime_ns > 0.0 && self.lifetime_ns.is_finite()) {
            return Err(Error::domain(format!("lifetime must be > 0 ns, got {}", self.lifetime_ns)));
        }
        Ok(())
    }

    /// Lifetime-limited linewidth of this population, MHz.
    pub fn gamma_mhz(&self) -> f64 {
        1e3 / (2.0 * PI * self.lifetime_ns)
    }

    /// Draws one emitter. The draw order (centre, zfs, fwhm A1, fwhm A2) is fixed.
    pub(crate) fn draw(&self, id: String, rng: &mut ChaCha8Rng) -> EmitterLines {
        let c = self.center.sample(rng);
        let z = self.zfs_ghz.sample(rng);
        let w1 = self.fwhm_mhz.sample(rng);
        let w2 = self.fwhm_mhz.sample(rng);
        EmitterLines {
            id,
            a1: FrequencyDetuning(c - 0.5 * z),
            a2: FrequencyDetuning(c + 0.5 * z),
            fwhm_a1_mhz: w1,
            fwhm_a2_mhz: w2,
        }
    }
}

/// Fourier-limited emission linewidth Γ = 1/(2πτ), in MHz for τ in ns.
pub fn lifetime_limited_linewidth(lifetime_ns: f64) -> Result<f64> {
    if !(lifetime_ns > 0.0) || !lifetime_ns.is_finite() {
        return Err(Error::domain(format!("lifetime must be > 0 ns, got {lifetime_ns}")));
    }
    Ok(1e3 / (2.0 * PI * lifetime_ns))
}

/// Draws `n` emitters from `model`, all from the single stream named by `seed`.
pub fn sample_ensemble(model: &EnsembleModel, n: usize, seed: SeedSpec) -> Result<Vec<EmitterLines>> {
    model.validate()?;
    if n == 0 {
        return Err(Error::domain("ensemble size must be at least 1"));
    }
    let mut rng = seed.rng();
    Ok((0..n).map(|i| model.draw(format!("e{:04}", i + 1), &mut rng)).collect())
}

/// Smallest |Δf| in MHz over the selected line combinations.
pub fn min_pair_separation(e1: &EmitterLines, e2: &EmitterLines, combos: LineCombos) -> f64 {
    combos
        .iter()
        .map(|pair| {
            let (l1, l2) = pair.labels();
            (e1.line(l1) - e2.line(l2)).abs() * 1e3
        })
        .fold(f64::INFINITY, f64::min)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnsembleSummary {
    pub n_emitters: usize,
    pub zfs_ghz: Moments,
    pub center_ghz: Moments,
    /// Both lines of every emitter pooled.
    pub fwhm_mhz: Moments,
    pub a1_ghz: Moments,
    pub a2_ghz: Moments,
    pub min_line_ghz: f64,
    pub max_line_ghz: f64,
}

pub fn summarize_ensemble(emitters: &[EmitterLines]) -> Result<EnsembleSummary> {
    if emitters.len() < 2 {
        return Err(Error::domain(format!(
            "summary needs at least 2 emitters, got {}",
            emitters.len()
        )));
    }
    let collect = |f: &dyn Fn(&EmitterLines) -> f64| emitters.iter().map(f).collect::<Vec<_>>();
    let a1 = collect(&|e| e.a1.0);
    let a2 = collect(&|e| e.a2.0);
    let fwhm: Vec<f64> = emitters
        .iter()
        .flat_map(|e| [e.fwhm_a1_mhz, e.fwhm_a2_mhz])
        .collect();
    let a1m = Moments::of(&a1);
    let a2m = Moments::of(&a2);
    Ok(EnsembleSummary {
        n_emitters: emitters.len(),
        zfs_ghz: Moments::of(&collect(&|e| e.zfs_ghz())),
        center_ghz: Moments::of(&collect(&|e| e.center_ghz())),
        fwhm_mhz: Moments::of(&fwhm),
        min_line_ghz: a1m.min.min(a2m.min),
        max_line_ghz: a1m.max.max(a2m.max),
        a1_ghz: a1m,
        a2_ghz: a2m,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn lines(a1: f64, a2: f64) -> EmitterLines {
        EmitterLines::new("x", a1, a2, 300.0, 300.0).unwrap()
    }

    #[test]
    fn linewidth_examples() {
        assert_abs_diff_eq!(lifetime_limited_linewidth(5.5).unwrap(), 28.94, epsilon = 0.01);
        let unit = 1e3 / (2.0 * PI);
        assert_abs_diff_eq!(lifetime_limited_linewidth(unit).unwrap(), 1.0, epsilon = 1e-12);
        // halving the lifetime doubles the width
        let half = lifetime_limited_linewidth(2.75).unwrap();
        assert_abs_diff_eq!(half, 2.0 * lifetime_limited_linewidth(5.5).unwrap(), epsilon = 1e-12);
        assert_abs_diff_eq!(half, 57.87, epsilon = 0.01);
    }

    #[test]
    fn linewidth_rejects_nonpositive() {
        assert!(matches!(lifetime_limited_linewidth(0.0), Err(Error::Domain(_))));
        assert!(matches!(lifetime_limited_linewidth(-1.0), Err(Error::Domain(_))));
    }

    #[test]
    fn emitter_invariants_enforced() {
        assert!(EmitterLines::new("a", 1.0, 1.0, 1.0, 1.0).is_err());
        assert!(EmitterLines::new("a", 0.0, 1.0, 0.0, 1.0).is_err());
        assert!(EmitterLines::new("a", 0.0, 1.0, 1.0, 1.0).is_ok());
    }

    #[test]
    fn sampled_ensemble_respects_invariants() {
        let em = sample_ensemble(&EnsembleModel::default(), 50, SeedSpec::new(1)).unwrap();
        assert_eq!(em.len(), 50);
        for e in &em {
            assert!(e.zfs_ghz() > 0.0);
            assert!(e.fwhm_a1_mhz() > 0.0 && e.fwhm_a2_mhz() > 0.0);
        }
    }

    #[test]
    fn zfs_sample_mean_within_clt_bound() {
        let em = sample_ensemble(&EnsembleModel::default(), 10_000, SeedSpec::new(7)).unwrap();
        let s = summarize_ensemble(&em).unwrap();
        assert_abs_diff_eq!(s.zfs_ghz.mean, 1.027, epsilon = 0.003);
    }

    #[test]
    fn degenerate_zfs() {
        let model = EnsembleModel {
            zfs_ghz: PositiveNormal::new(1.027, 0.0),
            ..EnsembleModel::default()
        };
        let em = sample_ensemble(&model, 5, SeedSpec::new(2)).unwrap();
        for e in &em {
            // c ± z/2 loses at most an ulp or two of the centre's magnitude
            assert_abs_diff_eq!(e.zfs_ghz(), 1.027, epsilon = 1e-14 * 16.0);
        }
        let flat = sample_ensemble(&EnsembleModel::zero_spread(), 5, SeedSpec::new(2)).unwrap();
        assert!(flat.iter().all(|e| e.zfs_ghz() == 1.027));
    }

    #[test]
    fn zero_size_ensemble_rejected() {
        assert!(sample_ensemble(&EnsembleModel::default(), 0, SeedSpec::new(1)).is_err());
        let bad = EnsembleModel {
            lifetime_ns: 0.0,
            ..EnsembleModel::default()
        };
        assert!(sample_ensemble(&bad, 3, SeedSpec::new(1)).is_err());
    }

    #[test]
    fn separation_examples() {
        let e = lines(0.0, 1.0);
        assert_eq!(min_pair_separation(&e, &e, LineCombos::ALL), 0.0);

        let e2 = lines(1.0, 2.0);
        assert_eq!(min_pair_separation(&e, &e2, LineCombos::ALL), 0.0);

        // brute force over the four distances: {|0-0.2|, |1-1.25|, |0-1.25|, |1-0.2|}
        let e3 = lines(0.2, 1.25);
        let brute = [0.2f64, 0.25, 1.25, 0.8]
            .iter()
            .cloned()
            .fold(f64::INFINITY, f64::min)
            * 1e3;
        assert_abs_diff_eq!(min_pair_separation(&e, &e3, LineCombos::ALL), brute, epsilon = 1e-9);
        assert_abs_diff_eq!(brute, 200.0, epsilon = 1e-9);
    }

    #[test]
    fn empty_combo_set_is_domain_error() {
        assert!(matches!(LineCombos::new(&[]), Err(Error::Domain(_))));
        let one = LineCombos::new(&[LinePair::A1A2]).unwrap();
        assert!(!one.is_swap_closed());
        assert!(LineCombos::ALL.is_swap_closed());
    }

    #[test]
    fn summary_examples() {
        let em = vec![lines(0.0, 1.0), lines(0.0, 1.1)];
        let s = summarize_ensemble(&em).unwrap();
        assert_abs_diff_eq!(s.zfs_ghz.mean, 1.05, epsilon = 1e-12);
        assert_abs_diff_eq!(s.zfs_ghz.std * 1e3, 70.71, epsilon = 0.01);
        assert!(summarize_ensemble(&em[..1]).is_err());

        let flat = sample_ensemble(&EnsembleModel::zero_spread(), 50, SeedSpec::new(9)).unwrap();
        let s = summarize_ensemble(&flat).unwrap();
        assert_eq!(s.zfs_ghz.std, 0.0);
        assert_eq!(s.fwhm_mhz.std, 0.0);
        assert_eq!(s.center_ghz.std, 0.0);
    }

    /// Mean of N(μ, σ) truncated to (0, ∞) by trapezoidal quadrature.
    fn truncated_mean_quadrature(mu: f64, sigma: f64) -> f64 {
        let n = 200_000;
        let hi = mu + 12.0 * sigma;
        let h = hi / n as f64;
        let pdf = |x: f64| (-0.5 * ((x - mu) / sigma).powi(2)).exp();
        let (mut num, mut den) = (0.0, 0.0);
        for i in 0..=n {
            let x = i as f64 * h;
            let w = if i == 0 || i == n { 0.5 } else { 1.0 };
            num += w * x * pdf(x);
            den += w * pdf(x);
        }
        num / den
    }

    #[test]
    fn fwhm_mean_within_bound_and_truncation_bias_small() {
        let bias = truncated_mean_quadrature(316.0, 122.0) - 316.0;
        assert!(bias > 0.0 && bias < 2.0, "truncation bias {bias} MHz");
        let em = sample_ensemble(&EnsembleModel::default(), 5000, SeedSpec::new(3)).unwrap();
        let s = summarize_ensemble(&em).unwrap();
        assert_abs_diff_eq!(s.fwhm_mhz.mean, 316.0, epsilon = 6.0);
    }

    #[test]
    fn combos_serde_as_list() {
        let json = serde_json::to_string(&LineCombos::SAME_LABEL).unwrap();
        assert_eq!(json, r#"["A1A1","A2A2"]"#);
        let back: LineCombos = serde_json::from_str(&json).unwrap();
        assert_eq!(back, LineCombos::SAME_LABEL);
        assert!(serde_json::from_str::<LineCombos>("[]").is_err());
    }

    fn arb_emitter() -> impl Strategy<Value = EmitterLines> {
        (-10.0f64..10.0, 0.01f64..3.0).prop_map(|(c, z)| lines(c - z / 2.0, c + z / 2.0))
    }

    proptest! {
        #[test]
        fn sampling_is_deterministic(seed in any::<u64>(), stream in 0u64..1000, n in 1usize..20) {
            let s = SeedSpec::with_stream(seed, stream);
            let a = sample_ensemble(&EnsembleModel::default(), n, s).unwrap();
            let b = sample_ensemble(&EnsembleModel::default(), n, s).unwrap();
            prop_assert_eq!(a, b);
        }

        #[test]
        fn separation_symmetric_and_subset_monotone(e1 in arb_emitter(), e2 in arb_emitter(), mask in 1u8..16) {
            let all = min_pair_separation(&e1, &e2, LineCombos::ALL);
            prop_assert_eq!(all, min_pair_separation(&e2, &e1, LineCombos::ALL));
            let subset: Vec<LinePair> = LinePair::ALL.iter().copied().filter(|p| mask & p.bit() != 0).collect();
            let sub = LineCombos::new(&subset).unwrap();
            prop_assert!(min_pair_separation(&e1, &e2, sub) >= all);
        }

        #[test]
        fn linewidth_strictly_decreasing(t in 0.01f64..100.0, dt in 0.01f64..10.0) {
            prop_assert!(lifetime_limited_linewidth(t + dt).unwrap() < lifetime_limited_linewidth(t).unwrap());
        }
    }
}
