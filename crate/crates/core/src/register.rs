//! Exact state-vector simulation of photon-heralded GHZ generation.
//!
//! Each emitter's ground state is a qubit: `↑` is the spin-1/2 subspace and
//! `↓` the spin-3/2 subspace. Basis index bit `n-1-q` holds qubit `q`
//! (qubit 0 is the most significant bit), with bit value 1 meaning `↓`.
//! Qubits are 0-based throughout.
//!
//! Driving the line shared by emitters `i` and `j` excites `i` when it is `↓`
//! and `j` when it is `↑`, so the photon number sorts the pair into three
//! sectors: none for `↑ᵢ↓ⱼ`, one for `↑ᵢ↑ⱼ`/`↓ᵢ↓ⱼ`, two for `↓ᵢ↑ⱼ`.
//!
//! Detector loss is handled by enumerating weighted pure-state branches,
//! which is exact here because every outcome is a projection.

use std::f64::consts::FRAC_1_SQRT_2;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const MIN_QUBITS: usize = 2;
pub const MAX_QUBITS: usize = 12;

/// Sector probabilities below this are treated as exactly zero.
const ZERO_PROBABILITY: f64 = 1e-24;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Spin {
    Up,
    Down,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpinRegisterState {
    n: usize,
    amplitudes: Vec<Complex64>,
}

impl SpinRegisterState {
    pub fn basis(spins: &[Spin]) -> Result<Self> {
        let n = spins.len();
        check_size(n)?;
        let index = spins
            .iter()
            .fold(0usize, |acc, s| (acc << 1) | usize::from(*s == Spin::Down));
        let mut amplitudes = vec![Complex64::new(0.0, 0.0); 1 << n];
        amplitudes[index] = Complex64::new(1.0, 0.0);
        Ok(Self { n, amplitudes })
    }

    /// Builds a state from raw amplitudes, which must already be normalized.
    pub fn from_amplitudes(amplitudes: Vec<Complex64>) -> Result<Self> {
        let len = amplitudes.len();
        if !len.is_power_of_two() {
            return Err(Error::domain(format!("amplitude count {len} is not a power of two")));
        }
        let n = len.trailing_zeros() as usize;
        check_size(n)?;
        let s = Self { n, amplitudes };
        if (s.norm_sqr() - 1.0).abs() > 1e-12 {
            return Err(Error::domain(format!("state norm² is {}, expected 1", s.norm_sqr())));
        }
        Ok(s)
    }

    pub fn n_qubits(&self) -> usize {
        self.n
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amplitudes
    }

    pub fn amplitude(&self, spins: &[Spin]) -> Complex64 {
        assert_eq!(spins.len(), self.n, "spin pattern length must match register size");
        let index = spins
            .iter()
            .fold(0usize, |acc, s| (acc << 1) | usize::from(*s == Spin::Down));
        self.amplitudes[index]
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amplitudes.iter().map(|a| a.norm_sqr()).sum()
    }

    pub fn spin(&self, index: usize, qubit: usize) -> Spin {
        if (index >> (self.n - 1 - qubit)) & 1 == 1 {
            Spin::Down
        } else {
            Spin::Up
        }
    }

    /// `|⟨self|other⟩|²`.
    pub fn overlap_sqr(&self, other: &Self) -> f64 {
        self.amplitudes
            .iter()
            .zip(&other.amplitudes)
            .map(|(a, b)| a.conj() * b)
            .sum::<Complex64>()
            .norm_sqr()
    }

    /// Basis-state label such as `↑↓↑↓`.
    pub fn label(&self, index: usize) -> String {
        (0..self.n)
            .map(|q| if self.spin(index, q) == Spin::Up { '↑' } else { '↓' })
            .collect()
    }

    fn check_pair(&self, i: usize, j: usize) -> Result<()> {
        if i == j || i >= self.n || j >= self.n {
            return Err(Error::domain(format!(
                "herald pair ({i}, {j}) must be two distinct qubits below {}",
                self.n
            )));
        }
        Ok(())
    }
}

fn check_size(n: usize) -> Result<()> {
    if !(MIN_QUBITS..=MAX_QUBITS).contains(&n) {
        return Err(Error::domain(format!(
            "register size must be in {MIN_QUBITS}..={MAX_QUBITS}, got {n}"
        )));
    }
    Ok(())
}

/// Optically pumped dark state `↑↓↑↓…`.
pub fn init_pumped(n: usize) -> Result<SpinRegisterState> {
    let spins: Vec<Spin> = (0..n)
        .map(|q| if q % 2 == 0 { Spin::Up } else { Spin::Down })
        .collect();
    SpinRegisterState::basis(&spins)
}

/// Global π/2 pulse: ↑ → (↑+↓)/√2 and ↓ → (↑−↓)/√2 on every qubit.
pub fn hadamard_all(state: &SpinRegisterState) -> SpinRegisterState {
    let mut amps = state.amplitudes.clone();
    let len = amps.len();
    for q in 0..state.n {
        let stride = 1 << (state.n - 1 - q);
        for base in (0..len).step_by(2 * stride) {
            for k in base..base + stride {
                let (up, down) = (amps[k], amps[k + stride]);
                amps[k] = (up + down) * FRAC_1_SQRT_2;
                amps[k + stride] = (up - down) * FRAC_1_SQRT_2;
            }
        }
    }
    SpinRegisterState {
        n: state.n,
        amplitudes: amps,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum HeraldLabel {
    ZeroPhoton,
    OnePhoton,
    TwoPhoton,
}

impl HeraldLabel {
    fn of(si: Spin, sj: Spin) -> Self {
        match (si, sj) {
            (Spin::Up, Spin::Down) => HeraldLabel::ZeroPhoton,
            (Spin::Down, Spin::Up) => HeraldLabel::TwoPhoton,
            _ => HeraldLabel::OnePhoton,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HeraldOutcome {
    pub label: HeraldLabel,
    pub probability: f64,
    /// `None` when the outcome has zero probability.
    pub post_state: Option<SpinRegisterState>,
}

impl HeraldOutcome {
    pub fn state(&self) -> Result<&SpinRegisterState> {
        self.post_state.as_ref().ok_or_else(|| {
            Error::Protocol(format!("{:?} outcome has zero probability", self.label))
        })
    }
}

/// Projects the register onto the three photon-number sectors of pair `(i, j)`.
///
/// Returned in the order ZeroPhoton, OnePhoton, TwoPhoton.
pub fn herald_pair(state: &SpinRegisterState, i: usize, j: usize) -> Result<[HeraldOutcome; 3]> {
    state.check_pair(i, j)?;
    let labels = [HeraldLabel::ZeroPhoton, HeraldLabel::OnePhoton, HeraldLabel::TwoPhoton];
    let mut projected = [(); 3].map(|_| vec![Complex64::new(0.0, 0.0); state.amplitudes.len()]);
    let mut mass = [0.0f64; 3];
    for (idx, a) in state.amplitudes.iter().enumerate() {
        let label = HeraldLabel::of(state.spin(idx, i), state.spin(idx, j));
        let s = labels.iter().position(|l| *l == label).expect("label listed");
        projected[s][idx] = *a;
        mass[s] += a.norm_sqr();
    }
    let total: f64 = mass.iter().sum();
    let mut out = projected.into_iter().zip(mass).zip(labels).map(|((mut amps, m), label)| {
        let probability = m / total;
        let post_state = (probability > ZERO_PROBABILITY).then(|| {
            let scale = 1.0 / m.sqrt();
            amps.iter_mut().for_each(|a| *a *= scale);
            SpinRegisterState {
                n: state.n,
                amplitudes: amps,
            }
        });
        HeraldOutcome {
            label,
            probability,
            post_state,
        }
    });
    Ok([
        out.next().expect("zero"),
        out.next().expect("one"),
        out.next().expect("two"),
    ])
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChainResult {
    pub state: SpinRegisterState,
    pub success_probability: f64,
}

/// Pump, rotate, then herald neighbours (0,1), (1,2), … on one photon each.
pub fn run_ghz_chain(n: usize) -> Result<ChainResult> {
    let mut state = hadamard_all(&init_pumped(n)?);
    let mut success = 1.0;
    for q in 0..n - 1 {
        let [_, one, _] = herald_pair(&state, q, q + 1)?;
        success *= one.probability;
        state = one.state()?.clone();
    }
    Ok(ChainResult {
        state,
        success_probability: success,
    })
}

/// Ideal target of the chain: the GHZ state with the sign the protocol produces.
pub fn ghz_target(n: usize) -> Result<SpinRegisterState> {
    Ok(run_ghz_chain(n)?.state)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LossModel {
    eta: f64,
}

impl LossModel {
    pub fn new(eta: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&eta) {
            return Err(Error::domain(format!("detection efficiency must lie in [0, 1], got {eta}")));
        }
        Ok(Self { eta })
    }

    pub fn eta(&self) -> f64 {
        self.eta
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Branch {
    pub weight: f64,
    pub state: SpinRegisterState,
}

/// Classical mixture of pure states with weights summing to one.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MixedOutcome {
    pub branches: Vec<Branch>,
}

impl MixedOutcome {
    pub fn pure(state: SpinRegisterState) -> Self {
        Self {
            branches: vec![Branch { weight: 1.0, state }],
        }
    }

    fn normalized(branches: Vec<Branch>) -> Result<(Self, f64)> {
        let total: f64 = branches.iter().map(|b| b.weight).sum();
        if !(total > 0.0) {
            return Err(Error::Protocol("no branch produces a single click".into()));
        }
        let branches = branches
            .into_iter()
            .map(|b| Branch {
                weight: b.weight / total,
                state: b.state,
            })
            .collect();
        Ok((Self { branches }, total))
    }

    pub fn total_weight(&self) -> f64 {
        self.branches.iter().map(|b| b.weight).sum()
    }
}

/// Single-click heralding with lossy detection.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LossyHerald {
    pub mixture: MixedOutcome,
    /// Probability of exactly one click.
    pub click_probability: f64,
    /// Weight of the true one-photon branch from branch enumeration.
    pub enumerated_fidelity: f64,
    /// Closed form 1/(3 − 2η) for the two-emitter heralded state.
    pub closed_form_fidelity: f64,
}

/// Closed-form two-emitter heralding fidelity `p = 1/(3 − 2η)`.
pub fn closed_form_herald_fidelity(eta: f64) -> f64 {
    1.0 / (3.0 - 2.0 * eta)
}

/// Closed-form n-emitter chain fidelity `p^(n−1)`, treating heralds as independent.
pub fn closed_form_chain_fidelity(n: usize, eta: f64) -> f64 {
    closed_form_herald_fidelity(eta).powi(n as i32 - 1)
}

// unnormalized single-click branches of one lossy herald
fn click_branches(state: &SpinRegisterState, i: usize, j: usize, eta: f64) -> Result<Vec<(f64, SpinRegisterState)>> {
    let [_, one, two] = herald_pair(state, i, j)?;
    let mut out = Vec::with_capacity(2);
    if let Some(s) = one.post_state {
        out.push((eta * one.probability, s));
    }
    if let Some(s) = two.post_state {
        let w = 2.0 * eta * (1.0 - eta) * two.probability;
        if w > 0.0 {
            out.push((w, s));
        }
    }
    Ok(out)
}

/// Heralds pair `(i, j)` on exactly one detector click.
///
/// Each emitted photon is detected independently with probability η and
/// there are no dark counts. A click comes either from the one-photon sector
/// (weight η·P₁) or from the two-photon sector with one photon lost
/// (weight 2η(1−η)·P₂), the latter collapsing onto `↓ᵢ↑ⱼ`.
pub fn herald_with_loss(state: &SpinRegisterState, i: usize, j: usize, loss: &LossModel) -> Result<LossyHerald> {
    if loss.eta == 0.0 {
        return Err(Error::domain("eta = 0 never produces a click to condition on"));
    }
    let raw = click_branches(state, i, j, loss.eta)?;
    let true_weight = raw.first().map_or(0.0, |b| b.0);
    let (mixture, total) = MixedOutcome::normalized(
        raw.into_iter()
            .map(|(weight, state)| Branch { weight, state })
            .collect(),
    )?;
    Ok(LossyHerald {
        mixture,
        click_probability: total,
        enumerated_fidelity: true_weight / total,
        closed_form_fidelity: closed_form_herald_fidelity(loss.eta),
    })
}

/// Chain protocol with every herald conditioned on exactly one click.
///
/// Returns the normalized branch mixture and the overall probability that
/// every herald clicked once.
pub fn lossy_ghz_chain(n: usize, loss: &LossModel) -> Result<(MixedOutcome, f64)> {
    if loss.eta == 0.0 {
        return Err(Error::domain("eta = 0 never produces a click to condition on"));
    }
    let start = hadamard_all(&init_pumped(n)?);
    let mut branches = vec![(1.0, start)];
    for q in 0..n - 1 {
        let mut next = Vec::with_capacity(2 * branches.len());
        for (w, s) in &branches {
            for (bw, bs) in click_branches(s, q, q + 1, loss.eta)? {
                next.push((w * bw, bs));
            }
        }
        branches = next;
    }
    MixedOutcome::normalized(
        branches
            .into_iter()
            .map(|(weight, state)| Branch { weight, state })
            .collect(),
    )
}

/// `Σ wₖ |⟨GHZₙ|ψₖ⟩|²` against the chain's ideal target state.
pub fn ghz_fidelity(mixture: &MixedOutcome, n: usize) -> Result<f64> {
    let target = ghz_target(n)?;
    if let Some(b) = mixture.branches.iter().find(|b| b.state.n != n) {
        return Err(Error::domain(format!(
            "mixture branch has {} qubits, expected {n}",
            b.state.n
        )));
    }
    Ok(mixture
        .branches
        .iter()
        .map(|b| b.weight * target.overlap_sqr(&b.state))
        .sum::<f64>()
        .clamp(0.0, 1.0))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FidelityRow {
    pub eta: f64,
    /// `p^(n−1)` with `p = 1/(3 − 2η)`.
    pub closed_form: f64,
    /// Exact branch enumeration of the lossy chain.
    pub enumeration: f64,
}

pub fn fidelity_vs_eta_sweep(n: usize, etas: &[f64]) -> Result<Vec<FidelityRow>> {
    etas.iter()
        .map(|&eta| {
            if !(eta > 0.0 && eta <= 1.0) {
                return Err(Error::domain(format!("sweep efficiencies must lie in (0, 1], got {eta}")));
            }
            let (mix, _) = lossy_ghz_chain(n, &LossModel::new(eta)?)?;
            Ok(FidelityRow {
                eta,
                closed_form: closed_form_chain_fidelity(n, eta),
                enumeration: ghz_fidelity(&mix, n)?,
            })
        })
        .collect()
}
