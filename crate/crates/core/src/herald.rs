//! Heralding with a non-photon-number-resolving threshold detector.
//!
//! The detector POVM is diagonal in the Stokes photon number:
//!
//! ```text
//! E_click(n)   = 1 − (1 − p_dark)(1 − η)^n
//! E_noclick(n) = (1 − p_dark)(1 − η)^n
//! ```
//!
//! with `p_dark = 1 − exp(−dark_rate · gate)`. Because the POVM is diagonal,
//! the post-click spin state is the mixture over Stokes number `n` of the
//! pure branches `|φ_n> ∝ <n|_S |ψ>`, each weighted by `P(n) E_click(n)`.
//! Branches are chosen by an externally supplied selector so the module
//! stays deterministic.
//!
//! Phase convention: the `n`-photon branch is multiplied by `i^n`, removing
//! the `(−i)^n` that leads the write-stage expansion. For the first-order
//! write state this makes the heralded spin state exactly
//! `(P_I |1,0> − P_II |0,1>) / √(|P_I|² + |P_II|²)`; the relative minus sign
//! is kept all the way through to the retrieved photon.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hilbert::{ModeId, Occupation, TruncatedState};

const STATE_TOLERANCE: f64 = 1e-9;

/// Threshold single-photon detector (SPAD-like).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DetectorModel {
    /// Detection efficiency `η ∈ [0, 1]`.
    pub efficiency: f64,
    /// Dark-count rate (counts/s).
    pub dark_rate: f64,
    /// Gate duration (s).
    pub gate: f64,
}

impl DetectorModel {
    pub fn new(efficiency: f64, dark_rate: f64, gate: f64) -> Result<Self> {
        let d = DetectorModel { efficiency, dark_rate, gate };
        d.validate()?;
        Ok(d)
    }

    /// Unit efficiency, no dark counts.
    pub fn ideal() -> Self {
        DetectorModel { efficiency: 1.0, dark_rate: 0.0, gate: 1e-6 }
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.efficiency) {
            return Err(Error::InvalidParameter(format!(
                "detector efficiency must lie in [0, 1], got {}",
                self.efficiency
            )));
        }
        if !(self.dark_rate >= 0.0) || !self.dark_rate.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "dark rate must be finite and >= 0, got {}",
                self.dark_rate
            )));
        }
        if !(self.gate > 0.0) || !self.gate.is_finite() {
            return Err(Error::InvalidParameter(format!("gate must be finite and > 0, got {}", self.gate)));
        }
        Ok(())
    }

    /// Threshold detectors cannot resolve photon number.
    pub fn resolving(&self) -> bool {
        false
    }

    /// Probability of at least one dark count in a gate.
    pub fn dark_probability(&self) -> f64 {
        -(-self.dark_rate * self.gate).exp_m1()
    }

    /// `E_click(n)`.
    pub fn click_given_photons(&self, n: usize) -> f64 {
        1.0 - self.no_click_given_photons(n)
    }

    /// `E_noclick(n)`.
    pub fn no_click_given_photons(&self, n: usize) -> f64 {
        (1.0 - self.dark_probability()) * (1.0 - self.efficiency).powi(n as i32)
    }
}

/// Why a click happened, as far as the spin state is concerned.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HeraldKind {
    /// Exactly one Stokes photon: the spin state carries one excitation.
    True,
    /// No Stokes photon: the click was a dark count.
    DarkCount,
    /// Two or more Stokes photons: the spin state is multiply excited.
    MultiPhoton,
}

impl HeraldKind {
    pub fn for_photons(n: usize) -> Self {
        match n {
            0 => HeraldKind::DarkCount,
            1 => HeraldKind::True,
            _ => HeraldKind::MultiPhoton,
        }
    }

    pub fn is_false(self) -> bool {
        self != HeraldKind::True
    }
}

/// One pure conditional branch of a detector outcome.
#[derive(Debug, Clone, PartialEq)]
pub struct HeraldBranch {
    /// Stokes photon number of the branch.
    pub photons: usize,
    /// Joint probability of this photon number and the detector outcome.
    pub weight: f64,
    /// Normalized spin state, Stokes mode left in vacuum.
    pub spin_state: TruncatedState,
}

impl HeraldBranch {
    pub fn kind(&self) -> HeraldKind {
        HeraldKind::for_photons(self.photons)
    }
}

/// Result of conditioning on the detector.
#[derive(Debug, Clone, PartialEq)]
pub struct HeraldOutcome {
    pub clicked: bool,
    /// Post-measurement spin state of the selected branch (Stokes in vacuum).
    pub conditional_state: TruncatedState,
    /// Stokes photon number of the selected branch.
    pub photons: usize,
    /// Unconditional click probability.
    pub click_probability: f64,
    /// Probability that a click is not a true single-photon herald.
    pub false_herald_probability: f64,
}

impl HeraldOutcome {
    pub fn kind(&self) -> HeraldKind {
        HeraldKind::for_photons(self.photons)
    }

    pub fn is_false_herald(&self) -> bool {
        self.clicked && self.kind().is_false()
    }
}

fn check_state(psi: &TruncatedState) -> Result<()> {
    if !psi.is_normalized(STATE_TOLERANCE) {
        return Err(Error::InvalidState(format!(
            "state must be normalized (norm = {})",
            psi.norm()
        )));
    }
    Ok(())
}

/// `1 − (1 − p_dark) Σ_n P(n_S = n)(1 − η)^n`.
pub fn herald_probability(psi: &TruncatedState, d: &DetectorModel) -> Result<f64> {
    check_state(psi)?;
    d.validate()?;
    let p = psi.marginal(ModeId::Stokes);
    let no_click: f64 = p
        .iter()
        .enumerate()
        .map(|(n, pn)| pn * d.no_click_given_photons(n))
        .sum();
    Ok((1.0 - no_click).clamp(0.0, 1.0))
}

/// Split `ψ` by Stokes photon number into weighted conditional branches for
/// a click (`clicked = true`) or no-click outcome. Zero-weight branches are
/// omitted.
pub fn outcome_branches(psi: &TruncatedState, d: &DetectorModel, clicked: bool) -> Result<Vec<HeraldBranch>> {
    check_state(psi)?;
    d.validate()?;
    let cutoff = psi.cutoff();
    let mut branches = Vec::new();
    for n in 0..=cutoff {
        let phase = Complex64::i().powu(n as u32);
        let mut amps = vec![Complex64::new(0.0, 0.0); psi.dim()];
        let mut pn = 0.0;
        for (occ, z) in psi.iter().filter(|(occ, _)| occ.stokes() == n) {
            pn += z.norm_sqr();
            amps[psi.index(Occupation::new(0, occ.0[1], occ.0[2]))] = z * phase;
        }
        let povm = if clicked {
            d.click_given_photons(n)
        } else {
            d.no_click_given_photons(n)
        };
        let weight = pn * povm;
        if weight <= 0.0 {
            continue;
        }
        let spin_state = TruncatedState::from_amplitudes(cutoff, amps)?.normalized()?;
        branches.push(HeraldBranch { photons: n, weight, spin_state });
    }
    Ok(branches)
}

fn false_fraction_of(branches: &[HeraldBranch]) -> f64 {
    let total: f64 = branches.iter().map(|b| b.weight).sum();
    if total <= 0.0 {
        return 0.0;
    }
    let wrong: f64 = branches
        .iter()
        .filter(|b| b.kind().is_false())
        .map(|b| b.weight)
        .sum();
    wrong / total
}

/// Fraction of clicks that come from dark counts on the unexcited branch or
/// from multi-photon branches.
pub fn false_herald_fraction(psi: &TruncatedState, d: &DetectorModel) -> Result<f64> {
    Ok(false_fraction_of(&outcome_branches(psi, d, true)?))
}

fn select(branches: &[HeraldBranch], selector: f64) -> Result<&HeraldBranch> {
    if !(0.0..1.0).contains(&selector) {
        return Err(Error::InvalidArgument(format!("selector must lie in [0, 1), got {selector}")));
    }
    let total: f64 = branches.iter().map(|b| b.weight).sum();
    let target = selector * total;
    let mut acc = 0.0;
    for b in branches {
        acc += b.weight;
        if target < acc {
            return Ok(b);
        }
    }
    branches
        .last()
        .ok_or_else(|| Error::ImpossibleOutcome("no branch has nonzero weight".into()))
}

/// Condition on a click. `selector ∈ [0, 1)` picks the pure branch with
/// probability proportional to its weight.
pub fn project_on_click(psi: &TruncatedState, d: &DetectorModel, selector: f64) -> Result<HeraldOutcome> {
    let branches = outcome_branches(psi, d, true)?;
    let click_probability: f64 = branches.iter().map(|b| b.weight).sum();
    if branches.is_empty() || click_probability <= 0.0 {
        return Err(Error::ImpossibleOutcome("click requested but click probability is zero".into()));
    }
    let b = select(&branches, selector)?;
    Ok(HeraldOutcome {
        clicked: true,
        conditional_state: b.spin_state.clone(),
        photons: b.photons,
        click_probability: click_probability.min(1.0),
        false_herald_probability: false_fraction_of(&branches),
    })
}

/// Sample the full detector outcome: click iff `u_click < P(click)`, then
/// pick a branch of that outcome with `u_branch`.
pub fn measure(psi: &TruncatedState, d: &DetectorModel, u_click: f64, u_branch: f64) -> Result<HeraldOutcome> {
    let p_click = herald_probability(psi, d)?;
    if u_click < p_click {
        return project_on_click(psi, d, u_branch);
    }
    let branches = outcome_branches(psi, d, false)?;
    let b = select(&branches, u_branch)?;
    let clicks = outcome_branches(psi, d, true)?;
    Ok(HeraldOutcome {
        clicked: false,
        conditional_state: b.spin_state.clone(),
        photons: b.photons,
        click_probability: p_click,
        false_herald_probability: false_fraction_of(&clicks),
    })
}

/// Concurrence of the single-excitation part `α|1,0> + β|0,1>` of a spin
/// state, `2|αβ| / (|α|² + |β|²)`.
pub fn single_excitation_concurrence(spin: &TruncatedState) -> f64 {
    let a = spin.amplitude(Occupation::new(0, 1, 0));
    let b = spin.amplitude(Occupation::new(0, 0, 1));
    let w = a.norm_sqr() + b.norm_sqr();
    if w == 0.0 {
        return 0.0;
    }
    2.0 * (a * b).norm() / w
}
