//! Write stage: an off-resonant write pulse on each species scatters Stokes
//! photons into a common mode `a` while creating collective spin waves.
//!
//! After adiabatic elimination of the excited states the dynamics are
//! captured by three routes which are cross-checked against each other:
//!
//! * exact evolution under the effective Hamiltonian
//!   `H/ħ = (χ_I S_I† − χ_II S_II†) a† + h.c.` on the truncated Fock space,
//! * the first-order state `|000> − i P_I |110> + i P_II |101>`,
//! * linear Heisenberg-Langevin moment equations for `(a, S_I†, S_II†)`.
//!
//! The Langevin drift is taken verbatim from the reduced equations of
//! motion, including `+iδ_L` on `S_I†` and `−iδ_L` on `S_II†` and the `−iχ_II`
//! coupling in the cavity row. That coupling sign is opposite to the one
//! generated by the effective Hamiltonian; the two pictures agree after the
//! gauge change `S_II → −S_II`, which leaves every occupation number
//! unchanged.
//!
//! All rates here are angular frequencies (rad/s).

use log::warn;
use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hilbert::{dimension, ModeId, ModeOperator, Occupation, TruncatedState};
use crate::linalg::{expm, propagator_with_gramian, CMatrix};

/// Ratio `|Ω_W| / |Δ|` above which adiabatic elimination is flagged.
pub const ADIABATIC_WARN_RATIO: f64 = 0.3;
/// Excitation amplitude `|P_j|` above which the first-order picture is flagged.
pub const PERTURBATIVE_WARN_AMPLITUDE: f64 = 0.3;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const I: Complex64 = Complex64::new(0.0, 1.0);

/// A value held once per atomic species (I and II).
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct SpeciesPair<T> {
    pub i: T,
    pub ii: T,
}

impl<T: Copy> SpeciesPair<T> {
    pub fn new(i: T, ii: T) -> Self {
        SpeciesPair { i, ii }
    }

    pub fn splat(v: T) -> Self {
        SpeciesPair { i: v, ii: v }
    }

    pub fn swapped(self) -> Self {
        SpeciesPair { i: self.ii, ii: self.i }
    }

    pub fn map<U>(self, f: impl Fn(T) -> U) -> SpeciesPair<U> {
        SpeciesPair { i: f(self.i), ii: f(self.ii) }
    }

    pub fn zip<U: Copy, V>(self, other: SpeciesPair<U>, f: impl Fn(T, U) -> V) -> SpeciesPair<V> {
        SpeciesPair { i: f(self.i, other.i), ii: f(self.ii, other.ii) }
    }

    pub fn as_array(self) -> [T; 2] {
        [self.i, self.ii]
    }
}

/// Physical parameters of the write stage, in rad/s and seconds.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SystemParams {
    /// Atom-field coupling `g_j`.
    pub coupling: SpeciesPair<f64>,
    /// Atom numbers `N_j`.
    pub atoms: SpeciesPair<f64>,
    /// Write Rabi frequencies `Ω_Wj`; the phase is carried into `χ_j`.
    pub omega_write: SpeciesPair<Complex64>,
    /// One-photon detuning `Δ`.
    pub delta: f64,
    /// Decay rate of the Stokes mode.
    pub kappa: f64,
    /// Excited-state coherence decay `γ_1`, `γ_2`.
    pub gamma_excited: SpeciesPair<f64>,
    /// Ground-state coherence decay `γ_gs`, `γ_g's'`.
    pub gamma_ground: SpeciesPair<f64>,
    /// Write pulse duration.
    pub tau_write: f64,
}

impl SystemParams {
    /// Check hard invariants and log the soft (adiabatic-validity) ones.
    pub fn validate(&self) -> Result<()> {
        let finite = [
            self.coupling.i,
            self.coupling.ii,
            self.atoms.i,
            self.atoms.ii,
            self.omega_write.i.re,
            self.omega_write.i.im,
            self.omega_write.ii.re,
            self.omega_write.ii.im,
            self.delta,
            self.kappa,
            self.gamma_excited.i,
            self.gamma_excited.ii,
            self.gamma_ground.i,
            self.gamma_ground.ii,
            self.tau_write,
        ];
        if finite.iter().any(|x| !x.is_finite()) {
            return Err(Error::Numeric("non-finite system parameter".into()));
        }
        if self.delta == 0.0 {
            return Err(Error::SingularParameter("detuning delta must be nonzero".into()));
        }
        let rates = [
            ("kappa", self.kappa),
            ("gamma_1", self.gamma_excited.i),
            ("gamma_2", self.gamma_excited.ii),
            ("gamma_gs", self.gamma_ground.i),
            ("gamma_gs_II", self.gamma_ground.ii),
        ];
        for (name, v) in rates {
            if v < 0.0 {
                return Err(Error::InvalidParameter(format!("{name} must be >= 0, got {v}")));
            }
        }
        for (name, n) in [("N_I", self.atoms.i), ("N_II", self.atoms.ii)] {
            if n < 1.0 {
                return Err(Error::InvalidParameter(format!("{name} must be >= 1, got {n}")));
            }
        }
        if self.tau_write < 0.0 {
            return Err(Error::InvalidParameter("tau_write must be >= 0".into()));
        }
        let ratio = self.adiabatic_ratio();
        if ratio > ADIABATIC_WARN_RATIO {
            warn!("|Omega_W|/|Delta| = {ratio:.3} exceeds {ADIABATIC_WARN_RATIO}; adiabatic elimination is questionable");
        }
        Ok(())
    }

    /// `max_j |Ω_Wj| / |Δ|`.
    pub fn adiabatic_ratio(&self) -> f64 {
        self.omega_write.i.norm().max(self.omega_write.ii.norm()) / self.delta.abs()
    }

    /// Exchange the roles of species I and II.
    ///
    /// The effective Hamiltonian is antisymmetric in the two species (`−χ_II`),
    /// so exchanging them maps `χ → −χ` overall; this is a global phase on the
    /// one-excitation sector and leaves all populations unchanged.
    pub fn swapped(&self) -> SystemParams {
        SystemParams {
            coupling: self.coupling.swapped(),
            atoms: self.atoms.swapped(),
            omega_write: self.omega_write.swapped(),
            gamma_excited: self.gamma_excited.swapped(),
            gamma_ground: self.gamma_ground.swapped(),
            ..*self
        }
    }
}

/// Rates obtained after adiabatic elimination of the excited states.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DerivedRates {
    /// `χ_j = g_j √N_j Ω_Wj / Δ`.
    pub chi: SpeciesPair<Complex64>,
    /// Optical pumping `γ_Lj = γ_j |Ω_Wj|² / Δ²`.
    pub pumping: SpeciesPair<f64>,
    /// ac Stark shift `δ_Lj = |Ω_Wj|² / Δ`.
    pub stark: SpeciesPair<f64>,
    /// `P_j = χ_j τ_write`.
    pub excitation: SpeciesPair<Complex64>,
    pub tau_write: f64,
}

impl DerivedRates {
    /// Rates with only the couplings set, e.g. for fixtures given directly in
    /// terms of `P_j`.
    pub fn from_couplings(chi: SpeciesPair<Complex64>, tau_write: f64) -> Self {
        DerivedRates {
            chi,
            pumping: SpeciesPair::splat(0.0),
            stark: SpeciesPair::splat(0.0),
            excitation: chi.map(|c| c * tau_write),
            tau_write,
        }
    }

    /// Rates for real excitation amplitudes `P_I`, `P_II` with unit pulse length.
    pub fn from_excitation(p_i: f64, p_ii: f64) -> Self {
        Self::from_couplings(
            SpeciesPair::new(Complex64::new(p_i, 0.0), Complex64::new(p_ii, 0.0)),
            1.0,
        )
    }

    pub fn max_excitation(&self) -> f64 {
        self.excitation.i.norm().max(self.excitation.ii.norm())
    }
}

/// Apply the post-elimination formulas.
pub fn derive_rates(p: &SystemParams) -> Result<DerivedRates> {
    p.validate()?;
    let chi = SpeciesPair::new(
        p.omega_write.i * (p.coupling.i * p.atoms.i.sqrt() / p.delta),
        p.omega_write.ii * (p.coupling.ii * p.atoms.ii.sqrt() / p.delta),
    );
    let intensity = p.omega_write.map(|w| w.norm_sqr());
    let pumping = p
        .gamma_excited
        .zip(intensity, |g, w2| g * w2 / (p.delta * p.delta));
    let stark = intensity.map(|w2| w2 / p.delta);
    let rates = DerivedRates {
        chi,
        pumping,
        stark,
        excitation: chi.map(|c| c * p.tau_write),
        tau_write: p.tau_write,
    };
    let pmax = rates.max_excitation();
    if pmax >= PERTURBATIVE_WARN_AMPLITUDE {
        warn!("|P_j| = {pmax:.3} is not small; the single-excitation picture is degraded");
    }
    Ok(rates)
}

/// `H_eff/ħ = (χ_I S_I† − χ_II S_II†) a† + h.c.` on a truncated space.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EffectiveHamiltonian {
    pub chi: SpeciesPair<Complex64>,
    pub cutoff: usize,
}

pub fn build_effective_hamiltonian(r: &DerivedRates, cutoff: usize) -> Result<EffectiveHamiltonian> {
    // validates the cutoff
    TruncatedState::zero(cutoff)?;
    Ok(EffectiveHamiltonian { chi: r.chi, cutoff })
}

impl EffectiveHamiltonian {
    /// Matrix-free `H ψ`.
    pub fn apply(&self, psi: &TruncatedState) -> Result<TruncatedState> {
        let c = self.cutoff;
        let a_up = ModeOperator::raising(ModeId::Stokes, c)?;
        let a_dn = ModeOperator::lowering(ModeId::Stokes, c)?;
        let si_up = ModeOperator::raising(ModeId::SpinI, c)?;
        let si_dn = ModeOperator::lowering(ModeId::SpinI, c)?;
        let sii_up = ModeOperator::raising(ModeId::SpinII, c)?;
        let sii_dn = ModeOperator::lowering(ModeId::SpinII, c)?;

        let raised = a_up.apply(psi)?;
        let lowered = a_dn.apply(psi)?;
        let mut out = si_up.apply(&raised)?.scaled(self.chi.i);
        out = out.add_scaled(-self.chi.ii, &sii_up.apply(&raised)?)?;
        out = out.add_scaled(self.chi.i.conj(), &si_dn.apply(&lowered)?)?;
        out = out.add_scaled(-self.chi.ii.conj(), &sii_dn.apply(&lowered)?)?;
        Ok(out)
    }

    /// Dense matrix assembled from Kronecker-product mode operators.
    pub fn to_dense(&self) -> Result<CMatrix> {
        let c = self.cutoff;
        let a_up = ModeOperator::raising(ModeId::Stokes, c)?.to_dense();
        let si_up = ModeOperator::raising(ModeId::SpinI, c)?.to_dense();
        let sii_up = ModeOperator::raising(ModeId::SpinII, c)?.to_dense();
        let k = (&si_up * self.chi.i - &sii_up * self.chi.ii) * a_up;
        Ok(&k + k.adjoint())
    }

    /// `exp(−i H t)` as a dense unitary.
    pub fn propagator(&self, t: f64) -> Result<CMatrix> {
        if !(t >= 0.0) || !t.is_finite() {
            return Err(Error::InvalidArgument(format!("evolution time must be finite and >= 0, got {t}")));
        }
        if [self.chi.i, self.chi.ii].iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::Numeric("non-finite coupling".into()));
        }
        expm(&(self.to_dense()? * Complex64::new(0.0, -t)))
    }
}

/// `ψ(t) = exp(−i H t) ψ0` via the dense matrix exponential.
pub fn evolve_exact(h: &EffectiveHamiltonian, t: f64, psi0: &TruncatedState) -> Result<TruncatedState> {
    if psi0.cutoff() != h.cutoff {
        return Err(Error::InvalidArgument("Hamiltonian and state cutoffs differ".into()));
    }
    let u = h.propagator(t)?;
    let v = DVector::from_column_slice(psi0.amplitudes());
    let out = u * v;
    TruncatedState::from_amplitudes(h.cutoff, out.iter().copied().collect())
}

/// Normalized first-order write output `|000> − i P_I |110> + i P_II |101>`.
pub fn perturbative_state(r: &DerivedRates, cutoff: usize) -> Result<TruncatedState> {
    let mut amps = vec![ZERO; dimension(cutoff.max(1))];
    let mut psi = TruncatedState::zero(cutoff)?;
    amps[psi.index(Occupation::new(0, 0, 0))] = Complex64::new(1.0, 0.0);
    amps[psi.index(Occupation::new(1, 1, 0))] = -I * r.excitation.i;
    amps[psi.index(Occupation::new(1, 0, 1))] = I * r.excitation.ii;
    psi = TruncatedState::from_amplitudes(cutoff, amps)?;
    psi.normalized()
}

/// Linear moment dynamics of `x = (a, S_I†, S_II†)`.
///
/// `covariance[(k, j)] = <x_j† x_k>`, i.e. ordered with the adjoint on the
/// left. For the photon this is the normally ordered `<a† a>`; for the spin
/// entries it reads `<S_I S_I†> = n_I + 1`, which is what the linear equations
/// propagate directly. [`LangevinSystem::spin_number`] undoes the offset.
#[derive(Debug, Clone, PartialEq)]
pub struct LangevinSystem {
    pub drift: CMatrix,
    /// Noise correlations `<F_j† F_k>` driving `covariance`.
    pub diffusion: CMatrix,
    /// Noise correlations `<F_k F_j†>` for the opposite ordering, used to
    /// verify that the commutators `[x_k, x_j†]` stay canonical.
    pub diffusion_reversed: CMatrix,
    pub means: DVector<Complex64>,
    pub covariance: CMatrix,
    pub time: f64,
}

/// `[x_k, x_j†]` for `x = (a, S_I†, S_II†)`: `diag(1, −1, −1)`.
pub fn canonical_commutators() -> CMatrix {
    CMatrix::from_diagonal(&DVector::from_vec(vec![
        Complex64::new(1.0, 0.0),
        Complex64::new(-1.0, 0.0),
        Complex64::new(-1.0, 0.0),
    ]))
}

/// Drift, vacuum-bath diffusion and vacuum initial moments.
pub fn build_langevin(p: &SystemParams, r: &DerivedRates) -> LangevinSystem {
    let gi = p.gamma_ground.i + r.pumping.i;
    let gii = p.gamma_ground.ii + r.pumping.ii;
    #[rustfmt::skip]
    let drift = CMatrix::from_row_slice(3, 3, &[
        Complex64::new(-p.kappa, 0.0), -I * r.chi.i, -I * r.chi.ii,
        I * r.chi.i.conj(), -Complex64::new(gi, r.stark.i), ZERO,
        I * r.chi.ii.conj(), ZERO, -Complex64::new(gii, -r.stark.ii),
    ]);
    let re = |x: f64| Complex64::new(x, 0.0);
    let diffusion = CMatrix::from_diagonal(&DVector::from_vec(vec![re(0.0), re(2.0 * gi), re(2.0 * gii)]));
    let diffusion_reversed =
        CMatrix::from_diagonal(&DVector::from_vec(vec![re(2.0 * p.kappa), re(0.0), re(0.0)]));
    let covariance = CMatrix::from_diagonal(&DVector::from_vec(vec![re(0.0), re(1.0), re(1.0)]));
    LangevinSystem {
        drift,
        diffusion,
        diffusion_reversed,
        means: DVector::zeros(3),
        covariance,
        time: 0.0,
    }
}

impl LangevinSystem {
    /// Mean-field variant with the noise switched off.
    pub fn noiseless(mut self) -> Self {
        self.diffusion = DMatrix::zeros(3, 3);
        self.diffusion_reversed = DMatrix::zeros(3, 3);
        self
    }

    /// `<a† a>`.
    pub fn photon_number(&self) -> f64 {
        self.covariance[(0, 0)].re
    }

    /// `<S_j† S_j>`.
    pub fn spin_number(&self, mode: ModeId) -> f64 {
        match mode {
            ModeId::Stokes => self.photon_number(),
            ModeId::SpinI => self.covariance[(1, 1)].re - 1.0,
            ModeId::SpinII => self.covariance[(2, 2)].re - 1.0,
        }
    }

    /// `[x_k, x_j†]` reconstructed from the two orderings evolved from the
    /// canonical initial value over the same interval.
    pub fn commutators_after(&self, t: f64) -> Result<CMatrix> {
        let forward = lyapunov_step(&self.drift, &self.diffusion, &self.covariance, t)?;
        let reversed_start = &self.covariance + canonical_commutators();
        let reversed = lyapunov_step(&self.drift, &self.diffusion_reversed, &reversed_start, t)?;
        Ok(reversed - forward)
    }
}

fn lyapunov_step(drift: &CMatrix, diffusion: &CMatrix, cov: &CMatrix, t: f64) -> Result<CMatrix> {
    let (prop, gramian) = propagator_with_gramian(drift, diffusion, t)?;
    Ok(&prop * cov * prop.adjoint() + gramian)
}

/// Advance means by `exp(A t)` and second moments by
/// `Σ̇ = AΣ + ΣA† + D`.
pub fn evolve_langevin(sys: &LangevinSystem, t: f64) -> Result<LangevinSystem> {
    if !(t >= 0.0) || !t.is_finite() {
        return Err(Error::InvalidArgument(format!("evolution time must be finite and >= 0, got {t}")));
    }
    let (prop, gramian) = propagator_with_gramian(&sys.drift, &sys.diffusion, t)?;
    let means = &prop * &sys.means;
    let covariance = &prop * &sys.covariance * prop.adjoint() + gramian;
    if covariance.iter().chain(means.iter()).any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(Error::Numeric("Langevin moments diverged".into()));
    }
    Ok(LangevinSystem {
        means,
        covariance,
        time: sys.time + t,
        ..sys.clone()
    })
}

/// Pre-elimination model for checking the adiabatic reduction on a small
/// space: the Stokes mode, both spin waves, and one collective excited-state
/// mode per species, each truncated at two quanta.
pub mod full_model {
    use super::*;

    pub const MODE_CUTOFF: usize = 2;
    const D: usize = MODE_CUTOFF + 1;
    const MODES: usize = 5;
    pub const DIM: usize = D * D * D * D * D;

    // mode order: a, S_I, S_II, E_I, E_II
    fn index(occ: [usize; MODES]) -> usize {
        occ.iter().fold(0, |acc, &n| acc * D + n)
    }

    fn occupation(mut idx: usize) -> [usize; MODES] {
        let mut occ = [0; MODES];
        for slot in occ.iter_mut().rev() {
            *slot = idx % D;
            idx /= D;
        }
        occ
    }

    /// `H_I + H_II` with the spin and excited manifolds bosonized around the
    /// fully pumped ground state:
    /// `∓Δ E_j†E_j + Ω_j √N_j E_j† + g_j a† S_j† E_j + h.c.`
    /// (minus sign for species I, plus for species II).
    pub fn hamiltonian(p: &SystemParams) -> CMatrix {
        let mut h = CMatrix::zeros(DIM, DIM);
        let detuning_sign = [-1.0, 1.0];
        let drive = [
            p.omega_write.i * p.atoms.i.sqrt(),
            p.omega_write.ii * p.atoms.ii.sqrt(),
        ];
        let g = [p.coupling.i, p.coupling.ii];
        for col in 0..DIM {
            let occ = occupation(col);
            for s in 0..2 {
                let spin = 1 + s;
                let exc = 3 + s;
                let ne = occ[exc];
                h[(col, col)] += Complex64::new(detuning_sign[s] * p.delta * ne as f64, 0.0);
                // drive raises E
                if ne < MODE_CUTOFF {
                    let mut up = occ;
                    up[exc] += 1;
                    let amp = drive[s] * ((ne + 1) as f64).sqrt();
                    h[(index(up), col)] += amp;
                    h[(col, index(up))] += amp.conj();
                }
                // Raman emission: E -> S + a
                if ne >= 1 && occ[0] < MODE_CUTOFF && occ[spin] < MODE_CUTOFF {
                    let mut to = occ;
                    to[exc] -= 1;
                    to[0] += 1;
                    to[spin] += 1;
                    let amp = g[s]
                        * (ne as f64).sqrt()
                        * ((occ[0] + 1) as f64).sqrt()
                        * ((occ[spin] + 1) as f64).sqrt();
                    let amp = Complex64::new(amp, 0.0);
                    h[(index(to), col)] += amp;
                    h[(col, index(to))] += amp;
                }
            }
        }
        h
    }

    /// Evolve from the ground state for `t` and return the component with
    /// both excited-state modes empty, as a three-mode state at cutoff 2.
    pub fn evolve_ground_projected(p: &SystemParams, t: f64) -> Result<TruncatedState> {
        let u = expm(&(hamiltonian(p) * Complex64::new(0.0, -t)))?;
        let ground = u.column(0);
        let mut out = TruncatedState::zero(MODE_CUTOFF)?;
        let mut amps = vec![ZERO; out.dim()];
        for (idx, z) in ground.iter().enumerate() {
            let occ = occupation(idx);
            if occ[3] == 0 && occ[4] == 0 {
                amps[out.index(Occupation::new(occ[0], occ[1], occ[2]))] = *z;
            }
        }
        out = TruncatedState::from_amplitudes(MODE_CUTOFF, amps)?;
        Ok(out)
    }
}
