//! Read-out: the heralded spin wave is converted by two read fields into a
//! single photon shared between the two species' emission frequencies,
//! `c1 |1>_{ω_I}|0>_{ω_II} + c2 |0>_{ω_I}|1>_{ω_II}`.
//!
//! Each species' excitation leaves the medium as a dark-state polariton
//! `Ψ = cos θ E − sin θ S` with `tan²θ = g′² N / |Ω_R|²`, advected at the
//! group velocity `v_g = c cos²θ`.

use num_complex::Complex64;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::herald::{HeraldKind, HeraldOutcome};
use crate::hilbert::{ModeId, Occupation};
use crate::write_dynamics::SpeciesPair;
use crate::{rad_to_hz, SPEED_OF_LIGHT};

const QUBIT_NORM_TOLERANCE: f64 = 1e-12;

/// Read-stage parameters per species (rad/s).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReadParams {
    /// Read-transition coupling `g′_j`.
    pub coupling: SpeciesPair<f64>,
    pub atoms: SpeciesPair<f64>,
    /// Read Rabi frequency magnitude `|Ω_Rj|`.
    pub omega_read: SpeciesPair<f64>,
    /// Probability that a stored excitation of species `j` leaves as a photon.
    pub efficiency: SpeciesPair<f64>,
    /// Extra phase applied to the species-II amplitude by the read field.
    pub relative_phase: f64,
    /// Emitted photon angular frequencies `ω_I`, `ω_II`.
    pub omega_out: SpeciesPair<f64>,
}

impl ReadParams {
    /// Lossless read-out with no extra phase.
    pub fn ideal(omega_out: SpeciesPair<f64>) -> Self {
        ReadParams {
            coupling: SpeciesPair::splat(1.0),
            atoms: SpeciesPair::splat(1.0),
            omega_read: SpeciesPair::splat(1.0),
            efficiency: SpeciesPair::splat(1.0),
            relative_phase: 0.0,
            omega_out,
        }
    }

    pub fn validate(&self) -> Result<()> {
        for eta in self.efficiency.as_array() {
            if !(0.0..=1.0).contains(&eta) {
                return Err(Error::InvalidParameter(format!("retrieval efficiency must lie in [0, 1], got {eta}")));
            }
        }
        if !self.relative_phase.is_finite() {
            return Err(Error::InvalidParameter("read phase must be finite".into()));
        }
        let [wi, wii] = self.omega_out.as_array();
        if !wi.is_finite() || !wii.is_finite() {
            return Err(Error::InvalidParameter("output frequencies must be finite".into()));
        }
        if wi == wii {
            return Err(Error::InvalidParameter("output frequencies of the two species must differ".into()));
        }
        Ok(())
    }

    pub fn mixing_angles(&self) -> Result<SpeciesPair<f64>> {
        Ok(SpeciesPair::new(
            dsp_angle(self.coupling.i, self.atoms.i, self.omega_read.i)?,
            dsp_angle(self.coupling.ii, self.atoms.ii, self.omega_read.ii)?,
        ))
    }
}

/// Dual-rail single photon over the two emission frequencies.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FmeQubitState {
    pub c1: Complex64,
    pub c2: Complex64,
    pub omega_i: f64,
    pub omega_ii: f64,
    /// Probability that the stored excitation emerged as a photon at all.
    pub retrieval_efficiency: f64,
}

impl FmeQubitState {
    pub fn new(c1: Complex64, c2: Complex64, omega_i: f64, omega_ii: f64, retrieval_efficiency: f64) -> Result<Self> {
        let n = c1.norm_sqr() + c2.norm_sqr();
        if (n - 1.0).abs() > QUBIT_NORM_TOLERANCE {
            return Err(Error::InvalidState(format!("|c1|^2 + |c2|^2 = {n}, expected 1")));
        }
        if omega_i == omega_ii {
            return Err(Error::InvalidParameter("omega_I and omega_II must differ".into()));
        }
        if !(0.0..=1.0).contains(&retrieval_efficiency) {
            return Err(Error::InvalidParameter("retrieval efficiency outside [0, 1]".into()));
        }
        Ok(FmeQubitState { c1, c2, omega_i, omega_ii, retrieval_efficiency })
    }

    /// Normalize `(c1, c2)` first.
    pub fn from_unnormalized(c1: Complex64, c2: Complex64, omega_i: f64, omega_ii: f64, retrieval_efficiency: f64) -> Result<Self> {
        let n = (c1.norm_sqr() + c2.norm_sqr()).sqrt();
        if !(n > 0.0) || !n.is_finite() {
            return Err(Error::InvalidState("zero-amplitude photon state".into()));
        }
        Self::new(c1 / n, c2 / n, omega_i, omega_ii, retrieval_efficiency)
    }

    pub fn concurrence(&self) -> f64 {
        concurrence(self)
    }

    pub fn fidelity_to_bell(&self) -> f64 {
        fidelity_to_bell(self)
    }

    /// Multiply `c2` by `e^{iφ}`.
    pub fn with_relative_phase(&self, phi: f64) -> Self {
        FmeQubitState { c2: self.c2 * Complex64::from_polar(1.0, phi), ..*self }
    }

    pub fn to_record(&self) -> QubitRecord {
        QubitRecord {
            c1: [self.c1.re, self.c1.im],
            c2: [self.c2.re, self.c2.im],
            omega_i_hz: rad_to_hz(self.omega_i),
            omega_ii_hz: rad_to_hz(self.omega_ii),
            concurrence: self.concurrence(),
            fidelity_bell: self.fidelity_to_bell(),
            retrieval_efficiency: self.retrieval_efficiency,
        }
    }
}

/// Wire form of an [`FmeQubitState`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QubitRecord {
    pub c1: [f64; 2],
    pub c2: [f64; 2],
    #[serde(rename = "omega_I_hz")]
    pub omega_i_hz: f64,
    #[serde(rename = "omega_II_hz")]
    pub omega_ii_hz: f64,
    pub concurrence: f64,
    pub fidelity_bell: f64,
    pub retrieval_efficiency: f64,
}

/// `2 |c1 c2|`.
pub fn concurrence(q: &FmeQubitState) -> f64 {
    (2.0 * (q.c1 * q.c2).norm()).min(1.0)
}

/// `|<Bell+|q>|² = |c1 + c2|² / 2` with `Bell+ = (|10> + |01>)/√2`.
pub fn fidelity_to_bell(q: &FmeQubitState) -> f64 {
    (q.c1 + q.c2).norm_sqr() / 2.0
}

/// What the read pulses produce from a heralded ensemble.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Retrieved {
    /// A single photon in the two-frequency superposition.
    Photon(FmeQubitState),
    /// Nothing to retrieve: the herald was a dark count, or every excitation
    /// was lost.
    NoPhoton,
    /// The ensemble held more than one excitation; `mean_photons` is the
    /// expected number of emitted photons.
    MultiPhoton { excitations: usize, mean_photons: f64 },
}

impl Retrieved {
    /// Expected number of photons leaving the medium.
    pub fn mean_photons(&self) -> f64 {
        match self {
            Retrieved::Photon(q) => q.retrieval_efficiency,
            Retrieved::NoPhoton => 0.0,
            Retrieved::MultiPhoton { mean_photons, .. } => *mean_photons,
        }
    }

    pub fn photon(&self) -> Option<&FmeQubitState> {
        match self {
            Retrieved::Photon(q) => Some(q),
            _ => None,
        }
    }
}

/// Map a heralded spin state onto the output photon.
///
/// For a true herald `c1 ∝ √η_I α`, `c2 ∝ √η_II β e^{iφ}` where `α`, `β` are
/// the heralded amplitudes on `|1,0>`, `|0,1>`, so the minus sign of the
/// heralded state carries straight into `c2`.
pub fn retrieve_fme(heralded: &HeraldOutcome, read: &ReadParams) -> Result<Retrieved> {
    if !heralded.clicked {
        return Err(Error::InvalidState("retrieval requires a heralded (clicked) ensemble".into()));
    }
    read.validate()?;
    let spin = &heralded.conditional_state;
    match heralded.kind() {
        HeraldKind::DarkCount => Ok(Retrieved::NoPhoton),
        HeraldKind::True => {
            let alpha = spin.amplitude(Occupation::new(0, 1, 0));
            let beta = spin.amplitude(Occupation::new(0, 0, 1));
            let weight = alpha.norm_sqr() + beta.norm_sqr();
            let emitted = (alpha.norm_sqr() * read.efficiency.i + beta.norm_sqr() * read.efficiency.ii) / weight;
            if !(emitted > 0.0) {
                return Ok(Retrieved::NoPhoton);
            }
            let c1 = alpha * read.efficiency.i.sqrt();
            let c2 = beta * read.efficiency.ii.sqrt() * Complex64::from_polar(1.0, read.relative_phase);
            let q = FmeQubitState::from_unnormalized(
                c1,
                c2,
                read.omega_out.i,
                read.omega_out.ii,
                emitted.min(1.0),
            )?;
            Ok(Retrieved::Photon(q))
        }
        HeraldKind::MultiPhoton => {
            let mean_photons = spin.mean_occupation(ModeId::SpinI) * read.efficiency.i
                + spin.mean_occupation(ModeId::SpinII) * read.efficiency.ii;
            Ok(Retrieved::MultiPhoton { excitations: heralded.photons, mean_photons })
        }
    }
}

/// Mixing angle `θ = arctan(g′ √N / |Ω_R|)`.
pub fn dsp_angle(g_read: f64, atoms: f64, omega_read: f64) -> Result<f64> {
    if omega_read == 0.0 {
        return Err(Error::SingularParameter(
            "read Rabi frequency is zero: the polariton is purely atomic and cannot be retrieved".into(),
        ));
    }
    if !(atoms >= 1.0) || !g_read.is_finite() || !omega_read.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "invalid polariton parameters g'={g_read}, N={atoms}, Omega_R={omega_read}"
        )));
    }
    Ok((g_read.abs() * atoms.sqrt()).atan2(omega_read.abs()))
}

/// `v_g = c cos²θ`.
pub fn group_velocity(theta: f64) -> f64 {
    SPEED_OF_LIGHT * theta.cos().powi(2)
}

/// Polariton amplitude on the uniform grid `z_k = k L / n`, `k = 0..n`.
#[derive(Debug, Clone, PartialEq)]
pub struct DspField {
    pub length: f64,
    pub values: Vec<Complex64>,
    pub theta: f64,
    pub v_g: f64,
    /// `∫|Ψ|² dz` that has crossed `z = L` so far.
    pub outflow: f64,
    pub time: f64,
}

impl DspField {
    /// Sample `profile(z)` on `samples` grid points over `[0, length)` with
    /// `v_g = c cos²θ`.
    pub fn from_profile(length: f64, samples: usize, theta: f64, profile: impl Fn(f64) -> Complex64) -> Result<Self> {
        if !(length > 0.0) || samples == 0 {
            return Err(Error::InvalidParameter("polariton grid needs a positive length and samples".into()));
        }
        let dz = length / samples as f64;
        Self::with_velocity(
            length,
            (0..samples).map(|k| profile(k as f64 * dz)).collect(),
            theta,
            group_velocity(theta),
        )
    }

    pub fn with_velocity(length: f64, values: Vec<Complex64>, theta: f64, v_g: f64) -> Result<Self> {
        if !(length > 0.0) || values.is_empty() {
            return Err(Error::InvalidParameter("polariton grid needs a positive length and samples".into()));
        }
        Ok(DspField { length, values, theta, v_g, outflow: 0.0, time: 0.0 })
    }

    pub fn spacing(&self) -> f64 {
        self.length / self.values.len() as f64
    }

    pub fn grid(&self) -> impl Iterator<Item = f64> + '_ {
        let dz = self.spacing();
        (0..self.values.len()).map(move |k| k as f64 * dz)
    }

    /// `∫|Ψ|² dz` still inside the medium.
    pub fn energy(&self) -> f64 {
        self.values.iter().map(|z| z.norm_sqr()).sum::<f64>() * self.spacing()
    }

    /// Inside plus already emitted; constant under propagation.
    pub fn total(&self) -> f64 {
        self.energy() + self.outflow
    }

    /// Photonic and atomic weights `(cos²θ, sin²θ)`.
    pub fn composition(&self) -> (f64, f64) {
        (self.theta.cos().powi(2), self.theta.sin().powi(2))
    }
}

/// Exact advection `Ψ(z, t) = Ψ(z − v_g t, 0)` with outflow at `z = L`.
///
/// Whole-sample shifts move data directly; the fractional remainder is
/// applied as a band-limited (Fourier phase-ramp) shift on a grid padded to
/// twice the medium length, so everything pushed past `z = L` is counted as
/// outflow and the total is conserved to rounding.
pub fn propagate_dsp(field: &DspField, t: f64) -> Result<DspField> {
    if !(field.v_g > 0.0) || !field.v_g.is_finite() {
        return Err(Error::InvalidParameter(format!("group velocity must be > 0, got {}", field.v_g)));
    }
    if !(t >= 0.0) || !t.is_finite() {
        return Err(Error::InvalidArgument(format!("propagation time must be finite and >= 0, got {t}")));
    }
    let n = field.values.len();
    let dz = field.spacing();
    let shift = field.v_g * t / dz;
    let mut out = field.clone();
    out.time += t;
    if shift == 0.0 {
        return Ok(out);
    }

    let rounded = shift.round();
    let aligned = (shift - rounded).abs() <= 1e-9 * shift.abs().max(1.0);
    let (whole, frac) = if aligned {
        (rounded, 0.0)
    } else {
        (shift.floor(), shift - shift.floor())
    };

    let whole = if whole >= n as f64 { n } else { whole as usize };
    if whole > 0 {
        let leaving: f64 = out.values[n - whole..].iter().map(|z| z.norm_sqr()).sum();
        out.outflow += leaving * dz;
        out.values.rotate_right(whole);
        for v in &mut out.values[..whole] {
            *v = Complex64::new(0.0, 0.0);
        }
    }
    if frac > 0.0 {
        fractional_shift(&mut out, frac);
    }
    Ok(out)
}

fn fractional_shift(field: &mut DspField, frac: f64) {
    let n = field.values.len();
    let m = 2 * n;
    let dz = field.spacing();
    let mut buf: Vec<Complex64> = field.values.clone();
    buf.resize(m, Complex64::new(0.0, 0.0));

    let mut planner = FftPlanner::<f64>::new();
    planner.plan_fft_forward(m).process(&mut buf);
    for (k, z) in buf.iter_mut().enumerate() {
        let freq = if k <= m / 2 { k as f64 } else { k as f64 - m as f64 };
        *z *= Complex64::from_polar(1.0, -2.0 * std::f64::consts::PI * freq * frac / m as f64);
    }
    planner.plan_fft_inverse(m).process(&mut buf);
    let scale = 1.0 / m as f64;
    for z in &mut buf {
        *z *= scale;
    }

    let leaving: f64 = buf[n..].iter().map(|z| z.norm_sqr()).sum();
    field.outflow += leaving * dz;
    field.values.copy_from_slice(&buf[..n]);
}
