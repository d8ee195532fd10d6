//! Truncated three-mode Fock space: the Stokes photon mode `a` and the two
//! collective spin-wave modes `S_I`, `S_II`.
//!
//! Amplitudes are stored row-major over `(n_S, n_I, n_II)` with `n_S` varying
//! slowest, so index `((n_S * d) + n_I) * d + n_II` where `d = cutoff + 1`.
//! Operators truncate hard: a raising operator applied at `n = cutoff`
//! annihilates that component instead of renormalizing, and the lost weight
//! shows up as a norm deficit.

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Largest cutoff accepted anywhere in the kernel. Keeps `(cutoff + 1)^3`
/// dense operators within a few hundred megabytes.
pub const MAX_CUTOFF: usize = 16;

/// Default per-mode cutoff for write-stage simulations.
pub const DEFAULT_CUTOFF: usize = 2;

const NORM_TOLERANCE: f64 = 1e-12;

/// The three bosonic modes of the write stage.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ModeId {
    /// Forward-scattered Stokes photon `a`.
    Stokes,
    /// Collective spin wave of species I.
    SpinI,
    /// Collective spin wave of species II.
    SpinII,
}

impl ModeId {
    pub const ALL: [ModeId; 3] = [ModeId::Stokes, ModeId::SpinI, ModeId::SpinII];

    /// Position of the mode in the occupation triple.
    pub fn position(self) -> usize {
        match self {
            ModeId::Stokes => 0,
            ModeId::SpinI => 1,
            ModeId::SpinII => 2,
        }
    }
}

/// Occupation numbers `(n_S, n_I, n_II)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub struct Occupation(pub [usize; 3]);

impl Occupation {
    pub fn new(stokes: usize, spin_i: usize, spin_ii: usize) -> Self {
        Occupation([stokes, spin_i, spin_ii])
    }

    pub fn of(&self, mode: ModeId) -> usize {
        self.0[mode.position()]
    }

    pub fn stokes(&self) -> usize {
        self.0[0]
    }

    /// Total number of spin excitations `n_I + n_II`.
    pub fn spin_excitations(&self) -> usize {
        self.0[1] + self.0[2]
    }
}

fn check_cutoff(cutoff: usize) -> Result<()> {
    if cutoff < 1 {
        return Err(Error::InvalidArgument("cutoff must be at least 1".into()));
    }
    if cutoff > MAX_CUTOFF {
        return Err(Error::InvalidArgument(format!(
            "cutoff {cutoff} exceeds the supported maximum {MAX_CUTOFF}"
        )));
    }
    Ok(())
}

/// Hilbert-space dimension `(cutoff + 1)^3`.
pub fn dimension(cutoff: usize) -> usize {
    let d = cutoff + 1;
    d * d * d
}

/// Pure state on the truncated three-mode space.
#[derive(Debug, Clone, PartialEq)]
pub struct TruncatedState {
    cutoff: usize,
    amplitudes: Vec<Complex64>,
}

impl TruncatedState {
    /// Collective ground state with both Stokes fields in vacuum.
    pub fn vacuum(cutoff: usize) -> Result<Self> {
        Self::basis(cutoff, Occupation::default())
    }

    /// Fock basis state `|n_S, n_I, n_II>`.
    pub fn basis(cutoff: usize, occ: Occupation) -> Result<Self> {
        check_cutoff(cutoff)?;
        if occ.0.iter().any(|&n| n > cutoff) {
            return Err(Error::InvalidArgument(format!(
                "occupation {:?} exceeds cutoff {cutoff}",
                occ.0
            )));
        }
        let mut amplitudes = vec![Complex64::new(0.0, 0.0); dimension(cutoff)];
        amplitudes[index_of(cutoff, occ)] = Complex64::new(1.0, 0.0);
        Ok(TruncatedState { cutoff, amplitudes })
    }

    /// The all-zero vector. Useful as an accumulator; not a physical state.
    pub fn zero(cutoff: usize) -> Result<Self> {
        check_cutoff(cutoff)?;
        Ok(TruncatedState {
            cutoff,
            amplitudes: vec![Complex64::new(0.0, 0.0); dimension(cutoff)],
        })
    }

    pub fn from_amplitudes(cutoff: usize, amplitudes: Vec<Complex64>) -> Result<Self> {
        check_cutoff(cutoff)?;
        if amplitudes.len() != dimension(cutoff) {
            return Err(Error::InvalidArgument(format!(
                "expected {} amplitudes for cutoff {cutoff}, got {}",
                dimension(cutoff),
                amplitudes.len()
            )));
        }
        if amplitudes.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::Numeric("non-finite amplitude".into()));
        }
        Ok(TruncatedState { cutoff, amplitudes })
    }

    pub fn cutoff(&self) -> usize {
        self.cutoff
    }

    pub fn dim(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amplitudes
    }

    pub fn into_amplitudes(self) -> Vec<Complex64> {
        self.amplitudes
    }

    pub fn index(&self, occ: Occupation) -> usize {
        index_of(self.cutoff, occ)
    }

    pub fn occupation(&self, index: usize) -> Occupation {
        occupation_of(self.cutoff, index)
    }

    /// Amplitude of `|occ>`, zero if any occupation exceeds the cutoff.
    pub fn amplitude(&self, occ: Occupation) -> Complex64 {
        if occ.0.iter().any(|&n| n > self.cutoff) {
            return Complex64::new(0.0, 0.0);
        }
        self.amplitudes[self.index(occ)]
    }

    /// Iterate over `(occupation, amplitude)` pairs in storage order.
    pub fn iter(&self) -> impl Iterator<Item = (Occupation, Complex64)> + '_ {
        let cutoff = self.cutoff;
        self.amplitudes
            .iter()
            .enumerate()
            .map(move |(i, &z)| (occupation_of(cutoff, i), z))
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amplitudes.iter().map(|z| z.norm_sqr()).sum()
    }

    pub fn norm(&self) -> f64 {
        self.norm_sqr().sqrt()
    }

    /// Returns `true` when `| ||psi|| - 1 | <= tol`.
    pub fn is_normalized(&self, tol: f64) -> bool {
        (self.norm() - 1.0).abs() <= tol
    }

    /// Rescale to unit norm. Fails on the zero vector.
    pub fn normalize(&mut self) -> Result<()> {
        let n = self.norm();
        if !(n > 0.0) || !n.is_finite() {
            return Err(Error::InvalidState("cannot normalize a zero or non-finite vector".into()));
        }
        let inv = 1.0 / n;
        for z in &mut self.amplitudes {
            *z *= inv;
        }
        debug_assert!((self.norm() - 1.0).abs() < NORM_TOLERANCE);
        Ok(())
    }

    pub fn normalized(mut self) -> Result<Self> {
        self.normalize()?;
        Ok(self)
    }

    /// `<self|other>`, conjugate-linear in `self`.
    pub fn inner(&self, other: &TruncatedState) -> Result<Complex64> {
        self.same_space(other)?;
        Ok(self
            .amplitudes
            .iter()
            .zip(&other.amplitudes)
            .map(|(a, b)| a.conj() * b)
            .sum())
    }

    /// Euclidean distance `||self - other||`.
    pub fn distance(&self, other: &TruncatedState) -> Result<f64> {
        self.same_space(other)?;
        Ok(self
            .amplitudes
            .iter()
            .zip(&other.amplitudes)
            .map(|(a, b)| (a - b).norm_sqr())
            .sum::<f64>()
            .sqrt())
    }

    /// `<psi| n_mode |psi>` (not divided by the norm).
    pub fn mean_occupation(&self, mode: ModeId) -> f64 {
        self.iter()
            .map(|(occ, z)| occ.of(mode) as f64 * z.norm_sqr())
            .sum()
    }

    /// Probability distribution of `n_mode` over `0..=cutoff`.
    pub fn marginal(&self, mode: ModeId) -> Vec<f64> {
        let mut p = vec![0.0; self.cutoff + 1];
        for (occ, z) in self.iter() {
            p[occ.of(mode)] += z.norm_sqr();
        }
        p
    }

    pub fn scaled(&self, factor: Complex64) -> TruncatedState {
        TruncatedState {
            cutoff: self.cutoff,
            amplitudes: self.amplitudes.iter().map(|z| z * factor).collect(),
        }
    }

    /// `self + factor * other`.
    pub fn add_scaled(&self, factor: Complex64, other: &TruncatedState) -> Result<TruncatedState> {
        self.same_space(other)?;
        Ok(TruncatedState {
            cutoff: self.cutoff,
            amplitudes: self
                .amplitudes
                .iter()
                .zip(&other.amplitudes)
                .map(|(a, b)| a + factor * b)
                .collect(),
        })
    }

    /// Relabel the two spin modes, `(n_S, n_I, n_II) -> (n_S, n_II, n_I)`.
    pub fn with_spins_swapped(&self) -> TruncatedState {
        let mut amplitudes = vec![Complex64::new(0.0, 0.0); self.dim()];
        for (occ, z) in self.iter() {
            let [s, i, j] = occ.0;
            amplitudes[index_of(self.cutoff, Occupation([s, j, i]))] = z;
        }
        TruncatedState { cutoff: self.cutoff, amplitudes }
    }

    fn same_space(&self, other: &TruncatedState) -> Result<()> {
        if self.cutoff != other.cutoff {
            return Err(Error::InvalidArgument(format!(
                "cutoff mismatch: {} vs {}",
                self.cutoff, other.cutoff
            )));
        }
        Ok(())
    }

    pub fn to_record(&self) -> StateRecord {
        StateRecord {
            cutoff: self.cutoff,
            amplitudes: self.amplitudes.iter().map(|z| [z.re, z.im]).collect(),
        }
    }

    pub fn from_record(record: StateRecord) -> Result<Self> {
        let amps = record
            .amplitudes
            .into_iter()
            .map(|[re, im]| Complex64::new(re, im))
            .collect();
        Self::from_amplitudes(record.cutoff, amps)
    }

    /// Serialize as `{"cutoff": int, "amplitudes": [[re, im], ...]}`.
    pub fn to_json(&self) -> String {
        serde_json::to_string(&self.to_record()).expect("state record is always serializable")
    }

    /// Parse the JSON form produced by [`TruncatedState::to_json`]. The result
    /// is not required to be normalized.
    pub fn from_json(text: &str) -> Result<Self> {
        let record: StateRecord = serde_json::from_str(text)
            .map_err(|e| Error::InvalidArgument(format!("malformed state JSON: {e}")))?;
        Self::from_record(record)
    }
}

/// Wire form of a [`TruncatedState`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StateRecord {
    pub cutoff: usize,
    pub amplitudes: Vec<[f64; 2]>,
}

fn index_of(cutoff: usize, occ: Occupation) -> usize {
    let d = cutoff + 1;
    let [s, i, j] = occ.0;
    (s * d + i) * d + j
}

fn occupation_of(cutoff: usize, index: usize) -> Occupation {
    let d = cutoff + 1;
    Occupation([index / (d * d), (index / d) % d, index % d])
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum OperatorKind {
    Lowering,
    Raising,
    Number,
}

/// Single-mode bosonic operator acting on a truncated three-mode state.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ModeOperator {
    pub kind: OperatorKind,
    pub mode: ModeId,
    pub cutoff: usize,
}

impl ModeOperator {
    pub fn new(kind: OperatorKind, mode: ModeId, cutoff: usize) -> Result<Self> {
        check_cutoff(cutoff)?;
        Ok(ModeOperator { kind, mode, cutoff })
    }

    pub fn lowering(mode: ModeId, cutoff: usize) -> Result<Self> {
        Self::new(OperatorKind::Lowering, mode, cutoff)
    }

    pub fn raising(mode: ModeId, cutoff: usize) -> Result<Self> {
        Self::new(OperatorKind::Raising, mode, cutoff)
    }

    pub fn number(mode: ModeId, cutoff: usize) -> Result<Self> {
        Self::new(OperatorKind::Number, mode, cutoff)
    }

    /// Matrix-free application.
    pub fn apply(&self, psi: &TruncatedState) -> Result<TruncatedState> {
        if psi.cutoff != self.cutoff {
            return Err(Error::InvalidArgument(format!(
                "operator cutoff {} does not match state cutoff {}",
                self.cutoff, psi.cutoff
            )));
        }
        let mut out = vec![Complex64::new(0.0, 0.0); psi.dim()];
        self.apply_into(&psi.amplitudes, &mut out, Complex64::new(1.0, 0.0));
        Ok(TruncatedState { cutoff: self.cutoff, amplitudes: out })
    }

    /// `out += factor * op * input` on raw amplitude slices of this cutoff.
    pub(crate) fn apply_into(&self, input: &[Complex64], out: &mut [Complex64], factor: Complex64) {
        let cutoff = self.cutoff;
        let pos = self.mode.position();
        for (idx, &z) in input.iter().enumerate() {
            if z == Complex64::new(0.0, 0.0) {
                continue;
            }
            let mut occ = occupation_of(cutoff, idx);
            let n = occ.0[pos];
            match self.kind {
                OperatorKind::Lowering => {
                    if n == 0 {
                        continue;
                    }
                    occ.0[pos] = n - 1;
                    out[index_of(cutoff, occ)] += factor * z * (n as f64).sqrt();
                }
                OperatorKind::Raising => {
                    if n >= cutoff {
                        continue;
                    }
                    occ.0[pos] = n + 1;
                    out[index_of(cutoff, occ)] += factor * z * ((n + 1) as f64).sqrt();
                }
                OperatorKind::Number => {
                    out[idx] += factor * z * n as f64;
                }
            }
        }
    }

    /// Dense matrix built as a Kronecker product of the single-mode matrix
    /// with identities, in the same index order as [`TruncatedState`].
    pub fn to_dense(&self) -> DMatrix<Complex64> {
        let d = self.cutoff + 1;
        let single = single_mode_matrix(self.kind, d);
        let eye = DMatrix::<Complex64>::identity(d, d);
        let factors: [&DMatrix<Complex64>; 3] = match self.mode {
            ModeId::Stokes => [&single, &eye, &eye],
            ModeId::SpinI => [&eye, &single, &eye],
            ModeId::SpinII => [&eye, &eye, &single],
        };
        factors[0].kronecker(factors[1]).kronecker(factors[2])
    }
}

fn single_mode_matrix(kind: OperatorKind, d: usize) -> DMatrix<Complex64> {
    let mut m = DMatrix::<Complex64>::zeros(d, d);
    for n in 0..d {
        match kind {
            OperatorKind::Lowering if n >= 1 => {
                m[(n - 1, n)] = Complex64::new((n as f64).sqrt(), 0.0);
            }
            OperatorKind::Raising if n + 1 < d => {
                m[(n + 1, n)] = Complex64::new(((n + 1) as f64).sqrt(), 0.0);
            }
            OperatorKind::Number => m[(n, n)] = Complex64::new(n as f64, 0.0),
            _ => {}
        }
    }
    m
}
