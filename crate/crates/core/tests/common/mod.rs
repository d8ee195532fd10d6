#![allow(dead_code)]

use fme_core::herald::DetectorModel;
use fme_core::protocol::{ProtocolConfig, TimingSequence, WriteEngine};
use fme_core::retrieval::ReadParams;
use fme_core::write_dynamics::{SpeciesPair, SystemParams};
use fme_core::Complex64;

pub const TAU: f64 = 1e-6;
pub const GATE: f64 = 1e-6;

/// Lossless write stage with `g √N / Δ = 1`, so `Ω_W τ` is `P` directly.
pub fn params(p_i: f64, p_ii: f64) -> SystemParams {
    SystemParams {
        coupling: SpeciesPair::splat(1e6),
        atoms: SpeciesPair::splat(1e6),
        omega_write: SpeciesPair::new(Complex64::new(p_i / TAU, 0.0), Complex64::new(p_ii / TAU, 0.0)),
        delta: 1e9,
        kappa: 0.0,
        gamma_excited: SpeciesPair::splat(0.0),
        gamma_ground: SpeciesPair::splat(0.0),
        tau_write: TAU,
    }
}

pub fn config(p_i: f64, p_ii: f64, efficiency: f64, dark_rate: f64) -> ProtocolConfig {
    ProtocolConfig {
        params: params(p_i, p_ii),
        detector: DetectorModel { efficiency, dark_rate, gate: GATE },
        read: ReadParams::ideal(SpeciesPair::new(2.0e15, 2.1e15)),
        timing: TimingSequence {
            tau_write: TAU,
            detection_gate: GATE,
            tau_read: 1e-6,
            cycle_period: 1e-5,
            max_trials: 10_000,
        },
        engine: WriteEngine::Perturbative,
        cutoff: 2,
    }
}
