//! Named parameter sets. Frequencies are stored in Hz, exactly as quoted.

use crate::config::{Provenance, Value};

pub struct PresetField {
    pub key: &'static str,
    pub value: Value,
    pub provenance: Provenance,
    pub note: &'static str,
}

pub struct Preset {
    pub name: &'static str,
    pub summary: &'static str,
    /// Level assignments, documentation only.
    pub level_labels: &'static [(&'static str, &'static str)],
    pub fields: &'static [PresetField],
}

const fn paper(key: &'static str, hz: f64, note: &'static str) -> PresetField {
    PresetField { key, value: Value::Real(hz), provenance: Provenance::Paper, note }
}

const fn default(key: &'static str, value: f64, note: &'static str) -> PresetField {
    PresetField { key, value: Value::Real(value), provenance: Provenance::Default, note }
}

const fn default_complex(key: &'static str, re: f64, note: &'static str) -> PresetField {
    PresetField { key, value: Value::Complex(re, 0.0), provenance: Provenance::Default, note }
}

/// 1e8 / 2π: with g √N / Δ = 1e-3 and τ = 1 µs this gives P = 0.1.
const FIXTURE_OMEGA: f64 = 15_915_494.309_189_533;

pub static PRESETS: &[Preset] = &[
    Preset {
        name: "rb85-87",
        summary: "Rb-85 / Rb-87 isotope mixture on the D1 line",
        level_labels: &[
            ("Rb-85 |g>, |s>", "5S1/2 F=2, F=3"),
            ("Rb-85 |e>", "5P1/2 F=3"),
            ("Rb-87 |g'>, |s'>", "5S1/2 F=1, F=2"),
            ("Rb-87 |e'>", "5P1/2 F=1"),
        ],
        fields: &[
            paper("delta", 1.368e9, "(w_e'g' - w_eg)/2"),
            paper("delta_omega_write_hz", 1.8995e9, "(w_es - w_e's')/2"),
            paper("delta_omega_read_hz", 1.368e9, "equal to delta"),
            paper("dark_rate_hz", 400.0, "upper end of the quoted SPAD range"),
            default("g_I", 1e4, ""),
            default("g_II", 1e4, ""),
            default("N_I", 1e6, ""),
            default("N_II", 1e6, ""),
            default_complex("omega_rabi_write_I", 2e6, "P close to 0.09"),
            default_complex("omega_rabi_write_II", 2e6, "P close to 0.09"),
            default("kappa", 5e6, "free-space emission bandwidth"),
            default("gamma_1", 5.75e6, "D1 natural linewidth"),
            default("gamma_2", 5.75e6, "D1 natural linewidth"),
            default("gamma_gs", 1e3, ""),
            default("tau_write", 1e-6, ""),
            default("g_read_I", 1e4, ""),
            default("g_read_II", 1e4, ""),
            default("omega_rabi_read_I", 5e6, ""),
            default("omega_rabi_read_II", 5e6, ""),
            default("omega_out_I_hz", 377.105_909e12, "Rb-85 D1 emission"),
            default("omega_out_II_hz", 377.108_645e12, "Rb-85 line plus 2 delta"),
        ],
    },
    Preset {
        name: "fixture-p01",
        summary: "lossless test fixture: P_I = P_II = 0.1, eta = 0.6, 400 Hz dark rate, 1 us gate",
        level_labels: &[],
        fields: &[
            default("g_I", 1e3, ""),
            default("g_II", 1e3, ""),
            default("N_I", 1e6, ""),
            default("N_II", 1e6, ""),
            default_complex("omega_rabi_write_I", FIXTURE_OMEGA, "P_I = 0.1"),
            default_complex("omega_rabi_write_II", FIXTURE_OMEGA, "P_II = 0.1"),
            default("delta", 1e9, ""),
            default("kappa", 0.0, ""),
            default("gamma_1", 0.0, ""),
            default("gamma_2", 0.0, ""),
            default("gamma_gs", 0.0, ""),
            default("tau_write", 1e-6, ""),
            default("eta", 0.6, ""),
            paper("dark_rate_hz", 400.0, "upper end of the quoted SPAD range"),
            default("gate_s", 1e-6, ""),
            default("g_read_I", 1e3, ""),
            default("g_read_II", 1e3, ""),
            default("omega_rabi_read_I", 1e6, ""),
            default("omega_rabi_read_II", 1e6, ""),
            default("omega_out_I_hz", 377.105_909e12, ""),
            default("omega_out_II_hz", 377.108_645e12, ""),
        ],
    },
];

pub fn find(name: &str) -> Option<&'static Preset> {
    PRESETS.iter().find(|p| p.name == name)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::spec;

    #[test]
    fn every_field_is_a_known_key() {
        for p in PRESETS {
            for f in p.fields {
                assert!(spec(f.key).is_some(), "{}: {}", p.name, f.key);
            }
        }
    }

    #[test]
    fn fixture_excitation_is_one_tenth() {
        let p = 2.0 * std::f64::consts::PI * 1e3 * 1e3 * FIXTURE_OMEGA / 1e9 * 1e-6;
        assert!((p - 0.1).abs() < 1e-15);
    }
}
