use fme_core::herald::{
    false_herald_fraction, herald_probability, outcome_branches, project_on_click, single_excitation_concurrence,
    DetectorModel,
};
use fme_core::hilbert::{Occupation, TruncatedState};
use fme_core::write_dynamics::{perturbative_state, DerivedRates};
use fme_core::Complex64;
use nalgebra::DMatrix;
use proptest::prelude::*;

fn write_state(p_i: f64, p_ii: f64) -> TruncatedState {
    perturbative_state(&DerivedRates::from_excitation(p_i, p_ii), 2).unwrap()
}

fn random_state(cutoff: usize) -> impl Strategy<Value = TruncatedState> {
    let dim = (cutoff + 1).pow(3);
    prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0), dim).prop_filter_map("zero", move |v| {
        let amps = v.into_iter().map(|(a, b)| Complex64::new(a, b)).collect();
        TruncatedState::from_amplitudes(cutoff, amps).ok()?.normalized().ok()
    })
}

/// `Tr_S |ψ><ψ|` on the two-spin block, indexed by `i * d + j`.
fn reduced_spin_density(psi: &TruncatedState) -> DMatrix<Complex64> {
    let d = psi.cutoff() + 1;
    let full = DMatrix::from_fn(psi.dim(), psi.dim(), |r, c| psi.amplitudes()[r] * psi.amplitudes()[c].conj());
    let mut rho = DMatrix::zeros(d * d, d * d);
    for s in 0..d {
        for r in 0..d * d {
            for c in 0..d * d {
                rho[(r, c)] += full[(s * d * d + r, s * d * d + c)];
            }
        }
    }
    rho
}

fn spin_block(spin: &TruncatedState) -> Vec<Complex64> {
    let d = spin.cutoff() + 1;
    (0..d * d).map(|k| spin.amplitude(Occupation::new(0, k / d, k % d))).collect()
}

#[test]
fn fixture_click_probability_matches_brute_force() {
    let psi = write_state(0.1, 0.1);
    let d = DetectorModel::new(0.6, 400.0, 1e-6).unwrap();
    // brute force over the Fock components, written out independently
    let p_dark = 1.0 - (-4e-4f64).exp();
    let vac = 1.0 / 1.02;
    let one = 0.02 / 1.02;
    let oracle = 1.0 - (1.0 - p_dark) * (vac + one * 0.4);
    let p = herald_probability(&psi, &d).unwrap();
    assert!((p - oracle).abs() < 1e-15, "{p} vs {oracle}");
    assert!((p - 0.012160).abs() < 1e-5);
    // the approximate 0.01225 quoted with unnormalized weights is within 1 %
    assert!((p - 0.01225).abs() / 0.01225 < 0.01);

    let false_oracle = p_dark * vac / oracle;
    let f = false_herald_fraction(&psi, &d).unwrap();
    assert!((f - false_oracle).abs() < 1e-14);
    assert!((f - 0.0327).abs() / 0.0327 < 0.02);
}

#[test]
fn equal_amplitudes_give_unit_concurrence() {
    for p in [0.01, 0.05, 0.1, 0.2] {
        let h = project_on_click(&write_state(p, p), &DetectorModel::ideal(), 0.5).unwrap();
        assert!((single_excitation_concurrence(&h.conditional_state) - 1.0).abs() < 1e-10);
        let a = h.conditional_state.amplitude(Occupation::new(0, 1, 0));
        let b = h.conditional_state.amplitude(Occupation::new(0, 0, 1));
        assert!((a + b).norm() < 1e-12, "relative minus sign kept");
    }
}

#[test]
fn unequal_amplitudes_give_expected_spin_state() {
    let h = project_on_click(&write_state(0.1, 0.05), &DetectorModel::ideal(), 0.0).unwrap();
    let a = h.conditional_state.amplitude(Occupation::new(0, 1, 0));
    let b = h.conditional_state.amplitude(Occupation::new(0, 0, 1));
    assert!((a - Complex64::new(2.0 / 5f64.sqrt(), 0.0)).norm() < 1e-12);
    assert!((b - Complex64::new(-1.0 / 5f64.sqrt(), 0.0)).norm() < 1e-12);
}

#[test]
fn no_click_possible_is_an_error() {
    let vac = TruncatedState::vacuum(2).unwrap();
    assert!(project_on_click(&vac, &DetectorModel::ideal(), 0.3).is_err());
}

#[test]
fn unnormalized_input_is_rejected() {
    let psi = write_state(0.1, 0.1).scaled(Complex64::new(1.1, 0.0));
    assert!(herald_probability(&psi, &DetectorModel::ideal()).is_err());
}

proptest! {
    #[test]
    fn branches_recombine_to_reduced_density(psi in random_state(2), eta in 0.0f64..=1.0, dark in 0.0f64..1e6) {
        let d = DetectorModel::new(eta, dark, 1e-6).unwrap();
        let dim = 9;
        let mut rho = DMatrix::<Complex64>::zeros(dim, dim);
        let mut total = 0.0;
        for clicked in [true, false] {
            for b in outcome_branches(&psi, &d, clicked).unwrap() {
                total += b.weight;
                let v = spin_block(&b.spin_state);
                for r in 0..dim {
                    for c in 0..dim {
                        rho[(r, c)] += v[r] * v[c].conj() * b.weight;
                    }
                }
            }
        }
        prop_assert!((total - 1.0).abs() < 1e-12);
        prop_assert!((rho - reduced_spin_density(&psi)).norm() < 1e-12);
    }

    #[test]
    fn click_probability_is_monotone(p in 0.0f64..0.3, dp in 0.0f64..0.1, eta in 0.0f64..0.9, de in 0.0f64..0.1,
                                     dark in 0.0f64..1e4, dd in 0.0f64..1e4) {
        let prob = |p: f64, eta: f64, dark: f64| {
            herald_probability(&write_state(p, 0.1), &DetectorModel::new(eta, dark, 1e-6).unwrap()).unwrap()
        };
        let base = prob(p, eta, dark);
        prop_assert!(prob(p + dp, eta, dark) >= base - 1e-15);
        prop_assert!(prob(p, eta + de, dark) >= base - 1e-15);
        prop_assert!(prob(p, eta, dark + dd) >= base - 1e-15);
    }

    #[test]
    fn label_swap_is_equivariant(pi in 0.01f64..0.3, pii in 0.01f64..0.3, u in 0.0f64..1.0) {
        let d = DetectorModel::new(0.7, 0.0, 1e-6).unwrap();
        let a = project_on_click(&write_state(pi, pii), &d, u).unwrap();
        let b = project_on_click(&write_state(pii, pi), &d, u).unwrap();
        prop_assert!((a.click_probability - b.click_probability).abs() < 1e-15);
        // swapped labels flip the relative sign: equal up to a global −1
        let overlap = a.conditional_state.with_spins_swapped().inner(&b.conditional_state).unwrap();
        prop_assert!((overlap + 1.0).norm() < 1e-12);
    }

    #[test]
    fn probabilities_stay_in_unit_interval(psi in random_state(2), eta in 0.0f64..=1.0, dark in 0.0f64..1e8) {
        let d = DetectorModel::new(eta, dark, 1e-6).unwrap();
        let p = herald_probability(&psi, &d).unwrap();
        prop_assert!((0.0..=1.0).contains(&p));
        let f = false_herald_fraction(&psi, &d).unwrap();
        prop_assert!((0.0..=1.0).contains(&f));
    }
}
