//! Repeat-until-success Monte Carlo of the cycled pulse sequence.
//!
//! Each cycle writes, gates the detector, and either reads the heralded
//! ensemble out or (on no click) lets the read pulses re-pump it. Re-pumping
//! is modelled as a perfect reset to the collective ground state, so every
//! trial of a configuration starts from the same write-stage state. That
//! state and its detector branches are computed once in [`Protocol::new`];
//! individual trials only sample from them.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::herald::{herald_probability, outcome_branches, DetectorModel, HeraldKind, HeraldOutcome};
use crate::hilbert::TruncatedState;
use crate::retrieval::{retrieve_fme, ReadParams, Retrieved};
use crate::rng::trial_stream;
use crate::write_dynamics::{
    build_effective_hamiltonian, derive_rates, evolve_exact, perturbative_state, DerivedRates, SystemParams,
};

/// How the write-stage output state is computed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum WriteEngine {
    /// First-order state, single excitation at most.
    #[default]
    Perturbative,
    /// Exact effective-Hamiltonian evolution; includes multi-pair terms.
    Exact,
}

impl std::str::FromStr for WriteEngine {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "perturbative" => Ok(WriteEngine::Perturbative),
            "exact" => Ok(WriteEngine::Exact),
            other => Err(Error::Config(format!("unknown engine {other:?}; expected perturbative or exact"))),
        }
    }
}

impl std::fmt::Display for WriteEngine {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            WriteEngine::Perturbative => "perturbative",
            WriteEngine::Exact => "exact",
        })
    }
}

/// One cycle of the pulse sequence (seconds).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimingSequence {
    pub tau_write: f64,
    pub detection_gate: f64,
    pub tau_read: f64,
    pub cycle_period: f64,
    pub max_trials: u64,
}

impl TimingSequence {
    pub fn validate(&self) -> Result<()> {
        let parts = [
            ("tau_write", self.tau_write),
            ("gate_s", self.detection_gate),
            ("tau_read", self.tau_read),
            ("cycle_period", self.cycle_period),
        ];
        for (name, v) in parts {
            if !(v >= 0.0) || !v.is_finite() {
                return Err(Error::Config(format!("{name} must be finite and >= 0, got {v}")));
            }
        }
        let busy = self.tau_write + self.detection_gate + self.tau_read;
        if busy > self.cycle_period * (1.0 + 1e-12) {
            return Err(Error::Config(format!(
                "tau_write + gate_s + tau_read = {busy:e} s exceeds cycle_period = {:e} s",
                self.cycle_period
            )));
        }
        if self.max_trials < 1 {
            return Err(Error::Config("max_trials must be at least 1".into()));
        }
        Ok(())
    }
}

/// Everything a protocol run needs.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProtocolConfig {
    pub params: SystemParams,
    pub detector: DetectorModel,
    pub read: ReadParams,
    pub timing: TimingSequence,
    pub engine: WriteEngine,
    pub cutoff: usize,
}

impl ProtocolConfig {
    pub fn validate(&self) -> Result<()> {
        self.params.validate()?;
        self.detector.validate()?;
        self.read.validate()?;
        self.timing.validate()?;
        if self.timing.tau_write != self.params.tau_write {
            return Err(Error::Config("timing tau_write differs from the write pulse duration".into()));
        }
        if self.timing.detection_gate != self.detector.gate {
            return Err(Error::Config("timing gate differs from the detector gate".into()));
        }
        Ok(())
    }

    /// Exchange species I and II in every parameter block.
    pub fn swapped(&self) -> ProtocolConfig {
        let mut read = self.read;
        read.coupling = read.coupling.swapped();
        read.atoms = read.atoms.swapped();
        read.omega_read = read.omega_read.swapped();
        read.efficiency = read.efficiency.swapped();
        read.omega_out = read.omega_out.swapped();
        ProtocolConfig { params: self.params.swapped(), read, ..*self }
    }
}

/// Outcome of one write, detect and read cycle.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrialRecord {
    pub trial_index: u64,
    pub clicked: bool,
    pub false_herald: bool,
    /// Present iff `clicked`.
    pub output: Option<Retrieved>,
}

/// A repeat-until-success run. `success` holds the clicking trial; all
/// earlier trials were silent and carry no further information.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RunOutcome {
    pub run_index: u64,
    pub trials_used: u64,
    pub success: Option<TrialRecord>,
}

#[derive(Debug, Clone)]
struct ClickBranch {
    cumulative: f64,
    kind: HeraldKind,
    output: Retrieved,
}

/// Prepared protocol: write state and detector branches computed once.
#[derive(Debug, Clone)]
pub struct Protocol {
    config: ProtocolConfig,
    rates: DerivedRates,
    write_state: TruncatedState,
    click_probability: f64,
    click_branches: Vec<ClickBranch>,
}

impl Protocol {
    pub fn new(config: ProtocolConfig) -> Result<Self> {
        config.validate()?;
        let rates = derive_rates(&config.params)?;
        let write_state = match config.engine {
            WriteEngine::Perturbative => perturbative_state(&rates, config.cutoff)?,
            WriteEngine::Exact => {
                let h = build_effective_hamiltonian(&rates, config.cutoff)?;
                evolve_exact(&h, config.params.tau_write, &TruncatedState::vacuum(config.cutoff)?)?.normalized()?
            }
        };
        let click_probability = herald_probability(&write_state, &config.detector)?;
        let branches = outcome_branches(&write_state, &config.detector, true)?;
        let total: f64 = branches.iter().map(|b| b.weight).sum();
        let mut acc = 0.0;
        let mut click_branches = Vec::with_capacity(branches.len());
        for b in &branches {
            acc += b.weight / total;
            let heralded = HeraldOutcome {
                clicked: true,
                conditional_state: b.spin_state.clone(),
                photons: b.photons,
                click_probability,
                false_herald_probability: 0.0,
            };
            click_branches.push(ClickBranch {
                cumulative: acc,
                kind: b.kind(),
                output: retrieve_fme(&heralded, &config.read)?,
            });
        }
        Ok(Protocol { config, rates, write_state, click_probability, click_branches })
    }

    pub fn config(&self) -> &ProtocolConfig {
        &self.config
    }

    pub fn rates(&self) -> &DerivedRates {
        &self.rates
    }

    pub fn write_state(&self) -> &TruncatedState {
        &self.write_state
    }

    /// Analytic per-trial click probability.
    pub fn click_probability(&self) -> f64 {
        self.click_probability
    }

    /// Analytic fraction of false heralds among clicks.
    pub fn false_herald_fraction(&self) -> f64 {
        let mut prev = 0.0;
        let mut wrong = 0.0;
        for b in &self.click_branches {
            if b.kind.is_false() {
                wrong += b.cumulative - prev;
            }
            prev = b.cumulative;
        }
        wrong
    }

    /// One cycle, drawing from `rng`.
    pub fn sample_trial<R: Rng + ?Sized>(&self, rng: &mut R, trial_index: u64) -> TrialRecord {
        let u_click: f64 = rng.random();
        let u_branch: f64 = rng.random();
        if u_click >= self.click_probability || self.click_branches.is_empty() {
            return TrialRecord { trial_index, clicked: false, false_herald: false, output: None };
        }
        let branch = self
            .click_branches
            .iter()
            .find(|b| u_branch < b.cumulative)
            .unwrap_or_else(|| self.click_branches.last().expect("non-empty"));
        TrialRecord {
            trial_index,
            clicked: true,
            false_herald: branch.kind.is_false(),
            output: Some(branch.output),
        }
    }

    /// One cycle on the counter-based stream `(master_seed, run, trial)`.
    pub fn run_trial(&self, master_seed: u64, run_index: u64, trial_index: u64) -> TrialRecord {
        let mut rng = trial_stream(master_seed, run_index, trial_index);
        self.sample_trial(&mut rng, trial_index)
    }

    /// Cycle until a click or `max_trials`, whichever comes first.
    pub fn run_until_success(&self, master_seed: u64, run_index: u64) -> RunOutcome {
        self.run_until_success_with_limit(master_seed, run_index, self.config.timing.max_trials)
    }

    pub fn run_until_success_with_limit(&self, master_seed: u64, run_index: u64, max_trials: u64) -> RunOutcome {
        for trial in 0..max_trials {
            let rec = self.run_trial(master_seed, run_index, trial);
            if rec.clicked {
                return RunOutcome { run_index, trials_used: trial + 1, success: Some(rec) };
            }
        }
        RunOutcome { run_index, trials_used: max_trials, success: None }
    }

    /// `n_runs` independent runs; `workers = None` uses the global pool.
    /// The result does not depend on the worker count.
    pub fn run_many(&self, master_seed: u64, n_runs: u64, workers: Option<usize>) -> Result<Vec<RunOutcome>> {
        let job = || {
            (0..n_runs)
                .into_par_iter()
                .map(|r| self.run_until_success(master_seed, r))
                .collect::<Vec<_>>()
        };
        match workers {
            None => Ok(job()),
            Some(n) => {
                let pool = rayon::ThreadPoolBuilder::new()
                    .num_threads(n.max(1))
                    .build()
                    .map_err(|e| Error::Config(format!("cannot start worker pool: {e}")))?;
                Ok(pool.install(job))
            }
        }
    }

    pub fn run(&self, master_seed: u64, n_runs: u64, workers: Option<usize>) -> Result<ProtocolStats> {
        let runs = self.run_many(master_seed, n_runs, workers)?;
        let mut stats = aggregate(&runs)?;
        stats.mean_time_to_success = stats.mean_trials_to_success.scaled(self.config.timing.cycle_period);
        Ok(stats)
    }
}

/// Sample mean with its 1σ standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub mean: f64,
    pub std_err: f64,
    pub samples: u64,
}

impl Estimate {
    fn from_samples(values: impl Iterator<Item = f64>) -> Estimate {
        let mut n = 0u64;
        let mut sum = 0.0;
        let mut sum_sq = 0.0;
        for v in values {
            n += 1;
            sum += v;
            sum_sq += v * v;
        }
        if n == 0 {
            return Estimate { mean: f64::NAN, std_err: f64::NAN, samples: 0 };
        }
        let mean = sum / n as f64;
        let std_err = if n > 1 {
            let var = ((sum_sq - n as f64 * mean * mean) / (n as f64 - 1.0)).max(0.0);
            (var / n as f64).sqrt()
        } else {
            0.0
        };
        Estimate { mean, std_err, samples: n }
    }

    fn proportion(hits: u64, n: u64) -> Estimate {
        if n == 0 {
            return Estimate { mean: f64::NAN, std_err: f64::NAN, samples: 0 };
        }
        let p = hits as f64 / n as f64;
        Estimate { mean: p, std_err: (p * (1.0 - p) / n as f64).sqrt(), samples: n }
    }

    fn scaled(&self, k: f64) -> Estimate {
        Estimate { mean: self.mean * k, std_err: self.std_err * k, samples: self.samples }
    }
}

/// Aggregate statistics over many repeat-until-success runs. Quantities with
/// no samples (e.g. concurrence when no true photon was produced) are NaN.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProtocolStats {
    pub n_runs: u64,
    pub n_trials: u64,
    pub n_clicks: u64,
    /// Clicks per trial.
    pub p_click: Estimate,
    /// Fraction of runs that clicked within `max_trials`.
    pub success_fraction: Estimate,
    /// Over successful runs.
    pub mean_trials_to_success: Estimate,
    /// `mean_trials_to_success × cycle_period` (s); NaN when unknown.
    pub mean_time_to_success: Estimate,
    pub false_herald_fraction: Estimate,
    /// Over clicks that produced a single photon.
    pub mean_concurrence: Estimate,
    pub mean_fidelity_bell: Estimate,
    /// Emitted photons per click.
    pub photon_yield: Estimate,
}

/// Reduce runs in the given order.
pub fn aggregate(runs: &[RunOutcome]) -> Result<ProtocolStats> {
    if runs.is_empty() {
        return Err(Error::InvalidArgument("cannot aggregate zero runs".into()));
    }
    let n_runs = runs.len() as u64;
    let n_trials: u64 = runs.iter().map(|r| r.trials_used).sum();
    let clicks: Vec<&TrialRecord> = runs.iter().filter_map(|r| r.success.as_ref()).collect();
    let n_clicks = clicks.len() as u64;
    let false_clicks = clicks.iter().filter(|c| c.false_herald).count() as u64;
    let photons = || clicks.iter().filter_map(|c| c.output.as_ref().and_then(|o| o.photon()));
    Ok(ProtocolStats {
        n_runs,
        n_trials,
        n_clicks,
        p_click: Estimate::proportion(n_clicks, n_trials),
        success_fraction: Estimate::proportion(n_clicks, n_runs),
        mean_trials_to_success: Estimate::from_samples(
            runs.iter().filter(|r| r.success.is_some()).map(|r| r.trials_used as f64),
        ),
        mean_time_to_success: Estimate { mean: f64::NAN, std_err: f64::NAN, samples: 0 },
        false_herald_fraction: Estimate::proportion(false_clicks, n_clicks),
        mean_concurrence: Estimate::from_samples(photons().map(|q| q.concurrence())),
        mean_fidelity_bell: Estimate::from_samples(photons().map(|q| q.fidelity_to_bell())),
        photon_yield: Estimate::from_samples(
            clicks.iter().map(|c| c.output.as_ref().map_or(0.0, |o| o.mean_photons())),
        ),
    })
}

/// Evaluate every configuration with the same master seed. Rows are
/// independent and returned in input order.
pub fn sweep(points: &[ProtocolConfig], master_seed: u64, n_runs: u64, workers: Option<usize>) -> Result<Vec<ProtocolStats>> {
    if points.is_empty() {
        return Err(Error::Config("sweep grid is empty".into()));
    }
    points
        .iter()
        .map(|cfg| Protocol::new(*cfg)?.run(master_seed, n_runs, workers))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::retrieval::FmeQubitState;
    use crate::write_dynamics::SpeciesPair;
    use num_complex::Complex64;

    /// χ = P / τ with g √N / Δ = 1 so Ω_W sets χ directly.
    pub(crate) fn fixture(p_i: f64, p_ii: f64, efficiency: f64, dark_rate: f64) -> ProtocolConfig {
        let tau = 1e-6;
        let delta = 1e9;
        let params = SystemParams {
            coupling: SpeciesPair::splat(1e6),
            atoms: SpeciesPair::splat(1e6),
            omega_write: SpeciesPair::new(
                Complex64::new(p_i / tau, 0.0),
                Complex64::new(p_ii / tau, 0.0),
            ),
            delta,
            kappa: 0.0,
            gamma_excited: SpeciesPair::splat(0.0),
            gamma_ground: SpeciesPair::splat(0.0),
            tau_write: tau,
        };
        let gate = 1e-6;
        ProtocolConfig {
            params,
            detector: DetectorModel { efficiency, dark_rate, gate },
            read: ReadParams::ideal(SpeciesPair::new(1.0, 2.0)),
            timing: TimingSequence { tau_write: tau, detection_gate: gate, tau_read: 1e-6, cycle_period: 1e-5, max_trials: 10_000 },
            engine: WriteEngine::Perturbative,
            cutoff: 2,
        }
    }

    #[test]
    fn fixture_has_requested_amplitudes() {
        let p = Protocol::new(fixture(0.1, 0.05, 1.0, 0.0)).unwrap();
        assert!((p.rates().excitation.i.re - 0.1).abs() < 1e-12);
        assert!((p.rates().excitation.ii.re - 0.05).abs() < 1e-12);
    }

    #[test]
    fn blind_detector_never_clicks() {
        let p = Protocol::new(fixture(0.1, 0.1, 0.0, 0.0)).unwrap();
        for t in 0..1000 {
            assert!(!p.run_trial(1, 0, t).clicked);
        }
        let run = p.run_until_success_with_limit(1, 0, 5);
        assert_eq!(run.trials_used, 5);
        assert!(run.success.is_none());
    }

    #[test]
    fn without_write_every_click_is_false() {
        let p = Protocol::new(fixture(0.0, 0.0, 0.6, 5e4)).unwrap();
        let runs = p.run_many(3, 200, Some(2)).unwrap();
        let stats = aggregate(&runs).unwrap();
        assert!(stats.n_clicks > 0);
        assert_eq!(stats.false_herald_fraction.mean, 1.0);
        assert!(runs.iter().filter_map(|r| r.success).all(|t| t.output == Some(Retrieved::NoPhoton)));
    }

    #[test]
    fn certain_click_succeeds_first_trial() {
        // dark probability ~1 makes every gate click
        let p = Protocol::new(fixture(0.1, 0.1, 1.0, 1e9)).unwrap();
        assert!(p.click_probability() > 1.0 - 1e-12);
        for r in 0..50 {
            assert_eq!(p.run_until_success(9, r).trials_used, 1);
        }
    }

    #[test]
    fn timing_must_fit_in_cycle() {
        let mut cfg = fixture(0.1, 0.1, 0.6, 400.0);
        cfg.timing.cycle_period = 2e-6;
        assert!(matches!(Protocol::new(cfg), Err(Error::Config(_))));
        let mut cfg = fixture(0.1, 0.1, 0.6, 400.0);
        cfg.timing.max_trials = 0;
        assert!(Protocol::new(cfg).is_err());
    }

    fn click(concurrence_one: bool, false_herald: bool) -> RunOutcome {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let q = if concurrence_one {
            FmeQubitState::new(Complex64::new(h, 0.0), Complex64::new(h, 0.0), 1.0, 2.0, 1.0).unwrap()
        } else {
            FmeQubitState::from_unnormalized(Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0), 1.0, 2.0, 1.0).unwrap()
        };
        let output = if false_herald { Retrieved::NoPhoton } else { Retrieved::Photon(q) };
        RunOutcome {
            run_index: 0,
            trials_used: 1,
            success: Some(TrialRecord { trial_index: 0, clicked: true, false_herald, output: Some(output) }),
        }
    }

    #[test]
    fn aggregate_fixtures() {
        let all = vec![click(true, false); 10];
        let s = aggregate(&all).unwrap();
        assert_eq!(s.mean_concurrence.mean, 1.0);
        assert_eq!(s.mean_concurrence.std_err, 0.0);
        assert_eq!(s.p_click.mean, 1.0);

        let mut half = vec![click(true, false); 6];
        half.extend(vec![click(true, true); 6]);
        assert_eq!(aggregate(&half).unwrap().false_herald_fraction.mean, 0.5);

        assert!(matches!(aggregate(&[]), Err(Error::InvalidArgument(_))));
    }

    #[test]
    fn engine_names_parse() {
        assert_eq!("exact".parse::<WriteEngine>().unwrap(), WriteEngine::Exact);
        assert!("euler".parse::<WriteEngine>().is_err());
    }

    #[test]
    fn empty_sweep_is_a_config_error() {
        assert!(matches!(sweep(&[], 1, 10, None), Err(Error::Config(_))));
    }
}
