//! Command-line front end for `fme-core`: presets, configuration loading,
//! subcommand dispatch and CSV/JSON output.

pub mod config;
pub mod grid;
pub mod output;
pub mod presets;

use std::io::Write;
use std::path::PathBuf;

use clap::{Parser, Subcommand, ValueEnum};
use fme_core::herald::{false_herald_fraction, herald_probability, outcome_branches, single_excitation_concurrence, HeraldOutcome};
use fme_core::hilbert::{ModeId, TruncatedState};
use fme_core::protocol::{Protocol, ProtocolConfig, WriteEngine};
use fme_core::retrieval::{dsp_angle, group_velocity, retrieve_fme, Retrieved};
use fme_core::write_dynamics::{
    build_effective_hamiltonian, build_langevin, canonical_commutators, derive_rates, evolve_exact, evolve_langevin,
    perturbative_state,
};
use log::info;
use serde_json::{json, Value as Json};

use crate::config::{load_config, Config, ConfigError, Embedded, Sources, DEFAULTS, KEYS};
use crate::output::{config_cells, flatten, stats_cells, Cell, Report, Table};

pub const DEFAULT_SEED: u64 = 0;
pub const DEFAULT_RUNS: u64 = 1000;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("{0}")]
    Usage(String),
    #[error("numerical failure: {0}")]
    Numeric(String),
    #[error("i/o error: {0}")]
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) | CliError::Usage(_) => 2,
            CliError::Numeric(_) => 4,
            CliError::Io(_) => 1,
        }
    }
}

impl From<fme_core::Error> for CliError {
    fn from(e: fme_core::Error) -> Self {
        match e {
            fme_core::Error::Numeric(m) => CliError::Numeric(m),
            other => CliError::Usage(other.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

/// Result of a successful invocation.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Ok,
    /// Single-shot protocol ran out of trials.
    NoSuccess,
}

impl Status {
    pub fn exit_code(self) -> i32 {
        match self {
            Status::Ok => 0,
            Status::NoSuccess => 3,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Parser)]
#[command(name = "fme-sim", version, about = "Heralded two-frequency entangled single photons from a two-species atomic ensemble")]
pub struct Cli {
    /// JSON config file: flat keys, or a report written by this tool.
    #[arg(long, global = true, value_name = "PATH")]
    pub config: Option<PathBuf>,
    /// Start from a named preset (see `preset-list`).
    #[arg(long, global = true, value_name = "NAME")]
    pub preset: Option<String>,
    /// Override one key; the value is parsed as JSON. Repeatable.
    #[arg(long = "set", global = true, value_name = "KEY=VALUE")]
    pub set: Vec<String>,
    /// Master seed.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Repeat-until-success runs per configuration.
    #[arg(long, global = true)]
    pub runs: Option<u64>,
    /// Output file (default: standard output).
    #[arg(long, global = true, value_name = "PATH")]
    pub out: Option<PathBuf>,
    #[arg(long, global = true, value_enum)]
    pub format: Option<Format>,
    /// Worker threads (default: all cores). Results do not depend on it.
    #[arg(long, global = true)]
    pub workers: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Post-write state, mean occupations and Langevin moments.
    WriteSim,
    /// Click probability and conditional spin states.
    Herald,
    /// Output photon of a true herald.
    Retrieve {
        /// Heralded spin state as JSON (`{"cutoff": .., "amplitudes": [[re, im], ..]}`).
        #[arg(long, value_name = "PATH")]
        state: Option<PathBuf>,
    },
    /// Monte Carlo of the repeat-until-success cycle.
    Protocol {
        /// One run only; exit code 3 if it does not succeed within max_trials.
        #[arg(long)]
        single_shot: bool,
    },
    /// Protocol statistics over a parameter grid.
    Sweep {
        /// `key=a,b,c` or `key=start:stop:n`; repeat for a Cartesian product.
        #[arg(long = "grid", value_name = "SPEC")]
        grid: Vec<String>,
    },
    /// List presets and defaults with provenance.
    PresetList,
}

/// Execute `cli`, writing the report to `--out` or `stdout`.
pub fn run(cli: &Cli, stdout: &mut dyn Write) -> Result<Status, CliError> {
    if let Command::PresetList = cli.command {
        let mut buf = Vec::new();
        preset_list(cli.format, &mut buf)?;
        emit(cli, &buf, stdout)?;
        return Ok(Status::Ok);
    }

    let text = match &cli.config {
        Some(p) => Some(std::fs::read_to_string(p).map_err(|e| {
            CliError::Config(ConfigError::Syntax(format!("cannot read {}: {e}", p.display())))
        })?),
        None => None,
    };
    let (cfg, embedded) = load_config(&Sources {
        preset: cli.preset.as_deref(),
        file: text.as_deref(),
        overrides: &cli.set,
    })?;
    let seed = cli.seed.or(embedded.seed).unwrap_or(DEFAULT_SEED);
    let runs = cli.runs.or(embedded.runs).unwrap_or(DEFAULT_RUNS);
    if runs == 0 {
        return Err(CliError::Usage("--runs must be at least 1".into()));
    }
    let pc = cfg.to_protocol()?;

    let (report, status) = match &cli.command {
        Command::WriteSim => (write_sim(&pc, seed)?, Status::Ok),
        Command::Herald => (herald(&pc, seed)?, Status::Ok),
        Command::Retrieve { state } => (retrieve(&pc, seed, state.as_ref())?, Status::Ok),
        Command::Protocol { single_shot: false } => (protocol(&cfg, &pc, seed, runs, cli.workers)?, Status::Ok),
        Command::Protocol { single_shot: true } => single_shot(&cfg, &pc, seed)?,
        Command::Sweep { grid } => (sweep(&cfg, &embedded, grid, seed, runs, cli.workers)?, Status::Ok),
        Command::PresetList => unreachable!(),
    };

    let tabular = report.result.is_none();
    let default_format = if tabular { Format::Csv } else { Format::Json };
    let mut buf = Vec::new();
    match cli.format.unwrap_or(default_format) {
        Format::Json => report.write_json(&cfg, &mut buf)?,
        Format::Csv => {
            let table = if tabular { report.table.clone() } else { flat_table(&cfg, &report) };
            table.write_csv(&mut buf).map_err(|e| CliError::Io(e.to_string()))?;
        }
    }
    emit(cli, &buf, stdout)?;
    Ok(status)
}

fn emit(cli: &Cli, bytes: &[u8], stdout: &mut dyn Write) -> Result<(), CliError> {
    match &cli.out {
        Some(path) => {
            std::fs::write(path, bytes)?;
            info!("wrote {}", path.display());
        }
        None => stdout.write_all(bytes)?,
    }
    Ok(())
}

/// One-row CSV for structured results: config, seed, flattened result.
fn flat_table(cfg: &Config, report: &Report) -> Table {
    let (mut cols, mut cells) = config_cells(cfg);
    cols.push("seed".into());
    cells.push(Cell::Int(report.seed));
    if let Some(r) = &report.result {
        flatten("", r, &mut cols, &mut cells);
    }
    Table { columns: cols, rows: vec![cells] }
}

fn structured(command: &'static str, seed: u64, result: Json) -> Report {
    Report { command, seed, runs: None, grid: Vec::new(), table: Table::default(), result: Some(result) }
}

fn write_state(pc: &ProtocolConfig) -> Result<TruncatedState, CliError> {
    let rates = derive_rates(&pc.params)?;
    Ok(match pc.engine {
        WriteEngine::Perturbative => perturbative_state(&rates, pc.cutoff)?,
        WriteEngine::Exact => {
            let h = build_effective_hamiltonian(&rates, pc.cutoff)?;
            evolve_exact(&h, pc.params.tau_write, &TruncatedState::vacuum(pc.cutoff)?)?.normalized()?
        }
    })
}

fn pair_json(z: num_complex::Complex64) -> Json {
    json!([z.re, z.im])
}

fn write_sim(pc: &ProtocolConfig, seed: u64) -> Result<Report, CliError> {
    let r = derive_rates(&pc.params)?;
    let psi = write_state(pc)?;
    let lv0 = build_langevin(&pc.params, &r);
    let lv = evolve_langevin(&lv0, pc.params.tau_write)?;
    let comm = lv0.commutators_after(pc.params.tau_write)? - canonical_commutators();
    let comm_err = comm.iter().map(|z| z.norm()).fold(0.0, f64::max);
    info!("write-sim: engine {}, cutoff {}", pc.engine, pc.cutoff);
    Ok(structured(
        "write-sim",
        seed,
        json!({
            "engine": pc.engine.to_string(),
            "adiabatic_ratio": pc.params.adiabatic_ratio(),
            "rates": {
                "chi_I_rad_s": pair_json(r.chi.i),
                "chi_II_rad_s": pair_json(r.chi.ii),
                "P_I": pair_json(r.excitation.i),
                "P_II": pair_json(r.excitation.ii),
                "gamma_L_I_rad_s": r.pumping.i,
                "gamma_L_II_rad_s": r.pumping.ii,
                "delta_L_I_rad_s": r.stark.i,
                "delta_L_II_rad_s": r.stark.ii,
            },
            "mean_occupation": {
                "stokes": psi.mean_occupation(ModeId::Stokes),
                "spin_I": psi.mean_occupation(ModeId::SpinI),
                "spin_II": psi.mean_occupation(ModeId::SpinII),
            },
            "langevin": {
                "n_stokes": lv.photon_number(),
                "n_spin_I": lv.spin_number(ModeId::SpinI),
                "n_spin_II": lv.spin_number(ModeId::SpinII),
                "commutator_error": comm_err,
            },
            "state": serde_json::to_value(psi.to_record()).expect("state record"),
        }),
    ))
}

fn herald(pc: &ProtocolConfig, seed: u64) -> Result<Report, CliError> {
    let psi = write_state(pc)?;
    let d = &pc.detector;
    let branches = outcome_branches(&psi, d, true)?;
    let truth = branches.iter().find(|b| b.photons == 1);
    let listed: Vec<Json> = branches
        .iter()
        .map(|b| {
            json!({
                "photons": b.photons,
                "kind": b.kind(),
                "weight": b.weight,
                "spin_state": serde_json::to_value(b.spin_state.to_record()).expect("state record"),
            })
        })
        .collect();
    Ok(structured(
        "herald",
        seed,
        json!({
            "click_probability": herald_probability(&psi, d)?,
            "false_herald_fraction": false_herald_fraction(&psi, d)?,
            "dark_probability": d.dark_probability(),
            "conditional_state": truth.map(|b| serde_json::to_value(b.spin_state.to_record()).expect("state record")),
            "concurrence": truth.map(|b| single_excitation_concurrence(&b.spin_state)),
            "branches": listed,
        }),
    ))
}

fn retrieve(pc: &ProtocolConfig, seed: u64, state: Option<&PathBuf>) -> Result<Report, CliError> {
    let spin = match state {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| CliError::Config(ConfigError::Syntax(format!("cannot read {}: {e}", path.display()))))?;
            TruncatedState::from_json(&text)
                .and_then(|s| s.normalized())
                .map_err(|e| CliError::Config(ConfigError::Syntax(format!("{}: {e}", path.display()))))?
        }
        None => {
            let psi = write_state(pc)?;
            outcome_branches(&psi, &pc.detector, true)?
                .into_iter()
                .find(|b| b.photons == 1)
                .map(|b| b.spin_state)
                .ok_or_else(|| CliError::Usage("no true herald is possible with this configuration".into()))?
        }
    };
    let heralded = HeraldOutcome {
        clicked: true,
        conditional_state: spin,
        photons: 1,
        click_probability: 1.0,
        false_herald_probability: 0.0,
    };
    let qubit = match retrieve_fme(&heralded, &pc.read)? {
        Retrieved::Photon(q) => Some(serde_json::to_value(q.to_record()).expect("qubit record")),
        _ => None,
    };
    let read = &pc.read;
    let theta_i = dsp_angle(read.coupling.i, read.atoms.i, read.omega_read.i)?;
    let theta_ii = dsp_angle(read.coupling.ii, read.atoms.ii, read.omega_read.ii)?;
    Ok(structured(
        "retrieve",
        seed,
        json!({
            "qubit": qubit,
            "theta_I_rad": theta_i,
            "theta_II_rad": theta_ii,
            "v_g_I_m_s": group_velocity(theta_i),
            "v_g_II_m_s": group_velocity(theta_ii),
        }),
    ))
}

fn stats_row(cfg: &Config, pc: &ProtocolConfig, seed: u64, runs: u64, workers: Option<usize>) -> Result<(Vec<String>, Vec<Cell>), CliError> {
    let prot = Protocol::new(*pc)?;
    let stats = prot.run(seed, runs, workers)?;
    let (mut cols, mut cells) = config_cells(cfg);
    let (sc, sv) = stats_cells(&stats, prot.click_probability(), prot.false_herald_fraction());
    cols.extend(sc);
    cells.extend(sv);
    cols.push("seed".into());
    cells.push(Cell::Int(seed));
    Ok((cols, cells))
}

fn protocol(cfg: &Config, pc: &ProtocolConfig, seed: u64, runs: u64, workers: Option<usize>) -> Result<Report, CliError> {
    info!("protocol: {runs} runs, seed {seed}");
    let (cols, cells) = stats_row(cfg, pc, seed, runs, workers)?;
    let mut table = Table { columns: cols, rows: Vec::new() };
    table.push(cells);
    Ok(Report { command: "protocol", seed, runs: Some(runs), grid: Vec::new(), table, result: None })
}

fn single_shot(cfg: &Config, pc: &ProtocolConfig, seed: u64) -> Result<(Report, Status), CliError> {
    let prot = Protocol::new(*pc)?;
    let run = prot.run_until_success(seed, 0);
    let (mut cols, mut cells) = config_cells(cfg);
    let photon = run.success.and_then(|t| t.output).and_then(|o| o.photon().copied());
    let kind = match run.success.and_then(|t| t.output) {
        None => "none",
        Some(Retrieved::Photon(_)) => "photon",
        Some(Retrieved::NoPhoton) => "no_photon",
        Some(Retrieved::MultiPhoton { .. }) => "multi_photon",
    };
    let float_or_empty = |x: Option<f64>| x.map_or(Cell::Empty, Cell::Float);
    let extra: Vec<(&str, Cell)> = vec![
        ("trials_used", Cell::Int(run.trials_used)),
        ("success", Cell::Bool(run.success.is_some())),
        ("false_herald", Cell::Bool(run.success.is_some_and(|t| t.false_herald))),
        ("output", Cell::Text(kind.into())),
        ("c1_re", float_or_empty(photon.map(|q| q.c1.re))),
        ("c1_im", float_or_empty(photon.map(|q| q.c1.im))),
        ("c2_re", float_or_empty(photon.map(|q| q.c2.re))),
        ("c2_im", float_or_empty(photon.map(|q| q.c2.im))),
        ("concurrence", float_or_empty(photon.map(|q| q.concurrence()))),
        ("fidelity_bell", float_or_empty(photon.map(|q| q.fidelity_to_bell()))),
        ("time_s", Cell::Float(run.trials_used as f64 * pc.timing.cycle_period)),
        ("seed", Cell::Int(seed)),
    ];
    for (c, v) in extra {
        cols.push(c.into());
        cells.push(v);
    }
    let mut table = Table { columns: cols, rows: Vec::new() };
    table.push(cells);
    let status = if run.success.is_some() { Status::Ok } else { Status::NoSuccess };
    if status == Status::NoSuccess {
        info!("no success within {} trials", pc.timing.max_trials);
    }
    Ok((Report { command: "protocol", seed, runs: Some(1), grid: Vec::new(), table, result: None }, status))
}

fn sweep(cfg: &Config, embedded: &Embedded, specs: &[String], seed: u64, runs: u64, workers: Option<usize>) -> Result<Report, CliError> {
    let specs = if specs.is_empty() { &embedded.grid[..] } else { specs };
    let axes = specs.iter().map(|s| grid::parse_axis(s)).collect::<Result<Vec<_>, _>>()?;
    let points = grid::points(&axes)?;
    let mut table = Table::default();
    for (k, point) in points.iter().enumerate() {
        let point_cfg = grid::apply(cfg, point)?;
        let pc = point_cfg.to_protocol()?;
        let (mut cols, mut cells) = stats_row(&point_cfg, &pc, seed, runs, workers)?;
        for axis in &axes {
            if axis.key == grid::P_RATIO {
                let v = point.iter().find(|(key, _)| *key == grid::P_RATIO).map(|(_, v)| v.as_f64());
                cols.push(grid::P_RATIO.into());
                cells.push(Cell::Float(v.flatten().unwrap_or(f64::NAN)));
            }
        }
        if table.columns.is_empty() {
            table.columns = cols;
        }
        table.push(cells);
        info!("sweep: point {}/{} done", k + 1, points.len());
    }
    Ok(Report { command: "sweep", seed, runs: Some(runs), grid: specs.to_vec(), table, result: None })
}

fn unit_label(key: &str) -> &'static str {
    config::spec(key).map_or("", |s| s.unit.label())
}

fn preset_list(format: Option<Format>, out: &mut Vec<u8>) -> Result<(), CliError> {
    let presets = presets::PRESETS;
    match format {
        None => {
            for p in presets {
                writeln!(out, "{}: {}", p.name, p.summary)?;
                for f in p.fields {
                    let v = f.value.cells().join(" + i");
                    let note = if f.note.is_empty() { String::new() } else { format!("  {}", f.note) };
                    writeln!(out, "  {:<22} {:>16} {:<3} {}{}", f.key, v, unit_label(f.key), f.provenance, note)?;
                }
                for (level, label) in p.level_labels {
                    writeln!(out, "  level {level}: {label}")?;
                }
                writeln!(out)?;
            }
            writeln!(out, "defaults (all presets):")?;
            for (k, v) in DEFAULTS {
                writeln!(out, "  {:<22} {:>16} {:<3} [default]", k, v.cells().join(" + i"), unit_label(k))?;
            }
            writeln!(out, "\nrequired keys without a default: {}", required_list())?;
        }
        Some(Format::Json) => {
            let list: Vec<Json> = presets
                .iter()
                .map(|p| {
                    json!({
                        "name": p.name,
                        "summary": p.summary,
                        "levels": p.level_labels.iter().map(|(a, b)| json!([a, b])).collect::<Vec<_>>(),
                        "fields": p.fields.iter().map(|f| json!({
                            "key": f.key,
                            "value": f.value.to_json(),
                            "unit": unit_label(f.key),
                            "provenance": f.provenance,
                            "note": f.note,
                        })).collect::<Vec<_>>(),
                    })
                })
                .collect();
            let defaults: Vec<Json> = DEFAULTS
                .iter()
                .map(|(k, v)| json!({"key": k, "value": v.to_json(), "unit": unit_label(k), "provenance": "default"}))
                .collect();
            serde_json::to_writer_pretty(&mut *out, &json!({"presets": list, "defaults": defaults}))
                .map_err(|e| CliError::Io(e.to_string()))?;
            out.push(b'\n');
        }
        Some(Format::Csv) => {
            let mut t = Table {
                columns: ["preset", "key", "value", "unit", "provenance", "note"].map(String::from).to_vec(),
                rows: Vec::new(),
            };
            for p in presets {
                for f in p.fields {
                    t.push(vec![
                        Cell::Text(p.name.into()),
                        Cell::Text(f.key.into()),
                        Cell::Text(f.value.to_json().to_string()),
                        Cell::Text(unit_label(f.key).into()),
                        Cell::Text(f.provenance.to_string()),
                        Cell::Text(f.note.into()),
                    ]);
                }
            }
            for (k, v) in DEFAULTS {
                t.push(vec![
                    Cell::Text("*".into()),
                    Cell::Text((*k).into()),
                    Cell::Text(v.to_json().to_string()),
                    Cell::Text(unit_label(k).into()),
                    Cell::Text("[default]".into()),
                    Cell::Empty,
                ]);
            }
            t.write_csv(&mut *out).map_err(|e| CliError::Io(e.to_string()))?;
        }
    }
    Ok(())
}

fn required_list() -> String {
    KEYS.iter().filter(|k| k.required).map(|k| k.name).collect::<Vec<_>>().join(", ")
}
