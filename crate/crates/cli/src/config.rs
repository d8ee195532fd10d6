//! Flat key/value configuration: schema, layering, validation and the single
//! Hz → rad/s conversion into the simulator's types.
//!
//! Layers are applied in order: the defaults table, an optional preset, an
//! optional JSON file, then `--set` overrides. Every resolved value carries
//! the provenance of the layer that supplied it.

use std::collections::BTreeMap;
use std::fmt;

use fme_core::herald::DetectorModel;
use fme_core::hilbert::MAX_CUTOFF;
use fme_core::protocol::{ProtocolConfig, TimingSequence, WriteEngine};
use fme_core::retrieval::ReadParams;
use fme_core::write_dynamics::{SpeciesPair, SystemParams};
use fme_core::hz_to_rad;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use serde_json::{json, Map, Value as Json};

use crate::presets::Preset;

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum ConfigError {
    #[error("unknown configuration key `{0}`")]
    UnknownKey(String),
    #[error("missing required keys: {}", .0.join(", "))]
    Missing(Vec<String>),
    #[error("`{key}`: {msg}")]
    Invalid { key: String, msg: String },
    #[error("unknown preset `{0}` (see `preset-list`)")]
    UnknownPreset(String),
    #[error("malformed configuration: {0}")]
    Syntax(String),
    #[error("inconsistent configuration: {0}")]
    Inconsistent(String),
}

impl ConfigError {
    pub(crate) fn invalid(key: &str, msg: impl Into<String>) -> Self {
        ConfigError::Invalid { key: key.to_string(), msg: msg.into() }
    }
}

/// Where a resolved value came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Provenance {
    /// A published value for the physical system.
    Paper,
    /// Chosen default from the defaults table or a preset.
    Default,
    /// Supplied by the user.
    User,
}

impl fmt::Display for Provenance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Provenance::Paper => "[paper]",
            Provenance::Default => "[default]",
            Provenance::User => "[user]",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Kind {
    Real,
    /// A number or `[re, im]`.
    Complex,
    Count,
    Engine,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Unit {
    /// Cycles per second; converted to rad/s by 2π.
    Hz,
    /// Events per second; not converted.
    PerSecond,
    Seconds,
    Radians,
    None,
}

impl Unit {
    pub fn label(self) -> &'static str {
        match self {
            Unit::Hz => "Hz",
            Unit::PerSecond => "1/s",
            Unit::Seconds => "s",
            Unit::Radians => "rad",
            Unit::None => "",
        }
    }

    fn suffix(self) -> &'static str {
        match self {
            Unit::Hz => "_hz",
            Unit::PerSecond => "_hz",
            Unit::Seconds => "_s",
            Unit::Radians => "_rad",
            Unit::None => "",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Range {
    Any,
    NonZero,
    NonNegative,
    Positive,
    AtLeastOne,
    Probability,
    Cutoff,
}

pub struct KeySpec {
    pub name: &'static str,
    pub kind: Kind,
    pub unit: Unit,
    range: Range,
    pub required: bool,
    pub doc: &'static str,
}

const fn key(name: &'static str, kind: Kind, unit: Unit, range: Range, required: bool, doc: &'static str) -> KeySpec {
    KeySpec { name, kind, unit, range, required, doc }
}

use Kind::*;
use Range::*;

/// Every accepted key, in output column order.
pub static KEYS: &[KeySpec] = &[
    key("g_I", Real, Unit::Hz, NonNegative, true, "atom-field coupling, species I"),
    key("g_II", Real, Unit::Hz, NonNegative, true, "atom-field coupling, species II"),
    key("N_I", Real, Unit::None, AtLeastOne, true, "atom number, species I"),
    key("N_II", Real, Unit::None, AtLeastOne, true, "atom number, species II"),
    key("omega_rabi_write_I", Complex, Unit::Hz, Any, true, "write Rabi frequency, species I"),
    key("omega_rabi_write_II", Complex, Unit::Hz, Any, true, "write Rabi frequency, species II"),
    key("delta", Real, Unit::Hz, NonZero, true, "one-photon detuning"),
    key("kappa", Real, Unit::Hz, NonNegative, true, "Stokes mode decay"),
    key("gamma_1", Real, Unit::Hz, NonNegative, true, "excited-state coherence decay, species I"),
    key("gamma_2", Real, Unit::Hz, NonNegative, true, "excited-state coherence decay, species II"),
    key("gamma_gs", Real, Unit::Hz, NonNegative, true, "ground-state coherence decay, species I"),
    key("gamma_gs_II", Real, Unit::Hz, NonNegative, false, "ground-state coherence decay, species II (defaults to gamma_gs)"),
    key("tau_write", Real, Unit::Seconds, NonNegative, true, "write pulse duration"),
    key("eta", Real, Unit::None, Probability, false, "detector efficiency"),
    key("dark_rate_hz", Real, Unit::PerSecond, NonNegative, true, "detector dark-count rate"),
    key("gate_s", Real, Unit::Seconds, Positive, false, "detector gate duration"),
    key("tau_read", Real, Unit::Seconds, NonNegative, false, "read pulse duration"),
    key("cycle_period", Real, Unit::Seconds, Positive, false, "repetition period of the pulse sequence"),
    key("max_trials", Count, Unit::None, AtLeastOne, false, "trials per run before giving up"),
    key("cutoff", Count, Unit::None, Cutoff, false, "Fock cutoff per mode"),
    key("engine", Engine, Unit::None, Any, false, "write-stage engine: perturbative or exact"),
    key("g_read_I", Real, Unit::Hz, NonNegative, true, "read-transition coupling, species I"),
    key("g_read_II", Real, Unit::Hz, NonNegative, true, "read-transition coupling, species II"),
    key("omega_rabi_read_I", Real, Unit::Hz, Positive, true, "read Rabi frequency, species I"),
    key("omega_rabi_read_II", Real, Unit::Hz, Positive, true, "read Rabi frequency, species II"),
    key("omega_out_I_hz", Real, Unit::Hz, Positive, true, "emitted photon frequency, species I"),
    key("omega_out_II_hz", Real, Unit::Hz, Positive, true, "emitted photon frequency, species II"),
    key("retrieval_eff_I", Real, Unit::None, Probability, false, "readout efficiency, species I"),
    key("retrieval_eff_II", Real, Unit::None, Probability, false, "readout efficiency, species II"),
    key("read_phase", Real, Unit::Radians, Any, false, "extra phase on the species-II output amplitude"),
    key("delta_omega_write_hz", Real, Unit::Hz, Any, false, "write sideband offset (informational)"),
    key("delta_omega_read_hz", Real, Unit::Hz, Any, false, "read sideband offset (informational)"),
];

pub fn spec(name: &str) -> Option<&'static KeySpec> {
    KEYS.iter().find(|k| k.name == name)
}

/// Chosen defaults, all tagged [default].
pub static DEFAULTS: &[(&str, Value)] = &[
    ("eta", Value::Real(0.6)),
    ("gate_s", Value::Real(1e-6)),
    ("tau_read", Value::Real(1e-6)),
    ("cycle_period", Value::Real(1e-5)),
    ("max_trials", Value::Count(10_000)),
    ("cutoff", Value::Count(2)),
    ("engine", Value::Engine(WriteEngine::Perturbative)),
    ("retrieval_eff_I", Value::Real(1.0)),
    ("retrieval_eff_II", Value::Real(1.0)),
    ("read_phase", Value::Real(0.0)),
];

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Value {
    Real(f64),
    Complex(f64, f64),
    Count(u64),
    Engine(WriteEngine),
}

impl Value {
    pub fn to_json(&self) -> Json {
        match *self {
            Value::Real(x) => json!(x),
            Value::Complex(re, im) => json!([re, im]),
            Value::Count(n) => json!(n),
            Value::Engine(e) => json!(e.to_string()),
        }
    }

    pub fn as_real(&self) -> f64 {
        match *self {
            Value::Real(x) => x,
            Value::Complex(re, _) => re,
            Value::Count(n) => n as f64,
            Value::Engine(_) => f64::NAN,
        }
    }

    pub fn as_complex(&self) -> Complex64 {
        match *self {
            Value::Complex(re, im) => Complex64::new(re, im),
            other => Complex64::new(other.as_real(), 0.0),
        }
    }

    /// CSV cells for this value (two for complex numbers).
    pub fn cells(&self) -> Vec<String> {
        match *self {
            Value::Real(x) => vec![x.to_string()],
            Value::Complex(re, im) => vec![re.to_string(), im.to_string()],
            Value::Count(n) => vec![n.to_string()],
            Value::Engine(e) => vec![e.to_string()],
        }
    }
}

/// Parse and range-check one value against the schema.
pub fn parse_value(name: &str, raw: &Json) -> Result<Value, ConfigError> {
    let spec = spec(name).ok_or_else(|| ConfigError::UnknownKey(name.to_string()))?;
    let number = |v: &Json| -> Result<f64, ConfigError> {
        let x = v.as_f64().ok_or_else(|| ConfigError::invalid(name, format!("expected a number, got {v}")))?;
        if !x.is_finite() {
            return Err(ConfigError::invalid(name, "value must be finite"));
        }
        Ok(x)
    };
    let value = match spec.kind {
        Kind::Real => Value::Real(number(raw)?),
        Kind::Complex => match raw {
            Json::Array(items) if items.len() == 2 => Value::Complex(number(&items[0])?, number(&items[1])?),
            Json::Array(_) => return Err(ConfigError::invalid(name, "complex values are written [re, im]")),
            other => Value::Complex(number(other)?, 0.0),
        },
        Kind::Count => {
            let x = number(raw)?;
            if x < 0.0 || x.fract() != 0.0 || x > u64::MAX as f64 {
                return Err(ConfigError::invalid(name, format!("expected a non-negative integer, got {raw}")));
            }
            Value::Count(x as u64)
        }
        Kind::Engine => {
            let s = raw
                .as_str()
                .ok_or_else(|| ConfigError::invalid(name, format!("expected a string, got {raw}")))?;
            Value::Engine(s.parse().map_err(|_| ConfigError::invalid(name, format!("unknown engine `{s}`; expected perturbative or exact")))?)
        }
    };
    check_range(name, spec.range, &value)?;
    Ok(value)
}

fn check_range(name: &str, range: Range, v: &Value) -> Result<(), ConfigError> {
    let x = v.as_real();
    let ok = match range {
        Range::Any => true,
        Range::NonZero => x != 0.0,
        Range::NonNegative => x >= 0.0,
        Range::Positive => x > 0.0,
        Range::AtLeastOne => x >= 1.0,
        Range::Probability => (0.0..=1.0).contains(&x),
        Range::Cutoff => (1.0..=MAX_CUTOFF as f64).contains(&x),
    };
    if ok {
        return Ok(());
    }
    let want = match range {
        Range::Any => "any value",
        Range::NonZero => "a nonzero value",
        Range::NonNegative => "a value >= 0",
        Range::Positive => "a value > 0",
        Range::AtLeastOne => "a value >= 1",
        Range::Probability => "a value in [0, 1]",
        Range::Cutoff => "a cutoff between 1 and 16",
    };
    Err(ConfigError::invalid(name, format!("out of range: got {x}, expected {want}")))
}

/// A resolved value and where it came from.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Entry {
    pub value: Value,
    pub provenance: Provenance,
}

/// Fully merged configuration. Keys are kept in schema order for output.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Config {
    entries: BTreeMap<&'static str, Entry>,
}

/// Report metadata that can accompany a config file written by this tool.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Embedded {
    pub seed: Option<u64>,
    pub runs: Option<u64>,
    pub grid: Vec<String>,
}

impl Config {
    pub fn get(&self, name: &str) -> Option<&Entry> {
        self.entries.get(name)
    }

    pub fn real(&self, name: &str) -> f64 {
        self.entries[name].value.as_real()
    }

    pub fn complex(&self, name: &str) -> Complex64 {
        self.entries[name].value.as_complex()
    }

    /// Entries in schema order.
    pub fn iter(&self) -> impl Iterator<Item = (&'static KeySpec, &Entry)> + '_ {
        KEYS.iter().filter_map(move |k| self.entries.get(k.name).map(|e| (k, e)))
    }

    pub fn insert(&mut self, name: &str, value: Value, provenance: Provenance) -> Result<(), ConfigError> {
        let spec = spec(name).ok_or_else(|| ConfigError::UnknownKey(name.to_string()))?;
        check_range(name, spec.range, &value)?;
        self.entries.insert(spec.name, Entry { value, provenance });
        Ok(())
    }

    /// Parse `value` (JSON text, or a bare word for strings) and set it.
    pub fn set_override(&mut self, assignment: &str) -> Result<(), ConfigError> {
        let (name, raw) = parse_assignment(assignment)?;
        let value = parse_value(name, &raw)?;
        self.insert(name, value, Provenance::User)
    }

    /// Merge a flat JSON object, or a report previously written by this
    /// tool (kept provenance and embedded seed/runs/grid).
    pub fn merge_json(&mut self, text: &str) -> Result<Embedded, ConfigError> {
        let doc: Json = serde_json::from_str(text).map_err(|e| ConfigError::Syntax(e.to_string()))?;
        let obj = doc.as_object().ok_or_else(|| ConfigError::Syntax("top level must be an object".into()))?;
        if let Some(Json::Object(inner)) = obj.get("config") {
            let prov = match obj.get("provenance") {
                Some(Json::Object(p)) => p.clone(),
                _ => Map::new(),
            };
            self.merge_object(inner, |name| {
                prov.get(name)
                    .and_then(|v| serde_json::from_value::<Provenance>(v.clone()).ok())
                    .unwrap_or(Provenance::User)
            })?;
            let int = |k: &str| -> Result<Option<u64>, ConfigError> {
                match obj.get(k) {
                    None | Some(Json::Null) => Ok(None),
                    Some(v) => v.as_u64().map(Some).ok_or_else(|| ConfigError::invalid(k, "expected an integer")),
                }
            };
            let grid = match obj.get("grid") {
                Some(Json::Array(items)) => items
                    .iter()
                    .map(|v| v.as_str().map(str::to_string).ok_or_else(|| ConfigError::invalid("grid", "expected strings")))
                    .collect::<Result<_, _>>()?,
                _ => Vec::new(),
            };
            return Ok(Embedded { seed: int("seed")?, runs: int("runs")?, grid });
        }
        self.merge_object(obj, |_| Provenance::User)?;
        Ok(Embedded::default())
    }

    fn merge_object(&mut self, obj: &Map<String, Json>, prov: impl Fn(&str) -> Provenance) -> Result<(), ConfigError> {
        for (name, raw) in obj {
            let value = parse_value(name, raw)?;
            self.insert(name, value, prov(name))?;
        }
        Ok(())
    }

    fn apply_preset(&mut self, preset: &Preset) -> Result<(), ConfigError> {
        for f in preset.fields {
            self.insert(f.key, f.value, f.provenance)?;
        }
        Ok(())
    }

    /// Error listing every missing required key; fills derived defaults.
    pub fn finish(&mut self) -> Result<(), ConfigError> {
        let missing: Vec<String> = KEYS
            .iter()
            .filter(|k| k.required && !self.entries.contains_key(k.name))
            .map(|k| k.name.to_string())
            .collect();
        if !missing.is_empty() {
            return Err(ConfigError::Missing(missing));
        }
        if !self.entries.contains_key("gamma_gs_II") {
            let v = self.entries["gamma_gs"].value;
            self.insert("gamma_gs_II", v, Provenance::Default)?;
        }
        self.to_protocol().map(|_| ())
    }

    pub fn engine(&self) -> WriteEngine {
        match self.entries.get("engine").map(|e| e.value) {
            Some(Value::Engine(e)) => e,
            _ => WriteEngine::default(),
        }
    }

    fn count(&self, name: &str) -> u64 {
        match self.entries[name].value {
            Value::Count(n) => n,
            other => other.as_real() as u64,
        }
    }

    /// Build simulator parameters. All frequencies are converted here and
    /// nowhere else.
    pub fn to_protocol(&self) -> Result<ProtocolConfig, ConfigError> {
        let rad = |k: &str| hz_to_rad(self.real(k));
        let pair = |a: &str, b: &str| SpeciesPair::new(rad(a), rad(b));
        let params = SystemParams {
            coupling: pair("g_I", "g_II"),
            atoms: SpeciesPair::new(self.real("N_I"), self.real("N_II")),
            omega_write: SpeciesPair::new(
                self.complex("omega_rabi_write_I") * hz_to_rad(1.0),
                self.complex("omega_rabi_write_II") * hz_to_rad(1.0),
            ),
            delta: rad("delta"),
            kappa: rad("kappa"),
            gamma_excited: pair("gamma_1", "gamma_2"),
            gamma_ground: pair("gamma_gs", "gamma_gs_II"),
            tau_write: self.real("tau_write"),
        };
        let gate = self.real("gate_s");
        let detector = DetectorModel { efficiency: self.real("eta"), dark_rate: self.real("dark_rate_hz"), gate };
        let read = ReadParams {
            coupling: pair("g_read_I", "g_read_II"),
            atoms: params.atoms,
            omega_read: pair("omega_rabi_read_I", "omega_rabi_read_II"),
            efficiency: SpeciesPair::new(self.real("retrieval_eff_I"), self.real("retrieval_eff_II")),
            relative_phase: self.real("read_phase"),
            omega_out: pair("omega_out_I_hz", "omega_out_II_hz"),
        };
        let timing = TimingSequence {
            tau_write: params.tau_write,
            detection_gate: gate,
            tau_read: self.real("tau_read"),
            cycle_period: self.real("cycle_period"),
            max_trials: self.count("max_trials"),
        };
        let cfg = ProtocolConfig {
            params,
            detector,
            read,
            timing,
            engine: self.engine(),
            cutoff: self.count("cutoff") as usize,
        };
        cfg.validate().map_err(|e| ConfigError::Inconsistent(e.to_string()))?;
        read.mixing_angles().map_err(|e| ConfigError::Inconsistent(e.to_string()))?;
        Ok(cfg)
    }

    /// `{key: value}` in schema order (serde_json maps sort keys).
    pub fn values_json(&self) -> Json {
        Json::Object(self.iter().map(|(k, e)| (k.name.to_string(), e.value.to_json())).collect())
    }

    pub fn provenance_json(&self) -> Json {
        Json::Object(self.iter().map(|(k, e)| (k.name.to_string(), json!(e.provenance))).collect())
    }

    /// CSV header cells with units in the names.
    pub fn columns(&self) -> Vec<String> {
        let mut cols = Vec::new();
        for (k, e) in self.iter() {
            let suffix = if k.name.ends_with(k.unit.suffix()) { "" } else { k.unit.suffix() };
            match e.value {
                Value::Complex(..) => {
                    cols.push(format!("{}_re{suffix}", k.name));
                    cols.push(format!("{}_im{suffix}", k.name));
                }
                _ => cols.push(format!("{}{suffix}", k.name)),
            }
        }
        cols
    }

    pub fn cells(&self) -> Vec<String> {
        self.iter().flat_map(|(_, e)| e.value.cells()).collect()
    }
}

/// Split `key=value`; the value is JSON, or a bare string if it is not.
pub fn parse_assignment(text: &str) -> Result<(&str, Json), ConfigError> {
    let (name, raw) = text
        .split_once('=')
        .ok_or_else(|| ConfigError::Syntax(format!("expected key=value, got `{text}`")))?;
    let name = name.trim();
    let raw = raw.trim();
    if name.is_empty() {
        return Err(ConfigError::Syntax(format!("empty key in `{text}`")));
    }
    let value = serde_json::from_str(raw).unwrap_or_else(|_| Json::String(raw.to_string()));
    Ok((name, value))
}

/// Inputs to [`load_config`].
#[derive(Debug, Clone, Default)]
pub struct Sources<'a> {
    pub preset: Option<&'a str>,
    /// Contents of the config file, if any.
    pub file: Option<&'a str>,
    pub overrides: &'a [String],
}

/// Resolve defaults, preset, file and overrides into a validated config.
pub fn load_config(src: &Sources<'_>) -> Result<(Config, Embedded), ConfigError> {
    let mut cfg = Config::default();
    for (name, value) in DEFAULTS {
        cfg.insert(name, *value, Provenance::Default)?;
    }
    if let Some(name) = src.preset {
        let preset = crate::presets::find(name).ok_or_else(|| ConfigError::UnknownPreset(name.to_string()))?;
        cfg.apply_preset(preset)?;
    }
    let embedded = match src.file {
        Some(text) => cfg.merge_json(text)?,
        None => Embedded::default(),
    };
    for o in src.overrides {
        cfg.set_override(o)?;
    }
    cfg.finish()?;
    Ok((cfg, embedded))
}

/// Shorthand for a config given entirely as JSON text.
pub fn load_config_text(text: &str) -> Result<Config, ConfigError> {
    load_config(&Sources { file: Some(text), ..Default::default() }).map(|(c, _)| c)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn full() -> Sources<'static> {
        Sources { preset: Some("rb85-87"), ..Default::default() }
    }

    #[test]
    fn preset_delta_converted_once() {
        let (cfg, _) = load_config(&full()).unwrap();
        let p = cfg.to_protocol().unwrap();
        assert_eq!(p.params.delta, 2.0 * std::f64::consts::PI * 1.368e9);
        assert_eq!(cfg.get("delta").unwrap().provenance, Provenance::Paper);
    }

    #[test]
    fn empty_config_lists_all_missing_keys() {
        let err = load_config(&Sources::default()).unwrap_err();
        let ConfigError::Missing(keys) = err else { panic!("{err:?}") };
        let want: Vec<&str> = KEYS.iter().filter(|k| k.required).map(|k| k.name).collect();
        assert_eq!(keys, want);
    }

    #[test]
    fn range_errors_name_the_key() {
        let over = ["eta=1.5".to_string()];
        let err = load_config(&Sources { overrides: &over, ..full() }).unwrap_err();
        assert!(matches!(&err, ConfigError::Invalid { key, .. } if key == "eta"), "{err}");
        assert!(err.to_string().contains("eta"));
    }

    #[test]
    fn unknown_keys_rejected() {
        let over = ["etaa=0.5".to_string()];
        let err = load_config(&Sources { overrides: &over, ..full() }).unwrap_err();
        assert_eq!(err, ConfigError::UnknownKey("etaa".into()));
        let err = load_config_text(r#"{"bogus": 1}"#).unwrap_err();
        assert_eq!(err, ConfigError::UnknownKey("bogus".into()));
    }

    #[test]
    fn overrides_are_user_provenance() {
        let over = ["eta=0.9".to_string(), "engine=exact".to_string(), "omega_rabi_write_I=[1e6, 2e5]".to_string()];
        let (cfg, _) = load_config(&Sources { overrides: &over, ..full() }).unwrap();
        assert_eq!(cfg.get("eta").unwrap().provenance, Provenance::User);
        assert_eq!(cfg.engine(), WriteEngine::Exact);
        assert_eq!(cfg.complex("omega_rabi_write_I"), Complex64::new(1e6, 2e5));
        assert_eq!(cfg.get("cutoff").unwrap().provenance, Provenance::Default);
    }

    #[test]
    fn counts_must_be_integers() {
        assert!(parse_value("cutoff", &json!(2.5)).is_err());
        assert!(parse_value("max_trials", &json!(0)).is_err());
        assert_eq!(parse_value("max_trials", &json!(1e4)).unwrap(), Value::Count(10_000));
        assert!(parse_value("cutoff", &json!(17)).is_err());
    }

    #[test]
    fn timing_must_fit_the_cycle() {
        let over = ["cycle_period=1e-6".to_string()];
        let err = load_config(&Sources { overrides: &over, ..full() }).unwrap_err();
        assert!(matches!(err, ConfigError::Inconsistent(_)), "{err}");
    }

    #[test]
    fn report_round_trip_keeps_provenance() {
        let (cfg, _) = load_config(&full()).unwrap();
        let report = json!({"config": cfg.values_json(), "provenance": cfg.provenance_json(), "seed": 7, "runs": 20});
        let (back, emb) = load_config(&Sources { file: Some(&report.to_string()), ..Default::default() }).unwrap();
        assert_eq!(back, cfg);
        assert_eq!(emb.seed, Some(7));
        assert_eq!(emb.runs, Some(20));
    }

    #[test]
    fn gamma_gs_ii_follows_gamma_gs() {
        let over = ["gamma_gs=123".to_string()];
        let (cfg, _) = load_config(&Sources { overrides: &over, ..full() }).unwrap();
        assert_eq!(cfg.real("gamma_gs_II"), 123.0);
    }

    #[test]
    fn columns_carry_units() {
        let (cfg, _) = load_config(&full()).unwrap();
        let cols = cfg.columns();
        assert!(cols.contains(&"delta_hz".to_string()));
        assert!(cols.contains(&"dark_rate_hz".to_string()));
        assert!(cols.contains(&"omega_rabi_write_I_re_hz".to_string()));
        assert!(cols.contains(&"tau_write_s".to_string()));
        assert!(cols.contains(&"gate_s".to_string()));
        assert_eq!(cols.len(), cfg.cells().len());
    }
}
