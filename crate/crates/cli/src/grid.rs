//! Sweep grids: `key=a,b,c` or `key=start:stop:n` (inclusive, n points).
//!
//! Besides the configuration keys, the virtual key `p_ratio` sets the write
//! Rabi frequency of species I so that `|P_I| / |P_II|` takes the given
//! value, keeping the phase of `Ω_WI`.

use num_complex::Complex64;
use serde_json::Value as Json;

use crate::config::{parse_value, spec, Config, ConfigError, Provenance, Value};

pub const P_RATIO: &str = "p_ratio";
const MAX_POINTS: usize = 100_000;

#[derive(Debug, Clone, PartialEq)]
pub struct GridAxis {
    pub key: String,
    pub values: Vec<Json>,
}

pub fn parse_axis(text: &str) -> Result<GridAxis, ConfigError> {
    let (key, body) = text
        .split_once('=')
        .ok_or_else(|| ConfigError::Syntax(format!("grid must look like key=a,b,c or key=start:stop:n, got `{text}`")))?;
    let key = key.trim();
    let body = body.trim();
    let known = key == P_RATIO || spec(key).is_some();
    if !known {
        return Err(ConfigError::UnknownKey(key.to_string()));
    }
    let bad = |msg: String| ConfigError::invalid(key, msg);

    let values: Vec<Json> = if body.contains(':') {
        let parts: Vec<&str> = body.split(':').map(str::trim).collect();
        let [a, b, n] = parts[..] else {
            return Err(bad(format!("range must be start:stop:n, got `{body}`")));
        };
        let num = |s: &str| -> Result<f64, ConfigError> {
            s.parse::<f64>()
                .ok()
                .filter(|x| x.is_finite())
                .ok_or_else(|| bad(format!("`{s}` is not a finite number")))
        };
        let (start, stop) = (num(a)?, num(b)?);
        let n: usize = n.parse().map_err(|_| bad(format!("point count `{n}` is not a positive integer")))?;
        if n == 0 || n > MAX_POINTS {
            return Err(bad(format!("point count must be between 1 and {MAX_POINTS}")));
        }
        (0..n)
            .map(|k| {
                let x = if n == 1 { start } else { start + (stop - start) * k as f64 / (n - 1) as f64 };
                Json::from(x)
            })
            .collect()
    } else {
        body.split(',')
            .map(str::trim)
            .map(|s| {
                if s.is_empty() {
                    return Err(bad("empty grid value".into()));
                }
                Ok(serde_json::from_str(s).unwrap_or_else(|_| Json::String(s.to_string())))
            })
            .collect::<Result<_, _>>()?
    };
    if values.len() > MAX_POINTS {
        return Err(bad(format!("at most {MAX_POINTS} points per axis")));
    }
    for v in &values {
        if key == P_RATIO {
            ratio(v)?;
        } else {
            parse_value(key, v)?;
        }
    }
    Ok(GridAxis { key: key.to_string(), values })
}

fn ratio(v: &Json) -> Result<f64, ConfigError> {
    v.as_f64()
        .filter(|x| x.is_finite() && *x >= 0.0)
        .ok_or_else(|| ConfigError::invalid(P_RATIO, format!("ratio must be a number >= 0, got {v}")))
}

/// Cartesian product, first axis outermost.
pub fn points(axes: &[GridAxis]) -> Result<Vec<Vec<(&str, &Json)>>, ConfigError> {
    if axes.is_empty() {
        return Err(ConfigError::Syntax("sweep needs at least one --grid".into()));
    }
    let total = axes.iter().try_fold(1usize, |acc, a| acc.checked_mul(a.values.len()));
    match total {
        Some(n) if n <= MAX_POINTS => {}
        _ => return Err(ConfigError::Syntax(format!("grid has more than {MAX_POINTS} points"))),
    }
    let mut out: Vec<Vec<(&str, &Json)>> = vec![Vec::new()];
    for axis in axes {
        out = out
            .into_iter()
            .flat_map(|prefix| {
                axis.values.iter().map(move |v| {
                    let mut p = prefix.clone();
                    p.push((axis.key.as_str(), v));
                    p
                })
            })
            .collect();
    }
    Ok(out)
}

/// Apply one grid point on top of `base`.
pub fn apply(base: &Config, point: &[(&str, &Json)]) -> Result<Config, ConfigError> {
    let mut cfg = base.clone();
    for &(key, raw) in point {
        if key == P_RATIO {
            set_ratio(&mut cfg, ratio(raw)?)?;
            continue;
        }
        let value = parse_value(key, raw)?;
        cfg.insert(key, value, Provenance::User)?;
        if key == "gamma_gs" && cfg.get("gamma_gs_II").map(|e| e.provenance) == Some(Provenance::Default) {
            cfg.insert("gamma_gs_II", value, Provenance::Default)?;
        }
    }
    cfg.to_protocol()?;
    Ok(cfg)
}

fn set_ratio(cfg: &mut Config, r: f64) -> Result<(), ConfigError> {
    let lever = |g: &str, n: &str| cfg.real(g) * cfg.real(n).sqrt();
    let (li, lii) = (lever("g_I", "N_I"), lever("g_II", "N_II"));
    if li == 0.0 {
        return Err(ConfigError::invalid(P_RATIO, "g_I = 0: species I cannot be driven"));
    }
    let w_ii = cfg.complex("omega_rabi_write_II").norm();
    let w_i = cfg.complex("omega_rabi_write_I");
    let magnitude = r * w_ii * lii / li;
    let phase = if w_i.norm() > 0.0 { w_i.arg() } else { 0.0 };
    let z = Complex64::from_polar(magnitude, phase);
    cfg.insert("omega_rabi_write_I", Value::Complex(z.re, z.im), Provenance::User)
}
