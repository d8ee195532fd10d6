//! Tables and reports. CSV and JSON carry the same cells; JSON additionally
//! embeds the resolved configuration, its provenance and the master seed so
//! a report can be fed back through `--config`.

use std::io::Write;

use fme_core::protocol::{Estimate, ProtocolStats};
use serde_json::{json, Map, Value as Json};

use crate::config::{Config, Value};

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Float(f64),
    Int(u64),
    Bool(bool),
    Text(String),
    Empty,
}

impl Cell {
    pub fn csv(&self) -> String {
        match self {
            Cell::Float(x) => x.to_string(),
            Cell::Int(n) => n.to_string(),
            Cell::Bool(b) => b.to_string(),
            Cell::Text(s) => s.clone(),
            Cell::Empty => String::new(),
        }
    }

    /// NaN and empty cells become `null`.
    pub fn json(&self) -> Json {
        match self {
            Cell::Float(x) if x.is_finite() => json!(x),
            Cell::Float(_) | Cell::Empty => Json::Null,
            Cell::Int(n) => json!(n),
            Cell::Bool(b) => json!(b),
            Cell::Text(s) => json!(s),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Table {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn write_csv<W: Write>(&self, out: W) -> csv::Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(&self.columns)?;
        for row in &self.rows {
            w.write_record(row.iter().map(Cell::csv))?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn rows_json(&self) -> Json {
        Json::Array(
            self.rows
                .iter()
                .map(|row| {
                    Json::Object(self.columns.iter().cloned().zip(row.iter().map(Cell::json)).collect::<Map<_, _>>())
                })
                .collect(),
        )
    }
}

/// One cell per configuration column.
pub fn config_cells(cfg: &Config) -> (Vec<String>, Vec<Cell>) {
    let cells = cfg
        .iter()
        .flat_map(|(_, e)| match e.value {
            Value::Real(x) => vec![Cell::Float(x)],
            Value::Complex(re, im) => vec![Cell::Float(re), Cell::Float(im)],
            Value::Count(n) => vec![Cell::Int(n)],
            Value::Engine(w) => vec![Cell::Text(w.to_string())],
        })
        .collect();
    (cfg.columns(), cells)
}

fn estimate(name: &str, e: &Estimate, cols: &mut Vec<String>, cells: &mut Vec<Cell>) {
    cols.push(name.to_string());
    cells.push(Cell::Float(e.mean));
    cols.push(format!("{name}_err"));
    cells.push(Cell::Float(e.std_err));
}

/// Statistics columns, units in the names.
pub fn stats_cells(s: &ProtocolStats, p_click_analytic: f64, false_analytic: f64) -> (Vec<String>, Vec<Cell>) {
    let mut cols = vec!["n_runs".to_string(), "n_trials".to_string(), "n_clicks".to_string()];
    let mut cells = vec![Cell::Int(s.n_runs), Cell::Int(s.n_trials), Cell::Int(s.n_clicks)];
    estimate("p_click", &s.p_click, &mut cols, &mut cells);
    cols.push("p_click_analytic".into());
    cells.push(Cell::Float(p_click_analytic));
    estimate("success_fraction", &s.success_fraction, &mut cols, &mut cells);
    estimate("mean_trials", &s.mean_trials_to_success, &mut cols, &mut cells);
    estimate("mean_time_s", &s.mean_time_to_success, &mut cols, &mut cells);
    estimate("false_herald_fraction", &s.false_herald_fraction, &mut cols, &mut cells);
    cols.push("false_herald_analytic".into());
    cells.push(Cell::Float(false_analytic));
    estimate("concurrence", &s.mean_concurrence, &mut cols, &mut cells);
    estimate("fidelity_bell", &s.mean_fidelity_bell, &mut cols, &mut cells);
    estimate("photons_per_click", &s.photon_yield, &mut cols, &mut cells);
    (cols, cells)
}

/// Flatten a JSON value into `prefix_key` columns; arrays get `_<index>`.
pub fn flatten(prefix: &str, v: &Json, cols: &mut Vec<String>, cells: &mut Vec<Cell>) {
    let join = |k: &str| if prefix.is_empty() { k.to_string() } else { format!("{prefix}_{k}") };
    match v {
        Json::Object(m) => {
            for (k, x) in m {
                flatten(&join(k), x, cols, cells);
            }
        }
        Json::Array(items) => {
            for (i, x) in items.iter().enumerate() {
                flatten(&join(&i.to_string()), x, cols, cells);
            }
        }
        leaf => {
            cols.push(prefix.to_string());
            cells.push(match leaf {
                Json::Null => Cell::Empty,
                Json::Bool(b) => Cell::Bool(*b),
                Json::Number(n) => match n.as_u64() {
                    Some(u) => Cell::Int(u),
                    None => Cell::Float(n.as_f64().unwrap_or(f64::NAN)),
                },
                Json::String(s) => Cell::Text(s.clone()),
                _ => unreachable!(),
            });
        }
    }
}

/// Everything a subcommand emits.
#[derive(Debug, Clone)]
pub struct Report {
    pub command: &'static str,
    pub seed: u64,
    pub runs: Option<u64>,
    pub grid: Vec<String>,
    pub table: Table,
    /// Structured result for commands that are not naturally tabular.
    pub result: Option<Json>,
}

impl Report {
    pub fn to_json(&self, cfg: &Config) -> Json {
        let mut m = Map::new();
        m.insert("command".into(), json!(self.command));
        m.insert("config".into(), cfg.values_json());
        m.insert("provenance".into(), cfg.provenance_json());
        m.insert("seed".into(), json!(self.seed));
        if let Some(r) = self.runs {
            m.insert("runs".into(), json!(r));
        }
        if !self.grid.is_empty() {
            m.insert("grid".into(), json!(self.grid));
        }
        match &self.result {
            Some(r) => {
                m.insert("result".into(), r.clone());
            }
            None => {
                m.insert("rows".into(), self.table.rows_json());
            }
        }
        Json::Object(m)
    }

    pub fn write_json<W: Write>(&self, cfg: &Config, mut out: W) -> std::io::Result<()> {
        serde_json::to_writer_pretty(&mut out, &self.to_json(cfg))?;
        out.write_all(b"\n")
    }
}
