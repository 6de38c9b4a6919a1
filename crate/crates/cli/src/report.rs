//! Experiment reports and their files: `report.json`, `tables/*.csv`,
//! `plots/*.svg`. Wall-clock times go to a separate `timing.json` so that
//! reruns with the same seed give byte-identical reports.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::config::ExperimentConfig;
use crate::CliError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Cell {
    pub label: String,
    pub seed: u64,
    pub values: BTreeMap<String, Value>,
}

impl Cell {
    pub fn new(label: impl Into<String>, seed: u64) -> Self {
        Self { label: label.into(), seed, values: BTreeMap::new() }
    }

    pub fn set(&mut self, key: &str, value: impl Serialize) -> &mut Self {
        self.values.insert(key.to_string(), serde_json::to_value(value).expect("serializable value"));
        self
    }

    pub fn get_f64(&self, key: &str) -> Option<f64> {
        self.values.get(key).and_then(Value::as_f64)
    }
}

/// One checked assertion. Only `hard` verdicts decide the exit code.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Verdict {
    pub name: String,
    pub hard: bool,
    pub pass: bool,
    pub observed: f64,
    pub threshold: f64,
    pub detail: String,
}

impl Verdict {
    /// `observed <= threshold`.
    pub fn at_most(name: impl Into<String>, observed: f64, threshold: f64) -> Self {
        Self::new(name, observed <= threshold, observed, threshold, format!("{observed} <= {threshold}"))
    }

    /// `observed >= threshold`.
    pub fn at_least(name: impl Into<String>, observed: f64, threshold: f64) -> Self {
        Self::new(name, observed >= threshold, observed, threshold, format!("{observed} >= {threshold}"))
    }

    pub fn new(name: impl Into<String>, pass: bool, observed: f64, threshold: f64, detail: String) -> Self {
        Self { name: name.into(), hard: true, pass, observed, threshold, detail }
    }

    pub fn soft(mut self) -> Self {
        self.hard = false;
        self
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Table {
    pub name: String,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Value>>,
}

impl Table {
    pub fn new(name: &str, columns: &[&str]) -> Self {
        Self { name: name.into(), columns: columns.iter().map(|c| c.to_string()).collect(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<Value>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Series {
    pub label: String,
    pub points: Vec<(f64, f64)>,
    /// Drawn as a dashed reference line instead of markers and segments.
    #[serde(default)]
    pub reference: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Plot {
    pub name: String,
    pub title: String,
    pub x_label: String,
    pub y_label: String,
    pub log_x: bool,
    pub series: Vec<Series>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub experiment: String,
    pub seed: u64,
    /// The configuration as given, with the seed filled in.
    pub config: ExperimentConfig,
    /// Grids, budgets and thresholds after defaults were applied.
    pub parameters: BTreeMap<String, Value>,
    pub cells: Vec<Cell>,
    pub verdicts: Vec<Verdict>,
    pub passed: bool,
    pub tables: Vec<Table>,
    pub plots: Vec<Plot>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub children: Vec<ExperimentReport>,
}

impl ExperimentReport {
    pub fn failed_verdicts(&self) -> Vec<&Verdict> {
        let mut out: Vec<&Verdict> = self.verdicts.iter().filter(|v| v.hard && !v.pass).collect();
        for c in &self.children {
            out.extend(c.failed_verdicts());
        }
        out
    }
}

fn io(path: &Path, e: impl std::fmt::Display) -> CliError {
    CliError::Io(format!("{}: {e}", path.display()))
}

pub fn to_json(report: &ExperimentReport) -> String {
    let mut s = serde_json::to_string_pretty(report).expect("report serializes");
    s.push('\n');
    s
}

fn cell_text(v: &Value) -> String {
    match v {
        Value::String(s) => s.clone(),
        Value::Null => String::new(),
        other => other.to_string(),
    }
}

pub fn write_table(table: &Table, dir: &Path) -> Result<(), CliError> {
    let path = dir.join(format!("{}.csv", table.name));
    let mut w = csv::Writer::from_path(&path).map_err(|e| io(&path, e))?;
    w.write_record(&table.columns).map_err(|e| io(&path, e))?;
    for row in &table.rows {
        w.write_record(row.iter().map(cell_text)).map_err(|e| io(&path, e))?;
    }
    w.flush().map_err(|e| io(&path, e))
}

/// Writes `report.json`, the tables and the plots under `dir`; child
/// reports go to subdirectories named after their experiment.
pub fn write_outputs(report: &ExperimentReport, dir: &Path) -> Result<(), CliError> {
    fs::create_dir_all(dir).map_err(|e| io(dir, e))?;
    let path = dir.join("report.json");
    fs::write(&path, to_json(report)).map_err(|e| io(&path, e))?;
    if !report.tables.is_empty() {
        let tdir = dir.join("tables");
        fs::create_dir_all(&tdir).map_err(|e| io(&tdir, e))?;
        for t in &report.tables {
            write_table(t, &tdir)?;
        }
    }
    crate::plots::emit_plots(report, &dir.join("plots"))?;
    for child in &report.children {
        write_outputs(child, &dir.join(&child.experiment))?;
    }
    Ok(())
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct Timing {
    pub total_seconds: f64,
    pub experiments: BTreeMap<String, f64>,
}

pub fn write_timing(timing: &Timing, dir: &Path) -> Result<(), CliError> {
    fs::create_dir_all(dir).map_err(|e| io(dir, e))?;
    let path = dir.join("timing.json");
    let text = serde_json::to_string_pretty(timing).expect("timing serializes");
    fs::write(&path, text + "\n").map_err(|e| io(&path, e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    fn report(plots: Vec<Plot>) -> ExperimentReport {
        let mut cell = Cell::new("a", 1);
        cell.set("x", 0.5);
        let mut table = Table::new("t", &["label", "x"]);
        table.push(vec![json!("a, b"), json!(0.5)]);
        ExperimentReport {
            experiment: "demo".into(),
            seed: 1,
            config: ExperimentConfig::default(),
            parameters: BTreeMap::new(),
            cells: vec![cell],
            verdicts: vec![Verdict::at_most("x", 0.5, 1.0), Verdict::at_least("y", 0.5, 1.0).soft()],
            passed: true,
            tables: vec![table],
            plots,
            children: Vec::new(),
        }
    }

    #[test]
    fn verdict_directions() {
        assert!(Verdict::at_most("a", 1.0, 1.0).pass);
        assert!(!Verdict::at_most("a", 1.5, 1.0).pass);
        assert!(Verdict::at_least("a", 1.0, 1.0).pass);
        assert!(!Verdict::at_least("a", f64::NAN, 1.0).pass);
        let r = report(Vec::new());
        assert!(r.failed_verdicts().is_empty(), "soft failures are not reported");
    }

    #[test]
    fn outputs_without_plots() {
        let dir = tempfile::tempdir().unwrap();
        let r = report(Vec::new());
        write_outputs(&r, dir.path()).unwrap();
        assert!(!dir.path().join("plots").exists());
        let csv = fs::read_to_string(dir.path().join("tables/t.csv")).unwrap();
        assert_eq!(csv, "label,x\n\"a, b\",0.5\n");
        let back: ExperimentReport = serde_json::from_str(&fs::read_to_string(dir.path().join("report.json")).unwrap()).unwrap();
        assert_eq!(back, r);
        assert_eq!(back.cells[0].get_f64("x"), Some(0.5));
    }

    #[test]
    fn plots_are_deterministic_svg() {
        let plot = Plot {
            name: "p".into(),
            title: "demo".into(),
            x_label: "x".into(),
            y_label: "y".into(),
            log_x: true,
            series: vec![
                Series { label: "data".into(), points: vec![(1.0, 1.0), (10.0, 2.0), (100.0, 2.5)], reference: false },
                Series { label: "bound".into(), points: vec![(1.0, 3.0), (100.0, 3.0)], reference: true },
            ],
        };
        let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
        write_outputs(&report(vec![plot.clone()]), a.path()).unwrap();
        write_outputs(&report(vec![plot]), b.path()).unwrap();
        let sa = fs::read(a.path().join("plots/p.svg")).unwrap();
        assert!(sa.starts_with(b"<svg"));
        assert_eq!(sa, fs::read(b.path().join("plots/p.svg")).unwrap());
    }
}
