//! Frozen regression runs.
//!
//! `manifest.json` lists fixtures as `{name, config, tolerances}`; configs are
//! relative to the fixture directory and expected tables live in
//! `expected/<name>/<table>.csv`. Columns named in `tolerances` compare as
//! numbers to that absolute tolerance, all others as exact strings.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::config;
use crate::experiments::compute;
use crate::output::Table;
use crate::{LabError, Result};

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct FixtureManifest {
    pub fixtures: Vec<Fixture>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Fixture {
    pub name: String,
    pub config: PathBuf,
    #[serde(default)]
    pub tolerances: BTreeMap<String, f64>,
}

#[derive(Clone, Debug)]
pub struct FixtureOutcome {
    pub name: String,
    pub tables: usize,
    /// Empty when every table matches.
    pub diffs: Vec<String>,
}

impl FixtureOutcome {
    pub fn passed(&self) -> bool {
        self.diffs.is_empty()
    }
}

pub fn load_manifest(dir: &Path) -> Result<FixtureManifest> {
    let path = dir.join("manifest.json");
    let text = std::fs::read_to_string(&path).map_err(|e| LabError::Io(format!("{}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| LabError::Config(format!("{}: {e}", path.display())))
}

pub fn config_path(dir: &Path, f: &Fixture) -> PathBuf {
    dir.join(&f.config)
}

fn run_fixture(dir: &Path, f: &Fixture, threads: usize) -> Result<Vec<Table>> {
    let loaded = config::load(&config_path(dir, f))?;
    compute(&loaded, loaded.config.seed, threads)
}

/// Re-runs every fixture. `only` restricts to the named ones.
pub fn check(dir: &Path, threads: usize, only: &[String]) -> Result<Vec<FixtureOutcome>> {
    let m = load_manifest(dir)?;
    let mut out = Vec::new();
    for f in m.fixtures.iter().filter(|f| only.is_empty() || only.contains(&f.name)) {
        let tables = run_fixture(dir, f, threads)?;
        let mut diffs = Vec::new();
        let exp_dir = dir.join("expected").join(&f.name);
        for t in &tables {
            let path = exp_dir.join(format!("{}.csv", t.name));
            match Table::read(&path) {
                Ok(e) => diffs.extend(compare(&e, t, &f.tolerances).into_iter().map(|d| format!("{}: {d}", t.name))),
                Err(_) => diffs.push(format!("{}: no frozen table at {}", t.name, path.display())),
            }
        }
        out.push(FixtureOutcome {
            name: f.name.clone(),
            tables: tables.len(),
            diffs,
        });
    }
    Ok(out)
}

/// Overwrites the expected tables with fresh runs.
pub fn freeze(dir: &Path, threads: usize, only: &[String]) -> Result<Vec<PathBuf>> {
    let m = load_manifest(dir)?;
    let mut written = Vec::new();
    for f in m.fixtures.iter().filter(|f| only.is_empty() || only.contains(&f.name)) {
        let tables = run_fixture(dir, f, threads)?;
        let exp_dir = dir.join("expected").join(&f.name);
        std::fs::create_dir_all(&exp_dir)?;
        for t in &tables {
            let p = exp_dir.join(format!("{}.csv", t.name));
            std::fs::write(&p, t.to_csv()?)?;
            written.push(p);
        }
    }
    Ok(written)
}

/// Differences between a frozen and a fresh table, at most one per cell.
pub fn compare(expected: &Table, actual: &Table, tol: &BTreeMap<String, f64>) -> Vec<String> {
    let mut d = Vec::new();
    if expected.header != actual.header {
        d.push(format!("header {:?} != {:?}", expected.header, actual.header));
        return d;
    }
    if expected.rows.len() != actual.rows.len() {
        d.push(format!("{} rows frozen, {} now", expected.rows.len(), actual.rows.len()));
        return d;
    }
    for (r, (er, ar)) in expected.rows.iter().zip(&actual.rows).enumerate() {
        for (c, (e, a)) in er.iter().zip(ar).enumerate() {
            let col = &expected.header[c];
            let ok = match tol.get(col) {
                Some(&t) => close(e, a, t),
                None => e == a,
            };
            if !ok {
                d.push(format!("row {r} column {col}: frozen {e}, now {a}"));
            }
        }
    }
    d
}

fn close(e: &str, a: &str, tol: f64) -> bool {
    match (e.parse::<f64>(), a.parse::<f64>()) {
        (Ok(x), Ok(y)) if x.is_finite() && y.is_finite() => (x - y).abs() <= tol,
        _ => e == a,
    }
}
