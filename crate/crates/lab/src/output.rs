//! CSV tables, their sidecar manifests and the run manifest.

use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::config::{sha256_hex, LoadedConfig};
use crate::Result;

#[derive(Clone, Debug, PartialEq)]
pub struct Table {
    /// File stem; written as `<name>.csv`.
    pub name: String,
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(name: &str, header: &[&str]) -> Self {
        Table {
            name: name.into(),
            header: header.iter().map(|s| s.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len(), "row width of {}", self.name);
        self.rows.push(row);
    }

    pub fn column(&self, name: &str) -> Option<usize> {
        self.header.iter().position(|h| h == name)
    }

    pub fn to_csv(&self) -> Result<Vec<u8>> {
        let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(Vec::new());
        let io = |e: csv::Error| crate::LabError::Io(e.to_string());
        w.write_record(&self.header).map_err(io)?;
        for r in &self.rows {
            w.write_record(r).map_err(io)?;
        }
        w.into_inner().map_err(|e| crate::LabError::Io(e.to_string()))
    }

    pub fn read(path: &Path) -> Result<Table> {
        let mut r = csv::Reader::from_path(path).map_err(|e| crate::LabError::Io(format!("{}: {e}", path.display())))?;
        let io = |e: csv::Error| crate::LabError::Io(format!("{}: {e}", path.display()));
        let header = r.headers().map_err(io)?.iter().map(String::from).collect();
        let mut rows = Vec::new();
        for rec in r.records() {
            rows.push(rec.map_err(io)?.iter().map(String::from).collect());
        }
        let name = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
        Ok(Table { name, header, rows })
    }
}

/// Shortest round-trip decimal, in exponent form outside `[1e-4, 1e16)`;
/// `inf`, `-inf`, `NaN` for the rest.
pub fn num(x: f64) -> String {
    let a = x.abs();
    if x != 0.0 && a.is_finite() && !(1e-4..1e16).contains(&a) {
        format!("{x:e}")
    } else {
        format!("{x}")
    }
}

pub fn opt(x: Option<f64>) -> String {
    x.map(num).unwrap_or_default()
}

#[derive(Clone, Debug, Default)]
pub struct RunOptions {
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
    /// Worker threads; defaults to the rayon default.
    pub threads: Option<usize>,
}

#[derive(Clone, Debug)]
pub struct RunSummary {
    pub out_dir: PathBuf,
    pub files: Vec<PathBuf>,
    pub manifest: PathBuf,
}

#[derive(Serialize)]
struct Sidecar<'a> {
    file: String,
    columns: &'a [String],
    rows: usize,
    sha256: String,
    seed: u64,
    config_sha256: &'a str,
}

#[derive(Serialize)]
struct Manifest<'a> {
    experiment: &'a str,
    config: String,
    config_sha256: &'a str,
    seed: u64,
    threads: usize,
    versions: Versions,
    wall_time_s: f64,
    files: Vec<String>,
}

#[derive(Serialize)]
struct Versions {
    gaplab: &'static str,
    gaplab_core: &'static str,
}

pub(crate) fn write_outputs(
    cfg: &LoadedConfig,
    seed: u64,
    threads: usize,
    out_dir: &Path,
    tables: &[Table],
    wall_time_s: f64,
) -> Result<RunSummary> {
    std::fs::create_dir_all(out_dir)?;
    let mut files = Vec::new();
    for t in tables {
        let bytes = t.to_csv()?;
        let file = format!("{}.csv", t.name);
        std::fs::write(out_dir.join(&file), &bytes)?;
        let side = Sidecar {
            file: file.clone(),
            columns: &t.header,
            rows: t.rows.len(),
            sha256: sha256_hex(&bytes),
            seed,
            config_sha256: &cfg.hash,
        };
        std::fs::write(out_dir.join(format!("{file}.json")), json(&side)?)?;
        files.push(out_dir.join(file));
    }
    let m = Manifest {
        experiment: cfg.config.experiment.name(),
        config: cfg.path.display().to_string(),
        config_sha256: &cfg.hash,
        seed,
        threads,
        versions: Versions {
            gaplab: env!("CARGO_PKG_VERSION"),
            gaplab_core: gaplab_core::VERSION,
        },
        wall_time_s,
        files: tables.iter().map(|t| format!("{}.csv", t.name)).collect(),
    };
    let manifest = out_dir.join("manifest.json");
    std::fs::write(&manifest, json(&m)?)?;
    Ok(RunSummary {
        out_dir: out_dir.to_path_buf(),
        files,
        manifest,
    })
}

fn json<T: Serialize>(v: &T) -> Result<String> {
    let mut s = serde_json::to_string_pretty(v).map_err(|e| crate::LabError::Io(e.to_string()))?;
    s.push('\n');
    Ok(s)
}
