//! Output files: atomic writes, CSV/text formatting and the run manifest.

use std::fmt::Write as _;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use chrono::{SecondsFormat, Utc};
use dcs_core::sweep::SweepResult;
use serde::Serialize;

use crate::error::{CliError, Result};

/// Directory that records every file written into it.
#[derive(Debug)]
pub struct OutputDir {
    dir: PathBuf,
    written: Vec<PathBuf>,
}

impl OutputDir {
    pub fn create(dir: &Path) -> Result<Self> {
        std::fs::create_dir_all(dir).map_err(|source| CliError::WriteOutput {
            path: dir.to_path_buf(),
            source,
        })?;
        Ok(OutputDir {
            dir: dir.to_path_buf(),
            written: Vec::new(),
        })
    }

    /// Writes `name` via a temporary file in the same directory and a rename,
    /// so readers never observe a partially written file.
    pub fn write(&mut self, name: &str, bytes: &[u8]) -> Result<PathBuf> {
        let path = self.dir.join(name);
        write_atomic(&path, bytes)?;
        self.written.push(path.clone());
        Ok(path)
    }

    pub fn written(&self) -> &[PathBuf] {
        &self.written
    }
}

pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let err = |source| CliError::WriteOutput {
        path: path.to_path_buf(),
        source,
    };
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(err)?;
    tmp.write_all(bytes).map_err(err)?;
    tmp.as_file().sync_all().map_err(err)?;
    tmp.persist(path).map_err(|e| err(e.error))?;
    Ok(())
}

/// Provenance of one CLI invocation.
#[derive(Debug, Serialize)]
pub struct RunManifest {
    pub command: String,
    /// `None` when the built-in default config was used.
    pub config_path: Option<String>,
    /// SHA-256 of the config bytes as read.
    pub config_hash: String,
    pub tool_version: String,
    pub started_at: String,
    pub finished_at: String,
    pub outputs: Vec<String>,
}

pub fn timestamp() -> String {
    Utc::now().to_rfc3339_opts(SecondsFormat::Millis, true)
}

impl RunManifest {
    pub fn new(command: &str, config_path: Option<&Path>, config_hash: &str, started_at: String) -> Self {
        RunManifest {
            command: command.to_string(),
            config_path: config_path.map(|p| p.display().to_string()),
            config_hash: config_hash.to_string(),
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            started_at,
            finished_at: String::new(),
            outputs: Vec::new(),
        }
    }

    /// Stamps the finish time and writes `manifest.json` into `out`.
    pub fn finish(mut self, out: &mut OutputDir) -> Result<PathBuf> {
        self.outputs = out.written().iter().map(|p| p.display().to_string()).collect();
        self.finished_at = timestamp();
        let mut text = serde_json::to_string_pretty(&self).expect("manifest serializes");
        text.push('\n');
        out.write("manifest.json", text.as_bytes())
    }
}

fn csv_bytes(header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> Vec<u8> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header).expect("in-memory write");
    for row in rows {
        w.write_record(&row).expect("in-memory write");
    }
    w.into_inner().expect("in-memory flush")
}

/// Shortest decimal that parses back to the same `f64`.
pub fn num(v: f64) -> String {
    format!("{v}")
}

pub const CELLS_HEADER: [&str; 8] = [
    "surface",
    "noise",
    "lambda",
    "delta",
    "mean_snr_db",
    "std_snr_db",
    "trials",
    "failures",
];

pub fn cells_csv(results: &[SweepResult]) -> Vec<u8> {
    let rows = results.iter().flat_map(|res| {
        res.records.iter().map(move |r| {
            vec![
                res.surface.clone(),
                res.noise.name().to_string(),
                num(r.lambda),
                num(r.delta),
                num(r.mean_snr_db),
                num(r.std_snr_db),
                r.trials.to_string(),
                r.failures.to_string(),
            ]
        })
    });
    csv_bytes(&CELLS_HEADER, rows)
}

pub const OPTIMAL_HEADER: [&str; 5] = ["surface", "noise", "lambda_star", "delta_star", "mean_snr_db"];

/// One row per (surface, noise); cells that all failed leave the optimum empty.
pub fn optimal_csv(results: &[SweepResult]) -> Vec<u8> {
    let rows = results.iter().map(|res| {
        let mut row = vec![res.surface.clone(), res.noise.name().to_string()];
        match res.best {
            Some(b) => row.extend([num(b.lambda_star), num(b.delta_star), num(b.mean_snr_db)]),
            None => row.extend([String::new(), String::new(), String::new()]),
        }
        row
    });
    csv_bytes(&OPTIMAL_HEADER, rows)
}

/// Whitespace-separated `lambda delta mean_snr_db` triples, one gnuplot
/// data block per (surface, noise) with a blank line after each λ row.
pub fn heatmap_dat(results: &[SweepResult]) -> Vec<u8> {
    let mut s = String::new();
    for (i, res) in results.iter().enumerate() {
        if i > 0 {
            s.push_str("\n\n");
        }
        let _ = writeln!(s, "# surface: {}", res.surface);
        let _ = writeln!(s, "# noise: {}", res.noise);
        s.push_str("# lambda delta mean_snr_db\n");
        let mut last_lambda = None;
        for r in &res.records {
            if last_lambda.is_some_and(|l| l != r.lambda_index) {
                s.push('\n');
            }
            last_lambda = Some(r.lambda_index);
            let _ = writeln!(s, "{} {} {}", num(r.lambda), num(r.delta), num(r.mean_snr_db));
        }
    }
    s.into_bytes()
}

pub fn grid_csv(rows: usize, cols: usize, z: &[f64]) -> Vec<u8> {
    let mut s = String::with_capacity(z.len() * 20);
    for r in 0..rows {
        for c in 0..cols {
            if c > 0 {
                s.push(',');
            }
            s.push_str(&num(z[r * cols + c]));
        }
        s.push('\n');
    }
    s.into_bytes()
}
