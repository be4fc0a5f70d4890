//! Synthetic test surfaces and height-map file I/O.
//!
//! The synthetic shapes are fixed closed forms. With `H × W` the grid size,
//! `s = 0.4 · min(H, W)`, normalized coordinates `x = col / (W − 1)`,
//! `y = row / (H − 1)` and `g(x₀, y₀) = exp(−((x − x₀)² + (y − y₀)²) / (2 · 0.12²))`:
//!
//! | kind          | height                                                   |
//! |---------------|----------------------------------------------------------|
//! | `sphere`      | `sqrt(max(0, s² − (row − H/2)² − (col − W/2)²))`          |
//! | `ramp_peak`   | `s · (0.5 x + g(0.65, 0.40))`                            |
//! | `peak_valley` | `s · (g(0.30, 0.30) − g(0.70, 0.70))`                    |
//!
//! These are version 1 of the shapes; changing them invalidates stored sweep
//! results, so any change must bump [`SURFACE_FORMULA_VERSION`].

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{GridDims, SurfaceGrid};

pub const SURFACE_FORMULA_VERSION: u32 = 1;

const BUMP_WIDTH: f64 = 0.12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SurfaceKind {
    RampPeak,
    Sphere,
    PeakValley,
}

impl SurfaceKind {
    pub const ALL: [SurfaceKind; 3] = [SurfaceKind::RampPeak, SurfaceKind::Sphere, SurfaceKind::PeakValley];

    /// Display label used in result tables.
    pub fn label(&self) -> &'static str {
        match self {
            SurfaceKind::RampPeak => "Ramp-peak",
            SurfaceKind::Sphere => "Sphere",
            SurfaceKind::PeakValley => "Peak-valley",
        }
    }

    pub fn parse(name: &str) -> Result<Self> {
        match name {
            "ramp_peak" => Ok(SurfaceKind::RampPeak),
            "sphere" => Ok(SurfaceKind::Sphere),
            "peak_valley" => Ok(SurfaceKind::PeakValley),
            other => Err(Error::Config(format!(
                "unknown surface kind {other:?} (expected ramp_peak, sphere or peak_valley)"
            ))),
        }
    }
}

fn bump(x: f64, y: f64, x0: f64, y0: f64) -> f64 {
    (-((x - x0).powi(2) + (y - y0).powi(2)) / (2.0 * BUMP_WIDTH * BUMP_WIDTH)).exp()
}

fn normalized(i: usize, len: usize) -> f64 {
    if len > 1 {
        i as f64 / (len - 1) as f64
    } else {
        0.5
    }
}

pub fn gen_surface(kind: SurfaceKind, dims: GridDims) -> SurfaceGrid {
    let (h, w) = (dims.rows(), dims.cols());
    let s = 0.4 * h.min(w) as f64;
    let mut z = Vec::with_capacity(dims.n());
    for r in 0..h {
        for c in 0..w {
            let (x, y) = (normalized(c, w), normalized(r, h));
            let v = match kind {
                SurfaceKind::Sphere => {
                    let dr = r as f64 - (h / 2) as f64;
                    let dc = c as f64 - (w / 2) as f64;
                    (s * s - dr * dr - dc * dc).max(0.0).sqrt()
                }
                SurfaceKind::RampPeak => s * (0.5 * x + bump(x, y, 0.65, 0.40)),
                SurfaceKind::PeakValley => s * (bump(x, y, 0.30, 0.30) - bump(x, y, 0.70, 0.70)),
            };
            z.push(v);
        }
    }
    SurfaceGrid::new(dims, z, kind.label()).expect("closed-form heights are finite")
}

/// Reads a height map. Files starting with the `P5` magic are parsed as
/// binary PGM (samples divided by maxval); anything else as CSV with one
/// grid row per line. The label is the file stem.
pub fn load_surface(path: &Path) -> Result<SurfaceGrid> {
    let bytes = std::fs::read(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let label = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "surface".into());
    let (dims, z) = if bytes.starts_with(b"P5") {
        parse_pgm(&bytes).map_err(|(location, message)| Error::Parse {
            path: path.to_path_buf(),
            location,
            message,
        })?
    } else {
        parse_csv(&bytes, path)?
    };
    SurfaceGrid::new(dims, z, label)
}

fn parse_csv(bytes: &[u8], path: &Path) -> Result<(GridDims, Vec<f64>)> {
    let parse_err = |location: String, message: String| Error::Parse {
        path: path.to_path_buf(),
        location,
        message,
    };
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(bytes);
    let mut z = Vec::new();
    let mut cols = None;
    let mut rows = 0;
    for (i, record) in reader.records().enumerate() {
        let record = record.map_err(|e| parse_err(format!("row {i}"), e.to_string()))?;
        let width = record.len();
        match cols {
            None => cols = Some(width),
            Some(w) if w != width => {
                return Err(parse_err(
                    format!("row {i}"),
                    format!("expected {w} columns, found {width}"),
                ))
            }
            _ => {}
        }
        for (j, field) in record.iter().enumerate() {
            let v: f64 = field.parse().map_err(|_| {
                parse_err(format!("row {i}, column {j}"), format!("not a number: {field:?}"))
            })?;
            if !v.is_finite() {
                return Err(parse_err(
                    format!("row {i}, column {j}"),
                    format!("non-finite height {field:?}"),
                ));
            }
            z.push(v);
        }
        rows += 1;
    }
    let cols = cols.ok_or_else(|| parse_err("start of file".into(), "no rows".into()))?;
    let dims = GridDims::new(rows, cols).map_err(|e| {
        Error::Config(format!("{}: {rows}x{cols} height map: {e}", path.display()))
    })?;
    Ok((dims, z))
}

type PgmError = (String, String);

fn parse_pgm(bytes: &[u8]) -> std::result::Result<(GridDims, Vec<f64>), PgmError> {
    let mut pos = 2;
    let mut header = [0usize; 3];
    for (k, name) in ["width", "height", "maxval"].iter().enumerate() {
        // whitespace and comments
        loop {
            match bytes.get(pos) {
                Some(b) if b.is_ascii_whitespace() => pos += 1,
                Some(b'#') => {
                    while bytes.get(pos).is_some_and(|&b| b != b'\n') {
                        pos += 1;
                    }
                }
                _ => break,
            }
        }
        let start = pos;
        while bytes.get(pos).is_some_and(u8::is_ascii_digit) {
            pos += 1;
        }
        if start == pos {
            return Err((format!("byte {start}"), format!("expected {name}")));
        }
        header[k] = std::str::from_utf8(&bytes[start..pos])
            .expect("ascii digits")
            .parse()
            .map_err(|_| (format!("byte {start}"), format!("{name} out of range")))?;
    }
    let [width, height, maxval] = header;
    if !bytes.get(pos).is_some_and(u8::is_ascii_whitespace) {
        return Err((format!("byte {pos}"), "expected whitespace after maxval".into()));
    }
    pos += 1;
    if maxval == 0 || maxval > 65535 {
        return Err(("header".into(), format!("maxval {maxval} outside 1..=65535")));
    }
    let dims = GridDims::new(height, width)
        .map_err(|e| ("header".into(), format!("{width}x{height} image: {e}")))?;
    let bps = if maxval < 256 { 1 } else { 2 };
    let need = dims.n() * bps;
    let raster = &bytes[pos..];
    if raster.len() < need {
        return Err((
            format!("byte {}", bytes.len()),
            format!("raster truncated: need {need} bytes, found {}", raster.len()),
        ));
    }
    let scale = maxval as f64;
    let z = if bps == 1 {
        raster[..need].iter().map(|&b| b as f64 / scale).collect()
    } else {
        raster[..need]
            .chunks_exact(2)
            .map(|p| u16::from_be_bytes([p[0], p[1]]) as f64 / scale)
            .collect()
    };
    Ok((dims, z))
}

/// One grid row per line, comma separated, shortest round-trip decimals.
pub fn surface_to_csv(dims: GridDims, z: &[f64]) -> String {
    let mut out = String::with_capacity(z.len() * 12);
    for row in z.chunks(dims.cols()) {
        let line: Vec<String> = row.iter().map(|v| v.to_string()).collect();
        out.push_str(&line.join(","));
        out.push('\n');
    }
    out
}

/// 16-bit binary PGM with heights mapped linearly from `[min, max]` to
/// `[0, 65535]`.
pub fn surface_to_pgm16(s: &SurfaceGrid) -> Vec<u8> {
    let z = s.heights();
    let lo = z.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = z.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let span = if hi > lo { hi - lo } else { 1.0 };
    let d = s.dims();
    let mut out = format!("P5\n{} {}\n65535\n", d.cols(), d.rows()).into_bytes();
    for v in z {
        let q = (((v - lo) / span) * 65535.0).round() as u16;
        out.extend_from_slice(&q.to_be_bytes());
    }
    out
}
