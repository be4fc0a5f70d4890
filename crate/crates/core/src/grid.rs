//! Grid geometry and the two field types that flow through the pipeline:
//! height maps and gradient fields. Storage is row-major throughout, so the
//! sample at row `r`, column `c` lives at index `r * cols + c`.

use serde::{Deserialize, Serialize};

use crate::error::{check_len, Error, Result};

/// Shape of an `rows × cols` grid. Both sides must be powers of two so the
/// full-depth Haar transform is defined.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "RawDims", into = "RawDims")]
pub struct GridDims {
    rows: usize,
    cols: usize,
}

#[derive(Serialize, Deserialize)]
struct RawDims {
    rows: usize,
    cols: usize,
}

impl TryFrom<RawDims> for GridDims {
    type Error = Error;
    fn try_from(raw: RawDims) -> Result<Self> {
        GridDims::new(raw.rows, raw.cols)
    }
}

impl From<GridDims> for RawDims {
    fn from(d: GridDims) -> Self {
        RawDims {
            rows: d.rows,
            cols: d.cols,
        }
    }
}

impl GridDims {
    pub fn new(rows: usize, cols: usize) -> Result<Self> {
        for (name, v) in [("rows", rows), ("cols", cols)] {
            if v == 0 || !v.is_power_of_two() {
                return Err(Error::Config(format!(
                    "grid {name} = {v} must be a positive power of two"
                )));
            }
        }
        Ok(GridDims { rows, cols })
    }

    pub fn square(side: usize) -> Result<Self> {
        Self::new(side, side)
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    /// Number of samples, `rows * cols`.
    #[inline]
    pub fn n(&self) -> usize {
        self.rows * self.cols
    }

    #[inline]
    pub fn index(&self, row: usize, col: usize) -> usize {
        row * self.cols + col
    }
}

impl std::fmt::Display for GridDims {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}x{}", self.rows, self.cols)
    }
}

/// A height map `z(x, y)`.
#[derive(Debug, Clone, PartialEq)]
pub struct SurfaceGrid {
    dims: GridDims,
    z: Vec<f64>,
    label: String,
}

impl SurfaceGrid {
    pub fn new(dims: GridDims, z: Vec<f64>, label: impl Into<String>) -> Result<Self> {
        check_len("surface heights", dims.n(), z.len())?;
        if let Some(i) = z.iter().position(|v| !v.is_finite()) {
            return Err(Error::Contract(format!(
                "surface height at index {i} is not finite"
            )));
        }
        Ok(SurfaceGrid {
            dims,
            z,
            label: label.into(),
        })
    }

    pub fn zeros(dims: GridDims, label: impl Into<String>) -> Self {
        SurfaceGrid {
            dims,
            z: vec![0.0; dims.n()],
            label: label.into(),
        }
    }

    pub fn dims(&self) -> GridDims {
        self.dims
    }

    pub fn heights(&self) -> &[f64] {
        &self.z
    }

    pub fn into_heights(self) -> Vec<f64> {
        self.z
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = label.into();
        self
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.z[self.dims.index(row, col)]
    }

    pub fn mean(&self) -> f64 {
        mean(&self.z)
    }
}

/// The pair of partial-derivative fields `(z_x, z_y)` of a surface.
#[derive(Debug, Clone, PartialEq)]
pub struct GradientField {
    dims: GridDims,
    zx: Vec<f64>,
    zy: Vec<f64>,
}

impl GradientField {
    pub fn new(dims: GridDims, zx: Vec<f64>, zy: Vec<f64>) -> Result<Self> {
        check_len("gradient z_x", dims.n(), zx.len())?;
        check_len("gradient z_y", dims.n(), zy.len())?;
        if zx.iter().chain(&zy).any(|v| !v.is_finite()) {
            return Err(Error::Contract("gradient field contains non-finite entries".into()));
        }
        Ok(GradientField { dims, zx, zy })
    }

    pub fn zeros(dims: GridDims) -> Self {
        GradientField {
            dims,
            zx: vec![0.0; dims.n()],
            zy: vec![0.0; dims.n()],
        }
    }

    pub fn dims(&self) -> GridDims {
        self.dims
    }

    pub fn zx(&self) -> &[f64] {
        &self.zx
    }

    pub fn zy(&self) -> &[f64] {
        &self.zy
    }
}

// Small dense-vector helpers shared across modules.

/// Inner product with eight independent accumulators so the loop
/// vectorizes. The summation order is fixed, so results are reproducible.
#[inline]
pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    let mut acc = [0.0f64; 8];
    let (ca, cb) = (a.chunks_exact(8), b.chunks_exact(8));
    let (ra, rb) = (ca.remainder(), cb.remainder());
    for (x, y) in ca.zip(cb) {
        for k in 0..8 {
            acc[k] += x[k] * y[k];
        }
    }
    let mut tail = 0.0;
    for (x, y) in ra.iter().zip(rb) {
        tail += x * y;
    }
    ((acc[0] + acc[4]) + (acc[1] + acc[5])) + ((acc[2] + acc[6]) + (acc[3] + acc[7])) + tail
}

#[inline]
pub(crate) fn norm2(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

#[inline]
pub(crate) fn norm_inf(a: &[f64]) -> f64 {
    a.iter().fold(0.0, |m, v| m.max(v.abs()))
}

pub(crate) fn mean(a: &[f64]) -> f64 {
    if a.is_empty() {
        0.0
    } else {
        a.iter().sum::<f64>() / a.len() as f64
    }
}
