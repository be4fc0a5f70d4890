//! Orthonormal 2-D Haar wavelet transform, full decomposition depth.
//!
//! Uses the pyramid (Mallat) ordering: each level splits the current
//! low-pass block along rows and then columns, and the next level recurses
//! into the top-left quarter. A side stops splitting once it reaches length
//! one, so rectangular grids are supported. After the last level the single
//! DC coefficient sits at index 0 and equals `sum(z) / sqrt(n)`.

use std::f64::consts::FRAC_1_SQRT_2;

use crate::error::{check_len, Result};
use crate::grid::GridDims;
use crate::operators::LinearOp;

/// Low-pass block sizes visited by the analysis pass, finest first.
fn levels(dims: GridDims) -> Vec<(usize, usize)> {
    let (mut h, mut w) = (dims.rows(), dims.cols());
    let mut out = Vec::new();
    while h > 1 || w > 1 {
        out.push((h, w));
        h = (h / 2).max(1);
        w = (w / 2).max(1);
    }
    out
}

/// One analysis step over `len` samples spaced `stride` apart.
fn split(data: &mut [f64], start: usize, stride: usize, len: usize, scratch: &mut [f64]) {
    let half = len / 2;
    for i in 0..half {
        let a = data[start + 2 * i * stride];
        let b = data[start + (2 * i + 1) * stride];
        scratch[i] = (a + b) * FRAC_1_SQRT_2;
        scratch[half + i] = (a - b) * FRAC_1_SQRT_2;
    }
    for (i, v) in scratch[..len].iter().enumerate() {
        data[start + i * stride] = *v;
    }
}

/// Inverse of [`split`].
fn merge(data: &mut [f64], start: usize, stride: usize, len: usize, scratch: &mut [f64]) {
    let half = len / 2;
    for i in 0..half {
        let s = data[start + i * stride];
        let d = data[start + (half + i) * stride];
        scratch[2 * i] = (s + d) * FRAC_1_SQRT_2;
        scratch[2 * i + 1] = (s - d) * FRAC_1_SQRT_2;
    }
    for (i, v) in scratch[..len].iter().enumerate() {
        data[start + i * stride] = *v;
    }
}

/// In-place analysis (`Wᵀ`). `data.len()` must equal `dims.n()`.
pub fn haar_forward_in_place(data: &mut [f64], dims: GridDims) {
    let cols = dims.cols();
    let mut scratch = vec![0.0; dims.rows().max(cols)];
    for (h, w) in levels(dims) {
        if w > 1 {
            for r in 0..h {
                split(data, r * cols, 1, w, &mut scratch);
            }
        }
        if h > 1 {
            for c in 0..w {
                split(data, c, cols, h, &mut scratch);
            }
        }
    }
}

/// In-place synthesis (`W`).
pub fn haar_inverse_in_place(data: &mut [f64], dims: GridDims) {
    let cols = dims.cols();
    let mut scratch = vec![0.0; dims.rows().max(cols)];
    for (h, w) in levels(dims).into_iter().rev() {
        if h > 1 {
            for c in 0..w {
                merge(data, c, cols, h, &mut scratch);
            }
        }
        if w > 1 {
            for r in 0..h {
                merge(data, r * cols, 1, w, &mut scratch);
            }
        }
    }
}

/// Wavelet coefficients of a row-major grid.
pub fn haar_forward(z_flat: &[f64], dims: GridDims) -> Result<Vec<f64>> {
    check_len("haar_forward input", dims.n(), z_flat.len())?;
    let mut c = z_flat.to_vec();
    haar_forward_in_place(&mut c, dims);
    Ok(c)
}

/// Grid samples from wavelet coefficients.
pub fn haar_inverse(c: &[f64], dims: GridDims) -> Result<Vec<f64>> {
    check_len("haar_inverse input", dims.n(), c.len())?;
    let mut z = c.to_vec();
    haar_inverse_in_place(&mut z, dims);
    Ok(z)
}

/// The basis `W` as a linear operator: forward maps coefficients to samples,
/// the adjoint maps samples to coefficients.
#[derive(Debug, Clone, Copy)]
pub struct HaarBasis {
    dims: GridDims,
}

impl HaarBasis {
    pub fn new(dims: GridDims) -> Self {
        HaarBasis { dims }
    }

    pub fn dims(&self) -> GridDims {
        self.dims
    }
}

impl LinearOp for HaarBasis {
    fn in_dim(&self) -> usize {
        self.dims.n()
    }
    fn out_dim(&self) -> usize {
        self.dims.n()
    }
    fn apply_into(&self, x: &[f64], out: &mut [f64]) {
        out.copy_from_slice(x);
        haar_inverse_in_place(out, self.dims);
    }
    fn adjoint_into(&self, y: &[f64], out: &mut [f64]) {
        out.copy_from_slice(y);
        haar_forward_in_place(out, self.dims);
    }
}
