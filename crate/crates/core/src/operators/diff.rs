//! Forward first differences with a replicated (Neumann) last sample.
//!
//! Both operators are Kronecker products of the same 1-D stencil
//! `(S x)_i = x_{i+1} - x_i` for `i < L-1`, `(S x)_{L-1} = 0`:
//! `D_x = I_rows ⊗ S_cols` differences along a row (the x direction), and
//! `D_y = S_rows ⊗ I_cols` along a column. Kronecker factors acting on
//! different axes commute, so `D_x D_y = D_y D_x`, which is what makes the
//! cross-derivative constraint hold exactly for true gradients.

use std::sync::Arc;

use crate::error::{check_len, Result};
use crate::grid::{GradientField, GridDims, SurfaceGrid};
use crate::operators::LinearOp;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Axis {
    /// Along a row, i.e. across columns.
    X,
    /// Along a column, i.e. across rows.
    Y,
}

#[derive(Debug, Clone, Copy)]
pub struct DiffOp {
    dims: GridDims,
    axis: Axis,
}

impl DiffOp {
    pub fn new(dims: GridDims, axis: Axis) -> Self {
        DiffOp { dims, axis }
    }

    /// (stride between neighbours, line length)
    fn layout(&self) -> (usize, usize) {
        match self.axis {
            Axis::X => (1, self.dims.cols()),
            Axis::Y => (self.dims.cols(), self.dims.rows()),
        }
    }
}

impl LinearOp for DiffOp {
    fn in_dim(&self) -> usize {
        self.dims.n()
    }
    fn out_dim(&self) -> usize {
        self.dims.n()
    }

    fn apply_into(&self, x: &[f64], out: &mut [f64]) {
        let (stride, len) = self.layout();
        let (rows, cols) = (self.dims.rows(), self.dims.cols());
        for r in 0..rows {
            for c in 0..cols {
                let i = r * cols + c;
                let pos = if stride == 1 { c } else { r };
                out[i] = if pos + 1 < len { x[i + stride] - x[i] } else { 0.0 };
            }
        }
    }

    fn adjoint_into(&self, y: &[f64], out: &mut [f64]) {
        // (Sᵀ y)_j = y_{j-1} [j ≥ 1] − y_j [j < L-1]
        let (stride, len) = self.layout();
        let (rows, cols) = (self.dims.rows(), self.dims.cols());
        for r in 0..rows {
            for c in 0..cols {
                let i = r * cols + c;
                let pos = if stride == 1 { c } else { r };
                let mut v = 0.0;
                if pos >= 1 {
                    v += y[i - stride];
                }
                if pos + 1 < len {
                    v -= y[i];
                }
                out[i] = v;
            }
        }
    }
}

/// The pair `(D_x, D_y)` for one grid.
#[derive(Debug, Clone)]
pub struct DiffOps {
    dims: GridDims,
    pub dx: Arc<DiffOp>,
    pub dy: Arc<DiffOp>,
}

pub fn make_diff_ops(dims: GridDims) -> DiffOps {
    DiffOps {
        dims,
        dx: Arc::new(DiffOp::new(dims, Axis::X)),
        dy: Arc::new(DiffOp::new(dims, Axis::Y)),
    }
}

impl DiffOps {
    pub fn dims(&self) -> GridDims {
        self.dims
    }

    /// Exact discrete gradient `(D_x z, D_y z)` of a surface.
    pub fn gradient(&self, z: &SurfaceGrid) -> Result<GradientField> {
        check_len("gradient surface", self.dims.n(), z.heights().len())?;
        let zx = self.dx.forward(z.heights())?;
        let zy = self.dy.forward(z.heights())?;
        GradientField::new(self.dims, zx, zy)
    }
}
