//! Matrix-free linear maps with forward and adjoint application.
//!
//! Every operator in the reconstruction (basis, differences, sensing, the
//! stacked measurement operator and the cross-derivative constraint) is an
//! `Arc<dyn LinearOp>`, assembled from the small combinators below.

use std::fmt;
use std::sync::Arc;

use crate::error::{check_len, Result};
use crate::grid::dot;

/// A linear map `R^in_dim -> R^out_dim` known only through its action.
///
/// Implementations must be pure: the same input always produces the same
/// output, and applications may run concurrently from many threads.
pub trait LinearOp: Send + Sync + fmt::Debug {
    fn in_dim(&self) -> usize;
    fn out_dim(&self) -> usize;

    /// `out = A x`. Slice lengths must match the operator; this is unchecked
    /// apart from debug assertions.
    fn apply_into(&self, x: &[f64], out: &mut [f64]);

    /// `out = Aᵀ y`.
    fn adjoint_into(&self, y: &[f64], out: &mut [f64]);

    /// Checked forward application.
    fn forward(&self, x: &[f64]) -> Result<Vec<f64>> {
        check_len("operator forward input", self.in_dim(), x.len())?;
        let mut out = vec![0.0; self.out_dim()];
        self.apply_into(x, &mut out);
        Ok(out)
    }

    /// Checked adjoint application.
    fn adjoint(&self, y: &[f64]) -> Result<Vec<f64>> {
        check_len("operator adjoint input", self.out_dim(), y.len())?;
        let mut out = vec![0.0; self.in_dim()];
        self.adjoint_into(y, &mut out);
        Ok(out)
    }
}

pub type Op = Arc<dyn LinearOp>;

/// Dense row-major matrix.
#[derive(Clone, PartialEq)]
pub struct DenseMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl DenseMatrix {
    pub fn from_row_major(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        check_len("dense matrix storage", rows * cols, data.len())?;
        Ok(DenseMatrix { rows, cols, data })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }
}

impl fmt::Debug for DenseMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "DenseMatrix({}x{})", self.rows, self.cols)
    }
}

impl LinearOp for DenseMatrix {
    fn in_dim(&self) -> usize {
        self.cols
    }

    fn out_dim(&self) -> usize {
        self.rows
    }

    fn apply_into(&self, x: &[f64], out: &mut [f64]) {
        debug_assert_eq!(x.len(), self.cols);
        for (o, row) in out.iter_mut().zip(self.data.chunks_exact(self.cols)) {
            *o = dot(row, x);
        }
    }

    fn adjoint_into(&self, y: &[f64], out: &mut [f64]) {
        debug_assert_eq!(y.len(), self.rows);
        out.fill(0.0);
        for (&yi, row) in y.iter().zip(self.data.chunks_exact(self.cols)) {
            if yi != 0.0 {
                for (o, a) in out.iter_mut().zip(row) {
                    *o += yi * a;
                }
            }
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct Identity(pub usize);

impl LinearOp for Identity {
    fn in_dim(&self) -> usize {
        self.0
    }
    fn out_dim(&self) -> usize {
        self.0
    }
    fn apply_into(&self, x: &[f64], out: &mut [f64]) {
        out.copy_from_slice(x);
    }
    fn adjoint_into(&self, y: &[f64], out: &mut [f64]) {
        out.copy_from_slice(y);
    }
}

/// The zero map between two spaces.
#[derive(Debug, Clone, Copy)]
pub struct ZeroOp {
    pub in_dim: usize,
    pub out_dim: usize,
}

impl LinearOp for ZeroOp {
    fn in_dim(&self) -> usize {
        self.in_dim
    }
    fn out_dim(&self) -> usize {
        self.out_dim
    }
    fn apply_into(&self, _x: &[f64], out: &mut [f64]) {
        out.fill(0.0);
    }
    fn adjoint_into(&self, _y: &[f64], out: &mut [f64]) {
        out.fill(0.0);
    }
}

/// Which half of a stacked `[c_x; c_y]` vector a [`Selector`] extracts.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Half {
    First,
    Second,
}

/// `R^{2n} -> R^n`, keeping one half. Its adjoint zero-pads.
#[derive(Debug, Clone, Copy)]
pub struct Selector {
    pub n: usize,
    pub half: Half,
}

impl Selector {
    fn range(&self) -> std::ops::Range<usize> {
        match self.half {
            Half::First => 0..self.n,
            Half::Second => self.n..2 * self.n,
        }
    }
}

impl LinearOp for Selector {
    fn in_dim(&self) -> usize {
        2 * self.n
    }
    fn out_dim(&self) -> usize {
        self.n
    }
    fn apply_into(&self, x: &[f64], out: &mut [f64]) {
        out.copy_from_slice(&x[self.range()]);
    }
    fn adjoint_into(&self, y: &[f64], out: &mut [f64]) {
        out.fill(0.0);
        out[self.range()].copy_from_slice(y);
    }
}

/// `outer ∘ inner`.
#[derive(Debug, Clone)]
pub struct Compose {
    outer: Op,
    inner: Op,
}

impl Compose {
    pub fn new(outer: Op, inner: Op) -> Result<Self> {
        check_len("composition inner/outer", outer.in_dim(), inner.out_dim())?;
        Ok(Compose { outer, inner })
    }
}

impl LinearOp for Compose {
    fn in_dim(&self) -> usize {
        self.inner.in_dim()
    }
    fn out_dim(&self) -> usize {
        self.outer.out_dim()
    }
    fn apply_into(&self, x: &[f64], out: &mut [f64]) {
        let mut mid = vec![0.0; self.inner.out_dim()];
        self.inner.apply_into(x, &mut mid);
        self.outer.apply_into(&mid, out);
    }
    fn adjoint_into(&self, y: &[f64], out: &mut [f64]) {
        let mut mid = vec![0.0; self.outer.in_dim()];
        self.outer.adjoint_into(y, &mut mid);
        self.inner.adjoint_into(&mid, out);
    }
}

/// `diag{a, b}`: `[u; v] -> [a u; b v]`.
#[derive(Debug, Clone)]
pub struct BlockDiag {
    a: Op,
    b: Op,
}

impl BlockDiag {
    pub fn new(a: Op, b: Op) -> Self {
        BlockDiag { a, b }
    }
}

impl LinearOp for BlockDiag {
    fn in_dim(&self) -> usize {
        self.a.in_dim() + self.b.in_dim()
    }
    fn out_dim(&self) -> usize {
        self.a.out_dim() + self.b.out_dim()
    }
    fn apply_into(&self, x: &[f64], out: &mut [f64]) {
        let (xa, xb) = x.split_at(self.a.in_dim());
        let (oa, ob) = out.split_at_mut(self.a.out_dim());
        self.a.apply_into(xa, oa);
        self.b.apply_into(xb, ob);
    }
    fn adjoint_into(&self, y: &[f64], out: &mut [f64]) {
        let (ya, yb) = y.split_at(self.a.out_dim());
        let (oa, ob) = out.split_at_mut(self.a.in_dim());
        self.a.adjoint_into(ya, oa);
        self.b.adjoint_into(yb, ob);
    }
}

/// `[top; bottom]`, both acting on the same input.
#[derive(Debug, Clone)]
pub struct VStack {
    top: Op,
    bottom: Op,
}

impl VStack {
    pub fn new(top: Op, bottom: Op) -> Result<Self> {
        check_len("vertical stack input", top.in_dim(), bottom.in_dim())?;
        Ok(VStack { top, bottom })
    }
}

impl LinearOp for VStack {
    fn in_dim(&self) -> usize {
        self.top.in_dim()
    }
    fn out_dim(&self) -> usize {
        self.top.out_dim() + self.bottom.out_dim()
    }
    fn apply_into(&self, x: &[f64], out: &mut [f64]) {
        let (ot, ob) = out.split_at_mut(self.top.out_dim());
        self.top.apply_into(x, ot);
        self.bottom.apply_into(x, ob);
    }
    fn adjoint_into(&self, y: &[f64], out: &mut [f64]) {
        let (yt, yb) = y.split_at(self.top.out_dim());
        self.top.adjoint_into(yt, out);
        let mut tmp = vec![0.0; self.bottom.in_dim()];
        self.bottom.adjoint_into(yb, &mut tmp);
        for (o, t) in out.iter_mut().zip(&tmp) {
            *o += t;
        }
    }
}

/// `factor · op`.
#[derive(Debug, Clone)]
pub struct Scaled {
    op: Op,
    factor: f64,
}

impl Scaled {
    pub fn new(op: Op, factor: f64) -> Self {
        Scaled { op, factor }
    }
}

impl LinearOp for Scaled {
    fn in_dim(&self) -> usize {
        self.op.in_dim()
    }
    fn out_dim(&self) -> usize {
        self.op.out_dim()
    }
    fn apply_into(&self, x: &[f64], out: &mut [f64]) {
        self.op.apply_into(x, out);
        out.iter_mut().for_each(|o| *o *= self.factor);
    }
    fn adjoint_into(&self, y: &[f64], out: &mut [f64]) {
        self.op.adjoint_into(y, out);
        out.iter_mut().for_each(|o| *o *= self.factor);
    }
}

/// `a − b`.
#[derive(Debug, Clone)]
pub struct Difference {
    a: Op,
    b: Op,
}

impl Difference {
    pub fn new(a: Op, b: Op) -> Result<Self> {
        check_len("difference input", a.in_dim(), b.in_dim())?;
        check_len("difference output", a.out_dim(), b.out_dim())?;
        Ok(Difference { a, b })
    }
}

impl LinearOp for Difference {
    fn in_dim(&self) -> usize {
        self.a.in_dim()
    }
    fn out_dim(&self) -> usize {
        self.a.out_dim()
    }
    fn apply_into(&self, x: &[f64], out: &mut [f64]) {
        self.a.apply_into(x, out);
        let mut tmp = vec![0.0; self.b.out_dim()];
        self.b.apply_into(x, &mut tmp);
        for (o, t) in out.iter_mut().zip(&tmp) {
            *o -= t;
        }
    }
    fn adjoint_into(&self, y: &[f64], out: &mut [f64]) {
        self.a.adjoint_into(y, out);
        let mut tmp = vec![0.0; self.b.in_dim()];
        self.b.adjoint_into(y, &mut tmp);
        for (o, t) in out.iter_mut().zip(&tmp) {
            *o -= t;
        }
    }
}

/// Builds the explicit `out_dim × in_dim` row-major matrix of `op` by
/// applying it to every unit vector. Only sensible for small operators.
pub fn materialize(op: &dyn LinearOp) -> DenseMatrix {
    let (m, n) = (op.out_dim(), op.in_dim());
    let mut data = vec![0.0; m * n];
    let mut e = vec![0.0; n];
    let mut col = vec![0.0; m];
    for j in 0..n {
        e[j] = 1.0;
        op.apply_into(&e, &mut col);
        for i in 0..m {
            data[i * n + j] = col[i];
        }
        e[j] = 0.0;
    }
    DenseMatrix { rows: m, cols: n, data }
}

/// `|<A u, v> − <u, Aᵀ v>|` for the given vectors, the quantity bounded by
/// the adjoint-consistency contract.
pub fn adjoint_gap(op: &dyn LinearOp, u: &[f64], v: &[f64]) -> Result<f64> {
    let au = op.forward(u)?;
    let atv = op.adjoint(v)?;
    Ok((dot(&au, v) - dot(u, &atv)).abs())
}
