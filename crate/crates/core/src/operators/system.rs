use std::sync::Arc;

use crate::error::{Error, Result};
use crate::grid::{GradientField, GridDims, SurfaceGrid};
use crate::noise::{apply_noise, NoiseSpec};
use crate::operators::{
    haar_forward, make_diff_ops, make_sensing, BlockDiag, Compose, DiffOps, Difference,
    HaarBasis, Half, LinearOp, Op, Selector, SensingOp, VStack,
};
use crate::seed::substream;

/// One assembled reconstruction problem.
///
/// `phi = diag{Ψ_x W, Ψ_y W}` maps coefficients `c = [c_x; c_y]` (length
/// `2n`) to measurements (length `2m`); `b_op = D_y W T_x − D_x W T_y` maps
/// them to the cross-derivative mismatch (length `n`), which vanishes for
/// the coefficients of any true gradient field.
#[derive(Debug, Clone)]
pub struct StackedSystem {
    pub dims: GridDims,
    pub psi_x: Arc<SensingOp>,
    pub psi_y: Arc<SensingOp>,
    pub haar: HaarBasis,
    pub diffs: DiffOps,
    pub phi: Op,
    pub b_op: Op,
    /// `[b_x; b_y]`, noise included.
    pub y: Vec<f64>,
    /// Exact discrete gradients of the source surface.
    pub true_gradients: GradientField,
}

/// Builds the measurement operator `diag{Ψ_x W, Ψ_y W}`.
pub fn stacked_measurement(psi_x: Op, psi_y: Op, haar: HaarBasis) -> Result<Op> {
    let w: Op = Arc::new(haar);
    let a: Op = Arc::new(Compose::new(psi_x, w.clone())?);
    let b: Op = Arc::new(Compose::new(psi_y, w)?);
    Ok(Arc::new(BlockDiag::new(a, b)))
}

/// Builds the constraint operator `B = D_y W T_x − D_x W T_y`.
pub fn constraint_operator(diffs: &DiffOps, haar: HaarBasis) -> Result<Op> {
    let n = diffs.dims().n();
    let w: Op = Arc::new(haar);
    let tx: Op = Arc::new(Selector { n, half: Half::First });
    let ty: Op = Arc::new(Selector { n, half: Half::Second });
    let dx: Op = diffs.dx.clone();
    let dy: Op = diffs.dy.clone();
    let y_of_x: Op = Arc::new(Compose::new(dy, Arc::new(Compose::new(w.clone(), tx)?))?);
    let x_of_y: Op = Arc::new(Compose::new(dx, Arc::new(Compose::new(w, ty)?))?);
    Ok(Arc::new(Difference::new(y_of_x, x_of_y)?))
}

/// Coefficients `[Wᵀ z_x; Wᵀ z_y]` of a gradient field.
pub fn gradient_coefficients(g: &GradientField) -> Result<Vec<f64>> {
    let mut c = haar_forward(g.zx(), g.dims())?;
    c.extend(haar_forward(g.zy(), g.dims())?);
    Ok(c)
}

/// Samples the gradients of `z` through two independent Gaussian sensing
/// matrices and corrupts the measurements with `noise`.
///
/// `b_x` is corrupted with `noise_seed` itself and `b_y` with a sub-stream
/// of it, so the two noise vectors are independent.
pub fn assemble_system(
    z: &SurfaceGrid,
    psi_seed_x: u64,
    psi_seed_y: u64,
    m: usize,
    noise: &NoiseSpec,
    noise_seed: u64,
) -> Result<StackedSystem> {
    let dims = z.dims();
    let n = dims.n();
    if m == 0 || m > n {
        return Err(Error::Config(format!(
            "measurement count m = {m} must satisfy 0 < m <= n = {n}"
        )));
    }
    noise.validate()?;
    let diffs = make_diff_ops(dims);
    let haar = HaarBasis::new(dims);
    let psi_x = Arc::new(make_sensing(psi_seed_x, m, n)?);
    let psi_y = Arc::new(make_sensing(psi_seed_y, m, n)?);

    let grads = diffs.gradient(z)?;
    let bx = apply_noise(&psi_x.forward(grads.zx())?, noise, noise_seed)?;
    let by = apply_noise(
        &psi_y.forward(grads.zy())?,
        noise,
        substream(noise_seed, "noise_y"),
    )?;
    let mut y = bx;
    y.extend(by);

    let phi = stacked_measurement(psi_x.clone(), psi_y.clone(), haar)?;
    let b_op = constraint_operator(&diffs, haar)?;
    Ok(StackedSystem {
        dims,
        psi_x,
        psi_y,
        haar,
        diffs,
        phi,
        b_op,
        y,
        true_gradients: grads,
    })
}

impl StackedSystem {
    pub fn n(&self) -> usize {
        self.dims.n()
    }

    pub fn m(&self) -> usize {
        self.psi_x.m()
    }

    /// Haar coefficients of the exact gradients.
    pub fn true_coefficients(&self) -> Result<Vec<f64>> {
        gradient_coefficients(&self.true_gradients)
    }

    /// `Φ' = [Φ; B]`, the measurement operator augmented with the constraint
    /// rows as zero-valued pseudo-measurements.
    pub fn augmented_operator(&self) -> Result<Op> {
        Ok(Arc::new(VStack::new(self.phi.clone(), self.b_op.clone())?))
    }

    /// `y' = [y; 0]`.
    pub fn augmented_data(&self) -> Vec<f64> {
        let mut y = self.y.clone();
        y.resize(self.y.len() + self.n(), 0.0);
        y
    }

    /// Same system with a different constraint operator, e.g. the zero map.
    pub fn with_constraint(&self, b_op: Op) -> Result<Self> {
        crate::error::check_len("constraint input", 2 * self.n(), b_op.in_dim())?;
        Ok(StackedSystem {
            b_op,
            ..self.clone()
        })
    }
}
