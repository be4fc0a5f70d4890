//! Least-squares integration of a gradient field.
//!
//! Finds the zero-mean `z` minimizing `‖D_x z − z_x‖² + ‖D_y z − z_y‖²` by
//! conjugate gradients on the normal equations `(D_xᵀD_x + D_yᵀD_y) z =
//! D_xᵀz_x + D_yᵀz_y`. The system matrix is the Neumann Laplacian, singular
//! only along constants; the right-hand side is orthogonal to them, and the
//! iterates are kept mean-free.

use crate::error::{Error, Result};
use crate::grid::{dot, mean, GradientField, SurfaceGrid};
use crate::operators::{make_diff_ops, DiffOps, LinearOp};

/// Relative residual at which CG stops.
pub const CG_TOL: f64 = 1e-10;

fn remove_mean(v: &mut [f64]) {
    let mu = mean(v);
    v.iter_mut().for_each(|x| *x -= mu);
}

fn apply_laplacian(ops: &DiffOps, x: &[f64], out: &mut [f64], tmp: &mut [f64], tmp2: &mut [f64]) {
    ops.dx.apply_into(x, tmp);
    ops.dx.adjoint_into(tmp, out);
    ops.dy.apply_into(x, tmp);
    ops.dy.adjoint_into(tmp, tmp2);
    out.iter_mut().zip(tmp2.iter()).for_each(|(o, t)| *o += t);
}

/// Integrates `g` into a zero-mean surface labelled `"integrated"`.
pub fn integrate(g: &GradientField) -> Result<SurfaceGrid> {
    let dims = g.dims();
    let n = dims.n();
    let ops = make_diff_ops(dims);

    let mut rhs = ops.dx.adjoint(g.zx())?;
    let ry = ops.dy.adjoint(g.zy())?;
    rhs.iter_mut().zip(&ry).for_each(|(a, b)| *a += b);
    remove_mean(&mut rhs);

    let rhs_norm = dot(&rhs, &rhs).sqrt();
    let mut z = vec![0.0; n];
    if rhs_norm == 0.0 {
        return SurfaceGrid::new(dims, z, "integrated");
    }
    if !rhs_norm.is_finite() {
        return Err(Error::numerical(0, "gradient field produced a non-finite Poisson source"));
    }

    let mut r = rhs;
    let mut p = r.clone();
    let mut ap = vec![0.0; n];
    let (mut tmp, mut tmp2) = (vec![0.0; n], vec![0.0; n]);
    let mut rr = dot(&r, &r);
    let max_iter = 10 * n;
    let target = CG_TOL * rhs_norm;
    let mut converged = false;
    for _ in 0..max_iter {
        apply_laplacian(&ops, &p, &mut ap, &mut tmp, &mut tmp2);
        let pap = dot(&p, &ap);
        if pap <= 0.0 {
            // p lies in the null space; nothing left to reduce
            converged = rr.sqrt() <= target;
            break;
        }
        let alpha = rr / pap;
        z.iter_mut().zip(&p).for_each(|(zi, pi)| *zi += alpha * pi);
        r.iter_mut().zip(&ap).for_each(|(ri, ai)| *ri -= alpha * ai);
        remove_mean(&mut r);
        let rr_new = dot(&r, &r);
        if rr_new.sqrt() <= target {
            converged = true;
            break;
        }
        let beta = rr_new / rr;
        p.iter_mut().zip(&r).for_each(|(pi, ri)| *pi = ri + beta * *pi);
        rr = rr_new;
    }
    if !converged {
        return Err(Error::NoConvergence {
            iterations: max_iter,
            residual: rr.sqrt() / rhs_norm,
        });
    }
    remove_mean(&mut z);
    SurfaceGrid::new(dims, z, "integrated")
}

/// Shifts `candidate` so its mean equals that of `reference`.
pub fn align_mean(candidate: &SurfaceGrid, reference: &SurfaceGrid) -> Result<SurfaceGrid> {
    if candidate.dims() != reference.dims() {
        return Err(Error::Contract(format!(
            "cannot align {} surface to {} reference",
            candidate.dims(),
            reference.dims()
        )));
    }
    let shift = reference.mean() - candidate.mean();
    let z = candidate.heights().iter().map(|v| v + shift).collect();
    SurfaceGrid::new(candidate.dims(), z, candidate.label())
}
