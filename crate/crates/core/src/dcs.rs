//! Reconstruction under the cross-derivative constraint.
//!
//! Solves
//!
//! ```text
//! minimize ½‖Φ c − y‖² + λ‖c‖₁   subject to   B c = 0
//! ```
//!
//! by the method of multipliers with a fixed penalty δ:
//!
//! ```text
//! c⁽ᵗ⁺¹⁾ = argmin ½‖Φ c − y‖² + λ‖c‖₁ + (δ/2)‖B c + p⁽ᵗ⁾‖²
//! p⁽ᵗ⁺¹⁾ = p⁽ᵗ⁾ + B c⁽ᵗ⁺¹⁾
//! ```
//!
//! The inner problem is itself an L1 least-squares problem on the stacked
//! operator `[Φ; √δ B]` with data `[y; −√δ p]`, so the same FISTA kernel
//! solves both. Each inner solve is warm-started from the previous iterate.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{check_len, Error, Result};
use crate::grid::{norm2, GradientField, GridDims};
use crate::operators::{haar_inverse, Op, Scaled, StackedSystem, VStack};
use crate::sparse_solver::{
    estimate_lipschitz, fista_solve_with_lipschitz, objective, SolveReport, SolverParams,
};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DcsParams {
    pub lambda: f64,
    pub delta: f64,
    pub outer_iters: usize,
    /// Stop once `‖B c‖ ≤ constraint_tol · ‖c‖`.
    pub constraint_tol: f64,
    /// Inner solver settings. Its `lambda` is overwritten by [`DcsParams::lambda`].
    /// Inner solves are warm-started, so the default caps each one at
    /// [`DEFAULT_INNER_ITERS`] iterations.
    pub inner: SolverParams,
}

/// Default iteration cap of each warm-started inner solve.
pub const DEFAULT_INNER_ITERS: usize = 100;

impl Default for DcsParams {
    fn default() -> Self {
        DcsParams {
            lambda: 1e-5,
            delta: 2.0,
            outer_iters: 15,
            constraint_tol: 1e-4,
            inner: SolverParams {
                max_iter: DEFAULT_INNER_ITERS,
                ..SolverParams::default()
            },
        }
    }
}

impl DcsParams {
    pub fn with_hyper(mut self, lambda: f64, delta: f64) -> Self {
        self.lambda = lambda;
        self.delta = delta;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.delta > 0.0) || !self.delta.is_finite() {
            return Err(Error::Config(format!("delta must be > 0, got {}", self.delta)));
        }
        if self.outer_iters == 0 {
            return Err(Error::Config("outer_iters must be >= 1".into()));
        }
        if !(self.constraint_tol > 0.0) {
            return Err(Error::Config(format!(
                "constraint_tol must be > 0, got {}",
                self.constraint_tol
            )));
        }
        self.inner_params().validate()
    }

    fn inner_params(&self) -> SolverParams {
        SolverParams {
            lambda: self.lambda,
            ..self.inner
        }
    }
}

/// Coefficients `[c_x; c_y]` for one grid.
#[derive(Debug, Clone, PartialEq)]
pub struct CoeffVector {
    c: Vec<f64>,
    dims: GridDims,
}

impl CoeffVector {
    pub fn new(c: Vec<f64>, dims: GridDims) -> Result<Self> {
        check_len("coefficient vector", 2 * dims.n(), c.len())?;
        Ok(CoeffVector { c, dims })
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.c
    }

    pub fn dims(&self) -> GridDims {
        self.dims
    }

    pub fn cx(&self) -> &[f64] {
        &self.c[..self.dims.n()]
    }

    pub fn cy(&self) -> &[f64] {
        &self.c[self.dims.n()..]
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.c
    }
}

/// Diagnostics for one outer iteration.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OuterStep {
    pub t: usize,
    /// `‖B c⁽ᵗ⁾‖₂`.
    pub constraint_norm: f64,
    /// `½‖Φ c⁽ᵗ⁾ − y‖² + λ‖c⁽ᵗ⁾‖₁`.
    pub objective: f64,
    pub inner_iterations: usize,
    pub inner_converged: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DcsState {
    pub c: Vec<f64>,
    /// Multipliers, one per constraint row.
    pub p: Vec<f64>,
    pub t: usize,
    pub constraint_norm: f64,
    pub trace: Vec<OuterStep>,
}

/// Stateful multiplier iteration; [`dcs_solve`] drives it to completion.
#[derive(Debug)]
pub struct AugmentedLagrangian {
    phi: Op,
    b_op: Op,
    stacked: Op,
    y: Vec<f64>,
    params: DcsParams,
    sqrt_delta: f64,
    lipschitz: f64,
    state: DcsState,
    last_report: Option<SolveReport>,
    total_inner: usize,
}

impl AugmentedLagrangian {
    pub fn new(phi: Op, b_op: Op, y: &[f64], params: &DcsParams) -> Result<Self> {
        params.validate()?;
        check_len("measurement vector", phi.out_dim(), y.len())?;
        check_len("constraint input", phi.in_dim(), b_op.in_dim())?;
        let sqrt_delta = params.delta.sqrt();
        let stacked: Op = Arc::new(VStack::new(
            phi.clone(),
            Arc::new(Scaled::new(b_op.clone(), sqrt_delta)),
        )?);
        let lipschitz = estimate_lipschitz(stacked.as_ref());
        let state = DcsState {
            c: vec![0.0; phi.in_dim()],
            p: vec![0.0; b_op.out_dim()],
            t: 0,
            constraint_norm: 0.0,
            trace: Vec::new(),
        };
        Ok(AugmentedLagrangian {
            phi,
            b_op,
            stacked,
            y: y.to_vec(),
            params: *params,
            sqrt_delta,
            lipschitz,
            state,
            last_report: None,
            total_inner: 0,
        })
    }

    pub fn state(&self) -> &DcsState {
        &self.state
    }

    /// Stacked inner operator `[Φ; √δ B]`.
    pub fn inner_operator(&self) -> &Op {
        &self.stacked
    }

    /// Stacked inner data `[y; −√δ p]` for the current multipliers.
    pub fn inner_data(&self) -> Vec<f64> {
        let mut d = self.y.clone();
        d.extend(self.state.p.iter().map(|v| -self.sqrt_delta * v));
        d
    }

    /// Whether the current iterate meets the feasibility tolerance.
    pub fn is_feasible(&self) -> bool {
        self.state.t > 0
            && self.state.constraint_norm <= self.params.constraint_tol * norm2(&self.state.c)
    }

    /// Runs one outer iteration: inner solve, then multiplier update.
    pub fn step(&mut self) -> Result<&OuterStep> {
        let t = self.state.t + 1;
        let data = self.inner_data();
        let (c, report) = fista_solve_with_lipschitz(
            self.stacked.as_ref(),
            &data,
            &self.params.inner_params(),
            Some(&self.state.c),
            self.lipschitz,
        )
        .map_err(|e| match e {
            Error::Numerical { iteration, reason } => Error::Numerical {
                iteration,
                reason: format!("{reason} (outer iteration {t})"),
            },
            other => other,
        })?;
        self.lipschitz = report.lipschitz;

        let bc = self.b_op.forward(&c)?;
        let constraint_norm = norm2(&bc);
        if !constraint_norm.is_finite() {
            return Err(Error::numerical(t, "constraint norm is not finite"));
        }
        for (pi, bi) in self.state.p.iter_mut().zip(&bc) {
            *pi += bi;
        }
        let obj = objective(self.phi.as_ref(), &self.y, &c, self.params.lambda)?;
        self.total_inner += report.iterations;
        self.state.c = c;
        self.state.t = t;
        self.state.constraint_norm = constraint_norm;
        self.state.trace.push(OuterStep {
            t,
            constraint_norm,
            objective: obj,
            inner_iterations: report.iterations,
            inner_converged: report.converged,
        });
        self.last_report = Some(report);
        Ok(self.state.trace.last().expect("just pushed"))
    }

    /// Iterates until feasible or `outer_iters` is exhausted.
    pub fn run(mut self) -> Result<(Vec<f64>, DcsState, SolveReport)> {
        while self.state.t < self.params.outer_iters {
            self.step()?;
            if self.is_feasible() {
                break;
            }
        }
        let feasible = self.is_feasible();
        let last = self.last_report.take().expect("at least one outer iteration");
        let final_objective = self.state.trace.last().map_or(f64::NAN, |s| s.objective);
        let report = SolveReport {
            iterations: self.total_inner,
            final_objective,
            kkt_residual: last.kkt_residual,
            converged: feasible,
            lipschitz: self.lipschitz,
            objective_history: self.state.trace.iter().map(|s| s.objective).collect(),
        };
        Ok((self.state.c.clone(), self.state, report))
    }
}

/// Constrained reconstruction of the coefficient vector of `sys`.
pub fn dcs_solve(
    sys: &StackedSystem,
    params: &DcsParams,
) -> Result<(CoeffVector, DcsState, SolveReport)> {
    let solver = AugmentedLagrangian::new(sys.phi.clone(), sys.b_op.clone(), &sys.y, params)?;
    let (c, state, report) = solver.run()?;
    Ok((CoeffVector::new(c, sys.dims)?, state, report))
}

/// Synthesizes `(z_x, z_y) = (W c_x, W c_y)`.
pub fn recover_gradients(c: &CoeffVector, sys: &StackedSystem) -> Result<GradientField> {
    if c.dims() != sys.dims {
        return Err(Error::Contract(format!(
            "coefficients for {} grid, system is {}",
            c.dims(),
            sys.dims
        )));
    }
    let zx = haar_inverse(c.cx(), sys.dims)?;
    let zy = haar_inverse(c.cy(), sys.dims)?;
    GradientField::new(sys.dims, zx, zy)
}
