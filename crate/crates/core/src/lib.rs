//! Surface reconstruction from compressively sampled gradient fields.
//!
//! A height map `z` is observed only through random projections of its
//! partial derivatives, `b_x = Ψ_x z_x + n_x` and `b_y = Ψ_y z_y + n_y`. Both
//! derivative fields are assumed sparse in an orthonormal Haar basis `W`, and
//! they must satisfy the discrete cross-derivative identity
//! `D_x z_y = D_y z_x`. The crate recovers the Haar coefficients with an
//! L1-regularized, constraint-enforcing augmented-Lagrangian solver, then
//! integrates the recovered gradients back to a surface.
//!
//! ```
//! use dcs_core::prelude::*;
//!
//! let dims = GridDims::square(8)?;
//! let surface = gen_surface(SurfaceKind::Sphere, dims);
//! let sys = assemble_system(&surface, 1, 2, dims.n(), &NoiseSpec::none(), 3)?;
//! let params = DcsParams::default().with_hyper(1e-6, 2.0);
//! let (c, _state, _report) = dcs_solve(&sys, &params)?;
//! let score = score(&surface, &recover_gradients(&c, &sys)?)?;
//! assert!(score.snr_surface_db > 40.0);
//! # Ok::<(), dcs_core::Error>(())
//! ```
//!
//! Modules map onto the pipeline stages: [`operators`] (basis, differences,
//! sensing, stacked system), [`sparse_solver`] (FISTA and its optimality
//! certificate), [`dcs`] (the multiplier iteration), [`poisson`]
//! (integration), [`noise`], [`metrics`], and [`sweep`] (grid search).

pub mod dcs;
mod error;
pub mod float_repr;
pub mod grid;
pub mod metrics;
pub mod noise;
pub mod operators;
pub mod poisson;
pub mod seed;
pub mod sparse_solver;
pub mod surfaces;
pub mod sweep;

pub use error::{Error, Result};

pub mod prelude {
    pub use crate::dcs::{dcs_solve, recover_gradients, CoeffVector, DcsParams, DcsState};
    pub use crate::grid::{GradientField, GridDims, SurfaceGrid};
    pub use crate::metrics::{score, snr_db, Score};
    pub use crate::noise::{apply_noise, NoiseKind, NoiseSpec};
    pub use crate::operators::{assemble_system, LinearOp, StackedSystem};
    pub use crate::poisson::{align_mean, integrate};
    pub use crate::sparse_solver::{fista_solve, kkt_residual, soft_threshold, SolverParams};
    pub use crate::surfaces::{gen_surface, load_surface, SurfaceKind};
    pub use crate::sweep::{run_grid, select_optimal, HyperGrid, SweepConfig, SweepResult};
    pub use crate::Error;
}

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../README.md")]
    mod readme {}
    #[doc = include_str!("../../../book/src/quickstart.md")]
    mod quickstart {}
    #[doc = include_str!("../../../book/src/operators.md")]
    mod operators {}
    #[doc = include_str!("../../../book/src/solver.md")]
    mod solver {}
    #[doc = include_str!("../../../book/src/dcs.md")]
    mod dcs {}
    #[doc = include_str!("../../../book/src/poisson-metrics.md")]
    mod poisson_metrics {}
    #[doc = include_str!("../../../book/src/noise.md")]
    mod noise {}
    #[doc = include_str!("../../../book/src/sweep.md")]
    mod sweep {}
    #[doc = include_str!("../../../book/src/cli.md")]
    mod cli {}
}
