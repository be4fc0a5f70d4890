//! Linear operators: the Haar basis `W`, difference operators `D_x`/`D_y`,
//! Gaussian sensing matrices `Ψ`, and the stacked system built from them.

mod diff;
mod haar;
mod linear;
mod sensing;
mod system;

pub use diff::{make_diff_ops, Axis, DiffOp, DiffOps};
pub use haar::{
    haar_forward, haar_forward_in_place, haar_inverse, haar_inverse_in_place, HaarBasis,
};
pub use linear::{
    adjoint_gap, materialize, BlockDiag, Compose, DenseMatrix, Difference, Half, Identity,
    LinearOp, Op, Scaled, Selector, VStack, ZeroOp,
};
pub use sensing::{make_sensing, SensingOp};
pub use system::{
    assemble_system, constraint_operator, gradient_coefficients, stacked_measurement,
    StackedSystem,
};
