//! Fitted finite volume solver for degenerate Hamilton–Jacobi–Bellman equations.
//!
//! The crate discretizes HJB equations of stochastic optimal control posed on a
//! truncated box `[0, x_max]^n` in divergence form
//!
//! ```text
//! -v_τ + sup_α [ ∇·(A ∇v + b v) + c v + f ] = 0,   a_ii = ā_i x_i²,  a_ir = d_ir Π x_k
//! ```
//!
//! using an exponentially fitted finite volume scheme in space, an implicit
//! θ-method in time, and per-node policy iteration for the control. A
//! standard finite difference discretization of the same operator is provided
//! as a comparison baseline, together with the three-asset Merton portfolio
//! benchmark and its closed-form value function.
//!
//! Module map:
//! - [`mesh`]: tensor-product grids, control-volume widths, interior linearization.
//! - [`problem`]: the coefficient interface, control sets and boundary policies.
//! - [`fitted_fvm`]: fitted operator assembly (explicit 3D and generic n-D) and M-matrix checks.
//! - [`fdm`]: the finite difference baseline operator.
//! - [`stepper`]: θ-method time marching with policy iteration.
//! - [`merton`]: the Merton benchmark problem and its Ansatz solution.
//! - [`metrics`]: space-time L² errors and temporal order fits.
//! - [`cli`]: configuration-driven experiment runner behind the `fitted-hjb` binary.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod error;
pub mod fdm;
pub mod fitted_fvm;
pub mod merton;
pub mod mesh;
pub mod metrics;
pub mod problem;
pub mod sparse;
pub mod stepper;

pub use error::{Error, Result};
pub use fdm::FdmScheme;
pub use fitted_fvm::{
    assemble_3d, assemble_nd, fitted_pair, m_matrix_check, Fitted3d, FittedFactor, FittedNd, MMatrixReport,
    SpatialOperator, SpatialScheme,
};
pub use merton::{MertonParams, MertonProblem, PsiSign};
pub use mesh::{Axis, MultiIndex, TensorMesh};
pub use problem::{BoundaryPolicy, ConstantProblem, ControlProblem, ControlSet, FaceMode};
pub use stepper::{PolicyState, Solution, StepperConfig};
