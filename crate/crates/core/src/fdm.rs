//! Finite difference baseline on the same grid and in the same `E`, `F` convention.
//!
//! The operator is expanded to non-divergence form,
//! `Σ a_ii v_ii + Σ μ_i v_i + (Σ ∂_i(x_i b_i) + c) v` with `μ_i = ∂_i a_ii + x_i b_i`,
//! and discretized with central three-point second differences on the
//! nonuniform grid and first-order upwinding of `μ_i`. Cross terms reuse the
//! forward-difference coefficients of the fitted scheme so that a comparison
//! isolates the axis fluxes. The first cell gets no special treatment.

use crate::error::{Error, Result};
use crate::fitted_fvm::{assemble_rows, Row, SpatialOperator, SpatialScheme};
use crate::mesh::TensorMesh;
use crate::problem::{cross, ControlProblem};

#[derive(Debug, Clone, Copy, Default)]
pub struct FdmScheme;

impl SpatialScheme for FdmScheme {
    fn name(&self) -> &'static str {
        "fdm"
    }

    fn assemble(
        &self,
        problem: &dyn ControlProblem,
        mesh: &TensorMesh,
        tau: f64,
        controls: &[f64],
    ) -> Result<SpatialOperator> {
        assemble_fdm(problem, mesh, tau, controls)
    }
}

pub fn assemble_fdm(
    problem: &dyn ControlProblem,
    mesh: &TensorMesh,
    tau: f64,
    controls: &[f64],
) -> Result<SpatialOperator> {
    let n = mesh.dim();
    let policy = problem.boundary_policy();
    if policy.dim() != n {
        return Err(Error::Dimension { expected: n, got: policy.dim() });
    }
    assemble_rows(problem, mesh, tau, controls, |idx, alpha| {
        let node = mesh.point(idx);
        let mut row = Row::default();
        let mut center = -(problem.drift_divergence(tau, &node, alpha) + problem.reaction(tau, &node, alpha));
        for i in 0..n {
            let axis = mesh.axis(i);
            let q = idx[i];
            let x = node[i];
            let h_minus = x - axis.node(q - 1);
            let h_plus = axis.node(q + 1) - x;
            let span = h_plus + h_minus;
            let a = problem.diffusion_factor(tau, &node, alpha, i) * x * x;
            let mu = problem.axis_drift(tau, &node, alpha, i);
            let east = 2.0 * a / (h_plus * span) + mu.max(0.0) / h_plus;
            let west = 2.0 * a / (h_minus * span) + (-mu).max(0.0) / h_minus;
            center += east + west;
            row.neighbor(mesh, &policy, idx, i, 1, -east);
            row.neighbor(mesh, &policy, idx, i, -1, -west);

            let others: f64 = (0..n).filter(|&s| s != i).map(|s| node[s]).product();
            for r in (0..n).filter(|&r| r != i) {
                let kappa = cross(problem, tau, &node, alpha, i, r) * others / mesh.axis(r).width(idx[r]);
                center += kappa;
                row.neighbor(mesh, &policy, idx, r, 1, -kappa);
            }
        }
        row.entries.push((mesh.flat_index(idx)?, center));
        Ok(row)
    })
}
