use super::{assemble_rows, fitted_pair, Row, SpatialOperator};
use crate::error::{Error, Result};
use crate::mesh::TensorMesh;
use crate::problem::{cross, ControlProblem};

/// Fitted operator on a mesh of any dimension.
///
/// Each control volume balances the fluxes through its `2n` faces. Face
/// fluxes are integrated over the face area and divided by the volume; the
/// cross-diffusion flux `a_ir ∂_r v` is taken with a forward difference in `r`
/// and the net over the two `i`-faces is formed from the face coordinates.
pub fn assemble_nd(
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
        let widths: Vec<f64> = (0..n).map(|s| mesh.axis(s).width(idx[s])).collect();
        let volume: f64 = widths.iter().product();
        let mut row = Row::default();
        let mut center = -problem.reaction(tau, &node, alpha);

        for i in 0..n {
            let axis = mesh.axis(i);
            let q = idx[i];
            let area: f64 = (0..n).filter(|&s| s != i).map(|s| widths[s]).product();
            let scale = area / volume;
            let mut face = node.clone();

            let x_plus = axis.face_above(q);
            face[i] = x_plus;
            let w = fitted_pair(
                problem.drift_factor(tau, &face, alpha, i),
                problem.diffusion_factor(tau, &face, alpha, i),
                axis.node(q),
                axis.node(q + 1),
            )?;
            center += x_plus * w.down * scale;
            row.neighbor(mesh, &policy, idx, i, 1, -x_plus * w.up * scale);

            let x_minus = axis.face_below(q);
            face[i] = x_minus;
            let a = problem.diffusion_factor(tau, &face, alpha, i);
            let b = problem.drift_factor(tau, &face, alpha, i);
            if q == 1 && axis.is_degenerate() {
                // degenerate first cell: averaged flux on [0, x_1]
                let half = 0.5 * x_minus * scale;
                center += half * (a + b);
                row.neighbor(mesh, &policy, idx, i, -1, -half * (a - b));
            } else {
                let w = fitted_pair(b, a, axis.node(q - 1), axis.node(q))?;
                center += x_minus * w.up * scale;
                row.neighbor(mesh, &policy, idx, i, -1, -x_minus * w.down * scale);
            }

            let others: f64 = (0..n).filter(|&s| s != i).map(|s| node[s]).product();
            for r in (0..n).filter(|&r| r != i) {
                let net = cross(problem, tau, &node, alpha, i, r) * others * (x_plus - x_minus);
                let kappa = net * scale / widths[r];
                center += kappa;
                row.neighbor(mesh, &policy, idx, r, 1, -kappa);
            }
        }
        row.entries.push((mesh.flat_index(idx)?, center));
        Ok(row)
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::Axis;
    use crate::problem::{ConstantProblem, FnProblem};
    use approx::assert_relative_eq;

    #[test]
    fn one_dimensional_hand_assembly() {
        // 5 nodes on [0, 1], 3 interior nodes; ā = 1, b = 0.5, c = −1
        let mesh = TensorMesh::uniform(&[(0.0, 1.0)], &[4]).unwrap();
        let p = ConstantProblem { a_bar: 1.0, b: 0.5, c: -1.0, ..ConstantProblem::new(1) };
        let op = assemble_nd(&p, &mesh, 0.0, &[0.0; 3]).unwrap();
        let h = 0.25;
        let f = |lo: f64, hi: f64| fitted_pair(0.5, 1.0, lo, hi).unwrap();
        let (f12, f23, f34) = (f(0.25, 0.5), f(0.5, 0.75), f(0.75, 1.0));
        // row 1: averaged first cell, x_{1/2} = 0.125
        let w = 0.125 / (2.0 * h);
        assert_relative_eq!(op.matrix.get(0, 0), w * 1.5 + 0.375 * f12.down / h + 1.0, max_relative = 1e-14);
        assert_relative_eq!(op.matrix.get(0, 1), -0.375 * f12.up / h, max_relative = 1e-14);
        // row 2
        assert_relative_eq!(op.matrix.get(1, 0), -0.375 * f12.down / h, max_relative = 1e-14);
        assert_relative_eq!(op.matrix.get(1, 1), 0.375 * f12.up / h + 0.625 * f23.down / h + 1.0, max_relative = 1e-14);
        assert_relative_eq!(op.matrix.get(1, 2), -0.625 * f23.up / h, max_relative = 1e-14);
        // row 3, right neighbor is the boundary
        assert_relative_eq!(op.matrix.get(2, 1), -0.625 * f23.down / h, max_relative = 1e-14);
        assert_relative_eq!(op.matrix.get(2, 2), 0.625 * f23.up / h + 0.875 * f34.down / h + 1.0, max_relative = 1e-14);
        assert_eq!(op.matrix.nnz(), 7);
        // boundary data 1 at τ = 0
        assert_relative_eq!(op.load[0], -w * 0.5, max_relative = 1e-14);
        assert_eq!(op.load[1], 0.0);
        assert_relative_eq!(op.load[2], -0.875 * f34.up / h, max_relative = 1e-14);
    }

    #[test]
    fn two_dimensional_five_point_structure() {
        let mesh = TensorMesh::uniform(&[(0.0, 1.0), (0.0, 2.0)], &[6, 5]).unwrap();
        let p = ConstantProblem { a_bar: 0.2, b: -0.1, ..ConstantProblem::new(2) };
        let op = assemble_nd(&p, &mesh, 0.0, &vec![0.0; mesh.unknowns()]).unwrap();
        for idx in mesh.interior_indices() {
            let flat = mesh.flat_index(idx.as_slice()).unwrap();
            let interior_neighbors = (0..2)
                .flat_map(|s| [idx.0[s] - 1, idx.0[s] + 1].map(|v| (s, v)))
                .filter(|&(s, v)| v > 0 && v < mesh.axis(s).intervals())
                .count();
            assert_eq!(op.matrix.row(flat).count(), 1 + interior_neighbors);
        }
    }

    #[test]
    fn pure_diffusion_log_limit_stencil() {
        let mesh = TensorMesh::new(vec![Axis::from_nodes(vec![0.5, 0.7, 1.0, 1.6]).unwrap()]).unwrap();
        let p = FnProblem::builder(1, 1.0).diffusion(|_, _, _, _| 2.0);
        let op = assemble_nd(&p, &mesh, 0.0, &[0.0; 2]).unwrap();
        let lim = |lo: f64, hi: f64| 2.0 / (hi / lo).ln();
        let h1 = mesh.axis(0).width(1);
        let (xm, xp) = (0.6, 0.85);
        assert_relative_eq!(op.matrix.get(0, 0), (xm * lim(0.5, 0.7) + xp * lim(0.7, 1.0)) / h1, max_relative = 1e-14);
        assert_relative_eq!(op.matrix.get(0, 1), -xp * lim(0.7, 1.0) / h1, max_relative = 1e-14);
    }

    #[test]
    fn control_length_checked() {
        let mesh = TensorMesh::uniform(&[(0.0, 1.0)], &[4]).unwrap();
        let p = ConstantProblem::new(1);
        assert!(assemble_nd(&p, &mesh, 0.0, &[0.0; 2]).is_err());
    }
}
