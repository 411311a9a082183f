use super::{assemble_rows, fitted_pair, Row, SpatialOperator};
use crate::error::{Error, Result};
use crate::mesh::TensorMesh;
use crate::problem::{cross, ControlProblem};

/// Seven-point fitted operator on a 3D mesh, coefficient by coefficient.
///
/// `controls[I]` is the control at interior node `I` (0-based flat order,
/// first axis fastest). Rows next to a face `x_i = 0` use the averaged
/// first-cell flux; all other edges use [`fitted_pair`]. Cross derivatives
/// are forward differences evaluated at the node.
pub fn assemble_3d(
    problem: &dyn ControlProblem,
    mesh: &TensorMesh,
    tau: f64,
    controls: &[f64],
) -> Result<SpatialOperator> {
    if mesh.dim() != 3 {
        return Err(Error::Dimension { expected: 3, got: mesh.dim() });
    }
    let policy = problem.boundary_policy();
    let (ax, ay, az) = (mesh.axis(0), mesh.axis(1), mesh.axis(2));
    assemble_rows(problem, mesh, tau, controls, |idx, alpha| {
        let (i, j, k) = (idx[0], idx[1], idx[2]);
        let (x, y, z) = (ax.node(i), ay.node(j), az.node(k));
        let (hx, hy, hz) = (ax.width(i), ay.width(j), az.width(k));
        let node = [x, y, z];
        let abar = |p: [f64; 3], axis| problem.diffusion_factor(tau, &p, alpha, axis);
        let drift = |p: [f64; 3], axis| problem.drift_factor(tau, &p, alpha, axis);

        let d12 = cross(problem, tau, &node, alpha, 0, 1);
        let d13 = cross(problem, tau, &node, alpha, 0, 2);
        let d23 = cross(problem, tau, &node, alpha, 1, 2);
        let c = problem.reaction(tau, &node, alpha);

        let mut center = d13 * x * y / hx
            + d12 * x * z / hx
            + d12 * y * z / hy
            + d23 * x * y / hy
            + d13 * y * z / hz
            + d23 * x * z / hz
            - c;

        // x direction
        let xe = ax.face_above(i);
        let pe = [xe, y, z];
        let fe = fitted_pair(drift(pe, 0), abar(pe, 0), x, ax.node(i + 1))?;
        let east = -d13 * x * y / hx - d12 * x * z / hx - xe * fe.up / hx;
        center += xe * fe.down / hx;
        let xw = ax.face_below(i);
        let pw = [xw, y, z];
        let west = if i == 1 && ax.lo() == 0.0 {
            let w = x / (2.0 * ax.node(2));
            center += w * (abar(pw, 0) + drift(pw, 0));
            -w * (abar(pw, 0) - drift(pw, 0))
        } else {
            let fw = fitted_pair(drift(pw, 0), abar(pw, 0), ax.node(i - 1), x)?;
            center += xw * fw.up / hx;
            -xw * fw.down / hx
        };

        // y direction
        let yn = ay.face_above(j);
        let pn = [x, yn, z];
        let fn_ = fitted_pair(drift(pn, 1), abar(pn, 1), y, ay.node(j + 1))?;
        let north = -d12 * y * z / hy - d23 * x * y / hy - yn * fn_.up / hy;
        center += yn * fn_.down / hy;
        let ys = ay.face_below(j);
        let ps = [x, ys, z];
        let south = if j == 1 && ay.lo() == 0.0 {
            let w = y / (2.0 * ay.node(2));
            center += w * (abar(ps, 1) + drift(ps, 1));
            -w * (abar(ps, 1) - drift(ps, 1))
        } else {
            let fs = fitted_pair(drift(ps, 1), abar(ps, 1), ay.node(j - 1), y)?;
            center += ys * fs.up / hy;
            -ys * fs.down / hy
        };

        // z direction
        let zu = az.face_above(k);
        let pu = [x, y, zu];
        let fu = fitted_pair(drift(pu, 2), abar(pu, 2), z, az.node(k + 1))?;
        let up = -d13 * y * z / hz - d23 * x * z / hz - zu * fu.up / hz;
        center += zu * fu.down / hz;
        let zd = az.face_below(k);
        let pd = [x, y, zd];
        let down = if k == 1 && az.lo() == 0.0 {
            let w = z / (2.0 * az.node(2));
            center += w * (abar(pd, 2) + drift(pd, 2));
            -w * (abar(pd, 2) - drift(pd, 2))
        } else {
            let fd = fitted_pair(drift(pd, 2), abar(pd, 2), az.node(k - 1), z)?;
            center += zd * fd.up / hz;
            -zd * fd.down / hz
        };

        let mut row = Row::default();
        row.entries.push((mesh.flat_index(idx)?, center));
        row.neighbor(mesh, &policy, idx, 0, -1, west);
        row.neighbor(mesh, &policy, idx, 0, 1, east);
        row.neighbor(mesh, &policy, idx, 1, -1, south);
        row.neighbor(mesh, &policy, idx, 1, 1, north);
        row.neighbor(mesh, &policy, idx, 2, -1, down);
        row.neighbor(mesh, &policy, idx, 2, 1, up);
        Ok(row)
    })
}
