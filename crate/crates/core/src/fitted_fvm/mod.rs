//! Fitted finite volume operator `E(τ, α)` and load `F(τ, α)`.
//!
//! The semidiscrete system reads `dv/dτ + inf_α [E v + F] = 0`: row `I` of
//! `E` is the negated flux balance of control volume `I` divided by its
//! volume, and `F` collects the boundary couplings and the negated source.
//! [`assemble_3d`] writes the seven-point coefficients of the three-dimensional
//! scheme one by one; [`assemble_nd`] loops over axes generically.

mod assemble_3d;
mod assemble_nd;
pub mod export;
mod mmatrix;
pub mod weights;

use std::sync::Arc;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::mesh::TensorMesh;
use crate::problem::{BoundaryPolicy, ControlProblem, FaceMode};
use crate::sparse::CsrMatrix;

pub use assemble_3d::assemble_3d;
pub use assemble_nd::assemble_nd;
pub use mmatrix::{m_matrix_check, MMatrixReport};
pub use weights::{fitted_pair, FittedFactor};

/// A boundary node feeding row `row` of the load through `coeff · g(τ, point)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Coupling {
    pub coeff: f64,
    pub point: Vec<f64>,
}

/// Assembled `E`, `F` pair for one control assignment at one time.
#[derive(Debug, Clone)]
pub struct SpatialOperator {
    pub matrix: Arc<CsrMatrix>,
    pub load: Vec<f64>,
    /// Control used on each row.
    pub controls: Vec<f64>,
    pub tau: f64,
    couplings: Vec<Vec<Coupling>>,
}

impl SpatialOperator {
    pub fn order(&self) -> usize {
        self.load.len()
    }

    /// `(E v + F)_i`.
    pub fn row_value(&self, i: usize, v: &[f64]) -> f64 {
        self.matrix.row_dot(i, v) + self.load[i]
    }

    /// `E v + F`.
    pub fn apply(&self, v: &[f64]) -> Vec<f64> {
        let mut out = self.matrix.mul_vec(v);
        for (o, f) in out.iter_mut().zip(&self.load) {
            *o += f;
        }
        out
    }

    pub fn couplings(&self, row: usize) -> &[Coupling] {
        &self.couplings[row]
    }

    /// Same matrix, load recomputed at `tau`. Only valid when the problem's
    /// coefficients do not depend on time.
    pub fn retimed(&self, problem: &dyn ControlProblem, mesh: &TensorMesh, tau: f64) -> Self {
        let load = (0..self.order())
            .into_par_iter()
            .map(|row| {
                let idx = mesh.multi_index(row).expect("row inside mesh");
                let point = mesh.point(idx.as_slice());
                row_load(problem, tau, &point, self.controls[row], &self.couplings[row])
            })
            .collect();
        Self {
            matrix: Arc::clone(&self.matrix),
            load,
            controls: self.controls.clone(),
            tau,
            couplings: self.couplings.clone(),
        }
    }

    /// Row `i` copied from `sources[pick[i]]`. Valid because row `i` depends
    /// only on the control at node `i`.
    pub fn mix(sources: &[&SpatialOperator], pick: &[usize]) -> Self {
        let matrices: Vec<&CsrMatrix> = sources.iter().map(|s| s.matrix.as_ref()).collect();
        let matrix = CsrMatrix::select_rows(&matrices, pick);
        let load = pick.iter().enumerate().map(|(i, &s)| sources[s].load[i]).collect();
        let controls = pick.iter().enumerate().map(|(i, &s)| sources[s].controls[i]).collect();
        let couplings = pick.iter().enumerate().map(|(i, &s)| sources[s].couplings[i].clone()).collect();
        Self { matrix: Arc::new(matrix), load, controls, tau: sources[0].tau, couplings }
    }
}

impl AsRef<CsrMatrix> for SpatialOperator {
    fn as_ref(&self) -> &CsrMatrix {
        &self.matrix
    }
}

impl AsRef<CsrMatrix> for CsrMatrix {
    fn as_ref(&self) -> &CsrMatrix {
        self
    }
}

/// A spatial discretization producing `E`, `F` for a per-node control assignment.
pub trait SpatialScheme: Send + Sync {
    fn name(&self) -> &'static str;

    fn assemble(
        &self,
        problem: &dyn ControlProblem,
        mesh: &TensorMesh,
        tau: f64,
        controls: &[f64],
    ) -> Result<SpatialOperator>;
}

/// Explicit three-dimensional fitted scheme.
#[derive(Debug, Clone, Copy, Default)]
pub struct Fitted3d;

/// Generic n-dimensional fitted scheme.
#[derive(Debug, Clone, Copy, Default)]
pub struct FittedNd;

impl SpatialScheme for Fitted3d {
    fn name(&self) -> &'static str {
        "fitted"
    }

    fn assemble(
        &self,
        problem: &dyn ControlProblem,
        mesh: &TensorMesh,
        tau: f64,
        controls: &[f64],
    ) -> Result<SpatialOperator> {
        assemble_3d(problem, mesh, tau, controls)
    }
}

impl SpatialScheme for FittedNd {
    fn name(&self) -> &'static str {
        "fitted"
    }

    fn assemble(
        &self,
        problem: &dyn ControlProblem,
        mesh: &TensorMesh,
        tau: f64,
        controls: &[f64],
    ) -> Result<SpatialOperator> {
        assemble_nd(problem, mesh, tau, controls)
    }
}

/// The explicit path for 3D meshes, the generic one otherwise.
pub fn fitted_scheme(dim: usize) -> Box<dyn SpatialScheme> {
    if dim == 3 {
        Box::new(Fitted3d)
    } else {
        Box::new(FittedNd)
    }
}

pub(crate) fn check_inputs(problem: &dyn ControlProblem, mesh: &TensorMesh, controls: &[f64]) -> Result<()> {
    if problem.dim() != mesh.dim() {
        return Err(Error::Dimension { expected: mesh.dim(), got: problem.dim() });
    }
    if controls.len() != mesh.unknowns() {
        return Err(Error::Dimension { expected: mesh.unknowns(), got: controls.len() });
    }
    if let Some(a) = controls.iter().find(|a| !a.is_finite()) {
        return Err(Error::ControlSet(format!("non-finite control {a}")));
    }
    Ok(())
}

fn row_load(problem: &dyn ControlProblem, tau: f64, point: &[f64], alpha: f64, couplings: &[Coupling]) -> f64 {
    let mut load = -problem.source(tau, point, alpha);
    for c in couplings {
        load += c.coeff * problem.boundary_value(tau, &c.point);
    }
    load
}

/// One assembled row before it is packed into CSR form.
#[derive(Debug, Clone, Default)]
pub(crate) struct Row {
    pub entries: Vec<(usize, f64)>,
    pub couplings: Vec<Coupling>,
}

impl Row {
    /// Adds `coeff` against the neighbor of `idx` at `offset` along `axis`.
    /// Boundary neighbors become load couplings or vanish, per face mode.
    pub fn neighbor(
        &mut self,
        mesh: &TensorMesh,
        policy: &BoundaryPolicy,
        idx: &[usize],
        axis: usize,
        offset: isize,
        coeff: f64,
    ) {
        let mut nb = idx.to_vec();
        nb[axis] = (idx[axis] as isize + offset) as usize;
        let last = mesh.axis(axis).intervals();
        let mode = if nb[axis] == 0 {
            Some(policy.lower(axis))
        } else if nb[axis] == last {
            Some(policy.upper(axis))
        } else {
            None
        };
        match mode {
            None => {
                let col = mesh.flat_index(&nb).expect("interior neighbor");
                self.entries.push((col, coeff));
            }
            Some(FaceMode::Dirichlet) => self.couplings.push(Coupling { coeff, point: mesh.point(&nb) }),
            Some(FaceMode::Zero) => {}
        }
    }
}

/// Runs `build` for every interior node in parallel and packs the rows.
pub(crate) fn assemble_rows(
    problem: &dyn ControlProblem,
    mesh: &TensorMesh,
    tau: f64,
    controls: &[f64],
    build: impl Fn(&[usize], f64) -> Result<Row> + Sync,
) -> Result<SpatialOperator> {
    check_inputs(problem, mesh, controls)?;
    let rows: Vec<(Row, f64)> = (0..mesh.unknowns())
        .into_par_iter()
        .map(|flat| {
            let idx = mesh.multi_index(flat)?;
            let row = build(idx.as_slice(), controls[flat])?;
            if let Some((_, v)) = row.entries.iter().find(|(_, v)| !v.is_finite()) {
                return Err(Error::Parameters(format!("non-finite operator entry {v} in row {flat}")));
            }
            let point = mesh.point(idx.as_slice());
            let load = row_load(problem, tau, &point, controls[flat], &row.couplings);
            Ok((row, load))
        })
        .collect::<Result<_>>()?;
    let mut entries = Vec::with_capacity(rows.len());
    let mut load = Vec::with_capacity(rows.len());
    let mut couplings = Vec::with_capacity(rows.len());
    for (row, f) in rows {
        entries.push(row.entries);
        couplings.push(row.couplings);
        load.push(f);
    }
    Ok(SpatialOperator {
        matrix: Arc::new(CsrMatrix::from_rows(entries)),
        load,
        controls: controls.to_vec(),
        tau,
        couplings,
    })
}
