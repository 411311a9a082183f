//! θ-method in time with policy iteration at every step.
//!
//! Marching from `τ_n` to `τ_{n+1}` solves
//!
//! ```text
//! (I + θΔt E^{n+1}(α)) v̂ = v^n − (1−θ)Δt (E^n(α) v^n + F^n(α)) − θΔt F^{n+1}(α)
//! ```
//!
//! where `α` maximizes, node by node, the discrete Hamiltonian
//! `−θΔt [E^{n+1}v̂ + F^{n+1}]_i − (1−θ)Δt [E^n v^n + F^n]_i` at the current
//! iterate `v̂`. Row `i` of `E` only depends on the control at node `i`, so
//! the maximization decouples and the mixed operator is a row selection from
//! a bank of operators assembled with uniform controls.

use log::warn;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::fitted_fvm::{m_matrix_check, MMatrixReport, SpatialOperator, SpatialScheme};
use crate::mesh::TensorMesh;
use crate::problem::{ControlProblem, ControlSet};
use crate::sparse;

#[derive(Debug, Clone, PartialEq)]
pub struct StepperConfig {
    pub theta: f64,
    /// Number of uniform time steps `m`, `Δt = T / m`.
    pub steps: usize,
    /// Stopping tolerance on `‖v̂^{k+1} − v̂^k‖_∞`.
    pub policy_tol: f64,
    pub max_policy_iters: usize,
    /// Scaled residual accepted from the linear solver.
    pub linear_tol: f64,
    /// Check `I + θΔt E` for the selected policy at every level.
    pub audit: bool,
}

impl Default for StepperConfig {
    fn default() -> Self {
        Self { theta: 1.0, steps: 100, policy_tol: 1e-8, max_policy_iters: 50, linear_tol: 1e-10, audit: false }
    }
}

impl StepperConfig {
    pub fn validate(&self) -> Result<()> {
        if !(0.5..=1.0).contains(&self.theta) {
            return Err(Error::Config(format!("theta must lie in [1/2, 1], got {}", self.theta)));
        }
        if self.steps == 0 {
            return Err(Error::Config("need at least one time step".into()));
        }
        if !(self.policy_tol > 0.0) || !(self.linear_tol > 0.0) {
            return Err(Error::Config("tolerances must be positive".into()));
        }
        if self.max_policy_iters == 0 {
            return Err(Error::Config("need at least one policy iteration".into()));
        }
        Ok(())
    }
}

/// Result of one time step.
#[derive(Debug, Clone, PartialEq)]
pub struct PolicyState {
    pub v: Vec<f64>,
    pub controls: Vec<f64>,
    /// Linear solves performed.
    pub iterations: usize,
    /// Last `‖v̂^{k+1} − v̂^k‖_∞`.
    pub residual: f64,
    pub residual_history: Vec<f64>,
    pub converged: bool,
}

/// Operators for every control sample at one time level, all sharing the
/// sample order of the control set.
#[derive(Debug, Clone)]
pub struct ControlBank {
    pub samples: Vec<f64>,
    pub ops: Vec<SpatialOperator>,
    pub tau: f64,
}

impl ControlBank {
    pub fn build(
        scheme: &dyn SpatialScheme,
        problem: &dyn ControlProblem,
        mesh: &TensorMesh,
        controls: &ControlSet,
        tau: f64,
    ) -> Result<Self> {
        let ops = controls
            .samples()
            .iter()
            .map(|&a| scheme.assemble(problem, mesh, tau, &vec![a; mesh.unknowns()]))
            .collect::<Result<_>>()?;
        Ok(Self { samples: controls.samples().to_vec(), ops, tau })
    }

    /// Same matrices with loads at `tau`; requires time-invariant coefficients.
    pub fn retimed(&self, problem: &dyn ControlProblem, mesh: &TensorMesh, tau: f64) -> Self {
        let ops = self.ops.iter().map(|op| op.retimed(problem, mesh, tau)).collect();
        Self { samples: self.samples.clone(), ops, tau }
    }

    /// Operator whose row `i` uses sample `pick[i]`.
    pub fn mixed(&self, pick: &[usize]) -> SpatialOperator {
        let sources: Vec<&SpatialOperator> = self.ops.iter().collect();
        let mut op = SpatialOperator::mix(&sources, pick);
        op.tau = self.tau;
        op
    }
}

/// `−θΔt [E^{n+1} v̂ + F^{n+1}]_node − (1−θ)Δt [E^n v^n + F^n]_node` for
/// operators assembled with the candidate control.
pub fn hamiltonian_row(
    op_next: &SpatialOperator,
    op_now: &SpatialOperator,
    node: usize,
    v_hat: &[f64],
    v_now: &[f64],
    theta: f64,
    dt: f64,
) -> f64 {
    let implicit = -theta * dt * op_next.row_value(node, v_hat);
    if theta == 1.0 {
        implicit
    } else {
        implicit - (1.0 - theta) * dt * op_now.row_value(node, v_now)
    }
}

/// Index of the best `(control, value)` candidate: largest value, ties to the
/// smallest control, independent of the order of `candidates`.
pub fn select_control(candidates: &[(f64, f64)]) -> usize {
    let mut best = 0;
    for (k, &(a, h)) in candidates.iter().enumerate().skip(1) {
        let (ba, bh) = candidates[best];
        if h > bh || (h == bh && a < ba) {
            best = k;
        }
    }
    best
}

fn argmax_policy(
    bank_now: &ControlBank,
    bank_next: &ControlBank,
    v_hat: &[f64],
    v_now: &[f64],
    theta: f64,
    dt: f64,
) -> Vec<usize> {
    (0..v_hat.len())
        .into_par_iter()
        .map(|i| {
            let candidates: Vec<(f64, f64)> = bank_next
                .samples
                .iter()
                .enumerate()
                .map(|(s, &a)| (a, hamiltonian_row(&bank_next.ops[s], &bank_now.ops[s], i, v_hat, v_now, theta, dt)))
                .collect();
            select_control(&candidates)
        })
        .collect()
}

fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

/// The system matrix `I + θΔt E`.
pub fn step_matrix(op: &SpatialOperator, theta: f64, dt: f64) -> sparse::CsrMatrix {
    op.matrix.shifted_identity(theta * dt)
}

/// One time step of policy iteration from `v_now` at `bank_now.tau` to `bank_next.tau`.
pub fn policy_step(
    bank_now: &ControlBank,
    bank_next: &ControlBank,
    v_now: &[f64],
    config: &StepperConfig,
) -> Result<(PolicyState, SpatialOperator)> {
    let theta = config.theta;
    let dt = bank_next.tau - bank_now.tau;
    let mut v_hat = v_now.to_vec();
    let mut pick: Option<Vec<usize>> = None;
    let mut history = Vec::new();
    let mut last_op = None;
    let mut converged = false;
    let mut solves = 0;
    for _ in 0..config.max_policy_iters {
        let next_pick = argmax_policy(bank_now, bank_next, &v_hat, v_now, theta, dt);
        if pick.as_ref() == Some(&next_pick) {
            // same policy, same system: the next iterate would repeat v̂
            history.push(0.0);
            converged = true;
            break;
        }
        let op_next = bank_next.mixed(&next_pick);
        let mut rhs: Vec<f64> = v_now.iter().zip(&op_next.load).map(|(v, f)| v - theta * dt * f).collect();
        if theta < 1.0 {
            let op_now = bank_now.mixed(&next_pick);
            for (r, e) in rhs.iter_mut().zip(op_now.apply(v_now)) {
                *r -= (1.0 - theta) * dt * e;
            }
        }
        let system = step_matrix(&op_next, theta, dt);
        let v_new = sparse::solve(&system, &rhs, config.linear_tol)?;
        solves += 1;
        let residual = max_abs_diff(&v_new, &v_hat);
        history.push(residual);
        v_hat = v_new;
        pick = Some(next_pick);
        last_op = Some(op_next);
        if residual <= config.policy_tol {
            converged = true;
            break;
        }
    }
    let op = last_op.expect("at least one iteration");
    let state = PolicyState {
        controls: op.controls.clone(),
        v: v_hat,
        iterations: solves,
        residual: *history.last().unwrap(),
        residual_history: history,
        converged,
    };
    Ok((state, op))
}

/// Full trajectory from `τ = 0` to `τ = T`.
#[derive(Debug, Clone)]
pub struct Solution {
    /// `v^0, …, v^m` on interior nodes.
    pub levels: Vec<Vec<f64>>,
    /// Selected controls for levels `1..=m`.
    pub policies: Vec<Vec<f64>>,
    pub iterations: Vec<usize>,
    pub residual_histories: Vec<Vec<f64>>,
    /// Steps that hit the iteration cap.
    pub unconverged_steps: Vec<usize>,
    pub dt: f64,
    /// `(level, report)` for step matrices that failed the check, when auditing.
    pub audit_failures: Vec<(usize, MMatrixReport)>,
    pub audited_levels: usize,
}

impl Solution {
    pub fn max_policy_iters(&self) -> usize {
        self.iterations.iter().copied().max().unwrap_or(0)
    }

    pub fn steps(&self) -> usize {
        self.levels.len() - 1
    }
}

/// Marches the terminal data `g` from `τ = 0` to `τ = T`.
pub fn solve(
    scheme: &dyn SpatialScheme,
    problem: &dyn ControlProblem,
    mesh: &TensorMesh,
    controls: &ControlSet,
    config: &StepperConfig,
) -> Result<Solution> {
    config.validate()?;
    let dt = problem.horizon() / config.steps as f64;
    let v0: Vec<f64> = mesh.interior_indices().map(|idx| problem.terminal(&mesh.point(idx.as_slice()))).collect();
    let mut bank_now = ControlBank::build(scheme, problem, mesh, controls, 0.0)?;
    let mut solution = Solution {
        levels: vec![v0],
        policies: Vec::with_capacity(config.steps),
        iterations: Vec::with_capacity(config.steps),
        residual_histories: Vec::with_capacity(config.steps),
        unconverged_steps: Vec::new(),
        dt,
        audit_failures: Vec::new(),
        audited_levels: 0,
    };
    for n in 0..config.steps {
        let tau_next = (n + 1) as f64 * dt;
        let bank_next = if problem.time_invariant() {
            bank_now.retimed(problem, mesh, tau_next)
        } else {
            ControlBank::build(scheme, problem, mesh, controls, tau_next)?
        };
        let v_now = solution.levels.last().unwrap();
        let (state, op) = policy_step(&bank_now, &bank_next, v_now, config)?;
        if !state.converged {
            warn!("policy iteration did not converge at step {} (residual {:e})", n + 1, state.residual);
            solution.unconverged_steps.push(n + 1);
        }
        if config.audit {
            let report = m_matrix_check(step_matrix(&op, config.theta, dt));
            if !report.is_m_matrix {
                solution.audit_failures.push((n + 1, report));
            }
            solution.audited_levels += 1;
        }
        solution.iterations.push(state.iterations);
        solution.residual_histories.push(state.residual_history);
        solution.policies.push(state.controls);
        solution.levels.push(state.v);
        bank_now = bank_next;
    }
    Ok(solution)
}
