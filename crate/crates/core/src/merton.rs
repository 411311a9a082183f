//! Three-asset Merton portfolio benchmark.
//!
//! Wealth in a mixed riskless/risky account `x` (fraction `α` in the risky
//! asset) and two risky holdings `y`, `z` driven by one Brownian motion, with
//! product power utility `x^p y^p z^p / p³`. The value function is separable,
//! `v = ψ(τ) x^p y^p z^p / p³` with `ψ(τ) = e^{pρτ}`, where `ρ` maximizes the
//! α-quadratic [`rho_objective`].

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mesh::TensorMesh;
use crate::problem::{BoundaryPolicy, ControlProblem};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MertonParams {
    pub r1: f64,
    pub mu1: f64,
    pub mu2: f64,
    pub mu3: f64,
    pub sigma: f64,
    pub p: f64,
    #[serde(rename = "T")]
    pub horizon: f64,
    /// Upper bounds `(x_max, y_max, z_max)`; the lower bounds are 0.
    pub bounds: [f64; 3],
    /// Interval counts per axis.
    pub n: [usize; 3],
    /// Listed with the second preset, not used by any coefficient.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub r2: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub r3: Option<f64>,
}

impl MertonParams {
    pub fn table1() -> Self {
        Self {
            r1: 0.0449,
            mu1: 0.0657,
            mu2: 0.067,
            mu3: 0.066,
            sigma: 0.2537,
            p: 0.13,
            horizon: 1.0,
            bounds: [0.5, 0.25, 0.5],
            n: [10, 10, 10],
            r2: None,
            r3: None,
        }
    }

    pub fn table2() -> Self {
        Self {
            mu2: 0.0656,
            mu3: 0.0655,
            p: 0.17,
            horizon: 1.5,
            n: [8, 9, 10],
            r2: Some(0.0448 / 3.0),
            r3: Some(0.0447),
            ..Self::table1()
        }
    }

    pub fn preset(name: &str) -> Option<Self> {
        match name {
            "table1" => Some(Self::table1()),
            "table2" => Some(Self::table2()),
            _ => None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let all = [self.r1, self.mu1, self.mu2, self.mu3, self.sigma, self.p, self.horizon];
        if all.iter().any(|v| !v.is_finite()) {
            return Err(Error::Parameters("non-finite Merton parameter".into()));
        }
        if !(self.p > 0.0 && self.p < 1.0) {
            return Err(Error::Parameters(format!("p must lie in (0, 1), got {}", self.p)));
        }
        if !(self.mu1 > self.r1) {
            return Err(Error::Parameters(format!("need mu1 > r1, got {} <= {}", self.mu1, self.r1)));
        }
        if !(self.sigma > 0.0) {
            return Err(Error::Parameters(format!("sigma must be positive, got {}", self.sigma)));
        }
        if !(self.horizon > 0.0) {
            return Err(Error::Parameters(format!("T must be positive, got {}", self.horizon)));
        }
        if self.bounds.iter().any(|b| !(*b > 0.0)) {
            return Err(Error::Parameters("domain bounds must be positive".into()));
        }
        if self.n.iter().any(|&n| n < 2) {
            return Err(Error::Parameters("need at least 2 intervals per axis".into()));
        }
        Ok(())
    }

    pub fn mesh(&self) -> Result<TensorMesh> {
        let bounds: Vec<(f64, f64)> = self.bounds.iter().map(|&hi| (0.0, hi)).collect();
        TensorMesh::uniform(&bounds, &self.n)
    }
}

/// Time factor of the closed-form solution.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PsiSign {
    /// `ψ(τ) = e^{pρτ}`, which satisfies `ψ' = pρψ` and `ψ(0) = 1`.
    #[default]
    Derived,
    /// `ψ(τ) = e^{p(τ − T)ρ}`, equal to 1 at `τ = T` instead of at `τ = 0`.
    AsPrinted,
}

/// The α-quadratic whose maximum over `[0, 1]` is `ρ`.
pub fn rho_objective(params: &MertonParams, alpha: f64) -> f64 {
    let s2 = params.sigma * params.sigma;
    let p = params.p;
    params.r1
        + (params.mu1 - params.r1) * alpha
        + params.mu2
        + params.mu3
        + 0.5 * s2 * alpha * alpha * (p - 1.0)
        + s2 * (p - 1.0)
        + 2.0 * s2 * alpha * p
        + s2 * p
}

/// `(ρ, α*)` from the clipped stationary point of the concave quadratic.
pub fn compute_rho(params: &MertonParams) -> (f64, f64) {
    let s2 = params.sigma * params.sigma;
    let stationary = ((params.mu1 - params.r1) + 2.0 * s2 * params.p) / (s2 * (1.0 - params.p));
    let alpha = stationary.clamp(0.0, 1.0);
    (rho_objective(params, alpha), alpha)
}

/// `(ρ, α)` maximizing over the given samples; ties go to the first sample.
pub fn scan_rho(params: &MertonParams, samples: &[f64]) -> (f64, f64) {
    let mut best = (f64::NEG_INFINITY, f64::NAN);
    for &a in samples {
        let q = rho_objective(params, a);
        if q > best.0 {
            best = (q, a);
        }
    }
    best
}

#[derive(Debug, Clone)]
pub struct MertonProblem {
    pub params: MertonParams,
    pub rho: f64,
    pub alpha_star: f64,
    pub psi: PsiSign,
}

impl MertonProblem {
    pub fn new(params: MertonParams) -> Result<Self> {
        Self::with_psi(params, PsiSign::Derived)
    }

    pub fn with_psi(params: MertonParams, psi: PsiSign) -> Result<Self> {
        params.validate()?;
        let (rho, alpha_star) = compute_rho(&params);
        Ok(Self { params, rho, alpha_star, psi })
    }

    pub fn psi(&self, tau: f64) -> f64 {
        let p = self.params.p;
        match self.psi {
            PsiSign::Derived => (p * self.rho * tau).exp(),
            PsiSign::AsPrinted => (p * (tau - self.params.horizon) * self.rho).exp(),
        }
    }

    pub fn utility(&self, x: &[f64]) -> f64 {
        let p = self.params.p;
        x.iter().map(|&xi| xi.max(0.0).powf(p) / p).product()
    }

    pub fn exact(&self, tau: f64, x: &[f64]) -> f64 {
        self.psi(tau) * self.utility(x)
    }

    fn sigma2(&self) -> f64 {
        self.params.sigma * self.params.sigma
    }

    fn b1(&self, alpha: f64) -> f64 {
        let q = &self.params;
        let s2 = self.sigma2();
        q.r1 + (q.mu1 - q.r1) * alpha - s2 * alpha - s2 * alpha * alpha
    }

    fn b_other(&self, mu: f64, alpha: f64) -> f64 {
        let s2 = self.sigma2();
        mu - 0.5 * s2 * alpha - 1.5 * s2
    }

    /// `L^α v` in non-divergence form from the value, gradient and Hessian.
    pub fn generator(&self, x: &[f64], alpha: f64, grad: &[f64; 3], hess: &[[f64; 3]; 3]) -> f64 {
        let q = &self.params;
        let s2 = self.sigma2();
        let (x1, y, z) = (x[0], x[1], x[2]);
        0.5 * s2 * alpha * alpha * x1 * x1 * hess[0][0]
            + 0.5 * s2 * y * y * hess[1][1]
            + 0.5 * s2 * z * z * hess[2][2]
            + s2 * alpha * x1 * y * hess[0][1]
            + s2 * alpha * x1 * z * hess[0][2]
            + s2 * y * z * hess[1][2]
            + (q.r1 + (q.mu1 - q.r1) * alpha) * x1 * grad[0]
            + q.mu2 * y * grad[1]
            + q.mu3 * z * grad[2]
    }
}

impl ControlProblem for MertonProblem {
    fn dim(&self) -> usize {
        3
    }

    fn horizon(&self) -> f64 {
        self.params.horizon
    }

    fn diffusion_factor(&self, _tau: f64, _x: &[f64], alpha: f64, axis: usize) -> f64 {
        let s2 = self.sigma2();
        if axis == 0 {
            0.5 * s2 * alpha * alpha
        } else {
            0.5 * s2
        }
    }

    fn drift_factor(&self, _tau: f64, _x: &[f64], alpha: f64, axis: usize) -> f64 {
        match axis {
            0 => self.b1(alpha),
            1 => self.b_other(self.params.mu2, alpha),
            _ => self.b_other(self.params.mu3, alpha),
        }
    }

    fn cross_factor(&self, _tau: f64, x: &[f64], alpha: f64, i: usize, r: usize) -> f64 {
        // a_ir = d_ir · xyz, so each factor divides out the coordinate not in the pair
        let s2 = self.sigma2();
        match (i.min(r), i.max(r)) {
            (0, 1) => 0.5 * s2 * alpha / x[2],
            (0, 2) => 0.5 * s2 * alpha / x[1],
            _ => 0.5 * s2 / x[0],
        }
    }

    fn reaction(&self, _tau: f64, _x: &[f64], alpha: f64) -> f64 {
        let q = &self.params;
        let s2 = self.sigma2();
        -(q.r1 + (q.mu1 - q.r1) * alpha - 2.0 * s2 * alpha - s2 * alpha * alpha + q.mu2 + q.mu3 - 3.0 * s2)
    }

    fn terminal(&self, x: &[f64]) -> f64 {
        self.utility(x)
    }

    fn boundary_value(&self, tau: f64, x: &[f64]) -> f64 {
        self.exact(tau, x)
    }

    fn boundary_policy(&self) -> BoundaryPolicy {
        BoundaryPolicy::zero_at_origin(3)
    }

    fn time_invariant(&self) -> bool {
        true
    }

    fn exact_value(&self, tau: f64, x: &[f64]) -> Option<f64> {
        Some(self.exact(tau, x))
    }

    fn axis_drift(&self, _tau: f64, x: &[f64], alpha: f64, axis: usize) -> f64 {
        let s2 = self.sigma2();
        let d_aii = if axis == 0 { s2 * alpha * alpha } else { s2 } * x[axis];
        d_aii + x[axis] * self.drift_factor(0.0, x, alpha, axis)
    }

    fn drift_divergence(&self, _tau: f64, x: &[f64], alpha: f64) -> f64 {
        (0..3).map(|i| self.drift_factor(0.0, x, alpha, i)).sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problem::{diffusion_entry, validate, ControlSet, ViolationKind};
    use approx::assert_relative_eq;

    fn table1() -> MertonProblem {
        MertonProblem::new(MertonParams::table1()).unwrap()
    }

    #[test]
    fn diffusion_entry_examples() {
        let m = table1();
        let e = diffusion_entry(&m, 0.0, &[0.3, 0.1, 0.2], 0.5, 1, 1).unwrap();
        assert_relative_eq!(e, 3.2181845e-4, max_relative = 1e-7);
        assert_relative_eq!(m.diffusion_factor(0.0, &[0.1; 3], 1.0, 0), 0.5 * 0.2537 * 0.2537, max_relative = 1e-15);
        // a_12 = ½σ²α x y
        let a12 = diffusion_entry(&m, 0.0, &[0.3, 0.1, 0.2], 0.5, 0, 1).unwrap();
        assert_relative_eq!(a12, 0.5 * 0.2537f64.powi(2) * 0.5 * 0.3 * 0.1, max_relative = 1e-14);
    }

    #[test]
    fn reaction_at_zero_control_is_positive() {
        let m = table1();
        let c = m.reaction(0.0, &[0.1; 3], 0.0);
        assert_relative_eq!(c, 0.01519107, max_relative = 1e-6);
        let mesh = TensorMesh::uniform(&[(0.0, 0.5), (0.0, 0.25), (0.0, 0.5)], &[4, 4, 4]).unwrap();
        let v = validate(&m, &mesh, &ControlSet::uniform(0.0, 1.0, 11).unwrap());
        assert!(v.iter().any(|v| v.kind == ViolationKind::NonNegativeReaction && v.alpha == 0.0));
        assert!(v.iter().any(|v| v.kind == ViolationKind::NonPositiveDiffusion { axis: 0 } && v.alpha == 0.0));
    }

    #[test]
    fn divergence_form_reproduces_generator_coefficients() {
        // first-order and zeroth-order terms of ∇·(A∇v + bv) + cv against L^α
        let m = table1();
        let q = &m.params;
        for alpha in [0.0, 0.3, 1.0] {
            let x = [0.2, 0.1, 0.3];
            let s2 = q.sigma * q.sigma;
            // x: ∂_x a_11 + ∂_y a_21 + ∂_z a_31 + x b_1
            let fx = m.axis_drift(0.0, &x, alpha, 0) + s2 * alpha * x[0];
            assert_relative_eq!(fx, (q.r1 + (q.mu1 - q.r1) * alpha) * x[0], max_relative = 1e-13);
            let fy = m.axis_drift(0.0, &x, alpha, 1) + 0.5 * s2 * alpha * x[1] + 0.5 * s2 * x[1];
            assert_relative_eq!(fy, q.mu2 * x[1], max_relative = 1e-13);
            let zeroth = m.drift_divergence(0.0, &x, alpha) + m.reaction(0.0, &x, alpha);
            assert!(zeroth.abs() < 1e-15);
        }
    }

    #[test]
    fn rho_closed_form_and_scan_agree() {
        let params = MertonParams::table1();
        let (rho, a) = compute_rho(&params);
        assert!((a - 0.670).abs() < 5e-4, "{a}");
        let samples: Vec<f64> = (0..=1_000_000).map(|k| k as f64 / 1e6).collect();
        let (rho_s, a_s) = scan_rho(&params, &samples);
        assert!((a - a_s).abs() <= 1e-6);
        assert!((rho - rho_s).abs() <= 1e-12);
        assert!(rho >= rho_s);
    }

    #[test]
    fn rho_clips_large_premium() {
        let s2 = 0.2537f64 * 0.2537;
        let params = MertonParams { mu1: 0.0449 + 10.0 * s2, ..MertonParams::table1() };
        assert_eq!(compute_rho(&params).1, 1.0);
        let params = MertonParams { mu1: 0.04490001, p: 1e-6, ..MertonParams::table1() };
        let (_, a) = compute_rho(&params);
        assert!(a > 0.0 && a < 1e-3);
    }

    #[test]
    fn terminal_and_degenerate_faces() {
        let m = table1();
        let x = [0.3, 0.2, 0.1];
        assert_eq!(m.exact(0.0, &x), m.terminal(&x));
        assert_eq!(m.exact(0.7, &[0.0, 0.2, 0.1]), 0.0);
        assert!(m.exact(0.7, &x) > m.exact(0.0, &x));
        let printed = MertonProblem::with_psi(MertonParams::table1(), PsiSign::AsPrinted).unwrap();
        assert_relative_eq!(printed.exact(1.0, &x), m.terminal(&x), max_relative = 1e-15);
    }

    #[test]
    fn parameter_validation() {
        assert!(MertonProblem::new(MertonParams { p: 1.0, ..MertonParams::table1() }).is_err());
        assert!(MertonProblem::new(MertonParams { mu1: 0.01, ..MertonParams::table1() }).is_err());
        assert!(MertonProblem::new(MertonParams { sigma: 0.0, ..MertonParams::table1() }).is_err());
        assert!(MertonParams::preset("table2").unwrap().r2.is_some());
        assert!(MertonParams::preset("table3").is_none());
    }
}
