//! Control problems in divergence form.
//!
//! A problem supplies the factors of the diffusion matrix and fitted drift,
//!
//! ```text
//! a_ii = ā_i(τ, x, α) x_i²,    a_ir = d_ir(τ, x, α) Π_k x_k  (i ≠ r),    b = (x_1 b_1, …, x_n b_n)
//! ```
//!
//! the zeroth-order coefficient `c`, the running reward `f`, terminal data `g`
//! and Dirichlet data on the faces of the box. Time runs backwards,
//! `τ = T − t`, so the terminal data is the initial condition of the solver.

use crate::error::{Error, Result};
use crate::mesh::TensorMesh;

/// Divergence-form coefficients of a controlled HJB equation with scalar control.
///
/// Implementations must be pure functions of their arguments; assembly calls
/// them concurrently from several threads.
pub trait ControlProblem: Send + Sync {
    fn dim(&self) -> usize;

    /// Horizon `T`.
    fn horizon(&self) -> f64;

    /// `ā_i`, the diffusion factor of `a_ii = ā_i x_i²`.
    fn diffusion_factor(&self, tau: f64, x: &[f64], alpha: f64, axis: usize) -> f64;

    /// `b_i`, the drift factor of the flux component `x_i b_i v`.
    fn drift_factor(&self, tau: f64, x: &[f64], alpha: f64, axis: usize) -> f64;

    /// `d_ir` for `i ≠ r`, the cross-diffusion factor of `a_ir = d_ir Π x_k`.
    fn cross_factor(&self, tau: f64, x: &[f64], alpha: f64, i: usize, r: usize) -> f64;

    /// `c`, the zeroth-order coefficient.
    fn reaction(&self, tau: f64, x: &[f64], alpha: f64) -> f64;

    /// Running reward `f`.
    fn source(&self, _tau: f64, _x: &[f64], _alpha: f64) -> f64 {
        0.0
    }

    /// Terminal data `g`, i.e. the value at `τ = 0`.
    fn terminal(&self, x: &[f64]) -> f64;

    /// Dirichlet data on faces whose mode is [`FaceMode::Dirichlet`].
    fn boundary_value(&self, tau: f64, x: &[f64]) -> f64;

    fn boundary_policy(&self) -> BoundaryPolicy {
        BoundaryPolicy::all_dirichlet(self.dim())
    }

    /// True when `ā`, `b`, `d` and `c` do not depend on `τ`. Boundary data and
    /// the source may still vary in time.
    fn time_invariant(&self) -> bool {
        false
    }

    /// Closed-form solution, when one is known.
    fn exact_value(&self, _tau: f64, _x: &[f64]) -> Option<f64> {
        None
    }

    /// First-order coefficient of the non-divergence form along `axis`, without
    /// the cross-diffusion contributions: `∂_i a_ii + x_i b_i`.
    fn axis_drift(&self, tau: f64, x: &[f64], alpha: f64, axis: usize) -> f64 {
        let a_ii = |p: &[f64]| self.diffusion_factor(tau, p, alpha, axis) * p[axis] * p[axis];
        central_difference(x, axis, a_ii) + x[axis] * self.drift_factor(tau, x, alpha, axis)
    }

    /// `Σ_i ∂_i (x_i b_i)`, the zeroth-order term produced by expanding the drift flux.
    fn drift_divergence(&self, tau: f64, x: &[f64], alpha: f64) -> f64 {
        (0..self.dim()).map(|i| central_difference(x, i, |p| p[i] * self.drift_factor(tau, p, alpha, i))).sum()
    }
}

fn central_difference(x: &[f64], axis: usize, f: impl Fn(&[f64]) -> f64) -> f64 {
    let step = 1e-6 * x[axis].abs().max(1.0);
    let mut p = x.to_vec();
    p[axis] = x[axis] + step;
    let up = f(&p);
    p[axis] = x[axis] - step;
    let down = f(&p);
    (up - down) / (2.0 * step)
}

/// `d_ir` with the index pair put in canonical order, so both `(i, r)` and
/// `(r, i)` read the same callback value.
pub fn cross(problem: &dyn ControlProblem, tau: f64, x: &[f64], alpha: f64, i: usize, r: usize) -> f64 {
    problem.cross_factor(tau, x, alpha, i.min(r), i.max(r))
}

/// Entry `a_ir` of the diffusion matrix at `point`.
pub fn diffusion_entry(
    problem: &dyn ControlProblem,
    tau: f64,
    point: &[f64],
    alpha: f64,
    i: usize,
    r: usize,
) -> Result<f64> {
    let dim = problem.dim();
    for index in [i, r] {
        if index >= dim {
            return Err(Error::AxisIndex { index, dim });
        }
    }
    if point.len() != dim {
        return Err(Error::Dimension { expected: dim, got: point.len() });
    }
    if i == r {
        let x = point[i];
        if x == 0.0 {
            return Ok(0.0);
        }
        return Ok(problem.diffusion_factor(tau, point, alpha, i) * x * x);
    }
    let prod: f64 = point.iter().product();
    if prod == 0.0 {
        // d_ir may be singular on the face (e.g. 1/x_k factors), the entry is not
        return Ok(0.0);
    }
    Ok(cross(problem, tau, point, alpha, i, r) * prod)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FaceMode {
    /// Value taken from [`ControlProblem::boundary_value`].
    Dirichlet,
    /// Homogeneous data, `v = 0`.
    Zero,
}

/// Boundary mode of the lower (`x_i = lo`) and upper (`x_i = hi`) face of every axis.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BoundaryPolicy {
    faces: Vec<[FaceMode; 2]>,
}

impl BoundaryPolicy {
    pub fn new(faces: Vec<[FaceMode; 2]>) -> Self {
        Self { faces }
    }

    pub fn all_dirichlet(dim: usize) -> Self {
        Self { faces: vec![[FaceMode::Dirichlet; 2]; dim] }
    }

    /// Zero data on the degenerate faces `x_i = 0`, callback data on the far faces.
    pub fn zero_at_origin(dim: usize) -> Self {
        Self { faces: vec![[FaceMode::Zero, FaceMode::Dirichlet]; dim] }
    }

    pub fn lower(&self, axis: usize) -> FaceMode {
        self.faces[axis][0]
    }

    pub fn upper(&self, axis: usize) -> FaceMode {
        self.faces[axis][1]
    }

    pub fn dim(&self) -> usize {
        self.faces.len()
    }
}

/// Finite sample of the compact control set `[lo, hi]`.
#[derive(Debug, Clone, PartialEq)]
pub struct ControlSet {
    lo: f64,
    hi: f64,
    samples: Vec<f64>,
}

impl ControlSet {
    /// `count` equally spaced samples including both endpoints.
    pub fn uniform(lo: f64, hi: f64, count: usize) -> Result<Self> {
        if !(lo.is_finite() && hi.is_finite()) || hi < lo {
            return Err(Error::ControlSet(format!("bad bounds [{lo}, {hi}]")));
        }
        match count {
            0 => Err(Error::ControlSet("need at least one sample".into())),
            1 if lo == hi => Ok(Self::singleton(lo)),
            1 => Err(Error::ControlSet("a single sample cannot cover both endpoints".into())),
            _ => {
                let step = (hi - lo) / (count - 1) as f64;
                let mut samples: Vec<f64> = (0..count).map(|k| lo + k as f64 * step).collect();
                samples[count - 1] = hi;
                Ok(Self { lo, hi, samples })
            }
        }
    }

    pub fn singleton(value: f64) -> Self {
        Self { lo: value, hi: value, samples: vec![value] }
    }

    /// Samples in any order; they are sorted and deduplicated, the bounds are
    /// the extreme samples.
    pub fn from_samples(mut samples: Vec<f64>) -> Result<Self> {
        if samples.is_empty() {
            return Err(Error::ControlSet("need at least one sample".into()));
        }
        if samples.iter().any(|s| !s.is_finite()) {
            return Err(Error::ControlSet("non-finite sample".into()));
        }
        samples.sort_by(f64::total_cmp);
        samples.dedup();
        Ok(Self { lo: samples[0], hi: samples[samples.len() - 1], samples })
    }

    pub fn lo(&self) -> f64 {
        self.lo
    }

    pub fn hi(&self) -> f64 {
        self.hi
    }

    /// Samples in increasing order.
    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ViolationKind {
    /// `ā_i ≤ 0`.
    NonPositiveDiffusion { axis: usize },
    /// `d_ir ≠ d_ri`.
    AsymmetricCross { i: usize, r: usize },
    /// `c ≥ 0`. Tolerated below an unquantified threshold, reported for inspection.
    NonNegativeReaction,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Violation {
    pub kind: ViolationKind,
    pub tau: f64,
    pub point: Vec<f64>,
    pub alpha: f64,
    /// The offending coefficient (for asymmetry, `d_ir − d_ri`).
    pub value: f64,
}

/// Probes the M-matrix hypotheses (`ā_i > 0`, symmetric `d`, `c < 0`) at every
/// interior node, every control sample and `τ ∈ {0, T/2, T}`.
pub fn validate(problem: &dyn ControlProblem, mesh: &TensorMesh, controls: &ControlSet) -> Vec<Violation> {
    let dim = problem.dim();
    let horizon = problem.horizon();
    let mut out = Vec::new();
    for tau in [0.0, 0.5 * horizon, horizon] {
        for idx in mesh.interior_indices() {
            let point = mesh.point(idx.as_slice());
            for &alpha in controls.samples() {
                let mut push = |kind, value| out.push(Violation { kind, tau, point: point.clone(), alpha, value });
                for axis in 0..dim {
                    let a = problem.diffusion_factor(tau, &point, alpha, axis);
                    if !(a > 0.0) {
                        push(ViolationKind::NonPositiveDiffusion { axis }, a);
                    }
                }
                for i in 0..dim {
                    for r in i + 1..dim {
                        let d_ir = problem.cross_factor(tau, &point, alpha, i, r);
                        let d_ri = problem.cross_factor(tau, &point, alpha, r, i);
                        if d_ir != d_ri {
                            push(ViolationKind::AsymmetricCross { i, r }, d_ir - d_ri);
                        }
                    }
                }
                let c = problem.reaction(tau, &point, alpha);
                if !(c < 0.0) {
                    push(ViolationKind::NonNegativeReaction, c);
                }
            }
        }
    }
    out
}

/// Constant-coefficient smoke-test problem in any dimension.
///
/// With constant factors every spatially constant field is mapped to a
/// multiple of itself by the divergence operator, so
/// `v(τ) = (g₀ + f/λ) e^{λτ} − f/λ` with `λ = c + Σ b_i` solves the equation
/// exactly; it is also used as the Dirichlet data.
#[derive(Debug, Clone, PartialEq)]
pub struct ConstantProblem {
    pub dim: usize,
    pub a_bar: f64,
    pub b: f64,
    pub d: f64,
    pub c: f64,
    pub source: f64,
    pub terminal: f64,
    pub horizon: f64,
    pub policy: Option<BoundaryPolicy>,
}

impl ConstantProblem {
    pub fn new(dim: usize) -> Self {
        Self { dim, a_bar: 0.5, b: 0.0, d: 0.0, c: -0.1, source: 0.0, terminal: 1.0, horizon: 1.0, policy: None }
    }

    fn rate(&self) -> f64 {
        self.c + self.dim as f64 * self.b
    }

    pub fn exact(&self, tau: f64) -> f64 {
        let lambda = self.rate();
        if lambda == 0.0 {
            self.terminal + self.source * tau
        } else {
            let shift = self.source / lambda;
            (self.terminal + shift) * (lambda * tau).exp() - shift
        }
    }
}

impl ControlProblem for ConstantProblem {
    fn dim(&self) -> usize {
        self.dim
    }

    fn horizon(&self) -> f64 {
        self.horizon
    }

    fn diffusion_factor(&self, _tau: f64, _x: &[f64], _alpha: f64, _axis: usize) -> f64 {
        self.a_bar
    }

    fn drift_factor(&self, _tau: f64, _x: &[f64], _alpha: f64, _axis: usize) -> f64 {
        self.b
    }

    fn cross_factor(&self, _tau: f64, _x: &[f64], _alpha: f64, _i: usize, _r: usize) -> f64 {
        self.d
    }

    fn reaction(&self, _tau: f64, _x: &[f64], _alpha: f64) -> f64 {
        self.c
    }

    fn source(&self, _tau: f64, _x: &[f64], _alpha: f64) -> f64 {
        self.source
    }

    fn terminal(&self, _x: &[f64]) -> f64 {
        self.terminal
    }

    fn boundary_value(&self, tau: f64, _x: &[f64]) -> f64 {
        self.exact(tau)
    }

    fn boundary_policy(&self) -> BoundaryPolicy {
        self.policy.clone().unwrap_or_else(|| BoundaryPolicy::all_dirichlet(self.dim))
    }

    fn time_invariant(&self) -> bool {
        true
    }

    fn exact_value(&self, tau: f64, _x: &[f64]) -> Option<f64> {
        Some(self.exact(tau))
    }

    fn axis_drift(&self, _tau: f64, x: &[f64], _alpha: f64, axis: usize) -> f64 {
        (2.0 * self.a_bar + self.b) * x[axis]
    }

    fn drift_divergence(&self, _tau: f64, _x: &[f64], _alpha: f64) -> f64 {
        self.dim as f64 * self.b
    }
}

type Coef = Box<dyn Fn(f64, &[f64], f64, usize) -> f64 + Send + Sync>;
type CrossCoef = Box<dyn Fn(f64, &[f64], f64, usize, usize) -> f64 + Send + Sync>;
type Scalar = Box<dyn Fn(f64, &[f64], f64) -> f64 + Send + Sync>;
type Field = Box<dyn Fn(f64, &[f64]) -> f64 + Send + Sync>;
type Shape = Box<dyn Fn(&[f64]) -> f64 + Send + Sync>;

/// Problem assembled from closures, for custom models built through the library.
pub struct FnProblem {
    dim: usize,
    horizon: f64,
    a_bar: Coef,
    b: Coef,
    d: CrossCoef,
    c: Scalar,
    f: Scalar,
    g: Shape,
    boundary: Field,
    exact: Option<Field>,
    policy: BoundaryPolicy,
    time_invariant: bool,
}

impl FnProblem {
    /// Starts from `ā ≡ 1`, `b ≡ 0`, `d ≡ 0`, `c ≡ 0`, `f ≡ 0`, `g ≡ 0` and zero boundary data.
    pub fn builder(dim: usize, horizon: f64) -> Self {
        Self {
            dim,
            horizon,
            a_bar: Box::new(|_, _, _, _| 1.0),
            b: Box::new(|_, _, _, _| 0.0),
            d: Box::new(|_, _, _, _, _| 0.0),
            c: Box::new(|_, _, _| 0.0),
            f: Box::new(|_, _, _| 0.0),
            g: Box::new(|_| 0.0),
            boundary: Box::new(|_, _| 0.0),
            exact: None,
            policy: BoundaryPolicy::all_dirichlet(dim),
            time_invariant: false,
        }
    }

    pub fn diffusion(mut self, f: impl Fn(f64, &[f64], f64, usize) -> f64 + Send + Sync + 'static) -> Self {
        self.a_bar = Box::new(f);
        self
    }

    pub fn drift(mut self, f: impl Fn(f64, &[f64], f64, usize) -> f64 + Send + Sync + 'static) -> Self {
        self.b = Box::new(f);
        self
    }

    pub fn cross(mut self, f: impl Fn(f64, &[f64], f64, usize, usize) -> f64 + Send + Sync + 'static) -> Self {
        self.d = Box::new(f);
        self
    }

    pub fn reaction(mut self, f: impl Fn(f64, &[f64], f64) -> f64 + Send + Sync + 'static) -> Self {
        self.c = Box::new(f);
        self
    }

    pub fn source(mut self, f: impl Fn(f64, &[f64], f64) -> f64 + Send + Sync + 'static) -> Self {
        self.f = Box::new(f);
        self
    }

    pub fn terminal(mut self, f: impl Fn(&[f64]) -> f64 + Send + Sync + 'static) -> Self {
        self.g = Box::new(f);
        self
    }

    pub fn boundary(mut self, f: impl Fn(f64, &[f64]) -> f64 + Send + Sync + 'static) -> Self {
        self.boundary = Box::new(f);
        self
    }

    pub fn exact(mut self, f: impl Fn(f64, &[f64]) -> f64 + Send + Sync + 'static) -> Self {
        self.exact = Some(Box::new(f));
        self
    }

    pub fn policy(mut self, policy: BoundaryPolicy) -> Self {
        self.policy = policy;
        self
    }

    pub fn time_invariant(mut self, yes: bool) -> Self {
        self.time_invariant = yes;
        self
    }
}

impl ControlProblem for FnProblem {
    fn dim(&self) -> usize {
        self.dim
    }

    fn horizon(&self) -> f64 {
        self.horizon
    }

    fn diffusion_factor(&self, tau: f64, x: &[f64], alpha: f64, axis: usize) -> f64 {
        (self.a_bar)(tau, x, alpha, axis)
    }

    fn drift_factor(&self, tau: f64, x: &[f64], alpha: f64, axis: usize) -> f64 {
        (self.b)(tau, x, alpha, axis)
    }

    fn cross_factor(&self, tau: f64, x: &[f64], alpha: f64, i: usize, r: usize) -> f64 {
        (self.d)(tau, x, alpha, i, r)
    }

    fn reaction(&self, tau: f64, x: &[f64], alpha: f64) -> f64 {
        (self.c)(tau, x, alpha)
    }

    fn source(&self, tau: f64, x: &[f64], alpha: f64) -> f64 {
        (self.f)(tau, x, alpha)
    }

    fn terminal(&self, x: &[f64]) -> f64 {
        (self.g)(x)
    }

    fn boundary_value(&self, tau: f64, x: &[f64]) -> f64 {
        (self.boundary)(tau, x)
    }

    fn boundary_policy(&self) -> BoundaryPolicy {
        self.policy.clone()
    }

    fn time_invariant(&self) -> bool {
        self.time_invariant
    }

    fn exact_value(&self, tau: f64, x: &[f64]) -> Option<f64> {
        self.exact.as_ref().map(|e| e(tau, x))
    }
}
