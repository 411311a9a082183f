//! TOML run configuration.
//!
//! ```toml
//! [problem]
//! name = "merton3d"        # or "constant"
//! preset = "table1"        # merton3d only: table1 | table2
//! psi_sign = "derived"     # or "as-printed"
//! [problem.params]         # overrides of preset fields, or the constant problem's fields
//! p = 0.13
//!
//! [mesh]
//! n = [10, 10, 10]         # interval counts on the problem's default box
//! # axes = [{ lo = 0.0, hi = 0.5, n = 10 }, { nodes = [0.0, 0.1, 0.25] }, …]
//!
//! [time]
//! steps = [50, 100, 150, 200]
//! theta = 1.0
//!
//! [solver]
//! scheme = "both"          # fitted | fdm | both
//! control_samples = 101
//!
//! [output]
//! dir = "out"
//! ```

use std::path::{Path, PathBuf};

use serde::Deserialize;

use crate::error::{Error, Result};
use crate::merton::{MertonParams, MertonProblem, PsiSign};
use crate::mesh::{Axis, TensorMesh};
use crate::problem::{ConstantProblem, ControlProblem, ControlSet};
use crate::stepper::StepperConfig;

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub problem: ProblemSection,
    #[serde(default)]
    pub mesh: MeshSection,
    pub time: TimeSection,
    #[serde(default)]
    pub solver: SolverSection,
    #[serde(default)]
    pub output: OutputSection,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemSection {
    pub name: String,
    pub preset: Option<String>,
    #[serde(default)]
    pub psi_sign: PsiSign,
    #[serde(default)]
    pub params: toml::Table,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MeshSection {
    pub n: Option<Vec<usize>>,
    pub axes: Option<Vec<AxisSpec>>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(untagged, deny_unknown_fields)]
pub enum AxisSpec {
    Uniform { lo: f64, hi: f64, n: usize },
    Nodes { nodes: Vec<f64> },
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TimeSection {
    pub steps: Vec<usize>,
    #[serde(default = "default_theta")]
    pub theta: f64,
}

fn default_theta() -> f64 {
    1.0
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SchemeChoice {
    Fitted,
    Fdm,
    Both,
}

impl SchemeChoice {
    pub fn names(self) -> &'static [&'static str] {
        match self {
            Self::Fitted => &["fitted"],
            Self::Fdm => &["fdm"],
            Self::Both => &["fitted", "fdm"],
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SolverSection {
    pub scheme: SchemeChoice,
    pub control_samples: usize,
    pub control_lo: f64,
    pub control_hi: f64,
    pub policy_tol: f64,
    pub max_policy_iters: usize,
    pub linear_tol: f64,
}

impl Default for SolverSection {
    fn default() -> Self {
        let s = StepperConfig::default();
        Self {
            scheme: SchemeChoice::Both,
            control_samples: 101,
            control_lo: 0.0,
            control_hi: 1.0,
            policy_tol: s.policy_tol,
            max_policy_iters: s.max_policy_iters,
            linear_tol: s.linear_tol,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputSection {
    pub dir: PathBuf,
    pub dump_operator: bool,
    /// Uniform control used for the operator dump; defaults to the upper control bound.
    pub dump_control: Option<f64>,
    pub dump_policy: bool,
    pub mmatrix_audit: bool,
    /// Fill the `wall_ms` column; off by default so reruns are byte-identical.
    pub wall_time: bool,
}

impl Default for OutputSection {
    fn default() -> Self {
        Self {
            dir: PathBuf::from("out"),
            dump_operator: false,
            dump_control: None,
            dump_policy: false,
            mmatrix_audit: false,
            wall_time: false,
        }
    }
}

/// Fields of the constant-coefficient problem, on the box `[lo, hi]^dim`.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
struct ConstantSpec {
    dim: usize,
    a_bar: f64,
    b: f64,
    d: f64,
    c: f64,
    source: f64,
    terminal: f64,
    #[serde(rename = "T")]
    horizon: f64,
    lo: f64,
    hi: f64,
}

impl Default for ConstantSpec {
    fn default() -> Self {
        let p = ConstantProblem::new(3);
        Self {
            dim: p.dim,
            a_bar: p.a_bar,
            b: p.b,
            d: p.d,
            c: p.c,
            source: p.source,
            terminal: p.terminal,
            horizon: p.horizon,
            lo: 0.0,
            hi: 1.0,
        }
    }
}

/// `(lo, hi, intervals)` of one axis.
type AxisBox = (f64, f64, usize);

/// Everything a run needs, resolved from a [`RunConfig`].
pub struct Resolved {
    pub problem: Box<dyn ControlProblem>,
    pub mesh: TensorMesh,
    pub controls: ControlSet,
}

impl RunConfig {
    pub fn from_path(path: &Path) -> Result<Self> {
        let text =
            std::fs::read_to_string(path).map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        let config: Self = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        config.check()?;
        Ok(config)
    }

    fn check(&self) -> Result<()> {
        if self.time.steps.is_empty() || self.time.steps.contains(&0) {
            return Err(Error::Config("time.steps must list positive step counts".into()));
        }
        if self.solver.control_samples == 0 {
            return Err(Error::Config("solver.control_samples must be positive".into()));
        }
        if self.mesh.n.is_some() && self.mesh.axes.is_some() {
            return Err(Error::Config("give either mesh.n or mesh.axes, not both".into()));
        }
        self.stepper(self.time.steps[0]).validate()
    }

    pub fn stepper(&self, steps: usize) -> StepperConfig {
        StepperConfig {
            theta: self.time.theta,
            steps,
            policy_tol: self.solver.policy_tol,
            max_policy_iters: self.solver.max_policy_iters,
            linear_tol: self.solver.linear_tol,
            audit: self.output.mmatrix_audit,
        }
    }

    pub fn resolve(&self) -> Result<Resolved> {
        let s = &self.solver;
        let controls = if s.control_samples == 1 {
            if s.control_lo != s.control_hi {
                return Err(Error::Config("a single control sample needs control_lo == control_hi".into()));
            }
            ControlSet::singleton(s.control_lo)
        } else {
            ControlSet::uniform(s.control_lo, s.control_hi, s.control_samples)?
        };
        let (problem, default_box): (Box<dyn ControlProblem>, Vec<AxisBox>) = match self.problem.name.as_str() {
            "merton3d" => {
                let params = self.merton_params()?;
                let default_box = params.bounds.iter().zip(params.n).map(|(&hi, n)| (0.0, hi, n)).collect();
                (Box::new(MertonProblem::with_psi(params, self.problem.psi_sign)?), default_box)
            }
            "constant" => {
                if self.problem.preset.is_some() {
                    return Err(Error::Config("the constant problem has no presets".into()));
                }
                let spec: ConstantSpec = toml::Value::Table(self.problem.params.clone())
                    .try_into()
                    .map_err(|e: toml::de::Error| Error::Config(format!("problem.params: {e}")))?;
                if spec.dim == 0 {
                    return Err(Error::Config("constant problem needs dim >= 1".into()));
                }
                let p = ConstantProblem {
                    dim: spec.dim,
                    a_bar: spec.a_bar,
                    b: spec.b,
                    d: spec.d,
                    c: spec.c,
                    source: spec.source,
                    terminal: spec.terminal,
                    horizon: spec.horizon,
                    policy: None,
                };
                (Box::new(p), vec![(spec.lo, spec.hi, 10); spec.dim])
            }
            other => return Err(Error::Config(format!("unknown problem '{other}' (expected merton3d or constant)"))),
        };
        let mesh = self.build_mesh(&default_box)?;
        if mesh.dim() != problem.dim() {
            return Err(Error::Config(format!("mesh has {} axes, problem needs {}", mesh.dim(), problem.dim())));
        }
        Ok(Resolved { problem, mesh, controls })
    }

    pub fn merton_params(&self) -> Result<MertonParams> {
        let preset = self.problem.preset.as_deref().unwrap_or("table1");
        let base = MertonParams::preset(preset)
            .ok_or_else(|| Error::Config(format!("unknown preset '{preset}' (expected table1 or table2)")))?;
        let mut table = toml::Table::try_from(&base).map_err(|e| Error::Config(e.to_string()))?;
        for (k, v) in &self.problem.params {
            table.insert(k.clone(), v.clone());
        }
        toml::Value::Table(table).try_into().map_err(|e: toml::de::Error| Error::Config(format!("problem.params: {e}")))
    }

    fn build_mesh(&self, default_box: &[(f64, f64, usize)]) -> Result<TensorMesh> {
        let axes = if let Some(specs) = &self.mesh.axes {
            specs
                .iter()
                .map(|s| match s {
                    AxisSpec::Uniform { lo, hi, n } => Axis::uniform(*lo, *hi, *n),
                    AxisSpec::Nodes { nodes } => Axis::from_nodes(nodes.clone()),
                })
                .collect::<Result<Vec<_>>>()?
        } else {
            let counts: Vec<usize> = match &self.mesh.n {
                Some(n) if n.len() != default_box.len() => {
                    return Err(Error::Config(format!(
                        "mesh.n has {} entries, expected {}",
                        n.len(),
                        default_box.len()
                    )))
                }
                Some(n) => n.clone(),
                None => default_box.iter().map(|b| b.2).collect(),
            };
            default_box
                .iter()
                .zip(counts)
                .map(|(&(lo, hi, _), n)| Axis::uniform(lo, hi, n))
                .collect::<Result<Vec<_>>>()?
        };
        TensorMesh::new(axes)
    }
}
