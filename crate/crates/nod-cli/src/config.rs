//! JSON configuration schemas and construction of problem instances from
//! them.
//!
//! Every schema is strict: unknown keys are rejected, so a typo fails loudly
//! instead of silently falling back to a default. Validation messages name
//! the offending field.

use std::path::{Path, PathBuf};

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use nod_core::linalg::Matrix;
use nod_core::problems::{self, BilinearInstance, DecomposedProblem};
use nod_core::Vector;

use crate::Failure;

pub fn load_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T, Failure> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Failure::Config(format!("cannot read config {}: {e}", path.display())))?;
    serde_json::from_str(&text)
        .map_err(|e| Failure::Config(format!("bad config {}: {e}", path.display())))
}

/// Writes to the given path, or to stdout when no path is set.
pub fn write_text(path: Option<&Path>, text: &str) -> Result<(), Failure> {
    match path {
        Some(p) => std::fs::write(p, text)
            .map_err(|e| Failure::Config(format!("cannot write {}: {e}", p.display()))),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn default_seed() -> u64 {
    42
}

/// Instance selector shared by the solve, verify, and ode configs.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", content = "params", rename_all = "snake_case", deny_unknown_fields)]
pub enum ProblemSpec {
    PureConvex(PureConvexParams),
    QuadraticSkew(QuadraticSkewParams),
    SinCoupling,
    Bilinear(BilinearParams),
    BilinearRandom(BilinearRandomParams),
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PureConvexParams {
    /// SPD quadratic coefficient, row-major.
    pub a: Vec<Vec<f64>>,
    /// Linear term; zero when omitted.
    #[serde(default)]
    pub b: Option<Vec<f64>>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QuadraticSkewParams {
    pub a: Vec<Vec<f64>>,
    /// Skew-symmetric splitting coefficient.
    pub k: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BilinearParams {
    pub a_g: Vec<Vec<f64>>,
    pub b_g: Vec<f64>,
    pub a_h: Vec<Vec<f64>>,
    pub b_h: Vec<f64>,
    pub m: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BilinearRandomParams {
    pub seed: u64,
    pub d_x: usize,
    pub d_y: usize,
}

/// A built instance. Saddle models keep the native bilinear form next to
/// the rescaled decomposed problem so both solver families can run.
pub enum BuiltProblem {
    Plain(DecomposedProblem),
    Saddle { inst: Box<BilinearInstance>, scaled: DecomposedProblem },
}

impl BuiltProblem {
    pub fn decomposed(&self) -> &DecomposedProblem {
        match self {
            BuiltProblem::Plain(p) => p,
            BuiltProblem::Saddle { scaled, .. } => scaled,
        }
    }
}

fn matrix(rows: &[Vec<f64>], field: &str) -> Result<Matrix, Failure> {
    Matrix::from_rows(rows).map_err(|e| Failure::Config(format!("{field}: {e}")))
}

pub fn build_problem(spec: &ProblemSpec) -> Result<BuiltProblem, Failure> {
    match spec {
        ProblemSpec::PureConvex(p) => {
            let a = matrix(&p.a, "problem.params.a")?;
            let b = match &p.b {
                Some(v) => Vector::from_slice(v),
                None => Vector::zeros(a.nrows()),
            };
            problems::make_pure_convex(a, b)
                .map(BuiltProblem::Plain)
                .map_err(|e| Failure::Config(format!("problem.params: {e}")))
        }
        ProblemSpec::QuadraticSkew(p) => {
            let a = matrix(&p.a, "problem.params.a")?;
            let k = matrix(&p.k, "problem.params.k")?;
            problems::make_quadratic_skew(a, k)
                .map(BuiltProblem::Plain)
                .map_err(|e| Failure::Config(format!("problem.params: {e}")))
        }
        ProblemSpec::SinCoupling => Ok(BuiltProblem::Plain(problems::make_sin_coupling())),
        ProblemSpec::Bilinear(p) => {
            let inst = BilinearInstance::new(
                matrix(&p.a_g, "problem.params.a_g")?,
                Vector::from_slice(&p.b_g),
                matrix(&p.a_h, "problem.params.a_h")?,
                Vector::from_slice(&p.b_h),
                matrix(&p.m, "problem.params.m")?,
            )
            .map_err(|e| Failure::Config(format!("problem.params: {e}")))?;
            saddle_pair(inst)
        }
        ProblemSpec::BilinearRandom(p) => {
            if p.d_x == 0 || p.d_y == 0 {
                return Err(Failure::Config(
                    "problem.params.d_x and d_y must be at least 1".into(),
                ));
            }
            saddle_pair(BilinearInstance::random(p.seed, p.d_x, p.d_y))
        }
    }
}

fn saddle_pair(inst: BilinearInstance) -> Result<BuiltProblem, Failure> {
    let scaled = problems::make_bilinear(&inst)
        .map_err(|e| Failure::Config(format!("problem.params: {e}")))?;
    Ok(BuiltProblem::Saddle { inst: Box::new(inst), scaled })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Nod,
    NodBc,
    Nag,
    Forward,
    Extragradient,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverSpec {
    pub method: Method,
    /// Step override; the certified default when absent.
    #[serde(default)]
    pub eta: Option<f64>,
    #[serde(default = "default_max_iters")]
    pub max_iters: usize,
    /// Residual stopping tolerance.
    #[serde(default = "default_tol")]
    pub tol: f64,
    /// Start point. For saddle models this is `(x0, y0)` concatenated in the
    /// model's own coordinates. A seeded draw when absent.
    #[serde(default)]
    pub z0: Option<Vec<f64>>,
}

fn default_max_iters() -> usize {
    100_000
}

fn default_tol() -> f64 {
    1e-10
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSpec {
    /// Trace CSV destination; stdout when absent.
    #[serde(default)]
    pub trace_path: Option<PathBuf>,
    /// Optional JSON run report.
    #[serde(default)]
    pub report_path: Option<PathBuf>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub problem: ProblemSpec,
    pub solver: SolverSpec,
    #[serde(default)]
    pub outputs: OutputSpec,
    #[serde(default = "default_seed")]
    pub seed: u64,
}

impl RunConfig {
    pub fn validate(&self) -> Result<(), Failure> {
        if let Some(eta) = self.solver.eta {
            if !(eta > 0.0) || !eta.is_finite() {
                return Err(Failure::Config(format!(
                    "solver.eta must be a positive real, got {eta}"
                )));
            }
        }
        if !(self.solver.tol > 0.0) || !self.solver.tol.is_finite() {
            return Err(Failure::Config(format!(
                "solver.tol must be a positive real, got {}",
                self.solver.tol
            )));
        }
        if self.solver.max_iters == 0 {
            return Err(Failure::Config("solver.max_iters must be at least 1".into()));
        }
        Ok(())
    }
}

/// Claimed-constant overrides for `verify`, so a deliberately wrong claim
/// can be checked against the instance's actual behavior.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ClaimedConstants {
    #[serde(default)]
    pub mu: Option<f64>,
    #[serde(default)]
    pub l_phi: Option<f64>,
    #[serde(default)]
    pub l_s: Option<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VerifyConfig {
    pub problem: ProblemSpec,
    /// Constants to verify instead of the instance's own.
    #[serde(default)]
    pub claimed: Option<ClaimedConstants>,
    #[serde(default = "default_samples")]
    pub samples: usize,
    /// Half-width of the sampling box, centered at the origin.
    #[serde(default = "default_box_radius")]
    pub box_radius: f64,
    #[serde(default = "default_seed")]
    pub seed: u64,
    #[serde(default)]
    pub report_path: Option<PathBuf>,
}

fn default_samples() -> usize {
    10_000
}

fn default_box_radius() -> f64 {
    10.0
}

impl VerifyConfig {
    pub fn validate(&self) -> Result<(), Failure> {
        if self.samples < 2 {
            return Err(Failure::Config(format!(
                "samples must be at least 2, got {}",
                self.samples
            )));
        }
        if !(self.box_radius > 0.0) || !self.box_radius.is_finite() {
            return Err(Failure::Config(format!(
                "box_radius must be a positive real, got {}",
                self.box_radius
            )));
        }
        if let Some(c) = &self.claimed {
            for (name, v) in [("mu", c.mu), ("l_phi", c.l_phi), ("l_s", c.l_s)] {
                if let Some(v) = v {
                    if !v.is_finite() || v < 0.0 {
                        return Err(Failure::Config(format!(
                            "claimed.{name} must be a nonnegative real, got {v}"
                        )));
                    }
                }
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Axis {
    LS,
    LPhi,
    LXy,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScalingConfig {
    pub axis: Axis,
    /// Swept constant values; a built-in set per axis when absent.
    #[serde(default)]
    pub values: Option<Vec<f64>>,
    /// Target squared distance to the stationary point.
    #[serde(default = "default_epsilon")]
    pub epsilon: f64,
    /// Per-point iteration budget.
    #[serde(default = "default_sweep_budget")]
    pub max_iters: usize,
    #[serde(default = "default_seed")]
    pub seed: u64,
    #[serde(default)]
    pub report_path: Option<PathBuf>,
}

fn default_epsilon() -> f64 {
    1e-10
}

fn default_sweep_budget() -> usize {
    1_000_000
}

impl ScalingConfig {
    /// Fills in the default sweep for the axis and checks the preconditions:
    /// at least five distinct positive values spanning 1.5 decades.
    pub fn resolve_values(&self) -> Result<Vec<f64>, Failure> {
        let values = self.values.clone().unwrap_or_else(|| match self.axis {
            Axis::LS | Axis::LXy => vec![2.0, 4.0, 8.0, 16.0, 32.0, 64.0],
            Axis::LPhi => vec![4.0, 8.0, 16.0, 32.0, 64.0, 128.0, 256.0],
        });
        for &v in &values {
            if !v.is_finite() || v <= 0.0 {
                return Err(Failure::Config(format!(
                    "values must be positive reals, got {v}"
                )));
            }
            if self.axis == Axis::LPhi && v < 1.0 {
                return Err(Failure::Config(format!(
                    "l_phi sweep values must be at least 1 (the fixed modulus), got {v}"
                )));
            }
        }
        let mut distinct = values.clone();
        distinct.sort_by(f64::total_cmp);
        distinct.dedup();
        if distinct.len() < 5 {
            return Err(Failure::Config(format!(
                "a sweep needs at least 5 distinct values, got {}",
                distinct.len()
            )));
        }
        let span = distinct.last().unwrap() / distinct.first().unwrap();
        let decades = span.log10();
        if decades < 1.5 - 1e-9 {
            return Err(Failure::Config(format!(
                "sweep values span {decades:.2} decades, need at least 1.5"
            )));
        }
        if !(self.epsilon > 0.0) || !self.epsilon.is_finite() {
            return Err(Failure::Config(format!(
                "epsilon must be a positive real, got {}",
                self.epsilon
            )));
        }
        if self.max_iters == 0 {
            return Err(Failure::Config("max_iters must be at least 1".into()));
        }
        Ok(values)
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OdeConfig {
    pub problem: ProblemSpec,
    /// Start position; seeded draw when absent. Saddle coordinates as in
    /// [`SolverSpec::z0`].
    #[serde(default)]
    pub z0: Option<Vec<f64>>,
    /// Start velocity; zero when absent.
    #[serde(default)]
    pub v0: Option<Vec<f64>>,
    /// Integration horizon; `20 / sqrt(mu)` when absent.
    #[serde(default)]
    pub t_end: Option<f64>,
    /// Fixed step; the stability heuristic when absent. Values above the
    /// heuristic are rejected.
    #[serde(default)]
    pub dt: Option<f64>,
    #[serde(default = "default_seed")]
    pub seed: u64,
    /// Flow CSV destination; stdout when absent.
    #[serde(default)]
    pub trace_path: Option<PathBuf>,
    #[serde(default)]
    pub report_path: Option<PathBuf>,
}

/// Deterministic start point: coordinates drawn from `(-3, 3)`.
pub fn seeded_point(seed: u64, dim: usize) -> Vector {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Vector((0..dim).map(|_| rng.gen_range(-3.0..3.0)).collect())
}

/// Start point in the configured coordinates: the explicit one when given
/// (checked for dimension), a seeded draw otherwise.
pub fn resolve_start(
    explicit: &Option<Vec<f64>>,
    seed: u64,
    dim: usize,
    field: &str,
) -> Result<Vector, Failure> {
    match explicit {
        Some(v) if v.len() == dim => Ok(Vector::from_slice(v)),
        Some(v) => Err(Failure::Config(format!(
            "{field} has dimension {}, the problem needs {dim}",
            v.len()
        ))),
        None => Ok(seeded_point(seed, dim)),
    }
}
