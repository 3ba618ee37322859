//! Iterative solvers for decomposed strongly monotone problems.
//!
//! The accelerated scheme keeps three coupled sequences: the base iterate
//! `z`, the momentum iterate `z_tilde`, and the lookahead point `z_hat` at
//! which the splitting term is evaluated:
//!
//! ```text
//! z_{k+1}       = z_tilde_k - eta * (grad_phi(z_tilde_k) + S(z_hat_k))
//! z_tilde_{k+1} = z_{k+1} + tau * (z_{k+1} - z_k)
//! z_hat_{k+1}   = z_tilde_{k+1} + theta * (z_tilde_{k+1} - z_tilde_k)
//! ```
//!
//! Each iteration costs exactly one `grad_phi` and one `S` evaluation; the
//! pair evaluated for the stopping test is reused for the step. The module
//! also provides the saddle-form variant that works directly on a bilinear
//! model's gradient oracle, plus forward and extragradient baselines.

use crate::linalg::{extrapolate, Vector};
use crate::lyapunov;
use crate::plan::{PlanError, StepPlan};
use crate::problems::{BilinearInstance, DecomposedProblem};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum SolverError {
    #[error(transparent)]
    Plan(#[from] PlanError),
    #[error("diverged at iteration {k}: residual {residual:.6e}")]
    Diverged { k: usize, residual: f64 },
    #[error("distance-based stopping requires a certified stationary point")]
    NeedsCertificate,
    #[error("accelerated gradient run requires a vanishing splitting term, got L_S = {l_s}")]
    SplittingPresent { l_s: f64 },
}

/// Why a run stopped. Exhausting the budget is a normal outcome, not an
/// error; blow-ups surface as [`SolverError::Diverged`] instead.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StopReason {
    ResidualTol,
    DistTol,
    Budget,
}

impl StopReason {
    pub fn as_str(&self) -> &'static str {
        match self {
            StopReason::ResidualTol => "residual_tol",
            StopReason::DistTol => "dist_tol",
            StopReason::Budget => "budget",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StoppingRule {
    pub max_iters: usize,
    pub residual_tol: Option<f64>,
    pub dist_sq_tol: Option<f64>,
}

impl StoppingRule {
    pub fn residual(tol: f64, max_iters: usize) -> Self {
        StoppingRule { max_iters, residual_tol: Some(tol), dist_sq_tol: None }
    }

    pub fn dist_sq(tol: f64, max_iters: usize) -> Self {
        StoppingRule { max_iters, residual_tol: None, dist_sq_tol: Some(tol) }
    }

    pub fn budget(max_iters: usize) -> Self {
        StoppingRule { max_iters, residual_tol: None, dist_sq_tol: None }
    }
}

impl Default for StoppingRule {
    fn default() -> Self {
        StoppingRule::residual(1e-10, 100_000)
    }
}

/// Residual growth beyond this factor times the initial residual aborts the
/// run. An absolute floor of machine epsilon keeps starts at the solution
/// from tripping the guard on harmless noise.
const DIVERGENCE_FACTOR: f64 = 1e12;

/// Full state of the accelerated iteration at step `k`, including the lagged
/// quantities the Lyapunov monitor consumes: the previous momentum iterate,
/// the last two combined-field evaluations, and `z_tilde - z` from the
/// previous step.
#[derive(Debug, Clone)]
pub struct SolverState {
    pub k: usize,
    pub z: Vector,
    pub z_tilde: Vector,
    pub z_hat: Vector,
    pub z_tilde_prev: Option<Vector>,
    pub field_prev: Option<Vector>,
    pub field_prev2: Option<Vector>,
    pub diff_prev: Option<Vector>,
}

impl SolverState {
    pub fn init(z0: Vector) -> Self {
        SolverState {
            k: 0,
            z: z0.clone(),
            z_tilde: z0.clone(),
            z_hat: z0,
            z_tilde_prev: None,
            field_prev: None,
            field_prev2: None,
            diff_prev: None,
        }
    }

    /// Pure update given the combined field at `(z_tilde_k, z_hat_k)`.
    pub fn advance(&self, plan: &StepPlan, field: &Vector) -> SolverState {
        let z_next = self.z_tilde.add_scaled(-plan.eta, field);
        let z_tilde_next = extrapolate(&z_next, &self.z, plan.tau);
        let z_hat_next = extrapolate(&z_tilde_next, &self.z_tilde, plan.theta);
        SolverState {
            k: self.k + 1,
            diff_prev: Some(self.z_tilde.sub(&self.z)),
            z_tilde_prev: Some(self.z_tilde.clone()),
            field_prev: Some(field.clone()),
            field_prev2: self.field_prev.clone(),
            z: z_next,
            z_tilde: z_tilde_next,
            z_hat: z_hat_next,
        }
    }
}

/// One accelerated step: evaluates `grad_phi` at `z_tilde` and `S` at
/// `z_hat` exactly once each, then advances the three sequences.
pub fn nod_step(
    state: &SolverState,
    plan: &StepPlan,
    problem: &DecomposedProblem,
) -> SolverState {
    let field = problem.grad_phi(&state.z_tilde).add(&problem.s(&state.z_hat));
    state.advance(plan, &field)
}

/// One row per iterate. `psi` fields are populated for `k >= 2` when the
/// instance carries both a stationary point and a potential-value oracle;
/// `psi_ratio` on row `k` is `psi_{k+1} / psi_k` and `contraction_ok`
/// reports the slack-adjusted contraction test for that same pair.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceRecord {
    pub k: usize,
    pub residual: f64,
    pub dist_sq: Option<f64>,
    pub psi: Option<f64>,
    pub psi_ratio: Option<f64>,
    pub contraction_ok: Option<bool>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TraceMeta {
    pub instance: String,
    pub method: String,
    pub eta: f64,
    pub mu: f64,
    /// Seed used to generate the start point or instance; 0 when the caller
    /// supplied everything explicitly. Recorded so emitted artifacts can be
    /// reproduced byte for byte.
    pub seed: u64,
    pub stop: StopReason,
    /// Oracle evaluations: `grad_calls`/`s_calls` count `grad_phi`/`S` for
    /// decomposed runs and `grad_x L`/`grad_y L` for saddle-form runs.
    pub grad_calls: usize,
    pub s_calls: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverTrace {
    pub meta: TraceMeta,
    pub records: Vec<TraceRecord>,
}

impl SolverTrace {
    pub fn final_record(&self) -> &TraceRecord {
        self.records.last().expect("a trace always has the k=0 record")
    }

    /// Number of steps taken (the final record's index).
    pub fn iterations(&self) -> usize {
        self.final_record().k
    }
}

struct StopCheck {
    initial_residual: Option<f64>,
}

impl StopCheck {
    fn new() -> Self {
        StopCheck { initial_residual: None }
    }

    fn classify(
        &mut self,
        k: usize,
        residual: f64,
        dist_sq: Option<f64>,
        stop: &StoppingRule,
    ) -> Result<Option<StopReason>, SolverError> {
        if !residual.is_finite() {
            return Err(SolverError::Diverged { k, residual });
        }
        let init = *self.initial_residual.get_or_insert(residual);
        if let Some(tol) = stop.residual_tol {
            if residual <= tol {
                return Ok(Some(StopReason::ResidualTol));
            }
        }
        if let (Some(tol), Some(d)) = (stop.dist_sq_tol, dist_sq) {
            if d <= tol {
                return Ok(Some(StopReason::DistTol));
            }
        }
        if k >= stop.max_iters {
            return Ok(Some(StopReason::Budget));
        }
        if residual > DIVERGENCE_FACTOR * init.max(f64::EPSILON) {
            return Err(SolverError::Diverged { k, residual });
        }
        Ok(None)
    }
}

fn fill_contraction_columns(records: &mut [TraceRecord], eta: f64, mu: f64) {
    for i in 0..records.len().saturating_sub(1) {
        if let (Some(pk), Some(pk1)) = (records[i].psi, records[i + 1].psi) {
            if pk > 0.0 {
                records[i].psi_ratio = Some(pk1 / pk);
            }
            records[i].contraction_ok = Some(lyapunov::contraction_check(pk, pk1, eta, mu));
        }
    }
}

fn accelerated_run(
    problem: &DecomposedProblem,
    eta: f64,
    z0: &Vector,
    stop: &StoppingRule,
    use_splitting: bool,
    method: &str,
) -> Result<SolverTrace, SolverError> {
    let plan = StepPlan::new(eta, problem.mu)?;
    if stop.dist_sq_tol.is_some() && problem.z_star.is_none() {
        return Err(SolverError::NeedsCertificate);
    }
    let monitor = lyapunov::Monitor::try_new(problem, &plan);
    let mut state = SolverState::init(z0.clone());
    let mut records = Vec::new();
    let mut grad_calls = 0usize;
    let mut s_calls = 0usize;
    let mut check = StopCheck::new();
    let stop_reason = loop {
        let field = if use_splitting {
            let gp = problem.grad_phi(&state.z_tilde);
            grad_calls += 1;
            let sv = problem.s(&state.z_hat);
            s_calls += 1;
            gp.add(&sv)
        } else {
            grad_calls += 1;
            problem.grad_phi(&state.z_tilde)
        };
        let residual = field.norm();
        let dist_sq = problem
            .z_star
            .as_ref()
            .map(|zs| state.z_tilde.dist_sq(zs));
        let psi = monitor.as_ref().and_then(|m| m.evaluate(&state));
        records.push(TraceRecord {
            k: state.k,
            residual,
            dist_sq,
            psi,
            psi_ratio: None,
            contraction_ok: None,
        });
        if let Some(reason) = check.classify(state.k, residual, dist_sq, stop)? {
            break reason;
        }
        state = state.advance(&plan, &field);
    };
    fill_contraction_columns(&mut records, eta, problem.mu);
    debug_assert_eq!(grad_calls, records.len());
    Ok(SolverTrace {
        meta: TraceMeta {
            instance: problem.id.clone(),
            method: method.to_string(),
            eta,
            mu: problem.mu,
            seed: 0,
            stop: stop_reason,
            grad_calls,
            s_calls,
        },
        records,
    })
}

/// Run the accelerated scheme on a decomposed problem.
pub fn nod_run(
    problem: &DecomposedProblem,
    eta: f64,
    z0: &Vector,
    stop: &StoppingRule,
) -> Result<SolverTrace, SolverError> {
    accelerated_run(problem, eta, z0, stop, true, "nod")
}

/// Accelerated gradient descent for instances with no splitting term. On
/// such instances this reproduces `nod_run`'s momentum iterates exactly,
/// while skipping the (identically zero) `S` evaluations.
pub fn nag_run(
    problem: &DecomposedProblem,
    eta: f64,
    z0: &Vector,
    stop: &StoppingRule,
) -> Result<SolverTrace, SolverError> {
    if problem.l_s != 0.0 {
        return Err(SolverError::SplittingPresent { l_s: problem.l_s });
    }
    accelerated_run(problem, eta, z0, stop, false, "nag")
}

/// Saddle-form accelerated run on a bilinear model, using only its gradient
/// oracle. `eta` is the base step of the block-rescaled problem (which has
/// modulus 1); the blocks step with `eta/mu_x` and `eta/mu_y`. The lagged
/// momentum sequences bootstrap with `x_tilde_{-1} = x_tilde_0`.
///
/// Per iteration this evaluates `grad_x L` and `grad_y L` twice each: once
/// at the current momentum pair and once at the lagged pair.
pub fn nod_bc_run(
    inst: &BilinearInstance,
    eta: f64,
    x0: &Vector,
    y0: &Vector,
    stop: &StoppingRule,
) -> Result<SolverTrace, SolverError> {
    let plan = StepPlan::new(eta, 1.0)?;
    let (d_x, d_y) = inst.dims();
    let eta_x = eta / inst.profile.mu_x;
    let eta_y = eta / inst.profile.mu_y;
    let (x_star, y_star) = &inst.saddle_star;

    let mut x = x0.clone();
    let mut y = y0.clone();
    let mut x_tilde = x0.clone();
    let mut y_tilde = y0.clone();
    let mut x_tilde_prev = x_tilde.clone();
    let mut y_tilde_prev = y_tilde.clone();

    let mut records = Vec::new();
    let mut grad_calls = 0usize;
    let mut s_calls = 0usize;
    let mut k = 0usize;
    let mut check = StopCheck::new();
    let stop_reason = loop {
        let gx = inst.grad_x(&x_tilde, &y_tilde);
        grad_calls += 1;
        let gy = inst.grad_y(&x_tilde, &y_tilde);
        s_calls += 1;
        let residual = (gx.norm_sq() + gy.norm_sq()).sqrt();
        let dist_sq = x_tilde.dist_sq(x_star) + y_tilde.dist_sq(y_star);
        records.push(TraceRecord {
            k,
            residual,
            dist_sq: Some(dist_sq),
            psi: None,
            psi_ratio: None,
            contraction_ok: None,
        });
        if let Some(reason) = check.classify(k, residual, Some(dist_sq), stop)? {
            break reason;
        }
        let gx_lag = inst.grad_x(&x_tilde, &y_tilde_prev);
        grad_calls += 1;
        let gy_lag = inst.grad_y(&x_tilde_prev, &y_tilde);
        s_calls += 1;
        let push_x = gx.add_scaled(plan.theta, &gx.sub(&gx_lag));
        let push_y = gy.add_scaled(plan.theta, &gy.sub(&gy_lag));
        let x_next = x_tilde.add_scaled(-eta_x, &push_x);
        let y_next = y_tilde.add_scaled(eta_y, &push_y);
        let x_tilde_next = extrapolate(&x_next, &x, plan.tau);
        let y_tilde_next = extrapolate(&y_next, &y, plan.tau);
        x_tilde_prev = x_tilde;
        y_tilde_prev = y_tilde;
        x = x_next;
        y = y_next;
        x_tilde = x_tilde_next;
        y_tilde = y_tilde_next;
        k += 1;
    };
    Ok(SolverTrace {
        meta: TraceMeta {
            instance: format!("bilinear_dx{d_x}_dy{d_y}"),
            method: "nod_bc".to_string(),
            eta,
            mu: 1.0,
            seed: 0,
            stop: stop_reason,
            grad_calls,
            s_calls,
        },
        records,
    })
}

/// Combined Lipschitz constant of the field, `L_phi + L_S`.
pub fn field_lipschitz(problem: &DecomposedProblem) -> f64 {
    problem.l_phi + problem.l_s
}

/// Certified step for the plain forward iteration, `mu / (L_phi + L_S)^2`.
pub fn default_forward_eta(problem: &DecomposedProblem) -> f64 {
    let lt = field_lipschitz(problem);
    problem.mu / (lt * lt)
}

/// Certified step for the extragradient iteration, `1 / (2 (L_phi + L_S))`.
pub fn default_extragradient_eta(problem: &DecomposedProblem) -> f64 {
    1.0 / (2.0 * field_lipschitz(problem))
}

fn simple_run(
    problem: &DecomposedProblem,
    eta: f64,
    z0: &Vector,
    stop: &StoppingRule,
    extragradient: bool,
) -> Result<SolverTrace, SolverError> {
    if !(eta > 0.0) || !eta.is_finite() {
        return Err(SolverError::Plan(PlanError::EtaMuOutOfRange(eta)));
    }
    if stop.dist_sq_tol.is_some() && problem.z_star.is_none() {
        return Err(SolverError::NeedsCertificate);
    }
    let mut z = z0.clone();
    let mut records = Vec::new();
    let mut grad_calls = 0usize;
    let mut s_calls = 0usize;
    let mut k = 0usize;
    let mut check = StopCheck::new();
    let stop_reason = loop {
        let field = problem.field(&z);
        grad_calls += 1;
        s_calls += 1;
        let residual = field.norm();
        let dist_sq = problem.z_star.as_ref().map(|zs| z.dist_sq(zs));
        records.push(TraceRecord {
            k,
            residual,
            dist_sq,
            psi: None,
            psi_ratio: None,
            contraction_ok: None,
        });
        if let Some(reason) = check.classify(k, residual, dist_sq, stop)? {
            break reason;
        }
        if extragradient {
            let half = z.add_scaled(-eta, &field);
            let field_half = problem.field(&half);
            grad_calls += 1;
            s_calls += 1;
            if !field_half.is_finite() {
                return Err(SolverError::Diverged { k, residual: f64::NAN });
            }
            z = z.add_scaled(-eta, &field_half);
        } else {
            z = z.add_scaled(-eta, &field);
        }
        k += 1;
    };
    Ok(SolverTrace {
        meta: TraceMeta {
            instance: problem.id.clone(),
            method: if extragradient { "extragradient" } else { "forward" }.to_string(),
            eta,
            mu: problem.mu,
            seed: 0,
            stop: stop_reason,
            grad_calls,
            s_calls,
        },
        records,
    })
}

/// Plain forward iteration `z <- z - eta * (grad_phi(z) + S(z))`.
pub fn forward_run(
    problem: &DecomposedProblem,
    eta: f64,
    z0: &Vector,
    stop: &StoppingRule,
) -> Result<SolverTrace, SolverError> {
    simple_run(problem, eta, z0, stop, false)
}

/// Extragradient iteration: a forward half-step followed by a full step
/// using the field at the half-point. Two field evaluations per iteration.
pub fn extragradient_run(
    problem: &DecomposedProblem,
    eta: f64,
    z0: &Vector,
    stop: &StoppingRule,
) -> Result<SolverTrace, SolverError> {
    simple_run(problem, eta, z0, stop, true)
}
