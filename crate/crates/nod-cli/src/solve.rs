//! The `solve` subcommand: build the configured instance, run the selected
//! method, write the trace CSV and the optional JSON run report.

use serde::Serialize;

use nod_core::plan::default_eta;
use nod_core::solvers::{
    self, default_extragradient_eta, default_forward_eta, SolverError, SolverTrace, StoppingRule,
};
use nod_core::{DecomposedProblem, Vector};

use crate::config::{self, BuiltProblem, Method, RunConfig};
use crate::{csvout, Failure, SolveArgs};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

pub fn run(args: &SolveArgs) -> Result<(), Failure> {
    let mut cfg: RunConfig = config::load_json(&args.config)?;
    if let Some(seed) = args.seed {
        cfg.seed = seed;
    }
    if let Some(eta) = args.eta {
        cfg.solver.eta = Some(eta);
    }
    if let Some(m) = args.max_iters {
        cfg.solver.max_iters = m;
    }
    if let Some(t) = args.tol {
        cfg.solver.tol = t;
    }
    if let Some(out) = &args.out {
        cfg.outputs.trace_path = Some(out.clone());
    }
    cfg.validate()?;

    let built = config::build_problem(&cfg.problem)?;
    let stop = StoppingRule::residual(cfg.solver.tol, cfg.solver.max_iters);
    let eta = resolve_eta(&cfg, built.decomposed())?;

    let (z0, mut trace) = match &built {
        BuiltProblem::Plain(p) => {
            if cfg.solver.method == Method::NodBc {
                return Err(Failure::Config(
                    "solver.method nod_bc needs a bilinear problem \
                     (kind bilinear or bilinear_random)"
                        .into(),
                ));
            }
            let z0 = config::resolve_start(&cfg.solver.z0, cfg.seed, p.dim, "solver.z0")?;
            let trace = run_plain(p, cfg.solver.method, eta, &z0, &stop)?;
            (z0, trace)
        }
        BuiltProblem::Saddle { inst, scaled } => {
            let (d_x, d_y) = inst.dims();
            let z0 =
                config::resolve_start(&cfg.solver.z0, cfg.seed, d_x + d_y, "solver.z0")?;
            let (x0, y0) = z0.split_at(d_x);
            let trace = if cfg.solver.method == Method::NodBc {
                solvers::nod_bc_run(inst, eta, &x0, &y0, &stop).map_err(map_solver_err)?
            } else {
                // Generic methods run on the rescaled problem; map the saddle
                // start point into its coordinates.
                let rx = inst.profile.mu_x.sqrt();
                let ry = inst.profile.mu_y.sqrt();
                let z0_scaled = x0.scale(rx).concat(&y0.scale(ry));
                run_plain(scaled, cfg.solver.method, eta, &z0_scaled, &stop)?
            };
            (z0, trace)
        }
    };
    trace.meta.seed = cfg.seed;

    let csv = csvout::trace_csv(&trace, VERSION);
    config::write_text(cfg.outputs.trace_path.as_deref(), &csv)?;

    if let Some(report_path) = cfg.outputs.report_path.clone() {
        let mut resolved = cfg.clone();
        resolved.solver.eta = Some(eta);
        resolved.solver.z0 = Some(z0.0.clone());
        let last = trace.final_record();
        let report = SolveReport {
            config: resolved,
            instance: trace.meta.instance.clone(),
            method: method_name(cfg.solver.method),
            eta,
            mu: trace.meta.mu,
            seed: cfg.seed,
            stop: trace.meta.stop.as_str(),
            iterations: trace.iterations(),
            final_residual: last.residual,
            final_dist_sq: last.dist_sq,
            grad_calls: trace.meta.grad_calls,
            s_calls: trace.meta.s_calls,
        };
        let json = serde_json::to_string_pretty(&report)
            .expect("report serialization cannot fail") + "\n";
        config::write_text(Some(&report_path), &json)?;
    }
    Ok(())
}

fn method_name(m: Method) -> &'static str {
    match m {
        Method::Nod => "nod",
        Method::NodBc => "nod_bc",
        Method::Nag => "nag",
        Method::Forward => "forward",
        Method::Extragradient => "extragradient",
    }
}

/// The configured override, or the method's certified default. Warns on
/// overrides above the default, which void the convergence guarantee.
fn resolve_eta(cfg: &RunConfig, p: &DecomposedProblem) -> Result<f64, Failure> {
    let certified = match cfg.solver.method {
        Method::Forward => default_forward_eta(p),
        Method::Extragradient => default_extragradient_eta(p),
        _ => default_eta(p.mu, p.l_phi, p.l_s)
            .map_err(|e| Failure::Config(format!("problem constants: {e}")))?,
    };
    match cfg.solver.eta {
        None => Ok(certified),
        Some(eta) => {
            if eta > certified {
                eprintln!(
                    "warning: solver.eta {eta:e} exceeds the certified default \
                     {certified:e}; convergence is not guaranteed"
                );
            }
            Ok(eta)
        }
    }
}

fn run_plain(
    p: &DecomposedProblem,
    method: Method,
    eta: f64,
    z0: &Vector,
    stop: &StoppingRule,
) -> Result<SolverTrace, Failure> {
    let result = match method {
        Method::Nod => solvers::nod_run(p, eta, z0, stop),
        Method::Nag => solvers::nag_run(p, eta, z0, stop),
        Method::Forward => solvers::forward_run(p, eta, z0, stop),
        Method::Extragradient => solvers::extragradient_run(p, eta, z0, stop),
        Method::NodBc => unreachable!("saddle dispatch happens in run()"),
    };
    result.map_err(map_solver_err)
}

fn map_solver_err(e: SolverError) -> Failure {
    match e {
        SolverError::Diverged { .. } => Failure::Diverged(e.to_string()),
        other => Failure::Config(other.to_string()),
    }
}

#[derive(Serialize)]
struct SolveReport {
    config: RunConfig,
    instance: String,
    method: &'static str,
    eta: f64,
    mu: f64,
    seed: u64,
    stop: &'static str,
    iterations: usize,
    final_residual: f64,
    final_dist_sq: Option<f64>,
    grad_calls: usize,
    s_calls: usize,
}
