//! The `ode` subcommand: integrate the continuous-time flow, write the
//! sampled trajectory as CSV, and check the exponential decay envelope.

use serde::Serialize;

use nod_core::ode_flow::{gronwall_check, heuristic_dt, integrate, OdeError};
use nod_core::Vector;

use crate::config::{self, BuiltProblem, OdeConfig};
use crate::{csvout, Failure, OdeArgs};

#[derive(Serialize)]
struct OdeReport {
    config: OdeConfig,
    instance: String,
    dt: f64,
    t_end: f64,
    rows: usize,
    psi0: f64,
    final_psi: Option<f64>,
    envelope_ok: bool,
    distance_ok: bool,
    monotone_ok: bool,
    first_violation: Option<usize>,
    pass: bool,
}

pub fn run(args: &OdeArgs) -> Result<(), Failure> {
    let mut cfg: OdeConfig = config::load_json(&args.config)?;
    if let Some(seed) = args.seed {
        cfg.seed = seed;
    }
    if let Some(out) = &args.out {
        cfg.trace_path = Some(out.clone());
    }

    let built = config::build_problem(&cfg.problem)?;
    let p = built.decomposed();

    let bound = heuristic_dt(p);
    let dt = match cfg.dt {
        None => bound,
        Some(dt) if dt.is_finite() && dt > 0.0 && dt <= bound * (1.0 + 1e-12) => dt,
        Some(dt) => {
            return Err(Failure::Config(format!(
                "dt {dt:e} violates the stability heuristic (0, {bound:e}] for this instance"
            )));
        }
    };
    let t_end = cfg.t_end.unwrap_or(20.0 / p.mu.sqrt());
    if !(t_end > 0.0) || !t_end.is_finite() {
        return Err(Failure::Config(format!("t_end must be a positive real, got {t_end}")));
    }

    // Start data arrives in the model's coordinates; saddle models are
    // integrated in rescaled coordinates, like the generic solvers.
    let (z0, v0) = match &built {
        BuiltProblem::Plain(p) => {
            let z0 = config::resolve_start(&cfg.z0, cfg.seed, p.dim, "z0")?;
            let v0 = resolve_v0(&cfg.v0, p.dim)?;
            (z0, v0)
        }
        BuiltProblem::Saddle { inst, .. } => {
            let (d_x, d_y) = inst.dims();
            let z0 = config::resolve_start(&cfg.z0, cfg.seed, d_x + d_y, "z0")?;
            let v0 = resolve_v0(&cfg.v0, d_x + d_y)?;
            let rx = inst.profile.mu_x.sqrt();
            let ry = inst.profile.mu_y.sqrt();
            let scale = |u: &Vector| {
                let (a, b) = u.split_at(d_x);
                a.scale(rx).concat(&b.scale(ry))
            };
            (scale(&z0), scale(&v0))
        }
    };

    let mut trace = integrate(p, &z0, &v0, t_end, dt).map_err(map_ode_err)?;

    if args.corrupt_psi {
        // Test hook: bump one certificate sample far above any envelope so
        // the violation path is exercised end to end.
        let mid = trace.rows.len() / 2;
        if let Some(psi) = trace.rows[mid].psi {
            trace.rows[mid].psi = Some(psi * 10.0 + 1.0);
        }
    }

    let check = gronwall_check(&trace, p).map_err(map_ode_err)?;

    let csv = csvout::flow_csv(&trace, p, &check, cfg.seed, crate::solve::VERSION);
    config::write_text(cfg.trace_path.as_deref(), &csv)?;

    if let Some(report_path) = cfg.report_path.clone() {
        let mut resolved = cfg.clone();
        resolved.dt = Some(dt);
        resolved.t_end = Some(t_end);
        resolved.z0 = Some(cfg.z0.clone().unwrap_or_else(|| {
            config::seeded_point(cfg.seed, p.dim).0
        }));
        let report = OdeReport {
            config: resolved,
            instance: p.id.clone(),
            dt,
            t_end,
            rows: trace.rows.len(),
            psi0: check.psi0,
            final_psi: trace.final_row().psi,
            envelope_ok: check.envelope_ok,
            distance_ok: check.distance_ok,
            monotone_ok: check.monotone_ok,
            first_violation: check.first_violation,
            pass: check.pass(),
        };
        let json = serde_json::to_string_pretty(&report)
            .expect("report serialization cannot fail") + "\n";
        config::write_text(Some(&report_path), &json)?;
    }

    if !check.pass() {
        return Err(Failure::Envelope(format!(
            "decay envelope violated (first violation at row {:?} of {})",
            check.first_violation,
            trace.rows.len()
        )));
    }
    Ok(())
}

fn resolve_v0(v0: &Option<Vec<f64>>, dim: usize) -> Result<Vector, Failure> {
    match v0 {
        Some(v) if v.len() == dim => Ok(Vector::from_slice(v)),
        Some(v) => Err(Failure::Config(format!(
            "v0 has dimension {}, the problem needs {dim}",
            v.len()
        ))),
        None => Ok(Vector::zeros(dim)),
    }
}

fn map_ode_err(e: OdeError) -> Failure {
    Failure::Config(e.to_string())
}
