//! The `scaling` subcommand: sweep one smoothness constant, measure
//! iterations to a target squared distance, fit the log-log slope.
//!
//! Sweep points are independent problems, so they run concurrently;
//! `NOD_THREADS` caps the worker count and report rows stay in sweep order.

use serde::Serialize;

use nod_core::linalg::Matrix;
use nod_core::plan::default_eta;
use nod_core::problems::{make_pure_convex, make_quadratic_skew, BilinearInstance};
use nod_core::solvers::{nod_bc_run, nod_run, SolverError, StopReason, StoppingRule};
use nod_core::Vector;

use crate::config::{self, seeded_point, Axis, ScalingConfig};
use crate::{Failure, ScalingArgs};

#[derive(Serialize)]
struct SweepPoint {
    value: f64,
    iterations: usize,
}

#[derive(Serialize)]
struct ScalingReport {
    config: ScalingConfig,
    axis: Axis,
    epsilon: f64,
    theory_slope: f64,
    slope_band: [f64; 2],
    fitted_slope: f64,
    within_band: bool,
    points: Vec<SweepPoint>,
}

pub fn run(args: &ScalingArgs) -> Result<(), Failure> {
    let mut cfg: ScalingConfig = config::load_json(&args.config)?;
    if let Some(seed) = args.seed {
        cfg.seed = seed;
    }
    if let Some(m) = args.max_iters {
        cfg.max_iters = m;
    }
    if let Some(eps) = args.tol {
        cfg.epsilon = eps;
    }
    if let Some(out) = &args.out {
        cfg.report_path = Some(out.clone());
    }
    let values = cfg.resolve_values()?;

    let outcomes = run_sweep(&cfg, &values);
    let mut points = Vec::with_capacity(values.len());
    for (value, outcome) in values.iter().zip(outcomes) {
        points.push(SweepPoint { value: *value, iterations: outcome? });
    }

    let fitted_slope = log_log_slope(&points);
    let (theory_slope, slope_band) = match cfg.axis {
        Axis::LS | Axis::LXy => (1.0, [0.8, 1.2]),
        Axis::LPhi => (0.5, [0.4, 0.6]),
    };
    let mut resolved = cfg.clone();
    resolved.values = Some(values);
    let report = ScalingReport {
        config: resolved,
        axis: cfg.axis,
        epsilon: cfg.epsilon,
        theory_slope,
        slope_band,
        within_band: (slope_band[0]..=slope_band[1]).contains(&fitted_slope),
        fitted_slope,
        points,
    };
    let json =
        serde_json::to_string_pretty(&report).expect("report serialization cannot fail") + "\n";
    config::write_text(cfg.report_path.as_deref(), &json)
}

/// Runs every sweep point, at most `NOD_THREADS` at a time (all cores when
/// unset), returning outcomes in sweep order.
fn run_sweep(cfg: &ScalingConfig, values: &[f64]) -> Vec<Result<usize, Failure>> {
    let cap = thread_cap().min(values.len()).max(1);
    let mut outcomes = Vec::with_capacity(values.len());
    for chunk in values.chunks(cap) {
        std::thread::scope(|scope| {
            let handles: Vec<_> = chunk
                .iter()
                .map(|&value| scope.spawn(move || run_point(cfg, value)))
                .collect();
            for handle in handles {
                outcomes.push(handle.join().expect("sweep worker panicked"));
            }
        });
    }
    outcomes
}

fn thread_cap() -> usize {
    match std::env::var("NOD_THREADS") {
        Ok(s) => s.parse::<usize>().ok().filter(|&n| n >= 1).unwrap_or(1),
        Err(_) => std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1),
    }
}

/// Iterations until `dist_sq <= epsilon` on the instance the axis prescribes
/// for this constant value.
fn run_point(cfg: &ScalingConfig, value: f64) -> Result<usize, Failure> {
    let stop = StoppingRule::dist_sq(cfg.epsilon, cfg.max_iters);
    let trace = match cfg.axis {
        Axis::LS => {
            let a = Matrix::identity(2);
            let k = Matrix::from_rows(&[vec![0.0, value], vec![-value, 0.0]])
                .expect("fixed 2x2 shape");
            let p = make_quadratic_skew(a, k)
                .map_err(|e| Failure::Config(format!("sweep value {value}: {e}")))?;
            let eta = certified_eta(p.mu, p.l_phi, p.l_s, value)?;
            nod_run(&p, eta, &seeded_point(cfg.seed, 2), &stop)
        }
        Axis::LPhi => {
            let a = Matrix::diag(&[1.0, value]);
            let p = make_pure_convex(a, Vector::zeros(2))
                .map_err(|e| Failure::Config(format!("sweep value {value}: {e}")))?;
            let eta = certified_eta(p.mu, p.l_phi, p.l_s, value)?;
            nod_run(&p, eta, &seeded_point(cfg.seed, 2), &stop)
        }
        Axis::LXy => {
            let m = Matrix::from_rows(&[vec![0.0, value], vec![-value, 0.0]])
                .expect("fixed 2x2 shape");
            let inst = BilinearInstance::new(
                Matrix::identity(2),
                Vector::zeros(2),
                Matrix::identity(2),
                Vector::zeros(2),
                m,
            )
            .map_err(|e| Failure::Config(format!("sweep value {value}: {e}")))?;
            let eta =
                certified_eta(1.0, inst.profile.scaled_l_phi(), inst.profile.scaled_l_s(), value)?;
            let z0 = seeded_point(cfg.seed, 4);
            let (x0, y0) = z0.split_at(2);
            nod_bc_run(&inst, eta, &x0, &y0, &stop)
        }
    };
    match trace {
        Ok(t) if t.meta.stop == StopReason::DistTol => Ok(t.iterations()),
        Ok(t) => Err(Failure::Diverged(format!(
            "sweep point {value} did not reach epsilon {:e} within {} iterations",
            cfg.epsilon,
            t.iterations()
        ))),
        Err(SolverError::Diverged { k, residual }) => Err(Failure::Diverged(format!(
            "sweep point {value} diverged at iteration {k} (residual {residual:e})"
        ))),
        Err(e) => Err(Failure::Config(format!("sweep point {value}: {e}"))),
    }
}

fn certified_eta(mu: f64, l_phi: f64, l_s: f64, value: f64) -> Result<f64, Failure> {
    default_eta(mu, l_phi, l_s)
        .map_err(|e| Failure::Config(format!("sweep value {value}: {e}")))
}

/// Least-squares slope of `ln iterations` against `ln value`.
fn log_log_slope(points: &[SweepPoint]) -> f64 {
    let xs: Vec<f64> = points.iter().map(|p| p.value.ln()).collect();
    let ys: Vec<f64> = points.iter().map(|p| (p.iterations.max(1) as f64).ln()).collect();
    let n = xs.len() as f64;
    let x_bar = xs.iter().sum::<f64>() / n;
    let y_bar = ys.iter().sum::<f64>() / n;
    let num: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - x_bar) * (y - y_bar)).sum();
    let den: f64 = xs.iter().map(|x| (x - x_bar) * (x - x_bar)).sum();
    num / den
}
