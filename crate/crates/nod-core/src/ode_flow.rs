//! Continuous-time limit of the accelerated scheme.
//!
//! The second-order flow is
//!
//! ```text
//! z'' + 2 sqrt(mu) z' + grad_phi(z) + S(z + z'/sqrt(mu)) = 0
//! ```
//!
//! integrated here as a first-order system in `(z, v)` with the classical
//! fourth-order Runge-Kutta step at fixed step size. Step sizes above
//! `0.01 / max(1, L_phi + L_S)` are refused: the flow is stiff in the field's
//! Lipschitz constant, and a fixed budget of accuracy per step keeps the
//! certificate columns trustworthy.

use crate::linalg::Vector;
use crate::lyapunov::{self, LyapunovError};
use crate::problems::DecomposedProblem;
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum OdeError {
    #[error("step {dt:.3e} exceeds the stability heuristic {bound:.3e}")]
    StepTooLarge { dt: f64, bound: f64 },
    #[error("invalid flow input: {0}")]
    BadInput(String),
    #[error(transparent)]
    Lyapunov(#[from] LyapunovError),
}

/// Position and velocity of the flow at time `t`.
#[derive(Debug, Clone, PartialEq)]
pub struct FlowState {
    pub t: f64,
    pub z: Vector,
    pub v: Vector,
}

/// Right-hand side of the first-order system: `dz = v`,
/// `dv = -2 sqrt(mu) v - grad_phi(z) - S(z + v / sqrt(mu))`.
pub fn vector_field(z: &Vector, v: &Vector, problem: &DecomposedProblem) -> (Vector, Vector) {
    let root_mu = problem.mu.sqrt();
    let lookahead = z.add_scaled(1.0 / root_mu, v);
    let dv = v
        .scale(-2.0 * root_mu)
        .sub(&problem.grad_phi(z))
        .sub(&problem.s(&lookahead));
    (v.clone(), dv)
}

/// Largest admissible fixed step for the integrator.
pub fn heuristic_dt(problem: &DecomposedProblem) -> f64 {
    0.01 / 1.0f64.max(problem.l_phi + problem.l_s)
}

/// One sampled row of an integrated trajectory. `psi` is the continuous
/// certificate, present when the instance carries stationary data.
#[derive(Debug, Clone, PartialEq)]
pub struct FlowRow {
    pub t: f64,
    pub z: Vector,
    pub v: Vector,
    pub psi: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FlowTrace {
    pub dt: f64,
    pub rows: Vec<FlowRow>,
}

impl FlowTrace {
    pub fn final_row(&self) -> &FlowRow {
        self.rows.last().expect("a flow trace always has the t=0 row")
    }
}

/// Integrate the flow from `(z0, v0)` to the first multiple of `dt` at or
/// past `t_end`, sampling every step. Row times are `i * dt` computed from
/// the index, so they carry no accumulated drift.
pub fn integrate(
    problem: &DecomposedProblem,
    z0: &Vector,
    v0: &Vector,
    t_end: f64,
    dt: f64,
) -> Result<FlowTrace, OdeError> {
    if z0.dim() != problem.dim || v0.dim() != problem.dim {
        return Err(OdeError::BadInput(format!(
            "start point dims {}/{} do not match the problem dim {}",
            z0.dim(),
            v0.dim(),
            problem.dim
        )));
    }
    if !(t_end > 0.0) || !t_end.is_finite() {
        return Err(OdeError::BadInput(format!("t_end must be positive, got {t_end}")));
    }
    let bound = heuristic_dt(problem);
    if !(dt > 0.0) || !dt.is_finite() {
        return Err(OdeError::BadInput(format!("dt must be positive, got {dt}")));
    }
    if dt > bound * (1.0 + 1e-12) {
        return Err(OdeError::StepTooLarge { dt, bound });
    }
    let steps = (t_end / dt - 1e-9).ceil().max(1.0) as usize;

    let psi_of = |z: &Vector, v: &Vector| lyapunov::continuous_lyapunov(z, v, problem).ok();
    let mut z = z0.clone();
    let mut v = v0.clone();
    let mut rows = Vec::with_capacity(steps + 1);
    rows.push(FlowRow { t: 0.0, z: z.clone(), v: v.clone(), psi: psi_of(&z, &v) });
    for i in 1..=steps {
        let (k1z, k1v) = vector_field(&z, &v, problem);
        let (k2z, k2v) = vector_field(
            &z.add_scaled(0.5 * dt, &k1z),
            &v.add_scaled(0.5 * dt, &k1v),
            problem,
        );
        let (k3z, k3v) = vector_field(
            &z.add_scaled(0.5 * dt, &k2z),
            &v.add_scaled(0.5 * dt, &k2v),
            problem,
        );
        let (k4z, k4v) = vector_field(&z.add_scaled(dt, &k3z), &v.add_scaled(dt, &k3v), problem);
        let weight = dt / 6.0;
        z = z
            .add_scaled(weight, &k1z)
            .add_scaled(2.0 * weight, &k2z)
            .add_scaled(2.0 * weight, &k3z)
            .add_scaled(weight, &k4z);
        v = v
            .add_scaled(weight, &k1v)
            .add_scaled(2.0 * weight, &k2v)
            .add_scaled(2.0 * weight, &k3v)
            .add_scaled(weight, &k4v);
        if !z.is_finite() || !v.is_finite() {
            return Err(OdeError::BadInput(format!(
                "trajectory left the finite range at step {i}"
            )));
        }
        rows.push(FlowRow {
            t: i as f64 * dt,
            z: z.clone(),
            v: v.clone(),
            psi: psi_of(&z, &v),
        });
    }
    Ok(FlowTrace { dt, rows })
}

/// Outcome of checking a trajectory against the exponential decay envelope
/// and the distance lower bound.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GronwallReport {
    pub rows: usize,
    pub psi0: f64,
    /// `psi_t <= psi_0 exp(-sqrt(mu) t) (1 + 1e-4) + 1e-12` on every row.
    pub envelope_ok: bool,
    /// `mu |z_t - z_star|^2 <= psi_t (1 + 1e-9)` on every row.
    pub distance_ok: bool,
    /// `psi` never increases by more than `1e-6 * psi_0` between rows.
    pub monotone_ok: bool,
    pub first_violation: Option<usize>,
}

impl GronwallReport {
    pub fn pass(&self) -> bool {
        self.envelope_ok && self.distance_ok
    }
}

/// Check every sampled row against the decay envelope. Requires certificate
/// columns on all rows (so the instance must carry stationary data).
pub fn gronwall_check(
    trace: &FlowTrace,
    problem: &DecomposedProblem,
) -> Result<GronwallReport, OdeError> {
    let z_star = problem
        .z_star
        .as_ref()
        .ok_or(OdeError::Lyapunov(LyapunovError::MissingCertificate))?;
    let rows = &trace.rows;
    if rows.is_empty() {
        return Err(OdeError::BadInput("empty trajectory".into()));
    }
    let psi0 = rows[0]
        .psi
        .ok_or(OdeError::Lyapunov(LyapunovError::MissingPotential))?;
    let root_mu = problem.mu.sqrt();
    let mut envelope_ok = true;
    let mut distance_ok = true;
    let mut monotone_ok = true;
    let mut first_violation = None;
    let mut prev_psi = psi0;
    for (i, row) in rows.iter().enumerate() {
        let psi = row
            .psi
            .ok_or(OdeError::Lyapunov(LyapunovError::MissingPotential))?;
        let envelope = psi0 * (-root_mu * row.t).exp() * (1.0 + 1e-4) + 1e-12;
        if psi > envelope && envelope_ok {
            envelope_ok = false;
            first_violation.get_or_insert(i);
        }
        let dist_sq = row.z.dist_sq(z_star);
        if problem.mu * dist_sq > psi * (1.0 + 1e-9) + 1e-15 && distance_ok {
            distance_ok = false;
            first_violation.get_or_insert(i);
        }
        if psi > prev_psi + 1e-6 * psi0.abs() && monotone_ok {
            monotone_ok = false;
        }
        prev_psi = psi;
    }
    Ok(GronwallReport {
        rows: rows.len(),
        psi0,
        envelope_ok,
        distance_ok,
        monotone_ok,
        first_violation,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::Matrix;
    use crate::problems;
    use approx::assert_abs_diff_eq;

    fn scalar_quadratic() -> DecomposedProblem {
        problems::make_pure_convex(Matrix::identity(1), Vector::zeros(1)).unwrap()
    }

    #[test]
    fn vector_field_reference_value() {
        let p = scalar_quadratic();
        let (dz, dv) = vector_field(
            &Vector::from_slice(&[1.0]),
            &Vector::from_slice(&[0.0]),
            &p,
        );
        assert_eq!(dz.0, vec![0.0]);
        assert_abs_diff_eq!(dv.0[0], -1.0);
    }

    #[test]
    fn matches_critically_damped_closed_form() {
        // mu = 1, phi = z^2/2, no splitting: z'' + 2z' + z = 0, so
        // z(t) = (z0 + (v0 + z0) t) e^{-t}.
        let p = scalar_quadratic();
        let (z0, v0) = (2.0, -0.5);
        let trace = integrate(
            &p,
            &Vector::from_slice(&[z0]),
            &Vector::from_slice(&[v0]),
            3.0,
            0.005,
        )
        .unwrap();
        for row in &trace.rows {
            let t = row.t;
            let exact = (z0 + (v0 + z0) * t) * (-t).exp();
            assert_abs_diff_eq!(row.z.0[0], exact, epsilon = 1e-9);
        }
    }

    #[test]
    fn rejects_steps_above_the_heuristic() {
        let p = problems::make_sin_coupling();
        let bound = heuristic_dt(&p);
        assert_abs_diff_eq!(bound, 0.01 / 4.0, epsilon = 1e-15);
        let err = integrate(
            &p,
            &Vector::zeros(2),
            &Vector::zeros(2),
            1.0,
            bound * 1.5,
        )
        .unwrap_err();
        assert!(matches!(err, OdeError::StepTooLarge { .. }));
        assert!(integrate(&p, &Vector::zeros(2), &Vector::zeros(2), 0.1, bound).is_ok());
    }

    #[test]
    fn envelope_holds_on_sin_coupling() {
        let p = problems::make_sin_coupling();
        let trace = integrate(
            &p,
            &Vector::from_slice(&[3.0, -2.0]),
            &Vector::zeros(2),
            10.0,
            heuristic_dt(&p),
        )
        .unwrap();
        let report = gronwall_check(&trace, &p).unwrap();
        assert!(report.pass(), "{report:?}");
        assert!(report.monotone_ok);
        assert!(report.first_violation.is_none());
        // The certificate actually decays by a large factor over t = 10.
        let last = trace.final_row().psi.unwrap();
        assert!(last < report.psi0 * 1e-3);
    }

    #[test]
    fn corrupted_certificate_is_flagged() {
        let p = problems::make_sin_coupling();
        let mut trace = integrate(
            &p,
            &Vector::from_slice(&[1.0, 1.0]),
            &Vector::zeros(2),
            2.0,
            heuristic_dt(&p),
        )
        .unwrap();
        let mid = trace.rows.len() / 2;
        trace.rows[mid].psi = trace.rows[mid].psi.map(|v| v * 10.0 + 1.0);
        let report = gronwall_check(&trace, &p).unwrap();
        assert!(!report.pass());
        assert_eq!(report.first_violation, Some(mid));
    }

    #[test]
    fn near_equilibrium_stays_near_equilibrium() {
        let p = problems::make_sin_coupling();
        let z0 = Vector::from_slice(&[1e-8, -1e-8]);
        let trace = integrate(&p, &z0, &Vector::zeros(2), 10.0, heuristic_dt(&p)).unwrap();
        for row in &trace.rows {
            assert!(
                row.z.norm() <= 1e-6,
                "left the equilibrium neighborhood at t = {}",
                row.t
            );
        }
    }

    #[test]
    fn fourth_order_convergence_against_closed_form() {
        let p = scalar_quadratic();
        let (z0, v0) = (2.0f64, -0.5f64);
        let t_end = 3.0f64;
        let exact = (z0 + (v0 + z0) * t_end) * (-t_end).exp();
        let mut errs = Vec::new();
        for dt in [0.01, 0.005] {
            let trace = integrate(
                &p,
                &Vector::from_slice(&[z0]),
                &Vector::from_slice(&[v0]),
                t_end,
                dt,
            )
            .unwrap();
            let row = trace.final_row();
            assert!((row.t - t_end).abs() < 1e-9);
            errs.push((row.z.0[0] - exact).abs());
        }
        let ratio = errs[0] / errs[1];
        assert!(
            (12.0..=20.0).contains(&ratio),
            "error ratio {ratio:.2} outside the fourth-order window \
             (coarse {:.3e}, fine {:.3e})",
            errs[0],
            errs[1]
        );
    }
}
