//! Certificate behavior over long runs on the reference instances: one-step
//! contraction at rate 1 - sqrt(eta mu) and the nonnegative lower bound.

use nod_core::linalg::Vector;
use nod_core::lyapunov::{discrete_lyapunov, lyapunov_lower_bound};
use nod_core::plan::{default_eta, StepPlan};
use nod_core::problems::reference_catalog;
use nod_core::solvers::{nod_run, nod_step, SolverState, StoppingRule};

fn start_point(dim: usize) -> Vector {
    Vector(
        (0..dim)
            .map(|i| if i % 2 == 0 { 2.5 + 0.5 * i as f64 } else { -1.5 - 0.25 * i as f64 })
            .collect(),
    )
}

const ITERS: usize = 500;

#[test]
fn certificate_contracts_on_every_reference_instance() {
    for problem in reference_catalog() {
        let eta = default_eta(problem.mu, problem.l_phi, problem.l_s).unwrap();
        let s = (eta * problem.mu).sqrt();
        let trace = nod_run(
            &problem,
            eta,
            &start_point(problem.dim),
            &StoppingRule::budget(ITERS),
        )
        .unwrap();
        assert_eq!(trace.records.len(), ITERS + 1, "{}", problem.id);

        let mut checked = 0usize;
        for k in 2..ITERS {
            let psi_k = trace.records[k]
                .psi
                .unwrap_or_else(|| panic!("{}: psi missing at k={k}", problem.id));
            let psi_next = trace.records[k + 1].psi.unwrap();
            assert!(
                psi_next <= (1.0 - s) * psi_k + 1e-9 * (1.0 + psi_k),
                "{}: contraction fails at k={k}: {psi_k:e} -> {psi_next:e}",
                problem.id
            );
            assert_eq!(
                trace.records[k].contraction_ok,
                Some(true),
                "{}: contraction column disagrees at k={k}",
                problem.id
            );
            checked += 1;
        }
        assert_eq!(checked, ITERS - 2);
    }
}

#[test]
fn certificate_dominates_its_lower_bound() {
    for problem in reference_catalog() {
        let eta = default_eta(problem.mu, problem.l_phi, problem.l_s).unwrap();
        let plan = StepPlan::new(eta, problem.mu).unwrap();
        let mut state = SolverState::init(start_point(problem.dim));
        for _ in 0..ITERS {
            state = nod_step(&state, &plan, &problem);
            if state.k < 2 {
                continue;
            }
            let snap = discrete_lyapunov(&state, &plan, &problem).unwrap();
            let lower = lyapunov_lower_bound(&state, &plan, &problem).unwrap();
            assert!(
                lower >= -1e-9,
                "{}: lower bound went negative at k={}: {lower:e}",
                problem.id,
                state.k
            );
            assert!(
                snap.psi >= lower - 1e-9 * (1.0 + snap.psi.abs()),
                "{}: psi {:e} fell below its lower bound {lower:e} at k={}",
                problem.id,
                snap.psi,
                state.k
            );
        }
    }
}
