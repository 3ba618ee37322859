//! Deterministic CSV emission for iterate traces and integrated flows.
//!
//! Floats are written as `{:.16e}` (17 significant digits), enough to round
//! trip an f64, so identical runs produce byte-identical files. Undefined
//! cells are left empty. Header comments are '#'-prefixed.

use nod_core::ode_flow::{FlowTrace, GronwallReport};
use nod_core::solvers::SolverTrace;
use nod_core::DecomposedProblem;

pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

fn opt_f64(x: Option<f64>) -> String {
    x.map(fmt_f64).unwrap_or_default()
}

fn opt_bool(b: Option<bool>) -> String {
    match b {
        Some(true) => "true".into(),
        Some(false) => "false".into(),
        None => String::new(),
    }
}

pub fn trace_csv(trace: &SolverTrace, version: &str) -> String {
    let meta = &trace.meta;
    let mut out = String::new();
    out.push_str(&format!("# instance: {}\n", meta.instance));
    out.push_str(&format!("# method: {}\n", meta.method));
    out.push_str(&format!("# eta: {}\n", fmt_f64(meta.eta)));
    out.push_str(&format!("# mu: {}\n", fmt_f64(meta.mu)));
    out.push_str(&format!("# seed: {}\n", meta.seed));
    out.push_str(&format!("# version: {version}\n"));
    out.push_str("k,residual,dist_sq,psi,psi_ratio,contraction_ok\n");
    for r in &trace.records {
        out.push_str(&format!(
            "{},{},{},{},{},{}\n",
            r.k,
            fmt_f64(r.residual),
            opt_f64(r.dist_sq),
            opt_f64(r.psi),
            opt_f64(r.psi_ratio),
            opt_bool(r.contraction_ok),
        ));
    }
    out.push_str(&format!("# stop: {}\n", meta.stop.as_str()));
    out.push_str(&format!("# grad_calls: {}\n", meta.grad_calls));
    out.push_str(&format!("# s_calls: {}\n", meta.s_calls));
    out
}

pub fn flow_csv(
    trace: &FlowTrace,
    problem: &DecomposedProblem,
    report: &GronwallReport,
    seed: u64,
    version: &str,
) -> String {
    let mut out = String::new();
    out.push_str(&format!("# instance: {}\n", problem.id));
    out.push_str(&format!("# dt: {}\n", fmt_f64(trace.dt)));
    out.push_str(&format!("# mu: {}\n", fmt_f64(problem.mu)));
    out.push_str(&format!("# seed: {seed}\n"));
    out.push_str(&format!("# version: {version}\n"));
    out.push_str("t,psi,dist_sq,envelope\n");
    let root_mu = problem.mu.sqrt();
    for row in &trace.rows {
        let envelope = report.psi0 * (-root_mu * row.t).exp() * (1.0 + 1e-4) + 1e-12;
        let dist = problem.z_star.as_ref().map(|zs| row.z.dist_sq(zs));
        out.push_str(&format!(
            "{},{},{},{}\n",
            fmt_f64(row.t),
            opt_f64(row.psi),
            opt_f64(dist),
            fmt_f64(envelope),
        ));
    }
    out.push_str(&format!(
        "# envelope: {}\n",
        if report.envelope_ok { "ok" } else { "violated" }
    ));
    out.push_str(&format!(
        "# distance: {}\n",
        if report.distance_ok { "ok" } else { "violated" }
    ));
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use nod_core::plan::default_eta;
    use nod_core::problems;
    use nod_core::solvers::{nod_run, StoppingRule};
    use nod_core::Vector;

    #[test]
    fn floats_carry_seventeen_significant_digits() {
        assert_eq!(fmt_f64(1.0), "1.0000000000000000e0");
        assert_eq!(fmt_f64(-0.5), "-5.0000000000000000e-1");
        let x = 0.1 + 0.2;
        assert_eq!(fmt_f64(x).parse::<f64>().unwrap(), x, "round trip is exact");
    }

    #[test]
    fn trace_csv_has_the_pinned_column_header_and_footer() {
        let p = problems::make_sin_coupling();
        let eta = default_eta(p.mu, p.l_phi, p.l_s).unwrap();
        let z0 = Vector::from_slice(&[3.0, -2.0]);
        let trace = nod_run(&p, eta, &z0, &StoppingRule::budget(5)).unwrap();
        let csv = trace_csv(&trace, "0.0.0");
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], "# instance: sin_coupling");
        let header = lines.iter().position(|l| !l.starts_with('#')).unwrap();
        assert_eq!(lines[header], "k,residual,dist_sq,psi,psi_ratio,contraction_ok");
        // 6 rows (k = 0..=5), then the stop/call-count footer.
        assert_eq!(lines.len(), header + 1 + 6 + 3);
        assert_eq!(lines[lines.len() - 3], "# stop: budget");
        // Early rows have no certificate yet: empty psi cells, k first.
        assert!(lines[header + 1].starts_with("0,"));
        let cells: Vec<&str> = lines[header + 1].split(',').collect();
        assert_eq!(cells.len(), 6);
        assert_eq!(cells[3], "", "psi is undefined before k=2");
    }
}
