//! The `verify` subcommand: sampled probes of an instance's operators
//! against its claimed constants, plus grid scans of the Jacobian structure
//! for the sin-coupling instance.
//!
//! Sampled probes are necessary conditions only, so every sampled row is
//! labeled "sampled evidence" in the report; a pass is not a proof.

use std::f64::consts::{FRAC_PI_2, PI};

use serde::Serialize;

use nod_core::probes::{
    grad_consistency, lipschitz_probe, monotonicity_probe, sin_jacobian_norm,
    strong_monotonicity_probe, symm_jacobian_min_eig, GridSpec, SampleBox, FD_STEP,
};
use nod_core::Vector;

use crate::config::{self, ProblemSpec, VerifyConfig};
use crate::{Failure, VerifyArgs};

#[derive(Debug, Clone, Serialize)]
struct ProbeRow {
    property: &'static str,
    constant_claimed: f64,
    constant_observed: f64,
    pass: bool,
    evidence: &'static str,
}

impl ProbeRow {
    /// Observed value must not fall below claimed − slack.
    fn floor(property: &'static str, claimed: f64, observed: f64, slack: f64) -> ProbeRow {
        ProbeRow {
            property,
            constant_claimed: claimed,
            constant_observed: observed,
            pass: observed >= claimed - slack,
            evidence: "sampled evidence",
        }
    }

    /// Observed value must not exceed claimed + slack.
    fn ceiling(property: &'static str, claimed: f64, observed: f64, slack: f64) -> ProbeRow {
        ProbeRow {
            property,
            constant_claimed: claimed,
            constant_observed: observed,
            pass: observed <= claimed + slack,
            evidence: "sampled evidence",
        }
    }
}

#[derive(Serialize)]
struct VerifyReport {
    config: VerifyConfig,
    instance: String,
    rows: Vec<ProbeRow>,
    pass: bool,
}

pub fn run(args: &VerifyArgs) -> Result<(), Failure> {
    let mut cfg: VerifyConfig = config::load_json(&args.config)?;
    if let Some(seed) = args.seed {
        cfg.seed = seed;
    }
    if let Some(out) = &args.out {
        cfg.report_path = Some(out.clone());
    }
    cfg.validate()?;

    let built = config::build_problem(&cfg.problem)?;
    let p = built.decomposed();

    let claimed = cfg.claimed.clone().unwrap_or_default();
    let mu = claimed.mu.unwrap_or(p.mu);
    let l_phi = claimed.l_phi.unwrap_or(p.l_phi);
    let l_s = claimed.l_s.unwrap_or(p.l_s);

    let sample_box = SampleBox::symmetric(cfg.box_radius, p.dim);
    let n = cfg.samples;
    let seed = cfg.seed;

    let s_op = |z: &Vector| p.s(z);
    let grad_op = |z: &Vector| p.grad_phi(z);
    let field_op = |z: &Vector| p.field(z);

    let mut rows = vec![
        ProbeRow::floor("s_monotone", 0.0, monotonicity_probe(&s_op, sample_box, n, seed), 1e-10),
        ProbeRow::ceiling("s_lipschitz", l_s, lipschitz_probe(&s_op, sample_box, n, seed), 1e-9),
        ProbeRow::floor(
            "grad_strong_monotone",
            mu,
            strong_monotonicity_probe(&grad_op, sample_box, n, seed),
            1e-6,
        ),
        ProbeRow::ceiling(
            "grad_lipschitz",
            l_phi,
            lipschitz_probe(&grad_op, sample_box, n, seed),
            1e-9,
        ),
        ProbeRow::floor(
            "field_strong_monotone",
            mu,
            strong_monotonicity_probe(&field_op, sample_box, n, seed),
            1e-6,
        ),
        ProbeRow::ceiling(
            "field_lipschitz",
            l_phi + l_s,
            lipschitz_probe(&field_op, sample_box, n, seed),
            1e-9,
        ),
    ];
    if let Some(err) = grad_consistency(p, sample_box, n, seed) {
        rows.push(ProbeRow::ceiling("grad_consistency", 0.0, err, 1e-6));
    }

    if matches!(cfg.problem, ProblemSpec::SinCoupling) {
        // The coupled field is jointly 3-Lipschitz, strictly better than
        // l_phi + l_s; the closed-form Jacobian norm certifies it.
        rows.push(ProbeRow::ceiling(
            "sin_field_lipschitz_joint",
            3.0,
            lipschitz_probe(&field_op, sample_box, n, seed),
            1e-9,
        ));

        // 201x201 lattice over [-2pi, 2pi]^2, shifted off the kink lines of
        // |sin| where the Jacobian does not exist.
        let grid = GridSpec { lo: -2.0 * PI, hi: 2.0 * PI, points_per_axis: 201, offset: 1e-3 };
        let (min_eig, _) = symm_jacobian_min_eig(&s_op, 2, &grid, FD_STEP);
        rows.push(ProbeRow::floor("sin_symm_jacobian_min_eig", 0.0, min_eig, 1e-5));

        let mut sup = f64::NEG_INFINITY;
        let points = 401;
        for i in 0..points {
            for j in 0..points {
                let x = -PI + 2.0 * PI * i as f64 / (points - 1) as f64;
                let y = -PI + 2.0 * PI * j as f64 / (points - 1) as f64;
                sup = sup.max(sin_jacobian_norm(x, y));
            }
        }
        rows.push(ProbeRow::ceiling("sin_jacobian_norm_sup", 3.0, sup, 1e-12));

        let peak = sin_jacobian_norm(FRAC_PI_2, FRAC_PI_2);
        rows.push(ProbeRow {
            property: "sin_jacobian_norm_peak",
            constant_claimed: 3.0,
            constant_observed: peak,
            pass: peak == 3.0,
            evidence: "closed form",
        });
    }

    let failed = rows.iter().filter(|r| !r.pass).count();
    let report = VerifyReport {
        instance: p.id.clone(),
        config: cfg.clone(),
        rows,
        pass: failed == 0,
    };
    let json =
        serde_json::to_string_pretty(&report).expect("report serialization cannot fail") + "\n";
    config::write_text(cfg.report_path.as_deref(), &json)?;

    if failed > 0 {
        return Err(Failure::Probe(format!(
            "{failed} of {} probes contradicted the claimed constants",
            report.rows.len()
        )));
    }
    Ok(())
}
