//! Sampled-evidence battery over every instance in the reference catalog:
//! each instance's claimed constants must survive their probes.

use nod_core::linalg::Vector;
use nod_core::probes::{
    grad_consistency, lipschitz_probe, monotonicity_probe, strong_monotonicity_probe, SampleBox,
};
use nod_core::problems::reference_catalog;

const SAMPLES: usize = 10_000;
const SEED: u64 = 0xA11CE;

#[test]
fn claimed_constants_survive_sampling() {
    for problem in reference_catalog() {
        let sample_box = SampleBox::symmetric(10.0, problem.dim);
        let s_op = |z: &Vector| problem.s(z);
        let g_op = |z: &Vector| problem.grad_phi(z);

        let s_pairing = monotonicity_probe(&s_op, sample_box, SAMPLES, SEED);
        assert!(
            s_pairing >= -1e-10,
            "{}: splitting pairing {s_pairing:e}",
            problem.id
        );

        let s_lip = lipschitz_probe(&s_op, sample_box, SAMPLES, SEED);
        assert!(
            s_lip <= problem.l_s + 1e-9,
            "{}: sampled splitting Lipschitz {s_lip} vs claimed {}",
            problem.id,
            problem.l_s
        );

        let modulus = strong_monotonicity_probe(&g_op, sample_box, SAMPLES, SEED);
        assert!(
            modulus >= problem.mu - 1e-6,
            "{}: sampled gradient modulus {modulus} vs claimed {}",
            problem.id,
            problem.mu
        );

        let g_lip = lipschitz_probe(&g_op, sample_box, SAMPLES, SEED);
        assert!(
            g_lip <= problem.l_phi + 1e-9,
            "{}: sampled gradient Lipschitz {g_lip} vs claimed {}",
            problem.id,
            problem.l_phi
        );
    }
}

#[test]
fn gradient_oracles_are_consistent_with_potentials() {
    for problem in reference_catalog() {
        let sample_box = SampleBox::symmetric(5.0, problem.dim);
        let err = grad_consistency(&problem, sample_box, 100, SEED)
            .unwrap_or_else(|| panic!("{} ships a potential oracle", problem.id));
        assert!(
            err <= 1e-6,
            "{}: central-difference gap {err:e}",
            problem.id
        );
    }
}
