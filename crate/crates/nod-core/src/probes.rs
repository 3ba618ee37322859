//! Sampled numerical evidence for operator properties.
//!
//! Everything here is a necessary-condition check, not a certificate: random
//! pairs can only witness a violation, never prove a bound. Reports built on
//! these probes should label the numbers "sampled evidence". Sampling is
//! seeded and sequential, so every probe is reproducible bit for bit.

use crate::linalg::{Matrix, Vector};
use crate::problems::DecomposedProblem;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Axis-aligned sampling region `[lo, hi]^dim`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SampleBox {
    pub lo: f64,
    pub hi: f64,
    pub dim: usize,
}

impl SampleBox {
    pub fn symmetric(radius: f64, dim: usize) -> Self {
        assert!(radius > 0.0 && radius.is_finite());
        SampleBox { lo: -radius, hi: radius, dim }
    }

    fn sample(&self, rng: &mut ChaCha8Rng) -> Vector {
        Vector((0..self.dim).map(|_| rng.gen_range(self.lo..self.hi)).collect())
    }
}

/// Minimum over `n` seeded random pairs of
/// `<op(z) - op(z'), z - z'> / |z - z'|^2`.
///
/// Monotone operators keep this at or above zero up to rounding; a value
/// clearly below zero is a counterexample to monotonicity.
pub fn monotonicity_probe(
    op: &dyn Fn(&Vector) -> Vector,
    sample_box: SampleBox,
    n: usize,
    seed: u64,
) -> f64 {
    strong_monotonicity_probe(op, sample_box, n, seed)
}

/// Infimum pairing ratio over sampled pairs, the sampled estimate of the
/// strong-monotonicity modulus. Identical computation to
/// [`monotonicity_probe`]; the two names exist because callers compare the
/// result against different thresholds (zero versus a claimed modulus).
pub fn strong_monotonicity_probe(
    op: &dyn Fn(&Vector) -> Vector,
    sample_box: SampleBox,
    n: usize,
    seed: u64,
) -> f64 {
    assert!(n >= 2, "need at least two sampled pairs");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut inf = f64::INFINITY;
    for _ in 0..n {
        let a = sample_box.sample(&mut rng);
        let b = sample_box.sample(&mut rng);
        let dz = a.sub(&b);
        let denom = dz.norm_sq();
        if denom < 1e-300 {
            continue;
        }
        let dw = op(&a).sub(&op(&b));
        let ratio = dw.dot(&dz) / denom;
        if ratio < inf {
            inf = ratio;
        }
    }
    inf
}

/// Supremum over sampled pairs of `|op(z) - op(z')| / |z - z'|`, the sampled
/// estimate of the Lipschitz constant. Must stay at or below a correctly
/// claimed constant (up to rounding slack).
pub fn lipschitz_probe(
    op: &dyn Fn(&Vector) -> Vector,
    sample_box: SampleBox,
    n: usize,
    seed: u64,
) -> f64 {
    assert!(n >= 2, "need at least two sampled pairs");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut sup = 0.0f64;
    for _ in 0..n {
        let a = sample_box.sample(&mut rng);
        let b = sample_box.sample(&mut rng);
        let dz = a.sub(&b);
        let denom = dz.norm();
        if denom < 1e-150 {
            continue;
        }
        let ratio = op(&a).sub(&op(&b)).norm() / denom;
        if ratio > sup {
            sup = ratio;
        }
    }
    sup
}

/// Step used by all finite differences in this module.
pub const FD_STEP: f64 = 1e-5;

/// Cross-checks the potential oracle against the gradient oracle: maximum
/// over `n` sampled points of the sup-norm gap between `grad_phi` and the
/// central difference of `phi` with step [`FD_STEP`]. Returns `None` when the
/// instance carries no potential oracle.
pub fn grad_consistency(
    problem: &DecomposedProblem,
    sample_box: SampleBox,
    n: usize,
    seed: u64,
) -> Option<f64> {
    problem.phi(&Vector::zeros(problem.dim))?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst = 0.0f64;
    for _ in 0..n {
        let z = sample_box.sample(&mut rng);
        let grad = problem.grad_phi(&z);
        for i in 0..problem.dim {
            let mut hi = z.clone();
            hi.0[i] += FD_STEP;
            let mut lo = z.clone();
            lo.0[i] -= FD_STEP;
            let fd = (problem.phi(&hi).unwrap() - problem.phi(&lo).unwrap()) / (2.0 * FD_STEP);
            let err = (fd - grad.0[i]).abs();
            if err > worst {
                worst = err;
            }
        }
    }
    Some(worst)
}

/// Central-difference Jacobian of `op` at `z`: column `j` is
/// `(op(z + h e_j) - op(z - h e_j)) / 2h`.
pub fn fd_jacobian(op: &dyn Fn(&Vector) -> Vector, z: &Vector, h: f64) -> Matrix {
    assert!(h > 0.0 && h.is_finite());
    let dim = z.dim();
    let mut jac = Matrix::zeros(dim, dim);
    for j in 0..dim {
        let mut hi = z.clone();
        hi.0[j] += h;
        let mut lo = z.clone();
        lo.0[j] -= h;
        let col = op(&hi).sub(&op(&lo)).scale(1.0 / (2.0 * h));
        for i in 0..dim {
            jac[(i, j)] = col.0[i];
        }
    }
    jac
}

/// `(J + J^T) / 2`.
pub fn symmetrize(jac: &Matrix) -> Matrix {
    assert!(jac.is_square());
    let n = jac.nrows();
    let mut out = Matrix::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            out[(i, j)] = 0.5 * (jac[(i, j)] + jac[(j, i)]);
        }
    }
    out
}

/// Regular lattice over `[lo, hi]^dim`, every coordinate shifted by `offset`.
/// The shift lets callers dodge measure-zero kink sets such as `x = n pi`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec {
    pub lo: f64,
    pub hi: f64,
    pub points_per_axis: usize,
    pub offset: f64,
}

impl GridSpec {
    fn coordinate(&self, index: usize) -> f64 {
        let t = if self.points_per_axis == 1 {
            0.5
        } else {
            index as f64 / (self.points_per_axis - 1) as f64
        };
        self.lo + t * (self.hi - self.lo) + self.offset
    }
}

/// Scans the lattice, builds the finite-difference Jacobian of `op` at every
/// point, symmetrizes it, and returns the smallest eigenvalue seen together
/// with the point where it occurred. Points are visited in row-major index
/// order, so the reduction is deterministic.
pub fn symm_jacobian_min_eig(
    op: &dyn Fn(&Vector) -> Vector,
    dim: usize,
    grid: &GridSpec,
    fd_step: f64,
) -> (f64, Vector) {
    assert!(
        (1e-7..=1e-4).contains(&fd_step),
        "fd_step {fd_step:e} outside the supported range [1e-7, 1e-4]"
    );
    assert!(dim >= 1 && grid.points_per_axis >= 1);
    let mut index = vec![0usize; dim];
    let mut min_eig = f64::INFINITY;
    let mut argmin = Vector::zeros(dim);
    loop {
        let point = Vector(index.iter().map(|&i| grid.coordinate(i)).collect());
        let symm = symmetrize(&fd_jacobian(op, &point, fd_step));
        let eigs = crate::linalg::sym_eigenvalues(&symm);
        if eigs[0] < min_eig {
            min_eig = eigs[0];
            argmin = point;
        }
        // Row-major odometer over the lattice indices.
        let mut axis = dim;
        loop {
            if axis == 0 {
                return (min_eig, argmin);
            }
            axis -= 1;
            index[axis] += 1;
            if index[axis] < grid.points_per_axis {
                break;
            }
            index[axis] = 0;
        }
    }
}

/// Closed-form operator norm of the sin-coupling field Jacobian:
/// `sqrt(4 + cos^2 x cos^2 y) + |sin x sin y|`.
pub fn sin_jacobian_norm(x: f64, y: f64) -> f64 {
    let b = x.cos() * y.cos();
    (4.0 + b * b).sqrt() + (x.sin() * y.sin()).abs()
}
