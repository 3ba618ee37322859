//! Minimal dense linear algebra for small problems.
//!
//! Everything here targets dimensions in the tens to low hundreds, so the
//! implementations favor determinism and simplicity over asymptotics: dense
//! row-major storage, LU with partial pivoting for certificate solves, power
//! iteration with a fixed-seed start vector for spectral quantities, and
//! cyclic Jacobi for symmetric eigenvalues.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum LinalgError {
    #[error("matrix is singular (pivot {pivot:.3e} at column {col})")]
    Singular { col: usize, pivot: f64 },
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
}

/// Dense real vector.
#[derive(Debug, Clone, PartialEq)]
pub struct Vector(pub Vec<f64>);

impl Vector {
    pub fn zeros(dim: usize) -> Self {
        Vector(vec![0.0; dim])
    }

    pub fn from_slice(v: &[f64]) -> Self {
        Vector(v.to_vec())
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn dot(&self, other: &Vector) -> f64 {
        debug_assert_eq!(self.dim(), other.dim());
        self.0.iter().zip(&other.0).map(|(a, b)| a * b).sum()
    }

    pub fn norm_sq(&self) -> f64 {
        self.dot(self)
    }

    pub fn norm(&self) -> f64 {
        self.norm_sq().sqrt()
    }

    pub fn scale(&self, c: f64) -> Vector {
        Vector(self.0.iter().map(|a| c * a).collect())
    }

    pub fn add(&self, other: &Vector) -> Vector {
        debug_assert_eq!(self.dim(), other.dim());
        Vector(self.0.iter().zip(&other.0).map(|(a, b)| a + b).collect())
    }

    pub fn sub(&self, other: &Vector) -> Vector {
        debug_assert_eq!(self.dim(), other.dim());
        Vector(self.0.iter().zip(&other.0).map(|(a, b)| a - b).collect())
    }

    /// `self + c * other`, the workhorse of every iteration scheme here.
    pub fn add_scaled(&self, c: f64, other: &Vector) -> Vector {
        debug_assert_eq!(self.dim(), other.dim());
        Vector(
            self.0
                .iter()
                .zip(&other.0)
                .map(|(a, b)| a + c * b)
                .collect(),
        )
    }

    pub fn dist_sq(&self, other: &Vector) -> f64 {
        self.sub(other).norm_sq()
    }

    pub fn linf_dist(&self, other: &Vector) -> f64 {
        debug_assert_eq!(self.dim(), other.dim());
        self.0
            .iter()
            .zip(&other.0)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|a| a.is_finite())
    }

    pub fn concat(&self, other: &Vector) -> Vector {
        let mut data = self.0.clone();
        data.extend_from_slice(&other.0);
        Vector(data)
    }

    pub fn split_at(&self, mid: usize) -> (Vector, Vector) {
        let (a, b) = self.0.split_at(mid);
        (Vector(a.to_vec()), Vector(b.to_vec()))
    }
}

/// `a + w * (a - b)`: extrapolation past `a` along the line from `b`.
pub fn extrapolate(a: &Vector, b: &Vector, w: f64) -> Vector {
    debug_assert_eq!(a.dim(), b.dim());
    Vector(
        a.0.iter()
            .zip(&b.0)
            .map(|(x, y)| x + w * (x - y))
            .collect(),
    )
}

/// Dense row-major matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Matrix {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Matrix::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = 1.0;
        }
        m
    }

    pub fn diag(entries: &[f64]) -> Self {
        let n = entries.len();
        let mut m = Matrix::zeros(n, n);
        for (i, &e) in entries.iter().enumerate() {
            m[(i, i)] = e;
        }
        m
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self, LinalgError> {
        let r = rows.len();
        if r == 0 {
            return Err(LinalgError::DimensionMismatch("empty matrix".into()));
        }
        let c = rows[0].len();
        if rows.iter().any(|row| row.len() != c) || c == 0 {
            return Err(LinalgError::DimensionMismatch(
                "ragged or empty rows".into(),
            ));
        }
        let mut data = Vec::with_capacity(r * c);
        for row in rows {
            data.extend_from_slice(row);
        }
        Ok(Matrix { rows: r, cols: c, data })
    }

    pub fn nrows(&self) -> usize {
        self.rows
    }

    pub fn ncols(&self) -> usize {
        self.cols
    }

    pub fn matvec(&self, v: &Vector) -> Vector {
        debug_assert_eq!(self.cols, v.dim());
        let out = self
            .data
            .chunks_exact(self.cols)
            .map(|row| row.iter().zip(&v.0).map(|(a, b)| a * b).sum())
            .collect();
        Vector(out)
    }

    /// `self^T v` without materializing the transpose.
    pub fn matvec_t(&self, v: &Vector) -> Vector {
        debug_assert_eq!(self.rows, v.dim());
        let mut out = vec![0.0; self.cols];
        for i in 0..self.rows {
            let vi = v.0[i];
            let row = &self.data[i * self.cols..(i + 1) * self.cols];
            for (o, a) in out.iter_mut().zip(row) {
                *o += a * vi;
            }
        }
        Vector(out)
    }

    pub fn transpose(&self) -> Matrix {
        let mut t = Matrix::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                t[(j, i)] = self[(i, j)];
            }
        }
        t
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, a| m.max(a.abs()))
    }

    pub fn is_symmetric(&self, tol: f64) -> bool {
        if !self.is_square() {
            return false;
        }
        let scale = self.max_abs().max(1.0);
        for i in 0..self.rows {
            for j in (i + 1)..self.cols {
                if (self[(i, j)] - self[(j, i)]).abs() > tol * scale {
                    return false;
                }
            }
        }
        true
    }

    pub fn is_skew(&self, tol: f64) -> bool {
        if !self.is_square() {
            return false;
        }
        let scale = self.max_abs().max(1.0);
        for i in 0..self.rows {
            for j in i..self.cols {
                if (self[(i, j)] + self[(j, i)]).abs() > tol * scale {
                    return false;
                }
            }
        }
        true
    }

    /// Gram matrix `self^T self` (symmetric positive semidefinite).
    pub fn gram(&self) -> Matrix {
        let mut g = Matrix::zeros(self.cols, self.cols);
        for i in 0..self.cols {
            for j in i..self.cols {
                let mut s = 0.0;
                for k in 0..self.rows {
                    s += self[(k, i)] * self[(k, j)];
                }
                g[(i, j)] = s;
                g[(j, i)] = s;
            }
        }
        g
    }
}

impl std::ops::Index<(usize, usize)> for Matrix {
    type Output = f64;
    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        &self.data[i * self.cols + j]
    }
}

impl std::ops::IndexMut<(usize, usize)> for Matrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        &mut self.data[i * self.cols + j]
    }
}

/// Seed for every power-iteration start vector, fixed so that derived
/// constants are identical across runs and platforms.
const POWER_SEED: u64 = 0x9e3779b97f4a7c15;

const POWER_TOL: f64 = 1e-12;
const POWER_MAX_ITERS: usize = 500_000;

/// Dominant eigenvalue of a symmetric positive semidefinite matrix by power
/// iteration with Rayleigh-quotient estimates, to 1e-12 relative tolerance.
pub fn dominant_eig_psd(a: &Matrix) -> f64 {
    assert!(a.is_square(), "dominant_eig_psd needs a square matrix");
    let n = a.nrows();
    if n == 0 {
        return 0.0;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(POWER_SEED);
    let mut v = Vector((0..n).map(|_| rng.gen_range(-1.0..1.0)).collect());
    let nv = v.norm();
    if nv == 0.0 {
        return 0.0;
    }
    v = v.scale(1.0 / nv);
    let mut lambda = 0.0;
    let mut small_changes = 0;
    for _ in 0..POWER_MAX_ITERS {
        let w = a.matvec(&v);
        let next = v.dot(&w);
        let nw = w.norm();
        if nw <= f64::MIN_POSITIVE * n as f64 {
            return 0.0;
        }
        v = w.scale(1.0 / nw);
        if (next - lambda).abs() <= POWER_TOL * next.abs().max(f64::MIN_POSITIVE) {
            small_changes += 1;
            if small_changes >= 2 {
                return next;
            }
        } else {
            small_changes = 0;
        }
        lambda = next;
    }
    lambda
}

/// Spectral norm of an arbitrary matrix via its Gram matrix.
pub fn spectral_norm(m: &Matrix) -> f64 {
    dominant_eig_psd(&m.gram()).max(0.0).sqrt()
}

/// Extreme eigenvalues (min, max) of a symmetric matrix.
pub fn spd_eig_range(a: &Matrix) -> (f64, f64) {
    let eigs = sym_eigenvalues(a);
    (eigs[0], *eigs.last().expect("nonempty matrix"))
}

/// Solve `a x = b` by LU with partial pivoting. Fails on singular systems.
pub fn solve(a: &Matrix, b: &Vector) -> Result<Vector, LinalgError> {
    if !a.is_square() || a.nrows() != b.dim() {
        return Err(LinalgError::DimensionMismatch(format!(
            "solve: {}x{} matrix with length-{} rhs",
            a.nrows(),
            a.ncols(),
            b.dim()
        )));
    }
    let n = a.nrows();
    let mut lu = a.clone();
    let mut x = b.0.clone();
    let scale = lu.max_abs().max(f64::MIN_POSITIVE);
    for col in 0..n {
        let mut pivot_row = col;
        let mut pivot = lu[(col, col)].abs();
        for r in (col + 1)..n {
            if lu[(r, col)].abs() > pivot {
                pivot = lu[(r, col)].abs();
                pivot_row = r;
            }
        }
        if pivot <= 1e-14 * scale {
            return Err(LinalgError::Singular { col, pivot });
        }
        if pivot_row != col {
            for j in 0..n {
                let tmp = lu[(col, j)];
                lu[(col, j)] = lu[(pivot_row, j)];
                lu[(pivot_row, j)] = tmp;
            }
            x.swap(col, pivot_row);
        }
        for r in (col + 1)..n {
            let f = lu[(r, col)] / lu[(col, col)];
            lu[(r, col)] = f;
            for j in (col + 1)..n {
                lu[(r, j)] -= f * lu[(col, j)];
            }
            x[r] -= f * x[col];
        }
    }
    for col in (0..n).rev() {
        x[col] /= lu[(col, col)];
        for r in 0..col {
            x[r] -= lu[(r, col)] * x[col];
        }
    }
    Ok(Vector(x))
}

/// Eigenvalues of a symmetric matrix by cyclic Jacobi rotations, ascending.
pub fn sym_eigenvalues(a: &Matrix) -> Vec<f64> {
    assert!(
        a.is_symmetric(1e-9),
        "sym_eigenvalues needs a symmetric matrix"
    );
    let n = a.nrows();
    let mut m = a.clone();
    let scale = m.max_abs().max(f64::MIN_POSITIVE);
    for _sweep in 0..200 {
        let mut off = 0.0f64;
        for i in 0..n {
            for j in (i + 1)..n {
                off = off.max(m[(i, j)].abs());
            }
        }
        if off <= 1e-15 * scale {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = m[(p, q)];
                if apq.abs() <= 1e-300 {
                    continue;
                }
                let theta = (m[(q, q)] - m[(p, p)]) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let mkp = m[(k, p)];
                    let mkq = m[(k, q)];
                    m[(k, p)] = c * mkp - s * mkq;
                    m[(k, q)] = s * mkp + c * mkq;
                }
                for k in 0..n {
                    let mpk = m[(p, k)];
                    let mqk = m[(q, k)];
                    m[(p, k)] = c * mpk - s * mqk;
                    m[(q, k)] = s * mpk + c * mqk;
                }
            }
        }
    }
    let mut eigs: Vec<f64> = (0..n).map(|i| m[(i, i)]).collect();
    eigs.sort_by(|a, b| a.partial_cmp(b).unwrap());
    eigs
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn vector_basics() {
        let a = Vector::from_slice(&[1.0, 2.0, 3.0]);
        let b = Vector::from_slice(&[4.0, -1.0, 0.5]);
        assert_abs_diff_eq!(a.dot(&b), 3.5);
        assert_abs_diff_eq!(a.norm_sq(), 14.0);
        assert_abs_diff_eq!(a.add_scaled(2.0, &b).0[0], 9.0);
        assert_abs_diff_eq!(a.dist_sq(&a), 0.0);
        let (x, y) = a.concat(&b).split_at(3);
        assert_eq!(x, a);
        assert_eq!(y, b);
    }

    #[test]
    fn extrapolate_matches_definition() {
        let a = Vector::from_slice(&[2.0, 0.0]);
        let b = Vector::from_slice(&[1.0, 1.0]);
        let e = extrapolate(&a, &b, 0.5);
        assert_abs_diff_eq!(e.0[0], 2.5);
        assert_abs_diff_eq!(e.0[1], -0.5);
    }

    #[test]
    fn matvec_and_transpose() {
        let m = Matrix::from_rows(&[vec![1.0, 2.0], vec![3.0, 4.0], vec![5.0, 6.0]]).unwrap();
        let v = Vector::from_slice(&[1.0, -1.0]);
        assert_eq!(m.matvec(&v).0, vec![-1.0, -1.0, -1.0]);
        let w = Vector::from_slice(&[1.0, 0.0, -1.0]);
        assert_eq!(m.matvec_t(&w).0, m.transpose().matvec(&w).0);
    }

    #[test]
    fn symmetry_and_skew_predicates() {
        let s = Matrix::from_rows(&[vec![2.0, 1.0], vec![1.0, 3.0]]).unwrap();
        assert!(s.is_symmetric(1e-12));
        assert!(!s.is_skew(1e-12));
        let k = Matrix::from_rows(&[vec![0.0, 5.0], vec![-5.0, 0.0]]).unwrap();
        assert!(k.is_skew(1e-12));
        assert!(!k.is_symmetric(1e-12));
    }

    #[test]
    fn lu_solve_roundtrip() {
        let a = Matrix::from_rows(&[
            vec![4.0, 1.0, 0.0],
            vec![1.0, 3.0, -1.0],
            vec![0.0, -1.0, 2.5],
        ])
        .unwrap();
        let x_true = Vector::from_slice(&[1.0, -2.0, 0.5]);
        let b = a.matvec(&x_true);
        let x = solve(&a, &b).unwrap();
        assert!(x.linf_dist(&x_true) < 1e-12);
    }

    #[test]
    fn lu_solve_rejects_singular() {
        let a = Matrix::from_rows(&[vec![1.0, 2.0], vec![2.0, 4.0]]).unwrap();
        let b = Vector::from_slice(&[1.0, 2.0]);
        assert!(matches!(solve(&a, &b), Err(LinalgError::Singular { .. })));
    }

    #[test]
    fn power_iteration_on_diagonal() {
        let a = Matrix::diag(&[1.0, 10.0, 4.0]);
        assert_abs_diff_eq!(dominant_eig_psd(&a), 10.0, epsilon = 1e-10);
        let (lo, hi) = spd_eig_range(&a);
        assert_abs_diff_eq!(lo, 1.0, epsilon = 1e-9);
        assert_abs_diff_eq!(hi, 10.0, epsilon = 1e-9);
    }

    #[test]
    fn spectral_norm_of_rotation_scaling() {
        let k = Matrix::from_rows(&[vec![0.0, 4.0], vec![-4.0, 0.0]]).unwrap();
        assert_abs_diff_eq!(spectral_norm(&k), 4.0, epsilon = 1e-10);
    }

    #[test]
    fn spectral_norm_identity_multiple() {
        let m = Matrix::diag(&[3.0, 3.0, 3.0]);
        assert_abs_diff_eq!(spectral_norm(&m), 3.0, epsilon = 1e-11);
    }

    #[test]
    fn jacobi_eigenvalues_small() {
        let a = Matrix::from_rows(&[vec![2.0, 1.0], vec![1.0, 2.0]]).unwrap();
        let eigs = sym_eigenvalues(&a);
        assert_abs_diff_eq!(eigs[0], 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(eigs[1], 3.0, epsilon = 1e-12);
    }

    #[test]
    fn jacobi_matches_power_iteration_range() {
        let a = Matrix::from_rows(&[
            vec![5.0, 1.0, 0.5],
            vec![1.0, 4.0, -0.25],
            vec![0.5, -0.25, 6.0],
        ])
        .unwrap();
        let eigs = sym_eigenvalues(&a);
        let (lo, hi) = spd_eig_range(&a);
        assert_abs_diff_eq!(eigs[0], lo, epsilon = 1e-8);
        assert_abs_diff_eq!(eigs[2], hi, epsilon = 1e-8);
    }
}
