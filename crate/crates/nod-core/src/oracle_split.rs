//! Recover the separable and coupling parts of a bilinearly coupled saddle
//! field from a black-box gradient oracle.
//!
//! For `L(x, y) = g(x) - h(y) + x^T M y` the saddle field is
//! `(grad_x L, -grad_y L) = (grad g(x) + M y, grad h(y) - M^T x)`. Because
//! the coupling is linear in each argument, doubling one argument isolates
//! it: three oracle calls, at `(x, y)`, `(x, 2y)` and `(2x, y)`, determine
//! all four parts exactly.

use crate::linalg::Vector;

/// The four recovered components of the saddle field at `(x, y)`.
#[derive(Debug, Clone, PartialEq)]
pub struct SplitParts {
    pub grad_g: Vector,
    pub grad_h: Vector,
    pub m_y: Vector,
    pub mt_x: Vector,
}

/// Split a saddle-field oracle into its separable gradients and coupling
/// products. `oracle(x, y)` must return the pair
/// `(grad_x L(x, y), -grad_y L(x, y))`; it is called exactly three times.
pub fn split_bilinear_oracle<F>(mut oracle: F, x: &Vector, y: &Vector) -> SplitParts
where
    F: FnMut(&Vector, &Vector) -> (Vector, Vector),
{
    let (fx_base, fy_base) = oracle(x, y);
    let (fx_double_y, _) = oracle(x, &y.scale(2.0));
    let (_, fy_double_x) = oracle(&x.scale(2.0), y);

    // x block: f_x(x, y) = grad g(x) + M y and f_x(x, 2y) = grad g(x) + 2 M y.
    let grad_g = fx_base.scale(2.0).sub(&fx_double_y);
    let m_y = fx_double_y.sub(&fx_base);

    // y block: f_y(x, y) = grad h(y) - M^T x and f_y(2x, y) = grad h(y) - 2 M^T x.
    let grad_h = fy_base.scale(2.0).sub(&fy_double_x);
    let mt_x = fy_base.sub(&fy_double_x);

    SplitParts { grad_g, grad_h, m_y, mt_x }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn scalar_example() {
        // L(x, y) = x^2 - y^2 + x*y.
        let oracle = |x: &Vector, y: &Vector| {
            let gx = Vector::from_slice(&[2.0 * x.0[0] + y.0[0]]);
            let gy = Vector::from_slice(&[2.0 * y.0[0] - x.0[0]]);
            (gx, gy)
        };
        let parts = split_bilinear_oracle(
            oracle,
            &Vector::from_slice(&[1.0]),
            &Vector::from_slice(&[3.0]),
        );
        assert_abs_diff_eq!(parts.grad_g.0[0], 2.0);
        assert_abs_diff_eq!(parts.m_y.0[0], 3.0);
        assert_abs_diff_eq!(parts.grad_h.0[0], 6.0);
        assert_abs_diff_eq!(parts.mt_x.0[0], 1.0);
    }

    #[test]
    fn call_count_is_exactly_three() {
        let mut calls = 0usize;
        {
            let oracle = |x: &Vector, _y: &Vector| {
                calls += 1;
                (x.clone(), x.clone())
            };
            split_bilinear_oracle(
                oracle,
                &Vector::from_slice(&[1.0]),
                &Vector::from_slice(&[1.0]),
            );
        }
        assert_eq!(calls, 3);
    }
}
