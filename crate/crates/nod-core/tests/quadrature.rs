//! Independent numerical quadrature for the closed-form antiderivatives of
//! |sin| used by the trigonometric coupling instance. The quadrature splits
//! the range at multiples of pi so each Simpson panel integrates a smooth
//! branch; the repeated integral uses the Cauchy kernel (w - t) f(t).

use nod_core::problems::{abs_sin_integral, h_prime, h_val};
use std::f64::consts::PI;

fn simpson_smooth<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, panels: usize) -> f64 {
    let h = (b - a) / panels as f64;
    let mut total = f(a) + f(b);
    for i in 1..panels {
        let weight = if i % 2 == 0 { 2.0 } else { 4.0 };
        total += weight * f(a + i as f64 * h);
    }
    total * h / 3.0
}

/// Integral of `f` over `[0, w]` for `w >= 0`, split at multiples of pi.
fn integrate_split<F: Fn(f64) -> f64>(f: &F, w: f64) -> f64 {
    assert!(w >= 0.0);
    let mut total = 0.0;
    let mut lo = 0.0;
    while lo < w {
        let hi = (lo + PI).min(w).min((lo / PI).floor() * PI + PI);
        total += simpson_smooth(f, lo, hi, 2000);
        lo = hi;
    }
    total
}

fn quad_abs_sin_integral(w: f64) -> f64 {
    let sign = if w < 0.0 { -1.0 } else { 1.0 };
    sign * integrate_split(&|t: f64| t.sin().abs(), w.abs())
}

fn quad_double_integral(w: f64) -> f64 {
    let w = w.abs();
    integrate_split(&|t: f64| (w - t) * t.sin().abs(), w)
}

const POINTS: [f64; 13] = [
    0.0,
    0.3,
    1.0,
    PI / 2.0,
    2.0,
    PI,
    4.4,
    2.0 * PI,
    7.7,
    10.7,
    -1.3,
    -4.4,
    -9.9,
];

#[test]
fn closed_form_integral_matches_quadrature() {
    for w in POINTS {
        let expected = quad_abs_sin_integral(w);
        let got = abs_sin_integral(w);
        assert!(
            (got - expected).abs() <= 1e-9,
            "integral of |sin| at {w}: closed form {got}, quadrature {expected}"
        );
    }
}

#[test]
fn closed_form_potential_matches_quadrature() {
    // h(w) = w^2 - double integral of |sin|, so quadrature gives an
    // independent value for the potential and its slope.
    for w in POINTS {
        let expected_h = w * w - quad_double_integral(w);
        let got_h = h_val(w);
        assert!(
            (got_h - expected_h).abs() <= 1e-9 * (1.0 + expected_h.abs()),
            "potential at {w}: closed form {got_h}, quadrature {expected_h}"
        );
        let expected_slope = 2.0 * w - quad_abs_sin_integral(w);
        let got_slope = h_prime(w);
        assert!(
            (got_slope - expected_slope).abs() <= 1e-9,
            "slope at {w}: closed form {got_slope}, quadrature {expected_slope}"
        );
    }
}

#[test]
fn parity_and_curvature_windows() {
    for w in [0.25, 1.1, 2.9, 5.3, 8.8] {
        assert_eq!(abs_sin_integral(-w), -abs_sin_integral(w));
        let even_gap = (h_val(w) - w * w) - (h_val(-w) - w * w);
        assert!(even_gap.abs() <= 1e-12);
        // Second difference of h stays within the curvature window [1, 2].
        let d = 1e-4;
        let second = (h_val(w + d) - 2.0 * h_val(w) + h_val(w - d)) / (d * d);
        assert!(
            (0.99..=2.01).contains(&second),
            "second difference {second} at {w}"
        );
    }
}
