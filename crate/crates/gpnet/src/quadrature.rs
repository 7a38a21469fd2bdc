//! Reference integrators. These are deliberately plain recursive Simpson
//! rules, independent of the Laplace and bridge-sampling code paths they
//! are used to cross-check in the test suites.

/// Adaptive Simpson on [a, b].
pub fn adaptive_simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64, depth: usize) -> f64 {
    fn simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64) -> f64 {
        let c = 0.5 * (a + b);
        (b - a) / 6.0 * (f(a) + 4.0 * f(c) + f(b))
    }
    fn rec(f: &dyn Fn(f64) -> f64, a: f64, b: f64, whole: f64, tol: f64, depth: usize) -> f64 {
        let c = 0.5 * (a + b);
        let left = simpson(f, a, c);
        let right = simpson(f, c, b);
        if depth == 0 || (left + right - whole).abs() <= 15.0 * tol {
            left + right + (left + right - whole) / 15.0
        } else {
            rec(f, a, c, left, tol / 2.0, depth - 1) + rec(f, c, b, right, tol / 2.0, depth - 1)
        }
    }
    rec(f, a, b, simpson(f, a, b), tol, depth)
}

/// Adaptive Simpson over pre-forced subdivisions, so narrow peaks inside a
/// wide interval cannot be skipped by the first coarse estimate.
pub fn subdivided_simpson(
    f: &dyn Fn(f64) -> f64,
    a: f64,
    b: f64,
    segments: usize,
    tol: f64,
) -> f64 {
    let mut total = 0.0;
    for s in 0..segments {
        let lo = a + (b - a) * s as f64 / segments as f64;
        let hi = a + (b - a) * (s + 1) as f64 / segments as f64;
        total += adaptive_simpson(f, lo, hi, tol, 20);
    }
    total
}

/// log of the integral of exp(log_f) over [a, b], stabilized by shifting
/// with the coarse-grid maximum of log_f.
pub fn log_integral_1d(log_f: &dyn Fn(f64) -> f64, a: f64, b: f64, segments: usize) -> f64 {
    let grid = (segments * 8).max(64);
    let shift = (0..=grid)
        .map(|i| log_f(a + (b - a) * i as f64 / grid as f64))
        .fold(f64::NEG_INFINITY, f64::max);
    let g = |x: f64| (log_f(x) - shift).exp();
    subdivided_simpson(&g, a, b, segments, 1e-12).ln() + shift
}

/// log of the double integral of exp(log_f) over a rectangle; tensor
/// product of the 1-D rule with a shared shift.
pub fn log_integral_2d(
    log_f: &dyn Fn(f64, f64) -> f64,
    x_range: (f64, f64),
    y_range: (f64, f64),
    segments: usize,
) -> f64 {
    let grid = (segments * 4).max(48);
    let mut shift = f64::NEG_INFINITY;
    for i in 0..=grid {
        let x = x_range.0 + (x_range.1 - x_range.0) * i as f64 / grid as f64;
        for j in 0..=grid {
            let y = y_range.0 + (y_range.1 - y_range.0) * j as f64 / grid as f64;
            shift = shift.max(log_f(x, y));
        }
    }
    let inner = |x: f64| {
        let g = |y: f64| (log_f(x, y) - shift).exp();
        subdivided_simpson(&g, y_range.0, y_range.1, segments, 1e-12)
    };
    subdivided_simpson(&inner, x_range.0, x_range.1, segments, 1e-10).ln() + shift
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    const LN_2PI: f64 = 1.8378770664093453;

    #[test]
    fn integrates_polynomial_exactly() {
        // Simpson is exact for cubics
        let f = |x: f64| x * x * x - 2.0 * x + 1.0;
        let v = adaptive_simpson(&f, 0.0, 2.0, 1e-12, 20);
        assert_abs_diff_eq!(v, 2.0, epsilon = 1e-10);
    }

    #[test]
    fn log_integral_of_gaussian() {
        // integral of exp(-x^2 / 2) over R is sqrt(2 pi)
        let log_f = |x: f64| -0.5 * x * x;
        let v = log_integral_1d(&log_f, -10.0, 10.0, 40);
        assert_abs_diff_eq!(v, 0.5 * LN_2PI, epsilon = 1e-8);
    }

    #[test]
    fn log_integral_of_narrow_gaussian_in_wide_window() {
        // sd 0.01 peak at 3 inside [-50, 50]
        let log_f = |x: f64| -0.5 * ((x - 3.0) / 0.01).powi(2);
        let v = log_integral_1d(&log_f, -50.0, 50.0, 400);
        assert_abs_diff_eq!(v, 0.5 * LN_2PI + 0.01f64.ln(), epsilon = 1e-6);
    }

    #[test]
    fn log_integral_2d_gaussian() {
        let log_f = |x: f64, y: f64| -0.5 * (x * x / 4.0 + (y - 1.0) * (y - 1.0));
        let v = log_integral_2d(&log_f, (-12.0, 12.0), (-11.0, 13.0), 30);
        // integral = 2pi * sd_x * sd_y = 2pi * 2
        assert_abs_diff_eq!(v, LN_2PI + 2f64.ln(), epsilon = 1e-6);
    }
}
