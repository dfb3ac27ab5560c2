//! Real roots of a real cubic, numerically robust form.
//!
//! The classification goes through the depressed cubic t^3 + p t + q with
//! the trigonometric parametrization for three real roots and a
//! cancellation-free Cardano branch for one. Every root is then polished
//! with a couple of Newton steps on the original polynomial, which
//! removes the residual error of the closed forms near degenerate
//! (double-root) configurations.

/// Roots of a3 x^3 + a2 x^2 + a1 x + a0 = 0, ascending. Degenerates to
/// the quadratic/linear problem when leading coefficients vanish.
pub fn solve_cubic_real(a3: f64, a2: f64, a1: f64, a0: f64) -> Vec<f64> {
    if a3 == 0.0 {
        return solve_quadratic_real(a2, a1, a0);
    }
    let b = a2 / a3;
    let c = a1 / a3;
    let d = a0 / a3;

    // Depress: x = t - b/3, t^3 + p t + q = 0.
    let shift = b / 3.0;
    let p = c - b * b / 3.0;
    let q = 2.0 * b * b * b / 27.0 - b * c / 3.0 + d;

    let mut roots = Vec::with_capacity(3);
    let disc = 0.25 * q * q + p * p * p / 27.0;
    if disc > 0.0 {
        // One real root; avoid cancellation by extracting the large cube
        // root first.
        let s = disc.sqrt();
        let u = if q <= 0.0 { -0.5 * q + s } else { -0.5 * q - s };
        let u_cbrt = u.cbrt();
        // t = u^(1/3) - p/(3 u^(1/3)) (second term from v = -p/(3u^(1/3)))
        let t = u_cbrt - p / (3.0 * u_cbrt);
        roots.push(t - shift);
    } else if p == 0.0 && q == 0.0 {
        roots.push(-shift);
    } else {
        // Three real roots (disc <= 0 requires p < 0).
        let m = 2.0 * (-p / 3.0).sqrt();
        let arg = (3.0 * q / (p * m)).clamp(-1.0, 1.0);
        let theta = arg.acos() / 3.0;
        for k in 0..3 {
            let t = m * (theta - 2.0 * std::f64::consts::PI * k as f64 / 3.0).cos();
            roots.push(t - shift);
        }
    }

    for r in roots.iter_mut() {
        *r = polish(a3, a2, a1, a0, *r);
    }
    roots.sort_by(f64::total_cmp);
    roots.dedup_by(|x, y| {
        let scale = x.abs().max(y.abs()).max(1e-300);
        (*x - *y).abs() < 1e-10 * scale
    });
    roots
}

fn solve_quadratic_real(a: f64, b: f64, c: f64) -> Vec<f64> {
    if a == 0.0 {
        if b == 0.0 {
            return Vec::new();
        }
        return vec![-c / b];
    }
    let disc = b * b - 4.0 * a * c;
    if disc < 0.0 {
        return Vec::new();
    }
    let s = disc.sqrt();
    let q = -0.5 * (b + b.signum() * s);
    let mut roots = if q == 0.0 {
        vec![0.0, 0.0]
    } else {
        vec![q / a, c / q]
    };
    roots.sort_by(f64::total_cmp);
    roots
}

fn polish(a3: f64, a2: f64, a1: f64, a0: f64, mut x: f64) -> f64 {
    for _ in 0..3 {
        let f = ((a3 * x + a2) * x + a1) * x + a0;
        let df = (3.0 * a3 * x + 2.0 * a2) * x + a1;
        if df == 0.0 {
            break;
        }
        let step = f / df;
        if !step.is_finite() {
            break;
        }
        x -= step;
    }
    x
}
