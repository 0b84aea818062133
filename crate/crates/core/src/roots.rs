//! Real roots of low-degree polynomials.

/// Relative threshold below which a discriminant counts as zero.
pub const TANGENCY_EPS: f64 = 1e-12;

/// Real roots of `a·x² + b·x + c = 0` in ascending order.
///
/// Uses the cancellation-free form `q = −(b + sgn(b)·√Δ)/2`. A discriminant
/// within [`TANGENCY_EPS`] of zero (relative to the magnitude of its terms)
/// yields a single double root. Degenerates to the linear case when `a == 0`.
pub fn quadratic_roots(a: f64, b: f64, c: f64) -> Vec<f64> {
    if a == 0.0 {
        return if b == 0.0 { Vec::new() } else { vec![-c / b] };
    }
    let b2 = b * b;
    let ac4 = 4.0 * a * c;
    let disc = b2 - ac4;
    if disc.abs() <= TANGENCY_EPS * (b2 + ac4.abs()) {
        return vec![-b / (2.0 * a)];
    }
    if disc < 0.0 {
        return Vec::new();
    }
    let q = -0.5 * (b + disc.sqrt().copysign(b));
    let (x1, x2) = (q / a, c / q);
    if x1 <= x2 {
        vec![x1, x2]
    } else {
        vec![x2, x1]
    }
}

/// Real roots of `a·x³ + b·x² + c·x + d = 0` in ascending order.
///
/// Closed form (trigonometric for three real roots, Cardano otherwise) on
/// the depressed cubic, followed by Newton polishing of every root on the
/// original polynomial. Falls back to [`quadratic_roots`] when `a == 0`.
pub fn cubic_roots(a: f64, b: f64, c: f64, d: f64) -> Vec<f64> {
    let scale = a.abs().max(b.abs()).max(c.abs()).max(d.abs());
    if scale == 0.0 {
        return Vec::new();
    }
    if a.abs() <= f64::EPSILON * scale {
        return quadratic_roots(b, c, d);
    }
    let (p2, p1, p0) = (b / a, c / a, d / a);
    // x = t − p2/3 gives t³ + p·t + q = 0
    let shift = p2 / 3.0;
    let p = p1 - p2 * shift;
    let q = 2.0 * shift * shift * shift - shift * p1 + p0;
    let half_q = q / 2.0;
    let third_p = p / 3.0;
    let disc = half_q * half_q + third_p * third_p * third_p;
    let mag = half_q * half_q + (third_p * third_p * third_p).abs();

    let mut roots = if disc.abs() <= TANGENCY_EPS * mag {
        // repeated root
        if mag == 0.0 {
            vec![0.0]
        } else {
            let u = (-half_q).cbrt();
            vec![2.0 * u, -u]
        }
    } else if disc > 0.0 {
        let s = disc.sqrt();
        let u = (-half_q + s).cbrt();
        let v = (-half_q - s).cbrt();
        vec![u + v]
    } else {
        let r = (-third_p).sqrt();
        let phi = (-half_q / (r * r * r)).clamp(-1.0, 1.0).acos();
        (0..3)
            .map(|k| 2.0 * r * ((phi - 2.0 * std::f64::consts::PI * k as f64) / 3.0).cos())
            .collect()
    };
    for t in roots.iter_mut() {
        *t = polish(a, b, c, d, *t - shift);
    }
    roots.sort_by(f64::total_cmp);
    roots.dedup();
    roots
}

fn polish(a: f64, b: f64, c: f64, d: f64, mut x: f64) -> f64 {
    for _ in 0..4 {
        let f = ((a * x + b) * x + c) * x + d;
        let df = (3.0 * a * x + 2.0 * b) * x + c;
        if df == 0.0 || !f.is_finite() {
            break;
        }
        let next = x - f / df;
        if !next.is_finite() || (next - x).abs() <= f64::EPSILON * x.abs() {
            if next.is_finite() {
                x = next;
            }
            break;
        }
        // keep the step only if it does not increase the residual
        let fn_ = ((a * next + b) * next + c) * next + d;
        if fn_.abs() > f.abs() {
            break;
        }
        x = next;
    }
    x
}
