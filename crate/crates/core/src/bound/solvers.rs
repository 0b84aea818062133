//! Three interchangeable solvers for `min_w max_i f_i(w)` over convex
//! quadratics `f_i`.

use super::{upper_envelope, BoundMethod, BoundResult, QuadraticFn};
use crate::error::{Error, Result};
use crate::roots::quadratic_roots;

fn max_at(fns: &[QuadraticFn], w: f64) -> f64 {
    fns.iter().map(|f| f.eval(w)).fold(f64::NEG_INFINITY, f64::max)
}

fn vertex_range(fns: &[QuadraticFn]) -> Result<(f64, f64)> {
    if fns.is_empty() {
        return Err(Error::InvalidParameter("empty quadratic family".into()));
    }
    Ok(fns
        .iter()
        .map(QuadraticFn::vertex)
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v))))
}

/// Golden-section search over `w` in `[min vertex, max vertex]`, which always
/// contains the minimizer; widened by one on each side when all vertices
/// coincide. Returns the envelope value at the final interval's midpoint.
pub fn upper_bound_golden(fns: &[QuadraticFn], iters: u32) -> Result<BoundResult> {
    let (mut a, mut b) = vertex_range(fns)?;
    if a == b {
        a -= 1.0;
        b += 1.0;
    }
    let inv_phi = 2.0 / (1.0 + 5f64.sqrt());
    let mut wl = b - (b - a) * inv_phi;
    let mut wr = a + (b - a) * inv_phi;
    let mut yl = max_at(fns, wl);
    let mut yr = max_at(fns, wr);
    for _ in 0..iters {
        if yl > yr {
            a = wl;
            wl = wr;
            wr = a + (b - a) * inv_phi;
            yl = yr;
            yr = max_at(fns, wr);
        } else {
            b = wr;
            wr = wl;
            wl = b - (b - a) * inv_phi;
            yr = yl;
            yl = max_at(fns, wl);
        }
    }
    let w_star = 0.5 * (a + b);
    Ok(BoundResult { value: max_at(fns, w_star), method: BoundMethod::Golden, w_star })
}

/// `⋂_i {w : f_i(w) ≤ y}`, or `None` when empty. A double root gives the
/// single point `[α, α]`.
fn sublevel_intersection(fns: &[QuadraticFn], y: f64) -> Option<(f64, f64)> {
    let (mut lo, mut hi) = (f64::NEG_INFINITY, f64::INFINITY);
    for f in fns {
        let roots = quadratic_roots(f.a2, f.a1, f.a0 - y);
        let (alpha, beta) = match roots.as_slice() {
            [r] => (*r, *r),
            [r1, r2] => (*r1, *r2),
            _ => return None,
        };
        lo = lo.max(alpha);
        hi = hi.min(beta);
        if lo > hi {
            return None;
        }
    }
    Some((lo, hi))
}

/// Bisection on the value axis. Each step decides whether the sublevel sets
/// of all `f_i` at the midpoint share a point. Returns the upper end of the
/// final bracket, which is always attainable.
///
/// The default bracket is `[0, max_i f_i(w_mid)]` at the midpoint of the
/// vertex range, with the upper end nudged up by a relative `1e-9` so that
/// rounding in the root computation cannot make it look infeasible.
pub fn upper_bound_binary(fns: &[QuadraticFn], iters: u32, bracket: Option<(f64, f64)>) -> Result<BoundResult> {
    let (vlo, vhi) = vertex_range(fns)?;
    let (mut lo, mut hi) = match bracket {
        Some(b) => b,
        None => {
            let top = max_at(fns, 0.5 * (vlo + vhi));
            (0.0, top + 1e-9 * top.abs().max(1.0))
        }
    };
    let invalid = Error::InvalidBracket { lo, hi };
    if lo > hi {
        return Err(invalid);
    }
    let mut feasible = sublevel_intersection(fns, hi).ok_or(invalid)?;
    for _ in 0..iters {
        let mid = 0.5 * (lo + hi);
        match sublevel_intersection(fns, mid) {
            Some(range) => {
                hi = mid;
                feasible = range;
            }
            None => lo = mid,
        }
    }
    Ok(BoundResult { value: hi, method: BoundMethod::Binary, w_star: 0.5 * (feasible.0 + feasible.1) })
}

/// Builds the exact envelope and minimizes each piece at its vertex clamped
/// into the piece's interval.
pub fn upper_bound_exact(fns: &[QuadraticFn]) -> Result<BoundResult> {
    vertex_range(fns)?;
    let env = upper_envelope(fns);
    let mut best = BoundResult { value: f64::INFINITY, method: BoundMethod::Exact, w_star: 0.0 };
    for (k, f) in env.pieces.iter().enumerate() {
        let w = f.vertex().clamp(env.thresholds[k], env.thresholds[k + 1]);
        let y = f.eval(w);
        if y < best.value {
            best.value = y;
            best.w_star = w;
        }
    }
    Ok(best)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pair() -> Vec<QuadraticFn> {
        vec![QuadraticFn::new(1.0, 0.0, 0.0), QuadraticFn::new(1.0, -4.0, 4.0)]
    }

    #[test]
    fn single_quadratic() {
        let f = [QuadraticFn::new(2.0, -4.0, 5.0)]; // 2(w−1)² + 3
        for r in [
            upper_bound_golden(&f, 50).unwrap(),
            upper_bound_binary(&f, 60, Some((2.0, 4.0))).unwrap(),
            upper_bound_exact(&f).unwrap(),
        ] {
            assert!((r.value - 3.0).abs() < 1e-9, "{r:?}");
            assert!((r.w_star - 1.0).abs() < 1e-4, "{r:?}");
        }
    }

    #[test]
    fn crossing_pair() {
        let f = pair();
        let exact = upper_bound_exact(&f).unwrap();
        assert_eq!(exact.value, 1.0);
        assert_eq!(exact.w_star, 1.0);
        assert!((upper_bound_golden(&f, 50).unwrap().value - 1.0).abs() < 1e-9);
        assert!((upper_bound_binary(&f, 50, None).unwrap().value - 1.0).abs() < 1e-9);
    }

    #[test]
    fn infeasible_bracket() {
        let f = pair();
        assert!(matches!(upper_bound_binary(&f, 10, Some((0.0, 0.5))), Err(Error::InvalidBracket { .. })));
        assert!(matches!(upper_bound_binary(&f, 10, Some((3.0, 2.0))), Err(Error::InvalidBracket { .. })));
    }

    #[test]
    fn empty_family_is_rejected() {
        assert!(upper_bound_golden(&[], 5).is_err());
        assert!(upper_bound_binary(&[], 5, None).is_err());
        assert!(upper_bound_exact(&[]).is_err());
    }
}
