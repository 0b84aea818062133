use serde::{Deserialize, Serialize};

use super::QuadraticFn;
use crate::roots::quadratic_roots;

/// Pointwise maximum of a family of convex quadratics.
///
/// Piece `k` is `pieces[k]` on `[thresholds[k], thresholds[k+1]]`;
/// `thresholds` starts at `−∞` and ends at `+∞`. `sources[k]` is the index of
/// the piece's quadratic in the input family.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PiecewiseQuadratic {
    pub thresholds: Vec<f64>,
    pub pieces: Vec<QuadraticFn>,
    pub sources: Vec<usize>,
}

impl PiecewiseQuadratic {
    fn single(f: QuadraticFn, source: usize) -> Self {
        PiecewiseQuadratic {
            thresholds: vec![f64::NEG_INFINITY, f64::INFINITY],
            pieces: vec![f],
            sources: vec![source],
        }
    }

    pub fn len(&self) -> usize {
        self.pieces.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pieces.is_empty()
    }

    /// Index of the piece covering `w` (the left piece at a threshold).
    pub fn piece_at(&self, w: f64) -> usize {
        let interior = &self.thresholds[1..self.thresholds.len() - 1];
        interior.partition_point(|&t| t < w)
    }

    pub fn eval(&self, w: f64) -> f64 {
        self.pieces[self.piece_at(w)].eval(w)
    }

    fn push(&mut self, right: f64, f: QuadraticFn, source: usize) {
        // Extend the previous piece when the same function continues.
        if let (Some(&last_src), Some(last_f)) = (self.sources.last(), self.pieces.last()) {
            if last_src == source || *last_f == f {
                *self.thresholds.last_mut().unwrap() = right;
                return;
            }
        }
        self.pieces.push(f);
        self.sources.push(source);
        self.thresholds.push(right);
    }
}

/// A finite point strictly inside `(l, r)`, where either end may be infinite.
fn interior_point(l: f64, r: f64) -> f64 {
    match (l.is_finite(), r.is_finite()) {
        (true, true) => 0.5 * (l + r),
        (false, true) => r - r.abs().max(1.0),
        (true, false) => l + l.abs().max(1.0),
        (false, false) => 0.0,
    }
}

/// Crossings of `g` and `h` strictly inside `(a, b)`. A tangency (double
/// root of `g − h`) is not a crossing.
fn crossings(g: &QuadraticFn, h: &QuadraticFn, a: f64, b: f64) -> Vec<f64> {
    let (d2, d1, d0) = (g.a2 - h.a2, g.a1 - h.a1, g.a0 - h.a0);
    let roots = quadratic_roots(d2, d1, d0);
    if d2 != 0.0 && roots.len() == 1 {
        return Vec::new();
    }
    roots.into_iter().filter(|&x| a < x && x < b).collect()
}

/// Whether `g ≥ h` on `(l, r)`, an interval free of crossings. The two may
/// still touch at one tangent point, so a second sample breaks a tie there.
fn first_dominates(g: &QuadraticFn, h: &QuadraticFn, l: f64, r: f64) -> bool {
    let x = interior_point(l, r);
    let d = g.eval(x) - h.eval(x);
    if d != 0.0 {
        return d > 0.0;
    }
    let y = interior_point(l, x);
    g.eval(y) >= h.eval(y)
}

/// Pointwise maximum of two envelopes in `O(|g| + |h|)`. Where the two are
/// equal the first operand is kept.
fn merge(g: &PiecewiseQuadratic, h: &PiecewiseQuadratic) -> PiecewiseQuadratic {
    let (t, u) = (&g.thresholds, &h.thresholds);
    let mut out = PiecewiseQuadratic { thresholds: vec![f64::NEG_INFINITY], pieces: Vec::new(), sources: Vec::new() };
    let (mut i, mut j) = (0, 0);
    while i < g.len() && j < h.len() {
        let a = t[i].max(u[j]);
        let b = t[i + 1].min(u[j + 1]);
        if a >= b {
            let (ti, uj) = (t[i + 1], u[j + 1]);
            if ti <= uj {
                i += 1;
            }
            if uj <= ti {
                j += 1;
            }
            continue;
        }
        let (gf, hf) = (&g.pieces[i], &h.pieces[j]);
        let mut v = vec![a];
        v.extend(crossings(gf, hf, a, b));
        v.push(b);
        for w in v.windows(2) {
            if first_dominates(gf, hf, w[0], w[1]) {
                out.push(w[1], *gf, g.sources[i]);
            } else {
                out.push(w[1], *hf, h.sources[j]);
            }
        }
        let (ti, uj) = (t[i + 1], u[j + 1]);
        if ti == b {
            i += 1;
        }
        if uj == b {
            j += 1;
        }
    }
    out
}

fn envelope_range(fns: &[QuadraticFn], offset: usize) -> PiecewiseQuadratic {
    if fns.len() == 1 {
        return PiecewiseQuadratic::single(fns[0], offset);
    }
    let mid = fns.len() / 2;
    let (lo, hi) = if fns.len() >= 256 {
        rayon::join(|| envelope_range(&fns[..mid], offset), || envelope_range(&fns[mid..], offset + mid))
    } else {
        (envelope_range(&fns[..mid], offset), envelope_range(&fns[mid..], offset + mid))
    };
    merge(&lo, &hi)
}

/// Exact upper envelope by divide and conquer, `O(m log m)` for `m`
/// functions. For convex quadratics the result has at most `2m − 1` pieces.
///
/// # Panics
/// If `fns` is empty.
pub fn upper_envelope(fns: &[QuadraticFn]) -> PiecewiseQuadratic {
    assert!(!fns.is_empty(), "upper envelope of an empty family");
    envelope_range(fns, 0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_function() {
        let f = QuadraticFn::new(1.0, 0.0, 0.0);
        let e = upper_envelope(&[f]);
        assert_eq!(e.thresholds, vec![f64::NEG_INFINITY, f64::INFINITY]);
        assert_eq!(e.pieces, vec![f]);
    }

    #[test]
    fn symmetric_pair() {
        let f = QuadraticFn::new(1.0, 0.0, 0.0); // w²
        let g = QuadraticFn::new(1.0, -4.0, 4.0); // (w−2)²
        let e = upper_envelope(&[f, g]);
        assert_eq!(e.pieces, vec![g, f]);
        assert_eq!(e.thresholds, vec![f64::NEG_INFINITY, 1.0, f64::INFINITY]);
        assert_eq!(e.sources, vec![1, 0]);
    }

    #[test]
    fn identical_functions_keep_first() {
        let f = QuadraticFn::new(2.0, 1.0, 3.0);
        let e = upper_envelope(&[f, f, f]);
        assert_eq!(e.sources, vec![0]);
    }

    #[test]
    fn dominated_function_vanishes() {
        let f = QuadraticFn::new(1.0, 0.0, 0.0);
        let g = QuadraticFn::new(1.0, 0.0, 5.0);
        let e = upper_envelope(&[f, g]);
        assert_eq!(e.sources, vec![1]);
    }

    #[test]
    fn tangent_functions_do_not_split() {
        // w² and 2w² touch only at w = 0
        let e = upper_envelope(&[QuadraticFn::new(1.0, 0.0, 0.0), QuadraticFn::new(2.0, 0.0, 0.0)]);
        assert_eq!(e.sources, vec![1]);
    }

    #[test]
    fn nested_crossings() {
        // a flat wide parabola crossing a steep one twice
        let wide = QuadraticFn::new(0.1, 0.0, 1.0);
        let steep = QuadraticFn::new(1.0, 0.0, 0.0);
        let e = upper_envelope(&[wide, steep]);
        assert_eq!(e.sources, vec![1, 0, 1]);
        let r = (1.0f64 / 0.9).sqrt();
        assert!((e.thresholds[1] + r).abs() < 1e-12 && (e.thresholds[2] - r).abs() < 1e-12);
    }
}
