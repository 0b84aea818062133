use serde::{Deserialize, Serialize};

use super::sege_relaxed_config;
use crate::attack::{AttackMethod, AttackReport, Poisons};
use crate::error::{Error, Result};
use crate::stats::{mse_with_extra, with_accum, Accum, KeySet, PrefixSums, SummaryStats};

/// Boundaries of an original-setting Seg+E set: the free integers of
/// `[k_1, r1] ∪ [l2, r2] ∪ [l3, k_n]`. `r1 = k_1` encodes an empty left block
/// and `l3 = k_n` an empty right block; an empty middle block has `l2 > r2`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SegEOriginal {
    pub r1: u64,
    pub l2: u64,
    pub r2: u64,
    pub l3: u64,
}

/// Up to `cap` free integers reached by walking away from key `j` (upwards
/// or downwards), skipping occupied integers and staying strictly inside
/// `(k_1, k_n)`. Values are shifted by `k_1`.
struct Walker<'a> {
    keys: &'a KeySet,
    /// `next_gap[g]`: first gap `≥ g` holding a free integer (or `n−1`).
    next_gap: Vec<usize>,
    /// `prev_gap[g + 1]`: last gap `≤ g` holding a free integer (0 if none).
    prev_gap: Vec<usize>,
}

impl<'a> Walker<'a> {
    fn new(keys: &'a KeySet) -> Self {
        let n = keys.len();
        let free = |g: usize| keys.shifted(g + 1) - keys.shifted(g) - 1;
        let mut next_gap = vec![n - 1; n];
        for g in (0..n - 1).rev() {
            next_gap[g] = if free(g) > 0 { g } else { next_gap[g + 1] };
        }
        let mut prev_gap = vec![0; n];
        for g in 0..n - 1 {
            prev_gap[g + 1] = if free(g) > 0 { g + 1 } else { prev_gap[g] };
        }
        Walker { keys, next_gap, prev_gap }
    }

    fn up(&self, j: usize, cap: u64) -> Vec<(u64, usize)> {
        let n = self.keys.len();
        let mut out = Vec::new();
        let mut g = self.next_gap[j];
        while (out.len() as u64) < cap && g < n - 1 {
            let (lo, hi) = (self.keys.shifted(g), self.keys.shifted(g + 1));
            let take = (hi - lo - 1).min(cap - out.len() as u64);
            // g+1 keys lie below every integer of gap g
            out.extend((lo + 1..=lo + take).map(|p| (p, g + 1)));
            g = self.next_gap[g + 1];
        }
        out
    }

    fn down(&self, j: usize, cap: u64) -> Vec<(u64, usize)> {
        let mut out = Vec::new();
        let mut g1 = self.prev_gap[j];
        while (out.len() as u64) < cap && g1 > 0 {
            let g = g1 - 1;
            let (lo, hi) = (self.keys.shifted(g), self.keys.shifted(g + 1));
            let take = (hi - lo - 1).min(cap - out.len() as u64);
            out.extend((hi - take..hi).rev().map(|p| (p, g + 1)));
            g1 = self.prev_gap[g];
        }
        out
    }
}

/// Prefix aggregates along a walk `p_1, p_2, ...` (in walk order) over the
/// quantities needed for `O(1)` moment updates.
#[derive(Clone, Copy, Debug)]
struct Agg<A> {
    sp: A,
    sp2: A,
    /// Σ (sum of keys above p)
    sk: A,
    /// Σ p·(number of keys below p)
    spk: A,
    /// Σ p·d, `d` the 1-based position along the walk
    spd: A,
}

struct Run<A> {
    points: Vec<u64>,
    agg: Vec<Agg<A>>,
}

impl<A: Accum> Run<A> {
    fn new(ps: &PrefixSums<A>, walk: Vec<(u64, usize)>) -> Self {
        let n = ps.n();
        let zero = A::zero();
        let mut agg = vec![Agg { sp: zero, sp2: zero, sk: zero, spk: zero, spd: zero }];
        for (d, &(p, below)) in walk.iter().enumerate() {
            let prev = agg[d];
            let pa = A::from_u64(p);
            agg.push(Agg {
                sp: prev.sp + pa,
                sp2: prev.sp2 + pa * pa,
                sk: prev.sk + (ps.s[n] - ps.s[below]),
                spk: prev.spk + pa * A::from_u64(below as u64),
                spd: prev.spd + pa * A::from_u64(d as u64 + 1),
            });
        }
        Run { points: walk.into_iter().map(|(p, _)| p).collect(), agg }
    }

    fn len(&self) -> u64 {
        self.points.len() as u64
    }
}

/// One block of a candidate: the first `len` points of a run, walking in
/// ascending (`up`) or descending order.
#[derive(Clone, Copy)]
struct Block<'r, A> {
    run: &'r Run<A>,
    len: u64,
    up: bool,
}

impl<A: Accum> Block<'_, A> {
    /// (min, max) of the block, or `None` when empty.
    fn span(&self) -> Option<(u64, u64)> {
        if self.len == 0 {
            return None;
        }
        let (first, last) = (self.run.points[0], self.run.points[self.len as usize - 1]);
        Some(if self.up { (first, last) } else { (last, first) })
    }

    /// Adds the block to `stats` given `offset` poisons below it.
    fn add(&self, stats: &mut SummaryStats<A>, offset: u64) {
        if self.len == 0 {
            return;
        }
        let g = self.run.agg[self.len as usize];
        stats.m += self.len;
        stats.sum_x = stats.sum_x + g.sp;
        stats.sum_x2 = stats.sum_x2 + g.sp2;
        // poison rank among poisons: offset + d (up) or offset + len + 1 − d (down)
        let among = if self.up {
            A::from_u64(offset) * g.sp + g.spd
        } else {
            A::from_u64(offset + self.len + 1) * g.sp - g.spd
        };
        stats.sum_xr = stats.sum_xr + g.sk + g.spk + among;
    }

    fn extend_into(&self, out: &mut Vec<u64>, shift: u64) {
        out.extend(self.run.points[..self.len as usize].iter().map(|p| p + shift));
    }
}

/// Moments of `K ∪ left ∪ middle ∪ right` when the three blocks are ordered
/// and disjoint, `None` otherwise.
fn combine<A: Accum>(ps: &PrefixSums<A>, blocks: [Block<'_, A>; 3]) -> Option<SummaryStats<A>> {
    let mut last_max: Option<u64> = None;
    for b in &blocks {
        if let Some((lo, hi)) = b.span() {
            if last_max.is_some_and(|m| m >= lo) {
                return None;
            }
            last_max = Some(hi);
        }
    }
    let n = ps.n();
    let mut s = SummaryStats { m: n as u64, sum_x: ps.s[n], sum_x2: ps.t[n], sum_xr: ps.u[n] };
    let mut offset = 0;
    for b in &blocks {
        b.add(&mut s, offset);
        offset += b.len;
    }
    Some(s)
}

fn points_of<A: Accum>(blocks: &[Block<'_, A>; 3], shift: u64) -> Vec<u64> {
    let mut out = Vec::new();
    for b in blocks {
        b.extend_into(&mut out, shift);
    }
    out.sort_unstable();
    out
}

/// Middle-segment anchors: `(key index, upwards)`. An upward segment starts
/// right after `k_j` (`j ≥ 1`), a downward one ends right before `k_j`
/// (`j ≤ n−2`).
fn anchors(n: usize) -> impl Iterator<Item = (usize, bool)> {
    (0..n).flat_map(move |j| [(j, true), (j, false)]).filter(move |&(j, up)| if up { j >= 1 } else { j + 2 <= n })
}

fn exact_generic<A: Accum>(keys: &KeySet, budget: u64) -> (Vec<u64>, f64) {
    let n = keys.len();
    let ps = PrefixSums::<A>::new(keys);
    let walker = Walker::new(keys);
    let left = Run::new(&ps, walker.up(0, budget));
    let right = Run::new(&ps, walker.down(n - 1, budget));
    let middles: Vec<((usize, bool), Run<A>)> = anchors(n)
        .map(|(j, up)| {
            let walk = if up { walker.up(j, budget) } else { walker.down(j, budget) };
            ((j, up), Run::new(&ps, walk))
        })
        .collect();
    let empty_mid = Run { points: Vec::new(), agg: left.agg[..1].to_vec() };

    let mut best_mse = f64::NEG_INFINITY;
    let mut best_points = Vec::new();
    for l in 0..=budget.min(left.len()) {
        let lb = Block { run: &left, len: l, up: true };
        for m in 0..=budget - l {
            for r in 0..=(budget - l - m).min(right.len()) {
                let rb = Block { run: &right, len: r, up: false };
                let mids: Box<dyn Iterator<Item = Block<'_, A>>> = if m == 0 {
                    Box::new(std::iter::once(Block { run: &empty_mid, len: 0, up: true }))
                } else {
                    Box::new(
                        middles
                            .iter()
                            .filter(|(_, run)| run.len() >= m)
                            .map(|((_, up), run)| Block { run, len: m, up: *up }),
                    )
                };
                for mb in mids {
                    let blocks = [lb, mb, rb];
                    if let Some(s) = combine(&ps, blocks) {
                        let mse = s.mse();
                        if mse > best_mse {
                            best_mse = mse;
                            best_points = points_of(&blocks, keys.first());
                        } else if mse == best_mse {
                            let points = points_of(&blocks, keys.first());
                            if points < best_points {
                                best_points = points;
                            }
                        }
                    }
                }
            }
        }
    }
    (best_points, best_mse)
}

/// Exact original-setting Seg+E attack.
///
/// The interior segment may be restricted to start right after, or end
/// right before, a legitimate key without losing optimality, leaving
/// `O(λ³)` block-size splits times `O(n)` anchors, each scored in `O(1)`.
/// Ties resolve to the lexicographically smallest sorted poison set.
pub fn sege_exact_original(keys: &KeySet, budget: u64) -> Result<AttackReport> {
    if keys.free_interior() == 0 {
        return Err(Error::NoFeasiblePoison);
    }
    let (points, mse_after) = with_accum!(keys.precision(budget as usize), exact_generic(keys, budget));
    Ok(AttackReport {
        method: AttackMethod::SegeExact,
        budget,
        poisons: Poisons::Set { points },
        mse_before: mse_with_extra(keys, &[]),
        mse_after,
    })
}

fn heuristic_generic<A: Accum>(keys: &KeySet, a: u64, b: u64, c: u64) -> Option<(Vec<u64>, f64)> {
    let n = keys.len();
    let ps = PrefixSums::<A>::new(keys);
    let walker = Walker::new(keys);
    let left = Run::new(&ps, walker.up(0, a));
    let right = Run::new(&ps, walker.down(n - 1, c));
    if left.len() < a || right.len() < c {
        return None;
    }
    let lb = Block { run: &left, len: a, up: true };
    let rb = Block { run: &right, len: c, up: false };
    let mut best: Option<(Vec<u64>, f64)> = None;
    let mut consider = |blocks: [Block<'_, A>; 3]| {
        if let Some(s) = combine(&ps, blocks) {
            let mse = s.mse();
            let points = points_of(&blocks, keys.first());
            if best.as_ref().is_none_or(|(p, m)| mse > *m || (mse == *m && points < *p)) {
                best = Some((points, mse));
            }
        }
    };
    if b == 0 {
        let empty = Run { points: Vec::new(), agg: left.agg[..1].to_vec() };
        consider([lb, Block { run: &empty, len: 0, up: true }, rb]);
    } else {
        for (j, up) in anchors(n) {
            let walk = if up { walker.up(j, b) } else { walker.down(j, b) };
            let run = Run::new(&ps, walk);
            if run.len() == b {
                consider([lb, Block { run: &run, len: b, up }, rb]);
            }
        }
    }
    best
}

/// Original-setting Seg+E guided by the relaxed solution: its endpoint and
/// interior counts are materialized as blocks of consecutive free integers,
/// trying every anchor for the interior block. `O(nλ)`.
pub fn sege_heuristic_original(keys: &KeySet, budget: u64) -> Result<AttackReport> {
    let (cfg, _) = sege_relaxed_config(keys, budget)?;
    let found = with_accum!(keys.precision(budget as usize), heuristic_generic(keys, cfg.a, cfg.b, cfg.c));
    let (points, mse_after) = found.ok_or(Error::NoFeasiblePoison)?;
    Ok(AttackReport {
        method: AttackMethod::SegeHeuristic,
        budget,
        poisons: Poisons::Set { points },
        mse_before: mse_with_extra(keys, &[]),
        mse_after,
    })
}

/// Recovers Seg+E boundaries for a sorted poison set that has that shape.
pub fn sege_boundaries(keys: &KeySet, points: &[u64]) -> Option<SegEOriginal> {
    let (k1, kn) = (keys.first(), keys.last());
    let k = keys.keys();
    let free_between = |lo: u64, hi: u64| {
        let (lo, hi) = (lo.max(k1 + 1), hi.min(kn - 1));
        lo <= hi && ((k.partition_point(|&x| x <= hi) - k.partition_point(|&x| x < lo)) as u64) < hi - lo + 1
    };
    // split into maximal runs separated by at least one free non-poison integer
    let mut runs: Vec<(u64, u64)> = Vec::new();
    for &p in points {
        match runs.last_mut() {
            Some((_, hi)) if !free_between(*hi + 1, p - 1) => *hi = p,
            _ => runs.push((p, p)),
        }
    }
    let mut left = None;
    let mut right = None;
    if let Some(&(lo, hi)) = runs.first() {
        if !free_between(k1 + 1, lo - 1) {
            left = Some(hi);
            runs.remove(0);
        }
    }
    if let Some(&(lo, hi)) = runs.last() {
        if !free_between(hi + 1, kn - 1) {
            right = Some(lo);
            runs.pop();
        }
    }
    let r1 = left.unwrap_or(k1);
    let l3 = right.unwrap_or(kn);
    match runs.as_slice() {
        [] => Some(SegEOriginal { r1, l2: r1 + 1, r2: r1, l3 }),
        [(lo, hi)] => Some(SegEOriginal { r1, l2: *lo, r2: *hi, l3 }),
        _ => None,
    }
}
