//! Lipschitz branch-and-bound over a [`RegionSet`].

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::regions::{HyperBox, RegionSet};

/// Leaves whose centre was removed are split this many extra times at most.
const EXTRA_DEPTH: u32 = 8;

struct Cell {
    cell: HyperBox,
    live: Vec<usize>,
}

/// Per-run counters.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct SearchStats {
    pub evaluations: usize,
    pub cells: usize,
}

/// Depth-first search for a region point with `g > 0`.
///
/// Visits lower halves first and returns the first accepted centre. When it
/// returns `None`, every region point has `g < lipschitz * precision`
/// (up to remnants thinner than `precision / 2^8` along removal boundaries).
pub fn satisfy(
    region: &RegionSet,
    lipschitz: f64,
    precision: f64,
    mut g: impl FnMut(&[f64]) -> f64,
    stats: &mut SearchStats,
) -> Option<(Vec<f64>, f64)> {
    let floor = precision / f64::from(1u32 << EXTRA_DEPTH);
    let mut stack = vec![Cell {
        cell: region.base.clone(),
        live: region.all_indices(),
    }];
    while let Some(Cell { cell, live }) = stack.pop() {
        stats.cells += 1;
        let live = region.meeting(&cell, &live);
        if region.covered(&cell, &live) {
            continue;
        }
        let c = cell.center();
        let v = g(&c);
        stats.evaluations += 1;
        let free = !live.iter().any(|i| region.removed()[*i].contains(&c));
        if free && v > 0.0 {
            return Some((c, v));
        }
        let (d, edge) = cell.widest();
        if v + lipschitz * 0.5 * edge <= 0.0 {
            continue;
        }
        if edge < precision && (free || edge < floor) {
            if !free {
                if let Some(hit) = corner_hit(region, &cell, &live, &mut g, stats) {
                    return Some(hit);
                }
            }
            continue;
        }
        let (lo, hi) = cell.split(d);
        stack.push(Cell {
            cell: hi,
            live: live.clone(),
        });
        stack.push(Cell { cell: lo, live });
    }
    None
}

fn corner_hit(
    region: &RegionSet,
    cell: &HyperBox,
    live: &[usize],
    g: &mut impl FnMut(&[f64]) -> f64,
    stats: &mut SearchStats,
) -> Option<(Vec<f64>, f64)> {
    let n = cell.dim();
    if n > 10 {
        return None;
    }
    for mask in 0..1usize << n {
        let p: Vec<f64> = (0..n)
            .map(|i| if mask >> (n - 1 - i) & 1 == 0 { cell.lo[i] } else { cell.hi[i] })
            .collect();
        if live.iter().any(|i| region.removed()[*i].contains(&p)) {
            continue;
        }
        let v = g(&p);
        stats.evaluations += 1;
        if v > 0.0 {
            return Some((p, v));
        }
    }
    None
}

struct Pending {
    upper: f64,
    seq: usize,
    center: Vec<f64>,
    cell: Cell,
}

impl PartialEq for Pending {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Pending {}

impl PartialOrd for Pending {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Pending {
    // Max-heap on the upper bound; earlier insertions win ties.
    fn cmp(&self, other: &Self) -> Ordering {
        self.upper
            .total_cmp(&other.upper)
            .then_with(|| other.seq.cmp(&self.seq))
    }
}

/// Best-first search for the supremum of `g` over the region.
///
/// Returns a region point whose value is within `lipschitz * precision` of
/// the supremum, or `None` if no region point was found.
pub fn maximize(
    region: &RegionSet,
    lipschitz: f64,
    precision: f64,
    mut g: impl FnMut(&[f64]) -> f64,
    stats: &mut SearchStats,
) -> Option<(Vec<f64>, f64)> {
    let floor = precision / f64::from(1u32 << EXTRA_DEPTH);
    let mut best: Option<(Vec<f64>, f64)> = None;
    let mut heap = BinaryHeap::new();
    let mut seq = 0;
    let mut push = |heap: &mut BinaryHeap<Pending>,
                    best: &mut Option<(Vec<f64>, f64)>,
                    cell: HyperBox,
                    live: Vec<usize>,
                    stats: &mut SearchStats| {
        stats.cells += 1;
        let live = region.meeting(&cell, &live);
        if region.covered(&cell, &live) {
            return;
        }
        let c = cell.center();
        let v = g(&c);
        stats.evaluations += 1;
        let free = !live.iter().any(|i| region.removed()[*i].contains(&c));
        if free && best.as_ref().is_none_or(|(_, b)| v > *b) {
            *best = Some((c.clone(), v));
        }
        seq += 1;
        heap.push(Pending {
            upper: v + lipschitz * cell.radius(),
            seq,
            center: c,
            cell: Cell { cell, live },
        });
    };
    push(&mut heap, &mut best, region.base.clone(), region.all_indices(), stats);
    while let Some(top) = heap.pop() {
        if let Some((_, b)) = &best {
            if top.upper <= b + lipschitz * precision {
                break;
            }
        }
        let Pending { cell: Cell { cell, live }, center, .. } = top;
        let (d, edge) = cell.widest();
        let free = !live.iter().any(|i| region.removed()[*i].contains(&center));
        if edge < precision && (free || edge < floor) {
            continue;
        }
        let (lo, hi) = cell.split(d);
        push(&mut heap, &mut best, lo, live.clone(), stats);
        push(&mut heap, &mut best, hi, live, stats);
    }
    best
}
