//! A box minus a union of open infinity-norm squares.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Closed axis-aligned box `[lo, hi]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HyperBox {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
}

impl HyperBox {
    pub fn new(lo: Vec<f64>, hi: Vec<f64>) -> Result<Self> {
        if lo.len() != hi.len() || lo.is_empty() {
            return Err(Error::Dimension(format!(
                "box bounds have {} and {} components",
                lo.len(),
                hi.len()
            )));
        }
        if lo.iter().zip(&hi).any(|(a, b)| !(a <= b)) {
            return Err(Error::Invalid("box lower bound exceeds upper bound".into()));
        }
        Ok(Self { lo, hi })
    }

    pub fn dim(&self) -> usize {
        self.lo.len()
    }

    pub fn center(&self) -> Vec<f64> {
        self.lo.iter().zip(&self.hi).map(|(a, b)| 0.5 * (a + b)).collect()
    }

    /// Half of the longest edge: the infinity-norm radius around the centre.
    pub fn radius(&self) -> f64 {
        0.5 * self.widest().1
    }

    /// (dimension, edge) of the longest edge, lowest index on ties.
    pub fn widest(&self) -> (usize, f64) {
        let mut best = (0, f64::NEG_INFINITY);
        for (i, (a, b)) in self.lo.iter().zip(&self.hi).enumerate() {
            if b - a > best.1 {
                best = (i, b - a);
            }
        }
        best
    }

    pub fn volume(&self) -> f64 {
        self.lo.iter().zip(&self.hi).map(|(a, b)| b - a).product()
    }

    pub fn contains(&self, p: &[f64]) -> bool {
        p.len() == self.dim() && p.iter().zip(self.lo.iter().zip(&self.hi)).all(|(x, (a, b))| a <= x && x <= b)
    }

    /// Lower and upper halves along dimension `d`.
    pub fn split(&self, d: usize) -> (HyperBox, HyperBox) {
        let mid = 0.5 * (self.lo[d] + self.hi[d]);
        let mut lower = self.clone();
        let mut upper = self.clone();
        lower.hi[d] = mid;
        upper.lo[d] = mid;
        (lower, upper)
    }
}

/// Open ball `{p : ||p - center||_inf < radius}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RemovedSquare {
    pub center: Vec<f64>,
    pub radius: f64,
}

impl RemovedSquare {
    pub fn contains(&self, p: &[f64]) -> bool {
        p.iter().zip(&self.center).all(|(x, c)| (x - c).abs() < self.radius)
    }

    /// Whether the closed box lies inside the open square.
    pub fn covers(&self, b: &HyperBox) -> bool {
        self.center
            .iter()
            .enumerate()
            .all(|(i, c)| c - self.radius < b.lo[i] && b.hi[i] < c + self.radius)
    }

    pub fn meets(&self, b: &HyperBox) -> bool {
        self.center
            .iter()
            .enumerate()
            .all(|(i, c)| b.hi[i] > c - self.radius && b.lo[i] < c + self.radius)
    }
}

/// Base box minus removed open squares. Squares are only ever appended.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RegionSet {
    pub base: HyperBox,
    removed: Vec<RemovedSquare>,
}

impl RegionSet {
    pub fn new(base: HyperBox) -> Self {
        Self {
            base,
            removed: Vec::new(),
        }
    }

    pub fn dim(&self) -> usize {
        self.base.dim()
    }

    pub fn removed(&self) -> &[RemovedSquare] {
        &self.removed
    }

    pub fn remove(&mut self, center: Vec<f64>, radius: f64) -> Result<()> {
        if !(radius > 0.0) {
            return Err(Error::Invalid(format!("removal radius {radius} is not positive")));
        }
        if center.len() != self.dim() {
            return Err(Error::Dimension(format!(
                "square centre has {} components, region has {}",
                center.len(),
                self.dim()
            )));
        }
        self.removed.push(RemovedSquare { center, radius });
        Ok(())
    }

    /// Value-style variant of [`RegionSet::remove`].
    pub fn with_removed(mut self, center: Vec<f64>, radius: f64) -> Result<Self> {
        self.remove(center, radius)?;
        Ok(self)
    }

    pub fn contains(&self, p: &[f64]) -> bool {
        self.base.contains(p) && !self.removed.iter().any(|s| s.contains(p))
    }

    /// Indices of the squares in `among` that intersect `cell`.
    pub(crate) fn meeting(&self, cell: &HyperBox, among: &[usize]) -> Vec<usize> {
        among
            .iter()
            .copied()
            .filter(|i| self.removed[*i].meets(cell))
            .collect()
    }

    pub(crate) fn covered(&self, cell: &HyperBox, among: &[usize]) -> bool {
        among.iter().any(|i| self.removed[*i].covers(cell))
    }

    pub(crate) fn all_indices(&self) -> Vec<usize> {
        (0..self.removed.len()).collect()
    }

    /// First remaining point found by bisection (widest edge, lower half
    /// first), or `None` once cells narrower than `min_gap` hold no free point.
    pub fn find_point(&self, min_gap: f64) -> Option<Vec<f64>> {
        let idx = self.all_indices();
        self.find_in(&self.base, &idx, min_gap)
    }

    fn find_in(&self, cell: &HyperBox, among: &[usize], min_gap: f64) -> Option<Vec<f64>> {
        let live = self.meeting(cell, among);
        if self.covered(cell, &live) {
            return None;
        }
        let c = cell.center();
        if !live.iter().any(|i| self.removed[*i].contains(&c)) {
            return Some(c);
        }
        let (d, edge) = cell.widest();
        if edge < min_gap {
            return self.free_corner(cell, &live);
        }
        let (lo, hi) = cell.split(d);
        self.find_in(&lo, &live, min_gap)
            .or_else(|| self.find_in(&hi, &live, min_gap))
    }

    /// Corners of a leaf cell catch remnants of zero width.
    fn free_corner(&self, cell: &HyperBox, live: &[usize]) -> Option<Vec<f64>> {
        let n = cell.dim();
        if n > 12 {
            return None;
        }
        (0..1usize << n).find_map(|mask| {
            let p: Vec<f64> = (0..n)
                .map(|i| if mask >> (n - 1 - i) & 1 == 0 { cell.lo[i] } else { cell.hi[i] })
                .collect();
            (!live.iter().any(|i| self.removed[*i].contains(&p))).then_some(p)
        })
    }

    /// Lower and upper bounds on the Lebesgue measure of the remaining set,
    /// from at most `depth` levels of bisection.
    pub fn remaining_measure_bounds(&self, depth: usize) -> (f64, f64) {
        let idx = self.all_indices();
        self.measure_in(&self.base, &idx, depth)
    }

    fn measure_in(&self, cell: &HyperBox, among: &[usize], depth: usize) -> (f64, f64) {
        let live = self.meeting(cell, among);
        if live.is_empty() {
            let v = cell.volume();
            return (v, v);
        }
        if self.covered(cell, &live) {
            return (0.0, 0.0);
        }
        if depth == 0 {
            return (0.0, cell.volume());
        }
        let (lo, hi) = cell.split(cell.widest().0);
        let a = self.measure_in(&lo, &live, depth - 1);
        let b = self.measure_in(&hi, &live, depth - 1);
        (a.0 + b.0, a.1 + b.1)
    }
}

/// One line of the removal log.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RemovalRecord {
    pub iteration: usize,
    pub center: Vec<f64>,
    pub radius: f64,
    /// Opponent sequence that refuted the square.
    pub counterexample: Vec<f64>,
    /// Robustness at the centre against the counterexample.
    pub rho: f64,
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub closing: bool,
}

pub fn write_jsonl<T: Serialize>(records: &[T], mut out: impl Write) -> Result<()> {
    for r in records {
        serde_json::to_writer(&mut out, r)?;
        out.write_all(b"\n")?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit(n: usize) -> RegionSet {
        RegionSet::new(HyperBox::new(vec![0.0; n], vec![1.0; n]).unwrap())
    }

    #[test]
    fn covering_square_empties() {
        let rs = unit(1).with_removed(vec![0.5], 0.6).unwrap();
        assert_eq!(rs.find_point(1e-3), None);
        assert_eq!(rs.remaining_measure_bounds(10), (0.0, 0.0));
    }

    #[test]
    fn boundary_is_kept() {
        let rs = RegionSet::new(HyperBox::new(vec![0.0], vec![3.0]).unwrap())
            .with_removed(vec![0.0], 1.0)
            .unwrap();
        assert!(rs.contains(&[1.0]));
        assert!(!rs.contains(&[0.999]));
        assert!(!rs.contains(&[3.5]));
        let (lo, hi) = rs.remaining_measure_bounds(30);
        assert!(lo <= 2.0 && 2.0 <= hi && hi - lo < 1e-8);
    }

    #[test]
    fn anti_diagonal_band() {
        let rs = unit(2)
            .with_removed(vec![0.0, 0.0], 0.5)
            .unwrap()
            .with_removed(vec![1.0, 1.0], 0.5)
            .unwrap();
        assert!(rs.contains(&[0.6, 0.2]));
        assert!(!rs.contains(&[0.2, 0.2]));
        assert!(rs.contains(&[0.5, 0.5]));
    }

    #[test]
    fn find_point_examples() {
        assert_eq!(unit(2).find_point(0.1), Some(vec![0.5, 0.5]));
        let rs = unit(1).with_removed(vec![0.25], 0.3).unwrap();
        let p = rs.find_point(1e-3).unwrap();
        assert!(rs.contains(&p) && p[0] >= 0.55);
    }

    #[test]
    fn measure_brackets() {
        let rs = unit(1).with_removed(vec![0.5], 0.25).unwrap();
        let (lo, hi) = rs.remaining_measure_bounds(12);
        assert!(lo <= 0.5 && 0.5 <= hi);
        assert_eq!(unit(2).remaining_measure_bounds(0), (1.0, 1.0));
        let rs = unit(2).with_removed(vec![0.3, 0.4], 0.17).unwrap();
        let coarse = rs.remaining_measure_bounds(4);
        let fine = rs.remaining_measure_bounds(12);
        assert!(fine.1 - fine.0 <= coarse.1 - coarse.0);
        let exact = 1.0 - 0.34 * 0.34;
        assert!(fine.0 <= exact && exact <= fine.1);
    }

    #[test]
    fn zero_radius_rejected() {
        assert!(unit(1).remove(vec![0.5], 0.0).is_err());
        assert!(unit(1).remove(vec![0.5, 0.5], 0.1).is_err());
    }
}
