//! Exact backtracking enumeration of self-avoiding walks.
//!
//! [`fold_walks`] drives a [`WalkVisitor`] through every SAW of length
//! `1..=n_max` from an origin. Visitors see `extend`/`retract` events for
//! incremental path state (e.g. running conductance sums) and a `visit` event
//! once per walk. With `split_depth > 0` the walks of length `split_depth` are
//! collected serially and each subtree is enumerated as an independent rayon
//! task with a forked visitor; results are merged back in prefix order.

use std::collections::HashSet;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::Point;

/// Box sizes above this many cells use a hashed occupancy set.
const DENSE_LIMIT: u64 = 1 << 27;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct EnumerationConfig {
    pub dim: usize,
    pub n_max: usize,
    pub split_depth: usize,
}

impl EnumerationConfig {
    /// Serial enumeration.
    pub fn new(dim: usize, n_max: usize) -> Result<Self> {
        Self::with_split(dim, n_max, 0)
    }

    pub fn with_split(dim: usize, n_max: usize, split_depth: usize) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidArgument("dimension must be >= 1".into()));
        }
        if split_depth > n_max {
            return Err(Error::InvalidArgument(format!(
                "split depth {split_depth} exceeds n_max {n_max}"
            )));
        }
        Ok(EnumerationConfig {
            dim,
            n_max,
            split_depth,
        })
    }

    /// Parallel enumeration with a split depth suited to the dimension.
    pub fn parallel(dim: usize, n_max: usize) -> Result<Self> {
        let split = match dim {
            1 => 1,
            2 => 3,
            _ => 2,
        };
        Self::with_split(dim, n_max, split.min(n_max))
    }

    pub fn with_n_max(&self, n_max: usize) -> Result<Self> {
        Self::with_split(self.dim, n_max, self.split_depth.min(n_max))
    }

    /// Upper bound `sum_{n=1}^{n_max} 2d (2d-1)^(n-1)` on the number of walk
    /// visits one enumeration performs.
    pub fn visit_bound(&self) -> f64 {
        walk_visit_bound(self.dim, self.n_max)
    }
}

pub fn walk_visit_bound(dim: usize, n_max: usize) -> f64 {
    let q = 2.0 * dim as f64;
    (1..=n_max).map(|n| q * (q - 1.0).powi(n as i32 - 1)).sum()
}

/// Default cap on walk visits per run.
pub const DEFAULT_BUDGET: f64 = 1e8;

pub fn check_budget(needed: f64, budget: f64) -> Result<()> {
    if needed > budget {
        Err(Error::BudgetExceeded { needed, budget })
    } else {
        Ok(())
    }
}

/// The step that produced (or is about to be undone from) the current walk.
#[derive(Debug)]
pub struct Step<'a> {
    /// Walk length after the step.
    pub length: usize,
    pub axis: usize,
    /// Step along `+e_axis` when true.
    pub positive: bool,
    /// Coordinates of the new endpoint.
    pub endpoint: &'a [i64],
    /// Canonical base of the bond traversed by the step.
    pub bond_base: &'a [i64],
    /// Index of the endpoint in the enumeration box (see [`WalkBox`]).
    pub site: u64,
}

pub trait WalkVisitor: Send + Sync + Sized {
    fn extend(&mut self, step: &Step<'_>);
    fn retract(&mut self, step: &Step<'_>);
    /// Called once for each walk, right after the `extend` that created it.
    fn visit(&mut self, step: &Step<'_>);
    /// A visitor with the same parameters, empty accumulators and empty path
    /// state.
    fn fork(&self) -> Self;
    fn merge(&mut self, other: Self);
}

/// The L-infinity box of radius `n_max` around an origin, which contains
/// every walk of length at most `n_max`.
#[derive(Clone, Debug)]
pub struct WalkBox {
    origin: Vec<i64>,
    radius: i64,
    side: u64,
    strides: Vec<u64>,
    cells: u128,
}

impl WalkBox {
    pub fn new(origin: &Point, radius: usize) -> Self {
        let side = 2 * radius as u64 + 1;
        let mut strides = Vec::with_capacity(origin.dim());
        let mut acc: u128 = 1;
        for _ in 0..origin.dim() {
            strides.push(acc.min(u64::MAX as u128) as u64);
            acc = acc.saturating_mul(side as u128);
        }
        WalkBox {
            origin: origin.coords().to_vec(),
            radius: radius as i64,
            side,
            strides,
            cells: acc,
        }
    }

    pub fn dim(&self) -> usize {
        self.origin.len()
    }

    pub fn origin_site(&self) -> u64 {
        self.strides.iter().map(|s| s * self.radius as u64).sum()
    }

    pub fn site(&self, p: &[i64]) -> Option<u64> {
        if p.len() != self.dim() {
            return None;
        }
        let mut site = 0u64;
        for ((c, o), s) in p.iter().zip(&self.origin).zip(&self.strides) {
            let rel = c - o + self.radius;
            if rel < 0 || rel >= self.side as i64 {
                return None;
            }
            site += rel as u64 * s;
        }
        Some(site)
    }

    pub fn point(&self, site: u64) -> Point {
        let mut rest = site;
        let coords = self
            .origin
            .iter()
            .map(|o| {
                let rel = (rest % self.side) as i64;
                rest /= self.side;
                o + rel - self.radius
            })
            .collect();
        Point::new(coords)
    }

    fn stride(&self, axis: usize) -> u64 {
        self.strides[axis]
    }
}

enum Occupancy {
    Dense(Vec<bool>),
    Sparse(HashSet<u64>),
}

impl Occupancy {
    fn new(geom: &WalkBox) -> Self {
        if geom.cells <= DENSE_LIMIT as u128 {
            Occupancy::Dense(vec![false; geom.cells as usize])
        } else {
            Occupancy::Sparse(HashSet::new())
        }
    }

    #[inline]
    fn insert(&mut self, site: u64) -> bool {
        match self {
            Occupancy::Dense(v) => !std::mem::replace(&mut v[site as usize], true),
            Occupancy::Sparse(s) => s.insert(site),
        }
    }

    #[inline]
    fn remove(&mut self, site: u64) {
        match self {
            Occupancy::Dense(v) => v[site as usize] = false,
            Occupancy::Sparse(s) => {
                s.remove(&site);
            }
        }
    }
}

/// Current walk plus its occupancy marks.
struct Walker<'g> {
    geom: &'g WalkBox,
    occupied: Occupancy,
    endpoint: Vec<i64>,
    bond_base: Vec<i64>,
    sites: Vec<u64>,
    dirs: Vec<u8>,
}

impl<'g> Walker<'g> {
    fn new(geom: &'g WalkBox) -> Self {
        let mut occupied = Occupancy::new(geom);
        let start = geom.origin_site();
        occupied.insert(start);
        Walker {
            geom,
            occupied,
            endpoint: geom.origin.clone(),
            bond_base: geom.origin.clone(),
            sites: vec![start],
            dirs: Vec::new(),
        }
    }

    fn len(&self) -> usize {
        self.dirs.len()
    }

    /// Attempts the step in direction `dir` (`2 * axis + (0 | 1)`, 0 = +).
    #[inline]
    fn try_step(&mut self, dir: u8) -> bool {
        let axis = (dir >> 1) as usize;
        let positive = dir & 1 == 0;
        let here = *self.sites.last().unwrap();
        let stride = self.geom.stride(axis);
        let next = if positive { here + stride } else { here - stride };
        if !self.occupied.insert(next) {
            return false;
        }
        self.sites.push(next);
        self.dirs.push(dir);
        self.endpoint[axis] += if positive { 1 } else { -1 };
        true
    }

    #[inline]
    fn undo(&mut self) {
        let dir = self.dirs.pop().unwrap();
        let site = self.sites.pop().unwrap();
        self.occupied.remove(site);
        let axis = (dir >> 1) as usize;
        self.endpoint[axis] -= if dir & 1 == 0 { 1 } else { -1 };
    }

    /// Event description of the last step.
    #[inline]
    fn last_step(&mut self) -> Step<'_> {
        let dir = *self.dirs.last().unwrap();
        let axis = (dir >> 1) as usize;
        let positive = dir & 1 == 0;
        self.bond_base.copy_from_slice(&self.endpoint);
        if positive {
            self.bond_base[axis] -= 1;
        }
        Step {
            length: self.dirs.len(),
            axis,
            positive,
            endpoint: &self.endpoint,
            bond_base: &self.bond_base,
            site: *self.sites.last().unwrap(),
        }
    }

    /// Enumerates all extensions of the current walk up to length `limit`,
    /// handing every walk of length exactly `limit` to `at_limit`.
    fn explore<V: WalkVisitor>(
        &mut self,
        visitor: &mut V,
        limit: usize,
        mut at_limit: impl FnMut(&[u8]),
    ) {
        let floor = self.len();
        let directions = 2 * self.geom.dim() as u8;
        if floor >= limit {
            return;
        }
        let mut next: Vec<u8> = Vec::with_capacity(limit - floor + 1);
        next.push(0);
        loop {
            let level = self.len() - floor;
            let dir = next[level];
            if self.len() < limit && dir < directions {
                next[level] += 1;
                if self.try_step(dir) {
                    let step = self.last_step();
                    visitor.extend(&step);
                    visitor.visit(&step);
                    if self.len() == limit {
                        at_limit(&self.dirs);
                    }
                    next.push(0);
                }
            } else {
                if level == 0 {
                    break;
                }
                let step = self.last_step();
                visitor.retract(&step);
                self.undo();
                next.pop();
            }
        }
    }
}

/// Visits every SAW from `origin` with `1 <= |w| <= n_max` exactly once.
pub fn fold_walks<V: WalkVisitor>(
    cfg: &EnumerationConfig,
    origin: &Point,
    mut visitor: V,
) -> Result<V> {
    if origin.dim() != cfg.dim {
        return Err(Error::DimensionMismatch {
            expected: cfg.dim,
            found: origin.dim(),
        });
    }
    let geom = WalkBox::new(origin, cfg.n_max);
    let mut walker = Walker::new(&geom);
    if cfg.split_depth == 0 {
        walker.explore(&mut visitor, cfg.n_max, |_| {});
        return Ok(visitor);
    }

    let mut prefixes: Vec<Vec<u8>> = Vec::new();
    walker.explore(&mut visitor, cfg.split_depth, |dirs| prefixes.push(dirs.to_vec()));
    drop(walker);

    let prototype = &visitor;
    let parts: Vec<V> = prefixes
        .par_iter()
        .map_init(
            || Walker::new(&geom),
            |walker, prefix| {
                let mut part = prototype.fork();
                for &dir in prefix {
                    let fresh = walker.try_step(dir);
                    debug_assert!(fresh, "prefix replay hit an occupied site");
                    part.extend(&walker.last_step());
                }
                walker.explore(&mut part, cfg.n_max, |_| {});
                for _ in prefix {
                    walker.undo();
                }
                part
            },
        )
        .collect();
    for part in parts {
        visitor.merge(part);
    }
    Ok(visitor)
}

/// Per-length values, index `n = 0..=n_max`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SeriesByLength<T> {
    pub values: Vec<T>,
}

impl<T: Copy + std::fmt::Display> SeriesByLength<T> {
    pub fn n_max(&self) -> usize {
        self.values.len().saturating_sub(1)
    }

    pub fn get(&self, n: usize) -> Option<T> {
        self.values.get(n).copied()
    }

    /// CSV with header `n,<column>`, one row per length.
    pub fn to_csv(&self, column: &str) -> String {
        let mut out = format!("n,{column}\n");
        for (n, v) in self.values.iter().enumerate() {
            out.push_str(&format!("{n},{v}\n"));
        }
        out
    }
}

#[derive(Clone, Debug)]
struct CountVisitor {
    counts: Vec<u64>,
}

impl WalkVisitor for CountVisitor {
    fn extend(&mut self, _: &Step<'_>) {}
    fn retract(&mut self, _: &Step<'_>) {}
    fn visit(&mut self, step: &Step<'_>) {
        self.counts[step.length] += 1;
    }
    fn fork(&self) -> Self {
        CountVisitor {
            counts: vec![0; self.counts.len()],
        }
    }
    fn merge(&mut self, other: Self) {
        for (a, b) in self.counts.iter_mut().zip(other.counts) {
            *a += b;
        }
    }
}

/// Exact `c(n)` for `n = 0..=n_max`.
pub fn count_walks(cfg: &EnumerationConfig) -> Result<SeriesByLength<u64>> {
    let mut counts = vec![0; cfg.n_max + 1];
    counts[0] = 1;
    let folded = fold_walks(cfg, &Point::origin(cfg.dim), CountVisitor { counts })?;
    Ok(SeriesByLength {
        values: folded.counts,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::{canonical_bond, is_self_avoiding};

    /// Filter-all-step-sequences oracle: `(2d)^n` sequences per length.
    fn brute_force_counts(dim: usize, n_max: usize) -> Vec<u64> {
        let mut counts = vec![0u64; n_max + 1];
        counts[0] = 1;
        let q = 2 * dim;
        #[allow(clippy::needless_range_loop)]
        for n in 1..=n_max {
            let total = q.pow(n as u32);
            for code in 0..total {
                let mut c = code;
                let mut path = vec![Point::origin(dim)];
                for _ in 0..n {
                    let dir = c % q;
                    c /= q;
                    let next = path.last().unwrap().neighbors()[dir].clone();
                    path.push(next);
                }
                if is_self_avoiding(&path).unwrap() {
                    counts[n] += 1;
                }
            }
        }
        counts
    }

    #[test]
    fn small_counts_match_examples() {
        let d1 = count_walks(&EnumerationConfig::new(1, 5).unwrap()).unwrap();
        assert_eq!(d1.values, vec![1, 2, 2, 2, 2, 2]);
        let d2 = count_walks(&EnumerationConfig::new(2, 4).unwrap()).unwrap();
        assert_eq!(d2.values, vec![1, 4, 12, 36, 100]);
        let d3 = count_walks(&EnumerationConfig::new(3, 3).unwrap()).unwrap();
        assert_eq!(d3.values, vec![1, 6, 30, 150]);
    }

    #[test]
    fn counts_match_brute_force_oracle() {
        for (dim, n) in [(1, 8), (2, 8), (3, 6)] {
            let fast = count_walks(&EnumerationConfig::new(dim, n).unwrap()).unwrap();
            assert_eq!(fast.values, brute_force_counts(dim, n), "d={dim}");
        }
    }

    #[test]
    fn first_two_lengths_closed_form() {
        for dim in 1..=5 {
            let c = count_walks(&EnumerationConfig::new(dim, 2).unwrap()).unwrap();
            let q = 2 * dim as u64;
            assert_eq!(c.values[1], q);
            assert_eq!(c.values[2], q * (q - 1));
        }
    }

    #[test]
    fn split_depth_does_not_change_counts() {
        let serial = count_walks(&EnumerationConfig::new(2, 9).unwrap()).unwrap();
        for split in 1..=3 {
            let par = count_walks(&EnumerationConfig::with_split(2, 9, split).unwrap()).unwrap();
            assert_eq!(par, serial);
        }
    }

    #[derive(Clone)]
    struct Recorder {
        walks: Vec<Vec<Point>>,
        path: Vec<Point>,
        bond_ok: bool,
    }

    impl WalkVisitor for Recorder {
        fn extend(&mut self, s: &Step<'_>) {
            let prev = self.path.last().unwrap().clone();
            let next = Point::new(s.endpoint.to_vec());
            let bond = canonical_bond(&prev, &next).unwrap();
            self.bond_ok &= bond.base().coords() == s.bond_base && bond.axis() == s.axis;
            self.path.push(next);
        }
        fn retract(&mut self, _: &Step<'_>) {
            self.path.pop();
        }
        fn visit(&mut self, _: &Step<'_>) {
            self.walks.push(self.path.clone());
        }
        fn fork(&self) -> Self {
            Recorder {
                walks: Vec::new(),
                path: vec![self.path[0].clone()],
                bond_ok: true,
            }
        }
        fn merge(&mut self, other: Self) {
            self.walks.extend(other.walks);
            self.bond_ok &= other.bond_ok;
        }
    }

    #[test]
    fn visited_walks_are_distinct_saws_with_canonical_bonds() {
        let origin = Point::new(vec![2, -3]);
        for split in 0..=2 {
            let cfg = EnumerationConfig::with_split(2, 5, split).unwrap();
            let rec = Recorder {
                walks: Vec::new(),
                path: vec![origin.clone()],
                bond_ok: true,
            };
            let rec = fold_walks(&cfg, &origin, rec).unwrap();
            assert!(rec.bond_ok);
            assert!(rec.walks.iter().all(|w| is_self_avoiding(w).unwrap()));
            let unique: HashSet<_> = rec.walks.iter().collect();
            assert_eq!(unique.len(), rec.walks.len());
            assert_eq!(rec.walks.len(), 4 + 12 + 36 + 100 + 284);
        }
    }

    #[test]
    fn box_sites_round_trip() {
        let g = WalkBox::new(&Point::new(vec![5, -1, 0]), 3);
        let p = Point::new(vec![7, -4, 3]);
        let s = g.site(p.coords()).unwrap();
        assert_eq!(g.point(s), p);
        assert_eq!(g.point(g.origin_site()), Point::new(vec![5, -1, 0]));
        assert!(g.site(&[9, 0, 0]).is_none());
    }

    #[test]
    fn split_depth_validation() {
        assert!(EnumerationConfig::with_split(2, 2, 3).is_err());
        assert!(EnumerationConfig::new(0, 2).is_err());
        let c = count_walks(&EnumerationConfig::new(3, 0).unwrap()).unwrap();
        assert_eq!(c.values, vec![1]);
    }

    #[test]
    fn visit_bound_dominates_counts() {
        let cfg = EnumerationConfig::new(2, 8).unwrap();
        let c = count_walks(&cfg).unwrap();
        let total: u64 = c.values[1..].iter().sum();
        assert!(cfg.visit_bound() >= total as f64);
    }
}
