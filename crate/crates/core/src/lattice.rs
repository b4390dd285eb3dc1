//! Geometry of the hypercubic lattice Z^d.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A vertex of Z^d. Serializes as a JSON array of integers.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Point(Vec<i64>);

impl Point {
    pub fn new(coords: Vec<i64>) -> Self {
        Point(coords)
    }

    pub fn origin(dim: usize) -> Self {
        Point(vec![0; dim])
    }

    /// `scale * e_axis`.
    pub fn on_axis(dim: usize, axis: usize, scale: i64) -> Self {
        let mut coords = vec![0; dim];
        coords[axis] = scale;
        Point(coords)
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn coords(&self) -> &[i64] {
        &self.0
    }

    pub fn offset(&self, axis: usize, delta: i64) -> Point {
        let mut coords = self.0.clone();
        coords[axis] += delta;
        Point(coords)
    }

    /// The 2d nearest neighbours in the order +e_0, -e_0, +e_1, -e_1, ...
    pub fn neighbors(&self) -> Vec<Point> {
        (0..self.dim())
            .flat_map(|axis| [self.offset(axis, 1), self.offset(axis, -1)])
            .collect()
    }

    pub fn l1_distance(&self, other: &Point) -> i64 {
        self.0.iter().zip(&other.0).map(|(a, b)| (a - b).abs()).sum()
    }

    pub fn is_adjacent(&self, other: &Point) -> bool {
        self.dim() == other.dim() && self.l1_distance(other) == 1
    }
}

impl fmt::Display for Point {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (i, c) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{c}")?;
        }
        write!(f, ")")
    }
}

impl From<Vec<i64>> for Point {
    fn from(coords: Vec<i64>) -> Self {
        Point(coords)
    }
}

/// An undirected nearest-neighbour bond `{base, base + e_axis}`.
///
/// The stored base is always the lexicographically smaller endpoint, so both
/// orientations of an edge produce the same value.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Bond {
    base: Point,
    axis: usize,
}

impl Bond {
    pub fn base(&self) -> &Point {
        &self.base
    }

    pub fn axis(&self) -> usize {
        self.axis
    }

    pub fn endpoints(&self) -> (Point, Point) {
        (self.base.clone(), self.base.offset(self.axis, 1))
    }
}

/// Canonical form of the bond between adjacent `u` and `v`.
pub fn canonical_bond(u: &Point, v: &Point) -> Result<Bond> {
    check_same_dim(u, v)?;
    if !u.is_adjacent(v) {
        return Err(Error::InvalidBond(u.to_string(), v.to_string()));
    }
    let axis = (0..u.dim()).find(|&i| u.0[i] != v.0[i]).unwrap();
    let base = if u.0[axis] < v.0[axis] { u } else { v };
    Ok(Bond {
        base: base.clone(),
        axis,
    })
}

/// True iff consecutive vertices are unit steps apart and no vertex repeats.
pub fn is_self_avoiding(vertices: &[Point]) -> Result<bool> {
    let first = vertices
        .first()
        .ok_or_else(|| Error::InvalidArgument("empty vertex list".into()))?;
    if first.dim() == 0 {
        return Err(Error::InvalidArgument("points must have dimension >= 1".into()));
    }
    for p in vertices {
        check_same_dim(first, p)?;
    }
    if vertices.windows(2).any(|w| !w[0].is_adjacent(&w[1])) {
        return Ok(false);
    }
    let mut seen = std::collections::HashSet::with_capacity(vertices.len());
    Ok(vertices.iter().all(|p| seen.insert(p)))
}

fn check_same_dim(a: &Point, b: &Point) -> Result<()> {
    if a.dim() == b.dim() {
        Ok(())
    } else {
        Err(Error::DimensionMismatch {
            expected: a.dim(),
            found: b.dim(),
        })
    }
}

/// A validated self-avoiding path `(w_0, ..., w_n)`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Walk {
    vertices: Vec<Point>,
}

impl Walk {
    pub fn new(vertices: Vec<Point>) -> Result<Self> {
        if is_self_avoiding(&vertices)? {
            Ok(Walk { vertices })
        } else {
            Err(Error::InvalidArgument("vertices do not form a self-avoiding walk".into()))
        }
    }

    pub fn len(&self) -> usize {
        self.vertices.len() - 1
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn vertices(&self) -> &[Point] {
        &self.vertices
    }

    pub fn start(&self) -> &Point {
        &self.vertices[0]
    }

    pub fn end(&self) -> &Point {
        self.vertices.last().unwrap()
    }

    /// `b_j = (w_{j-1}, w_j)` in canonical form, j = 1..n.
    pub fn bonds(&self) -> Vec<Bond> {
        self.vertices
            .windows(2)
            .map(|w| canonical_bond(&w[0], &w[1]).expect("walk steps are adjacent"))
            .collect()
    }

    pub fn reversed(&self) -> Walk {
        let mut vertices = self.vertices.clone();
        vertices.reverse();
        Walk { vertices }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn p(c: &[i64]) -> Point {
        Point::new(c.to_vec())
    }

    #[test]
    fn neighbor_order_and_count() {
        assert_eq!(p(&[0]).neighbors(), vec![p(&[1]), p(&[-1])]);
        let n2 = p(&[0, 0]).neighbors();
        assert_eq!(n2.len(), 4);
        assert!(n2.iter().all(|q| q.l1_distance(&p(&[0, 0])) == 1));
        assert_eq!(p(&[3, -1, 7]).neighbors().len(), 6);
    }

    #[test]
    fn canonical_bond_examples() {
        let b = canonical_bond(&p(&[0, 0]), &p(&[1, 0])).unwrap();
        assert_eq!(b.base(), &p(&[0, 0]));
        assert_eq!(b.axis(), 0);
        assert_eq!(canonical_bond(&p(&[1, 0]), &p(&[0, 0])).unwrap(), b);
        assert!(matches!(
            canonical_bond(&p(&[0, 0]), &p(&[1, 1])),
            Err(Error::InvalidBond(..))
        ));
        assert!(matches!(
            canonical_bond(&p(&[0, 0]), &p(&[1])),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn self_avoidance_examples() {
        assert!(is_self_avoiding(&[p(&[0]), p(&[1]), p(&[2])]).unwrap());
        assert!(!is_self_avoiding(&[p(&[0]), p(&[1]), p(&[0])]).unwrap());
        let square = [p(&[0, 0]), p(&[1, 0]), p(&[1, 1]), p(&[0, 1]), p(&[0, 0])];
        assert!(!is_self_avoiding(&square).unwrap());
        assert!(!is_self_avoiding(&[p(&[0, 0]), p(&[2, 0])]).unwrap());
        assert!(is_self_avoiding(&[p(&[0, 0]), p(&[0])]).is_err());
        assert!(is_self_avoiding(&[]).is_err());
    }

    #[test]
    fn walk_bonds_and_json() {
        let w = Walk::new(vec![p(&[0, 0]), p(&[-1, 0]), p(&[-1, 1])]).unwrap();
        assert_eq!(w.len(), 2);
        let bonds = w.bonds();
        assert_eq!(bonds[0].base(), &p(&[-1, 0]));
        assert_eq!(bonds[1].axis(), 1);
        assert_eq!(serde_json::to_string(&p(&[1, -2])).unwrap(), "[1,-2]");
        assert_eq!(
            serde_json::to_string(&bonds[0]).unwrap(),
            r#"{"base":[-1,0],"axis":0}"#
        );
        let mut rev = w.reversed().bonds();
        rev.reverse();
        assert_eq!(rev, bonds);
    }

    proptest! {
        #[test]
        fn canonical_bond_is_symmetric(
            coords in prop::collection::vec(-50i64..50, 1..5),
            axis_seed in 0usize..8,
            sign in prop::bool::ANY,
        ) {
            let u = Point::new(coords);
            let axis = axis_seed % u.dim();
            let v = u.offset(axis, if sign { 1 } else { -1 });
            let a = canonical_bond(&u, &v).unwrap();
            let b = canonical_bond(&v, &u).unwrap();
            prop_assert_eq!(&a, &b);
            let (x, y) = a.endpoints();
            prop_assert_eq!(canonical_bond(&x, &y).unwrap(), a);
        }
    }
}
