use std::collections::HashMap;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use super::order::InvariantOrder;
use super::point::{box_points, cube_points, Point};
use crate::error::{Error, Result};

/// A finite subset of Z^k, stored sorted (lexicographically) with a position index.
#[derive(Clone)]
pub struct IndexSet {
    dim: usize,
    points: Vec<Point>,
    locator: Locator,
}

#[derive(Clone)]
enum Locator {
    /// Dense table over the bounding box; used when the set fills most of it.
    Dense { lo: Point, extent: Vec<i64>, slots: Vec<u32> },
    Hashed(HashMap<Point, u32>),
}

const ABSENT: u32 = u32::MAX;

impl IndexSet {
    pub fn new(dim: usize, pts: impl IntoIterator<Item = Point>) -> Result<Self> {
        Ok(Self::with_duplicates(dim, pts)?.0)
    }

    /// Builds the set and also reports how many duplicate points were dropped.
    pub fn with_duplicates(dim: usize, pts: impl IntoIterator<Item = Point>) -> Result<(Self, usize)> {
        let mut points: Vec<Point> = pts.into_iter().collect();
        for p in &points {
            if p.dim() != dim {
                return Err(Error::DimensionMismatch { expected: dim, got: p.dim() });
            }
        }
        let before = points.len();
        points.sort_unstable();
        points.dedup();
        let dups = before - points.len();
        Ok((Self::from_sorted(dim, points), dups))
    }

    fn from_sorted(dim: usize, points: Vec<Point>) -> Self {
        let locator = build_locator(dim, &points);
        IndexSet { dim, points, locator }
    }

    pub fn empty(dim: usize) -> Self {
        Self::from_sorted(dim, Vec::new())
    }

    /// K_c = [-c, c]^k.
    pub fn hypercube(c: i64, k: usize) -> Self {
        Self::from_sorted(k, cube_points(c, k))
    }

    /// The box [lo, hi] (inclusive).
    pub fn hyperrectangle(lo: &Point, hi: &Point) -> Result<Self> {
        if lo.dim() != hi.dim() {
            return Err(Error::DimensionMismatch { expected: lo.dim(), got: hi.dim() });
        }
        Ok(Self::from_sorted(lo.dim(), box_points(lo, hi)))
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Points in canonical (lexicographic) order.
    pub fn points(&self) -> &[Point] {
        &self.points
    }

    pub fn iter(&self) -> std::slice::Iter<'_, Point> {
        self.points.iter()
    }

    #[inline]
    pub fn index_of(&self, p: &Point) -> Option<usize> {
        match &self.locator {
            Locator::Hashed(m) => m.get(p).map(|&i| i as usize),
            Locator::Dense { lo, extent, slots } => {
                let mut idx: i64 = 0;
                for i in 0..self.dim {
                    let off = p.get(i) - lo.get(i);
                    if off < 0 || off >= extent[i] {
                        return None;
                    }
                    idx = idx * extent[i] + off;
                }
                match slots[idx as usize] {
                    ABSENT => None,
                    s => Some(s as usize),
                }
            }
        }
    }

    #[inline]
    pub fn contains(&self, p: &Point) -> bool {
        self.index_of(p).is_some()
    }

    /// Pointwise shift by `by`.
    pub fn translate(&self, by: &Point) -> Self {
        // translation preserves the lexicographic order
        Self::from_sorted(self.dim, self.points.iter().map(|p| *p + *by).collect())
    }

    /// (S)_{-t} = {s - t : s ∈ S}.
    pub fn recenter(&self, t: &Point) -> Self {
        self.translate(&-*t)
    }

    /// (S)^+ = {s ∈ S : s ≻ 0}.
    pub fn upper_orthant(&self, order: &InvariantOrder) -> Self {
        Self::from_sorted(self.dim, self.points.iter().copied().filter(|p| order.is_positive(p)).collect())
    }

    /// S ∩ K_c.
    pub fn intersect_cube(&self, c: i64) -> Self {
        Self::from_sorted(self.dim, self.points.iter().copied().filter(|p| p.norm_inf() <= c).collect())
    }

    pub fn filter(&self, f: impl Fn(&Point) -> bool) -> Self {
        Self::from_sorted(self.dim, self.points.iter().copied().filter(|p| f(p)).collect())
    }

    pub fn is_subset(&self, other: &IndexSet) -> bool {
        self.points.iter().all(|p| other.contains(p))
    }

    /// Lower and upper corners of the bounding box.
    pub fn bounding_box(&self) -> Option<(Point, Point)> {
        let first = *self.points.first()?;
        let (mut lo, mut hi) = (first, first);
        for p in &self.points {
            for i in 0..self.dim {
                lo.set(i, lo.get(i).min(p.get(i)));
                hi.set(i, hi.get(i).max(p.get(i)));
            }
        }
        Some((lo, hi))
    }

    /// Sup-norm diameter max_{s,t} |s - t|.
    pub fn diameter(&self) -> i64 {
        match self.bounding_box() {
            Some((lo, hi)) => (hi - lo).norm_inf(),
            None => 0,
        }
    }

    pub fn union(&self, other: &IndexSet) -> Self {
        let mut pts = self.points.clone();
        pts.extend_from_slice(&other.points);
        pts.sort_unstable();
        pts.dedup();
        Self::from_sorted(self.dim, pts)
    }
}

fn build_locator(dim: usize, points: &[Point]) -> Locator {
    if let Some(first) = points.first() {
        let (mut lo, mut hi) = (*first, *first);
        for p in points {
            for i in 0..dim {
                lo.set(i, lo.get(i).min(p.get(i)));
                hi.set(i, hi.get(i).max(p.get(i)));
            }
        }
        let extent: Vec<i64> = (0..dim).map(|i| hi.get(i) - lo.get(i) + 1).collect();
        let volume = extent.iter().try_fold(1i64, |acc, &e| acc.checked_mul(e));
        if let Some(v) = volume {
            if v as usize <= 4 * points.len() + 64 {
                let mut slots = vec![ABSENT; v as usize];
                for (n, p) in points.iter().enumerate() {
                    let mut idx = 0i64;
                    for i in 0..dim {
                        idx = idx * extent[i] + (p.get(i) - lo.get(i));
                    }
                    slots[idx as usize] = n as u32;
                }
                return Locator::Dense { lo, extent, slots };
            }
        }
    }
    Locator::Hashed(points.iter().enumerate().map(|(i, p)| (*p, i as u32)).collect())
}

impl PartialEq for IndexSet {
    fn eq(&self, o: &Self) -> bool {
        self.dim == o.dim && self.points == o.points
    }
}
impl Eq for IndexSet {}

impl std::fmt::Debug for IndexSet {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_set().entries(self.points.iter()).finish()
    }
}

impl Serialize for IndexSet {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        #[derive(Serialize)]
        struct Repr<'a> {
            k: usize,
            points: &'a [Point],
        }
        Repr { k: self.dim, points: &self.points }.serialize(s)
    }
}

impl<'de> Deserialize<'de> for IndexSet {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        struct Repr {
            k: usize,
            points: Vec<Point>,
        }
        let r = Repr::deserialize(d)?;
        IndexSet::new(r.k, r.points).map_err(serde::de::Error::custom)
    }
}

/// Υ^{(t,p)} = ((Λ)_{-t} ∩ K_p)^+, as a canonical sorted point list.
pub fn window_shape(lambda: &IndexSet, t: &Point, p: i64, order: &InvariantOrder) -> Result<IndexSet> {
    if !lambda.contains(t) {
        return Err(Error::NotInIndexSet(*t));
    }
    let offsets: Vec<Point> = cube_points(p, lambda.dim()).into_iter().filter(|u| order.is_positive(u)).collect();
    Ok(IndexSet::from_sorted(lambda.dim(), window_key(lambda, t, &offsets)))
}

/// (Λ)_{-t} ∩ K_p, always containing 0 when t ∈ Λ.
pub fn full_window(lambda: &IndexSet, t: &Point, p: i64) -> Result<IndexSet> {
    if !lambda.contains(t) {
        return Err(Error::NotInIndexSet(*t));
    }
    let offsets = cube_points(p, lambda.dim());
    Ok(IndexSet::from_sorted(lambda.dim(), window_key(lambda, t, &offsets)))
}

/// Offsets `u` (in the given, sorted order) with t + u ∈ Λ.
#[inline]
pub(crate) fn window_key(lambda: &IndexSet, t: &Point, offsets: &[Point]) -> Vec<Point> {
    offsets.iter().copied().filter(|u| lambda.contains(&(*t + *u))).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn line(a: i64, b: i64) -> IndexSet {
        IndexSet::new(1, (a..=b).map(|i| Point::of(&[i]))).unwrap()
    }

    #[test]
    fn window_shape_examples() {
        let lam = line(1, 10);
        let o = InvariantOrder::lexicographic(1);
        let w = window_shape(&lam, &Point::of(&[5]), 2, &o).unwrap();
        assert_eq!(w.points(), &[Point::of(&[1]), Point::of(&[2])]);
        assert!(window_shape(&lam, &Point::of(&[10]), 2, &o).unwrap().is_empty());
        assert!(window_shape(&lam, &Point::of(&[11]), 2, &o).is_err());
    }

    #[test]
    fn translate_and_orthant() {
        let s = IndexSet::new(2, [Point::of(&[1, 1])]).unwrap();
        assert_eq!(s.recenter(&Point::of(&[1, 1])).points(), &[Point::of(&[0, 0])]);
        let t = Point::of(&[3, -4]);
        assert_eq!(s.translate(&t).translate(&-t), s);
        let o = InvariantOrder::lexicographic(2);
        let u = IndexSet::new(2, [Point::of(&[0, 1]), Point::of(&[0, -1]), Point::of(&[1, 0]), Point::of(&[0, 0])]).unwrap();
        assert_eq!(u.upper_orthant(&o).points(), &[Point::of(&[0, 1]), Point::of(&[1, 0])]);
        assert!(IndexSet::empty(2).upper_orthant(&o).is_empty());
    }

    #[test]
    fn dense_and_hashed_lookup_agree() {
        let dense = IndexSet::hypercube(3, 2);
        assert!(matches!(dense.locator, Locator::Dense { .. }));
        let sparse = IndexSet::new(2, [Point::of(&[0, 0]), Point::of(&[1000, 1000])]).unwrap();
        assert!(matches!(sparse.locator, Locator::Hashed(_)));
        assert!(dense.contains(&Point::of(&[-3, 3])));
        assert!(!dense.contains(&Point::of(&[-4, 3])));
        assert_eq!(sparse.index_of(&Point::of(&[1000, 1000])), Some(1));
        assert_eq!(dense.index_of(&Point::of(&[-3, -2])), Some(1));
    }

    #[test]
    fn duplicates_counted() {
        let (s, d) = IndexSet::with_duplicates(1, [Point::of(&[1]), Point::of(&[1]), Point::of(&[2])]).unwrap();
        assert_eq!((s.len(), d), (2, 1));
    }
}
