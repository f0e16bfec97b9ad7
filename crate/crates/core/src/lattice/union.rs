use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use super::order::InvariantOrder;
use super::point::{cube_points, Point};
use super::sublattice::Sublattice;
use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Component {
    pub lattice: Sublattice,
    pub offset: Point,
}

/// Restriction {p : p ≻ anchor}; anchor 0 gives the upper orthant.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Halfspace {
    pub order: InvariantOrder,
    pub anchor: Point,
}

/// Exact representation of a possibly infinite subset of Z^k: a finite union of
/// translated sublattices plus isolated points, optionally restricted to an
/// order half-space. Components are expected to be pairwise disjoint; see
/// [`LatticeUnion::check_disjoint`].
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LatticeUnion {
    pub dim: usize,
    pub components: Vec<Component>,
    pub isolated: Vec<Point>,
    pub halfspace: Option<Halfspace>,
}

impl LatticeUnion {
    pub fn empty(dim: usize) -> Self {
        LatticeUnion { dim, components: Vec::new(), isolated: Vec::new(), halfspace: None }
    }

    pub fn from_components(dim: usize, components: Vec<Component>, isolated: Vec<Point>) -> Self {
        let mut isolated = isolated;
        isolated.sort_unstable();
        isolated.dedup();
        LatticeUnion { dim, components, isolated, halfspace: None }
    }

    /// Same set intersected with {p ≻ 0}.
    pub fn positive(mut self, order: &InvariantOrder) -> Self {
        self.halfspace = Some(Halfspace { order: order.clone(), anchor: Point::zero(self.dim) });
        self
    }

    pub fn without_halfspace(mut self) -> Self {
        self.halfspace = None;
        self
    }

    pub fn is_empty_repr(&self) -> bool {
        self.components.is_empty() && self.isolated.is_empty()
    }

    #[inline]
    fn in_halfspace(&self, p: &Point) -> bool {
        match &self.halfspace {
            None => true,
            Some(h) => h.order.is_positive(&(*p - h.anchor)),
        }
    }

    /// Exact membership.
    pub fn contains(&self, p: &Point) -> bool {
        self.in_halfspace(p)
            && (self.isolated.binary_search(p).is_ok()
                || self.components.iter().any(|c| c.lattice.contains_translate(&c.offset, p)))
    }

    /// S ∩ K_r by scanning the cube with the membership oracle.
    pub fn intersect_cube(&self, r: i64) -> Vec<Point> {
        cube_points(r, self.dim).into_iter().filter(|p| self.contains(p)).collect()
    }

    /// S ∩ K_r by enumerating each component separately (must agree with
    /// [`Self::intersect_cube`]; duplicates from overlapping components collapse).
    pub fn enumerate_cube(&self, r: i64) -> Vec<Point> {
        let mut set = BTreeSet::new();
        for c in &self.components {
            set.extend(c.lattice.points_in_window(&c.offset, r).into_iter().filter(|p| self.in_halfspace(p)));
        }
        set.extend(self.isolated.iter().copied().filter(|p| p.norm_inf() <= r && self.in_halfspace(p)));
        set.into_iter().collect()
    }

    /// Errors if two components (or a component and an isolated point) share a point of K_r.
    pub fn check_disjoint(&self, r: i64) -> Result<()> {
        let mut seen = BTreeSet::new();
        let mut pieces: Vec<Vec<Point>> =
            self.components.iter().map(|c| c.lattice.points_in_window(&c.offset, r)).collect();
        pieces.push(self.isolated.iter().copied().filter(|p| p.norm_inf() <= r).collect());
        for (i, piece) in pieces.iter().enumerate() {
            for p in piece.iter().filter(|p| self.in_halfspace(p)) {
                if !seen.insert(*p) {
                    return Err(Error::PartitionCoverage(format!("component {i} overlaps an earlier one at {p}")));
                }
            }
        }
        Ok(())
    }

    /// Pointwise shift by `by` (the half-space anchor moves along).
    pub fn translate(&self, by: &Point) -> Self {
        LatticeUnion {
            dim: self.dim,
            components: self
                .components
                .iter()
                .map(|c| Component { lattice: c.lattice.clone(), offset: c.offset + *by })
                .collect(),
            isolated: self.isolated.iter().map(|p| *p + *by).collect(),
            halfspace: self.halfspace.as_ref().map(|h| Halfspace { order: h.order.clone(), anchor: h.anchor + *by }),
        }
    }

    /// ((S)_{-z})^+. Exact when S carries no half-space or z ⪰ its anchor,
    /// since then u ≻ 0 already implies u + z ≻ anchor.
    pub fn recenter_positive(&self, z: &Point, order: &InvariantOrder) -> Result<Self> {
        if let Some(h) = &self.halfspace {
            if order.cmp(z, &h.anchor) == std::cmp::Ordering::Less {
                return Err(Error::InvalidArgument(format!("recentering point {z} precedes the half-space anchor")));
            }
        }
        Ok(self.translate(&-*z).without_halfspace().positive(order))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(c: &[i64]) -> Point {
        Point::of(c)
    }

    #[test]
    fn shifted_even_lattice() {
        let two_z = Sublattice::from_generators(1, &[p(&[2])]).unwrap();
        let u = LatticeUnion::from_components(1, vec![Component { lattice: two_z, offset: p(&[0]) }], vec![]);
        let s = u.translate(&p(&[1]));
        assert_eq!(s.intersect_cube(3), vec![p(&[-3]), p(&[-1]), p(&[1]), p(&[3])]);
    }

    #[test]
    fn scan_and_enumeration_agree() {
        let l = Sublattice::from_generators(2, &[p(&[1, 0])]).unwrap();
        let o = InvariantOrder::permuted(vec![1, 0]).unwrap();
        let u = LatticeUnion::from_components(
            2,
            vec![
                Component { lattice: l.clone(), offset: p(&[0, 0]) },
                Component { lattice: l, offset: p(&[0, 1]) },
            ],
            vec![p(&[3, 3])],
        )
        .positive(&o);
        assert_eq!(u.intersect_cube(4), u.enumerate_cube(4));
        assert!(u.check_disjoint(6).is_ok());
        assert!(!u.contains(&p(&[-1, 0])));
        assert!(u.contains(&p(&[-7, 1])));
    }

    #[test]
    fn overlap_detected() {
        let z = Sublattice::full(1);
        let u = LatticeUnion::from_components(1, vec![Component { lattice: z, offset: p(&[0]) }], vec![p(&[2])]);
        assert!(u.check_disjoint(3).is_err());
    }
}
