//! Integer geometry on Z^k: points, invariant orders, finite index sets,
//! sublattices in Hermite normal form and exact unions of translated lattices.

mod index_set;
mod order;
mod point;
mod pointlist;
mod sublattice;
mod union;

pub use index_set::{full_window, window_shape, IndexSet};
pub(crate) use index_set::window_key;
pub use order::{InvariantOrder, OrderKind};
pub use point::{box_points, cube_points, Point, MAX_DIM};
pub use pointlist::{format_point_list, parse_point_list, ParsedPoints};
pub use sublattice::Sublattice;
pub use union::{Component, Halfspace, LatticeUnion};

use std::cmp::Ordering;

use crate::error::Result;

pub fn compare(order: &InvariantOrder, s: &Point, t: &Point) -> Result<Ordering> {
    order.compare(s, t)
}

/// K_c as an index set.
pub fn hypercube(c: i64, k: usize) -> IndexSet {
    IndexSet::hypercube(c, k)
}

/// p ∈ L + offset.
pub fn lattice_membership(l: &Sublattice, offset: &Point, p: &Point) -> bool {
    l.contains_translate(offset, p)
}
