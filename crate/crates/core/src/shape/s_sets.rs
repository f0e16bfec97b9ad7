use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use super::structure::{ShapeD, ShapeSet, XiStructure};
use crate::lattice::{cube_points, window_key, IndexSet, Point};

/// S_{i,l} = {t ∈ Λ : (Λ)_{-t} ∩ K_l = Ξ*_i ∩ K_l}.
pub fn s_sets<S: ShapeSet>(lambda: &IndexSet, xi: &S, l: i64) -> IndexSet {
    let offsets = cube_points(l, lambda.dim());
    let target: Vec<Point> = offsets.iter().copied().filter(|u| xi.contains(u)).collect();
    lambda.filter(|t| window_key(lambda, t, &offsets) == target)
}

/// Counts collisions between (D_j ∩ K_{2l})_t and (D_i ∩ K_{2l})_s for
/// t ∈ S_{j,4l}, s ∈ S_{i,4l}, i ≠ j.
pub fn s_sets_disjointness(lambda: &IndexSet, shapes: &[(&ShapeD, &XiStructure)], l: i64) -> usize {
    let covers: Vec<HashSet<Point>> = shapes
        .iter()
        .map(|(d, xi)| {
            let s = s_sets(lambda, *xi, 4 * l);
            let dw = d.window(2 * l);
            s.iter().flat_map(|t| dw.iter().map(move |u| *u + *t)).collect()
        })
        .collect();
    let mut collisions = 0;
    for i in 0..covers.len() {
        for j in (i + 1)..covers.len() {
            collisions += covers[i].intersection(&covers[j]).count();
        }
    }
    collisions
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SeparationIndex {
    pub l: i64,
    /// Number of leading shapes resolved at radius l.
    pub m_l: usize,
    pub unresolved: Vec<usize>,
}

/// Shape-separation index m_l for shapes listed by decreasing weight: the
/// leading shapes must be pairwise distinct on K_l, bounded shapes must fit in
/// K_{l/2}, and each pattern E must fit in K_{l/4}.
pub fn separation_index(shapes: &[(&ShapeD, &XiStructure)], l: i64) -> SeparationIndex {
    let windows: Vec<Vec<Point>> = shapes.iter().map(|(d, _)| d.window(l)).collect();
    let m1 = (0..shapes.len()).find(|&i| windows[..i].contains(&windows[i])).unwrap_or(shapes.len());
    let m2 = shapes
        .iter()
        .position(|(d, _)| d.is_bounded() && d.cosets.iter().any(|p| p.norm_inf() > l / 2))
        .unwrap_or(shapes.len());
    let m3 = shapes
        .iter()
        .position(|(_, xi)| xi.e.iter().any(|p| p.norm_inf() > l / 4))
        .unwrap_or(shapes.len());
    let m = m1.min(m2).min(m3);
    SeparationIndex { l, m_l: m, unresolved: (m..shapes.len()).collect() }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::Sublattice;

    #[test]
    fn interior_points_of_segment() {
        let lam = IndexSet::new(1, (1..=100).map(|i| Point::of(&[i]))).unwrap();
        let z = IndexSet::hypercube(1000, 1);
        let s = s_sets(&lam, &z, 3);
        let expect: Vec<Point> = (4..=97).map(|i| Point::of(&[i])).collect();
        assert_eq!(s.points(), &expect[..]);
        assert!(s_sets(&lam, &z, 200).is_empty());
        let _ = Sublattice::full(1);
    }
}
