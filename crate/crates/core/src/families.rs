//! Synthetic growing index sets Λ_n used by tests, the acceptance suite and
//! the CLI generators.

use crate::error::{Error, Result};
use crate::lattice::{box_points, IndexSet, InvariantOrder, Point};

/// Λ = {(t, c) : c ∈ C, 1 ≤ t ≤ m}: the station set C ⊂ Z^{k-1} observed at m
/// successive times. Time is the first coordinate, so the lexicographic order
/// runs through successive observations.
pub fn spacetime(stations: &[Point], m: i64) -> Result<IndexSet> {
    let first = stations.first().ok_or_else(|| Error::InvalidArgument("empty station set".into()))?;
    let ks = first.dim();
    if ks + 1 > crate::lattice::MAX_DIM {
        return Err(Error::UnsupportedDimension(ks + 1));
    }
    let mut pts = Vec::with_capacity(stations.len() * m.max(0) as usize);
    for t in 1..=m {
        for c in stations {
            if c.dim() != ks {
                return Err(Error::DimensionMismatch { expected: ks, got: c.dim() });
            }
            let mut v = vec![t];
            v.extend_from_slice(c.coords());
            pts.push(Point::of(&v));
        }
    }
    IndexSet::new(ks + 1, pts)
}

/// One named family n ↦ Λ_n with the order used to analyse it.
pub struct Family {
    pub name: &'static str,
    pub dim: usize,
    /// Census radius large enough to see two periods of the structure.
    pub p: i64,
    build: fn(i64) -> Vec<Point>,
}

impl Family {
    pub fn build(&self, n: i64) -> IndexSet {
        IndexSet::new(self.dim, (self.build)(n)).expect("family points share a dimension")
    }

    pub fn order(&self) -> InvariantOrder {
        InvariantOrder::lexicographic(self.dim)
    }
}

fn p(c: &[i64]) -> Point {
    Point::of(c)
}

fn square(n: i64) -> Vec<Point> {
    box_points(&p(&[1, 1]), &p(&[n, n]))
}

fn stations(c: &[&[i64]], m: i64) -> Vec<Point> {
    let cs: Vec<Point> = c.iter().map(|x| p(x)).collect();
    spacetime(&cs, m).expect("valid stations").points().to_vec()
}

/// The 20 built-in families: boxes, sparse and union lattices, the two-line set
/// whose second shape fails TIP, periodic patterns and space-time station grids.
pub fn synthetic_families() -> Vec<Family> {
    vec![
        Family { name: "segment", dim: 1, p: 4, build: |n| (1..=n * n).map(|t| p(&[t])).collect() },
        Family { name: "square", dim: 2, p: 4, build: square },
        Family { name: "cube3", dim: 3, p: 4, build: |n| box_points(&p(&[1, 1, 1]), &p(&[n / 3, n / 3, n / 3])) },
        Family { name: "flat-rectangle", dim: 2, p: 4, build: |n| box_points(&p(&[1, 1]), &p(&[n, 3])) },
        Family { name: "even-integers", dim: 1, p: 4, build: |n| (1..=n * n).filter(|t| t % 2 == 0).map(|t| p(&[t])).collect() },
        Family {
            name: "checkerboard",
            dim: 2,
            p: 4,
            build: |n| square(n).into_iter().filter(|q| (q.get(0) + q.get(1)) % 2 == 0).collect(),
        },
        Family {
            name: "column-lattice",
            dim: 2,
            p: 6,
            build: |n| square(n).into_iter().filter(|q| q.get(1) % 3 == 0).collect(),
        },
        Family {
            name: "two-lines",
            dim: 2,
            p: 4,
            build: |n| (1..=n * n / 2).flat_map(|t| [p(&[0, t]), p(&[1, t])]).collect(),
        },
        Family {
            name: "pattern-mod3",
            dim: 1,
            p: 6,
            build: |n| (1..=n * n).filter(|t| t % 3 != 2).map(|t| p(&[t])).collect(),
        },
        Family {
            name: "pattern-mod5",
            dim: 1,
            p: 10,
            build: |n| (1..=n * n).filter(|t| [0, 1, 3].contains(&(t % 5))).map(|t| p(&[t])).collect(),
        },
        Family {
            name: "union-2z-3z",
            dim: 1,
            p: 12,
            build: |n| (1..=n * n).filter(|t| t % 2 == 0 || t % 3 == 0).map(|t| p(&[t])).collect(),
        },
        Family {
            name: "triangle",
            dim: 2,
            p: 4,
            build: |n| square(n).into_iter().filter(|q| q.get(1) <= q.get(0)).collect(),
        },
        Family {
            name: "disc",
            dim: 2,
            p: 4,
            build: |n| {
                let r = n / 2;
                box_points(&p(&[-r, -r]), &p(&[r, r])).into_iter().filter(|q| q.get(0).pow(2) + q.get(1).pow(2) <= r * r).collect()
            },
        },
        Family {
            name: "l-shape",
            dim: 2,
            p: 4,
            build: |n| square(n).into_iter().filter(|q| q.get(0) <= n / 2 || q.get(1) <= n / 2).collect(),
        },
        Family {
            name: "diagonal-band",
            dim: 2,
            p: 4,
            build: |n| square(n).into_iter().filter(|q| (q.get(0) - q.get(1)).abs() <= 2).collect(),
        },
        Family { name: "spacetime-single", dim: 2, p: 4, build: |n| stations(&[&[0]], n * n / 4) },
        Family { name: "spacetime-pair", dim: 2, p: 4, build: |n| stations(&[&[0], &[3]], n * n / 8) },
        Family { name: "spacetime-line3", dim: 2, p: 4, build: |n| stations(&[&[0], &[1], &[2]], n * n / 12) },
        Family {
            name: "spacetime-plane",
            dim: 3,
            p: 3,
            build: |n| stations(&[&[0, 0], &[0, 1], &[0, 2], &[0, 3], &[1, 0], &[1, 1], &[1, 2], &[1, 3], &[2, 0], &[2, 1], &[2, 2], &[2, 3], &[3, 0], &[3, 1], &[3, 2], &[3, 3]], n * n / 16),
        },
        Family {
            name: "sparse-plane-lattice",
            dim: 2,
            p: 4,
            build: |n| square(n).into_iter().filter(|q| (q.get(0) + 2 * q.get(1)) % 5 == 0).collect(),
        },
    ]
}
