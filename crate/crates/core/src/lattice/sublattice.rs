use std::collections::BTreeSet;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use super::point::Point;
use crate::error::{Error, Result};

/// A sublattice of Z^k stored by its (row-style) Hermite normal form: rows in
/// echelon form, positive pivots, entries above each pivot reduced into
/// [0, pivot). The HNF is canonical, so derived equality is lattice equality.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Sublattice {
    dim: usize,
    rows: Vec<Point>,
    pivots: Vec<usize>,
}

fn floor_div(a: i128, b: i128) -> i128 {
    let q = a / b;
    if (a % b != 0) && ((a < 0) != (b < 0)) {
        q - 1
    } else {
        q
    }
}

fn sub_mul(row: &mut [i128], q: i128, other: &[i128]) -> Result<()> {
    for (x, y) in row.iter_mut().zip(other) {
        *x = q.checked_mul(*y).and_then(|v| x.checked_sub(v)).ok_or(Error::Overflow)?;
    }
    Ok(())
}

impl Sublattice {
    /// The degenerate lattice {0}.
    pub fn zero(dim: usize) -> Self {
        Sublattice { dim, rows: Vec::new(), pivots: Vec::new() }
    }

    /// Z^k.
    pub fn full(dim: usize) -> Self {
        Sublattice { dim, rows: (0..dim).map(|i| Point::unit(dim, i)).collect(), pivots: (0..dim).collect() }
    }

    /// The lattice spanned (over Z) by `gens`.
    pub fn from_generators(dim: usize, gens: &[Point]) -> Result<Self> {
        let mut m: Vec<Vec<i128>> = Vec::with_capacity(gens.len());
        for g in gens {
            if g.dim() != dim {
                return Err(Error::DimensionMismatch { expected: dim, got: g.dim() });
            }
            if !g.is_zero() {
                m.push(g.coords().iter().map(|&x| x as i128).collect());
            }
        }
        let mut r = 0;
        let mut pivots = Vec::new();
        for c in 0..dim {
            if r == m.len() {
                break;
            }
            loop {
                let best = (r..m.len()).filter(|&i| m[i][c] != 0).min_by_key(|&i| m[i][c].abs());
                let Some(i0) = best else { break };
                m.swap(r, i0);
                let pivot_row = m[r].clone();
                let mut clean = true;
                for row in m.iter_mut().skip(r + 1) {
                    if row[c] != 0 {
                        let q = floor_div(row[c], pivot_row[c]);
                        sub_mul(row, q, &pivot_row)?;
                        if row[c] != 0 {
                            clean = false;
                        }
                    }
                }
                if clean {
                    break;
                }
            }
            if m[r][c] == 0 {
                continue;
            }
            if m[r][c] < 0 {
                for x in m[r].iter_mut() {
                    *x = -*x;
                }
            }
            let pivot_row = m[r].clone();
            for row in m.iter_mut().take(r) {
                let q = floor_div(row[c], pivot_row[c]);
                sub_mul(row, q, &pivot_row)?;
            }
            pivots.push(c);
            r += 1;
        }
        m.truncate(r);
        let rows = m
            .into_iter()
            .map(|row| {
                let v: Option<Vec<i64>> = row.into_iter().map(|x| i64::try_from(x).ok()).collect();
                v.map(|v| Point::of(&v)).ok_or(Error::Overflow)
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Sublattice { dim, rows, pivots })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn rank(&self) -> usize {
        self.rows.len()
    }

    pub fn is_zero(&self) -> bool {
        self.rows.is_empty()
    }

    /// HNF basis rows.
    pub fn basis(&self) -> &[Point] {
        &self.rows
    }

    pub fn pivots(&self) -> &[usize] {
        &self.pivots
    }

    /// p ∈ L.
    pub fn contains(&self, p: &Point) -> bool {
        debug_assert_eq!(p.dim(), self.dim);
        let mut v = *p;
        for (row, &c) in self.rows.iter().zip(&self.pivots) {
            let h = row.get(c);
            let x = v.get(c);
            if x % h != 0 {
                return false;
            }
            if x != 0 {
                v = v - row.scale(x / h);
            }
        }
        v.is_zero()
    }

    /// p ∈ L + offset.
    pub fn contains_translate(&self, offset: &Point, p: &Point) -> bool {
        self.contains(&(*p - *offset))
    }

    /// Canonical representative of the coset p + L: each pivot coordinate reduced into [0, pivot).
    pub fn reduce(&self, p: &Point) -> Point {
        let mut v = *p;
        for (row, &c) in self.rows.iter().zip(&self.pivots) {
            let q = floor_div(v.get(c) as i128, row.get(c) as i128) as i64;
            if q != 0 {
                v = v - row.scale(q);
            }
        }
        v
    }

    /// L ⊇ other.
    pub fn contains_lattice(&self, other: &Sublattice) -> bool {
        other.rows.iter().all(|r| self.contains(r))
    }

    /// Points of (L + offset) ∩ K_radius, lexicographically sorted.
    pub fn points_in_window(&self, offset: &Point, radius: i64) -> Vec<Point> {
        let mut out = Vec::new();
        self.enumerate(0, *offset, radius, &mut out);
        out.sort_unstable();
        out
    }

    fn enumerate(&self, i: usize, base: Point, r: i64, out: &mut Vec<Point>) {
        if i == self.rows.len() {
            if base.norm_inf() <= r {
                out.push(base);
            }
            return;
        }
        let c = self.pivots[i];
        let h = self.rows[i].get(c) as i128;
        let b = base.get(c) as i128;
        let lo = -floor_div(r as i128 + b, h); // ceil((-r - b)/h)
        let hi = floor_div(r as i128 - b, h);
        for x in lo..=hi {
            self.enumerate(i + 1, base + self.rows[i].scale(x as i64), r, out);
        }
    }

    /// Canonical representatives (reduced mod `self`) of the cosets of `self`
    /// inside the coarser lattice `sup`; requires self ⊆ sup with equal rank.
    pub fn coset_reps_in(&self, sup: &Sublattice) -> Result<Vec<Point>> {
        if !sup.contains_lattice(self) || sup.rank() != self.rank() {
            return Err(Error::CosetDecomposition("lattice is not a finite-index sublattice".into()));
        }
        let mut orders = Vec::with_capacity(sup.rank());
        for g in &sup.rows {
            let m = (1..=100_000i64)
                .find(|&m| self.contains(&g.scale(m)))
                .ok_or_else(|| Error::CosetDecomposition(format!("no multiple of {g} in the sublattice")))?;
            orders.push(m);
        }
        let total: i64 = orders.iter().product();
        if total > 1_000_000 {
            return Err(Error::CosetDecomposition(format!("index bound {total} too large")));
        }
        let mut reps = BTreeSet::new();
        let mut coef = vec![0i64; orders.len()];
        loop {
            let mut p = Point::zero(self.dim);
            for (g, &x) in sup.rows.iter().zip(&coef) {
                p = p + g.scale(x);
            }
            reps.insert(self.reduce(&p));
            let mut i = 0;
            loop {
                if i == coef.len() {
                    return Ok(reps.into_iter().collect());
                }
                coef[i] += 1;
                if coef[i] < orders[i] {
                    break;
                }
                coef[i] = 0;
                i += 1;
            }
        }
    }
}

impl std::fmt::Debug for Sublattice {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "Sublattice{:?}", self.rows)
    }
}

impl Serialize for Sublattice {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        #[derive(Serialize)]
        struct Repr<'a> {
            k: usize,
            basis: &'a [Point],
        }
        Repr { k: self.dim, basis: &self.rows }.serialize(s)
    }
}

impl<'de> Deserialize<'de> for Sublattice {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        struct Repr {
            k: usize,
            basis: Vec<Point>,
        }
        let r = Repr::deserialize(d)?;
        Sublattice::from_generators(r.k, &r.basis).map_err(serde::de::Error::custom)
    }
}
