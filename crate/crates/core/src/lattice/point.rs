use std::fmt;
use std::ops::{Add, Neg, Sub};

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

/// Largest supported lattice dimension. Points are fixed-size so they stay `Copy`.
pub const MAX_DIM: usize = 6;

/// A point of Z^k. Unused trailing coordinates are always zero, so the derived
/// `Eq`/`Hash`/`Ord` only see the first `dim` coordinates; `Ord` is the
/// lexicographic order, which is also the canonical serialization order.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Point {
    dim: u8,
    c: [i64; MAX_DIM],
}

impl Point {
    pub fn new(coords: &[i64]) -> Result<Self> {
        let k = coords.len();
        if k == 0 || k > MAX_DIM {
            return Err(Error::UnsupportedDimension(k));
        }
        let mut c = [0; MAX_DIM];
        c[..k].copy_from_slice(coords);
        Ok(Point { dim: k as u8, c })
    }

    /// Panicking constructor for literals in code and tests.
    pub fn of(coords: &[i64]) -> Self {
        Self::new(coords).expect("invalid point literal")
    }

    pub fn zero(dim: usize) -> Self {
        assert!((1..=MAX_DIM).contains(&dim), "unsupported dimension {dim}");
        Point { dim: dim as u8, c: [0; MAX_DIM] }
    }

    /// The `i`-th unit vector.
    pub fn unit(dim: usize, i: usize) -> Self {
        let mut p = Self::zero(dim);
        p.c[i] = 1;
        p
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim as usize
    }

    #[inline]
    pub fn coords(&self) -> &[i64] {
        &self.c[..self.dim as usize]
    }

    #[inline]
    pub fn get(&self, i: usize) -> i64 {
        self.c[i]
    }

    #[inline]
    pub fn set(&mut self, i: usize, v: i64) {
        debug_assert!(i < self.dim as usize);
        self.c[i] = v;
    }

    pub fn is_zero(&self) -> bool {
        self.c.iter().all(|&x| x == 0)
    }

    /// Sup norm max_i |p_i|.
    #[inline]
    pub fn norm_inf(&self) -> i64 {
        self.coords().iter().map(|x| x.abs()).max().unwrap_or(0)
    }

    pub fn scale(&self, m: i64) -> Self {
        let mut out = *self;
        for x in out.c.iter_mut() {
            *x *= m;
        }
        out
    }

    pub fn checked_add(&self, o: &Point) -> Result<Self> {
        check_dim(self, o)?;
        let mut out = *self;
        for i in 0..self.dim() {
            out.c[i] = out.c[i].checked_add(o.c[i]).ok_or(Error::Overflow)?;
        }
        Ok(out)
    }

    pub fn checked_sub(&self, o: &Point) -> Result<Self> {
        check_dim(self, o)?;
        let mut out = *self;
        for i in 0..self.dim() {
            out.c[i] = out.c[i].checked_sub(o.c[i]).ok_or(Error::Overflow)?;
        }
        Ok(out)
    }
}

pub(crate) fn check_dim(a: &Point, b: &Point) -> Result<()> {
    if a.dim != b.dim {
        return Err(Error::DimensionMismatch { expected: a.dim(), got: b.dim() });
    }
    Ok(())
}

impl Add for Point {
    type Output = Point;
    #[inline]
    fn add(self, o: Point) -> Point {
        debug_assert_eq!(self.dim, o.dim);
        let mut out = self;
        for i in 0..MAX_DIM {
            out.c[i] += o.c[i];
        }
        out
    }
}

impl Sub for Point {
    type Output = Point;
    #[inline]
    fn sub(self, o: Point) -> Point {
        debug_assert_eq!(self.dim, o.dim);
        let mut out = self;
        for i in 0..MAX_DIM {
            out.c[i] -= o.c[i];
        }
        out
    }
}

impl Neg for Point {
    type Output = Point;
    #[inline]
    fn neg(self) -> Point {
        let mut out = self;
        for x in out.c.iter_mut() {
            *x = -*x;
        }
        out
    }
}

impl fmt::Debug for Point {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

impl fmt::Display for Point {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (i, x) in self.coords().iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{x}")?;
        }
        write!(f, ")")
    }
}

impl Serialize for Point {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.coords().serialize(s)
    }
}

impl<'de> Deserialize<'de> for Point {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let v = Vec::<i64>::deserialize(d)?;
        Point::new(&v).map_err(serde::de::Error::custom)
    }
}

/// All points of K_c = [-c, c]^k in lexicographic order.
pub fn cube_points(c: i64, k: usize) -> Vec<Point> {
    assert!(c >= 0);
    box_points(&Point::of(&vec![-c; k]), &Point::of(&vec![c; k]))
}

/// All points of the box [lo, hi] (inclusive) in lexicographic order.
pub fn box_points(lo: &Point, hi: &Point) -> Vec<Point> {
    let k = lo.dim();
    if (0..k).any(|i| hi.get(i) < lo.get(i)) {
        return Vec::new();
    }
    let total: usize = (0..k).map(|i| (hi.get(i) - lo.get(i) + 1) as usize).product();
    let mut out = Vec::with_capacity(total);
    let mut cur = *lo;
    loop {
        out.push(cur);
        let mut i = k;
        loop {
            if i == 0 {
                return out;
            }
            i -= 1;
            if cur.get(i) < hi.get(i) {
                cur.set(i, cur.get(i) + 1);
                break;
            }
            cur.set(i, lo.get(i));
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cube_sizes() {
        assert_eq!(cube_points(0, 2), vec![Point::of(&[0, 0])]);
        assert_eq!(cube_points(1, 1).len(), 3);
        assert_eq!(cube_points(1, 2).len(), 9);
        assert_eq!(cube_points(2, 3).len(), 125);
    }

    #[test]
    fn cube_is_sorted() {
        let pts = cube_points(2, 2);
        assert!(pts.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn arithmetic() {
        let a = Point::of(&[1, -2]);
        let b = Point::of(&[3, 4]);
        assert_eq!(a + b, Point::of(&[4, 2]));
        assert_eq!(a - b, Point::of(&[-2, -6]));
        assert_eq!(-a, Point::of(&[-1, 2]));
        assert_eq!((a - b).norm_inf(), 6);
        assert!(Point::new(&[]).is_err());
        assert!(Point::of(&[1]).checked_add(&Point::of(&[1, 2])).is_err());
    }

    #[test]
    fn serde_roundtrip() {
        let p = Point::of(&[3, -1, 7]);
        let s = serde_json::to_string(&p).unwrap();
        assert_eq!(s, "[3,-1,7]");
        assert_eq!(serde_json::from_str::<Point>(&s).unwrap(), p);
    }
}
