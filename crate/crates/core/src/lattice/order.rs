use std::cmp::Ordering;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::point::{check_dim, Point};
use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OrderKind {
    Lexicographic,
    /// Coordinates compared in the listed (0-based) priority order.
    PermutedLexicographic(Vec<usize>),
}

/// A translation-invariant total order on Z^k from the (permuted) lexicographic family.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "OrderSpec", into = "OrderSpec")]
pub struct InvariantOrder {
    dim: usize,
    priority: Vec<usize>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
struct OrderSpec {
    dim: usize,
    kind: OrderKind,
}

impl TryFrom<OrderSpec> for InvariantOrder {
    type Error = Error;
    fn try_from(s: OrderSpec) -> Result<Self> {
        InvariantOrder::from_kind(s.dim, s.kind)
    }
}

impl From<InvariantOrder> for OrderSpec {
    fn from(o: InvariantOrder) -> Self {
        OrderSpec { dim: o.dim, kind: o.kind() }
    }
}

impl InvariantOrder {
    pub fn lexicographic(dim: usize) -> Self {
        InvariantOrder { dim, priority: (0..dim).collect() }
    }

    /// `priority[0]` is the most significant coordinate. The order is validated
    /// for translation invariance on random triples before it is returned.
    pub fn permuted(priority: Vec<usize>) -> Result<Self> {
        let dim = priority.len();
        let mut seen = vec![false; dim];
        for &p in &priority {
            if p >= dim || seen[p] {
                return Err(Error::InvalidOrder(format!("{priority:?} is not a permutation of 0..{dim}")));
            }
            seen[p] = true;
        }
        let order = InvariantOrder { dim, priority };
        order.self_check()?;
        Ok(order)
    }

    pub fn from_kind(dim: usize, kind: OrderKind) -> Result<Self> {
        match kind {
            OrderKind::Lexicographic => Ok(Self::lexicographic(dim)),
            OrderKind::PermutedLexicographic(p) => {
                if p.len() != dim {
                    return Err(Error::DimensionMismatch { expected: dim, got: p.len() });
                }
                Self::permuted(p)
            }
        }
    }

    pub fn kind(&self) -> OrderKind {
        if self.priority.iter().enumerate().all(|(i, &p)| i == p) {
            OrderKind::Lexicographic
        } else {
            OrderKind::PermutedLexicographic(self.priority.clone())
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn priority(&self) -> &[usize] {
        &self.priority
    }

    pub fn compare(&self, s: &Point, t: &Point) -> Result<Ordering> {
        check_dim(s, t)?;
        if s.dim() != self.dim {
            return Err(Error::DimensionMismatch { expected: self.dim, got: s.dim() });
        }
        Ok(self.cmp(s, t))
    }

    /// Unchecked comparison; dimensions must already agree.
    #[inline]
    pub fn cmp(&self, s: &Point, t: &Point) -> Ordering {
        debug_assert_eq!(s.dim(), self.dim);
        for &i in &self.priority {
            match s.get(i).cmp(&t.get(i)) {
                Ordering::Equal => continue,
                o => return o,
            }
        }
        Ordering::Equal
    }

    /// s ≻ 0.
    #[inline]
    pub fn is_positive(&self, s: &Point) -> bool {
        for &i in &self.priority {
            match s.get(i).cmp(&0) {
                Ordering::Equal => continue,
                o => return o == Ordering::Greater,
            }
        }
        false
    }

    pub fn min<'a>(&self, pts: impl IntoIterator<Item = &'a Point>) -> Option<Point> {
        pts.into_iter().copied().min_by(|a, b| self.cmp(a, b))
    }

    pub fn max<'a>(&self, pts: impl IntoIterator<Item = &'a Point>) -> Option<Point> {
        pts.into_iter().copied().max_by(|a, b| self.cmp(a, b))
    }

    pub fn sort(&self, pts: &mut [Point]) {
        pts.sort_by(|a, b| self.cmp(a, b));
    }

    fn self_check(&self) -> Result<()> {
        let mut rng = ChaCha8Rng::seed_from_u64(0x0bde_5eed);
        let draw = |rng: &mut ChaCha8Rng| {
            let v: Vec<i64> = (0..self.dim).map(|_| rng.random_range(-50..=50)).collect();
            Point::of(&v)
        };
        for _ in 0..256 {
            let (s, t, i) = (draw(&mut rng), draw(&mut rng), draw(&mut rng));
            let a = self.cmp(&s, &t);
            if a != self.cmp(&(s + i), &(t + i)) || a != self.cmp(&t, &s).reverse() {
                return Err(Error::InvalidOrder(format!("invariance fails at {s}, {t}, {i}")));
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lex_examples() {
        let o = InvariantOrder::lexicographic(2);
        let c = |a: &[i64], b: &[i64]| o.compare(&Point::of(a), &Point::of(b)).unwrap();
        assert_eq!(c(&[0, 1], &[1, 0]), Ordering::Less);
        assert_eq!(c(&[0, -1], &[0, 0]), Ordering::Less);
        assert_eq!(c(&[2, 5], &[2, 5]), Ordering::Equal);
        assert!(o.compare(&Point::of(&[1]), &Point::of(&[1, 2])).is_err());
    }

    #[test]
    fn permuted_compares_second_coordinate_first() {
        let o = InvariantOrder::permuted(vec![1, 0]).unwrap();
        assert_eq!(o.cmp(&Point::of(&[5, 0]), &Point::of(&[-5, 1])), Ordering::Less);
        assert!(o.is_positive(&Point::of(&[-3, 1])));
        assert!(!o.is_positive(&Point::of(&[3, -1])));
        assert!(InvariantOrder::permuted(vec![0, 0]).is_err());
    }

    #[test]
    fn serde_roundtrip() {
        let o = InvariantOrder::permuted(vec![2, 0, 1]).unwrap();
        let s = serde_json::to_string(&o).unwrap();
        let back: InvariantOrder = serde_json::from_str(&s).unwrap();
        assert_eq!(o, back);
    }
}
