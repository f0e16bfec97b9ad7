use std::collections::HashMap;

use num_rational::Ratio;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::lattice::{cube_points, window_key, IndexSet, InvariantOrder, Point};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CensusKind {
    /// Window shapes ((Λ)_{-t} ∩ K_p)^+.
    Upper,
    /// Full windows (Λ)_{-t} ∩ K_p (always contain 0).
    Full,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ShapeEntry {
    pub key: Vec<Point>,
    pub count: usize,
    #[serde(with = "ratio_serde")]
    pub weight: Ratio<u64>,
}

impl ShapeEntry {
    pub fn weight_f64(&self) -> f64 {
        *self.weight.numer() as f64 / *self.weight.denom() as f64
    }
}

/// Distinct local shapes of Λ at radius p with counts and exact weights,
/// ordered by count (descending) then canonical key.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ShapeCensus {
    pub kind: CensusKind,
    pub p: i64,
    pub dim: usize,
    pub total: usize,
    pub shapes: Vec<ShapeEntry>,
}

impl ShapeCensus {
    pub fn sum_weights(&self) -> Ratio<u64> {
        self.shapes.iter().fold(Ratio::from_integer(0), |acc, s| acc + s.weight)
    }

    pub fn sum_counts(&self) -> usize {
        self.shapes.iter().map(|s| s.count).sum()
    }

    pub fn find(&self, key: &[Point]) -> Option<&ShapeEntry> {
        self.shapes.iter().find(|s| s.key == key)
    }

    pub fn weight_of(&self, key: &[Point]) -> f64 {
        self.find(key).map_or(0.0, ShapeEntry::weight_f64)
    }

    pub fn significant(&self, min_weight: f64) -> impl Iterator<Item = (usize, &ShapeEntry)> {
        self.shapes.iter().enumerate().filter(move |(_, s)| s.weight_f64() >= min_weight)
    }
}

/// Groups t ∈ Λ by their window shape at radius p.
pub fn census(lambda: &IndexSet, p: i64, order: &InvariantOrder) -> ShapeCensus {
    let offsets: Vec<Point> = cube_points(p, lambda.dim()).into_iter().filter(|u| order.is_positive(u)).collect();
    build(lambda, p, &offsets, CensusKind::Upper)
}

/// Groups t ∈ Λ by the full window (Λ)_{-t} ∩ K_p.
pub fn census_xi(lambda: &IndexSet, p: i64) -> ShapeCensus {
    let offsets = cube_points(p, lambda.dim());
    build(lambda, p, &offsets, CensusKind::Full)
}

fn build(lambda: &IndexSet, p: i64, offsets: &[Point], kind: CensusKind) -> ShapeCensus {
    let counts = lambda
        .points()
        .par_chunks(256)
        .fold(HashMap::<Vec<Point>, usize>::new, |mut m, chunk| {
            for t in chunk {
                *m.entry(window_key(lambda, t, offsets)).or_default() += 1;
            }
            m
        })
        .reduce(HashMap::new, |mut a, b| {
            for (k, v) in b {
                *a.entry(k).or_default() += v;
            }
            a
        });
    let total = lambda.len();
    let mut shapes: Vec<ShapeEntry> = counts
        .into_iter()
        .map(|(key, count)| ShapeEntry { key, count, weight: Ratio::new(count as u64, total.max(1) as u64) })
        .collect();
    shapes.sort_by(|a, b| b.count.cmp(&a.count).then_with(|| a.key.cmp(&b.key)));
    ShapeCensus { kind, p, dim: lambda.dim(), total, shapes }
}

/// Restriction of a canonical key to K_p.
pub fn truncate_key(key: &[Point], p: i64) -> Vec<Point> {
    key.iter().copied().filter(|u| u.norm_inf() <= p).collect()
}

mod ratio_serde {
    use num_rational::Ratio;
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    #[derive(Serialize, Deserialize)]
    struct Repr {
        num: u64,
        den: u64,
        value: f64,
    }

    pub fn serialize<S: Serializer>(r: &Ratio<u64>, s: S) -> Result<S::Ok, S::Error> {
        Repr { num: *r.numer(), den: *r.denom(), value: *r.numer() as f64 / *r.denom() as f64 }.serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Ratio<u64>, D::Error> {
        let r = Repr::deserialize(d)?;
        if r.den == 0 {
            return Err(serde::de::Error::custom("zero denominator"));
        }
        Ok(Ratio::new(r.num, r.den))
    }
}
