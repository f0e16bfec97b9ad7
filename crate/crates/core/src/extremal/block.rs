use std::collections::BTreeSet;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{ThetaEstimate, ThetaVariant};
use crate::error::{Error, Result};
use crate::exceedance::normalizer_analytic;
use crate::lattice::{box_points, IndexSet, Point};
use crate::models::FieldRealization;
use crate::stats::{mean_se, ratio_se};

/// Disjoint translates of a block Λ_r inside Λ_n, and the threshold u_n.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct BlockScheme {
    /// Side parameter r_n of the block.
    pub r: i64,
    pub block: IndexSet,
    /// Block copies are block + τ for τ here; k_n = translates.len().
    pub translates: Vec<Point>,
    pub threshold: f64,
}

impl BlockScheme {
    /// Blocks Λ_n ∩ ([1, r]^k + τ) for τ on the grid rZ^k, kept when they are an exact
    /// translate of the first block Λ_n ∩ [1, r]^k (shifted to the bounding-box corner).
    pub fn with_side(lambda_n: &IndexSet, r: i64, threshold: f64) -> Result<Self> {
        if r < 1 {
            return Err(Error::InvalidArgument("block side must be at least 1".into()));
        }
        let (lo, hi) = lambda_n.bounding_box().ok_or_else(|| Error::InvalidArgument("empty index set".into()))?;
        let k = lambda_n.dim();
        let cell = |tau: &Point| -> Vec<Point> {
            lambda_n
                .iter()
                .filter(|p| (0..k).all(|i| p.get(i) >= tau.get(i) && p.get(i) < tau.get(i) + r))
                .map(|p| *p - *tau)
                .collect()
        };
        let first = cell(&lo);
        if first.is_empty() {
            return Err(Error::InvalidArgument("first block is empty".into()));
        }
        let counts: Vec<i64> = (0..k).map(|i| (hi.get(i) - lo.get(i) + 1) / r).collect();
        let mut translates = Vec::new();
        for m in box_points(&Point::zero(k), &Point::of(&counts.iter().map(|c| c - 1).collect::<Vec<_>>())) {
            let tau = lo + m.scale(r);
            if cell(&tau) == first {
                translates.push(tau - lo);
            }
        }
        if translates.len() < 2 {
            return Err(Error::InvalidArgument(format!(
                "block side {r} leaves {} complete block(s); need k_n ≥ 2",
                translates.len()
            )));
        }
        let block = IndexSet::new(k, first.into_iter().map(|p| p + lo))?;
        Ok(BlockScheme { r, block, translates, threshold })
    }

    /// r_n = ⌊√n⌋ per dimension, n the largest bounding-box side of Λ_n.
    pub fn sqrt_rule(lambda_n: &IndexSet, threshold: f64) -> Result<Self> {
        let (lo, hi) = lambda_n.bounding_box().ok_or_else(|| Error::InvalidArgument("empty index set".into()))?;
        let n = (0..lambda_n.dim()).map(|i| hi.get(i) - lo.get(i) + 1).max().unwrap_or(1);
        Self::with_side(lambda_n, (n as f64).sqrt().floor() as i64, threshold)
    }

    pub fn k_n(&self) -> usize {
        self.translates.len()
    }

    /// Sites covered by the block copies.
    pub fn sites(&self) -> BTreeSet<Point> {
        self.translates.iter().flat_map(|t| self.block.iter().map(move |p| *p + *t)).collect()
    }
}

/// u with |Λ_n|·P(|X_0| > u) = τ.
pub fn threshold_for_tau(survival: impl Fn(f64) -> f64, size: usize, tau: f64) -> Result<f64> {
    if !(tau > 0.0) {
        return Err(Error::InvalidArgument("τ must be positive".into()));
    }
    let s = normalizer_analytic(|u| survival(u) / tau, &[size])?;
    Ok(s.values[0])
}

/// P̂(max_{Λ_r}|X| > u) / (|Λ_r|·P̂(|X_0| > u)), pooled over all block copies of all
/// realizations. With `marginal_survival`, the denominator uses the exact tail instead.
/// SEs treat realizations as independent units (delta method for the ratio).
pub fn block_theta(
    reals: &[FieldRealization],
    scheme: &BlockScheme,
    marginal_survival: Option<&(dyn Fn(f64) -> f64 + Sync)>,
) -> Result<ThetaEstimate> {
    if reals.is_empty() {
        return Err(Error::TooFewSamples { min: 1, got: 0 });
    }
    let u = scheme.threshold;
    let kn = scheme.k_n() as f64;
    let bsize = scheme.block.len() as f64;
    // per realization: (blocks exceeded / k_n, sites exceeded / sites, max block maximum)
    let per: Vec<(f64, f64, f64)> = reals
        .par_iter()
        .map(|real| -> Result<(f64, f64, f64)> {
            let mut hit = 0usize;
            let mut sites = 0usize;
            let mut top = 0.0f64;
            for tau in &scheme.translates {
                let mut m = 0.0f64;
                for p in scheme.block.iter() {
                    let q = *p + *tau;
                    let i = real.window.index_of(&q).ok_or(Error::NotInIndexSet(q))?;
                    let x = real.abs(i);
                    if x > u {
                        sites += 1;
                    }
                    m = m.max(x);
                }
                top = top.max(m);
                if m > u {
                    hit += 1;
                }
            }
            Ok((hit as f64 / kn, sites as f64 / (kn * bsize), top))
        })
        .collect::<Result<_>>()?;
    let a: Vec<f64> = per.iter().map(|p| p.0).collect();
    if a.iter().all(|v| *v == 0.0) {
        return Err(Error::NoBlockExceedance {
            threshold: u,
            blocks: scheme.k_n() * reals.len(),
            max_block: per.iter().map(|p| p.2).fold(0.0, f64::max),
        });
    }
    let est = match marginal_survival {
        Some(sf) => {
            let d = bsize * sf(u);
            let e = mean_se(&a);
            crate::stats::Estimate { mean: e.mean / d, se: e.se / d, n: e.n }
        }
        None => {
            let b: Vec<f64> = per.iter().map(|p| bsize * p.1).collect();
            ratio_se(&a, &b)
        }
    };
    Ok(ThetaEstimate::new(ThetaVariant::Block, est.mean, est.se, reals.len(), None))
}


#[cfg(test)]
mod tests {
    use std::sync::Arc;

    use super::*;
    use crate::models::{kernel_1d, simulate_many, FieldModel};

    fn line(n: i64) -> IndexSet {
        IndexSet::hyperrectangle(&Point::of(&[1]), &Point::of(&[n])).unwrap()
    }

    #[test]
    fn tiles_a_line_and_a_pattern() {
        let s = BlockScheme::sqrt_rule(&line(100), 1.0).unwrap();
        assert_eq!((s.r, s.k_n(), s.block.len()), (10, 10, 10));
        assert_eq!(s.sites().len(), 100);
        // t mod 3 ∈ {0, 1}: only blocks whose pattern matches the first one survive
        let pat = IndexSet::new(1, (1..=90).filter(|t| t % 3 != 2).map(|t| Point::of(&[t]))).unwrap();
        let s = BlockScheme::with_side(&pat, 9, 1.0).unwrap();
        assert_eq!(s.k_n(), 10);
        assert!(BlockScheme::with_side(&line(10), 6, 1.0).is_err());
    }

    #[test]
    fn no_exceedance_is_an_error() {
        let w = Arc::new(line(20));
        let reals = simulate_many(&FieldModel::iid(1.0), &w, 0, 3).unwrap();
        let s = BlockScheme::with_side(&w, 5, 1e15).unwrap();
        assert!(matches!(block_theta(&reals, &s, None), Err(Error::NoBlockExceedance { .. })));
    }

    #[test]
    fn tau_threshold() {
        let m = FieldModel::iid(1.0).marginal_tail();
        let u = threshold_for_tau(|x| m.survival(x), 1000, 2.0).unwrap();
        assert!((1000.0 * m.survival(u) - 2.0).abs() < 1e-9);
    }

    #[test]
    fn moving_maxima_block_theta_near_half() {
        let n = 2500;
        let w = Arc::new(line(n));
        let model = FieldModel::moving_maxima(1.0, kernel_1d(&[1.0, 1.0]));
        let m = model.marginal_tail();
        let u = threshold_for_tau(|x| m.survival(x), n as usize, 4.0).unwrap();
        let s = BlockScheme::sqrt_rule(&w, u).unwrap();
        let reals = simulate_many(&model, &w, 11, 800).unwrap();
        let sf = move |x: f64| m.survival(x);
        let t = block_theta(&reals, &s, Some(&sf)).unwrap();
        // finite block: θ_r = (1 − e^{−(r+1)/u}) / (r(1 − e^{−2/u}))
        let r = s.r as f64;
        let exact = (1.0 - (-(r + 1.0) / u).exp()) / (r * (1.0 - (-2.0 / u).exp()));
        assert!((t.raw - exact).abs() < 4.0 * t.se, "{t:?} vs {exact}");
    }
}
