//! Normalizing levels a_n, exceedance point processes, empirical and limit
//! Laplace functionals, and the cluster-process sampler.

mod cluster;
mod laplace;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::IndexSet;
use crate::models::FieldRealization;

pub use cluster::{poisson_count_gof, sample_cluster_process, ClusterDraw, ClusterTerm, CountGof};
pub use laplace::{
    empirical_laplace, limit_laplace, monotone_within_se, LaplaceInput, LaplaceReport, LaplaceVariant, LimitLaplace,
    PatternTerm, ShapeTerm,
};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NormalizerMode {
    Analytic,
    Empirical,
}

/// a_n per index-set size, with |Λ|·P(|X_0| > a_n) − 1 recorded.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct NormalizingSeq {
    pub mode: NormalizerMode,
    pub sizes: Vec<usize>,
    pub values: Vec<f64>,
    pub residuals: Vec<f64>,
}

impl NormalizingSeq {
    pub fn get(&self, size: usize) -> Option<f64> {
        self.sizes.iter().position(|s| *s == size).map(|i| self.values[i])
    }
}

/// Solves P(|X_0| > a) = 1/|Λ| by bisection (relative tolerance 1e-12).
pub fn normalizer_analytic(survival: impl Fn(f64) -> f64, sizes: &[usize]) -> Result<NormalizingSeq> {
    let mut values = Vec::with_capacity(sizes.len());
    let mut residuals = Vec::with_capacity(sizes.len());
    for &n in sizes {
        if n == 0 {
            return Err(Error::InvalidArgument("index-set size must be positive".into()));
        }
        let target = 1.0 / n as f64;
        // bracket, checking monotonicity along the way
        let mut lo = 1e-300f64.max(f64::MIN_POSITIVE);
        let mut hi = 1.0f64;
        let mut prev = survival(lo);
        while survival(hi) > target {
            let s = survival(hi);
            if s > prev + 1e-15 {
                return Err(Error::NonMonotoneTail(format!("survival increases near {hi}")));
            }
            prev = s;
            lo = hi;
            hi *= 2.0;
            if !hi.is_finite() {
                return Err(Error::NonMonotoneTail("survival never drops below 1/|Λ|".into()));
            }
        }
        if survival(lo) < target {
            return Err(Error::NonMonotoneTail(format!("survival below 1/|Λ| at the lower end {lo}")));
        }
        while (hi - lo) > 1e-12 * hi {
            let mid = 0.5 * (lo + hi);
            let s = survival(mid);
            if s > survival(lo) + 1e-15 {
                return Err(Error::NonMonotoneTail(format!("survival increases near {mid}")));
            }
            if s > target {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let a = 0.5 * (lo + hi);
        values.push(a);
        residuals.push(n as f64 * survival(a) - 1.0);
    }
    Ok(NormalizingSeq { mode: NormalizerMode::Analytic, sizes: sizes.to_vec(), values, residuals })
}

/// The (1 − 1/|Λ|) quantile of a pooled sample of |X| values (needs ≥ 10|Λ| values).
pub fn normalizer_empirical(sample: &[f64], sizes: &[usize]) -> Result<NormalizingSeq> {
    let mut s: Vec<f64> = sample.iter().map(|x| x.abs()).collect();
    s.sort_by(f64::total_cmp);
    let mut values = Vec::new();
    let mut residuals = Vec::new();
    for &n in sizes {
        if s.len() < 10 * n {
            return Err(Error::TooFewSamples { min: 10 * n, got: s.len() });
        }
        let a = crate::stats::quantile(&s, 1.0 - 1.0 / n as f64);
        let above = s.len() - s.partition_point(|x| *x <= a);
        values.push(a);
        residuals.push(n as f64 * above as f64 / s.len() as f64 - 1.0);
    }
    Ok(NormalizingSeq { mode: NormalizerMode::Empirical, sizes: sizes.to_vec(), values, residuals })
}

/// Points X_t/a with |X_t/a| > floor. For d > 1 the stored value is the norm.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct PointConfig {
    pub points: Vec<f64>,
    pub floor: f64,
}

impl PointConfig {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

pub fn exceedance_process(real: &FieldRealization, lambda: &IndexSet, a: f64, floor: f64) -> Result<PointConfig> {
    if !(floor > 0.0) || !(a > 0.0) {
        return Err(Error::InvalidArgument("normalizer and floor must be positive".into()));
    }
    let mut points = Vec::new();
    for t in lambda.iter() {
        let i = real.window.index_of(t).ok_or(Error::NotInIndexSet(*t))?;
        let v = if real.value_dim == 1 { real.values[i] / a } else { real.abs(i) / a };
        if v.abs() > floor {
            points.push(v);
        }
    }
    Ok(PointConfig { points, floor })
}
