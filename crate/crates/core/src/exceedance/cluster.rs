use rand::Rng;
use serde::{Deserialize, Serialize};

use super::PointConfig;
use crate::error::{Error, Result};
use crate::lattice::Point;
use crate::rng::{self, SimRng};
use crate::spectral::SpectralSampler;
use crate::stats::chi_square_pvalue;

/// One j ∈ I*: a Θ_{E_j} sampler, Ξ*_j ∩ K_R, and the weights γ*_j, c_j.
pub struct ClusterTerm<'a> {
    pub sampler: &'a dyn SpectralSampler,
    pub xi: Vec<Point>,
    pub gamma: f64,
    pub c: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ClusterDraw {
    pub config: PointConfig,
    /// Radial scale Γ^{-1/α}(γc)^{1/α} of every generated cluster.
    pub cluster_scales: Vec<f64>,
}

/// One draw of Σ_j Σ_i Σ_{t ∈ Ξ*_j} ε_{Γ_{j,i}^{-1/α}(γ*_j c_j)^{1/α} Q_{j,i,t}}, restricted to
/// points above `floor`. With `mixture`, a single Poisson stream with scale (Σγc)^{1/α}
/// picks j with probability γ_j c_j / Σγc per cluster. `envelope` bounds |Q|
/// (1 for α-norm normalized clusters) and drives the stopping rule.
pub fn sample_cluster_process(
    terms: &[ClusterTerm<'_>],
    alpha: f64,
    floor: f64,
    envelope: Option<f64>,
    mixture: bool,
    rng: &mut SimRng,
) -> Result<ClusterDraw> {
    let env = envelope.ok_or_else(|| Error::InvalidArgument("a bound on |Q| (envelope) is required".into()))?;
    if !(floor > 0.0) {
        return Err(Error::InvalidArgument("floor must be positive".into()));
    }
    let weights: Vec<f64> = terms.iter().map(|t| t.gamma * t.c).collect();
    if weights.iter().any(|w| !(w.is_finite() && *w >= 0.0)) {
        return Err(Error::InvalidArgument("γ*·c must be finite and non-negative".into()));
    }
    let mut out = ClusterDraw { config: PointConfig { points: Vec::new(), floor }, cluster_scales: Vec::new() };
    let mut buf: Vec<f64> = Vec::new();
    let mut emit = |term: &ClusterTerm<'_>, scale: f64, rng: &mut SimRng, out: &mut ClusterDraw| {
        buf.resize(term.xi.len(), 0.0);
        term.sampler.sample(rng, &term.xi, &mut buf);
        let norm = buf.iter().map(|v| v.abs().powf(alpha)).sum::<f64>().powf(1.0 / alpha);
        out.cluster_scales.push(scale);
        if norm > 0.0 {
            for v in &buf {
                let x = scale * v / norm;
                if x.abs() > floor {
                    out.config.points.push(x);
                }
            }
        }
    };
    if mixture {
        let total: f64 = weights.iter().sum();
        if total > 0.0 {
            let mut gamma = 0.0;
            loop {
                gamma += rng::exp1(rng);
                let scale = (total / gamma).powf(1.0 / alpha);
                if scale * env < floor {
                    break;
                }
                let mut u = rng.random::<f64>() * total;
                let mut j = 0;
                while j + 1 < weights.len() && u >= weights[j] {
                    u -= weights[j];
                    j += 1;
                }
                emit(&terms[j], scale, rng, &mut out);
            }
        }
    } else {
        for (term, w) in terms.iter().zip(&weights) {
            if *w == 0.0 {
                continue;
            }
            let mut gamma = 0.0;
            loop {
                gamma += rng::exp1(rng);
                let scale = (w / gamma).powf(1.0 / alpha);
                if scale * env < floor {
                    break;
                }
                emit(term, scale, rng, &mut out);
            }
        }
    }
    Ok(out)
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CountGof {
    pub mean: f64,
    pub observed: Vec<f64>,
    pub expected: Vec<f64>,
    pub p_value: f64,
}

/// Chi-square goodness of fit of counts to Poisson(mean); the upper tail is
/// pooled so that every bin expects at least 5.
pub fn poisson_count_gof(counts: &[usize], mean: f64) -> CountGof {
    let n = counts.len() as f64;
    let mut pmf = Vec::new();
    let mut p = (-mean).exp();
    let mut k = 0usize;
    let mut cum = 0.0;
    // bins 0..K while the remaining tail still expects ≥ 5
    while n * (1.0 - cum - p) >= 5.0 && n * p >= 5.0 {
        pmf.push(p);
        cum += p;
        k += 1;
        p *= mean / k as f64;
    }
    let kmax = pmf.len();
    let mut expected: Vec<f64> = pmf.iter().map(|q| q * n).collect();
    expected.push(n * (1.0 - cum));
    let mut observed = vec![0.0; kmax + 1];
    for &c in counts {
        observed[c.min(kmax)] += 1.0;
    }
    let p_value = if expected.len() < 2 { 1.0 } else { chi_square_pvalue(&observed, &expected, 0) };
    CountGof { mean, observed, expected, p_value }
}
