use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::IndexSet;
use crate::models::FieldRealization;
use crate::stats::{dkw_epsilon, ks_distance};

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct FrechetFit {
    pub theta: f64,
    pub alpha: f64,
    pub ks: f64,
    /// DKW half-width at the requested level.
    pub band: f64,
    pub n: usize,
    pub pass: bool,
    /// (model quantile, empirical order statistic) pairs for QQ plots.
    pub qq: Vec<(f64, f64)>,
}

/// KS distance between the law of max_{Λ_n}|X|/a_n over realizations and
/// Φ_α^θ(x) = exp(−θ x^{−α}).
pub fn frechet_fit(
    reals: &[FieldRealization],
    lambda_n: &IndexSet,
    a_n: f64,
    alpha: f64,
    theta: f64,
    level: f64,
) -> Result<FrechetFit> {
    if reals.len() < 2 {
        return Err(Error::TooFewSamples { min: 2, got: reals.len() });
    }
    let mut maxima = Vec::with_capacity(reals.len());
    for real in reals {
        let mut m = 0.0f64;
        for t in lambda_n.iter() {
            let i = real.window.index_of(t).ok_or(Error::NotInIndexSet(*t))?;
            m = m.max(real.abs(i));
        }
        maxima.push(m / a_n);
    }
    Ok(fit_maxima(maxima, alpha, theta, level))
}

pub(crate) fn fit_maxima(mut maxima: Vec<f64>, alpha: f64, theta: f64, level: f64) -> FrechetFit {
    let cdf = |x: f64| if x > 0.0 { (-theta * x.powf(-alpha)).exp() } else { 0.0 };
    let ks = ks_distance(&maxima, cdf);
    let n = maxima.len();
    let band = dkw_epsilon(n, level);
    maxima.sort_by(f64::total_cmp);
    let qq = maxima
        .iter()
        .enumerate()
        .map(|(i, m)| {
            let p = (i as f64 + 0.5) / n as f64;
            ((theta / -p.ln()).powf(1.0 / alpha), *m)
        })
        .collect();
    FrechetFit { theta, alpha, ks, band, n, pass: ks <= band, qq }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng;

    #[test]
    fn exact_frechet_sample_fits_and_wrong_theta_does_not() {
        let mut r = rng::stream(1, 0);
        // max of θ-scaled standard Fréchet: (θ)^{1/α} Z
        let xs: Vec<f64> = (0..4000).map(|_| 0.5 * rng::frechet(&mut r, 1.0)).collect();
        let good = fit_maxima(xs.clone(), 1.0, 0.5, 0.05);
        assert!(good.pass, "{}", good.ks);
        let bad = fit_maxima(xs, 1.0, 1.0, 0.05);
        assert!(!bad.pass);
        assert_eq!(bad.qq.len(), 4000);
    }
}
