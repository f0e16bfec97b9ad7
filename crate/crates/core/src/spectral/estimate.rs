use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{Modulus, SpectralSampler};
use crate::error::{Error, Result};
use crate::lattice::Point;
use crate::models::FieldRealization;
use crate::rng::SimRng;
use crate::stats::{distance_correlation_test, dkw_epsilon, ratio_se, DcorTest, Estimate};

/// Largest admissible fraction of exceedances before a threshold counts as too low.
pub const MAX_EXCEEDANCE_FRACTION: f64 = 0.1;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Normalization {
    ByAbsX0,
    ByRho { modulus: Modulus },
}

/// Normalized windows around threshold exceedances, stored row-major.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SpectralSamples {
    pub offsets: Vec<Point>,
    pub values: Vec<f64>,
    /// (realization stream, anchor point) per sample.
    pub anchors: Vec<(u64, Point)>,
    /// |X_{t0}|/u or ρ/u per sample.
    pub radial: Vec<f64>,
    pub normalization: Normalization,
    pub threshold: f64,
    pub alpha: f64,
    pub exceedance_fraction: f64,
}

impl SpectralSamples {
    pub fn len(&self) -> usize {
        self.anchors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.anchors.is_empty()
    }

    pub fn sample(&self, i: usize) -> &[f64] {
        let w = self.offsets.len();
        &self.values[i * w..(i + 1) * w]
    }

    pub fn column(&self, offset: &Point) -> Option<usize> {
        self.offsets.iter().position(|o| o == offset)
    }

    /// Values at one offset across all samples.
    pub fn marginal(&self, offset: &Point) -> Option<Vec<f64>> {
        let c = self.column(offset)?;
        Some((0..self.len()).map(|i| self.sample(i)[c]).collect())
    }

    /// CSV: stream, anchor coords, offset coords, value.
    pub fn write_csv(&self, mut w: impl Write) -> std::io::Result<()> {
        let k = self.offsets.first().map(|p| p.dim()).unwrap_or(0);
        let mut head = vec!["stream".to_string()];
        head.extend((1..=k).map(|i| format!("anchor_{i}")));
        head.extend((1..=k).map(|i| format!("offset_{i}")));
        head.push("value".into());
        writeln!(w, "{}", head.join(","))?;
        for (i, (s, a)) in self.anchors.iter().enumerate() {
            for (o, v) in self.offsets.iter().zip(self.sample(i)) {
                let mut row = vec![s.to_string()];
                row.extend(a.coords().iter().map(|c| c.to_string()));
                row.extend(o.coords().iter().map(|c| c.to_string()));
                row.push(format!("{v:e}"));
                writeln!(w, "{}", row.join(","))?;
            }
        }
        Ok(())
    }
}

fn sorted_offsets(w: &[Point]) -> Vec<Point> {
    let mut o = w.to_vec();
    o.sort();
    o.dedup();
    o
}

struct Hit {
    anchor: Point,
    radial: f64,
    values: Vec<f64>,
}

/// Θ samples: for every t0 with |X_{t0}| > u and t0 + W inside the data window,
/// the window X_{t0+s}/|X_{t0}|, s ∈ W.
pub fn estimate_spectral_tail(reals: &[FieldRealization], u: f64, w: &[Point], alpha: f64) -> Result<SpectralSamples> {
    let offsets = sorted_offsets(w);
    collect(reals, u, &offsets, &[Point::zero(dims(reals)?)], alpha, Normalization::ByAbsX0, |_, r, _, i0| {
        Some(r.abs(i0))
    })
}

/// Θ_Υ samples: anchors are t0 with ρ_{(Υ)_{t0}}(X) > u; values X_{t0+s}/ρ.
pub fn estimate_upsilon_tail(
    reals: &[FieldRealization],
    rho: &Modulus,
    u: f64,
    w: &[Point],
    alpha: f64,
) -> Result<SpectralSamples> {
    let offsets = sorted_offsets(w);
    let absv: Vec<Vec<f64>> = reals.par_iter().map(|r| r.abs_values()).collect();
    let norm = Normalization::ByRho { modulus: rho.clone() };
    collect(reals, u, &offsets, &rho.upsilon, alpha, norm, |k, r, t0, _| {
        rho.eval_at(&r.window, &absv[k], t0).ok()
    })
}

fn dims(reals: &[FieldRealization]) -> Result<usize> {
    reals.first().map(|r| r.window.dim()).ok_or(Error::TooFewSamples { min: 1, got: 0 })
}

fn collect(
    reals: &[FieldRealization],
    u: f64,
    offsets: &[Point],
    patch: &[Point],
    alpha: f64,
    normalization: Normalization,
    level: impl Fn(usize, &FieldRealization, &Point, usize) -> Option<f64> + Sync,
) -> Result<SpectralSamples> {
    if reals.is_empty() {
        return Err(Error::TooFewSamples { min: 1, got: 0 });
    }
    let per: Vec<(Vec<Hit>, usize, usize, f64)> = reals
        .par_iter()
        .enumerate()
        .map(|(k, r)| {
            let mut hits = Vec::new();
            let (mut eligible, mut exceed, mut mx) = (0usize, 0usize, 0.0f64);
            for (i0, t0) in r.window.iter().enumerate() {
                let inside = |s: &Point| t0.checked_add(s).map(|p| r.window.contains(&p)).unwrap_or(false);
                if !offsets.iter().all(inside) || !patch.iter().all(inside) {
                    continue;
                }
                eligible += 1;
                let Some(lv) = level(k, r, t0, i0) else { continue };
                mx = mx.max(lv);
                if lv > u {
                    exceed += 1;
                    let values = offsets
                        .iter()
                        .map(|s| {
                            let j = r.window.index_of(&(*t0 + *s)).expect("checked inside");
                            r.values[j * r.value_dim] / lv
                        })
                        .collect();
                    hits.push(Hit { anchor: *t0, radial: lv / u, values });
                }
            }
            (hits, eligible, exceed, mx)
        })
        .collect();
    let eligible: usize = per.iter().map(|p| p.1).sum();
    let exceed: usize = per.iter().map(|p| p.2).sum();
    let observed_max = per.iter().map(|p| p.3).fold(0.0, f64::max);
    if exceed == 0 {
        return Err(Error::NoExceedances { threshold: u, observed_max });
    }
    let fraction = exceed as f64 / eligible as f64;
    if fraction > MAX_EXCEEDANCE_FRACTION {
        return Err(Error::ThresholdTooLow { threshold: u, level: 1.0 - MAX_EXCEEDANCE_FRACTION, fraction });
    }
    let mut out = SpectralSamples {
        offsets: offsets.to_vec(),
        values: Vec::with_capacity(exceed * offsets.len()),
        anchors: Vec::with_capacity(exceed),
        radial: Vec::with_capacity(exceed),
        normalization,
        threshold: u,
        alpha,
        exceedance_fraction: fraction,
    };
    for (r, (hits, ..)) in reals.iter().zip(per) {
        for h in hits {
            out.anchors.push((r.stream, h.anchor));
            out.radial.push(h.radial);
            out.values.extend(h.values);
        }
    }
    Ok(out)
}

/// Empirical (1 − 1/m) style threshold: the q-quantile of all |X_t| values.
pub fn marginal_quantile(reals: &[FieldRealization], q: f64) -> f64 {
    let mut all: Vec<f64> = reals.iter().flat_map(|r| r.abs_values()).collect();
    all.sort_by(f64::total_cmp);
    crate::stats::quantile(&all, q)
}

/// sup over y ∈ [1, y_max] of |P̂(R > y) − y^{-α}| against the DKW band.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct ParetoCheck {
    pub max_deviation: f64,
    pub band: f64,
    pub n: usize,
    pub pass: bool,
}

pub fn pareto_check(radial: &[f64], alpha: f64, y_max: f64) -> ParetoCheck {
    let mut r = radial.to_vec();
    r.sort_by(f64::total_cmp);
    let n = r.len();
    let surv = |k: usize| (n - k) as f64 / n as f64; // fraction strictly above r[k-1]
    let mut d: f64 = 0.0;
    let mut check = |y: f64, s: f64| d = d.max((s - y.powf(-alpha)).abs());
    check(1.0, surv(r.partition_point(|x| *x <= 1.0)));
    for (k, &y) in r.iter().enumerate() {
        if y < 1.0 || y > y_max {
            continue;
        }
        // just below and at the jump
        check(y, surv(k));
        check(y, surv(k + 1));
    }
    check(y_max, surv(r.partition_point(|x| *x <= y_max)));
    let band = dkw_epsilon(n, 0.05);
    ParetoCheck { max_deviation: d, band, n, pass: d <= band }
}

/// Distance-correlation check that ρ_Υ(Y) and Θ_Υ are independent.
pub fn independence_check(samples: &SpectralSamples, max_n: usize, permutations: usize, seed: u64) -> DcorTest {
    let n = samples.len().min(max_n);
    let step = samples.len() as f64 / n as f64;
    let idx: Vec<usize> = (0..n).map(|i| (i as f64 * step) as usize).collect();
    let x: Vec<Vec<f64>> = idx.iter().map(|&i| vec![samples.radial[i]]).collect();
    let y: Vec<Vec<f64>> = idx.iter().map(|&i| samples.sample(i).to_vec()).collect();
    distance_correlation_test(&x, &y, permutations, seed)
}

/// P(ρ_Υ(X) > u)/P(|X_0| > u) over anchors where both are observable.
pub fn exceedance_ratio(reals: &[FieldRealization], rho: &Modulus, u: f64) -> Result<Estimate> {
    let per: Vec<(f64, f64)> = reals
        .par_iter()
        .map(|r| {
            let absv = r.abs_values();
            let (mut a, mut b) = (0.0, 0.0);
            for (i, t0) in r.window.iter().enumerate() {
                let Ok(v) = rho.eval_at(&r.window, &absv, t0) else { continue };
                if v > u {
                    a += 1.0;
                }
                if absv[i] > u {
                    b += 1.0;
                }
            }
            (a, b)
        })
        .collect();
    let (a, b): (Vec<f64>, Vec<f64>) = per.into_iter().unzip();
    if b.iter().sum::<f64>() == 0.0 {
        return Err(Error::NoExceedances { threshold: u, observed_max: f64::NAN });
    }
    Ok(ratio_se(&a, &b))
}

/// P(Y_{t_k} < y_k for all k): fraction of anchors with |X_{t0}| > u whose
/// shifted values all stay below y_k·u. SE clusters by realization.
pub fn tail_field_probability(reals: &[FieldRealization], u: f64, points: &[Point], levels: &[f64]) -> Result<Estimate> {
    let per: Vec<(f64, f64)> = reals
        .par_iter()
        .map(|r| {
            let (mut hit, mut n) = (0.0, 0.0);
            for (i, t0) in r.window.iter().enumerate() {
                if r.abs(i) <= u {
                    continue;
                }
                let idx: Option<Vec<usize>> = points.iter().map(|p| r.window.index_of(&(*t0 + *p))).collect();
                let Some(idx) = idx else { continue };
                n += 1.0;
                if idx.iter().zip(levels).all(|(&j, y)| r.values[j * r.value_dim] < y * u) {
                    hit += 1.0;
                }
            }
            (hit, n)
        })
        .collect();
    let (h, n): (Vec<f64>, Vec<f64>) = per.into_iter().unzip();
    if n.iter().sum::<f64>() == 0.0 {
        return Err(Error::NoExceedances { threshold: u, observed_max: f64::NAN });
    }
    Ok(ratio_se(&h, &n))
}

/// Resamples rows of an empirical sample set; offsets outside the set give NaN.
pub struct EmpiricalSpectral<'a> {
    samples: &'a SpectralSamples,
    dim: usize,
}

impl<'a> EmpiricalSpectral<'a> {
    pub fn new(samples: &'a SpectralSamples) -> Result<Self> {
        if samples.is_empty() {
            return Err(Error::TooFewSamples { min: 1, got: 0 });
        }
        Ok(EmpiricalSpectral { samples, dim: samples.offsets[0].dim() })
    }
}

impl SpectralSampler for EmpiricalSpectral<'_> {
    fn alpha(&self) -> f64 {
        self.samples.alpha
    }

    fn dim(&self) -> usize {
        self.dim
    }

    fn sample(&self, rng: &mut SimRng, offsets: &[Point], out: &mut [f64]) {
        use rand::Rng;
        let i = rng.random_range(0..self.samples.len());
        let row = self.samples.sample(i);
        for (o, x) in out.iter_mut().zip(offsets) {
            *o = self.samples.column(x).map(|c| row[c]).unwrap_or(f64::NAN);
        }
    }
}
