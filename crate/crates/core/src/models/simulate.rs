use std::collections::HashMap;
use std::io::Write;
use std::sync::Arc;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{FieldModel, KernelTerm, VLaw, WeightLaw};
use crate::error::{Error, Result};
use crate::lattice::{IndexSet, Point};
use crate::rng::{self, SimRng};

/// How the Poisson series of a de Haan simulation was cut.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TruncationReport {
    pub points_used: usize,
    /// Bound on sup_t V_t used by the stop rule.
    pub envelope: f64,
    /// Relative error bound on every site value implied by the stop rule.
    pub relative_bias_bound: f64,
    /// false when the envelope is user-supplied for an unbounded weight law.
    pub envelope_exact: bool,
    /// Probability that one profile breaks the envelope (0 when exact).
    pub envelope_violation_prob: f64,
}

#[derive(Clone, Debug)]
pub struct FieldRealization {
    pub window: Arc<IndexSet>,
    /// Row-major, `value_dim` entries per window point, in window order.
    pub values: Vec<f64>,
    pub value_dim: usize,
    pub model: Arc<FieldModel>,
    pub seed: u64,
    pub stream: u64,
    pub truncation: Option<TruncationReport>,
}

impl FieldRealization {
    pub fn len(&self) -> usize {
        self.window.len()
    }

    pub fn is_empty(&self) -> bool {
        self.window.is_empty()
    }

    /// |X_t| at window index i (Euclidean norm when d > 1).
    #[inline]
    pub fn abs(&self, i: usize) -> f64 {
        if self.value_dim == 1 {
            self.values[i].abs()
        } else {
            let v = &self.values[i * self.value_dim..(i + 1) * self.value_dim];
            v.iter().map(|x| x * x).sum::<f64>().sqrt()
        }
    }

    pub fn abs_values(&self) -> Vec<f64> {
        (0..self.len()).map(|i| self.abs(i)).collect()
    }

    pub fn value_at(&self, p: &Point) -> Option<&[f64]> {
        let i = self.window.index_of(p)?;
        Some(&self.values[i * self.value_dim..(i + 1) * self.value_dim])
    }
}

/// Draws one realization on `window`; reproducible from (seed, stream).
pub fn simulate(model: &FieldModel, window: &Arc<IndexSet>, seed: u64, stream: u64) -> Result<FieldRealization> {
    model.validate()?;
    if window.is_empty() {
        return Err(Error::InvalidArgument("empty simulation window".into()));
    }
    let dim = window.dim();
    check_model_dim(model, dim)?;
    let mut rng = rng::stream(seed, stream);
    let mut truncation = None;
    let values = match model {
        FieldModel::IidFrechet { alpha, scale, value_dim } => iid(&mut rng, window.len(), *alpha, *scale, *value_dim),
        FieldModel::MovingMaxima { alpha, kernel } => {
            let noise = NoiseField::draw(&mut rng, window, kernel, |r| rng::frechet(r, *alpha))?;
            window
                .iter()
                .map(|t| {
                    kernel
                        .iter()
                        .map(|k| k.weight * noise.at(&(*t - k.at)))
                        .fold(0.0, f64::max)
                })
                .collect()
        }
        FieldModel::LinearHeavyTail { alpha, coeffs } => {
            let noise = NoiseField::draw(&mut rng, window, coeffs, |r| {
                let z = rng::pareto(r, *alpha);
                if r.random::<bool>() {
                    z
                } else {
                    -z
                }
            })?;
            window
                .iter()
                .map(|t| coeffs.iter().map(|k| k.weight * noise.at(&(*t - k.at))).sum())
                .collect()
        }
        FieldModel::DeHaan { v, envelope, rel_tol } => {
            let (vals, rep) = de_haan(&mut rng, window, v, *envelope, *rel_tol)?;
            truncation = Some(rep);
            vals
        }
    };
    Ok(FieldRealization {
        window: window.clone(),
        values,
        value_dim: model.value_dim(),
        model: Arc::new(model.clone()),
        seed,
        stream,
        truncation,
    })
}

/// Realizations for streams 0..n, generated in parallel, returned in stream order.
pub fn simulate_many(model: &FieldModel, window: &Arc<IndexSet>, seed: u64, n: usize) -> Result<Vec<FieldRealization>> {
    (0..n as u64).into_par_iter().map(|s| simulate(model, window, seed, s)).collect()
}

fn check_model_dim(model: &FieldModel, dim: usize) -> Result<()> {
    let first = match model {
        FieldModel::MovingMaxima { kernel, .. } => kernel.first().map(|t| t.at.dim()),
        FieldModel::LinearHeavyTail { coeffs, .. } => coeffs.first().map(|t| t.at.dim()),
        FieldModel::DeHaan { v, .. } => v.dim(),
        FieldModel::IidFrechet { .. } => None,
    };
    match first {
        Some(d) if d != dim => Err(Error::DimensionMismatch { expected: dim, got: d }),
        _ => Ok(()),
    }
}

fn iid(rng: &mut SimRng, n: usize, alpha: f64, scale: f64, d: usize) -> Vec<f64> {
    let mut out = vec![0.0; n * d];
    for i in 0..n {
        let r = scale * rng::frechet(rng, alpha);
        if d == 1 {
            out[i] = r;
        } else {
            let axis = rng.random_range(0..d);
            out[i * d + axis] = if rng.random::<bool>() { r } else { -r };
        }
    }
    out
}

/// Noise on every site t - s (t in the window, s in the kernel support).
struct NoiseField {
    sites: IndexSet,
    values: Vec<f64>,
}

impl NoiseField {
    fn draw(
        rng: &mut SimRng,
        window: &IndexSet,
        kernel: &[KernelTerm],
        mut draw: impl FnMut(&mut SimRng) -> f64,
    ) -> Result<Self> {
        let mut needed: Vec<Point> = Vec::with_capacity(window.len() * kernel.len());
        for t in window.iter() {
            for k in kernel {
                needed.push(t.checked_sub(&k.at)?);
            }
        }
        let sites = IndexSet::new(window.dim(), needed)?;
        let values = (0..sites.len()).map(|_| draw(rng)).collect();
        Ok(NoiseField { sites, values })
    }

    #[inline]
    fn at(&self, p: &Point) -> f64 {
        self.values[self.sites.index_of(p).expect("noise covers every needed site")]
    }
}

/// A profile drawn for one Poisson point: weights on the (shared) support.
enum Profile<'a> {
    Fixed(&'a [KernelTerm]),
    Random { support: &'a [Point], law: WeightLaw },
}

fn de_haan(
    rng: &mut SimRng,
    window: &IndexSet,
    v: &VLaw,
    envelope: Option<f64>,
    rel_tol: f64,
) -> Result<(Vec<f64>, TruncationReport)> {
    let n = window.len();
    match v {
        VLaw::Constant | VLaw::Deterministic { .. } => {
            // All V_i equal: only the largest U matters.
            let u = 1.0 / rng::exp1(rng);
            let vals = match v {
                VLaw::Constant => vec![u; n],
                VLaw::Deterministic { values } => {
                    let m: HashMap<Point, f64> = values.iter().map(|t| (t.at, t.weight)).collect();
                    window.iter().map(|t| u * m.get(t).copied().unwrap_or(0.0)).collect()
                }
                _ => unreachable!(),
            };
            let env = match v {
                VLaw::Deterministic { values } => values.iter().map(|t| t.weight).fold(0.0, f64::max),
                _ => 1.0,
            };
            let rep = TruncationReport {
                points_used: 1,
                envelope: env,
                relative_bias_bound: 0.0,
                envelope_exact: true,
                envelope_violation_prob: 0.0,
            };
            Ok((vals, rep))
        }
        VLaw::Shifted { kernel } => {
            let env = kernel.iter().map(|t| t.weight).fold(0.0, f64::max);
            let supp: Vec<Point> = kernel.iter().map(|t| t.at).collect();
            m3(rng, window, &supp, Profile::Fixed(kernel), env, true, 0.0, rel_tol)
        }
        VLaw::RandomProfile { support, weights } => {
            let (env, exact, viol) = match (weights.bound(), envelope) {
                (Some(b), _) => (b, true, 0.0),
                (None, Some(e)) => {
                    // P(max of |support| standard exponentials > e)
                    let p1 = (-e).exp();
                    (e, false, 1.0 - (1.0 - p1).powi(support.len() as i32))
                }
                (None, None) => return Err(Error::EnvelopeRequired),
            };
            m3(rng, window, support, Profile::Random { support, law: *weights }, env, exact, viol, rel_tol)
        }
    }
}

/// Mixed moving maxima: S uniform over the shifts that can reach the window.
#[allow(clippy::too_many_arguments)]
fn m3(
    rng: &mut SimRng,
    window: &IndexSet,
    supp: &[Point],
    profile: Profile<'_>,
    weight_env: f64,
    exact: bool,
    violation: f64,
    rel_tol: f64,
) -> Result<(Vec<f64>, TruncationReport)> {
    let mut shifts: Vec<Point> = Vec::with_capacity(window.len() * supp.len());
    for t in window.iter() {
        for s in supp {
            shifts.push(t.checked_sub(s)?);
        }
    }
    shifts.sort();
    shifts.dedup();
    let dsize = shifts.len() as f64;
    let env = dsize * weight_env;
    let n = window.len();
    let mut x = vec![0.0f64; n];
    let mut unfilled = n;
    let mut min_bound = 0.0f64;
    let mut gamma = 0.0f64;
    let mut used = 0usize;
    let mut w = vec![0.0; supp.len()];
    loop {
        gamma += rng::exp1(rng);
        let u = 1.0 / gamma;
        if unfilled == 0 && u * env <= (1.0 + rel_tol) * min_bound {
            break;
        }
        used += 1;
        let s = shifts[rng.random_range(0..shifts.len())];
        match &profile {
            Profile::Fixed(k) => {
                for (wi, t) in w.iter_mut().zip(k.iter()) {
                    *wi = t.weight;
                }
            }
            Profile::Random { law, .. } => {
                for wi in w.iter_mut() {
                    *wi = law.sample(rng);
                }
            }
        }
        let pts: &[Point] = match &profile {
            Profile::Fixed(_) => supp,
            Profile::Random { support, .. } => support,
        };
        for (p, wi) in pts.iter().zip(&w) {
            if let Some(i) = window.index_of(&(s + *p)) {
                let val = u * dsize * wi;
                if val > x[i] {
                    if x[i] == 0.0 {
                        unfilled -= 1;
                    }
                    x[i] = val;
                }
            }
        }
        // refresh the running minimum now and then; it only grows
        if unfilled == 0 && (used % n.max(16) == 0 || min_bound == 0.0) {
            min_bound = x.iter().copied().fold(f64::INFINITY, f64::min);
        }
    }
    let rep = TruncationReport {
        points_used: used,
        envelope: env,
        relative_bias_bound: rel_tol,
        envelope_exact: exact,
        envelope_violation_prob: violation,
    };
    Ok((x, rep))
}

/// CSV dump: one row per window point, columns t_1..t_k then value(s).
pub fn write_csv(real: &FieldRealization, mut w: impl Write) -> std::io::Result<()> {
    let k = real.window.dim();
    let mut head: Vec<String> = (1..=k).map(|i| format!("t_{i}")).collect();
    if real.value_dim == 1 {
        head.push("value".into());
    } else {
        head.extend((1..=real.value_dim).map(|i| format!("value_{i}")));
    }
    writeln!(w, "{}", head.join(","))?;
    for (i, t) in real.window.iter().enumerate() {
        let mut row: Vec<String> = t.coords().iter().map(|c| c.to_string()).collect();
        for v in &real.values[i * real.value_dim..(i + 1) * real.value_dim] {
            row.push(format!("{v:e}"));
        }
        writeln!(w, "{}", row.join(","))?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::kernel_1d;
    use crate::stats::{dkw_epsilon, ks_distance, ks_two_sample};

    fn line(n: i64) -> Arc<IndexSet> {
        Arc::new(IndexSet::hyperrectangle(&Point::of(&[1]), &Point::of(&[n])).unwrap())
    }

    #[test]
    fn seed_determinism() {
        let m = FieldModel::moving_maxima(1.0, kernel_1d(&[1.0, 0.5]));
        let w = line(50);
        let a = simulate(&m, &w, 9, 3).unwrap();
        let b = simulate(&m, &w, 9, 3).unwrap();
        assert_eq!(a.values, b.values);
        let c = simulate(&m, &w, 9, 4).unwrap();
        assert_ne!(a.values, c.values);
    }

    #[test]
    fn iid_marginal_within_dkw() {
        let w = line(4000);
        let r = simulate(&FieldModel::iid(1.0), &w, 1, 0).unwrap();
        let d = ks_distance(&r.values, |u| (-1.0 / u).exp());
        assert!(d < dkw_epsilon(4000, 0.001), "{d}");
    }

    #[test]
    fn moving_maxima_block_max_law() {
        // P(max_{1..n} X ≤ u) = exp(-(n+1)/u) for the kernel (1,1).
        let w = line(5);
        let maxima: Vec<f64> = simulate_many(&FieldModel::moving_maxima(1.0, kernel_1d(&[1.0, 1.0])), &w, 2, 3000)
            .unwrap()
            .iter()
            .map(|r| r.values.iter().copied().fold(0.0, f64::max))
            .collect();
        let d = ks_distance(&maxima, |u| (-6.0 / u).exp());
        assert!(d < dkw_epsilon(3000, 0.001), "{d}");
    }

    #[test]
    fn constant_v_is_common_frechet() {
        let w = line(10);
        let rs = simulate_many(&FieldModel::de_haan(VLaw::Constant), &w, 5, 2000).unwrap();
        assert!(rs.iter().all(|r| r.values.iter().all(|v| *v == r.values[0] && *v > 0.0)));
        let first: Vec<f64> = rs.iter().map(|r| r.values[0]).collect();
        assert!(ks_distance(&first, |u| (-1.0 / u).exp()) < dkw_epsilon(2000, 0.001));
    }

    #[test]
    fn m3_marginal_and_stationarity() {
        let kernel = kernel_1d(&[0.5, 1.0, 0.25]);
        let m = FieldModel::de_haan(VLaw::Shifted { kernel });
        let w = line(12);
        let rs = simulate_many(&m, &w, 11, 3000).unwrap();
        assert!(rs.iter().all(|r| r.values.iter().all(|v| *v > 0.0)));
        let a: Vec<f64> = rs.iter().map(|r| r.values[0]).collect();
        let b: Vec<f64> = rs.iter().map(|r| r.values[11]).collect();
        let eps = dkw_epsilon(3000, 0.001);
        assert!(ks_distance(&a, |u| (-1.75 / u).exp()) < eps);
        assert!(ks_distance(&b, |u| (-1.75 / u).exp()) < eps);
    }

    #[test]
    fn max_stability_of_random_profile() {
        let m = FieldModel::de_haan(VLaw::RandomProfile {
            support: vec![Point::of(&[0]), Point::of(&[1])],
            weights: WeightLaw::Uniform { lo: 0.0, hi: 2.0 },
        });
        let w = line(6);
        let rs = simulate_many(&m, &w, 21, 4000).unwrap();
        let single: Vec<f64> = rs[..2000].iter().map(|r| r.values[2]).collect();
        let maxed: Vec<f64> = rs[2000..]
            .chunks(2)
            .map(|c| c.iter().map(|r| r.values[2]).fold(0.0, f64::max) / 2.0)
            .collect();
        assert!(ks_two_sample(&single, &maxed) < 0.07);
    }

    #[test]
    fn unbounded_weights_need_envelope() {
        let v = VLaw::RandomProfile { support: vec![Point::of(&[0])], weights: WeightLaw::Exponential };
        let w = line(3);
        assert!(matches!(simulate(&FieldModel::de_haan(v.clone()), &w, 0, 0), Err(Error::EnvelopeRequired)));
        let m = FieldModel::DeHaan { v, envelope: Some(12.0), rel_tol: 1e-6 };
        let r = simulate(&m, &w, 0, 0).unwrap();
        let t = r.truncation.unwrap();
        assert!(!t.envelope_exact && t.envelope_violation_prob < 1e-5);
    }

    #[test]
    fn csv_has_header_and_rows() {
        let w = line(3);
        let r = simulate(&FieldModel::iid(1.0), &w, 0, 0).unwrap();
        let mut buf = Vec::new();
        write_csv(&r, &mut buf).unwrap();
        let s = String::from_utf8(buf).unwrap();
        assert_eq!(s.lines().count(), 4);
        assert!(s.starts_with("t_1,value"));
    }
}
