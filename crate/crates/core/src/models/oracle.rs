//! Analytic tail objects of the built-in models: exact samplers of the
//! (Υ-)spectral tail field for max-linear models, the Monte Carlo formula for
//! the tail field of a max-stable field, and the decay diagnostic for V.

use std::collections::HashMap;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{FieldModel, KernelTerm, VLaw, WeightLaw};
use crate::error::{Error, Result};
use crate::lattice::{InvariantOrder, LatticeUnion, Point};
use crate::rng::{self, SimRng};
use crate::spectral::{Modulus, SpectralSampler};
use crate::stats::{ratio_se, Estimate};

#[derive(Clone, Debug)]
enum ProfileSource {
    /// Every site carries the same value.
    Flat,
    Fixed { terms: HashMap<Point, f64>, cands: Vec<Point>, cum: Vec<f64>, norms: Vec<f64> },
    Random { support: Vec<Point>, index: HashMap<Point, usize>, law: WeightLaw, cands: Vec<Point>, bound: f64 },
}

/// Exact Θ_Υ sampler for fields of max-linear type: a single dominant noise
/// point at m, chosen with probability ∝ ρ_Υ(a_{·-m})^α, then Θ_Υ,x = a_{x-m}/ρ_Υ(a_{·-m}).
#[derive(Clone, Debug)]
pub struct MaxLinearSpectral {
    alpha: f64,
    dim: usize,
    modulus: Modulus,
    source: ProfileSource,
}

impl MaxLinearSpectral {
    pub fn fixed(alpha: f64, kernel: &[KernelTerm], modulus: Modulus) -> Result<Self> {
        let dim = modulus.dim();
        let terms: HashMap<Point, f64> = kernel.iter().filter(|t| t.weight > 0.0).map(|t| (t.at, t.weight)).collect();
        if terms.is_empty() {
            return Err(Error::InvalidModel("kernel has no positive weight".into()));
        }
        let mut cands: Vec<Point> = Vec::new();
        for u in &modulus.upsilon {
            for s in terms.keys() {
                cands.push(*u - *s);
            }
        }
        cands.sort();
        cands.dedup();
        let norms: Vec<f64> = cands
            .iter()
            .map(|m| modulus.apply(modulus.upsilon.iter().map(|u| terms.get(&(*u - *m)).copied().unwrap_or(0.0))))
            .collect();
        let mut cum = Vec::with_capacity(cands.len());
        let mut acc = 0.0;
        for w in &norms {
            acc += w.powf(alpha);
            cum.push(acc);
        }
        Ok(MaxLinearSpectral { alpha, dim, modulus, source: ProfileSource::Fixed { terms, cands, cum, norms } })
    }

    pub fn random(alpha: f64, support: &[Point], law: WeightLaw, envelope: Option<f64>, modulus: Modulus) -> Result<Self> {
        let dim = modulus.dim();
        let w_max = law.bound().or(envelope).ok_or(Error::EnvelopeRequired)?;
        let mut cands: Vec<Point> = Vec::new();
        for u in &modulus.upsilon {
            for s in support {
                cands.push(*u - *s);
            }
        }
        cands.sort();
        cands.dedup();
        let k = modulus.size().min(support.len());
        let bound = modulus.apply(std::iter::repeat_n(w_max, k));
        let index = support.iter().enumerate().map(|(i, p)| (*p, i)).collect();
        Ok(MaxLinearSpectral {
            alpha,
            dim,
            modulus,
            source: ProfileSource::Random { support: support.to_vec(), index, law, cands, bound },
        })
    }

    pub fn flat(alpha: f64, modulus: Modulus) -> Self {
        MaxLinearSpectral { alpha, dim: modulus.dim(), modulus, source: ProfileSource::Flat }
    }

    pub fn modulus(&self) -> &Modulus {
        &self.modulus
    }

    /// c_Υ = lim P(ρ_Υ(X) > u)/P(|X_0| > u).
    pub fn upsilon_constant(&self) -> Result<f64> {
        match &self.source {
            ProfileSource::Flat => Ok(self.modulus.apply(std::iter::repeat_n(1.0, self.modulus.size())).powf(self.alpha)),
            ProfileSource::Fixed { terms, cum, .. } => {
                let total: f64 = terms.values().map(|w| w.powf(self.alpha)).sum();
                Ok(cum.last().copied().unwrap_or(0.0) / total)
            }
            ProfileSource::Random { .. } => match self.modulus.kind {
                crate::spectral::ModulusKind::AlphaNorm { alpha } if (alpha - self.alpha).abs() < 1e-12 => {
                    Ok(self.modulus.size() as f64)
                }
                _ => Err(Error::UnsupportedModel {
                    op: "upsilon_constant",
                    model: "random profile with a modulus other than the matching alpha-norm".into(),
                }),
            },
        }
    }
}

impl SpectralSampler for MaxLinearSpectral {
    fn alpha(&self) -> f64 {
        self.alpha
    }

    fn dim(&self) -> usize {
        self.dim
    }

    fn sample(&self, rng: &mut SimRng, offsets: &[Point], out: &mut [f64]) {
        match &self.source {
            ProfileSource::Flat => {
                let v = 1.0 / self.modulus.apply(std::iter::repeat_n(1.0, self.modulus.size()));
                out.iter_mut().for_each(|o| *o = v);
            }
            ProfileSource::Fixed { terms, cands, cum, norms } => {
                let total = *cum.last().expect("non-empty");
                let u = rng::open01(rng) * total;
                let i = cum.partition_point(|c| *c < u).min(cands.len() - 1);
                let m = cands[i];
                let w = norms[i];
                for (o, x) in out.iter_mut().zip(offsets) {
                    *o = terms.get(&(*x - m)).copied().unwrap_or(0.0) / w;
                }
            }
            ProfileSource::Random { support, index, law, cands, bound } => loop {
                let m = cands[rng.random_range(0..cands.len())];
                let w: Vec<f64> = (0..support.len()).map(|_| law.sample(rng)).collect();
                let at = |x: &Point| index.get(&(*x - m)).map(|&i| w[i]).unwrap_or(0.0);
                let r = self.modulus.apply(self.modulus.upsilon.iter().map(at));
                if r <= 0.0 {
                    continue;
                }
                if rng::open01(rng) * bound.powf(self.alpha) <= r.powf(self.alpha) {
                    for (o, x) in out.iter_mut().zip(offsets) {
                        *o = at(x) / r;
                    }
                    break;
                }
            },
        }
    }
}

/// Θ sampler (normalized by |X_0|) for the built-in models.
pub fn spectral_tail_oracle(model: &FieldModel) -> Result<MaxLinearSpectral> {
    let dim = model_dim(model).unwrap_or(1);
    upsilon_tail_oracle(model, Modulus::origin(dim))
}

/// Θ_Υ sampler for the built-in models and a given modulus.
pub fn upsilon_tail_oracle(model: &FieldModel, modulus: Modulus) -> Result<MaxLinearSpectral> {
    model.validate()?;
    let dim = modulus.dim();
    match model {
        FieldModel::IidFrechet { alpha, value_dim, .. } => {
            if *value_dim != 1 {
                return Err(unsupported("spectral_tail_oracle", "iid with value_dim > 1"));
            }
            MaxLinearSpectral::fixed(*alpha, &[KernelTerm { at: Point::zero(dim), weight: 1.0 }], modulus)
        }
        FieldModel::MovingMaxima { alpha, kernel } => MaxLinearSpectral::fixed(*alpha, kernel, modulus),
        FieldModel::DeHaan { v, envelope, .. } => match v {
            VLaw::Constant => Ok(MaxLinearSpectral::flat(1.0, modulus)),
            VLaw::Shifted { kernel } => MaxLinearSpectral::fixed(1.0, kernel, modulus),
            VLaw::RandomProfile { support, weights } => MaxLinearSpectral::random(1.0, support, *weights, *envelope, modulus),
            VLaw::Deterministic { .. } => Err(unsupported("spectral_tail_oracle", "non-stationary deterministic V")),
        },
        FieldModel::LinearHeavyTail { .. } => Err(unsupported("spectral_tail_oracle", "linear_heavy_tail")),
    }
}

fn unsupported(op: &'static str, model: &str) -> Error {
    Error::UnsupportedModel { op, model: model.into() }
}

fn model_dim(model: &FieldModel) -> Option<usize> {
    match model {
        FieldModel::MovingMaxima { kernel, .. } => kernel.first().map(|t| t.at.dim()),
        FieldModel::LinearHeavyTail { coeffs, .. } => coeffs.first().map(|t| t.at.dim()),
        FieldModel::DeHaan { v, .. } => v.dim(),
        FieldModel::IidFrechet { .. } => None,
    }
}

/// Draws of V at a fixed list of points. Shift-type laws use shifts uniform on
/// the set that can reach those points, scaled by its size, so E[V_t] is the
/// stationary value.
pub struct VSampler<'a> {
    law: &'a VLaw,
    points: Vec<Point>,
    shifts: Vec<Point>,
    fixed: HashMap<Point, f64>,
    support_index: HashMap<Point, usize>,
}

impl<'a> VSampler<'a> {
    pub fn new(law: &'a VLaw, points: &[Point]) -> Self {
        let supp: Vec<Point> = match law {
            VLaw::Shifted { kernel } => kernel.iter().map(|t| t.at).collect(),
            VLaw::RandomProfile { support, .. } => support.clone(),
            _ => Vec::new(),
        };
        let mut shifts: Vec<Point> = points.iter().flat_map(|t| supp.iter().map(move |s| *t - *s)).collect();
        shifts.sort();
        shifts.dedup();
        let fixed = match law {
            VLaw::Shifted { kernel } | VLaw::Deterministic { values: kernel } => {
                kernel.iter().map(|t| (t.at, t.weight)).collect()
            }
            _ => HashMap::new(),
        };
        let support_index = supp.iter().enumerate().map(|(i, p)| (*p, i)).collect();
        VSampler { law, points: points.to_vec(), shifts, fixed, support_index }
    }

    pub fn points(&self) -> &[Point] {
        &self.points
    }

    /// Number of admissible shifts (the scaling factor of V).
    pub fn scale(&self) -> f64 {
        self.shifts.len().max(1) as f64
    }

    /// Profile-unit draw: f(t - S) without the shift-count scaling.
    pub fn draw_profile(&self, rng: &mut SimRng, out: &mut [f64]) {
        match self.law {
            VLaw::Constant => out.iter_mut().for_each(|o| *o = 1.0),
            VLaw::Deterministic { .. } => {
                for (o, p) in out.iter_mut().zip(&self.points) {
                    *o = self.fixed.get(p).copied().unwrap_or(0.0);
                }
            }
            VLaw::Shifted { .. } => {
                let s = self.shifts[rng.random_range(0..self.shifts.len())];
                for (o, p) in out.iter_mut().zip(&self.points) {
                    *o = self.fixed.get(&(*p - s)).copied().unwrap_or(0.0);
                }
            }
            VLaw::RandomProfile { weights, support } => {
                let s = self.shifts[rng.random_range(0..self.shifts.len())];
                let w: Vec<f64> = (0..support.len()).map(|_| weights.sample(rng)).collect();
                for (o, p) in out.iter_mut().zip(&self.points) {
                    *o = self.support_index.get(&(*p - s)).map(|&i| w[i]).unwrap_or(0.0);
                }
            }
        }
    }

    /// Draw of V itself (stationary scaling).
    pub fn draw(&self, rng: &mut SimRng, out: &mut [f64]) {
        self.draw_profile(rng, out);
        if matches!(self.law, VLaw::Shifted { .. } | VLaw::RandomProfile { .. }) {
            let c = self.scale();
            out.iter_mut().for_each(|o| *o *= c);
        }
    }
}

const ORACLE_CHUNK: usize = 4096;

/// P(Y_{t_1} < y_1, …, Y_{t_n} < y_n) for the tail field of the max-stable field with V-law `v`:
/// (E[max(max_i V_{t_i}/y_i, V_0)] − E[max_i V_{t_i}/y_i]) / E[V_0], as a ratio of MC means.
pub fn maxstable_tail_oracle(v: &VLaw, points: &[Point], levels: &[f64], budget: usize, seed: u64) -> Result<Estimate> {
    if budget < 100 {
        return Err(Error::BudgetTooSmall { got: budget, min: 100 });
    }
    if points.len() != levels.len() {
        return Err(Error::InvalidArgument("one level per point required".into()));
    }
    if let Some(y) = levels.iter().find(|y| !(**y > 0.0)) {
        return Err(Error::InvalidArgument(format!("levels must be positive, got {y}")));
    }
    if !(v.mean_v0() > 0.0) {
        return Err(Error::InvalidModel("E[V_0] must be positive".into()));
    }
    if points.is_empty() {
        return Ok(Estimate { mean: 1.0, se: 0.0, n: budget });
    }
    let dim = points[0].dim();
    let mut all = vec![Point::zero(dim)];
    all.extend_from_slice(points);
    let sampler = VSampler::new(v, &all);
    let chunks = budget.div_ceil(ORACLE_CHUNK);
    let parts: Vec<(Vec<f64>, Vec<f64>)> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let n = ORACLE_CHUNK.min(budget - c * ORACLE_CHUNK);
            let mut rng = rng::stream(seed, c as u64);
            let mut buf = vec![0.0; all.len()];
            let mut d = Vec::with_capacity(n);
            let mut v0 = Vec::with_capacity(n);
            for _ in 0..n {
                sampler.draw(&mut rng, &mut buf);
                let b = buf[1..].iter().zip(levels).map(|(x, y)| x / y).fold(0.0, f64::max);
                d.push(b.max(buf[0]) - b);
                v0.push(buf[0]);
            }
            (d, v0)
        })
        .collect();
    let (d, v0): (Vec<f64>, Vec<f64>) =
        parts.into_iter().fold((Vec::new(), Vec::new()), |(mut a, mut b), (x, y)| {
            a.extend(x);
            b.extend(y);
            (a, b)
        });
    Ok(ratio_se(&d, &v0))
}

/// Decay of V away from a pattern E along the positive part of H.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct BrCurve {
    pub radii: Vec<i64>,
    /// max over the shell |t| = r of E[V_t · 1(max_E V ≠ 0)] (profile units).
    pub mean_v: Vec<f64>,
    /// max over the shell of P(V_t > ε | max_E V ≠ 0).
    pub prob_exceed: Vec<f64>,
    pub epsilon: f64,
    /// Number of curve points that went up relative to the previous one.
    pub increases: usize,
    pub passes: bool,
}

/// Estimates the decay of V along t ∈ H^+ with |t| in `radii`; the curve
/// passes when its last value is at most `tol`.
#[allow(clippy::too_many_arguments)]
pub fn br_condition_diagnostic(
    v: &VLaw,
    h: &LatticeUnion,
    order: &InvariantOrder,
    e: &[Point],
    radii: &[i64],
    budget: usize,
    epsilon: f64,
    tol: f64,
    seed: u64,
) -> Result<BrCurve> {
    if budget < 100 {
        return Err(Error::BudgetTooSmall { got: budget, min: 100 });
    }
    let rmax = radii.iter().copied().max().unwrap_or(0);
    let shells: Vec<Vec<Point>> = {
        let pts = h.enumerate_cube(rmax);
        radii
            .iter()
            .map(|&r| pts.iter().filter(|p| p.norm_inf() == r && order.is_positive(p)).copied().collect())
            .collect()
    };
    // condition on the shifts that reach E: draw S uniformly over E − supp
    let sampler_e = VSampler::new(v, e);
    let reach = sampler_e.scale();
    let mut all: Vec<Point> = e.to_vec();
    let offsets: Vec<usize> = shells
        .iter()
        .scan(e.len(), |acc, s| {
            let o = *acc;
            *acc += s.len();
            Some(o)
        })
        .collect();
    for s in &shells {
        all.extend_from_slice(s);
    }
    let sampler = CondSampler { base: VSampler::new(v, &all), e_shifts: sampler_e.shifts.clone() };
    let mut rng = rng::stream(seed, 0);
    let mut buf = vec![0.0; all.len()];
    let npts = all.len() - e.len();
    let mut sum_v = vec![0.0; npts];
    let mut cnt_eps = vec![0usize; npts];
    let mut n_cond = 0usize;
    for _ in 0..budget {
        sampler.draw(&mut rng, &mut buf);
        if buf[..e.len()].iter().all(|x| *x == 0.0) {
            continue;
        }
        n_cond += 1;
        for (i, x) in buf[e.len()..].iter().enumerate() {
            sum_v[i] += x;
            if *x > epsilon {
                cnt_eps[i] += 1;
            }
        }
    }
    if n_cond == 0 {
        return Err(Error::ConditioningNeverObserved("no draw with V ≠ 0 on the pattern".into()));
    }
    // E[V_t 1(cond)] = (#reaching shifts)·E[f(t−S) 1(cond) | S reaches E] for shift laws.
    let factor = if matches!(v, VLaw::Shifted { .. } | VLaw::RandomProfile { .. }) { reach } else { 1.0 };
    let mut mean_v = Vec::new();
    let mut prob = Vec::new();
    for (k, s) in shells.iter().enumerate() {
        let o = offsets[k] - e.len();
        let (mut mv, mut pe) = (0.0f64, 0.0f64);
        for j in 0..s.len() {
            mv = mv.max(factor * sum_v[o + j] / budget as f64);
            pe = pe.max(cnt_eps[o + j] as f64 / n_cond as f64);
        }
        mean_v.push(mv);
        prob.push(pe);
    }
    let increases = mean_v.windows(2).filter(|w| w[1] > w[0] * (1.0 + 1e-9) + 1e-12).count();
    let passes = mean_v.last().is_some_and(|x| *x <= tol);
    Ok(BrCurve { radii: radii.to_vec(), mean_v, prob_exceed: prob, epsilon, increases, passes })
}

struct CondSampler<'a> {
    base: VSampler<'a>,
    e_shifts: Vec<Point>,
}

impl CondSampler<'_> {
    fn draw(&self, rng: &mut SimRng, out: &mut [f64]) {
        match self.base.law {
            VLaw::Shifted { .. } => {
                let s = self.e_shifts[rng.random_range(0..self.e_shifts.len())];
                for (o, p) in out.iter_mut().zip(&self.base.points) {
                    *o = self.base.fixed.get(&(*p - s)).copied().unwrap_or(0.0);
                }
            }
            VLaw::RandomProfile { weights, support } => {
                let s = self.e_shifts[rng.random_range(0..self.e_shifts.len())];
                let w: Vec<f64> = (0..support.len()).map(|_| weights.sample(rng)).collect();
                for (o, p) in out.iter_mut().zip(&self.base.points) {
                    *o = self.base.support_index.get(&(*p - s)).map(|&i| w[i]).unwrap_or(0.0);
                }
            }
            _ => self.base.draw_profile(rng, out),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::Sublattice;
    use crate::models::kernel_1d;

    fn p1(x: i64) -> Point {
        Point::of(&[x])
    }

    #[test]
    fn iid_theta_is_point_mass() {
        let s = spectral_tail_oracle(&FieldModel::iid(1.0)).unwrap();
        let mut out = [0.0; 3];
        s.sample(&mut rng::stream(0, 0), &[p1(-1), p1(0), p1(1)], &mut out);
        assert_eq!(out, [0.0, 1.0, 0.0]);
    }

    #[test]
    fn moving_maxima_theta_law() {
        // exact: P(J = 0) ∝ 2, P(J = 1) ∝ 1 for the kernel (2,1)
        let s = spectral_tail_oracle(&FieldModel::moving_maxima(1.0, kernel_1d(&[2.0, 1.0]))).unwrap();
        let mut rng = rng::stream(1, 0);
        let mut out = [0.0; 2];
        let mut j0 = 0;
        for _ in 0..30000 {
            s.sample(&mut rng, &[p1(0), p1(1)], &mut out);
            assert_eq!(out[0], 1.0);
            if out[1] == 0.5 {
                j0 += 1;
            }
        }
        assert!((j0 as f64 / 30000.0 - 2.0 / 3.0).abs() < 0.01);
    }

    #[test]
    fn upsilon_constant_is_patch_size_for_alpha_norm() {
        let up = vec![p1(0), p1(1), p1(5)];
        let m = FieldModel::moving_maxima(1.5, kernel_1d(&[1.0, 0.3, 0.7]));
        let s = upsilon_tail_oracle(&m, Modulus::alpha_norm(1.5, up).unwrap()).unwrap();
        assert!((s.upsilon_constant().unwrap() - 3.0).abs() < 1e-12);
    }

    #[test]
    fn maxstable_oracle_deterministic() {
        let c = 0.4;
        let v = VLaw::Deterministic { values: vec![KernelTerm::new(&[0], 1.0), KernelTerm::new(&[1], c)] };
        for y in [0.5, 1.0, 3.0] {
            let e = maxstable_tail_oracle(&v, &[p1(1)], &[y], 100, 0).unwrap();
            assert!((e.mean - (1.0 - c / y)).abs() < 1e-12);
        }
        let e = maxstable_tail_oracle(&v, &[], &[], 100, 0).unwrap();
        assert_eq!(e.mean, 1.0);
        assert!(maxstable_tail_oracle(&v, &[p1(1)], &[1.0], 99, 0).is_err());
    }

    #[test]
    fn maxstable_oracle_increases_to_one() {
        let v = VLaw::Shifted { kernel: kernel_1d(&[1.0, 0.5, 0.25]) };
        let vals: Vec<f64> = [0.5, 1.0, 4.0, 100.0]
            .iter()
            .map(|y| maxstable_tail_oracle(&v, &[p1(1), p1(2)], &[*y, *y], 20000, 3).unwrap().mean)
            .collect();
        assert!(vals.windows(2).all(|w| w[1] >= w[0] - 1e-3), "{vals:?}");
        assert!((vals[3] - 1.0).abs() < 0.02);
    }

    #[test]
    fn br_curve_cases() {
        let order = InvariantOrder::lexicographic(1);
        let h = LatticeUnion::from_components(1, vec![crate::lattice::Component {
            lattice: Sublattice::full(1),
            offset: p1(0),
        }], vec![]);
        let fin = VLaw::Shifted { kernel: kernel_1d(&[1.0, 1.0, 1.0]) };
        let c = br_condition_diagnostic(&fin, &h, &order, &[p1(0)], &[1, 2, 3, 4], 2000, 0.1, 1e-12, 0).unwrap();
        assert_eq!(c.mean_v[2..], [0.0, 0.0]);
        assert!(c.passes);
        let c = br_condition_diagnostic(&VLaw::Constant, &h, &order, &[p1(0)], &[1, 5, 10], 500, 0.1, 1e-3, 0).unwrap();
        assert!(c.mean_v.iter().all(|x| *x == 1.0) && !c.passes);
    }
}
