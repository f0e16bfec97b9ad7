use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{SpectralSampler, TestFn};
use crate::error::{Error, Result};
use crate::lattice::{LatticeUnion, Point};
use crate::rng;
use crate::stats::mean_se;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TimeChangeForm {
    /// E[g(Θ_{t−s}) 1(Θ_{−s} ≠ 0)] = E[g(Θ_t/|Θ_s|)|Θ_s|^α]
    Theta,
    /// E[g(Y_{t−s}) 1(Y_{−s} ≠ 0)] = ∫ E[g(rΘ_t) 1(r|Θ_s| > 1)] d(−r^{−α}); the
    /// integral is sampled as E[|Θ_s|^α g(qΘ_t/|Θ_s|)] with q Pareto(α).
    Tail,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct TimeChangeReport {
    pub form: TimeChangeForm,
    pub g: TestFn,
    pub s: Point,
    pub t: Point,
    pub lhs: f64,
    pub rhs: f64,
    /// SE of the paired difference lhs − rhs.
    pub se: f64,
    pub n: usize,
    pub pass: bool,
}

const CHUNK: usize = 8192;

/// Both sides of the time-change identity from one shared stream of Θ draws.
pub fn time_change_check<S: SpectralSampler + ?Sized>(
    sampler: &S,
    g: &TestFn,
    s: &Point,
    t: &Point,
    form: TimeChangeForm,
    budget: usize,
    seed: u64,
) -> Result<TimeChangeReport> {
    if budget < 2 {
        return Err(Error::BudgetTooSmall { got: budget, min: 2 });
    }
    let alpha = sampler.alpha();
    let offs = [*t - *s, -*s, *t, *s];
    let chunks = budget.div_ceil(CHUNK);
    let parts: Vec<(Vec<f64>, Vec<f64>)> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let n = CHUNK.min(budget - c * CHUNK);
            let mut rng = rng::stream(seed, c as u64);
            let mut th = [0.0; 4];
            let (mut l, mut r) = (Vec::with_capacity(n), Vec::with_capacity(n));
            for _ in 0..n {
                sampler.sample(&mut rng, &offs, &mut th);
                let q = match form {
                    TimeChangeForm::Theta => 1.0,
                    TimeChangeForm::Tail => rng::pareto(&mut rng, alpha),
                };
                let lhs = if th[1] != 0.0 { g.eval(q * th[0]) } else { 0.0 };
                let rhs = if th[3] != 0.0 {
                    let a = th[3].abs();
                    g.eval(q * th[2] / a) * a.powf(alpha)
                } else {
                    0.0
                };
                l.push(lhs);
                r.push(rhs);
            }
            (l, r)
        })
        .collect();
    let mut lhs = Vec::with_capacity(budget);
    let mut rhs = Vec::with_capacity(budget);
    for (l, r) in parts {
        lhs.extend(l);
        rhs.extend(r);
    }
    let diff: Vec<f64> = lhs.iter().zip(&rhs).map(|(a, b)| a - b).collect();
    let d = mean_se(&diff);
    let l = mean_se(&lhs).mean;
    let r = mean_se(&rhs).mean;
    let gap = (l - r).abs();
    Ok(TimeChangeReport {
        form,
        g: *g,
        s: *s,
        t: *t,
        lhs: l,
        rhs: r,
        se: d.se,
        n: budget,
        pass: gap <= 3.0 * d.se || gap <= 1e-12,
    })
}

/// Θ normalized by its α-norm over A ∩ K_R.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ClusterField {
    pub offsets: Vec<Point>,
    pub q: Vec<f64>,
    pub norm: f64,
    /// ‖Θ‖ over A∩K_R minus ‖Θ‖ over A∩K_{R/2}.
    pub tail_mass: f64,
}

fn alpha_norm(theta: &[f64], offsets: &[Point], a: &LatticeUnion, r: i64, alpha: f64) -> f64 {
    let s: f64 = offsets
        .iter()
        .zip(theta)
        .filter(|(p, _)| p.norm_inf() <= r && a.contains(p))
        .map(|(_, v)| v.abs().powf(alpha))
        .sum();
    s.powf(1.0 / alpha)
}

pub fn cluster_field(theta: &[f64], offsets: &[Point], a: &LatticeUnion, alpha: f64, r: i64) -> Result<ClusterField> {
    let norm = alpha_norm(theta, offsets, a, r, alpha);
    if !(norm > 0.0) {
        return Err(Error::ZeroNorm("Θ vanishes on A ∩ K_R".into()));
    }
    let half = alpha_norm(theta, offsets, a, r / 2, alpha);
    Ok(ClusterField {
        offsets: offsets.to_vec(),
        q: theta.iter().map(|v| v / norm).collect(),
        norm,
        tail_mass: norm - half,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::{Component, Sublattice};
    use crate::models::{kernel_1d, spectral_tail_oracle, FieldModel};

    fn p1(x: i64) -> Point {
        Point::of(&[x])
    }

    #[test]
    fn origin_shift_is_exact() {
        let s = spectral_tail_oracle(&FieldModel::moving_maxima(1.0, kernel_1d(&[1.0, 0.6]))).unwrap();
        let r = time_change_check(&s, &TestFn::bump(0.5, 4.0, 1.0), &p1(0), &p1(0), TimeChangeForm::Theta, 1000, 0)
            .unwrap();
        assert_eq!(r.lhs, r.rhs);
        assert!(r.pass);
    }

    #[test]
    fn iid_both_sides_vanish() {
        let s = spectral_tail_oracle(&FieldModel::iid(1.0)).unwrap();
        let r = time_change_check(&s, &TestFn::Indicator { level: 0.5 }, &p1(2), &p1(1), TimeChangeForm::Theta, 1000, 0)
            .unwrap();
        assert_eq!((r.lhs, r.rhs), (0.0, 0.0));
    }

    #[test]
    fn moving_maxima_by_enumeration() {
        // J uniform on {0,1}; lhs = g(1)·P(Θ_{-1} ≠ 0) = 1/2, rhs = g(1)·P(Θ_1 = 1) = 1/2.
        let s = spectral_tail_oracle(&FieldModel::moving_maxima(1.0, kernel_1d(&[1.0, 1.0]))).unwrap();
        let r = time_change_check(&s, &TestFn::Indicator { level: 0.5 }, &p1(1), &p1(1), TimeChangeForm::Theta, 40000, 2)
            .unwrap();
        assert!((r.lhs - 0.5).abs() < 0.02 && (r.rhs - 0.5).abs() < 0.02 && r.pass, "{r:?}");
    }

    #[test]
    fn cluster_field_normalizes() {
        let a = LatticeUnion::from_components(1, vec![Component { lattice: Sublattice::full(1), offset: p1(0) }], vec![]);
        let offs: Vec<Point> = (-4..=4).map(p1).collect();
        let theta = [0.0, 0.0, 0.0, 0.5, 1.0, 0.0, 0.0, 0.0, 0.0];
        let c = cluster_field(&theta, &offs, &a, 1.0, 4).unwrap();
        assert!((c.norm - 1.5).abs() < 1e-12 && c.tail_mass == 0.0);
        let total: f64 = c.q.iter().map(|v| v.abs()).sum();
        assert!((total - 1.0).abs() < 1e-12);
        assert!(cluster_field(&[0.0; 9], &offs, &a, 1.0, 4).is_err());
    }
}
