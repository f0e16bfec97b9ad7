use std::collections::HashMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{ThetaEstimate, ThetaVariant};
use crate::error::{Error, Result};
use crate::exceedance::ShapeTerm;
use crate::lattice::{InvariantOrder, Point};
use crate::rng::{self, SimRng};
use crate::shape::XiStructure;
use crate::spectral::{cluster_field, SpectralSampler};
use crate::stats::{mean_se, Estimate};

const CHUNK: usize = 4096;

/// `budget` draws of N statistics, in fixed chunk order regardless of thread count.
fn draws<const N: usize>(
    budget: usize,
    seed: u64,
    name: &str,
    f: impl Fn(&mut SimRng, &mut Vec<f64>) -> [f64; N] + Sync,
) -> Vec<[f64; N]> {
    let sub = rng::substream_seed(seed, name);
    let chunks = budget.div_ceil(CHUNK);
    let parts: Vec<Vec<[f64; N]>> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut rng = rng::stream(sub, c as u64);
            let mut buf = Vec::new();
            (0..CHUNK.min(budget - c * CHUNK)).map(|_| f(&mut rng, &mut buf)).collect()
        })
        .collect();
    parts.into_iter().flatten().collect()
}

fn column<const N: usize>(rows: &[[f64; N]], i: usize) -> Vec<f64> {
    rows.iter().map(|r| r[i]).filter(|v| !v.is_nan()).collect()
}

/// Σ_j w_j·E_j with variance Σ w_j² se_j².
fn combine(parts: &[(f64, Estimate)]) -> (f64, f64) {
    let mean = parts.iter().map(|(w, e)| w * e.mean).sum();
    let var: f64 = parts.iter().map(|(w, e)| (w * e.se).powi(2)).sum();
    (mean, var.sqrt())
}

fn check_budget(budget: usize) -> Result<()> {
    if budget < 2 {
        return Err(Error::BudgetTooSmall { got: budget, min: 2 });
    }
    Ok(())
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct UIndexForms {
    /// Σλ E[sup_{D∪{0}}|Θ|^α − sup_D|Θ|^α]
    pub sup_difference: ThetaEstimate,
    /// Σλ P(Y·sup_D|Θ| ≤ 1), Y Pareto(α) independent of Θ.
    pub pareto: ThetaEstimate,
    /// SE of the paired difference of the two forms.
    pub difference_se: f64,
    pub agree: bool,
}

/// Both u-index representations from one stream of Θ draws; shapes are truncated to K_R.
pub fn theta_u_index(
    sampler: &dyn SpectralSampler,
    shapes: &[ShapeTerm],
    alpha: f64,
    budget: usize,
    radius: i64,
    seed: u64,
) -> Result<UIndexForms> {
    check_budget(budget)?;
    let total: f64 = shapes.iter().map(|s| s.weight).sum();
    if (total - 1.0).abs() > 1e-9 {
        return Err(Error::InvalidArgument(format!("shape weights sum to {total}, not 1")));
    }
    let half_r = radius / 2;
    let mut sd = Vec::new();
    let mut pa = Vec::new();
    let mut df = Vec::new();
    let mut sd_half = 0.0;
    for (k, s) in shapes.iter().enumerate() {
        let mut offsets = vec![Point::zero(sampler.dim())];
        offsets.extend(s.d.iter().filter(|p| !p.is_zero() && p.norm_inf() <= radius).copied());
        let half: Vec<bool> = offsets.iter().map(|p| p.norm_inf() <= half_r).collect();
        let rows = draws::<4>(budget, seed, &format!("u-index-term-{k}"), |rng, buf| {
            buf.resize(offsets.len(), 0.0);
            sampler.sample(rng, &offsets, buf);
            let (mut s, mut sh) = (0.0f64, 0.0f64);
            for (i, v) in buf.iter().enumerate().skip(1) {
                let a = v.abs();
                s = s.max(a);
                if half[i] {
                    sh = sh.max(a);
                }
            }
            let t0 = buf[0].abs().powf(alpha);
            let f = t0.max(s.powf(alpha)) - s.powf(alpha);
            let fh = t0.max(sh.powf(alpha)) - sh.powf(alpha);
            let y = rng::pareto(rng, alpha);
            let p = if y * s <= 1.0 { 1.0 } else { 0.0 };
            [f, p, f - p, fh]
        });
        let fh = column(&rows, 3);
        sd_half += s.weight * fh.iter().sum::<f64>() / fh.len() as f64;
        sd.push((s.weight, mean_se(&column(&rows, 0))));
        pa.push((s.weight, mean_se(&column(&rows, 1))));
        df.push((s.weight, mean_se(&column(&rows, 2))));
    }
    let (m1, s1) = combine(&sd);
    let (m2, s2) = combine(&pa);
    let (md, sdd) = combine(&df);
    let mut a = ThetaEstimate::new(ThetaVariant::UIndex, m1, s1, budget, Some(radius));
    a.diagnostics.summability_residual = Some((m1 - sd_half).abs());
    let b = ThetaEstimate::new(ThetaVariant::UIndexPareto, m2, s2, budget, Some(radius));
    Ok(UIndexForms { sup_difference: a, pareto: b, difference_se: sdd, agree: md.abs() <= 3.0 * sdd + 1e-12 })
}

/// Outcome of the argmax functional on a finite window.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum TStar {
    At(Point),
    /// The maximum is (also) attained on the outer shell of the window, so
    /// the infinite-lattice argmax may lie outside it.
    Miss,
}

/// Precomputed blocks (E)_t, t ∈ L ∩ K_R, in ≺ order.
struct Layout {
    points: Vec<Point>,
    blocks: Vec<Vec<usize>>,
    shell: Vec<bool>,
}

impl Layout {
    fn new(offsets: &[Point], e: &[Point], l_points: &[Point], order: &InvariantOrder) -> Self {
        let index: HashMap<Point, usize> = offsets.iter().enumerate().map(|(i, p)| (*p, i)).collect();
        let mut points = l_points.to_vec();
        order.sort(&mut points);
        let outer = points.iter().map(|p| p.norm_inf()).max().unwrap_or(0);
        let blocks = points
            .iter()
            .map(|t| e.iter().filter_map(|z| index.get(&(*z + *t)).copied()).collect())
            .collect();
        let shell = points.iter().map(|p| outer > 0 && p.norm_inf() == outer).collect();
        Layout { points, blocks, shell }
    }

    fn argmax(&self, values: &[f64]) -> TStar {
        let bmax: Vec<f64> = self.blocks.iter().map(|b| b.iter().map(|&i| values[i].abs()).fold(0.0, f64::max)).collect();
        let m = bmax.iter().copied().fold(0.0, f64::max);
        if !(m > 0.0) {
            return TStar::Miss;
        }
        if bmax.iter().zip(&self.shell).any(|(b, s)| *s && *b == m) {
            return TStar::Miss;
        }
        // the ≺-least maximizer is strictly above every earlier block and ≥ every later one
        let i = bmax.iter().position(|b| *b == m).expect("maximum attained");
        TStar::At(self.points[i])
    }
}

/// T*: the ≺-least t ∈ L whose block max over (E)_t is strictly above all ≺-earlier
/// block maxima and at least all later ones, searched over `l_points` (L ∩ K_R).
pub fn argmax_t_star(values: &[f64], offsets: &[Point], e: &[Point], l_points: &[Point], order: &InvariantOrder) -> TStar {
    Layout::new(offsets, e, l_points, order).argmax(values)
}

fn union_offsets(e: &[Point], l_points: &[Point]) -> Vec<Point> {
    let mut v: Vec<Point> = l_points.iter().flat_map(|t| e.iter().map(move |z| *z + *t)).collect();
    v.sort_unstable();
    v.dedup();
    v
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct LatticeForms {
    pub q_form: ThetaEstimate,
    pub ratio_form: ThetaEstimate,
    pub tstar_form: ThetaEstimate,
    pub max_gap: f64,
    /// Every pairwise gap within 3 joint SEs.
    pub gaps_ok: bool,
}

/// The three lattice-case representations of θ from one stream of Θ draws on L_j ∩ K_R:
/// E[sup|Q|^α] (via the cluster field), E[sup|Θ|^α / Σ|Θ|^α] and E[|Θ_0|^α 1(T* = 0)].
pub fn theta_lattice_forms(
    sampler: &dyn SpectralSampler,
    terms: &[(XiStructure, f64)],
    alpha: f64,
    budget: usize,
    radius: i64,
    seed: u64,
) -> Result<LatticeForms> {
    check_budget(budget)?;
    if let Some((xi, _)) = terms.iter().find(|(xi, _)| !xi.is_lattice_case()) {
        return Err(Error::NonLattice(format!(
            "pattern E has {} points; use the pattern (index4) representation instead",
            xi.e.len()
        )));
    }
    let half_r = radius / 2;
    let (mut q, mut ra, mut ts) = (Vec::new(), Vec::new(), Vec::new());
    let (mut ra_half, mut misses) = (0.0, 0usize);
    for (k, (xi, w)) in terms.iter().enumerate() {
        let offsets = xi.lattice_window(radius);
        let zero = offsets.iter().position(|p| p.is_zero()).expect("0 ∈ L");
        let half: Vec<bool> = offsets.iter().map(|p| p.norm_inf() <= half_r).collect();
        let layout = Layout::new(&offsets, &[Point::zero(xi.lattice.dim())], &offsets, &xi.order);
        let union = xi.xi_star();
        let rows = draws::<4>(budget, seed, &format!("lattice-forms-term-{k}"), |rng, buf| {
            buf.resize(offsets.len(), 0.0);
            sampler.sample(rng, &offsets, buf);
            let qf = match cluster_field(buf, &offsets, &union, alpha, radius) {
                Ok(c) => c.q.iter().map(|v| v.abs().powf(alpha)).fold(0.0, f64::max),
                Err(_) => f64::NAN,
            };
            let (mut sup, mut sum, mut suph, mut sumh) = (0.0f64, 0.0, 0.0f64, 0.0);
            for (i, v) in buf.iter().enumerate() {
                let a = v.abs().powf(alpha);
                sup = sup.max(a);
                sum += a;
                if half[i] {
                    suph = suph.max(a);
                    sumh += a;
                }
            }
            let t = match layout.argmax(buf) {
                TStar::At(p) if p.is_zero() => buf[zero].abs().powf(alpha),
                TStar::At(_) => 0.0,
                TStar::Miss => f64::NAN,
            };
            let ratio = if sum > 0.0 { sup / sum } else { f64::NAN };
            let ratio_h = if sumh > 0.0 { suph / sumh } else { f64::NAN };
            [qf, ratio, t, ratio_h]
        });
        let t = column(&rows, 2);
        misses += budget - t.len();
        let rh = column(&rows, 3);
        ra_half += w * rh.iter().sum::<f64>() / rh.len().max(1) as f64;
        q.push((*w, mean_se(&column(&rows, 0))));
        ra.push((*w, mean_se(&column(&rows, 1))));
        ts.push((*w, mean_se(&t)));
    }
    let (m, s) = combine(&q);
    let q_form = ThetaEstimate::new(ThetaVariant::LatticeQ, m, s, budget, Some(radius));
    let (m, s) = combine(&ra);
    let mut ratio_form = ThetaEstimate::new(ThetaVariant::LatticeRatio, m, s, budget, Some(radius));
    ratio_form.diagnostics.summability_residual = Some((m - ra_half).abs());
    let (m, s) = combine(&ts);
    let mut tstar_form = ThetaEstimate::new(ThetaVariant::LatticeTstar, m, s, budget, Some(radius));
    tstar_form.diagnostics.truncation_miss_rate = Some(misses as f64 / (budget * terms.len().max(1)) as f64);
    let all = [&q_form, &ratio_form, &tstar_form];
    let mut max_gap = 0.0f64;
    let mut gaps_ok = true;
    for i in 0..3 {
        for j in i + 1..3 {
            max_gap = max_gap.max((all[i].raw - all[j].raw).abs());
            gaps_ok &= all[i].agrees_with(all[j], 3.0);
        }
    }
    Ok(LatticeForms { q_form, ratio_form, tstar_form, max_gap, gaps_ok })
}

/// One j ∈ I* for the pattern representation: a Θ_{E_j} sampler (ρ = α-norm on E_j),
/// the Ξ-structure and γ*_j. c_j = |E_j|.
pub struct IndexTerm<'a> {
    pub sampler: &'a dyn SpectralSampler,
    pub xi: XiStructure,
    pub gamma: f64,
}

/// Σ_j γ*_j |E_j| E[max_{z∈E_j}|Θ_{E_j,z}|^α 1(T*_j = 0)], blocks (E_j)_t for t ∈ L_j ∩ K_R.
/// Draws whose T* falls on the outer shell are excluded and counted as misses.
pub fn theta_index4(terms: &[IndexTerm<'_>], alpha: f64, budget: usize, radius: i64, seed: u64) -> Result<ThetaEstimate> {
    check_budget(budget)?;
    let half_r = radius / 2;
    let mut parts = Vec::new();
    let mut half_parts = 0.0;
    let mut misses = 0usize;
    for (k, term) in terms.iter().enumerate() {
        let e = &term.xi.e;
        let lp = term.xi.lattice_window(radius);
        let lp_half: Vec<Point> = lp.iter().filter(|p| p.norm_inf() <= half_r).copied().collect();
        let offsets = union_offsets(e, &lp);
        let layout = Layout::new(&offsets, e, &lp, &term.xi.order);
        let layout_half = Layout::new(&offsets, e, &lp_half, &term.xi.order);
        let e_idx: Vec<usize> = e.iter().map(|z| offsets.binary_search(z).expect("E ⊆ offsets")).collect();
        let rows = draws::<2>(budget, seed, &format!("index4-term-{k}"), |rng, buf| {
            buf.resize(offsets.len(), 0.0);
            term.sampler.sample(rng, &offsets, buf);
            let me = e_idx.iter().map(|&i| buf[i].abs().powf(alpha)).fold(0.0, f64::max);
            let at = |l: &Layout| match l.argmax(buf) {
                TStar::At(p) if p.is_zero() => me,
                TStar::At(_) => 0.0,
                TStar::Miss => f64::NAN,
            };
            [at(&layout), at(&layout_half)]
        });
        let full = column(&rows, 0);
        misses += budget - full.len();
        let h = column(&rows, 1);
        let w = term.gamma * e.len() as f64;
        half_parts += w * h.iter().sum::<f64>() / h.len().max(1) as f64;
        parts.push((w, mean_se(&full)));
    }
    let (m, s) = combine(&parts);
    let mut est = ThetaEstimate::new(ThetaVariant::UpsilonIndex4, m, s, budget, Some(radius));
    est.diagnostics.truncation_miss_rate = Some(misses as f64 / (budget * terms.len().max(1)) as f64);
    est.diagnostics.summability_residual = Some((m - half_parts).abs());
    Ok(est)
}
