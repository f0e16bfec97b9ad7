use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::PointConfig;
use crate::error::{Error, Result};
use crate::lattice::Point;
use crate::rng;
use crate::spectral::{SpectralSampler, TestFn};
use crate::stats::{jackknife_mean, mean_se, Estimate};

/// Ψ̂(g) = mean of exp(−Σ g(points)) over configurations, jackknife SE.
pub fn empirical_laplace(configs: &[PointConfig], g: &TestFn) -> Result<Estimate> {
    if configs.len() < 30 {
        return Err(Error::TooFewSamples { min: 30, got: configs.len() });
    }
    let vals: Vec<f64> = configs.iter().map(|c| (-c.points.iter().map(|x| g.eval(*x)).sum::<f64>()).exp()).collect();
    Ok(jackknife_mean(&vals))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LaplaceVariant {
    /// Shapes D_i with weights λ_i and the ordinary spectral tail field.
    PsiL,
    /// Patterns E_j with γ*_j, c_j and the E_j-spectral tail field.
    PsiLEPro,
    /// Cluster fields Q normalized over Ξ*_j.
    QForm,
}

/// A shape D (as a point list, truncated later to K_R) with weight λ.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ShapeTerm {
    pub d: Vec<Point>,
    pub weight: f64,
}

/// Pattern data for one j ∈ I*.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct PatternTerm {
    pub e: Vec<Point>,
    /// ∪_{s ∈ G_j \ {0}} (E_j)_s
    pub d_tilde: Vec<Point>,
    /// Ξ*_j
    pub xi: Vec<Point>,
    pub gamma: f64,
    pub c: f64,
}

pub enum LaplaceInput<'a> {
    PsiL { sampler: &'a dyn SpectralSampler, shapes: Vec<ShapeTerm> },
    /// Each pattern comes with its own Θ_{E_j} sampler (ρ = α-norm on E_j).
    Patterns { variant: LaplaceVariant, terms: Vec<(PatternTerm, &'a dyn SpectralSampler)> },
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct LimitLaplace {
    pub variant: LaplaceVariant,
    pub mean: f64,
    pub se: f64,
    pub n: usize,
    /// Π_i exp(−I_i)^{w_i} from the same draws.
    pub product_form: f64,
    /// |Ψ_R − Ψ_{R/2}| from the same draws.
    pub truncation_residual: f64,
    pub radius: i64,
}

const CHUNK: usize = 4096;

/// One pattern/shape: offsets to draw and the integrand given y·Θ at those offsets.
struct Term<'a> {
    sampler: &'a dyn SpectralSampler,
    offsets: Vec<Point>,
    weight: f64,
    kind: TermKind,
}

enum TermKind {
    /// offsets[0] = 0, the rest D ∩ K_R; `half` marks offsets in K_{R/2}.
    Shape { half: Vec<bool> },
    /// first `ne` offsets are E, the rest D̃ ∩ K_R.
    Pattern { ne: usize, half: Vec<bool> },
    /// all offsets are Ξ* ∩ K_R.
    Cluster { half: Vec<bool>, alpha: f64 },
}

fn in_cube(p: &Point, r: i64) -> bool {
    p.norm_inf() <= r
}

/// Monte Carlo limit Laplace functional of the exceedance process. The radial
/// integral is restricted to y > b1, where the test function lives, and sampled as
/// y = b1·V^{-1/α}; the measure there has mass b1^{-α}.
pub fn limit_laplace(
    input: &LaplaceInput<'_>,
    g: &TestFn,
    alpha: f64,
    budget: usize,
    radius: i64,
    residual_bound: f64,
    seed: u64,
) -> Result<LimitLaplace> {
    let variant = match input {
        LaplaceInput::PsiL { .. } => LaplaceVariant::PsiL,
        LaplaceInput::Patterns { variant, .. } => *variant,
    };
    if g.is_zero() {
        return Ok(LimitLaplace {
            variant,
            mean: 1.0,
            se: 0.0,
            n: 0,
            product_form: 1.0,
            truncation_residual: 0.0,
            radius,
        });
    }
    if budget < 2 {
        return Err(Error::BudgetTooSmall { got: budget, min: 2 });
    }
    let half_r = radius / 2;
    let terms: Vec<Term<'_>> = match input {
        LaplaceInput::PsiL { sampler, shapes } => shapes
            .iter()
            .map(|s| {
                let mut offsets = vec![Point::zero(sampler.dim())];
                offsets.extend(s.d.iter().filter(|p| in_cube(p, radius) && !p.is_zero()).copied());
                let half = offsets.iter().map(|p| in_cube(p, half_r)).collect();
                Term { sampler: *sampler, offsets, weight: s.weight, kind: TermKind::Shape { half } }
            })
            .collect(),
        LaplaceInput::Patterns { variant, terms } => terms
            .iter()
            .map(|(t, sampler)| match variant {
                LaplaceVariant::QForm => {
                    let offsets: Vec<Point> = t.xi.iter().filter(|p| in_cube(p, radius)).copied().collect();
                    let half = offsets.iter().map(|p| in_cube(p, half_r)).collect();
                    Term {
                        sampler: *sampler,
                        offsets,
                        weight: t.gamma * t.c,
                        kind: TermKind::Cluster { half, alpha },
                    }
                }
                _ => {
                    let mut offsets = t.e.clone();
                    offsets.extend(t.d_tilde.iter().filter(|p| in_cube(p, radius)).copied());
                    let half = offsets.iter().enumerate().map(|(i, p)| i < t.e.len() || in_cube(p, half_r)).collect();
                    Term {
                        sampler: *sampler,
                        offsets,
                        weight: t.gamma * t.c,
                        kind: TermKind::Pattern { ne: t.e.len(), half },
                    }
                }
            })
            .collect(),
    };
    let b1 = g.lower();
    let mass = b1.powf(-alpha);
    // per term: (integral at R, SE, integral at R/2)
    let per: Vec<(Estimate, f64)> = terms
        .iter()
        .enumerate()
        .map(|(k, term)| integrate(term, g, alpha, b1, budget, seed, k as u64))
        .collect();
    let s_full: f64 = terms.iter().zip(&per).map(|(t, (e, _))| t.weight * mass * e.mean).sum();
    let s_half: f64 = terms.iter().zip(&per).map(|(t, (_, h))| t.weight * mass * h).sum();
    let var: f64 = terms.iter().zip(&per).map(|(t, (e, _))| (t.weight * mass * e.se).powi(2)).sum();
    let psi = (-s_full).exp();
    let product: f64 = terms.iter().zip(&per).map(|(t, (e, _))| (-(mass * e.mean)).exp().powf(t.weight)).product();
    let residual = (psi - (-s_half).exp()).abs();
    if residual > residual_bound {
        return Err(Error::TruncationResidual { residual, bound: residual_bound });
    }
    Ok(LimitLaplace {
        variant,
        mean: psi,
        se: psi * var.sqrt(),
        n: budget,
        product_form: product,
        truncation_residual: residual,
        radius,
    })
}

fn integrate(term: &Term<'_>, g: &TestFn, alpha: f64, b1: f64, budget: usize, seed: u64, k: u64) -> (Estimate, f64) {
    let chunks = budget.div_ceil(CHUNK);
    let sub = rng::substream_seed(seed, &format!("laplace-term-{k}"));
    let parts: Vec<(Vec<f64>, f64)> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let n = CHUNK.min(budget - c * CHUNK);
            let mut rng = rng::stream(sub, c as u64);
            let mut th = vec![0.0; term.offsets.len()];
            let mut full = Vec::with_capacity(n);
            let mut half_sum = 0.0;
            for _ in 0..n {
                term.sampler.sample(&mut rng, &term.offsets, &mut th);
                let y = b1 * rng::pareto(&mut rng, alpha);
                let (f, h) = integrand(&term.kind, &th, y, g);
                full.push(f);
                half_sum += h;
            }
            (full, half_sum)
        })
        .collect();
    let mut vals = Vec::with_capacity(budget);
    let mut half = 0.0;
    for (v, h) in parts {
        vals.extend(v);
        half += h;
    }
    (mean_se(&vals), half / budget as f64)
}

fn integrand(kind: &TermKind, th: &[f64], y: f64, g: &TestFn) -> (f64, f64) {
    match kind {
        TermKind::Shape { half } => {
            let g0 = g.eval(y * th[0]);
            let (mut s, mut sh) = (0.0, 0.0);
            for (i, v) in th.iter().enumerate().skip(1) {
                let x = g.eval(y * v);
                s += x;
                if half[i] {
                    sh += x;
                }
            }
            let a = -(-g0).exp_m1();
            ((-s).exp() * a, (-sh).exp() * a)
        }
        TermKind::Pattern { ne, half } => {
            let se: f64 = th[..*ne].iter().map(|v| g.eval(y * v)).sum();
            let (mut s, mut sh) = (0.0, 0.0);
            for (i, v) in th.iter().enumerate().skip(*ne) {
                let x = g.eval(y * v);
                s += x;
                if half[i] {
                    sh += x;
                }
            }
            let a = -(-se).exp_m1();
            ((-s).exp() * a, (-sh).exp() * a)
        }
        TermKind::Cluster { half, alpha } => {
            let (mut n, mut nh) = (0.0, 0.0);
            for (i, v) in th.iter().enumerate() {
                let x = v.abs().powf(*alpha);
                n += x;
                if half[i] {
                    nh += x;
                }
            }
            let side = |norm: f64, use_half: bool| {
                if norm <= 0.0 {
                    return 0.0;
                }
                let q = norm.powf(1.0 / alpha);
                let s: f64 = th
                    .iter()
                    .enumerate()
                    .filter(|(i, _)| !use_half || half[*i])
                    .map(|(_, v)| g.eval(y * v / q))
                    .sum();
                -(-s).exp_m1()
            };
            (side(n, false), side(nh, true))
        }
    }
}

/// Comparison of an empirical and a limit Laplace functional.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct LaplaceReport {
    pub g: TestFn,
    pub variant: LaplaceVariant,
    pub empirical: Estimate,
    pub limit: Estimate,
    pub pass: bool,
}

impl LaplaceReport {
    pub fn new(g: TestFn, empirical: Estimate, limit: &LimitLaplace) -> Self {
        let lim = Estimate { mean: limit.mean, se: limit.se, n: limit.n };
        let joint = (empirical.se.powi(2) + lim.se.powi(2)).sqrt();
        let pass = (empirical.mean - lim.mean).abs() <= 3.0 * joint;
        LaplaceReport { g, variant: limit.variant, empirical, limit: lim, pass }
    }

    pub fn gap(&self) -> f64 {
        (self.empirical.mean - self.limit.mean).abs()
    }

    pub fn joint_se(&self) -> f64 {
        (self.empirical.se.powi(2) + self.limit.se.powi(2)).sqrt()
    }
}

/// Gaps that never grow by more than `k` joint standard errors from one step to the next.
pub fn monotone_within_se(gaps: &[(f64, f64)], k: f64) -> bool {
    gaps.windows(2).all(|w| w[1].0 <= w[0].0 + k * (w[0].1.powi(2) + w[1].1.powi(2)).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::{kernel_1d, spectral_tail_oracle, FieldModel};

    #[test]
    fn zero_g_gives_one() {
        let s = spectral_tail_oracle(&FieldModel::iid(1.0)).unwrap();
        let inp = LaplaceInput::PsiL { sampler: &s, shapes: vec![ShapeTerm { d: vec![], weight: 1.0 }] };
        let r = limit_laplace(&inp, &TestFn::Zero, 1.0, 10, 4, 1e-3, 0).unwrap();
        assert_eq!(r.mean, 1.0);
        let cfgs = vec![PointConfig { points: vec![3.0], floor: 0.5 }; 40];
        assert_eq!(empirical_laplace(&cfgs, &TestFn::Zero).unwrap().mean, 1.0);
        assert!(empirical_laplace(&cfgs[..10], &TestFn::Zero).is_err());
    }

    #[test]
    fn iid_indicator_closed_form() {
        // g = 1(|x| > b): Ψ = exp(−(1 − e^{−1}) b^{−α})
        let s = spectral_tail_oracle(&FieldModel::iid(1.5)).unwrap();
        let inp = LaplaceInput::PsiL { sampler: &s, shapes: vec![ShapeTerm { d: vec![Point::of(&[1])], weight: 1.0 }] };
        let r = limit_laplace(&inp, &TestFn::Indicator { level: 2.0 }, 1.5, 1000, 4, 1e-3, 0).unwrap();
        let exact = (-(1.0 - (-1.0f64).exp()) * 2.0f64.powf(-1.5)).exp();
        assert!((r.mean - exact).abs() < 1e-12, "{} vs {exact}", r.mean);
    }

    #[test]
    fn exp_and_product_forms_agree() {
        let m = FieldModel::moving_maxima(1.0, kernel_1d(&[1.0, 0.5]));
        let s = spectral_tail_oracle(&m).unwrap();
        let shapes = vec![
            ShapeTerm { d: (1..=6).map(|x| Point::of(&[x])).collect(), weight: 0.7 },
            ShapeTerm { d: vec![Point::of(&[2])], weight: 0.3 },
        ];
        let inp = LaplaceInput::PsiL { sampler: &s, shapes };
        let r = limit_laplace(&inp, &TestFn::bump(0.5, 4.0, 1.0), 1.0, 20000, 8, 1e-3, 0).unwrap();
        assert!((r.mean - r.product_form).abs() < 1e-14);
    }

    #[test]
    fn monotone_rule() {
        assert!(monotone_within_se(&[(0.1, 0.01), (0.12, 0.01), (0.05, 0.01)], 3.0));
        assert!(!monotone_within_se(&[(0.1, 0.001), (0.2, 0.001)], 3.0));
    }
}
