use std::collections::BTreeSet;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::{IndexSet, InvariantOrder, Point};
use crate::models::FieldRealization;

/// Anchors per realization used for the unconditional baseline.
const BASELINE_ANCHORS: usize = 2000;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum AcVariant {
    /// Conditioning on |X_0| > a·x, maxima over R_{l,Λ_r} = (⋃_t (Λ_r)_{-t})^+ ∖ K_l.
    Origin,
    /// Conditioning on max_E |X| > a·x, maxima over R^{(j)} ∖ K_{2l}, where R^{(j)} only
    /// uses centres t with (Λ_r)_{-t} ⊇ E.
    Pattern { e: Vec<Point> },
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct AcCurve {
    pub variant: AcVariant,
    pub l: Vec<i64>,
    /// P̂(max over the l-th set > a·x | conditioning event).
    pub prob: Vec<f64>,
    pub se: Vec<f64>,
    /// P̂(max over the l-th set > a·x) without conditioning, from evenly spaced
    /// anchors; the limit of `prob` when far sites are independent of the origin.
    pub unconditional: Vec<f64>,
    pub set_sizes: Vec<usize>,
    pub n_conditioned: usize,
    /// Least-squares slope of `prob` against l.
    pub slope: f64,
    pub epsilon: f64,
    pub pass: bool,
}

/// {s − t ≻ 0 : s ∈ B, t ∈ centres}.
pub fn positive_difference_set(block: &IndexSet, centres: &[Point], order: &InvariantOrder) -> Vec<Point> {
    let mut out: BTreeSet<Point> = BTreeSet::new();
    for t in centres {
        for s in block.iter() {
            let d = *s - *t;
            if order.is_positive(&d) {
                out.insert(d);
            }
        }
    }
    out.into_iter().collect()
}

/// Conditional probabilities that the field exceeds a·x somewhere in the far part of
/// the block difference set, over an l grid. Anchors t_0 are the window points whose
/// shifted difference set (and pattern) lie inside the window.
#[allow(clippy::too_many_arguments)]
pub fn ac_diagnostic(
    reals: &[FieldRealization],
    block: &IndexSet,
    order: &InvariantOrder,
    variant: &AcVariant,
    a: f64,
    x: f64,
    l_grid: &[i64],
    epsilon: f64,
) -> Result<AcCurve> {
    if reals.is_empty() || l_grid.is_empty() {
        return Err(Error::InvalidArgument("need realizations and a non-empty l grid".into()));
    }
    let level = a * x;
    let (cond, scale): (Vec<Point>, i64) = match variant {
        AcVariant::Origin => (vec![Point::zero(block.dim())], 1),
        AcVariant::Pattern { e } => (e.clone(), 2),
    };
    let centres: Vec<Point> = match variant {
        AcVariant::Origin => block.points().to_vec(),
        AcVariant::Pattern { e } => {
            block.iter().filter(|s| e.iter().all(|z| block.contains(&(*z + **s)))).copied().collect()
        }
    };
    let r = positive_difference_set(block, &centres, order);
    let norms: Vec<i64> = r.iter().map(|p| p.norm_inf()).collect();
    let max_norm = norms.iter().copied().max().unwrap_or(0) as usize;
    let need: Vec<Point> = r.iter().chain(cond.iter()).copied().collect();

    let stride = (reals[0].len() / BASELINE_ANCHORS).max(1);
    // per realization: (conditioned anchors, hits per l, baseline anchors, baseline hits per l)
    let per: Vec<(usize, Vec<usize>, usize, Vec<usize>)> = reals
        .par_iter()
        .map(|real| {
            let w = &real.window;
            let mut n = 0usize;
            let mut hits = vec![0usize; l_grid.len()];
            let mut nb = 0usize;
            let mut base = vec![0usize; l_grid.len()];
            let mut by_norm = vec![0.0f64; max_norm + 2];
            for (k, t0) in w.iter().enumerate() {
                let ok = need.iter().all(|p| w.contains(&(*p + *t0)));
                if !ok {
                    continue;
                }
                let c = cond.iter().map(|z| real.abs(w.index_of(&(*z + *t0)).expect("checked"))).fold(0.0, f64::max);
                let conditioned = c > level;
                let baseline = k % stride == 0;
                if !conditioned && !baseline {
                    continue;
                }
                by_norm.iter_mut().for_each(|v| *v = 0.0);
                for (p, d) in r.iter().zip(&norms) {
                    let v = real.abs(w.index_of(&(*p + *t0)).expect("checked"));
                    let slot = &mut by_norm[*d as usize];
                    *slot = slot.max(v);
                }
                // suffix maxima: largest value at sup norm ≥ d
                for d in (0..=max_norm).rev() {
                    by_norm[d] = by_norm[d].max(by_norm[d + 1]);
                }
                let far = |l: i64| {
                    let d = (scale * l + 1).max(0) as usize;
                    d <= max_norm && by_norm[d] > level
                };
                if conditioned {
                    n += 1;
                    for (h, l) in hits.iter_mut().zip(l_grid) {
                        *h += far(*l) as usize;
                    }
                }
                if baseline {
                    nb += 1;
                    for (h, l) in base.iter_mut().zip(l_grid) {
                        *h += far(*l) as usize;
                    }
                }
            }
            (n, hits, nb, base)
        })
        .collect();
    let n: usize = per.iter().map(|p| p.0).sum();
    if n == 0 {
        return Err(Error::ConditioningNeverObserved(format!("no eligible anchor exceeds a·x = {level}")));
    }
    let nb = per.iter().map(|p| p.2).sum::<usize>().max(1) as f64;
    let mut prob = Vec::new();
    let mut se = Vec::new();
    let mut unconditional = Vec::new();
    let mut set_sizes = Vec::new();
    for (k, l) in l_grid.iter().enumerate() {
        let h: usize = per.iter().map(|p| p.1[k]).sum();
        let p = h as f64 / n as f64;
        prob.push(p);
        se.push((p * (1.0 - p) / n as f64).sqrt());
        let size = norms.iter().filter(|d| **d > scale * l).count();
        set_sizes.push(size);
        unconditional.push(per.iter().map(|p| p.3[k]).sum::<usize>() as f64 / nb);
    }
    let slope = ls_slope(l_grid, &prob);
    let pass = *prob.last().expect("non-empty") <= epsilon;
    Ok(AcCurve {
        variant: variant.clone(),
        l: l_grid.to_vec(),
        prob,
        se,
        unconditional,
        set_sizes,
        n_conditioned: n,
        slope,
        epsilon,
        pass,
    })
}

fn ls_slope(x: &[i64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    if x.len() < 2 {
        return 0.0;
    }
    let mx = x.iter().sum::<i64>() as f64 / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (*a as f64 - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (*a as f64 - mx).powi(2)).sum();
    if sxx == 0.0 {
        0.0
    } else {
        sxy / sxx
    }
}

#[cfg(test)]
mod tests {
    use std::sync::Arc;

    use super::*;
    use crate::models::{kernel_1d, simulate_many, FieldModel, VLaw};

    fn line(n: i64) -> IndexSet {
        IndexSet::hyperrectangle(&Point::of(&[1]), &Point::of(&[n])).unwrap()
    }

    #[test]
    fn difference_set_of_a_segment() {
        let b = line(5);
        let r = positive_difference_set(&b, b.points(), &InvariantOrder::lexicographic(1));
        assert_eq!(r, (1..=4).map(|x| Point::of(&[x])).collect::<Vec<_>>());
    }

    #[test]
    fn m_dependent_curve_matches_independence() {
        let w = Arc::new(line(3000));
        let model = FieldModel::moving_maxima(1.0, kernel_1d(&[1.0, 1.0]));
        let reals = simulate_many(&model, &w, 4, 200).unwrap();
        let c = ac_diagnostic(&reals, &line(20), &InvariantOrder::lexicographic(1), &AcVariant::Origin, 200.0, 1.0, &[0, 1, 2, 5], 0.2)
            .unwrap();
        // l = 0 keeps the neighbour that shares a noise variable
        assert!(c.prob[0] > 0.4, "{c:?}");
        for k in 1..4 {
            assert!((c.prob[k] - c.unconditional[k]).abs() <= 4.0 * c.se[k] + 0.01, "{c:?}");
        }
        assert!(c.prob.windows(2).all(|w| w[1] <= w[0]));
        assert!(c.pass);
    }

    #[test]
    fn common_factor_fails() {
        let w = Arc::new(line(200));
        let reals = simulate_many(&FieldModel::de_haan(VLaw::Constant), &w, 0, 200).unwrap();
        let c = ac_diagnostic(&reals, &line(10), &InvariantOrder::lexicographic(1), &AcVariant::Origin, 1.0, 1.0, &[1, 3, 5], 0.05)
            .unwrap();
        assert!(c.prob.iter().all(|p| *p == 1.0));
        assert!(!c.pass);
        let none = ac_diagnostic(&reals, &line(10), &InvariantOrder::lexicographic(1), &AcVariant::Origin, 1e12, 1.0, &[1], 0.05);
        assert!(matches!(none, Err(Error::ConditioningNeverObserved(_))));
    }
}
