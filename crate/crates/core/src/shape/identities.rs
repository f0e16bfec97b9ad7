use std::collections::HashMap;

use num_rational::Ratio;
use serde::{Deserialize, Serialize};

use super::census::{truncate_key, ShapeCensus};
use crate::error::{Error, Result};
use crate::lattice::Point;

/// Total absolute count mismatch when the finer census (radius p' > p) is
/// aggregated onto the coarser one by truncating keys to K_p. Zero means the
/// refinement identity λ_{j,p} = Σ_{i∈I_p^{(j)}} λ_{i,p'} holds exactly.
pub fn refinement_violation(coarse: &ShapeCensus, fine: &ShapeCensus) -> Result<usize> {
    if fine.p < coarse.p || fine.kind != coarse.kind || fine.total != coarse.total {
        return Err(Error::InvalidArgument("refinement needs the same Λ, same kind and a larger radius".into()));
    }
    let mut agg: HashMap<Vec<Point>, usize> = HashMap::new();
    for s in &fine.shapes {
        *agg.entry(truncate_key(&s.key, coarse.p)).or_default() += s.count;
    }
    let mut violation = 0usize;
    for s in &coarse.shapes {
        let got = agg.remove(&s.key).unwrap_or(0);
        violation += got.abs_diff(s.count);
    }
    violation += agg.values().sum::<usize>();
    Ok(violation)
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct IdentityReport {
    /// Σλ = 1 exactly, per census.
    pub sum_lambda_exact: Vec<bool>,
    /// Max count mismatch of the upper-shape refinement identity over consecutive radii.
    pub max_refinement_violation: usize,
    /// Same for the full-window census.
    pub max_xi_refinement_violation: usize,
    pub sum_gamma_e: Option<f64>,
    pub gamma_residual: Option<f64>,
    pub boundary_bound: Option<f64>,
}

impl IdentityReport {
    pub fn exact_ok(&self) -> bool {
        self.sum_lambda_exact.iter().all(|&b| b)
            && self.max_refinement_violation == 0
            && self.max_xi_refinement_violation == 0
    }
}

/// Checks the finite-n identities on censuses of one Λ at increasing radii.
/// `upper` and `full` must be sorted by radius.
pub fn weight_identities(
    upper: &[ShapeCensus],
    full: &[ShapeCensus],
    gamma: Option<(f64, f64)>,
) -> Result<IdentityReport> {
    if upper.len() < 2 {
        return Err(Error::InvalidArgument("need at least two census snapshots".into()));
    }
    let one = Ratio::from_integer(1u64);
    let sum_lambda_exact = upper.iter().chain(full).map(|c| c.sum_weights() == one).collect();
    let mut max_ref = 0;
    for w in upper.windows(2) {
        max_ref = max_ref.max(refinement_violation(&w[0], &w[1])?);
    }
    let mut max_xi = 0;
    for w in full.windows(2) {
        max_xi = max_xi.max(refinement_violation(&w[0], &w[1])?);
    }
    Ok(IdentityReport {
        sum_lambda_exact,
        max_refinement_violation: max_ref,
        max_xi_refinement_violation: max_xi,
        sum_gamma_e: gamma.map(|g| g.0),
        gamma_residual: gamma.map(|g| (g.0 - 1.0).abs()),
        boundary_bound: gamma.map(|g| g.1),
    })
}

/// Dominant-shape weights over an (n, p) schedule with both iterated-limit
/// readings.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct WeightSweep {
    pub ns: Vec<usize>,
    pub ps: Vec<i64>,
    /// dominant[i][j]: largest shape weight at (ns[i], ps[j]).
    pub dominant: Vec<Vec<f64>>,
    pub shape_counts: Vec<Vec<usize>>,
    /// Row of the largest n read along p (n → ∞ first).
    pub n_then_p: Vec<f64>,
    /// Column of the largest p read along n (p → ∞ first).
    pub p_then_n: Vec<f64>,
    pub non_monotone: bool,
}

/// `grid[i][j]` is the census for (ns[i], ps[j]).
pub fn weight_sweep(ns: &[usize], ps: &[i64], grid: &[Vec<ShapeCensus>]) -> WeightSweep {
    let dominant: Vec<Vec<f64>> =
        grid.iter().map(|row| row.iter().map(|c| c.shapes.first().map_or(0.0, |s| s.weight_f64())).collect()).collect();
    let shape_counts = grid.iter().map(|row| row.iter().map(|c| c.shapes.len()).collect()).collect();
    let n_then_p = dominant.last().cloned().unwrap_or_default();
    let p_then_n: Vec<f64> = dominant.iter().filter_map(|row| row.last().copied()).collect();
    let monotone = |v: &[f64]| {
        v.windows(2).all(|w| w[1] >= w[0] - 1e-12) || v.windows(2).all(|w| w[1] <= w[0] + 1e-12)
    };
    WeightSweep {
        ns: ns.to_vec(),
        ps: ps.to_vec(),
        non_monotone: !monotone(&n_then_p) || !monotone(&p_then_n),
        dominant,
        shape_counts,
        n_then_p,
        p_then_n,
    }
}

#[cfg(test)]
mod tests {
    use super::super::census::{census, census_xi};
    use super::*;
    use crate::lattice::{IndexSet, InvariantOrder};

    #[test]
    fn refinement_exact_on_square() {
        let lam = IndexSet::hyperrectangle(&Point::of(&[1, 1]), &Point::of(&[15, 15])).unwrap();
        let o = InvariantOrder::lexicographic(2);
        let up: Vec<_> = [1, 2, 4].iter().map(|&p| census(&lam, p, &o)).collect();
        let full: Vec<_> = [1, 2, 4].iter().map(|&p| census_xi(&lam, p)).collect();
        let r = weight_identities(&up, &full, None).unwrap();
        assert!(r.exact_ok());
    }

    #[test]
    fn sweep_reads_both_orders() {
        let o = InvariantOrder::lexicographic(1);
        let ns = [50usize, 200];
        let ps = [1i64, 3];
        let grid: Vec<Vec<ShapeCensus>> = ns
            .iter()
            .map(|&n| {
                let lam = IndexSet::new(1, (1..=n as i64).map(|i| Point::of(&[i]))).unwrap();
                ps.iter().map(|&p| census(&lam, p, &o)).collect()
            })
            .collect();
        let s = weight_sweep(&ns, &ps, &grid);
        assert!((s.n_then_p[0] - 199.0 / 200.0).abs() < 1e-12);
        assert!((s.p_then_n[0] - 47.0 / 50.0).abs() < 1e-12);
    }
}
