use serde::{Deserialize, Serialize};

use super::census::{census, census_xi, ShapeCensus};
use super::structure::{
    hat_d, infer_shape, partition_shape, stabilizer, symmetric_invariance, tip_check, xi_structure, HatD, Partition,
    ShapeD, TipResult, XiStructure,
};
use crate::error::Result;
use crate::lattice::{IndexSet, InvariantOrder};

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct AnalysisConfig {
    pub p: i64,
    /// Defaults to 4p.
    pub probe_radius: Option<i64>,
    /// Shapes below this census weight are treated as boundary effects.
    pub min_weight: f64,
}

impl AnalysisConfig {
    pub fn new(p: i64) -> Self {
        AnalysisConfig { p, probe_radius: None, min_weight: 0.005 }
    }

    pub fn probe(&self) -> i64 {
        self.probe_radius.unwrap_or(4 * self.p)
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct AnalyzedShape {
    /// Position in the census shape list.
    pub census_index: usize,
    pub weight: f64,
    pub shape: ShapeD,
    pub partition: Partition,
    pub tips: Vec<TipResult>,
    pub hat_d: HatD,
    pub hat_d_invariant: bool,
    pub xi: XiStructure,
    /// Weight of Ξ*_j ∩ K_p in the full-window census.
    pub xi_weight: f64,
    pub weight_bound_ok: bool,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct IStarEntry {
    /// Index into `ShapeAnalysis::shapes`.
    pub shape: usize,
    pub gamma_star: f64,
    pub e_size: usize,
    /// All analyzed shapes whose Ξ* is a translate of this one.
    pub class: Vec<usize>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ShapeAnalysis {
    pub census: ShapeCensus,
    pub census_xi: ShapeCensus,
    pub shapes: Vec<AnalyzedShape>,
    pub i_star: Vec<IStarEntry>,
    /// Σ_{j∈I*} γ*_j |E_j|.
    pub sum_gamma_e: f64,
}

impl ShapeAnalysis {
    /// 2(2p+1)^k · S / |Λ|, the boundary allowance for |Σγ*|E| - 1|.
    pub fn boundary_bound(&self) -> f64 {
        let k = self.census.dim as i32;
        2.0 * ((2 * self.census.p + 1) as f64).powi(k) * self.census.shapes.len() as f64 / self.census.total as f64
    }
}

/// Runs the full structural analysis of Λ at radius p: census, exact shape
/// inference for every significant shape, stabilizers, partitions, TIP, hat-D,
/// Ξ-structures and the selection of I* (one representative per translation
/// class of Ξ*, the one whose pattern E has the ≺-smallest last point).
pub fn analyze(lambda: &IndexSet, order: &InvariantOrder, cfg: &AnalysisConfig) -> Result<ShapeAnalysis> {
    let c = census(lambda, cfg.p, order);
    let cx = census_xi(lambda, cfg.p);
    let probe = cfg.probe();
    let mut shapes = Vec::new();
    for (idx, entry) in c.significant(cfg.min_weight) {
        let shape = infer_shape(&entry.key, cfg.p, order)?;
        let l = stabilizer(&shape, order, probe)?;
        let partition = partition_shape(&shape, &l, order, probe)?;
        let tips: Vec<TipResult> = (0..partition.components.len()).map(|i| tip_check(&partition, i, order, probe)).collect();
        let hat = hat_d(&shape, &partition, &tips)?;
        let hat_d_invariant = symmetric_invariance(&hat.shape, probe);
        let xi = xi_structure(&partition, order, probe)?;
        let xi_weight = cx.weight_of(&xi.window(cfg.p));
        let weight = entry.weight_f64();
        shapes.push(AnalyzedShape {
            census_index: idx,
            weight,
            weight_bound_ok: partition.weight_bound_holds(weight),
            shape,
            partition,
            tips,
            hat_d: hat,
            hat_d_invariant,
            xi,
            xi_weight,
        });
    }

    let mut classes: Vec<Vec<usize>> = Vec::new();
    for (j, s) in shapes.iter().enumerate() {
        if s.xi_weight < cfg.min_weight {
            continue;
        }
        match classes.iter_mut().find(|cl| shapes[cl[0]].xi.translate_of(&s.xi).is_some()) {
            Some(cl) => cl.push(j),
            None => classes.push(vec![j]),
        }
    }
    let i_star: Vec<IStarEntry> = classes
        .into_iter()
        .map(|class| {
            let rep = *class
                .iter()
                .min_by(|&&a, &&b| {
                    let last = |j: usize| *shapes[j].xi.e.last().expect("E contains 0");
                    order.cmp(&last(a), &last(b)).then(a.cmp(&b))
                })
                .expect("non-empty class");
            IStarEntry { shape: rep, gamma_star: shapes[rep].xi_weight, e_size: shapes[rep].xi.n(), class }
        })
        .collect();
    let sum_gamma_e = i_star.iter().map(|e| e.gamma_star * e.e_size as f64).sum();
    Ok(ShapeAnalysis { census: c, census_xi: cx, shapes, i_star, sum_gamma_e })
}
