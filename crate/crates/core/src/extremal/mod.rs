//! Extremal index: the block estimator, the spectral representations of θ,
//! the argmax functional T*, anti-clustering diagnostics and the Fréchet fit
//! of normalized maxima.

mod ac;
mod block;
mod frechet;
mod forms;

use serde::{Deserialize, Serialize};

pub use ac::{ac_diagnostic, positive_difference_set, AcCurve, AcVariant};
pub use block::{block_theta, threshold_for_tau, BlockScheme};
pub use forms::{
    argmax_t_star, theta_index4, theta_lattice_forms, theta_u_index, IndexTerm, LatticeForms, TStar, UIndexForms,
};
pub use frechet::{frechet_fit, FrechetFit};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ThetaVariant {
    Block,
    UIndex,
    /// P(Y·sup_D|Θ| ≤ 1), the second u-index expression.
    UIndexPareto,
    LatticeQ,
    LatticeRatio,
    LatticeTstar,
    UpsilonIndex4,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ThetaDiagnostics {
    pub ac_pass: Option<bool>,
    /// |θ_R − θ_{R/2}| from the same draws.
    pub summability_residual: Option<f64>,
    /// Fraction of draws whose T* landed on the boundary shell of K_R.
    pub truncation_miss_rate: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ThetaEstimate {
    pub variant: ThetaVariant,
    /// `raw` clamped to [0, 1].
    pub value: f64,
    pub se: f64,
    pub n: usize,
    /// Monte Carlo or plug-in value before clamping.
    pub raw: f64,
    pub out_of_range: bool,
    /// Truncation radius R, when the representation needs one.
    pub truncation: Option<i64>,
    pub diagnostics: ThetaDiagnostics,
}

impl ThetaEstimate {
    pub fn new(variant: ThetaVariant, raw: f64, se: f64, n: usize, truncation: Option<i64>) -> Self {
        let out_of_range = !(0.0..=1.0).contains(&raw);
        ThetaEstimate {
            variant,
            value: raw.clamp(0.0, 1.0),
            se,
            n,
            raw,
            out_of_range,
            truncation,
            diagnostics: ThetaDiagnostics::default(),
        }
    }

    /// |a − b| ≤ k·sqrt(se_a² + se_b²).
    pub fn agrees_with(&self, other: &ThetaEstimate, k: f64) -> bool {
        (self.raw - other.raw).abs() <= k * (self.se.powi(2) + other.se.powi(2)).sqrt() + 1e-12
    }
}
