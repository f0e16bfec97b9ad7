//! Tail fields, spectral tail fields and their Υ-versions: moduli, empirical
//! estimators from simulated fields, the time-change identity and cluster fields.

mod estimate;
mod modulus;
mod testfn;
mod timechange;

use crate::lattice::Point;
use crate::rng::SimRng;

pub use estimate::{
    estimate_spectral_tail, estimate_upsilon_tail, exceedance_ratio, independence_check, marginal_quantile,
    pareto_check, tail_field_probability, EmpiricalSpectral, Normalization, ParetoCheck, SpectralSamples,
    MAX_EXCEEDANCE_FRACTION,
};
pub use modulus::{modulus_eval, Modulus, ModulusKind};
pub use testfn::{default_g_grid, TestFn};
pub use timechange::{cluster_field, time_change_check, ClusterField, TimeChangeForm, TimeChangeReport};

/// Source of draws of a (Υ-)spectral tail field at requested offsets.
pub trait SpectralSampler: Send + Sync {
    fn alpha(&self) -> f64;
    fn dim(&self) -> usize;
    /// Writes one draw of Θ at `offsets[i]` into `out[i]`.
    fn sample(&self, rng: &mut SimRng, offsets: &[Point], out: &mut [f64]);
}
