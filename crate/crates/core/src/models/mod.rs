//! Stationary regularly varying fields on finite windows: iid Fréchet,
//! moving maxima, max-stable fields from the de Haan construction, and linear
//! heavy-tailed fields. Every simulator pads its noise so the window law is
//! exactly stationary.

mod oracle;
mod simulate;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::Point;

pub use oracle::{
    br_condition_diagnostic, maxstable_tail_oracle, spectral_tail_oracle, upsilon_tail_oracle, BrCurve,
    MaxLinearSpectral, VSampler,
};
pub use simulate::{simulate, simulate_many, write_csv, FieldRealization, TruncationReport};

/// One entry of a finite kernel: weight at offset `at`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct KernelTerm {
    pub at: Point,
    pub weight: f64,
}

impl KernelTerm {
    pub fn new(at: &[i64], weight: f64) -> Self {
        KernelTerm { at: Point::of(at), weight }
    }
}

/// Kernel on Z^1 from a list of weights at 0, 1, 2, ...
pub fn kernel_1d(weights: &[f64]) -> Vec<KernelTerm> {
    weights.iter().enumerate().map(|(i, &w)| KernelTerm::new(&[i as i64], w)).collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "law", rename_all = "snake_case")]
pub enum WeightLaw {
    Uniform { lo: f64, hi: f64 },
    /// Standard exponential; unbounded, so simulation needs an envelope.
    Exponential,
}

impl WeightLaw {
    pub fn mean(&self) -> f64 {
        match *self {
            WeightLaw::Uniform { lo, hi } => 0.5 * (lo + hi),
            WeightLaw::Exponential => 1.0,
        }
    }

    /// Almost-sure upper bound, if any.
    pub fn bound(&self) -> Option<f64> {
        match *self {
            WeightLaw::Uniform { hi, .. } => Some(hi),
            WeightLaw::Exponential => None,
        }
    }

    pub fn sample(&self, rng: &mut crate::rng::SimRng) -> f64 {
        match *self {
            WeightLaw::Uniform { lo, hi } => lo + (hi - lo) * crate::rng::open01(rng),
            WeightLaw::Exponential => crate::rng::exp1(rng),
        }
    }
}

/// Law of the process V in the de Haan construction X_t = max_i U_i V_{i,t}.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum VLaw {
    /// V ≡ 1: all sites share one Fréchet value.
    Constant,
    /// Non-random V with the listed values (zero elsewhere). Not stationary;
    /// useful as an oracle test case.
    Deterministic { values: Vec<KernelTerm> },
    /// Mixed moving maxima with a fixed profile: V_t = f(t - S), S a uniform shift.
    Shifted { kernel: Vec<KernelTerm> },
    /// Mixed moving maxima with iid random weights on a fixed support.
    RandomProfile { support: Vec<Point>, weights: WeightLaw },
}

impl VLaw {
    pub fn dim(&self) -> Option<usize> {
        match self {
            VLaw::Constant => None,
            VLaw::Deterministic { values } => values.first().map(|t| t.at.dim()),
            VLaw::Shifted { kernel } => kernel.first().map(|t| t.at.dim()),
            VLaw::RandomProfile { support, .. } => support.first().map(|p| p.dim()),
        }
    }

    /// E[V_0]; analytic for every built-in law.
    pub fn mean_v0(&self) -> f64 {
        match self {
            VLaw::Constant => 1.0,
            VLaw::Deterministic { values } => values.iter().filter(|t| t.at.is_zero()).map(|t| t.weight).sum(),
            VLaw::Shifted { kernel } => kernel.iter().map(|t| t.weight).sum(),
            VLaw::RandomProfile { support, weights } => support.len() as f64 * weights.mean(),
        }
    }

    fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidModel(m.to_string()));
        match self {
            VLaw::Constant => Ok(()),
            VLaw::Deterministic { values } | VLaw::Shifted { kernel: values } => {
                if values.is_empty() || values.iter().any(|t| !(t.weight >= 0.0) || !t.weight.is_finite()) {
                    return bad("V values must be finite and non-negative, at least one entry");
                }
                if values.iter().map(|t| t.weight).sum::<f64>() <= 0.0 {
                    return bad("V has zero mass");
                }
                same_dim(values.iter().map(|t| &t.at))
            }
            VLaw::RandomProfile { support, weights } => {
                if support.is_empty() {
                    return bad("random profile needs a support");
                }
                if let WeightLaw::Uniform { lo, hi } = weights {
                    if !(0.0 <= *lo && lo < hi && hi.is_finite()) {
                        return bad("uniform weights need 0 <= lo < hi");
                    }
                }
                same_dim(support.iter())
            }
        }
    }
}

fn same_dim<'a>(mut pts: impl Iterator<Item = &'a Point>) -> Result<()> {
    if let Some(first) = pts.next() {
        let d = first.dim();
        for p in pts {
            if p.dim() != d {
                return Err(Error::DimensionMismatch { expected: d, got: p.dim() });
            }
        }
    }
    Ok(())
}

fn default_rel_tol() -> f64 {
    1e-6
}

fn one() -> usize {
    1
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "model", rename_all = "snake_case")]
pub enum FieldModel {
    IidFrechet {
        alpha: f64,
        #[serde(default = "scale_one")]
        scale: f64,
        /// Value dimension; for d > 1 the direction is a uniformly chosen signed axis.
        #[serde(default = "one")]
        value_dim: usize,
    },
    /// X_t = max_s a_s Z_{t-s} with iid unit Fréchet(α) noise Z.
    MovingMaxima { alpha: f64, kernel: Vec<KernelTerm> },
    /// X_t = max_i U_i V_{i,t}, U_i = 1/Γ_i; 1-Fréchet marginals.
    DeHaan {
        v: VLaw,
        /// Upper bound on a single profile weight, required when the weight law is unbounded.
        #[serde(default)]
        envelope: Option<f64>,
        #[serde(default = "default_rel_tol")]
        rel_tol: f64,
    },
    /// X_t = Σ_s c_s Z_{t-s} with symmetric Pareto(α) noise.
    LinearHeavyTail { alpha: f64, coeffs: Vec<KernelTerm> },
}

fn scale_one() -> f64 {
    1.0
}

impl FieldModel {
    pub fn iid(alpha: f64) -> Self {
        FieldModel::IidFrechet { alpha, scale: 1.0, value_dim: 1 }
    }

    pub fn moving_maxima(alpha: f64, kernel: Vec<KernelTerm>) -> Self {
        FieldModel::MovingMaxima { alpha, kernel }
    }

    pub fn de_haan(v: VLaw) -> Self {
        FieldModel::DeHaan { v, envelope: None, rel_tol: default_rel_tol() }
    }

    pub fn name(&self) -> &'static str {
        match self {
            FieldModel::IidFrechet { .. } => "iid_frechet",
            FieldModel::MovingMaxima { .. } => "moving_maxima",
            FieldModel::DeHaan { .. } => "de_haan",
            FieldModel::LinearHeavyTail { .. } => "linear_heavy_tail",
        }
    }

    pub fn alpha(&self) -> f64 {
        match self {
            FieldModel::IidFrechet { alpha, .. }
            | FieldModel::MovingMaxima { alpha, .. }
            | FieldModel::LinearHeavyTail { alpha, .. } => *alpha,
            FieldModel::DeHaan { .. } => 1.0,
        }
    }

    pub fn value_dim(&self) -> usize {
        match self {
            FieldModel::IidFrechet { value_dim, .. } => *value_dim,
            _ => 1,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidModel(m));
        let a = self.alpha();
        if !(a > 0.0 && a.is_finite()) {
            return bad(format!("alpha must be positive, got {a}"));
        }
        match self {
            FieldModel::IidFrechet { scale, value_dim, .. } => {
                if !(*scale > 0.0) || *value_dim == 0 {
                    return bad("iid model needs scale > 0 and value_dim >= 1".into());
                }
                Ok(())
            }
            FieldModel::MovingMaxima { kernel, alpha } => {
                if kernel.is_empty() || kernel.iter().any(|t| !(t.weight >= 0.0) || !t.weight.is_finite()) {
                    return bad("moving maxima kernel must be finite and non-negative".into());
                }
                if kernel.iter().map(|t| t.weight.powf(*alpha)).sum::<f64>() <= 0.0 {
                    return bad("moving maxima kernel has zero mass".into());
                }
                same_dim(kernel.iter().map(|t| &t.at))
            }
            FieldModel::DeHaan { v, envelope, rel_tol } => {
                if !(*rel_tol >= 0.0) {
                    return bad("rel_tol must be non-negative".into());
                }
                if let Some(e) = envelope {
                    if !(*e > 0.0) {
                        return bad("envelope must be positive".into());
                    }
                }
                v.validate()
            }
            FieldModel::LinearHeavyTail { coeffs, .. } => {
                if coeffs.is_empty() || coeffs.iter().all(|t| t.weight == 0.0) {
                    return bad("linear model needs a non-zero coefficient".into());
                }
                same_dim(coeffs.iter().map(|t| &t.at))
            }
        }
    }

    /// Survival function u ↦ P(|X_0| > u).
    pub fn marginal_tail(&self) -> MarginalTail {
        match self {
            FieldModel::IidFrechet { alpha, scale, .. } => {
                MarginalTail { c: scale.powf(*alpha), alpha: *alpha, form: TailForm::Frechet, exact: true }
            }
            FieldModel::MovingMaxima { alpha, kernel } => MarginalTail {
                c: kernel.iter().map(|t| t.weight.powf(*alpha)).sum(),
                alpha: *alpha,
                form: TailForm::Frechet,
                exact: true,
            },
            FieldModel::DeHaan { v, .. } => {
                MarginalTail { c: v.mean_v0(), alpha: 1.0, form: TailForm::Frechet, exact: true }
            }
            FieldModel::LinearHeavyTail { alpha, coeffs } => MarginalTail {
                c: coeffs.iter().map(|t| t.weight.abs().powf(*alpha)).sum(),
                alpha: *alpha,
                form: TailForm::Power,
                exact: false,
            },
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TailForm {
    /// 1 - exp(-c u^{-α})
    Frechet,
    /// min(1, c u^{-α}); only asymptotically correct.
    Power,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MarginalTail {
    pub c: f64,
    pub alpha: f64,
    pub form: TailForm,
    /// false when the survival function is only the tail asymptote.
    pub exact: bool,
}

impl MarginalTail {
    pub fn survival(&self, u: f64) -> f64 {
        if u <= 0.0 {
            return 1.0;
        }
        let x = self.c * u.powf(-self.alpha);
        match self.form {
            TailForm::Frechet => -(-x).exp_m1(),
            TailForm::Power => x.min(1.0),
        }
    }

    pub fn cdf(&self, u: f64) -> f64 {
        1.0 - self.survival(u)
    }
}

pub fn marginal_tail(model: &FieldModel) -> MarginalTail {
    model.marginal_tail()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn marginals_of_builtins() {
        let m = FieldModel::iid(1.0).marginal_tail();
        assert!((m.survival(2.0) - (1.0 - (-0.5f64).exp())).abs() < 1e-15);
        let m = FieldModel::moving_maxima(1.0, kernel_1d(&[1.0, 1.0])).marginal_tail();
        assert!((m.survival(3.0) - (1.0 - (-2.0f64 / 3.0).exp())).abs() < 1e-15);
        let m = FieldModel::de_haan(VLaw::RandomProfile {
            support: vec![Point::of(&[0]), Point::of(&[1])],
            weights: WeightLaw::Uniform { lo: 0.0, hi: 2.0 },
        })
        .marginal_tail();
        assert!((m.c - 2.0).abs() < 1e-15);
    }

    #[test]
    fn validation() {
        assert!(FieldModel::moving_maxima(1.0, kernel_1d(&[0.0, 0.0])).validate().is_err());
        assert!(FieldModel::iid(-1.0).validate().is_err());
        assert!(FieldModel::moving_maxima(1.0, kernel_1d(&[2.0, 1.0])).validate().is_ok());
    }

    #[test]
    fn model_toml_like_roundtrip() {
        let m = FieldModel::moving_maxima(1.0, kernel_1d(&[1.0, 1.0]));
        let s = serde_json::to_string(&m).unwrap();
        assert_eq!(serde_json::from_str::<FieldModel>(&s).unwrap(), m);
    }
}
