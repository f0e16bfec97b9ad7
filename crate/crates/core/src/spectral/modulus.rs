use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::{IndexSet, Point};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ModulusKind {
    SupNorm,
    AlphaNorm { alpha: f64 },
}

/// A 1-homogeneous functional restricted to the finite patch Υ.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Modulus {
    pub kind: ModulusKind,
    pub upsilon: Vec<Point>,
}

impl Modulus {
    pub fn new(kind: ModulusKind, mut upsilon: Vec<Point>) -> Result<Self> {
        if upsilon.is_empty() {
            return Err(Error::InvalidArgument("modulus needs a non-empty patch".into()));
        }
        if let ModulusKind::AlphaNorm { alpha } = kind {
            if !(alpha > 0.0) {
                return Err(Error::InvalidArgument(format!("alpha must be positive, got {alpha}")));
            }
        }
        let d = upsilon[0].dim();
        if let Some(p) = upsilon.iter().find(|p| p.dim() != d) {
            return Err(Error::DimensionMismatch { expected: d, got: p.dim() });
        }
        upsilon.sort();
        upsilon.dedup();
        Ok(Modulus { kind, upsilon })
    }

    pub fn sup(upsilon: Vec<Point>) -> Result<Self> {
        Self::new(ModulusKind::SupNorm, upsilon)
    }

    pub fn alpha_norm(alpha: f64, upsilon: Vec<Point>) -> Result<Self> {
        Self::new(ModulusKind::AlphaNorm { alpha }, upsilon)
    }

    /// The trivial modulus |x_0|.
    pub fn origin(dim: usize) -> Self {
        Modulus { kind: ModulusKind::SupNorm, upsilon: vec![Point::zero(dim)] }
    }

    pub fn dim(&self) -> usize {
        self.upsilon[0].dim()
    }

    pub fn size(&self) -> usize {
        self.upsilon.len()
    }

    /// Applies the modulus to the absolute values at the Υ points (same order as `upsilon`).
    pub fn apply(&self, abs_values: impl IntoIterator<Item = f64>) -> f64 {
        match self.kind {
            ModulusKind::SupNorm => abs_values.into_iter().fold(0.0, |m, v| m.max(v.abs())),
            ModulusKind::AlphaNorm { alpha } => {
                let s: f64 = abs_values.into_iter().map(|v| v.abs().powf(alpha)).sum();
                s.powf(1.0 / alpha)
            }
        }
    }

    /// ρ evaluated on the shifted patch (Υ)_{t0} = t0 + Υ.
    pub fn eval_at(&self, window: &IndexSet, abs_values: &[f64], t0: &Point) -> Result<f64> {
        let mut vals = Vec::with_capacity(self.upsilon.len());
        for u in &self.upsilon {
            let p = *t0 + *u;
            let i = window.index_of(&p).ok_or(Error::NotInIndexSet(p))?;
            vals.push(abs_values[i]);
        }
        Ok(self.apply(vals))
    }

    /// ρ on a lookup function; missing points are an error.
    pub fn eval_fn(&self, x: impl Fn(&Point) -> Option<f64>) -> Result<f64> {
        let mut vals = Vec::with_capacity(self.upsilon.len());
        for u in &self.upsilon {
            vals.push(x(u).ok_or(Error::NotInIndexSet(*u))?);
        }
        Ok(self.apply(vals))
    }

    /// (C, D) with C·sup ≤ ρ-bounds: ρ(x) ≤ 1 ⇒ sup ≤ D and sup ≤ C ⇒ ρ ≤ 1.
    pub fn constants(&self) -> (f64, f64) {
        match self.kind {
            ModulusKind::SupNorm => (1.0, 1.0),
            ModulusKind::AlphaNorm { alpha } => ((self.upsilon.len() as f64).powf(-1.0 / alpha), 1.0),
        }
    }
}

/// ρ_Υ of the field values on `window`, with Υ ⊆ window required.
pub fn modulus_eval(rho: &Modulus, window: &IndexSet, abs_values: &[f64]) -> Result<f64> {
    rho.eval_at(window, abs_values, &Point::zero(rho.dim()))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pts(v: &[i64]) -> Vec<Point> {
        v.iter().map(|&x| Point::of(&[x])).collect()
    }

    #[test]
    fn single_point_and_homogeneity() {
        let w = IndexSet::hypercube(3, 1);
        let r = Modulus::alpha_norm(1.5, pts(&[0])).unwrap();
        let mut x = vec![0.0; w.len()];
        x[w.index_of(&Point::of(&[0])).unwrap()] = 2.5;
        assert!((modulus_eval(&r, &w, &x).unwrap() - 2.5).abs() < 1e-12);
        let r = Modulus::alpha_norm(2.0, pts(&[-1, 0, 2])).unwrap();
        let x: Vec<f64> = (0..w.len()).map(|i| i as f64 * 0.3 + 0.1).collect();
        let y: Vec<f64> = x.iter().map(|v| 2.0 * v).collect();
        let a = modulus_eval(&r, &w, &x).unwrap();
        assert!((modulus_eval(&r, &w, &y).unwrap() - 2.0 * a).abs() < 1e-12);
    }

    #[test]
    fn constants_of_builtins() {
        assert_eq!(Modulus::sup(pts(&[0, 1])).unwrap().constants(), (1.0, 1.0));
        let (c, d) = Modulus::alpha_norm(2.0, pts(&[0, 1, 2, 3])).unwrap().constants();
        assert!((c - 0.5).abs() < 1e-15 && d == 1.0 && c <= d);
    }

    #[test]
    fn patch_outside_window_is_error() {
        let w = IndexSet::hypercube(1, 1);
        let r = Modulus::sup(pts(&[5])).unwrap();
        assert!(modulus_eval(&r, &w, &vec![1.0; 3]).is_err());
    }
}
