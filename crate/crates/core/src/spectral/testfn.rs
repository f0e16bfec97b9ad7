use serde::{Deserialize, Serialize};

/// Bounded test functions of a single field value.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TestFn {
    /// c · ramp up on [b1, 1.1·b1] · ramp down on [b2/1.1, b2]; zero on |x| ≤ b1 and |x| ≥ b2.
    Bump { b1: f64, b2: f64, c: f64 },
    /// 1(|x| > level)
    Indicator { level: f64 },
    Zero,
}

fn clamp01(x: f64) -> f64 {
    x.clamp(0.0, 1.0)
}

impl TestFn {
    pub fn bump(b1: f64, b2: f64, c: f64) -> Self {
        TestFn::Bump { b1, b2, c }
    }

    #[inline]
    pub fn eval(&self, x: f64) -> f64 {
        let a = x.abs();
        match *self {
            TestFn::Bump { b1, b2, c } => {
                c * clamp01((a - b1) / (0.1 * b1)) * clamp01((b2 - a) / (b2 - b2 / 1.1))
            }
            TestFn::Indicator { level } => {
                if a > level {
                    1.0
                } else {
                    0.0
                }
            }
            TestFn::Zero => 0.0,
        }
    }

    /// Radius below which g vanishes (the lower end of its support).
    pub fn lower(&self) -> f64 {
        match *self {
            TestFn::Bump { b1, .. } => b1,
            TestFn::Indicator { level } => level,
            TestFn::Zero => f64::INFINITY,
        }
    }

    pub fn sup(&self) -> f64 {
        match *self {
            TestFn::Bump { c, .. } => c.abs(),
            TestFn::Indicator { .. } => 1.0,
            TestFn::Zero => 0.0,
        }
    }

    pub fn is_zero(&self) -> bool {
        matches!(self, TestFn::Zero) || matches!(self, TestFn::Bump { c, .. } if *c == 0.0)
    }

    pub fn label(&self) -> String {
        match *self {
            TestFn::Bump { b1, b2, c } => format!("bump(b1={b1},b2={b2},c={c})"),
            TestFn::Indicator { level } => format!("indicator(level={level})"),
            TestFn::Zero => "zero".into(),
        }
    }
}

/// The default 3×3 grid of bumps: b1 ∈ {0.5, 1, 2}, c ∈ {0.5, 1, 2}, b2 = 8·b1.
pub fn default_g_grid() -> Vec<TestFn> {
    let mut v = Vec::with_capacity(9);
    for b1 in [0.5, 1.0, 2.0] {
        for c in [0.5, 1.0, 2.0] {
            v.push(TestFn::bump(b1, 8.0 * b1, c));
        }
    }
    v
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bump_shape() {
        let g = TestFn::bump(1.0, 5.0, 2.0);
        assert_eq!(g.eval(0.5), 0.0);
        assert_eq!(g.eval(1.0), 0.0);
        assert!((g.eval(1.05) - 1.0).abs() < 1e-12);
        assert_eq!(g.eval(-3.0), 2.0);
        assert_eq!(g.eval(5.0), 0.0);
        assert_eq!(g.eval(7.0), 0.0);
    }
}
