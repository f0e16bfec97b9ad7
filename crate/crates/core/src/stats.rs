//! Small statistical helpers shared by the estimators.

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ChiSquared, ContinuousCDF};

use crate::rng::{stream, SimRng};

/// Mean with its standard error.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub mean: f64,
    pub se: f64,
    pub n: usize,
}

impl Estimate {
    pub fn exact(v: f64) -> Self {
        Estimate { mean: v, se: 0.0, n: 0 }
    }
}

pub fn mean_se(xs: &[f64]) -> Estimate {
    let n = xs.len();
    if n == 0 {
        return Estimate { mean: f64::NAN, se: f64::NAN, n };
    }
    let m = xs.iter().sum::<f64>() / n as f64;
    if n == 1 {
        return Estimate { mean: m, se: 0.0, n };
    }
    let var = xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (n - 1) as f64;
    Estimate { mean: m, se: (var / n as f64).sqrt(), n }
}

/// Jackknife standard error of the sample mean (leave-one-out means).
pub fn jackknife_mean(xs: &[f64]) -> Estimate {
    let n = xs.len();
    if n < 2 {
        return mean_se(xs);
    }
    let total: f64 = xs.iter().sum();
    let m = total / n as f64;
    let loo: Vec<f64> = xs.iter().map(|x| (total - x) / (n - 1) as f64).collect();
    let lm = loo.iter().sum::<f64>() / n as f64;
    let var = (n - 1) as f64 / n as f64 * loo.iter().map(|v| (v - lm) * (v - lm)).sum::<f64>();
    Estimate { mean: m, se: var.sqrt(), n }
}

/// Ratio of means Σa/Σb with a delta-method standard error.
pub fn ratio_se(a: &[f64], b: &[f64]) -> Estimate {
    let n = a.len();
    let ma = a.iter().sum::<f64>() / n as f64;
    let mb = b.iter().sum::<f64>() / n as f64;
    let r = ma / mb;
    let resid: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - r * y).collect();
    let e = mean_se(&resid);
    Estimate { mean: r, se: e.se / mb.abs(), n }
}

/// Half-width of the Dvoretzky–Kiefer–Wolfowitz band at confidence 1 - level.
pub fn dkw_epsilon(n: usize, level: f64) -> f64 {
    ((2.0 / level).ln() / (2.0 * n as f64)).sqrt()
}

/// sup_x |F_n(x) - F(x)| for a continuous reference cdf.
pub fn ks_distance(sample: &[f64], cdf: impl Fn(f64) -> f64) -> f64 {
    let mut xs = sample.to_vec();
    xs.sort_by(f64::total_cmp);
    let n = xs.len() as f64;
    let mut d: f64 = 0.0;
    for (i, &x) in xs.iter().enumerate() {
        let f = cdf(x);
        d = d.max((f - i as f64 / n).abs()).max(((i + 1) as f64 / n - f).abs());
    }
    d
}

/// Two-sample KS statistic.
pub fn ks_two_sample(a: &[f64], b: &[f64]) -> f64 {
    let mut x = a.to_vec();
    let mut y = b.to_vec();
    x.sort_by(f64::total_cmp);
    y.sort_by(f64::total_cmp);
    let (mut i, mut j, mut d) = (0usize, 0usize, 0f64);
    while i < x.len() && j < y.len() {
        let v = x[i].min(y[j]);
        while i < x.len() && x[i] <= v {
            i += 1;
        }
        while j < y.len() && y[j] <= v {
            j += 1;
        }
        d = d.max((i as f64 / x.len() as f64 - j as f64 / y.len() as f64).abs());
    }
    d
}

/// Empirical quantile (linear interpolation on the sorted sample).
pub fn quantile(sorted: &[f64], q: f64) -> f64 {
    assert!(!sorted.is_empty());
    let h = q.clamp(0.0, 1.0) * (sorted.len() - 1) as f64;
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

/// Total variation distance between two probability vectors on the same bins.
pub fn total_variation(p: &[f64], q: &[f64]) -> f64 {
    0.5 * p.iter().zip(q).map(|(a, b)| (a - b).abs()).sum::<f64>()
}

/// Relative frequencies of |x| in bins of `width` on [0, upper), plus one
/// overflow bin for |x| ≥ upper. NaNs are dropped.
pub fn histogram(xs: &[f64], width: f64, upper: f64) -> Vec<f64> {
    let nb = (upper / width).round() as usize;
    let mut h = vec![0.0; nb + 1];
    let mut n = 0usize;
    for x in xs.iter().filter(|x| !x.is_nan()) {
        let i = ((x.abs() / width).floor() as usize).min(nb);
        h[i] += 1.0;
        n += 1;
    }
    if n > 0 {
        h.iter_mut().for_each(|v| *v /= n as f64);
    }
    h
}

/// Upper-tail p-value of Pearson's chi-square statistic for observed counts
/// against expected counts (bins with expectation below 5 should be merged by the caller).
pub fn chi_square_pvalue(observed: &[f64], expected: &[f64], fitted_params: usize) -> f64 {
    let stat: f64 = observed.iter().zip(expected).map(|(o, e)| (o - e) * (o - e) / e).sum();
    let dof = (observed.len() - 1 - fitted_params).max(1) as f64;
    1.0 - ChiSquared::new(dof).expect("positive dof").cdf(stat)
}

fn centered_distances(pts: &[Vec<f64>]) -> Vec<f64> {
    let n = pts.len();
    let mut d = vec![0.0; n * n];
    for i in 0..n {
        for j in (i + 1)..n {
            let v = pts[i].iter().zip(&pts[j]).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt();
            d[i * n + j] = v;
            d[j * n + i] = v;
        }
    }
    let row: Vec<f64> = (0..n).map(|i| d[i * n..(i + 1) * n].iter().sum::<f64>() / n as f64).collect();
    let all = row.iter().sum::<f64>() / n as f64;
    for i in 0..n {
        for j in 0..n {
            d[i * n + j] += all - row[i] - row[j];
        }
    }
    d
}

fn dcov2(a: &[f64], b: &[f64], n: usize, perm: &[usize]) -> f64 {
    let mut s = 0.0;
    for i in 0..n {
        let pi = perm[i];
        for j in 0..n {
            s += a[i * n + j] * b[pi * n + perm[j]];
        }
    }
    s / (n * n) as f64
}

/// Distance correlation between paired samples with a permutation p-value.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct DcorTest {
    pub dcor: f64,
    pub p_value: f64,
    pub n: usize,
}

pub fn distance_correlation_test(x: &[Vec<f64>], y: &[Vec<f64>], permutations: usize, seed: u64) -> DcorTest {
    let n = x.len();
    let a = centered_distances(x);
    let b = centered_distances(y);
    let id: Vec<usize> = (0..n).collect();
    let vxy = dcov2(&a, &b, n, &id);
    let vx = dcov2(&a, &a, n, &id);
    let vy = dcov2(&b, &b, n, &id);
    let dcor = if vx * vy > 0.0 { (vxy.max(0.0) / (vx * vy).sqrt()).sqrt() } else { 0.0 };
    let mut rng: SimRng = stream(seed, 0);
    let mut perm = id.clone();
    let mut exceed = 0usize;
    for _ in 0..permutations {
        perm.shuffle(&mut rng);
        if dcov2(&a, &b, n, &perm) >= vxy {
            exceed += 1;
        }
    }
    DcorTest { dcor, p_value: (exceed + 1) as f64 / (permutations + 1) as f64, n }
}
