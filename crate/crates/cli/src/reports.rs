//! Report types written by the steps, and plot emission from a set of reports.

use std::path::{Path, PathBuf};

use rvfield::exceedance::LaplaceReport;
use rvfield::extremal::{AcCurve, FrechetFit, ThetaEstimate};
use serde::{Deserialize, Serialize};

use crate::plot::{line_chart, panel_bars, Panel, Series};

/// Block θ at one threshold of the τ sweep.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct TauPoint {
    pub tau: f64,
    pub threshold: f64,
    pub block_side: i64,
    pub blocks: usize,
    pub block_size: usize,
    pub estimate: ThetaEstimate,
}

/// Empirical vs limit Laplace functionals at one index-set size.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct LaplaceAtSize {
    pub size_param: Option<i64>,
    pub lambda_size: usize,
    pub normalizer: f64,
    pub reports: Vec<LaplaceReport>,
}

/// Whatever reports exist; each present report yields one SVG.
#[derive(Default)]
pub struct ReportSet<'a> {
    pub ac: Option<&'a AcCurve>,
    pub frechet: Option<&'a FrechetFit>,
    pub laplace: Option<&'a [LaplaceAtSize]>,
    pub theta: Option<(&'a [TauPoint], &'a [ThetaEstimate])>,
    /// (y, empirical survival, y^{-α}) of the radial part.
    pub pareto: Option<&'a [(f64, f64, f64)]>,
}

fn write(dir: &Path, name: &str, svg: String) -> std::io::Result<PathBuf> {
    let p = dir.join(name);
    std::fs::write(&p, svg)?;
    Ok(p)
}

/// Writes one SVG per report present; an empty set writes nothing.
pub fn emit_plots(reports: &ReportSet<'_>, dir: &Path) -> std::io::Result<Vec<PathBuf>> {
    let mut out = Vec::new();
    if let Some(ac) = reports.ac {
        let prob = ac.l.iter().zip(&ac.prob).zip(&ac.se).map(|((l, p), s)| (*l as f64, *p, 2.0 * s)).collect();
        let base = ac.l.iter().zip(&ac.unconditional).map(|(l, p)| (*l as f64, *p, 0.0)).collect();
        let eps = ac.l.iter().map(|l| (*l as f64, ac.epsilon, 0.0)).collect();
        let svg = line_chart(
            "Anti-clustering: P(far exceedance | exceedance at the anchor)",
            "l",
            "probability",
            &[Series::line("conditional", prob), Series::line("unconditional", base), Series::line("epsilon", eps)],
            false,
        );
        out.push(write(dir, "ac.svg", svg)?);
    }
    if let Some(f) = reports.frechet {
        let qq = f.qq.iter().map(|(m, e)| (*m, *e, 0.0)).collect();
        let svg = line_chart(
            &format!("Frechet QQ (theta = {:.3}, KS = {:.4}, band = {:.4})", f.theta, f.ks, f.band),
            "model quantile",
            "normalized maximum",
            &[Series::scatter("maxima", qq)],
            true,
        );
        out.push(write(dir, "frechet_qq.svg", svg)?);
    }
    if let Some(sizes) = reports.laplace {
        if let Some(last) = sizes.last() {
            let panels: Vec<Panel> = last
                .reports
                .iter()
                .map(|r| Panel {
                    title: r.g.label(),
                    bars: vec![
                        ("empirical".into(), r.empirical.mean, 2.0 * r.empirical.se),
                        ("limit".into(), r.limit.mean, 2.0 * r.limit.se),
                    ],
                })
                .collect();
            let svg = panel_bars(&format!("Laplace functional, |Lambda| = {}", last.lambda_size), &panels, 3);
            out.push(write(dir, "laplace.svg", svg)?);
        }
    }
    if let Some((sweep, forms)) = reports.theta {
        let mut series =
            vec![Series::line("block", sweep.iter().map(|t| (t.tau, t.estimate.raw, 2.0 * t.estimate.se)).collect())];
        let (lo, hi) = sweep.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), t| (a.min(t.tau), b.max(t.tau)));
        for f in forms {
            let name = serde_json::to_value(f.variant).ok().and_then(|v| v.as_str().map(String::from)).unwrap_or_default();
            series.push(Series::line(name, vec![(lo, f.raw, 0.0), (hi, f.raw, 0.0)]));
        }
        out.push(write(dir, "theta.svg", line_chart("Extremal index", "tau", "theta", &series, false))?);
    }
    if let Some(p) = reports.pareto {
        let emp = p.iter().map(|(y, s, _)| (*y, *s, 0.0)).collect();
        let lim = p.iter().map(|(y, _, l)| (*y, *l, 0.0)).collect();
        let svg = line_chart(
            "Radial part of the tail field",
            "y",
            "P(|X_t0| / u > y | exceedance)",
            &[Series::line("empirical", emp), Series::line("y^-alpha", lim)],
            false,
        );
        out.push(write(dir, "tailfield_pareto.svg", svg)?);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rvfield::extremal::AcVariant;

    #[test]
    fn empty_set_writes_nothing_and_ac_writes_one() {
        let dir = tempfile::tempdir().unwrap();
        assert!(emit_plots(&ReportSet::default(), dir.path()).unwrap().is_empty());
        assert_eq!(std::fs::read_dir(dir.path()).unwrap().count(), 0);
        let ac = AcCurve {
            variant: AcVariant::Origin,
            l: vec![0, 1, 2],
            prob: vec![0.5, 0.1, 0.05],
            se: vec![0.01; 3],
            unconditional: vec![0.05; 3],
            set_sizes: vec![9, 8, 7],
            n_conditioned: 100,
            slope: -0.2,
            epsilon: 0.05,
            pass: true,
        };
        let files = emit_plots(&ReportSet { ac: Some(&ac), ..Default::default() }, dir.path()).unwrap();
        assert_eq!(files.len(), 1);
        let svg = std::fs::read_to_string(&files[0]).unwrap();
        assert!(svg.contains(">l</text>"));
    }
}
