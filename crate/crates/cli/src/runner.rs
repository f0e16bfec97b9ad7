//! Step execution in dependency order (census → simulate → estimate → compare)
//! and the run manifest.

use std::collections::{BTreeMap, BTreeSet};
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::Instant;

use log::info;
use rvfield::exceedance::{
    empirical_laplace, exceedance_process, limit_laplace, monotone_within_se, normalizer_analytic, LaplaceInput,
    LaplaceReport, ShapeTerm,
};
use rvfield::extremal::{
    ac_diagnostic, block_theta, frechet_fit, theta_index4, theta_lattice_forms, theta_u_index, threshold_for_tau,
    AcVariant, BlockScheme, IndexTerm, ThetaEstimate,
};
use rvfield::lattice::{cube_points, IndexSet, InvariantOrder, Point};
use rvfield::models::{simulate_many, spectral_tail_oracle, upsilon_tail_oracle, write_csv, FieldModel, FieldRealization};
use rvfield::rng;
use rvfield::shape::{analyze, census, census_xi, weight_identities, weight_sweep, AnalysisConfig, ShapeAnalysis};
use rvfield::spectral::{
    default_g_grid, estimate_spectral_tail, independence_check, marginal_quantile, pareto_check, time_change_check,
    Modulus, SpectralSampler, TestFn, TimeChangeForm,
};
use rvfield::stats::{histogram, total_variation};
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::config::{point, CensusStep, ExperimentConfig};
use crate::error::{CliError, CliResult};
use crate::lambda::{build_lambda, build_order};
use crate::reports::{emit_plots, LaplaceAtSize, ReportSet, TauPoint};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Step {
    Census,
    Simulate,
    Tailfield,
    Timechange,
    Laplace,
    Ac,
    Theta,
    Frechet,
}

impl Step {
    /// Execution order.
    pub const ALL: [Step; 8] =
        [Step::Census, Step::Simulate, Step::Tailfield, Step::Timechange, Step::Laplace, Step::Ac, Step::Theta, Step::Frechet];

    pub fn name(self) -> &'static str {
        match self {
            Step::Census => "census",
            Step::Simulate => "simulate",
            Step::Tailfield => "tailfield",
            Step::Timechange => "timechange",
            Step::Laplace => "laplace",
            Step::Ac => "ac",
            Step::Theta => "theta",
            Step::Frechet => "frechet",
        }
    }

    fn needs_fields(self) -> bool {
        matches!(self, Step::Simulate | Step::Tailfield | Step::Ac | Step::Theta | Step::Frechet)
    }

    fn needs_analysis(self) -> bool {
        matches!(self, Step::Census | Step::Laplace | Step::Theta)
    }
}

/// Steps with a config section; census always runs when nothing else is selected.
pub fn configured_steps(cfg: &ExperimentConfig) -> BTreeSet<Step> {
    let mut s = BTreeSet::new();
    let present = [
        (Step::Census, cfg.census.is_some()),
        (Step::Simulate, cfg.simulate.is_some()),
        (Step::Tailfield, cfg.tailfield.is_some()),
        (Step::Timechange, cfg.timechange.is_some()),
        (Step::Laplace, cfg.laplace.is_some()),
        (Step::Ac, cfg.ac.is_some()),
        (Step::Theta, cfg.theta.is_some()),
        (Step::Frechet, cfg.frechet.is_some()),
    ];
    s.extend(present.iter().filter(|(_, p)| *p).map(|(st, _)| *st));
    if s.is_empty() {
        s.insert(Step::Census);
    }
    s
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct StepRecord {
    pub step: Step,
    pub seed: u64,
    pub outputs: Vec<String>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RunManifest {
    pub config_hash: String,
    pub tool_version: String,
    pub seed: u64,
    pub lambda_size: usize,
    pub lambda_dim: usize,
    pub steps: Vec<StepRecord>,
    /// Not part of the reproducible output.
    pub wall_clock_seconds: f64,
}

pub struct Runner {
    cfg: ExperimentConfig,
    out: PathBuf,
    lambda: Arc<IndexSet>,
    order: InvariantOrder,
    analysis: Option<ShapeAnalysis>,
    reals: Option<Vec<FieldRealization>>,
    theta_block: Option<f64>,
    ac_pass: Option<bool>,
    records: Vec<StepRecord>,
}

fn step_err(step: Step) -> impl Fn(rvfield::Error) -> CliError {
    move |e| CliError::step(step.name(), e)
}

fn io_err(step: Step) -> impl Fn(std::io::Error) -> CliError {
    move |e| CliError::step(step.name(), e)
}

fn fmt_point(p: &Point) -> String {
    p.coords().iter().map(|c| c.to_string()).collect::<Vec<_>>().join(" ")
}

impl Runner {
    pub fn new(cfg: ExperimentConfig, out: PathBuf) -> CliResult<Self> {
        let lambda = build_lambda(&cfg.lambda, None)?;
        if lambda.is_empty() {
            return Err(CliError::Config("Λ is empty".into()));
        }
        let order = build_order(&cfg.order, lambda.dim())?;
        std::fs::create_dir_all(&out).map_err(|e| CliError::Config(format!("cannot create {}: {e}", out.display())))?;
        Ok(Runner {
            cfg,
            out,
            lambda: Arc::new(lambda),
            order,
            analysis: None,
            reals: None,
            theta_block: None,
            ac_pass: None,
            records: Vec::new(),
        })
    }

    fn seed(&self, name: &str) -> u64 {
        rng::substream_seed(self.cfg.seed, name)
    }

    fn model(&self, step: Step) -> CliResult<&FieldModel> {
        self.cfg.model.as_ref().ok_or_else(|| CliError::Config(format!("step `{}` needs a [model] section", step.name())))
    }

    fn json(&self, step: Step, name: &str, v: &impl Serialize) -> CliResult<String> {
        let text = serde_json::to_string_pretty(v).map_err(|e| CliError::step(step.name(), e))?;
        std::fs::write(self.out.join(name), text + "\n").map_err(io_err(step))?;
        Ok(name.to_string())
    }

    fn csv(&self, step: Step, name: &str, header: &[&str], rows: &[Vec<String>]) -> CliResult<String> {
        let mut s = header.join(",");
        s.push('\n');
        for r in rows {
            s.push_str(&r.join(","));
            s.push('\n');
        }
        std::fs::write(self.out.join(name), s).map_err(io_err(step))?;
        Ok(name.to_string())
    }

    fn plots(&self, step: Step, set: &ReportSet<'_>) -> CliResult<Vec<String>> {
        let files = emit_plots(set, &self.out).map_err(io_err(step))?;
        Ok(files.iter().filter_map(|p| p.file_name().map(|f| f.to_string_lossy().into_owned())).collect())
    }

    /// Runs the requested steps plus their prerequisites and writes `manifest.json`.
    pub fn run(mut self, requested: &BTreeSet<Step>) -> CliResult<RunManifest> {
        let start = Instant::now();
        let mut todo = requested.clone();
        if todo.iter().any(|s| s.needs_fields()) {
            todo.insert(Step::Simulate);
        }
        if todo.iter().any(|s| s.needs_analysis()) {
            todo.insert(Step::Census);
        }
        for step in Step::ALL.into_iter().filter(|s| todo.contains(s)) {
            info!("step {}", step.name());
            let seed = self.seed(step.name());
            let outputs = match step {
                Step::Census => self.census_step()?,
                Step::Simulate => self.simulate_step(seed)?,
                Step::Tailfield => self.tailfield_step(seed)?,
                Step::Timechange => self.timechange_step(seed)?,
                Step::Laplace => self.laplace_step(seed)?,
                Step::Ac => self.ac_step()?,
                Step::Theta => self.theta_step(seed)?,
                Step::Frechet => self.frechet_step()?,
            };
            self.records.push(StepRecord { step, seed, outputs });
        }
        let manifest = RunManifest {
            config_hash: self.cfg.hash(),
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            seed: self.cfg.seed,
            lambda_size: self.lambda.len(),
            lambda_dim: self.lambda.dim(),
            steps: self.records.clone(),
            wall_clock_seconds: start.elapsed().as_secs_f64(),
        };
        check_outputs(&self.out, &manifest)?;
        let text = serde_json::to_string_pretty(&manifest).map_err(|e| CliError::step("manifest", e))?;
        std::fs::write(self.out.join("manifest.json"), text + "\n").map_err(|e| CliError::step("manifest", e))?;
        Ok(manifest)
    }

    fn census_step(&mut self) -> CliResult<Vec<String>> {
        let st = Step::Census;
        let c = self.cfg.census.clone().unwrap_or_default();
        let mut ps = c.p.clone();
        ps.sort_unstable();
        ps.dedup();
        let upper: Vec<_> = ps.iter().map(|&p| census(&self.lambda, p, &self.order)).collect();
        let full: Vec<_> = ps.iter().map(|&p| census_xi(&self.lambda, p)).collect();
        let ap = c.analysis_p.unwrap_or(*ps.last().expect("validated non-empty"));
        let analysis = analyze(&self.lambda, &self.order, &AnalysisConfig::new(ap)).map_err(step_err(st))?;
        let identities = if ps.len() >= 2 {
            Some(
                weight_identities(&upper, &full, Some((analysis.sum_gamma_e, analysis.boundary_bound())))
                    .map_err(step_err(st))?,
            )
        } else {
            None
        };
        let sweep = self.census_sweep(&c, &ps)?;
        let mut rows = Vec::new();
        for cen in upper.iter().chain(&full) {
            for (rank, s) in cen.shapes.iter().enumerate() {
                let kind = serde_json::to_value(cen.kind).expect("enum").as_str().unwrap_or_default().to_string();
                let key: Vec<String> = s.key.iter().map(fmt_point).collect();
                rows.push(vec![
                    kind,
                    cen.p.to_string(),
                    rank.to_string(),
                    s.count.to_string(),
                    s.weight_f64().to_string(),
                    format!("\"{}\"", key.join(";")),
                ]);
            }
        }
        let report = json!({
            "lambda": { "dim": self.lambda.dim(), "size": self.lambda.len(), "bounding_box": self.lambda.bounding_box() },
            "order_priority": self.order.priority(),
            "p": ps,
            "identities": identities,
            "upper": upper,
            "full": full,
            "analysis": analysis,
            "sweep": sweep,
        });
        let mut out = vec![self.json(st, "census.json", &report)?];
        out.push(self.csv(st, "census.csv", &["kind", "p", "rank", "count", "weight", "key"], &rows)?);
        self.analysis = Some(analysis);
        Ok(out)
    }

    fn census_sweep(&self, c: &CensusStep, ps: &[i64]) -> CliResult<Option<serde_json::Value>> {
        if c.n.is_empty() {
            return Ok(None);
        }
        let mut sizes = Vec::new();
        let mut grid = Vec::new();
        let mut ids = Vec::new();
        for &n in &c.n {
            let lam = build_lambda(&self.cfg.lambda, Some(n))?;
            let row: Vec<_> = ps.iter().map(|&p| census(&lam, p, &self.order)).collect();
            if ps.len() >= 2 {
                let full: Vec<_> = ps.iter().map(|&p| census_xi(&lam, p)).collect();
                ids.push(weight_identities(&row, &full, None).map_err(step_err(Step::Census))?);
            }
            sizes.push(lam.len());
            grid.push(row);
        }
        let sw = weight_sweep(&sizes, ps, &grid);
        Ok(Some(json!({ "n": c.n, "sizes": sizes, "weights": sw, "identities": ids })))
    }

    fn simulate_step(&mut self, seed: u64) -> CliResult<Vec<String>> {
        let st = Step::Simulate;
        let model = self.model(st)?.clone();
        let sim = self.cfg.simulate.clone().unwrap_or_default();
        let reals = simulate_many(&model, &self.lambda, seed, sim.realizations).map_err(step_err(st))?;
        let maxima: Vec<f64> = reals.iter().map(|r| r.abs_values().into_iter().fold(0.0, f64::max)).collect();
        let trunc: Vec<_> = reals.iter().filter_map(|r| r.truncation.clone()).collect();
        let mut out = vec![self.json(
            st,
            "simulate.json",
            &json!({
                "model": model,
                "window_size": self.lambda.len(),
                "realizations": reals.len(),
                "seed": seed,
                "maxima": maxima,
                "truncation": trunc,
            }),
        )?];
        for (i, r) in reals.iter().take(sim.write_fields).enumerate() {
            let name = format!("field_{i}.csv");
            let f = std::fs::File::create(self.out.join(&name)).map_err(io_err(st))?;
            write_csv(r, std::io::BufWriter::new(f)).map_err(io_err(st))?;
            out.push(name);
        }
        self.reals = Some(reals);
        Ok(out)
    }

    fn reals(&self, step: Step) -> CliResult<&[FieldRealization]> {
        self.reals.as_deref().ok_or_else(|| CliError::step(step.name(), "no simulated fields"))
    }

    fn tailfield_step(&mut self, seed: u64) -> CliResult<Vec<String>> {
        let st = Step::Tailfield;
        let tf = self.cfg.tailfield.clone().unwrap_or_default();
        let model = self.model(st)?.clone();
        let alpha = model.alpha();
        let reals = self.reals(st)?;
        let u = marginal_quantile(reals, tf.quantile);
        let offsets = cube_points(tf.radius, self.lambda.dim());
        let samples = estimate_spectral_tail(reals, u, &offsets, alpha).map_err(step_err(st))?;
        let pareto = pareto_check(&samples.radial, alpha, tf.y_max);
        let mut sorted = samples.radial.clone();
        sorted.sort_by(f64::total_cmp);
        let curve: Vec<(f64, f64, f64)> = (0..=60)
            .map(|i| {
                let y = 1.0 + (tf.y_max - 1.0) * i as f64 / 60.0;
                let above = sorted.len() - sorted.partition_point(|x| *x <= y);
                (y, above as f64 / sorted.len() as f64, y.powf(-alpha))
            })
            .collect();
        // oracle comparison of each Θ_s marginal, when the model has an exact sampler
        let tv = match spectral_tail_oracle(&model) {
            Ok(oracle) => {
                let mut r = rng::stream(seed, 0);
                let mut buf = vec![0.0; samples.offsets.len()];
                let mut cols = vec![Vec::with_capacity(tf.oracle_budget); samples.offsets.len()];
                for _ in 0..tf.oracle_budget {
                    oracle.sample(&mut r, &samples.offsets, &mut buf);
                    for (c, v) in cols.iter_mut().zip(&buf) {
                        c.push(*v);
                    }
                }
                let rows: Vec<serde_json::Value> = samples
                    .offsets
                    .iter()
                    .zip(&cols)
                    .filter(|(s, _)| !s.is_zero())
                    .map(|(s, col)| {
                        let emp = samples.marginal(s).expect("offset present");
                        let d = total_variation(&histogram(&emp, 0.1, 2.0), &histogram(col, 0.1, 2.0));
                        json!({ "offset": s, "tv": d })
                    })
                    .collect();
                Some(rows)
            }
            Err(_) => None,
        };
        let indep = independence_check(&samples, 400, 199, rng::substream_seed(seed, "dcor"));
        let report = json!({
            "threshold": u,
            "quantile": tf.quantile,
            "anchors": samples.len(),
            "exceedance_fraction": samples.exceedance_fraction,
            "pareto": pareto,
            "tv_vs_oracle": tv,
            "independence": indep,
        });
        let mut out = vec![self.json(st, "tailfield.json", &report)?];
        let f = std::fs::File::create(self.out.join("tailfield_samples.csv")).map_err(io_err(st))?;
        samples.write_csv(std::io::BufWriter::new(f)).map_err(io_err(st))?;
        out.push("tailfield_samples.csv".into());
        let rows: Vec<Vec<String>> =
            curve.iter().map(|(y, s, l)| vec![y.to_string(), s.to_string(), l.to_string()]).collect();
        out.push(self.csv(st, "tailfield_pareto.csv", &["y", "empirical", "pareto"], &rows)?);
        out.extend(self.plots(st, &ReportSet { pareto: Some(&curve), ..Default::default() })?);
        Ok(out)
    }

    fn timechange_step(&mut self, seed: u64) -> CliResult<Vec<String>> {
        let st = Step::Timechange;
        let tc = self.cfg.timechange.clone().unwrap_or_default();
        let model = self.model(st)?;
        let sampler = spectral_tail_oracle(model).map_err(step_err(st))?;
        let k = self.lambda.dim();
        let pairs: Vec<(Point, Point)> = if tc.pairs.is_empty() {
            let e = Point::unit(k, 0);
            vec![(e, e.scale(2)), (e, Point::zero(k)), (-e, e), (e.scale(2), -e)]
        } else {
            tc.pairs.iter().map(|(s, t)| Ok((point(s)?, point(t)?))).collect::<CliResult<_>>()?
        };
        let gs = if tc.g.is_empty() {
            vec![TestFn::bump(0.25, 2.0, 2.0), TestFn::bump(0.5, 4.0, 1.0), TestFn::bump(1.0, 8.0, 0.5)]
        } else {
            tc.g.clone()
        };
        let mut reports = Vec::new();
        let mut i = 0usize;
        for form in [TimeChangeForm::Theta, TimeChangeForm::Tail] {
            for g in &gs {
                for (s, t) in &pairs {
                    let sd = rng::substream_seed(seed, &format!("check-{i}"));
                    i += 1;
                    reports.push(time_change_check(&sampler, g, s, t, form, tc.budget, sd).map_err(step_err(st))?);
                }
            }
        }
        let rows: Vec<Vec<String>> = reports
            .iter()
            .map(|r| {
                vec![
                    serde_json::to_value(r.form).expect("enum").as_str().unwrap_or_default().to_string(),
                    format!("\"{}\"", r.g.label()),
                    format!("\"{}\"", fmt_point(&r.s)),
                    format!("\"{}\"", fmt_point(&r.t)),
                    r.lhs.to_string(),
                    r.rhs.to_string(),
                    r.se.to_string(),
                    r.pass.to_string(),
                ]
            })
            .collect();
        let all_pass = reports.iter().all(|r| r.pass);
        let mut out = vec![self.json(st, "timechange.json", &json!({ "all_pass": all_pass, "checks": reports }))?];
        out.push(self.csv(st, "timechange.csv", &["form", "g", "s", "t", "lhs", "rhs", "se", "pass"], &rows)?);
        Ok(out)
    }

    /// Shapes with census weights renormalized to sum to one.
    fn shape_terms(&self, radius: i64) -> CliResult<Vec<ShapeTerm>> {
        let a = self.analysis.as_ref().ok_or_else(|| CliError::step("census", "no shape analysis"))?;
        let total: f64 = a.shapes.iter().map(|s| s.weight).sum();
        Ok(a.shapes.iter().map(|s| ShapeTerm { d: s.shape.window(radius), weight: s.weight / total }).collect())
    }

    fn laplace_step(&mut self, seed: u64) -> CliResult<Vec<String>> {
        let st = Step::Laplace;
        let lc = self.cfg.laplace.clone().unwrap_or_default();
        let model = self.model(st)?.clone();
        let alpha = model.alpha();
        let sampler = spectral_tail_oracle(&model).map_err(step_err(st))?;
        let tail = model.marginal_tail();
        let gs = if lc.g.is_empty() { default_g_grid() } else { lc.g.clone() };
        let floor = gs.iter().map(|g| g.lower()).fold(f64::INFINITY, f64::min);
        if !(floor > 0.0 && floor.is_finite()) {
            return Err(CliError::Config("laplace test functions need a positive lower support".into()));
        }
        let shapes = self.shape_terms(lc.radius)?;
        let limits = gs
            .iter()
            .enumerate()
            .map(|(i, g)| {
                let inp = LaplaceInput::PsiL { sampler: &sampler, shapes: shapes.clone() };
                let sd = rng::substream_seed(seed, &format!("limit-{i}"));
                limit_laplace(&inp, g, alpha, lc.budget, lc.radius, lc.residual_bound, sd)
            })
            .collect::<rvfield::Result<Vec<_>>>()
            .map_err(step_err(st))?;
        let sizes: Vec<Option<i64>> = if lc.n.is_empty() { vec![None] } else { lc.n.iter().map(|n| Some(*n)).collect() };
        let mut results = Vec::new();
        for size in sizes {
            let lam = match size {
                None => self.lambda.clone(),
                Some(n) => Arc::new(build_lambda(&self.cfg.lambda, Some(n))?),
            };
            let sd = rng::substream_seed(seed, &format!("fields-{}", size.map_or("base".into(), |n| n.to_string())));
            let reals = simulate_many(&model, &lam, sd, lc.realizations).map_err(step_err(st))?;
            let a_n = normalizer_analytic(|u| tail.survival(u), &[lam.len()]).map_err(step_err(st))?.values[0];
            let configs = reals
                .iter()
                .map(|r| exceedance_process(r, &lam, a_n, floor))
                .collect::<rvfield::Result<Vec<_>>>()
                .map_err(step_err(st))?;
            let reports = gs
                .iter()
                .zip(&limits)
                .map(|(g, lim)| Ok(LaplaceReport::new(*g, empirical_laplace(&configs, g)?, lim)))
                .collect::<rvfield::Result<Vec<_>>>()
                .map_err(step_err(st))?;
            results.push(LaplaceAtSize { size_param: size, lambda_size: lam.len(), normalizer: a_n, reports });
        }
        let monotone: Vec<bool> = (0..gs.len())
            .map(|j| {
                let gaps: Vec<(f64, f64)> = results.iter().map(|r| (r.reports[j].gap(), r.reports[j].joint_se())).collect();
                monotone_within_se(&gaps, 3.0)
            })
            .collect();
        let mut rows = Vec::new();
        for r in &results {
            for rep in &r.reports {
                rows.push(vec![
                    r.lambda_size.to_string(),
                    format!("\"{}\"", rep.g.label()),
                    rep.empirical.mean.to_string(),
                    rep.empirical.se.to_string(),
                    rep.limit.mean.to_string(),
                    rep.limit.se.to_string(),
                    rep.gap().to_string(),
                    rep.pass.to_string(),
                ]);
            }
        }
        let report = json!({ "limits": limits, "sizes": results, "gap_nonincreasing_within_se": monotone });
        let mut out = vec![self.json(st, "laplace.json", &report)?];
        out.push(self.csv(
            st,
            "laplace.csv",
            &["lambda_size", "g", "empirical", "empirical_se", "limit", "limit_se", "gap", "pass"],
            &rows,
        )?);
        out.extend(self.plots(st, &ReportSet { laplace: Some(&results), ..Default::default() })?);
        Ok(out)
    }

    fn normalizer(&self, step: Step) -> CliResult<f64> {
        let tail = self.model(step)?.marginal_tail();
        Ok(normalizer_analytic(|u| tail.survival(u), &[self.lambda.len()]).map_err(step_err(step))?.values[0])
    }

    fn block_scheme(&self, step: Step, side: Option<i64>, u: f64) -> CliResult<BlockScheme> {
        match side {
            Some(r) => BlockScheme::with_side(&self.lambda, r, u),
            None => BlockScheme::sqrt_rule(&self.lambda, u),
        }
        .map_err(step_err(step))
    }

    fn ac_step(&mut self) -> CliResult<Vec<String>> {
        let st = Step::Ac;
        let ac = self.cfg.ac.clone().unwrap_or_default();
        let a_n = self.normalizer(st)?;
        let scheme = self.block_scheme(st, ac.block_side, a_n)?;
        let variant = match &ac.pattern {
            None => AcVariant::Origin,
            Some(e) => AcVariant::Pattern { e: e.iter().map(|p| point(p)).collect::<CliResult<_>>()? },
        };
        let curve = ac_diagnostic(self.reals(st)?, &scheme.block, &self.order, &variant, a_n, ac.x, &ac.l, ac.epsilon)
            .map_err(step_err(st))?;
        let rows: Vec<Vec<String>> = (0..curve.l.len())
            .map(|i| {
                vec![
                    curve.l[i].to_string(),
                    curve.prob[i].to_string(),
                    curve.se[i].to_string(),
                    curve.unconditional[i].to_string(),
                    curve.set_sizes[i].to_string(),
                ]
            })
            .collect();
        let mut out = vec![self.json(st, "ac.json", &json!({ "normalizer": a_n, "block_side": scheme.r, "curve": curve }))?];
        out.push(self.csv(st, "ac.csv", &["l", "prob", "se", "unconditional", "set_size"], &rows)?);
        out.extend(self.plots(st, &ReportSet { ac: Some(&curve), ..Default::default() })?);
        self.ac_pass = Some(curve.pass);
        Ok(out)
    }

    fn theta_step(&mut self, seed: u64) -> CliResult<Vec<String>> {
        let st = Step::Theta;
        let tc = self.cfg.theta.clone().unwrap_or_default();
        let model = self.model(st)?.clone();
        let alpha = model.alpha();
        let tail = model.marginal_tail();
        let sf = move |u: f64| tail.survival(u);
        let mut sweep = Vec::new();
        for &tau in &tc.tau {
            let u = threshold_for_tau(sf, self.lambda.len(), tau).map_err(step_err(st))?;
            let scheme = self.block_scheme(st, tc.block_side, u)?;
            let exact: Option<&(dyn Fn(f64) -> f64 + Sync)> = if tail.exact { Some(&sf) } else { None };
            let mut est = block_theta(self.reals(st)?, &scheme, exact).map_err(step_err(st))?;
            est.diagnostics.ac_pass = self.ac_pass;
            sweep.push(TauPoint {
                tau,
                threshold: u,
                block_side: scheme.r,
                blocks: scheme.k_n(),
                block_size: scheme.block.len(),
                estimate: est,
            });
        }
        self.theta_block = sweep.first().map(|t| t.estimate.value);
        let mut forms: Vec<ThetaEstimate> = Vec::new();
        let mut notes: Vec<String> = Vec::new();
        let analysis = self.analysis.clone().ok_or_else(|| CliError::step("census", "no shape analysis"))?;
        let oracle = spectral_tail_oracle(&model);
        let sum_ge = analysis.sum_gamma_e;
        for f in &tc.forms {
            let sd = rng::substream_seed(seed, f);
            match (f.as_str(), &oracle) {
                (_, Err(e)) => notes.push(format!("{f}: {e}")),
                ("u_index", Ok(s)) => {
                    let u = theta_u_index(s, &self.shape_terms(tc.radius)?, alpha, tc.budget, tc.radius, sd)
                        .map_err(step_err(st))?;
                    if !u.agree {
                        notes.push("u_index: the two u-index forms disagree beyond 3 SE".into());
                    }
                    forms.push(u.sup_difference);
                    forms.push(u.pareto);
                }
                ("lattice", Ok(s)) => {
                    if analysis.i_star.iter().any(|e| !analysis.shapes[e.shape].xi.is_lattice_case()) {
                        notes.push("lattice: some pattern E_j has more than one point; see index4".into());
                        continue;
                    }
                    let terms: Vec<_> = analysis
                        .i_star
                        .iter()
                        .map(|e| (analysis.shapes[e.shape].xi.clone(), e.gamma_star / sum_ge))
                        .collect();
                    let lf = theta_lattice_forms(s, &terms, alpha, tc.budget, tc.radius, sd).map_err(step_err(st))?;
                    if !lf.gaps_ok {
                        notes.push(format!("lattice: forms differ by {} (beyond 3 joint SE)", lf.max_gap));
                    }
                    forms.extend([lf.q_form, lf.ratio_form, lf.tstar_form]);
                }
                ("index4", Ok(_)) => {
                    let samplers = analysis
                        .i_star
                        .iter()
                        .map(|e| {
                            let xi = &analysis.shapes[e.shape].xi;
                            let m = Modulus::alpha_norm(alpha, xi.e.clone())?;
                            upsilon_tail_oracle(&model, m)
                        })
                        .collect::<rvfield::Result<Vec<_>>>()
                        .map_err(step_err(st))?;
                    let terms: Vec<IndexTerm<'_>> = analysis
                        .i_star
                        .iter()
                        .zip(&samplers)
                        .map(|(e, s)| IndexTerm {
                            sampler: s as &dyn SpectralSampler,
                            xi: analysis.shapes[e.shape].xi.clone(),
                            gamma: e.gamma_star / sum_ge,
                        })
                        .collect();
                    forms.push(theta_index4(&terms, alpha, tc.budget, tc.radius, sd).map_err(step_err(st))?);
                }
                _ => unreachable!("forms validated with the config"),
            }
        }
        let rows: Vec<Vec<String>> = sweep
            .iter()
            .map(|t| {
                vec![
                    t.tau.to_string(),
                    t.threshold.to_string(),
                    t.block_side.to_string(),
                    t.blocks.to_string(),
                    t.estimate.raw.to_string(),
                    t.estimate.se.to_string(),
                ]
            })
            .collect();
        let report = json!({
            "block_sweep": sweep,
            "forms": forms,
            "sum_gamma_e": sum_ge,
            "notes": notes,
        });
        let mut out = vec![self.json(st, "theta.json", &report)?];
        out.push(self.csv(st, "theta_tau.csv", &["tau", "threshold", "block_side", "blocks", "theta", "se"], &rows)?);
        out.extend(self.plots(st, &ReportSet { theta: Some((&sweep, &forms)), ..Default::default() })?);
        Ok(out)
    }

    fn frechet_step(&mut self) -> CliResult<Vec<String>> {
        let st = Step::Frechet;
        let fc = self.cfg.frechet.clone().unwrap_or_default();
        let alpha = self.model(st)?.alpha();
        let a_n = self.normalizer(st)?;
        let theta = fc.theta.or(self.theta_block).unwrap_or(1.0);
        let control = fc.control_theta.unwrap_or(theta / 2.0);
        let reals = self.reals(st)?;
        let fit = frechet_fit(reals, &self.lambda, a_n, alpha, theta, fc.level).map_err(step_err(st))?;
        let neg = frechet_fit(reals, &self.lambda, a_n, alpha, control, fc.level).map_err(step_err(st))?;
        let summary = |f: &rvfield::extremal::FrechetFit| {
            json!({ "theta": f.theta, "alpha": f.alpha, "ks": f.ks, "band": f.band, "n": f.n, "pass": f.pass })
        };
        let mut out = vec![self.json(
            st,
            "frechet.json",
            &json!({ "normalizer": a_n, "fit": summary(&fit), "control": summary(&neg) }),
        )?];
        let rows: Vec<Vec<String>> = fit.qq.iter().map(|(m, e)| vec![m.to_string(), e.to_string()]).collect();
        out.push(self.csv(st, "frechet_qq.csv", &["model_quantile", "empirical"], &rows)?);
        out.extend(self.plots(st, &ReportSet { frechet: Some(&fit), ..Default::default() })?);
        Ok(out)
    }
}

fn check_outputs(dir: &Path, m: &RunManifest) -> CliResult<()> {
    for rec in &m.steps {
        for f in &rec.outputs {
            let ok = std::fs::metadata(dir.join(f)).map(|md| md.len() > 0).unwrap_or(false);
            if !ok {
                return Err(CliError::step(rec.step.name(), format!("declared output {f} is missing or empty")));
            }
        }
    }
    Ok(())
}

/// Reads back a manifest, for tests and tooling.
pub fn read_manifest(dir: &Path) -> std::io::Result<RunManifest> {
    let text = std::fs::read_to_string(dir.join("manifest.json"))?;
    serde_json::from_str(&text).map_err(std::io::Error::other)
}

/// Output file names of a manifest in a stable order.
pub fn manifest_files(m: &RunManifest) -> BTreeMap<String, Step> {
    m.steps.iter().flat_map(|r| r.outputs.iter().map(move |f| (f.clone(), r.step))).collect()
}
