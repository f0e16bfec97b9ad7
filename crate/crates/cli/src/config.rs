//! Experiment configuration: one TOML file with a section per step.
//!
//! Precedence: command-line flags (`--seed`, `--out`, `--threads`) override the
//! matching top-level keys, which override the built-in defaults.

use std::path::{Path, PathBuf};

use rvfield::lattice::Point;
use rvfield::models::FieldModel;
use rvfield::spectral::TestFn;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{CliError, CliResult};

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default)]
    pub seed: u64,
    /// Output directory; relative paths resolve against the working directory.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub threads: Option<usize>,
    pub lambda: LambdaSpec,
    #[serde(default)]
    pub order: OrderSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub model: Option<FieldModel>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub census: Option<CensusStep>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub simulate: Option<SimulateStep>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tailfield: Option<TailfieldStep>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub timechange: Option<TimechangeStep>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub laplace: Option<LaplaceStep>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub theta: Option<ThetaStep>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ac: Option<AcStep>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub frechet: Option<FrechetStep>,
}

/// Where Λ comes from.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum LambdaSpec {
    /// Point-list file (`k=<dim>` header, one point per line).
    File { path: PathBuf },
    /// ∏ [1, n_i].
    Hyperrectangle { n: Vec<i64> },
    /// (⋃ (offset + lattice) ∪ isolated) ∩ [lo, hi].
    LatticeUnion {
        components: Vec<ComponentSpec>,
        #[serde(default)]
        isolated: Vec<Vec<i64>>,
        lo: Vec<i64>,
        hi: Vec<i64>,
    },
    /// Stations C observed at times 1..=m (time is the first coordinate).
    Spacetime {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        stations: Option<Vec<Vec<i64>>>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        stations_file: Option<PathBuf>,
        m: i64,
    },
    /// One of the built-in synthetic families at size n.
    Family { name: String, n: i64 },
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ComponentSpec {
    pub generators: Vec<Vec<i64>>,
    pub offset: Vec<i64>,
}

/// Invariant order: lexicographic with coordinate 0 most significant, or a
/// permutation giving coordinates from most to least significant.
#[derive(Clone, Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OrderSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub priority: Option<Vec<usize>>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CensusStep {
    /// Radii for the census sweep.
    #[serde(default = "default_p_list")]
    pub p: Vec<i64>,
    /// Sizes for the weight sweep (the `n`/`m` parameter of the Λ generator).
    #[serde(default)]
    pub n: Vec<i64>,
    /// Radius for the structural analysis; defaults to the largest of `p`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub analysis_p: Option<i64>,
}

impl Default for CensusStep {
    fn default() -> Self {
        CensusStep { p: default_p_list(), n: Vec::new(), analysis_p: None }
    }
}

fn default_p_list() -> Vec<i64> {
    vec![1, 2, 4]
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulateStep {
    #[serde(default = "default_realizations")]
    pub realizations: usize,
    /// Number of realizations written out as CSV.
    #[serde(default)]
    pub write_fields: usize,
}

impl Default for SimulateStep {
    fn default() -> Self {
        SimulateStep { realizations: default_realizations(), write_fields: 0 }
    }
}

fn default_realizations() -> usize {
    200
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TailfieldStep {
    /// Threshold as an empirical marginal quantile.
    #[serde(default = "default_quantile")]
    pub quantile: f64,
    /// Offsets |s|∞ ≤ radius are recorded.
    #[serde(default = "default_tail_radius")]
    pub radius: i64,
    #[serde(default = "default_y_max")]
    pub y_max: f64,
    /// Oracle draws for the total-variation comparison.
    #[serde(default = "default_budget")]
    pub oracle_budget: usize,
}

impl Default for TailfieldStep {
    fn default() -> Self {
        TailfieldStep {
            quantile: default_quantile(),
            radius: default_tail_radius(),
            y_max: default_y_max(),
            oracle_budget: default_budget(),
        }
    }
}

fn default_quantile() -> f64 {
    0.999
}
fn default_tail_radius() -> i64 {
    2
}
fn default_y_max() -> f64 {
    10.0
}
fn default_budget() -> usize {
    100_000
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TimechangeStep {
    #[serde(default = "default_budget")]
    pub budget: usize,
    /// (s, t) pairs; defaults to four pairs built from the unit vectors.
    #[serde(default)]
    pub pairs: Vec<(Vec<i64>, Vec<i64>)>,
    /// Test functions; defaults to three bumps.
    #[serde(default)]
    pub g: Vec<TestFn>,
}

impl Default for TimechangeStep {
    fn default() -> Self {
        TimechangeStep { budget: default_budget(), pairs: Vec::new(), g: Vec::new() }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LaplaceStep {
    #[serde(default = "default_budget")]
    pub budget: usize,
    #[serde(default = "default_laplace_radius")]
    pub radius: i64,
    /// Generator sizes for the convergence sweep; empty means Λ as configured.
    #[serde(default)]
    pub n: Vec<i64>,
    /// Realizations per size.
    #[serde(default = "default_realizations")]
    pub realizations: usize,
    /// Test functions; defaults to the 3×3 bump grid.
    #[serde(default)]
    pub g: Vec<TestFn>,
    /// Largest tolerated probability mass outside the truncation radius.
    #[serde(default = "default_residual_bound")]
    pub residual_bound: f64,
}

fn default_residual_bound() -> f64 {
    0.05
}

impl Default for LaplaceStep {
    fn default() -> Self {
        LaplaceStep {
            budget: default_budget(),
            radius: default_laplace_radius(),
            n: Vec::new(),
            realizations: default_realizations(),
            g: Vec::new(),
            residual_bound: default_residual_bound(),
        }
    }
}

fn default_laplace_radius() -> i64 {
    8
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ThetaStep {
    /// Expected exceedance counts |Λ|·P(|X_0| > u) for the threshold sweep.
    #[serde(default = "default_tau")]
    pub tau: Vec<f64>,
    /// Block side; defaults to ⌊√n⌋.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub block_side: Option<i64>,
    /// Spectral representations: "u_index", "lattice", "index4".
    #[serde(default = "default_forms")]
    pub forms: Vec<String>,
    #[serde(default = "default_budget")]
    pub budget: usize,
    #[serde(default = "default_theta_radius")]
    pub radius: i64,
}

impl Default for ThetaStep {
    fn default() -> Self {
        ThetaStep {
            tau: default_tau(),
            block_side: None,
            forms: default_forms(),
            budget: default_budget(),
            radius: default_theta_radius(),
        }
    }
}

fn default_tau() -> Vec<f64> {
    vec![1.0, 2.0, 4.0]
}
fn default_forms() -> Vec<String> {
    vec!["u_index".into(), "lattice".into(), "index4".into()]
}
fn default_theta_radius() -> i64 {
    10
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AcStep {
    #[serde(default = "default_l_grid")]
    pub l: Vec<i64>,
    #[serde(default = "default_epsilon")]
    pub epsilon: f64,
    /// Level multiplier: conditioning on |X| > x·a_n.
    #[serde(default = "one")]
    pub x: f64,
    /// Use the pattern variant with this E instead of the origin.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pattern: Option<Vec<Vec<i64>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub block_side: Option<i64>,
}

impl Default for AcStep {
    fn default() -> Self {
        AcStep { l: default_l_grid(), epsilon: default_epsilon(), x: 1.0, pattern: None, block_side: None }
    }
}

fn default_l_grid() -> Vec<i64> {
    vec![0, 1, 2, 4, 8]
}
fn default_epsilon() -> f64 {
    0.05
}
fn one() -> f64 {
    1.0
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FrechetStep {
    /// θ to test; defaults to the block estimate at the first τ, or 1.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub theta: Option<f64>,
    /// Negative-control θ; defaults to θ/2.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub control_theta: Option<f64>,
    #[serde(default = "default_level")]
    pub level: f64,
}

impl Default for FrechetStep {
    fn default() -> Self {
        FrechetStep { theta: None, control_theta: None, level: default_level() }
    }
}

fn default_level() -> f64 {
    0.05
}

/// Reads and validates a config file. Unknown keys anywhere in the tree are rejected.
pub fn load(path: &Path) -> CliResult<ExperimentConfig> {
    let text =
        std::fs::read_to_string(path).map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
    let mut cfg = parse(&text)?;
    // relative input files resolve against the config's directory
    let base = path.parent().unwrap_or(Path::new("."));
    match &mut cfg.lambda {
        LambdaSpec::File { path } => *path = base.join(&*path),
        LambdaSpec::Spacetime { stations_file: Some(p), .. } => *p = base.join(&*p),
        _ => {}
    }
    Ok(cfg)
}

pub fn parse(text: &str) -> CliResult<ExperimentConfig> {
    let raw: toml::Value = toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))?;
    let cfg: ExperimentConfig = raw.clone().try_into().map_err(|e: toml::de::Error| CliError::Config(e.to_string()))?;
    // sections that come from the library (the model) are checked by round trip
    let back = toml::Value::try_from(&cfg).map_err(|e| CliError::Config(e.to_string()))?;
    if let Some(k) = unknown_key(&raw, &back, "") {
        return Err(CliError::Config(format!("unknown key `{k}`")));
    }
    validate(&cfg)?;
    Ok(cfg)
}

fn unknown_key(raw: &toml::Value, known: &toml::Value, prefix: &str) -> Option<String> {
    match (raw, known) {
        (toml::Value::Table(a), toml::Value::Table(b)) => a.iter().find_map(|(k, v)| {
            let path = if prefix.is_empty() { k.clone() } else { format!("{prefix}.{k}") };
            match b.get(k) {
                None => Some(path),
                Some(w) => unknown_key(v, w, &path),
            }
        }),
        (toml::Value::Array(a), toml::Value::Array(b)) => {
            a.iter().zip(b).enumerate().find_map(|(i, (v, w))| unknown_key(v, w, &format!("{prefix}[{i}]")))
        }
        _ => None,
    }
}

fn validate(cfg: &ExperimentConfig) -> CliResult<()> {
    let bad = |m: String| Err(CliError::Config(m));
    if let Some(m) = &cfg.model {
        m.validate().map_err(|e| CliError::Config(e.to_string()))?;
    }
    if cfg.threads == Some(0) {
        return bad("threads must be at least 1".into());
    }
    if let Some(c) = &cfg.census {
        if c.p.is_empty() || c.p.iter().any(|p| *p < 1) {
            return bad("census.p must be a non-empty list of positive radii".into());
        }
    }
    if let Some(t) = &cfg.tailfield {
        if !(t.quantile > 0.0 && t.quantile < 1.0) {
            return bad("tailfield.quantile must lie in (0, 1)".into());
        }
    }
    if let Some(t) = &cfg.theta {
        if t.tau.is_empty() || t.tau.iter().any(|x| !(*x > 0.0)) {
            return bad("theta.tau must be a non-empty list of positive numbers".into());
        }
        for f in &t.forms {
            if !["u_index", "lattice", "index4"].contains(&f.as_str()) {
                return bad(format!("unknown theta form `{f}`"));
            }
        }
    }
    if let Some(a) = &cfg.ac {
        if a.l.is_empty() {
            return bad("ac.l must not be empty".into());
        }
    }
    if let LambdaSpec::Spacetime { stations, stations_file, .. } = &cfg.lambda {
        if stations.is_some() == stations_file.is_some() {
            return bad("spacetime needs exactly one of `stations` and `stations_file`".into());
        }
    }
    Ok(())
}

impl ExperimentConfig {
    /// sha256 of the canonical (sorted-key) JSON of everything that affects results;
    /// `out` and `threads` are excluded.
    pub fn hash(&self) -> String {
        let mut c = self.clone();
        c.out = None;
        c.threads = None;
        let v = serde_json::to_value(&c).expect("config serializes");
        hex::encode(Sha256::digest(canonical_json(&v).as_bytes()))
    }
}

/// JSON with object keys sorted at every level.
pub fn canonical_json(v: &serde_json::Value) -> String {
    match v {
        serde_json::Value::Object(m) => {
            let mut keys: Vec<&String> = m.keys().collect();
            keys.sort();
            let items: Vec<String> = keys
                .into_iter()
                .map(|k| format!("{}:{}", serde_json::to_string(k).expect("string"), canonical_json(&m[k])))
                .collect();
            format!("{{{}}}", items.join(","))
        }
        serde_json::Value::Array(a) => format!("[{}]", a.iter().map(canonical_json).collect::<Vec<_>>().join(",")),
        other => other.to_string(),
    }
}

pub fn point(v: &[i64]) -> CliResult<Point> {
    Point::new(v).map_err(|e| CliError::Config(e.to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"
seed = 7
[lambda]
kind = "hyperrectangle"
n = [50]
"#;

    #[test]
    fn minimal_config_parses_with_defaults() {
        let c = parse(MINIMAL).unwrap();
        assert_eq!(c.seed, 7);
        assert!(c.model.is_none() && c.census.is_none());
    }

    #[test]
    fn unknown_keys_are_rejected_everywhere() {
        assert!(parse(&format!("{MINIMAL}\nbogus = 1")).is_err());
        assert!(parse(&format!("{MINIMAL}\n[census]\np = [1]\nq = 2")).is_err());
        let model = "[model]\nmodel = \"iid_frechet\"\nalpha = 1.0\ncolour = \"red\"";
        assert!(matches!(parse(&format!("{MINIMAL}\n{model}")), Err(CliError::Config(m)) if m.contains("colour")));
        let ok = "[model]\nmodel = \"moving_maxima\"\nalpha = 1.0\nkernel = [{at = [0], weight = 1.0}]";
        assert!(parse(&format!("{MINIMAL}\n{ok}")).is_ok());
    }

    #[test]
    fn hash_ignores_key_order_and_output_settings() {
        let a = parse("seed = 1\nthreads = 2\n[lambda]\nkind = \"family\"\nname = \"square\"\nn = 10").unwrap();
        let b = parse("[lambda]\nn = 10\nname = \"square\"\nkind = \"family\"\n\nseed = 1").unwrap_err();
        // a top-level key after a table belongs to that table
        assert!(matches!(b, CliError::Config(_)));
        let b = parse("seed = 1\nout = \"x\"\n[lambda]\nn = 10\nname = \"square\"\nkind = \"family\"").unwrap();
        assert_eq!(a.hash(), b.hash());
        let c = parse("seed = 2\n[lambda]\nkind = \"family\"\nname = \"square\"\nn = 10").unwrap();
        assert_ne!(a.hash(), c.hash());
    }

    #[test]
    fn canonical_json_sorts_keys() {
        let v: serde_json::Value = serde_json::from_str(r#"{"b":1,"a":{"d":2,"c":[3]}}"#).unwrap();
        assert_eq!(canonical_json(&v), r#"{"a":{"c":[3],"d":2},"b":1}"#);
    }
}
