//! End-to-end runs of the `rvfield` binary.

use std::collections::BTreeMap;
use std::path::Path;
use std::process::{Command, Output};

fn rvfield(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_rvfield")).args(args).output().expect("binary runs")
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p.to_string_lossy().into_owned()
}

fn files(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    std::fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap())
        .map(|e| (e.file_name().to_string_lossy().into_owned(), std::fs::read(e.path()).unwrap()))
        .collect()
}

const SMALL_MM: &str = r#"
seed = 11
[lambda]
kind = "hyperrectangle"
n = [300]
[model]
model = "moving_maxima"
alpha = 1.0
kernel = [{ at = [0], weight = 1.0 }, { at = [1], weight = 1.0 }]
[simulate]
realizations = 60
[tailfield]
quantile = 0.98
oracle_budget = 2000
[timechange]
budget = 2000
[laplace]
budget = 2000
realizations = 40
[ac]
[theta]
budget = 2000
[frechet]
"#;

#[test]
fn census_on_point_list_writes_census_only() {
    let dir = tempfile::tempdir().unwrap();
    write(dir.path(), "lambda.txt", "k=2\n1 1\n1 2\n2 1\n2 2\n# comment\n3 3\n");
    let cfg = write(dir.path(), "c.toml", "[lambda]\nkind = \"file\"\npath = \"lambda.txt\"\n[census]\np = [1, 2]\n");
    let out = dir.path().join("out");
    let o = rvfield(&["census", "--config", &cfg, "--out", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let names: Vec<String> = files(&out).into_keys().collect();
    assert_eq!(names, ["census.csv", "census.json", "manifest.json"]);
    let census: serde_json::Value = serde_json::from_slice(&std::fs::read(out.join("census.json")).unwrap()).unwrap();
    assert_eq!(census["lambda"]["size"], 5);
    let total: u64 = census["upper"][0]["shapes"].as_array().unwrap().iter().map(|s| s["count"].as_u64().unwrap()).sum();
    assert_eq!(total, 5);
}

#[test]
fn config_errors_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "bad.toml", "[lambda]\nkind = \"hyperrectangle\"\nn = [5]\nsides = 3\n");
    let o = rvfield(&["run", "--config", &cfg]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("config"));
    assert_eq!(rvfield(&["run"]).status.code(), Some(2));
    let missing = dir.path().join("none.toml");
    assert_eq!(rvfield(&["census", "--config", missing.to_str().unwrap()]).status.code(), Some(2));
}

#[test]
fn step_failures_exit_3_and_name_the_step() {
    let dir = tempfile::tempdir().unwrap();
    // the empirical Laplace functional needs at least 30 realizations
    let cfg = write(
        dir.path(),
        "c.toml",
        "[lambda]\nkind = \"hyperrectangle\"\nn = [50]\n[model]\nmodel = \"iid_frechet\"\nalpha = 1.0\n[laplace]\nrealizations = 5\nbudget = 1000\n",
    );
    let out = dir.path().join("out");
    let o = rvfield(&["laplace", "--config", &cfg, "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&o.stderr).contains("`laplace`"));
}

#[test]
fn reruns_are_byte_identical_across_thread_counts() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "c.toml", SMALL_MM);
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    for (out, t) in [(&a, "1"), (&b, "3")] {
        let o = rvfield(&["run", "--config", &cfg, "--out", out.to_str().unwrap(), "--threads", t]);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    }
    let (fa, fb) = (files(&a), files(&b));
    assert_eq!(fa.keys().collect::<Vec<_>>(), fb.keys().collect::<Vec<_>>());
    for (name, bytes) in &fa {
        if name != "manifest.json" {
            assert!(bytes == &fb[name], "{name} differs");
        }
    }
    let strip = |b: &[u8]| {
        let mut v: serde_json::Value = serde_json::from_slice(b).unwrap();
        v.as_object_mut().unwrap().remove("wall_clock_seconds");
        v
    };
    assert_eq!(strip(&fa["manifest.json"]), strip(&fb["manifest.json"]));
    // --seed changes results
    let c = dir.path().join("c");
    assert!(rvfield(&["simulate", "--config", &cfg, "--out", c.to_str().unwrap(), "--seed", "12"]).status.success());
    assert_ne!(files(&c)["simulate.json"], fa["simulate.json"]);
}
