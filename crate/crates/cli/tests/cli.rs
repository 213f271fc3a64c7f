use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

const MU_STAR: &str = "\
prime 2
atom b=0 m=1 w=1/3
atom b=1 m=1 w=1/3
atom b=0 m=-1 w=1/6
atom b=1 m=-1 w=1/6
";

fn solenoid(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_solenoid"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn config(dir: &TempDir, name: &str, text: &str) -> PathBuf {
    let path = dir.path().join(name);
    fs::write(&path, text).unwrap();
    path
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn drift_of_the_reference_measure() {
    let dir = TempDir::new().unwrap();
    let cfg = config(&dir, "mu.cfg", &format!("{MU_STAR}seed 1\n"));
    let out = solenoid(&["drift", "--config", s(&cfg)]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let v: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["drifts"][0]["exact_coeff"], "-1/3");
    assert_eq!(v["drifts"][0]["place"], "2");
    assert_eq!(v["drifts"][1]["exact_coeff"], "1/3");
}

#[test]
fn missing_seed_is_a_config_error() {
    let dir = TempDir::new().unwrap();
    let cfg = config(&dir, "mu.cfg", MU_STAR);
    let out = solenoid(&["sample-boundary", "--config", s(&cfg), "--n", "3"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(out.stdout.is_empty());
}

#[test]
fn weights_must_sum_to_one() {
    let dir = TempDir::new().unwrap();
    let cfg = config(&dir, "bad.cfg", "prime 2\nseed 1\natom b=0 m=1 w=0.3\natom b=1 m=-1 w=0.6\n");
    let out = solenoid(&["drift", "--config", s(&cfg)]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("9/10"));
}

#[test]
fn one_sided_measures_are_rejected() {
    let dir = TempDir::new().unwrap();
    let cfg = config(&dir, "up.cfg", "prime 3\nseed 1\natom b=1 m=1 w=1\n");
    assert_eq!(solenoid(&["walk", "--config", s(&cfg)]).status.code(), Some(2));
}

#[test]
fn step_budget_exhaustion_is_numerical() {
    let dir = TempDir::new().unwrap();
    let cfg = config(&dir, "mu.cfg", MU_STAR);
    let out = solenoid(&[
        "sample-boundary", "--config", s(&cfg), "--seed", "9", "--n", "4", "--digits", "40",
        "--max-steps", "5",
    ]);
    assert_eq!(out.status.code(), Some(3), "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn boundary_samples_are_certified() {
    let dir = TempDir::new().unwrap();
    let cfg = config(&dir, "mu.cfg", MU_STAR);
    let out = solenoid(&["sample-boundary", "--config", s(&cfg), "--seed", "4", "--n", "50"]);
    assert!(out.status.success());
    let mut rdr = csv::Reader::from_reader(out.stdout.as_slice());
    assert_eq!(
        rdr.headers().unwrap(),
        vec!["seed", "steps_used", "v", "digits", "certified_digits"]
    );
    let rows: Vec<csv::StringRecord> = rdr.records().map(Result::unwrap).collect();
    assert_eq!(rows.len(), 50);
    for r in rows {
        let v: i64 = r[2].parse().unwrap();
        let certified: i64 = r[4].parse().unwrap();
        // digits are certified up to absolute precision p^8
        assert_eq!(v + certified, 8);
        assert_eq!(r[3].split(',').count() as i64, certified);
    }
}

#[test]
fn project_lands_in_the_fundamental_domain() {
    let dir = TempDir::new().unwrap();
    let cfg = config(&dir, "mu.cfg", MU_STAR);
    let out = solenoid(&[
        "project", "--config", s(&cfg), "--seed", "1", "--b", "5/2", "--m", "2", "--x", "3/4",
    ]);
    assert!(out.status.success());
    let v: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["result"]["point"]["x_inf_exact"], "1/2");
    assert_eq!(v["result"]["gamma"][0], "2");
    assert_eq!(v["result"]["gamma"][1], 2);
}

#[test]
fn example_table_is_reproducible() {
    let dir = TempDir::new().unwrap();
    let cfg = config(&dir, "t.cfg", &format!("{MU_STAR}seed 11\nb_grid 1/2 3/2\nm_range 1 3\n"));
    let run = |workers: &str, name: &str| {
        let out = dir.path().join(name);
        let o = solenoid(&[
            "example-table", "--config", s(&cfg), "--n", "4000", "--workers", workers, "--out", s(&out),
        ]);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
        let manifest = fs::read_to_string(dir.path().join(format!("{name}.manifest.json"))).unwrap();
        (fs::read(out).unwrap(), manifest)
    };
    let (a, ma) = run("1", "a.csv");
    let (b, _) = run("1", "b.csv");
    let (c, _) = run("4", "c.csv");
    let (d, md) = run("0", "d.csv");
    assert_eq!(a, b);
    assert_eq!(a, c);
    assert_eq!(a, d);
    let text = String::from_utf8(a).unwrap();
    assert!(text.starts_with("b,m,estimate,stderr,lower_bound,upper_bound,pass\n"));
    assert_eq!(text.lines().count(), 7);
    let (ma, md): (Value, Value) = (serde_json::from_str(&ma).unwrap(), serde_json::from_str(&md).unwrap());
    assert_eq!(ma["output_sha256"], md["output_sha256"]);
    assert_eq!(ma["seed"], 11);
    assert!(ma.get("workers").is_none());
}

#[test]
fn verify_all_is_identical_across_workers() {
    let dir = TempDir::new().unwrap();
    let cfg = config(&dir, "mu.cfg", MU_STAR);
    let run = |workers: &str| {
        let o = solenoid(&["verify-all", "--config", s(&cfg), "--seed", "3", "--quick", "--workers", workers]);
        assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
        o.stdout
    };
    let a = run("1");
    assert_eq!(a, run("4"));
    let v: Value = serde_json::from_slice(&a).unwrap();
    assert_eq!(v["pass"], true);
}
