use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn assortmax(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_assortmax")).args(args).output().expect("binary runs")
}

fn json(out: &Output) -> serde_json::Value {
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).unwrap()
}

/// Three items with prices (10, 8, 5), weights (0.2, 0.4, 0.5), v0 = 1, and
/// all seven non-empty subsets.
fn e1(dir: &Path) -> (String, String) {
    let inst = dir.join("e1.json");
    fs::write(&inst, r#"{"prices": [10, 8, 5], "weights": [0.2, 0.4, 0.5], "v0": 1.0}"#).unwrap();
    let sets = dir.join("e1_sets.txt");
    fs::write(&sets, "1\n2\n3\n1 2\n1 3\n2 3\n1 2 3\n").unwrap();
    (inst.display().to_string(), sets.display().to_string())
}

#[test]
fn exhaustive_on_all_subsets() {
    let dir = tempfile::tempdir().unwrap();
    let (inst, sets) = e1(dir.path());
    let v = json(&assortmax(&["solve", "--algo", "exhaustive", "--instance", &inst, "--sets", &sets]));
    assert!((v["revenue"].as_f64().unwrap() - 11.0 / 3.0).abs() < 1e-4);
    assert_eq!(v["item_ids"], serde_json::json!([1, 2, 3]));
}

#[test]
fn exact_within_tolerance() {
    let dir = tempfile::tempdir().unwrap();
    let (inst, sets) = e1(dir.path());
    let v = json(&assortmax(&["solve", "--algo", "exact", "--eps", "0.01", "--instance", &inst, "--sets", &sets]));
    assert!(v["revenue"].as_f64().unwrap() >= 11.0 / 3.0 - 0.01);
    assert_eq!(v["iterations"], 10);
}

#[test]
fn capacitated_two_items() {
    let dir = tempfile::tempdir().unwrap();
    let (inst, _) = e1(dir.path());
    let v = json(&assortmax(&["solve", "--algo", "capacitated", "--capacity", "2", "--instance", &inst]));
    assert!((v["revenue"].as_f64().unwrap() - 3.25).abs() < 1e-9);
}

#[test]
fn capacity_with_exact_is_an_error() {
    let dir = tempfile::tempdir().unwrap();
    let (inst, sets) = e1(dir.path());
    let out = assortmax(&["solve", "--algo", "exact", "--capacity", "2", "--instance", &inst, "--sets", &sets]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("--capacity"));
    assert!(!assortmax(&["solve", "--algo", "greedy", "--n", "5"]).status.success());
}

#[test]
fn generate_is_deterministic_and_reloadable() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    for d in [&a, &b] {
        let out = assortmax(&["generate", "--n", "3", "--num-sets", "7", "--seed", "1", "--out", d.to_str().unwrap()]);
        assert!(out.status.success());
    }
    for f in ["instance.json", "sets.txt"] {
        assert_eq!(fs::read(a.join(f)).unwrap(), fs::read(b.join(f)).unwrap());
    }
    assert_eq!(fs::read_to_string(a.join("sets.txt")).unwrap().lines().count(), 7);
    let inst = a.join("instance.json").display().to_string();
    let sets = a.join("sets.txt").display().to_string();
    let exhaustive = json(&assortmax(&["solve", "--algo", "exhaustive", "--instance", &inst, "--sets", &sets]));
    let brute = json(&assortmax(&["solve", "--algo", "brute_cap", "--capacity", "3", "--instance", &inst]));
    assert!((exhaustive["revenue"].as_f64().unwrap() - brute["revenue"].as_f64().unwrap()).abs() < 1e-9);
}

#[test]
fn too_many_sets_is_a_clean_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = assortmax(&["generate", "--n", "3", "--num-sets", "8", "--out", dir.path().to_str().unwrap()]);
    assert!(!out.status.success());
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.starts_with("error:") && err.contains("8 distinct"), "{err}");
}

#[test]
fn bench_single_run_csv() {
    let dir = tempfile::tempdir().unwrap();
    let out_path = dir.path().join("r.csv");
    let out = assortmax(&[
        "bench",
        "--algo",
        "exact,exhaustive",
        "--runs",
        "1",
        "--n",
        "20",
        "--num-sets",
        "100",
        "--out",
        out_path.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = fs::read_to_string(&out_path).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "run_id,algo,n,N,eps,iterations,wall_time_s,revenue,rel_error,overlap");
    assert_eq!(lines.len(), 1 + 2 + 2);
    let exhaustive_mean = lines.iter().find(|l| l.starts_with("mean,exhaustive")).unwrap();
    assert!(exhaustive_mean.ends_with(",0.0,1.0"), "{exhaustive_mean}");
}

#[test]
fn itemsets_with_prices() {
    let dir = tempfile::tempdir().unwrap();
    let sets = dir.path().join("mined.txt");
    fs::write(&sets, "10 20 30 #SUP: 5\n20 30 #SUP: 9\n10 40 50 60 #SUP: 2\n").unwrap();
    let prices = dir.path().join("prices.csv");
    fs::write(&prices, "id,price\n10,9.5\n20,3\n30,4\n40,1\n50,2\n60,8\n").unwrap();
    let v = json(&assortmax(&[
        "solve",
        "--algo",
        "exhaustive",
        "--itemsets",
        sets.to_str().unwrap(),
        "--prices",
        prices.to_str().unwrap(),
        "--min-card",
        "3",
    ]));
    assert_eq!(v["N"], 2);
    assert_eq!(v["n"], 6);
}
