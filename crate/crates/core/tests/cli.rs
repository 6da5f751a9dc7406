use std::path::{Path, PathBuf};
use std::process::Command;

use cosra::cli::run_with;
use tempfile::TempDir;

const LESLIE: &str = r#"{"leslie": {"alphas": [[0.9,0.6],[0.6,0.9],[0.7,0.7]],
    "betas": [[0.2,1.4,1.4],[0.2,1.7,1],[0.2,1,1.7]]}}"#;

fn write(dir: &Path, name: &str, text: &str) -> PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p
}

fn run(args: &[&str]) -> (i32, String, String) {
    let mut out = Vec::new();
    let mut err = Vec::new();
    let argv = std::iter::once("cosra").chain(args.iter().copied());
    let code = run_with(argv, &mut out, &mut err);
    (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
}

fn json(s: &str) -> serde_json::Value {
    serde_json::from_str(s).unwrap()
}

#[test]
fn solve_positive_singleton_contains_perron_root() {
    let dir = TempDir::new().unwrap();
    let game = write(dir.path(), "g.json", r#"{"A": [[[1,2,1],[2,1,1],[1,1,3]]], "B": [[[1,0,0],[0,1,0],[0,0,1]]]}"#);
    let out = dir.path().join("result.json");
    let eig = dir.path().join("eig.csv");
    let (code, _, err) = run(&[
        "solve",
        game.to_str().unwrap(),
        "--resolution",
        "30",
        "--out",
        out.to_str().unwrap(),
        "--eigenfunction",
        eig.to_str().unwrap(),
    ]);
    assert_eq!(code, 0, "{err}");
    let r = json(&std::fs::read_to_string(&out).unwrap());
    // characteristic polynomial of [[1,2,1],[2,1,1],[1,1,3]]: t³ − 5t² + t + 7, Perron root 3 + √2
    let mut t: f64 = 4.0;
    for _ in 0..100 {
        t -= (t * t * t - 5.0 * t * t + t + 7.0) / (3.0 * t * t - 10.0 * t + 1.0);
    }
    assert!((t - 3.0 - 2f64.sqrt()).abs() < 1e-12);
    let lo = r["interval"][0].as_f64().unwrap();
    let hi = r["interval"][1].as_f64().unwrap();
    assert!(lo <= t.ln() && t.ln() <= hi, "{} not in [{lo}, {hi}]", t.ln());
    assert_eq!(r["grid_points"], 496);
    for key in ["lambda", "iterations", "h", "residual", "wall_time_s"] {
        assert!(!r[key].is_null(), "{key}");
    }
    let csv = std::fs::read_to_string(&eig).unwrap();
    assert!(csv.contains("# base_index="));
    assert!(csv.lines().any(|l| l == "x1,x2,x3,v"));
    assert_eq!(csv.lines().filter(|l| !l.starts_with('#')).count(), 497);

    let lambda = r["lambda"].as_f64().unwrap().to_string();
    let (code, outp, err) = run(&["certify", game.to_str().unwrap(), eig.to_str().unwrap(), "--lambda", &lambda]);
    assert_eq!(code, 0, "{err}");
    let c = json(&outp);
    assert!(c["lower"].as_f64().unwrap() <= t.ln() + 1e-9);
}

#[test]
fn trajectory_has_turnpike_tail() {
    let dir = TempDir::new().unwrap();
    let game = write(dir.path(), "leslie.json", LESLIE);
    let (code, out, err) = run(&["trajectory", game.to_str().unwrap(), "--start", "0.3333,0.3333,0.3334", "--steps", "30"]);
    assert_eq!(code, 0, "{err}");
    let t = json(&out);
    let moves = t["moves"].as_str().unwrap();
    assert!(moves.starts_with("α3β1"));
    assert!(moves.ends_with(&"α2β2".repeat(10)), "{moves}");
    assert_eq!(t["actions"][0], serde_json::json!(["α3", "β1"]));
    assert_eq!(t["states"].as_array().unwrap().len(), 31);
    assert_eq!(t["cycle"]["period"], 1);
    let lp: Vec<f64> = t["limit_point"].as_array().unwrap().iter().map(|x| x.as_f64().unwrap()).collect();
    for (a, b) in lp.iter().zip([0.5619, 0.2590, 0.1790]) {
        assert!((a - b).abs() < 1e-3);
    }
}

#[test]
fn bench_table_shape() {
    let (code, out, _) = run(&["bench", "--resolutions", "40,50"]);
    assert_eq!(code, 0);
    let lines: Vec<&str> = out.lines().collect();
    assert_eq!(lines.len(), 3);
    assert!(lines[0].contains("points") && lines[0].contains("iterations"));
    assert!(lines[1].trim_start().starts_with("861 "));
    assert!(lines[2].trim_start().starts_with("1326 "));
}

#[test]
fn distance_and_perturb() {
    let dir = TempDir::new().unwrap();
    let a = write(dir.path(), "a.json", r#"{"matrices": [[[1,2],[0,1]]]}"#);
    let b = write(dir.path(), "b.json", r#"{"matrices": [[[2,2],[0,1]]]}"#);
    let (code, out, _) = run(&["distance", a.to_str().unwrap(), b.to_str().unwrap()]);
    assert_eq!(code, 0);
    assert!((json(&out)["hausdorff_thompson"].as_f64().unwrap() - 2f64.ln()).abs() < 1e-12);
    let c = write(dir.path(), "c.json", r#"{"matrices": [[[1,0],[2,1]]]}"#);
    let (code, _, err) = run(&["distance", a.to_str().unwrap(), c.to_str().unwrap()]);
    assert_eq!(code, 2, "{err}");

    let game = write(dir.path(), "leslie.json", LESLIE);
    let args = ["perturb", game.to_str().unwrap(), "--epsilon", "0.05", "--trials", "2", "--seed", "17", "--resolution", "30", "--scale", "1.5"];
    let (code, out, err) = run(&args);
    assert_eq!(code, 0, "{err}");
    let r = json(&out);
    assert_eq!(r["lipschitz"]["seed"], 17);
    assert_eq!(r["lipschitz"]["trials"].as_array().unwrap().len(), 2);
    assert_eq!(r["lipschitz"]["all_within_bound"], true);
    assert_eq!(r["scaling"]["tight"], true);
    assert_eq!(run(&args).1, out);
}

#[test]
fn exit_codes() {
    let dir = TempDir::new().unwrap();
    let bad = write(dir.path(), "bad.json", "{\n  \"A\": [[[1, 2]\n");
    let (code, _, err) = run(&["solve", bad.to_str().unwrap()]);
    assert_eq!(code, 2);
    assert!(err.contains("line 3"), "{err}");

    let invalid = write(dir.path(), "inv.json", r#"{"A": [[[1,1],[1,1]]], "B": [[[1,1],[0,1]], [[1,1],[1,1]]]}"#);
    let (code, _, err) = run(&["solve", invalid.to_str().unwrap()]);
    assert_eq!(code, 2, "{err}");

    let game = write(dir.path(), "leslie.json", LESLIE);
    let (code, _, err) = run(&["solve", game.to_str().unwrap(), "--resolution", "6"]);
    assert_eq!(code, 3, "{err}");

    assert_eq!(run(&["solve", "/nonexistent.json"]).0, 2);
    assert_eq!(run(&["frobnicate"]).0, 2);
    assert_eq!(run(&["--help"]).0, 0);
}

fn strip_wall_time(s: &str) -> serde_json::Value {
    let mut v = json(s);
    v.as_object_mut().unwrap().remove("wall_time_s");
    v
}

#[test]
fn output_is_deterministic_across_thread_counts() {
    let dir = TempDir::new().unwrap();
    let game = write(dir.path(), "leslie.json", LESLIE);
    let mut outputs = Vec::new();
    for threads in ["1", "3", "1"] {
        let out = Command::new(env!("CARGO_BIN_EXE_cosra"))
            .args(["solve", game.to_str().unwrap(), "--resolution", "40"])
            .env("COSRA_THREADS", threads)
            .output()
            .unwrap();
        assert!(out.status.success());
        outputs.push(String::from_utf8(out.stdout).unwrap());
    }
    let first = strip_wall_time(&outputs[0]);
    for o in &outputs[1..] {
        assert_eq!(strip_wall_time(o), first);
    }
    // byte-identical apart from the timing line
    let drop_time = |s: &str| s.lines().filter(|l| !l.contains("wall_time_s")).collect::<Vec<_>>().join("\n");
    assert_eq!(drop_time(&outputs[0]), drop_time(&outputs[1]));
}
