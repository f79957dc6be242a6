use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn flowlab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_flowlab"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

#[test]
fn sample_then_lambda() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("b.csv");
    let o = flowlab(&["fbm", "sample", "--hurst", "0.75", "--n", "256", "--seed", "7", "--out", p(&path)]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = fs::read_to_string(&path).unwrap();
    assert_eq!(text.lines().count(), 258);

    let o = flowlab(&["fraccalc", "lambda", "--alpha", "0.3", "--in", p(&path)]);
    assert!(o.status.success());
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    let lambda = v["lambda"].as_f64().unwrap();
    assert!(lambda > 0.0 && lambda <= v["upper_bound"].as_f64().unwrap());
    assert_eq!(v["mode"], "exact");

    let o = flowlab(&["fraccalc", "lambda", "--alpha", "0.3", "--decimated", "--in", p(&path)]);
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert!(v["lambda"].as_f64().unwrap() <= lambda);
}

#[test]
fn sampling_is_reproducible_and_multicomponent() {
    let a = flowlab(&["fbm", "sample", "--hurst", "0.6", "--n", "64", "--m", "3", "--seed", "1"]);
    let b = flowlab(&["fbm", "sample", "--hurst", "0.6", "--n", "64", "--m", "3", "--seed", "1"]);
    assert_eq!(a.stdout, b.stdout);
    let header = stdout(&a).lines().next().unwrap().to_string();
    assert_eq!(header.split(',').count(), 4);
}

#[test]
fn young_integrals_and_bound() {
    let dir = tempfile::tempdir().unwrap();
    let f = dir.path().join("f.csv");
    let g = dir.path().join("g.csv");
    let grid = |func: fn(f64) -> f64| {
        let mut s = String::from("t,x1\n");
        for k in 0..=512 {
            let t = k as f64 / 512.0;
            s.push_str(&format!("{t:e},{:e}\n", func(t)));
        }
        s
    };
    fs::write(&f, grid(|_| 1.0)).unwrap();
    fs::write(&g, grid(|t| t * t)).unwrap();
    for method in ["rs", "zahle"] {
        let o = flowlab(&["young", "integrate", "--f", p(&f), "--g", p(&g), "--method", method]);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
        let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
        assert!((v["value"][0].as_f64().unwrap() - 1.0).abs() < 1e-3, "{method}");
    }
    let o = flowlab(&["young", "check-bound", "--alpha", "0.3", "--f", p(&f), "--g", p(&g)]);
    assert!(o.status.success());
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["holds"], true);
    assert!(v["lhs"].as_f64().unwrap() <= v["rhs"].as_f64().unwrap());
}

#[test]
fn geometric_solve_tracks_the_closed_form() {
    let dir = tempfile::tempdir().unwrap();
    let b = dir.path().join("b.csv");
    let x = dir.path().join("x.csv");
    flowlab(&["fbm", "sample", "--hurst", "0.75", "--n", "1024", "--seed", "7", "--out", p(&b)]);
    let o = flowlab(&[
        "sde", "solve", "--coeffs", "builtin:geometric", "--sigma0", "0.5", "--x0", "1.0", "--hurst", "0.75",
        "--n", "1024", "--seed", "7", "--out", p(&x),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let last = |path: &Path| -> f64 {
        let text = fs::read_to_string(path).unwrap();
        text.lines().last().unwrap().split(',').nth(1).unwrap().parse().unwrap()
    };
    let exact = (0.5 * last(&b)).exp();
    assert!((last(&x) - exact).abs() < 0.05 * exact);
}

#[test]
fn experiment_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("exp.json");
    let out = dir.path().join("out");
    fs::write(
        &cfg,
        r#"{"kind": "inverse", "hurst": 0.75, "fine_n": 256, "ladder": [64, 128, 256],
            "seeds": {"start": 0, "count": 4}, "coefficients": "additive:1", "probes": ["identity"]}"#,
    )
    .unwrap();
    let o = flowlab(&["run", "--config", p(&cfg), "--out", p(&out)]);
    assert!(o.status.success(), "{}{}", stdout(&o), String::from_utf8_lossy(&o.stderr));
    assert!(stdout(&o).contains("PASS x_after_y-exact"));

    let o = flowlab(&["verify", "--result", p(&out)]);
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));

    let o = flowlab(&["report", "--result", p(&out), "--format", "jsonl"]);
    assert!(o.status.success());
    assert!(stdout(&o).lines().all(|l| serde_json::from_str::<serde_json::Value>(l).is_ok()));

    let summary = out.join("summary.json");
    let text = fs::read_to_string(&summary).unwrap().replace("\"passed\": true", "\"passed\": false");
    fs::write(&summary, text).unwrap();
    let o = flowlab(&["verify", "--result", p(&out)]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn failing_criteria_exit_with_one() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("exp.json");
    // no refinement reaches a thousandfold decay per doubling
    fs::write(
        &cfg,
        r#"{"kind": "flow", "hurst": 0.75, "fine_n": 256, "ladder": [64, 128],
            "seeds": [0], "coefficients": "geometric:0.5", "tolerances": {"decay_ratio": 1000.0}}"#,
    )
    .unwrap();
    let o = flowlab(&["run", "--config", p(&cfg)]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stdout(&o).contains("FAIL forward-decay"));
}

#[test]
fn errors_exit_with_two() {
    let o = flowlab(&["run", "--config", "/nonexistent/exp.json"]);
    assert_eq!(o.status.code(), Some(2));
    let o = flowlab(&["fbm", "sample", "--hurst", "1.5", "--n", "16"]);
    assert_eq!(o.status.code(), Some(2));
    let o = flowlab(&["sde", "solve", "--coeffs", "cubic", "--hurst", "0.75", "--n", "16"]);
    assert_eq!(o.status.code(), Some(2));
    let o = flowlab(&["report", "--result", "/nonexistent", "--format", "xml"]);
    assert_eq!(o.status.code(), Some(2));
}
