use std::f64::consts::PI;
use std::path::PathBuf;
use std::process::{Command, Output};

fn write_temp(name: &str, contents: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("qgraph-cli-tests-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join(name);
    std::fs::write(&path, contents).unwrap();
    path
}

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qgraph")).args(args).output().expect("binary runs")
}

fn interval() -> String {
    write_temp("interval.json", r#"{"interval": 1.0}"#).display().to_string()
}

fn json(out: &Output) -> serde_json::Value {
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).expect("valid JSON on stdout")
}

#[test]
fn classify_reports_the_class() {
    let g = interval();
    let v = json(&run(&["classify", "--graph", &g, "--bc", "intermediate"]));
    assert_eq!(v["class"]["value"], "regular_non_quasi_sectorial");
    assert_eq!(v["generator"]["value"]["generates_c0_semigroup"], false);
}

#[test]
fn spectrum_csv_lists_dirichlet_eigenvalues() {
    let g = interval();
    let out = run(&["spectrum", "--graph", &g, "--bc", "dirichlet", "--region", "0.1", "10", "-1", "1", "--format", "csv"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("re_k,im_k,re_lambda,im_lambda,multiplicity"));
    let ks: Vec<f64> = lines.map(|l| l.split(',').next().unwrap().parse().unwrap()).collect();
    assert_eq!(ks.len(), 3);
    for (n, k) in ks.iter().enumerate() {
        assert!((k - (n + 1) as f64 * PI).abs() < 1e-8);
    }
}

#[test]
fn problem_spec_file_with_explicit_matrices() {
    let spec = write_temp(
        "spec.json",
        r#"{
            "graph": {"interval": 1.0},
            "bc": {"A": [[1, 0], [0, 1]], "B": [[0, 0], [-1, 0]]},
            "options": {"region": {"re_min": 0.5, "re_max": 10.0, "im_min": -5.0, "im_max": 5.0}}
        }"#,
    );
    let v = json(&run(&["spectrum", "--spec", spec.to_str().unwrap()]));
    let text = v.to_string();
    // first root of sin k = k
    assert!(text.contains("7.4976762"), "{text}");
}

#[test]
fn writes_to_out_file() {
    let g = interval();
    let out_path = std::env::temp_dir().join(format!("qgraph-cli-out-{}.json", std::process::id()));
    let out = run(&["enclosure", "--graph", &g, "--bc", "dirichlet", "--out", out_path.to_str().unwrap()]);
    assert!(out.status.success());
    let v: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&out_path).unwrap()).unwrap();
    assert_eq!(v["kind"], "parabola");
    std::fs::remove_file(out_path).ok();
}

#[test]
fn similarity_on_a_star() {
    let g = write_temp("star.json", r#"{"star": 3}"#);
    let v = json(&run(&["similarity", "--graph", g.to_str().unwrap(), "--bc", "delta:1,1"]));
    assert_eq!(v["similar"], true);
    let v = json(&run(&["similarity", "--graph", g.to_str().unwrap(), "--bc", "delta:-1,1"]));
    assert_eq!(v["similar"], false);
}

#[test]
fn evolve_csv_decays() {
    let g = interval();
    let out = run(&["evolve", "--graph", &g, "--bc", "dirichlet", "--dt", "0.001", "--steps", "10", "--format", "csv"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    let norms: Vec<f64> = text.lines().skip(1).map(|l| l.split(',').nth(1).unwrap().parse().unwrap()).collect();
    assert_eq!(norms.len(), 11);
    assert!(norms.windows(2).all(|w| w[1] < w[0]));
}

#[test]
fn exit_codes() {
    let g = interval();
    let truncated = write_temp("bad.json", r#"{"interval": "#);
    let cases: [(&[&str], i32); 5] = [
        (&["classify", "--graph", truncated.to_str().unwrap(), "--bc", "dirichlet"], 2),
        (&["classify", "--graph", &g, "--bc", "nonsense"], 2),
        (&["spectrum", "--graph", &g, "--bc", "totally_degenerate", "--region", "0.1", "10", "-1", "1"], 3),
        (&["similarity", "--graph", &g, "--bc", "dirichlet"], 5),
        (&["greens", "--graph", &g, "--bc", "dirichlet", "--k", "3.141592653589793", "0"], 6),
    ];
    for (args, code) in cases {
        let out = run(args);
        assert_eq!(out.status.code(), Some(code), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
        assert!(!out.stderr.is_empty());
    }
}
