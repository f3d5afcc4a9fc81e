//! Every JSON document the CLI emits validates against docs/qgraph.schema.json.

use std::path::PathBuf;
use std::process::Command;

use serde_json::{json, Value};

fn schema_for(def: &str) -> jsonschema::Validator {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../docs/qgraph.schema.json");
    let mut schema: Value = serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap();
    schema["$ref"] = json!(format!("#/$defs/{def}"));
    jsonschema::validator_for(&schema).expect("schema compiles")
}

fn check(def: &str, doc: &Value) {
    let v = schema_for(def);
    let errors: Vec<String> = v.iter_errors(doc).map(|e| format!("{} at {}", e, e.instance_path())).collect();
    assert!(errors.is_empty(), "{def}: {errors:#?}\n{doc:#}");
}

fn temp_file(name: &str, contents: &str) -> String {
    let dir = std::env::temp_dir().join(format!("qgraph-schema-tests-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join(name);
    std::fs::write(&path, contents).unwrap();
    path.display().to_string()
}

fn emit(args: &[&str]) -> Value {
    let out = Command::new(env!("CARGO_BIN_EXE_qgraph")).args(args).output().unwrap();
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).unwrap()
}

#[test]
fn reports_validate() {
    let interval = temp_file("interval.json", r#"{"interval": 1.0}"#);
    let star = temp_file("star.json", r#"{"star": 3}"#);
    let lasso = temp_file("lasso.json", r#"{"lasso": 1.0}"#);
    let cases: [(&str, &str); 7] = [
        (&interval, "dirichlet"),
        (&interval, "intermediate"),
        (&interval, "totally_degenerate"),
        (&star, "delta:-1,1"),
        (&star, "kirchhoff"),
        (&lasso, "delta:0.5,-0.5"),
        (&star, "neumann"),
    ];
    for (g, bc) in cases {
        check("report", &emit(&["classify", "--graph", g, "--bc", bc, "--region", "0.1", "8", "-2", "2"]));
    }
}

#[test]
fn command_outputs_validate() {
    let interval = temp_file("interval.json", r#"{"interval": 1.0}"#);
    let star = temp_file("star2.json", r#"{"star": 2}"#);
    check("spectral_report", &emit(&["spectrum", "--graph", &interval, "--bc", "intermediate", "--region", "0.5", "10", "-5", "5"]));
    let mut rep = emit(&["spectrum", "--graph", &star, "--bc", "delta:-2"]);
    check("spectral_report", &rep);
    // complex numbers as [re, im] pairs are rejected
    rep["points"][0]["k"] = json!([0.0, 1.0]);
    assert!(!schema_for("spectral_report").is_valid(&rep));
    check("enclosure", &emit(&["enclosure", "--graph", &interval, "--bc", "dirichlet"]));
    check("enclosure", &emit(&["enclosure", "--graph", &interval, "--bc", "intermediate"]));
    check("similarity_output", &emit(&["similarity", "--graph", &star, "--bc", "delta:-1,1"]));
    check("similarity_output", &emit(&["similarity", "--graph", &star, "--bc", "dirichlet"]));
    check("witness_output", &emit(&["witness", "--graph", &star, "--bc", "intermediate"]));
    check("witness_output", &emit(&["witness", "--graph", &interval, "--bc", "totally_degenerate", "--kappa", "5,10,20"]));
    check("greens_output", &emit(&["greens", "--graph", &star, "--bc", "dirichlet", "--k", "1", "1", "--h", "0.1", "--ext-length", "2"]));
    for eq in ["heat", "schrodinger", "wave"] {
        check(
            "evolution",
            &emit(&["evolve", "--graph", &interval, "--bc", "dirichlet", "--equation", eq, "--h", "0.1", "--steps", "4", "--snapshot-every", "2"]),
        );
    }
}

#[test]
fn problem_specs_validate_and_load() {
    let specs = [
        json!({"graph": {"interval": 1.0}, "bc": "dirichlet"}),
        json!({"graph": {"star": 3}, "bc": {"delta": {"re": 1.0, "im": -0.5}}, "options": {"tol": 1e-10}}),
        json!({"graph": {"pumpkin": {"n": 2, "length": 1.0}}, "bc": "kirchhoff", "options": {"region": {"re_min": 0.1, "re_max": 5.0, "im_min": -1.0, "im_max": 1.0}}}),
        json!({"graph": {"half_line_with_interval": 1.0}, "bc": {"pt_point_with_dirichlet_end": 0.7853981633974483}}),
        json!({
            "graph": {"vertices": ["v0", "v1"], "internal": [{"id": "e", "initial": "v0", "terminal": "v1", "length": 2.0}]},
            "bc": {"A": [[1, 0], [0, {"re": 1, "im": 0}]], "B": [[0, 0], [-1, 0]]}
        }),
    ];
    for spec in &specs {
        check("problem_spec", spec);
        let path = temp_file("spec.json", &spec.to_string());
        check("enclosure", &emit(&["enclosure", "--spec", &path]));
    }
    // rejected by both the schema and the loader
    let bad = json!({"graph": {"interval": 1.0}, "bc": "dirichlet", "extra": 1});
    assert!(!schema_for("problem_spec").is_valid(&bad));
    let path = temp_file("bad.json", &bad.to_string());
    let out = Command::new(env!("CARGO_BIN_EXE_qgraph")).args(["classify", "--spec", &path]).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
}
