use std::collections::BTreeSet;
use std::path::Path;
use std::process::{Command, Output};

use qclab::cli::{compute, RunConfig, EXIT_COMPUTE, EXIT_CONFIG, SUBCOMMANDS};
use serde_json::Value;

const BIN: &str = env!("CARGO_BIN_EXE_qclab");

fn qclab(args: &[&str]) -> Output {
    Command::new(BIN).args(args).output().expect("binary runs")
}

fn schema(name: &str) -> Value {
    let p = Path::new(env!("CARGO_MANIFEST_DIR")).join("schemas").join(format!("{name}.schema.json"));
    serde_json::from_str(&std::fs::read_to_string(p).unwrap()).unwrap()
}

fn assert_valid(doc: &Value, name: &str) {
    let s = schema(name);
    let compiled = jsonschema::JSONSchema::compile(&s).expect("schema compiles");
    if let Err(errs) = compiled.validate(doc) {
        let msgs: Vec<String> = errs.map(|e| format!("{} at {}", e, e.instance_path)).collect();
        panic!("{name}: {msgs:?}");
    };
}

fn dir_entries(p: &Path) -> Vec<String> {
    let mut v: Vec<String> =
        std::fs::read_dir(p).unwrap().map(|e| e.unwrap().file_name().to_string_lossy().into_owned()).collect();
    v.sort();
    v
}

/// Quick settings per subcommand; every run still goes through the full pipeline.
fn quick_args(sub: &str) -> Vec<&'static str> {
    match sub {
        "geometry" => vec!["geometry", "--grid", "4"],
        "spectrum" => vec!["spectrum", "--lambda-max", "300"],
        "weyl" => vec!["weyl", "--lambda-max", "600"],
        "heat" => vec!["heat", "--lambda-max", "3000", "--times", "0.02,0.03,0.04,0.05"],
        "wave" => vec!["wave", "--lambda-max", "6000", "--lambda-lo", "20", "--lambda-hi", "30", "--sigma", "0.2"],
        "hermite" => vec!["hermite", "verify", "--k-max", "6", "--x1-nodes", "128", "--x3-nodes", "16"],
        "bnf" => vec!["bnf", "--n-max", "6"],
        "flow" => vec!["flow", "--model", "mapping_torus", "--t-end", "0.3", "--steps", "10", "--samples", "4"],
        "periods" => vec!["periods", "--orbits", "1:1.2,2:inf", "--t-max", "12"],
        "qe" => vec!["qe", "--lambda-max", "300", "--windows", "4"],
        _ => unreachable!(),
    }
}

#[test]
fn every_subcommand_validates_against_its_schema() {
    for sub in SUBCOMMANDS {
        let dir = tempfile::tempdir().unwrap();
        let mut args = quick_args(sub);
        let out = dir.path().to_str().unwrap().to_string();
        args.extend(["--output", &out]);
        let res = qclab(&args);
        assert_eq!(res.status.code(), Some(0), "{sub}: {}", String::from_utf8_lossy(&res.stderr));
        let doc: Value = serde_json::from_slice(&std::fs::read(dir.path().join(format!("{sub}.json"))).unwrap()).unwrap();
        assert_valid(&doc, sub);
        assert_eq!(doc["code_version"], env!("CARGO_PKG_VERSION"));
        assert_eq!(doc["metadata"]["threads"], 1);
        if sub != "geometry" {
            let csv = std::fs::read_to_string(dir.path().join(format!("{sub}.csv"))).unwrap();
            assert!(csv.lines().count() >= 2, "{sub} csv");
        }
    }
}

#[test]
fn reruns_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap().to_string();
    for sub in ["geometry", "spectrum", "bnf", "flow", "qe", "hermite"] {
        let mut args = quick_args(sub);
        args.extend(["--output", &out, "--seed", "11"]);
        assert_eq!(qclab(&args).status.code(), Some(0));
        let first: Vec<Vec<u8>> = dir_entries(dir.path())
            .iter()
            .filter(|f| f.starts_with(sub))
            .map(|f| std::fs::read(dir.path().join(f)).unwrap())
            .collect();
        assert_eq!(qclab(&args).status.code(), Some(0));
        let second: Vec<Vec<u8>> = dir_entries(dir.path())
            .iter()
            .filter(|f| f.starts_with(sub))
            .map(|f| std::fs::read(dir.path().join(f)).unwrap())
            .collect();
        assert!(!first.is_empty());
        assert_eq!(first, second, "{sub}");
    }
}

#[test]
fn invalid_model_is_a_config_error_without_files() {
    let dir = tempfile::tempdir().unwrap();
    let res = qclab(&["geometry", "--model", "klein_bottle", "--output", dir.path().to_str().unwrap()]);
    assert_eq!(res.status.code(), Some(EXIT_CONFIG));
    assert!(String::from_utf8_lossy(&res.stderr).contains("unknown model"));
    assert!(dir_entries(dir.path()).is_empty());
}

#[test]
fn unknown_config_key_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.json");
    std::fs::write(&cfg, r#"{"model": "trig_torus", "lambda_maxx": 10}"#).unwrap();
    let out = dir.path().join("out");
    std::fs::create_dir(&out).unwrap();
    let res = qclab(&["spectrum", "--config", cfg.to_str().unwrap(), "--output", out.to_str().unwrap()]);
    assert_eq!(res.status.code(), Some(EXIT_CONFIG));
    assert!(String::from_utf8_lossy(&res.stderr).contains("lambda_maxx"));
    assert!(dir_entries(&out).is_empty());
}

#[test]
fn config_errors() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let cases: &[&[&str]] = &[
        &["spectrum", "--tol=-1e-3"],
        &["spectrum", "--tol=0"],
        &["spectrum", "--route", "lattice"],
        &["weyl", "--model", "mapping_torus"],
        &["qe", "--model", "heisenberg_circle"],
        &["qe", "--observable", "cos_x7"],
        &["geometry", "--orientation", "2"],
        &["geometry", "--model", "trig_torus", "--kappa", "3"],
        &["flow", "--xi0", "1.5"],
        &["flow", "--x", "0.1,0.2"],
        &["periods", "--orbits", "1.2:1"],
        &["periods", "--orbits", "1"],
        &["hermite", "verify", "--x1-nodes", "101"],
        &["geometry", "--threads", "0"],
    ];
    for c in cases {
        let mut args = c.to_vec();
        args.extend(["--output", out]);
        let res = qclab(&args);
        assert_eq!(res.status.code(), Some(EXIT_CONFIG), "{c:?}: {}", String::from_utf8_lossy(&res.stderr));
    }
    let res = qclab(&["geometry", "--output", dir.path().join("missing").to_str().unwrap()]);
    assert_eq!(res.status.code(), Some(EXIT_CONFIG));
    assert!(dir_entries(dir.path()).is_empty());
}

#[test]
fn compute_error_exit_code_and_no_files() {
    let dir = tempfile::tempdir().unwrap();
    // the spectrum stops at 100, far too short for t = 0.002
    let res = qclab(&["heat", "--lambda-max", "100", "--output", dir.path().to_str().unwrap()]);
    assert_eq!(res.status.code(), Some(EXIT_COMPUTE));
    assert!(String::from_utf8_lossy(&res.stderr).contains("spectral"));
    assert!(dir_entries(dir.path()).is_empty());
}

#[test]
fn config_file_overrides_flags() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("c.json");
    std::fs::write(&cfg, r#"{"grid": 3, "tol": 1e-9}"#).unwrap();
    let out = dir.path().join("o");
    std::fs::create_dir(&out).unwrap();
    let res = qclab(&[
        "geometry", "--grid", "5", "--model", "heisenberg_circle", "--config", cfg.to_str().unwrap(), "--output",
        out.to_str().unwrap(),
    ]);
    assert_eq!(res.status.code(), Some(0));
    let doc: Value = serde_json::from_slice(&std::fs::read(out.join("geometry.json")).unwrap()).unwrap();
    assert_eq!(doc["config"]["grid"], 3);
    assert_eq!(doc["config"]["tol"], 1e-9);
    assert_eq!(doc["config"]["model"], "heisenberg_circle");
    assert_eq!(doc["metadata"]["completeness"]["sample_points"], 81);
}

#[test]
fn flags_mirror_config_keys() {
    let keys: BTreeSet<String> = schema("config")["properties"].as_object().unwrap().keys().cloned().collect();
    // a fully populated config round-trips through the schema's key set
    let probe: RunConfig = serde_json::from_value(serde_json::json!({})).unwrap();
    assert_eq!(probe, RunConfig::default());
    for sub in SUBCOMMANDS {
        let mut args = vec![sub];
        if sub == "hermite" {
            args.push("verify");
        }
        args.push("--help");
        let help = String::from_utf8(qclab(&args).stdout).unwrap();
        for k in &keys {
            let flag = format!("--{}", k.replace('_', "-"));
            assert!(help.contains(&flag), "{sub} lacks {flag}");
        }
        assert!(help.contains("--config"));
    }
    for k in &keys {
        let doc = serde_json::json!({ k.as_str(): null });
        assert!(serde_json::from_value::<RunConfig>(doc).is_ok(), "{k} not a config key");
    }
}

#[test]
fn bnf_reads_a_jet_file() {
    let dir = tempfile::tempdir().unwrap();
    let jet = dir.path().join("jet.json");
    std::fs::write(
        &jet,
        r#"{"eps_order": 2, "rho": [{"base": [0,0,0,0,0], "re": "3/2"}],
            "terms": [{"mono": [0,2,1], "base": [1,0,0,0,0], "re": "1"},
                      {"mono": [0,1,2], "base": [1,0,0,0,0], "re": "1"}]}"#,
    )
    .unwrap();
    let out = dir.path().join("o");
    std::fs::create_dir(&out).unwrap();
    let res = qclab(&["bnf", "--jet", jet.to_str().unwrap(), "--output", out.to_str().unwrap()]);
    assert_eq!(res.status.code(), Some(0), "{}", String::from_utf8_lossy(&res.stderr));
    let doc: Value = serde_json::from_slice(&std::fs::read(out.join("bnf.json")).unwrap()).unwrap();
    assert_valid(&doc, "bnf");
    // ε/(4iρ̂) with ρ̂ = 3/2: the z²z̄ generator coefficient is −iε/6
    let gen = doc["result"]["generator"].as_array().unwrap();
    let t = gen.iter().find(|t| t["mono"] == serde_json::json!([0, 2, 1])).unwrap();
    assert_eq!(t["base"], serde_json::json!([1, 0, 0, 0, 0]));
    assert_eq!((t["re"].as_str().unwrap(), t["im"].as_str().unwrap()), ("0", "-1/6"));
    assert_eq!(doc["result"]["checks"]["non_invariant_below_n_max"], 0);

    std::fs::write(&jet, r#"{"eps_order": 2, "rho": [{"base": [0,0,0,0,0], "re": "three halves"}]}"#).unwrap();
    let bad = dir.path().join("bad");
    std::fs::create_dir(&bad).unwrap();
    let res = qclab(&["bnf", "--jet", jet.to_str().unwrap(), "--output", bad.to_str().unwrap()]);
    assert_eq!(res.status.code(), Some(EXIT_CONFIG));
    assert!(dir_entries(&bad).is_empty());
}

#[test]
fn in_process_compute_matches_defaults() {
    let art = compute("periods", RunConfig { orbits: Some(vec![(1.0, None)]), t_max: Some(5.0), ..Default::default() })
        .unwrap();
    assert_eq!(art.json["result"]["intervals"], serde_json::json!([[-5.0, -1.0], [1.0, 5.0]]));
    assert_eq!(art.json["config"]["seed"], 0);
    assert_eq!(art.json["config"]["threads"], 1);
    assert!(matches!(compute("nonsense", RunConfig::default()), Err(qclab::cli::CliError::Config(_))));
}
