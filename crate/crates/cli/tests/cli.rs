use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::{json, Value};
use tempfile::TempDir;

fn kcontact(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_kcontact"))
        .args(args)
        .env_remove("KCONTACT_THREADS")
        .output()
        .expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exited normally")
}

fn json_out(out: &Output) -> Value {
    assert_eq!(code(out), 0, "stderr: {}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).expect("stdout is JSON")
}

fn schema_path(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("../../schemas")
        .join(format!("{name}.schema.json"))
}

fn assert_schema(name: &str, instance: &Value) {
    let schema: Value = serde_json::from_str(&fs::read_to_string(schema_path(name)).unwrap()).unwrap();
    let validator = jsonschema::validator_for(&schema).expect("schema compiles");
    let errors: Vec<String> = validator
        .iter_errors(instance)
        .map(|e| format!("{} at {}", e, e.instance_path()))
        .collect();
    assert!(errors.is_empty(), "{name}: {errors:#?}");
}

fn write(dir: &TempDir, name: &str, body: &Value) -> String {
    let path = dir.path().join(name);
    fs::write(&path, serde_json::to_string(body).unwrap()).unwrap();
    path.display().to_string()
}

#[test]
fn derive_membrane_reference_point() {
    let out = kcontact(&[
        "derive",
        "--model",
        "membrane",
        "--mu",
        "2",
        "--gamma",
        "0.5",
        "--point",
        "q=0.5;v=1,2,-1;s=0.1,0,0",
    ]);
    let r = json_out(&out);
    assert_schema("derive", &r);
    let p = &r["points"][0];
    assert!((p["energy"].as_f64().unwrap() + 9.45).abs() < 1e-12);
    assert_eq!(p["momenta"], json!([1.0, -8.0, 4.0]));
    assert_eq!(r["directions"], json!(["t", "x", "y"]));
    assert_eq!(r["seed"], Value::Null);
    assert!(p["verify_reeb"]["eta"].as_f64().unwrap() <= 1e-9);
}

#[test]
fn derive_free_at_rest() {
    let r = json_out(&kcontact(&[
        "derive",
        "--model",
        "free",
        "--point",
        "q=0.3;v=0,0;s=1,2",
    ]));
    assert_schema("derive", &r);
    let p = &r["points"][0];
    assert_eq!(p["momenta"], json!([0.0, 0.0]));
    assert_eq!(p["energy"], json!(0.0));
    assert_eq!(p["hessian"]["regular"], json!(true));
}

#[test]
fn derive_random_points_are_reproducible() {
    let args = [
        "derive",
        "--model",
        "string",
        "--b",
        "1",
        "--seed",
        "11",
        "--samples",
        "3",
    ];
    let a = kcontact(&args);
    let b = kcontact(&args);
    assert_eq!(code(&a), 0);
    assert_eq!(a.stdout, b.stdout);
    let r: Value = serde_json::from_slice(&a.stdout).unwrap();
    assert_schema("derive", &r);
    assert_eq!(r["points"].as_array().unwrap().len(), 3);
}

#[test]
fn inverse_telegraph_expression() {
    let dir = TempDir::new().unwrap();
    let pde = write(
        &dir,
        "pde.json",
        &json!({ "a": [[1, 0], [0, -1]], "d": [0, 0.3], "g": [0, 2], "directions": ["t", "z"] }),
    );
    let r = json_out(&kcontact(&["inverse", "--spec", &pde, "--samples", "20"]));
    assert_schema("inverse", &r);
    assert_eq!(r["expression"], json!("0.5*(u_t^2-u_z^2)+0.3*s_z-0.5*2*u^2"));
    assert_eq!(r["roundtrip"]["pass"], json!(true));
    assert!(r["roundtrip"]["residual"].as_f64().unwrap() <= 1e-9);
}

#[test]
fn verify_reeb_free() {
    let r = json_out(&kcontact(&[
        "verify", "--model", "free", "--suite", "reeb", "--seed", "7",
    ]));
    assert_schema("verify", &r);
    assert_eq!(r["all_pass"], json!(true));
    assert_eq!(r["suites"][0]["residual"], json!(0.0));
}

#[test]
fn verify_point_suites_on_string() {
    let r = json_out(&kcontact(&[
        "verify",
        "--model",
        "string",
        "--b",
        "1",
        "--suite",
        "reeb,legendre,sopde",
        "--samples",
        "20",
    ]));
    assert_schema("verify", &r);
    for s in r["suites"].as_array().unwrap() {
        assert_eq!(s["status"], json!("pass"), "{s}");
    }
}

#[test]
fn string_potential_symmetry_is_measured() {
    let r = json_out(&kcontact(&[
        "verify",
        "--model",
        "string",
        "--suite",
        "symmetry",
        "--symmetry",
        "stringY",
        "--samples",
        "10",
    ]));
    assert_schema("verify", &r);
    let s = &r["suites"][0];
    assert_eq!(s["status"], json!("measured"));
    assert_eq!(s["tolerance"], Value::Null);
    assert_eq!(r["all_pass"], json!(true));
}

#[test]
fn reports_do_not_depend_on_thread_count() {
    let run = |threads: &str| {
        Command::new(env!("CARGO_BIN_EXE_kcontact"))
            .args([
                "verify",
                "--model",
                "membrane",
                "--gamma",
                "0.3",
                "--suite",
                "reeb,legendre,sopde",
                "--seed",
                "3",
            ])
            .env("KCONTACT_THREADS", threads)
            .output()
            .unwrap()
    };
    let (one, three) = (run("1"), run("3"));
    assert_eq!(code(&one), 0);
    assert_eq!(one.stdout, three.stdout);
}

#[test]
fn simulate_then_verify_dissipation() {
    let dir = TempDir::new().unwrap();
    let trace = dir.path().join("trace");
    let trace_arg = trace.display().to_string();
    let args = [
        "simulate", "--model", "membrane", "--gamma", "0.2", "--points", "25", "--t-end", "1", "--out", &trace_arg,
    ];
    let manifest = json_out(&kcontact(&args));
    assert_schema("trace-manifest", &manifest);
    let on_disk: Value = serde_json::from_str(&fs::read_to_string(trace.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(on_disk, manifest);
    let csv = fs::read_to_string(trace.join("trace.csv")).unwrap();
    assert_eq!(csv.lines().next(), Some("t,x,y,phi_0,phidot_0,s1"));
    let rows = manifest["samples"].as_u64().unwrap() as usize * 25 * 25;
    assert_eq!(csv.lines().count(), rows + 1);

    // Same run on 3 threads writes the same bytes.
    let again = dir.path().join("again");
    let again_arg = again.display().to_string();
    let mut args3 = args.to_vec();
    *args3.last_mut().unwrap() = &again_arg;
    let out = Command::new(env!("CARGO_BIN_EXE_kcontact"))
        .args(&args3)
        .env("KCONTACT_THREADS", "3")
        .output()
        .unwrap();
    assert_eq!(code(&out), 0);
    assert_eq!(csv, fs::read_to_string(again.join("trace.csv")).unwrap());

    let r = json_out(&kcontact(&["verify", "--trace", &trace_arg, "--suite", "dissipation"]));
    assert_schema("verify", &r);
    let s = &r["suites"][0];
    assert_eq!(s["status"], json!("pass"), "{s}");
    let ratio = s["details"]["ratio"].as_f64().unwrap();
    assert!((3.5..=4.5).contains(&ratio), "ratio {ratio}");
}

#[test]
fn config_file_with_flag_override() {
    let dir = TempDir::new().unwrap();
    let cfg = write(
        &dir,
        "run.json",
        &json!({
            "schema_version": "kcontact.config/1",
            "model": { "name": "membrane", "mu": 2.0, "gamma": 0.5 },
            "points": ["q=0;v=1,0,0;s=0,0,0"],
        }),
    );
    let body: Value = serde_json::from_str(&fs::read_to_string(&cfg).unwrap()).unwrap();
    assert_schema("config", &body);
    let r = json_out(&kcontact(&["derive", "--config", &cfg, "--gamma", "0.1"]));
    assert_eq!(r["parameters"], json!({ "model": "membrane", "mu": 2.0, "gamma": 0.1 }));
    assert_eq!(r["points"].as_array().unwrap().len(), 1);
}

#[test]
fn configuration_errors_exit_2() {
    let dir = TempDir::new().unwrap();
    let bad_key = write(
        &dir,
        "bad.json",
        &json!({ "model": { "name": "membrane" }, "frobnicate": 1 }),
    );
    let missing = dir.path().join("nope").display().to_string();
    let cases: Vec<Vec<&str>> = vec![
        vec!["derive", "--config", &bad_key],
        vec!["derive", "--model", "nope"],
        vec!["derive", "--model", "membrane", "--omega", "2"],
        vec!["derive", "--model", "free", "--point", "q=1;v=1;s=0"],
        vec![
            "verify",
            "--model",
            "membrane",
            "--suite",
            "dissipation",
            "--trace",
            &missing,
        ],
        vec!["verify", "--model", "membrane", "--suite", "bogus"],
        vec!["inverse", "--model", "membrane"],
    ];
    for args in cases {
        let out = kcontact(&args);
        assert_eq!(code(&out), 2, "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
        assert!(out.stdout.is_empty());
    }
    let out = Command::new(env!("CARGO_BIN_EXE_kcontact"))
        .args(["verify", "--model", "free", "--suite", "reeb"])
        .env("KCONTACT_THREADS", "zero")
        .output()
        .unwrap();
    assert_eq!(code(&out), 2);
}

#[test]
fn numerical_failures_exit_3() {
    let dir = TempDir::new().unwrap();
    let out_dir = dir.path().join("t").display().to_string();
    let out = kcontact(&[
        "simulate", "--model", "membrane", "--points", "17", "--dt", "0", "--out", &out_dir,
    ]);
    assert_eq!(code(&out), 3, "{}", String::from_utf8_lossy(&out.stderr));

    // A Courant number far past the RK4 limit blows up.
    let out = kcontact(&[
        "simulate",
        "--model",
        "membrane",
        "--points",
        "17",
        "--courant",
        "5",
        "--t-end",
        "20",
        "--out",
        &out_dir,
    ]);
    assert_eq!(code(&out), 3, "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn report_flag_writes_file() {
    let dir = TempDir::new().unwrap();
    let path = dir.path().join("r.json");
    let path_arg = path.display().to_string();
    let out = kcontact(&[
        "verify",
        "--model",
        "oscillator",
        "--gamma",
        "0.3",
        "--suite",
        "sopde",
        "--report",
        &path_arg,
    ]);
    assert_eq!(code(&out), 0);
    assert!(out.stdout.is_empty());
    let text = fs::read_to_string(&path).unwrap();
    assert!(text.ends_with("}\n"));
    let r: Value = serde_json::from_str(&text).unwrap();
    assert_schema("verify", &r);
}
