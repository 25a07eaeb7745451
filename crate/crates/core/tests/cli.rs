use std::path::PathBuf;

use darboux_kit::cli::{run, EXIT_FAILED, EXIT_OK, EXIT_USAGE};
use darboux_kit::expr::{is_zero, parse};
use serde_json::Value;

fn manifest(name: &str) -> String {
    let p: PathBuf = [env!("CARGO_MANIFEST_DIR"), "manifests", name].iter().collect();
    p.to_string_lossy().into_owned()
}

struct Outcome {
    code: u8,
    stdout: String,
    stderr: String,
}

impl Outcome {
    fn json(&self) -> Value {
        serde_json::from_str(&self.stdout).unwrap_or_else(|e| panic!("{e}: {}", self.stdout))
    }
}

fn dkit_env(args: &[&str], env_seed: Option<&str>) -> Outcome {
    let mut out = Vec::new();
    let mut err = Vec::new();
    let argv = std::iter::once("dkit").chain(args.iter().copied());
    let code = run(argv, env_seed, &mut out, &mut err);
    Outcome { code, stdout: String::from_utf8(out).unwrap(), stderr: String::from_utf8(err).unwrap() }
}

fn dkit(args: &[&str]) -> Outcome {
    dkit_env(args, None)
}

fn temp_manifest(dir: &tempfile::TempDir, text: &str) -> String {
    let p = dir.path().join("m.toml");
    std::fs::write(&p, text).unwrap();
    p.to_string_lossy().into_owned()
}

fn same(a: &str, b: &str) -> bool {
    is_zero(&(parse(a).unwrap() - parse(b).unwrap())).unwrap().is_zero()
}

#[test]
fn catalog_list_names_every_entry() {
    let o = dkit(&["catalog", "list"]);
    assert_eq!(o.code, EXIT_OK);
    assert_eq!(o.stdout.lines().count(), 7);
    let o = dkit(&["catalog", "list", "--json"]);
    assert_eq!(o.json().as_array().unwrap().len(), 7);
}

#[test]
fn catalog_show_oscillator() {
    let o = dkit(&["catalog", "show", "oscillator3d", "--ell", "1", "--json"]);
    assert_eq!(o.code, EXIT_OK);
    let v = o.json();
    assert!(same(v["potential"].as_str().unwrap(), "r^2+2/r^2-5"));
    assert!(same(v["seed_psi"].as_str().unwrap(), "r^2*exp(-r^2/2)"));
    assert_eq!(v["spectrum"][0]["formula"], "4*n");
}

#[test]
fn catalog_show_unknown_is_a_usage_error() {
    let o = dkit(&["catalog", "show", "nosuch"]);
    assert_eq!(o.code, EXIT_USAGE);
    assert!(o.stdout.is_empty());
    assert!(o.stderr.contains("nosuch"));
}

#[test]
fn transform_free_particle() {
    let o = dkit(&["transform", "--json", "--manifest", &manifest("free_particle.toml")]);
    assert_eq!(o.code, EXIT_OK, "{}", o.stderr);
    let v = o.json();
    assert_eq!(v["v_plus"], "2/x^2");
    assert_eq!(v["strong_isogaloisian"], true);
    assert_eq!(v["shape_invariance"]["invariant"], false);
}

#[test]
fn transform_oscillator_is_shape_invariant() {
    let o = dkit(&["transform", "--json", "--manifest", &manifest("oscillator_transform.toml")]);
    assert_eq!(o.code, EXIT_OK, "{}", o.stderr);
    let v = o.json();
    assert!(same(v["v_plus"].as_str().unwrap(), "r^2+(l+1)*(l+2)/r^2-(2*l+1)"));
    assert_eq!(v["shape_invariance"]["invariant"], true);
    assert_eq!(v["shape_invariance"]["remainder"], "4");
    let images = v["transformed_solutions"].as_array().unwrap();
    assert_eq!(images.len(), 2);
}

#[test]
fn transform_without_seed_is_a_schema_error() {
    let o = dkit(&["transform", "--manifest", &manifest("inline_no_seed.toml")]);
    assert_eq!(o.code, EXIT_USAGE);
    assert!(o.stderr.contains("psi0"), "{}", o.stderr);
}

#[test]
fn certify_free_particle_passes() {
    let o = dkit(&["certify", "--json", "--manifest", &manifest("free_particle.toml")]);
    assert_eq!(o.code, EXIT_OK, "{}", o.stdout);
    let v = o.json();
    let checks = v["checks"].as_array().unwrap();
    assert_eq!(checks.len(), 14);
    assert!(checks.iter().all(|c| c["verdict"] == "pass"));
    assert_eq!(v["membership"]["minus.K"], "rational");
}

#[test]
fn corrupting_one_object_fails_one_record() {
    let o = dkit(&["certify", "--json", "--corrupt", "K", "--manifest", &manifest("free_particle.toml")]);
    assert_eq!(o.code, EXIT_FAILED);
    let v = o.json();
    let failing: Vec<&Value> = v["checks"].as_array().unwrap().iter().filter(|c| c["verdict"] != "pass").collect();
    assert_eq!(failing.len(), 1);
    assert_eq!(failing[0]["name"], "minus.invariant_curve");
    assert!(failing[0]["witness"].is_object());

    let o = dkit(&["certify", "--corrupt", "plus.L", "--manifest", &manifest("free_particle.toml")]);
    assert_eq!(o.code, EXIT_FAILED);
    let o = dkit(&["certify", "--corrupt", "Q", "--manifest", &manifest("free_particle.toml")]);
    assert_eq!(o.code, EXIT_USAGE);
}

#[test]
fn certify_matches_golden_report() {
    let o = dkit(&["certify", "--json", "--deterministic", "--manifest", &manifest("free_particle.toml")]);
    assert_eq!(o.code, EXIT_OK);
    let golden: PathBuf = [env!("CARGO_MANIFEST_DIR"), "tests", "golden", "free_particle_certify.json"].iter().collect();
    let expected = std::fs::read_to_string(golden).unwrap();
    assert_eq!(o.stdout, expected);
}

#[test]
fn deterministic_runs_are_byte_identical() {
    let args = ["certify", "--json", "--deterministic", "--manifest", &manifest("free_particle.toml")];
    let a = dkit(&args);
    let b = dkit(&args);
    assert_eq!(a.stdout, b.stdout);
    assert!(a.json()["checks"].as_array().unwrap().iter().all(|c| c["runtime_ms"] == 0.0));
}

#[test]
fn seed_precedence() {
    let m = manifest("free_particle_symbolic.toml");
    let o = dkit_env(&["certify", "--json", "--manifest", &m], Some("abc"));
    assert_eq!(o.json()["seed"], "0xabc");
    let o = dkit_env(&["certify", "--json", "--seed", "0x17", "--manifest", &m], Some("abc"));
    assert_eq!(o.json()["seed"], "0x17");
    let o = dkit_env(&["certify", "--json", "--manifest", &manifest("free_particle.toml")], Some("abc"));
    assert_eq!(o.json()["seed"], "0xda2b0");
    let o = dkit(&["certify", "--seed", "zz", "--manifest", &m]);
    assert_eq!(o.code, EXIT_USAGE);
}

#[test]
fn classify_cases() {
    let o = dkit(&["classify", "--json", "--manifest", &manifest("classify_rational.toml")]);
    assert_eq!(o.code, EXIT_OK, "{}", o.stderr);
    let v = o.json();
    assert_eq!(v["case"], "3");
    assert_eq!(v["first_integral_verified"], true);

    let dir = tempfile::tempdir().unwrap();
    let m = temp_manifest(
        &dir,
        "[params]\nlambda = \"-1\"\n[system]\ncatalog = \"free_particle\"\n[classify]\nsolutions = [\"1\"]\n",
    );
    let v = dkit(&["classify", "--json", "--manifest", &m]).json();
    assert_eq!(v["case"], "1ii");
    assert_eq!(v["first_integral_verified"], true);

    let m = temp_manifest(&dir, "[system]\ncatalog = \"free_particle\"\n[classify]\nsolutions = []\n");
    assert_eq!(dkit(&["classify", "--json", "--manifest", &m]).json()["case"], "unknown");

    let m = temp_manifest(&dir, "[system]\ncatalog = \"free_particle\"\n[classify]\nsolutions = [\"x\"]\n");
    assert_eq!(dkit(&["classify", "--manifest", &m]).code, EXIT_USAGE);
}

#[test]
fn flow_drift_tables() {
    let o = dkit(&["flow", "--json", "--manifest", &manifest("free_particle.toml")]);
    assert_eq!(o.code, EXIT_OK, "{}", o.stderr);
    for row in o.json()["rows"].as_array().unwrap() {
        assert!(row["drift"].as_f64().unwrap() < 1e-8, "{row}");
    }
    let o = dkit(&["flow", "--json", "--manifest", &manifest("oscillator.toml")]);
    assert_eq!(o.code, EXIT_OK, "{}", o.stderr);
    let rows = o.json()["rows"].as_array().unwrap().clone();
    assert_eq!(rows.len(), 6);
    for row in rows {
        assert!(row["drift"].as_f64().unwrap() < 1e-7, "{row}");
    }
}

#[test]
fn flow_through_a_pole_is_refused() {
    let o = dkit(&["flow", "--manifest", &manifest("pole_in_span.toml")]);
    assert_eq!(o.code, EXIT_USAGE);
    assert!(o.stderr.contains("N vanishes"), "{}", o.stderr);
}

#[test]
fn unknown_keys_are_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let m = temp_manifest(&dir, "[system]\ncatalog = \"free_particle\"\ncolour = \"blue\"\n");
    let o = dkit(&["transform", "--manifest", &m]);
    assert_eq!(o.code, EXIT_USAGE);
    assert!(o.stderr.contains("colour"), "{}", o.stderr);
}

#[test]
fn output_path_receives_the_report() {
    let dir = tempfile::tempdir().unwrap();
    let text = std::fs::read_to_string(manifest("free_particle.toml")).unwrap();
    let m = temp_manifest(&dir, &format!("output = \"report.json\"\n{text}"));
    let o = dkit(&["certify", "--deterministic", "--manifest", &m]);
    assert_eq!(o.code, EXIT_OK);
    let written = std::fs::read_to_string(dir.path().join("report.json")).unwrap();
    let v: Value = serde_json::from_str(&written).unwrap();
    assert_eq!(v["checks"].as_array().unwrap().len(), 14);
}

#[test]
fn missing_manifest_is_a_usage_error() {
    assert_eq!(dkit(&["certify"]).code, EXIT_USAGE);
    assert_eq!(dkit(&["certify", "--manifest", "/nonexistent/m.toml"]).code, EXIT_USAGE);
    assert_eq!(dkit(&["frobnicate"]).code, EXIT_USAGE);
}
